use nalgebra::Cholesky;

use super::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Thin singular value decomposition `a = u · diag(s) · vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult<T: Scalar> {
    /// rows × k, orthonormal columns.
    pub u: Mat<T>,
    /// k values, non-increasing, non-negative.
    pub s: Vec<T>,
    /// cols × k, orthonormal columns.
    pub v: Mat<T>,
}

impl<T: Scalar> SvdResult<T> {
    pub fn reconstruct(&self) -> Mat<T> {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.transpose()
    }
}

pub fn check_finite<T: Scalar>(a: &Mat<T>, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} contains non-finite entries")))
    }
}

#[inline]
pub fn frobenius<T: Scalar>(a: &Mat<T>) -> T {
    a.norm()
}

fn check_nonempty<T: Scalar>(a: &Mat<T>, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Thin SVD with `min(rows, cols)` triplets sorted by decreasing singular value.
pub fn svd_thin<T: Scalar>(a: &Mat<T>) -> Result<SvdResult<T>> {
    check_nonempty(a, "svd input")?;
    check_finite(a, "svd input")?;
    let svd = a
        .clone()
        .try_svd(true, true, T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::NumericFailure("SVD did not converge".into()))?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::NumericFailure("SVD factors missing".into()));
    };
    let sv = svd.singular_values;
    let k = sv.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut uo = Mat::zeros(a.nrows(), k);
    let mut vo = Mat::zeros(a.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        uo.set_column(dst, &u.column(src));
        vo.set_column(dst, &v_t.row(src).transpose());
        s.push(sv[src].max(T::zero()));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure("SVD produced non-finite values".into()));
    }
    Ok(SvdResult { u: uo, s, v: vo })
}

/// Ridge used before factorizing Gram matrices that may be singular:
/// `1e-10 · trace / dim`.
pub fn ridge_for<T: Scalar>(a: &Mat<T>) -> T {
    let n = a.nrows().max(1);
    T::of(1e-10) * a.trace().abs() / T::of_usize(n)
}

/// Solves `x · a = b` for symmetric positive definite `a` via Cholesky.
pub fn solve_right<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("system matrix is {}x{}", n, a.ncols())));
    }
    if b.ncols() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} columns, system has {}",
            b.ncols(),
            n
        )));
    }
    check_finite(a, "system matrix")?;
    check_finite(b, "right-hand side")?;
    if n == 0 {
        return Ok(Mat::zeros(b.nrows(), 0));
    }
    let scale = a.amax().max(T::one());
    let sym_tol = T::of(1e-10) * scale;
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > sym_tol {
                return Err(Error::InvalidArgument(format!(
                    "system matrix not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    // Tiny pivots mean the matrix is numerically singular even though the
    // factorization went through.
    let l = chol.l_dirty();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(T::zero(), |m, x| m.max(x));
    let floor = T::of_usize(n) * T::default_epsilon() * max_diag;
    if (0..n).any(|i| l[(i, i)] * l[(i, i)] <= floor) {
        return Err(Error::Singular("matrix is numerically singular".into()));
    }
    let xt = chol.solve(&b.transpose());
    let x = xt.transpose();
    check_finite(&x, "solution").map_err(|_| Error::Singular("solution overflowed".into()))?;
    Ok(x)
}

/// [`solve_right`] after adding [`ridge_for`] to the diagonal of `a`.
pub fn solve_right_ridged<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    let mut ar = a.clone();
    let r = ridge_for(a);
    for i in 0..ar.nrows().min(ar.ncols()) {
        ar[(i, i)] += r;
    }
    solve_right(&ar, b)
}

/// Squared Euclidean distances between the columns of `h`.
///
/// Computed entry by entry so the result is exactly symmetric with an exactly
/// zero diagonal.
pub fn pairwise_sq_dist<T: Scalar>(h: &Mat<T>) -> Mat<T> {
    let n = h.ncols();
    let mut z = Mat::zeros(n, n);
    for j in 0..n {
        let cj = h.column(j);
        for i in 0..j {
            let ci = h.column(i);
            let mut acc = T::zero();
            for k in 0..h.nrows() {
                let d = ci[k] - cj[k];
                acc += d * d;
            }
            z[(i, j)] = acc;
            z[(j, i)] = acc;
        }
    }
    z
}

/// Squared Euclidean distances between columns of `a` (rows of the result) and
/// columns of `b` (columns of the result).
pub fn pairwise_sq_dist_cross<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "feature dimensions differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let mut z = Mat::zeros(a.ncols(), b.ncols());
    for j in 0..b.ncols() {
        let cj = b.column(j);
        for i in 0..a.ncols() {
            let ci = a.column(i);
            let mut acc = T::zero();
            for k in 0..a.nrows() {
                let d = ci[k] - cj[k];
                acc += d * d;
            }
            z[(i, j)] = acc;
        }
    }
    Ok(z)
}

/// `U·Vᵀ` from the thin SVD of `a`, without any rank check.
///
/// For `rows ≤ cols` the result always has orthonormal rows. Used inside the
/// ADMM loop, where the argument can be transiently rank deficient.
pub fn polar_factor<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let svd = svd_thin(a)?;
    Ok(&svd.u * svd.v.transpose())
}

/// Nearest matrix with orthonormal rows to `a` in Frobenius norm (the polar
/// factor `U·Vᵀ`). Requires `rows ≤ cols` and full row rank.
pub fn nearest_orthonormal<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    if a.nrows() > a.ncols() {
        return Err(Error::Dimension(format!(
            "need rows <= cols, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = svd_thin(a)?;
    let smallest = svd.s.last().copied().unwrap_or(T::zero());
    if smallest <= T::of(1e-12) {
        return Err(Error::Degenerate(format!(
            "matrix is rank deficient (smallest singular value {smallest})"
        )));
    }
    Ok(&svd.u * svd.v.transpose())
}
