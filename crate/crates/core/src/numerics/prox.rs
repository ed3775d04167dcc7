use super::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Elementwise shrinkage `sign(v)·max(|v| − t, 0)`, the proximal map of
/// `Σ t_ij |x_ij|`.
pub fn soft_threshold<T: Scalar>(v: &Mat<T>, t: &Mat<T>) -> Result<Mat<T>> {
    if v.shape() != t.shape() {
        return Err(Error::Dimension(format!(
            "values {:?} vs thresholds {:?}",
            v.shape(),
            t.shape()
        )));
    }
    if t.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidArgument("negative threshold".into()));
    }
    Ok(v.zip_map(t, shrink))
}

#[inline]
pub(crate) fn shrink<T: Scalar>(v: T, t: T) -> T {
    let m = v.abs() - t;
    if m > T::zero() {
        if v < T::zero() {
            -m
        } else {
            m
        }
    } else {
        T::zero()
    }
}

/// Euclidean projection onto the hyperplane `{x : Σ x_ij = s}`.
///
/// Inputs already on the hyperplane (up to summation round-off) are returned
/// unchanged. The shift is repeated a few times if rounding leaves the result
/// off the hyperplane, so the projection is exactly idempotent.
pub fn project_sum<T: Scalar>(v: &Mat<T>, s: T) -> Mat<T> {
    let n = v.len();
    let mut out = v.clone();
    if n == 0 {
        return out;
    }
    for _ in 0..4 {
        let (sum, abs_sum) = out
            .iter()
            .fold((T::zero(), T::zero()), |(a, b), &x| (a + x, b + x.abs()));
        let gap = s - sum;
        let tol = T::of(4.0) * T::of_usize(n) * T::default_epsilon() * (abs_sum + s.abs());
        if gap.abs() <= tol {
            break;
        }
        let shift = gap / T::of_usize(n);
        out.iter_mut().for_each(|x| *x += shift);
    }
    out
}

/// Elementwise clamp to `[lo, hi]`.
pub fn project_box<T: Scalar>(v: &Mat<T>, lo: T, hi: T) -> Result<Mat<T>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty box [{lo}, {hi}]")));
    }
    Ok(v.map(|x| x.max(lo).min(hi)))
}
