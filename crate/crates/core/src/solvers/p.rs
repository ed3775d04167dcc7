use crate::error::{Error, Result};
use crate::numerics::{solve_right, Mat};
use crate::scalar::Scalar;

/// Closed-form ridge regression `P = (Ỹ Eᵀ)(E Eᵀ + αI)⁻¹` for
/// `min ½‖Ỹ − P E‖² + (α/2)‖P‖²`.
pub fn update_p<T: Scalar>(y_tilde: &Mat<T>, e: &Mat<T>, alpha: T) -> Result<Mat<T>> {
    if e.ncols() != y_tilde.ncols() {
        return Err(Error::Dimension(format!(
            "E has {} columns, Ỹ has {}",
            e.ncols(),
            y_tilde.ncols()
        )));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidArgument("alpha must be non-negative".into()));
    }
    let mut gram = e * e.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let rhs = y_tilde * e.transpose();
    solve_right(&gram, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn orthonormal_rows_without_ridge() {
        let e = dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 1.0];
        let y = dmatrix![1.0, 2.0, 3.0];
        let p = update_p(&y, &e, 0.0).unwrap();
        assert!((p - &y * e.transpose()).norm() < 1e-14);
    }

    #[test]
    fn heavy_ridge_shrinks() {
        let e = dmatrix![1.0, 2.0, 0.5; 0.3, -1.0, 2.0];
        let y = dmatrix![1.0, 0.0, 1.0];
        let p = update_p(&y, &e, 1e6).unwrap();
        let bound = (&y * e.transpose()).norm() / 1e6 * (1.0 + 1e-3);
        assert!(p.norm() <= bound);
    }

    #[test]
    fn rank_deficient_without_ridge_is_singular() {
        let e = dmatrix![1.0, 2.0; 2.0, 4.0];
        let y = dmatrix![1.0, 0.0];
        assert!(matches!(update_p(&y, &e, 0.0), Err(Error::Singular(_))));
        assert!(update_p(&y, &e, 1e-3).is_ok());
        assert!(update_p(&y, &dmatrix![1.0], 0.1).is_err());
    }
}
