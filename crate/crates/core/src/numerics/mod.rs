//! Dense linear-algebra kernels and the proximal/projection operators the
//! ADMM solvers are assembled from.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra::DMatrix`; "features × samples" layouts keep one sample per
//! column.

mod linalg;
pub(crate) mod prox;

pub use linalg::{
    check_finite, frobenius, nearest_orthonormal, pairwise_sq_dist, pairwise_sq_dist_cross,
    polar_factor, ridge_for, solve_right, solve_right_ridged, svd_thin, SvdResult,
};
pub use prox::{project_box, project_sum, soft_threshold};

/// Dense column-major matrix used throughout the crate.
pub type Mat<T> = nalgebra::DMatrix<T>;
