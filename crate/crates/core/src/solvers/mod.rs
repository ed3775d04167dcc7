//! Block solvers for one outer BCD sweep: the closed-form ridge update for P,
//! the ADMM for the orthonormal projection Θ, and the two ADMMs for the
//! learnable adjacency blocks.

mod p;
mod theta;
mod wblock;

pub use p::update_p;
pub use theta::{
    polish_theta, solve_theta, solve_theta_multistart, solve_theta_warm, ThetaOutcome,
    ThetaProblem, ThetaState, THETA_RESTARTS,
};
pub use wblock::{
    check_block_feasible, solve_w_cross, solve_w_uu, WBlockOutcome, WBlockState, WSymBlockState,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Penalty schedule of an ADMM run: μ starts at `mu0` and is multiplied by
/// `rho` after every iteration until it reaches `mu_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSchedule<T: Scalar> {
    pub mu0: T,
    pub mu_max: T,
    pub rho: T,
    pub eps: T,
    pub max_iter: usize,
}

impl<T: Scalar> AdmmSchedule<T> {
    /// Default for the Θ subproblem.
    pub fn theta_default() -> Self {
        Self {
            mu0: T::of(1e-3),
            mu_max: T::of(1e6),
            rho: T::of(1.05),
            eps: T::of(1e-6),
            max_iter: 1000,
        }
    }

    /// Default for the adjacency blocks. μ is in normalized units, see
    /// [`solve_w_cross`].
    pub fn w_default() -> Self {
        Self {
            mu0: T::of(1e-3),
            mu_max: T::of(1e6),
            rho: T::of(1.05),
            eps: T::of(1e-6),
            max_iter: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu0 > T::zero()
            && self.rho > T::one()
            && self.eps > T::zero()
            && self.mu_max >= self.mu0
            && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid ADMM schedule: mu0={} mu_max={} rho={} eps={} max_iter={}",
                self.mu0, self.mu_max, self.rho, self.eps, self.max_iter
            )))
        }
    }

    #[inline]
    pub(crate) fn grow(&self, mu: T) -> T {
        (mu * self.rho).min(self.mu_max)
    }
}
