//! ADMM for the orthonormal projection subproblem
//!
//! ```text
//! min_Θ ½‖Ỹ − P J‖² + (β/2) tr(Θ X̃′ L̃ X̃′ᵀ Θᵀ)   s.t.  J = Θ X̃,  G = Θ,  G Gᵀ = I
//! ```
//!
//! with splits `J` (for ΘX̃) and `G` (orthonormal copy of Θ) and duals Λ₁, Λ₂.
//!
//! The problem is non-convex, and with a growing penalty the ADMM tends to
//! freeze slightly short of a stationary point. Each run is therefore finished
//! by a short Riemannian gradient descent on the orthonormal-row manifold, and
//! the cold-start entry point also tries a few seeded restarts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::AdmmSchedule;
use crate::error::{Error, Result};
use crate::numerics::{check_finite, polar_factor, solve_right, solve_right_ridged, Mat};
use crate::scalar::Scalar;

/// Inputs of one Θ solve with the loop-invariant products precomputed.
#[derive(Debug, Clone)]
pub struct ThetaProblem<T: Scalar> {
    pub y_tilde: Mat<T>,
    pub p: Mat<T>,
    pub x_tilde: Mat<T>,
    /// `β X̃′ L̃ X̃′ᵀ`
    pub graph_term: Mat<T>,
    xxt: Mat<T>,
    ptp: Mat<T>,
    pty: Mat<T>,
    /// `PᵀỸX̃ᵀ`, the linear part of the objective.
    lin: Mat<T>,
}

impl<T: Scalar> ThetaProblem<T> {
    pub fn new(
        y_tilde: &Mat<T>,
        p: &Mat<T>,
        x_tilde: &Mat<T>,
        x_tilde_prime: &Mat<T>,
        l_tilde: &Mat<T>,
        beta: T,
    ) -> Result<Self> {
        if x_tilde_prime.ncols() != l_tilde.nrows() || l_tilde.nrows() != l_tilde.ncols() {
            return Err(Error::Dimension(format!(
                "X̃′ has {} columns, L̃ is {:?}",
                x_tilde_prime.ncols(),
                l_tilde.shape()
            )));
        }
        if x_tilde_prime.nrows() != x_tilde.nrows() {
            return Err(Error::Dimension("X̃ and X̃′ differ in feature count".into()));
        }
        let graph_term = if beta == T::zero() {
            Mat::zeros(x_tilde.nrows(), x_tilde.nrows())
        } else {
            let g = x_tilde_prime * l_tilde * x_tilde_prime.transpose();
            // Symmetrize away round-off so the system stays exactly symmetric.
            (&g + g.transpose()) * (beta * T::of(0.5))
        };
        Self::with_graph_term(y_tilde, p, x_tilde, graph_term)
    }

    /// Builds the problem from an already formed `β X̃′ L̃ X̃′ᵀ`.
    pub fn with_graph_term(
        y_tilde: &Mat<T>,
        p: &Mat<T>,
        x_tilde: &Mat<T>,
        graph_term: Mat<T>,
    ) -> Result<Self> {
        if y_tilde.ncols() != x_tilde.ncols() {
            return Err(Error::Dimension(format!(
                "Ỹ has {} columns, X̃ has {}",
                y_tilde.ncols(),
                x_tilde.ncols()
            )));
        }
        if p.nrows() != y_tilde.nrows() {
            return Err(Error::Dimension(format!(
                "P has {} rows, Ỹ has {}",
                p.nrows(),
                y_tilde.nrows()
            )));
        }
        let dim = x_tilde.nrows();
        if graph_term.shape() != (dim, dim) {
            return Err(Error::Dimension("graph term must be dim × dim".into()));
        }
        for m in [y_tilde, p, x_tilde, &graph_term] {
            check_finite(m, "Θ subproblem input")?;
        }
        let pty = p.transpose() * y_tilde;
        Ok(Self {
            xxt: x_tilde * x_tilde.transpose(),
            ptp: p.transpose() * p,
            lin: &pty * x_tilde.transpose(),
            pty,
            y_tilde: y_tilde.clone(),
            p: p.clone(),
            x_tilde: x_tilde.clone(),
            graph_term,
        })
    }

    pub fn d(&self) -> usize {
        self.p.ncols()
    }

    pub fn dim(&self) -> usize {
        self.x_tilde.nrows()
    }

    /// Value of the subproblem objective at `theta`.
    pub fn objective(&self, theta: &Mat<T>) -> T {
        let fit = (&self.y_tilde - &self.p * (theta * &self.x_tilde)).norm_squared();
        let graph = (theta * &self.graph_term).component_mul(theta).sum();
        T::of(0.5) * (fit + graph)
    }

    /// Objective minus the constant `½‖Ỹ‖²`, and its Euclidean gradient.
    fn reduced(&self, theta: &Mat<T>) -> (T, Mat<T>) {
        let quad = &self.ptp * theta * &self.xxt + theta * &self.graph_term;
        let value = T::of(0.5) * quad.dot(theta) - self.lin.dot(theta);
        (value, quad - &self.lin)
    }
}

/// Riemannian gradient descent with Armijo backtracking, retracting through
/// the polar factor. Starts from an orthonormal `theta`, never increases the
/// objective, and returns the final point with the number of steps taken.
pub fn polish_theta<T: Scalar>(
    problem: &ThetaProblem<T>,
    theta: &Mat<T>,
    max_iter: usize,
) -> Result<(Mat<T>, usize)> {
    let mut th = theta.clone();
    let (mut f, mut grad) = problem.reduced(&th);
    let tol = T::of(1e-9) * T::one().max(problem.lin.norm());
    let mut step = T::one() / T::one().max(problem.ptp.norm() * problem.xxt.norm() + problem.graph_term.norm());
    for it in 0..max_iter {
        let sym = &grad * th.transpose();
        let rgrad = &grad - (&sym + sym.transpose()) * T::of(0.5) * &th;
        let n2 = rgrad.norm_squared();
        if n2.sqrt() <= tol {
            return Ok((th, it));
        }
        step *= T::of(2.0);
        loop {
            let cand = polar_factor(&(&th - &rgrad * step))?;
            let (fc, gc) = problem.reduced(&cand);
            if fc <= f - T::of(1e-4) * step * n2 {
                let stalled = f - fc <= T::of(1e-15) * (T::one() + f.abs());
                th = cand;
                f = fc;
                grad = gc;
                if stalled {
                    return Ok((th, it + 1));
                }
                break;
            }
            step *= T::of(0.5);
            if step < T::of(1e-30) {
                return Ok((th, it));
            }
        }
    }
    Ok((th, max_iter))
}

/// Iterate of the Θ ADMM.
#[derive(Debug, Clone)]
pub struct ThetaState<T: Scalar> {
    pub theta: Mat<T>,
    pub j: Mat<T>,
    pub g: Mat<T>,
    pub lambda1: Mat<T>,
    pub lambda2: Mat<T>,
    pub mu: T,
    theta_x: Mat<T>,
}

impl<T: Scalar> ThetaState<T> {
    /// Zero initialization, or `Θ = G = warm` when a warm start is given.
    pub fn new(problem: &ThetaProblem<T>, mu: T, warm: Option<&Mat<T>>) -> Result<Self> {
        let (d, dim, n2) = (problem.d(), problem.dim(), problem.x_tilde.ncols());
        let theta = match warm {
            Some(w) if w.shape() != (d, dim) => {
                return Err(Error::Dimension(format!(
                    "warm start is {:?}, expected ({d}, {dim})",
                    w.shape()
                )))
            }
            Some(w) => w.clone(),
            None => Mat::zeros(d, dim),
        };
        let theta_x = &theta * &problem.x_tilde;
        Ok(Self {
            g: theta.clone(),
            j: theta_x.clone(),
            theta,
            lambda1: Mat::zeros(d, n2),
            lambda2: Mat::zeros(d, dim),
            mu,
            theta_x,
        })
    }

    /// `J = (PᵀP + μI)⁻¹ (PᵀỸ + μΘX̃ − Λ₁)`
    pub fn step_j(&mut self, problem: &ThetaProblem<T>) -> Result<()> {
        let mut a = problem.ptp.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += self.mu;
        }
        let rhs = &problem.pty + &self.theta_x * self.mu - &self.lambda1;
        // a is symmetric, so J = (rhsᵀ a⁻¹)ᵀ.
        self.j = solve_right(&a, &rhs.transpose())?.transpose();
        Ok(())
    }

    /// `Θ = (μJX̃ᵀ + Λ₁X̃ᵀ + μG + Λ₂)(μX̃X̃ᵀ + μI + βX̃′L̃X̃′ᵀ)⁻¹`
    pub fn step_theta(&mut self, problem: &ThetaProblem<T>) -> Result<()> {
        let mu = self.mu;
        let mut a = &problem.xxt * mu + &problem.graph_term;
        for i in 0..a.nrows() {
            a[(i, i)] += mu;
        }
        let rhs = (&self.j * mu + &self.lambda1) * problem.x_tilde.transpose()
            + &self.g * mu
            + &self.lambda2;
        self.theta = solve_right_ridged(&a, &rhs)?;
        self.theta_x = &self.theta * &problem.x_tilde;
        Ok(())
    }

    /// `G = U Vᵀ` from the SVD of `Θ − Λ₂/μ`.
    pub fn step_g(&mut self) -> Result<()> {
        self.g = polar_factor(&(&self.theta - &self.lambda2 / self.mu))?;
        Ok(())
    }

    pub fn step_duals(&mut self) {
        let r1 = &self.j - &self.theta_x;
        let r2 = &self.g - &self.theta;
        self.lambda1 += r1 * self.mu;
        self.lambda2 += r2 * self.mu;
    }

    /// `(‖J − ΘX̃‖_F, ‖G − Θ‖_F)`
    pub fn residuals(&self) -> (T, T) {
        (
            (&self.j - &self.theta_x).norm(),
            (&self.g - &self.theta).norm(),
        )
    }

    /// Augmented Lagrangian at the current iterate; infinite when G leaves the
    /// orthonormal set.
    pub fn augmented_lagrangian(&self, problem: &ThetaProblem<T>) -> T {
        let d = self.g.nrows();
        if (&self.g * self.g.transpose() - Mat::identity(d, d)).norm() > T::of(1e-9) {
            return T::max_value().unwrap_or(T::one() / T::zero());
        }
        let half = T::of(0.5);
        let theta_x = &self.theta * &problem.x_tilde;
        let fit = (&problem.y_tilde - &problem.p * &self.j).norm_squared() * half;
        let graph = (&self.theta * &problem.graph_term).component_mul(&self.theta).sum() * half;
        let r1 = &self.j - &theta_x;
        let r2 = &self.g - &self.theta;
        fit + graph
            + self.lambda1.dot(&r1)
            + r1.norm_squared() * self.mu * half
            + self.lambda2.dot(&r2)
            + r2.norm_squared() * self.mu * half
    }
}

/// Gradient steps allowed after each ADMM run.
const POLISH_STEPS: usize = 500;

/// Extra seeded starts tried by [`solve_theta`].
pub const THETA_RESTARTS: usize = 8;

#[derive(Debug, Clone)]
pub struct ThetaOutcome<T: Scalar> {
    /// Orthonormal result: the ADMM's G split after polishing.
    pub theta: Mat<T>,
    /// ADMM iterations of the selected run.
    pub iterations: usize,
    pub polish_steps: usize,
    pub residual_j: T,
    pub residual_g: T,
    pub converged: bool,
}

/// Runs the Θ ADMM from the zero initialization plus [`THETA_RESTARTS`]
/// seeded orthonormal starts and keeps the best polished result.
#[allow(clippy::too_many_arguments)]
pub fn solve_theta<T: Scalar>(
    y_tilde: &Mat<T>,
    p: &Mat<T>,
    x_tilde: &Mat<T>,
    x_tilde_prime: &Mat<T>,
    l_tilde: &Mat<T>,
    beta: T,
    d: usize,
    schedule: &AdmmSchedule<T>,
) -> Result<ThetaOutcome<T>> {
    if p.ncols() != d {
        return Err(Error::Dimension(format!("P has {} columns, d = {d}", p.ncols())));
    }
    let problem = ThetaProblem::new(y_tilde, p, x_tilde, x_tilde_prime, l_tilde, beta)?;
    solve_theta_multistart(&problem, schedule, THETA_RESTARTS, 0)
}

/// Cold start plus `restarts` random orthonormal points drawn with `seed`.
/// Each point is both polished directly and used to warm-start the ADMM; the
/// lowest objective wins.
pub fn solve_theta_multistart<T: Scalar>(
    problem: &ThetaProblem<T>,
    schedule: &AdmmSchedule<T>,
    restarts: usize,
    seed: u64,
) -> Result<ThetaOutcome<T>> {
    let mut best = solve_theta_warm(problem, schedule, None)?;
    let mut best_obj = problem.objective(&best.theta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let g = Mat::<T>::from_fn(problem.d(), problem.dim(), |_, _| {
            T::of(StandardNormal.sample(&mut rng))
        });
        let start = polar_factor(&g)?;
        let (direct, steps) = polish_theta(problem, &start, POLISH_STEPS)?;
        let obj = problem.objective(&direct);
        if obj < best_obj {
            best = ThetaOutcome {
                theta: direct,
                iterations: 0,
                polish_steps: steps,
                residual_j: T::zero(),
                residual_g: T::zero(),
                converged: true,
            };
            best_obj = obj;
        }
        let out = solve_theta_warm(problem, schedule, Some(&start))?;
        let obj = problem.objective(&out.theta);
        if obj < best_obj {
            best = out;
            best_obj = obj;
        }
    }
    Ok(best)
}

/// One ADMM run, optionally from `Θ = G = warm`, followed by the polish.
pub fn solve_theta_warm<T: Scalar>(
    problem: &ThetaProblem<T>,
    schedule: &AdmmSchedule<T>,
    warm: Option<&Mat<T>>,
) -> Result<ThetaOutcome<T>> {
    schedule.validate()?;
    let (d, dim) = (problem.d(), problem.dim());
    if d == 0 || d > dim {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {d} must be in 1..={dim}"
        )));
    }
    let mut st = ThetaState::new(problem, schedule.mu0, warm)?;
    let mut iterations = 0;
    let mut converged = false;
    let (mut rj, mut rg) = (T::zero(), T::zero());
    while iterations < schedule.max_iter {
        iterations += 1;
        st.step_j(problem)?;
        st.step_theta(problem)?;
        st.step_g()?;
        (rj, rg) = st.residuals();
        st.step_duals();
        st.mu = schedule.grow(st.mu);
        if rj < schedule.eps && rg < schedule.eps {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("Θ ADMM stopped at {iterations} iterations: ‖J−ΘX̃‖={rj}, ‖G−Θ‖={rg}");
    }
    let (theta, polish_steps) = polish_theta(problem, &st.g, POLISH_STEPS)?;
    Ok(ThetaOutcome {
        theta,
        iterations,
        polish_steps,
        residual_j: rj,
        residual_g: rg,
        converged,
    })
}
