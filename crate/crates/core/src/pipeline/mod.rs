//! The outer block-coordinate descent over P, Θ and the learnable graph, and
//! the three model variants built on it.

mod archive;
mod fit;

pub use archive::{load_model, read_model, save_model, write_model, ARCHIVE_MAGIC};
pub use fit::{fit, fit_cospace, fit_lema, fit_s_cospace, prepare_landmarks};

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{JointData, MinMaxScaler, ModalityMatrix};
use crate::error::{Error, Result};
use crate::numerics::{pairwise_sq_dist, svd_thin, Mat};
use crate::scalar::Scalar;
use crate::solvers::{update_p, AdmmSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Labeled pairs only, LDA-like graph.
    CoSpace,
    /// Adds unlabeled landmarks through a fixed Gaussian k-NN graph.
    SCoSpace,
    /// Learns the unlabeled graph blocks jointly with the projections.
    Lema,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cospace" => Ok(Variant::CoSpace),
            "s-cospace" | "scospace" => Ok(Variant::SCoSpace),
            "lema" => Ok(Variant::Lema),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::CoSpace => "cospace",
            Variant::SCoSpace => "s-cospace",
            Variant::Lema => "lema",
        })
    }
}

/// Hyperparameters of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T: Scalar> {
    /// Ridge weight on P.
    pub alpha: T,
    /// Graph weight.
    pub beta: T,
    /// Weight of the UU block subproblem; `None` means `beta`.
    pub gamma: Option<T>,
    /// Subspace dimension.
    pub d: usize,
    /// Each learnable block must carry total mass `s_scale × rows`.
    pub s_scale: T,
    /// Entry cap of learnable blocks; `None` means `C / N`.
    pub cap: Option<T>,
    /// Outer stopping tolerance on the relative objective change.
    pub zeta: T,
    pub max_outer: usize,
    pub theta_schedule: AdmmSchedule<T>,
    pub w_schedule: AdmmSchedule<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::of(0.1),
            beta: T::of(0.1),
            gamma: None,
            d: 10,
            s_scale: T::one(),
            cap: None,
            zeta: T::of(1e-4),
            max_outer: 50,
            theta_schedule: AdmmSchedule::theta_default(),
            w_schedule: AdmmSchedule::w_default(),
            seed: 0,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn gamma(&self) -> T {
        self.gamma.unwrap_or(self.beta)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.alpha < T::zero() || self.beta < T::zero() || self.gamma() < T::zero() {
            return bad("alpha, beta and gamma must be non-negative".into());
        }
        if self.d == 0 || self.d > dim {
            return bad(format!("d = {} must lie in 1..={dim}", self.d));
        }
        if !(self.zeta > T::zero()) {
            return bad("zeta must be positive".into());
        }
        if !(self.s_scale > T::zero()) {
            return bad("s_scale must be positive".into());
        }
        if let Some(c) = self.cap {
            if !(c > T::zero()) {
                return bad("cap must be positive".into());
            }
        }
        if self.max_outer == 0 {
            return bad("max_outer must be positive".into());
        }
        self.theta_schedule.validate()?;
        self.w_schedule.validate()
    }
}

/// k-NN graph parameters for the fixed S-CoSpace graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams<T: Scalar> {
    pub k: usize,
    pub sigma: T,
}

impl<T: Scalar> Default for GraphParams<T> {
    fn default() -> Self {
        Self { k: 10, sigma: T::one() }
    }
}

/// Learned projections `Θ = [Θ_H, Θ_M]` and regression map `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentModel<T: Scalar> {
    pub theta_h: Mat<T>,
    pub theta_m: Mat<T>,
    pub p: Mat<T>,
    pub variant: Variant,
    pub n_classes: usize,
    pub config: SolverConfig<T>,
    pub objective_trace: Vec<T>,
    pub outer_iters: usize,
    pub converged: bool,
    /// Feature scalers fitted on the training data, re-applied at prediction.
    pub scaler_h: Option<MinMaxScaler<T>>,
    pub scaler_m: Option<MinMaxScaler<T>>,
}

impl<T: Scalar> AlignmentModel<T> {
    pub fn d(&self) -> usize {
        self.p.ncols()
    }

    /// `[Θ_H, Θ_M]`
    pub fn theta(&self) -> Mat<T> {
        let d = self.theta_h.nrows();
        let (dh, dm) = (self.theta_h.ncols(), self.theta_m.ncols());
        let mut t = Mat::zeros(d, dh + dm);
        t.view_mut((0, 0), (d, dh)).copy_from(&self.theta_h);
        t.view_mut((0, dh), (d, dm)).copy_from(&self.theta_m);
        t
    }

    /// `‖ΘΘᵀ − I‖_F`
    pub fn orthonormality_error(&self) -> T {
        let t = self.theta();
        (&t * t.transpose() - Mat::identity(t.nrows(), t.nrows())).norm()
    }
}

/// Training inputs after centered min-max scaling, plus the scalers so the
/// same maps can be stored in the model and re-applied at prediction.
#[derive(Debug, Clone)]
pub struct ScaledInputs<T: Scalar> {
    pub xh: ModalityMatrix<T>,
    pub xm: ModalityMatrix<T>,
    pub xu: Option<ModalityMatrix<T>>,
    pub scaler_h: MinMaxScaler<T>,
    pub scaler_m: MinMaxScaler<T>,
}

impl<T: Scalar> ScaledInputs<T> {
    /// The HS scaler is fitted on `xh`; the MS scaler on `xm` together with
    /// the unlabeled pool, since both share one feature space.
    pub fn fit(xh: &ModalityMatrix<T>, xm: &ModalityMatrix<T>, xu: Option<&ModalityMatrix<T>>) -> Result<Self> {
        let scaler_h = MinMaxScaler::fit_centered(&[&xh.values]);
        let mut ms = vec![&xm.values];
        ms.extend(xu.map(|u| &u.values));
        let scaler_m = MinMaxScaler::fit_centered(&ms);
        let xu = match xu {
            Some(u) => Some(ModalityMatrix::new(scaler_m.apply(&u.values)?, u.modality)?),
            None => None,
        };
        Ok(Self {
            xh: ModalityMatrix::new(scaler_h.apply(&xh.values)?, xh.modality)?,
            xm: ModalityMatrix::new(scaler_m.apply(&xm.values)?, xm.modality)?,
            xu,
            scaler_h,
            scaler_m,
        })
    }

    /// Records the scalers in a fitted model.
    pub fn attach(&self, model: &mut AlignmentModel<T>) {
        model.scaler_h = Some(self.scaler_h.clone());
        model.scaler_m = Some(self.scaler_m.clone());
    }
}

/// Diagnostics of one fit.
#[derive(Debug, Clone)]
pub struct FitReport<T: Scalar> {
    /// Objective before the first sweep and after each one.
    pub objective_trace: Vec<T>,
    pub outer_iters: usize,
    pub converged: bool,
    /// Θ ADMM runs that hit their iteration cap.
    pub theta_unconverged: usize,
    /// Adjacency ADMM runs that hit their iteration cap.
    pub w_unconverged: usize,
    pub max_theta_residual: T,
    pub max_w_residual: T,
    /// Block updates discarded because they would have raised the objective.
    pub rejected_theta: usize,
    pub rejected_cross: usize,
    pub rejected_uu: usize,
    /// Final joint adjacency.
    pub graph: Mat<T>,
    pub cap: T,
    pub s_cross: T,
    pub s_uu: T,
}

impl<T: Scalar> FitReport<T> {
    pub fn final_objective(&self) -> T {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    /// `|E_t − E_{t−1}| / E_{t−1}` of the last sweep.
    pub fn final_relative_change(&self) -> Option<T> {
        let n = self.objective_trace.len();
        (n >= 2).then(|| relative_change(self.objective_trace[n - 2], self.objective_trace[n - 1]))
    }
}

pub(crate) fn relative_change<T: Scalar>(prev: T, next: T) -> T {
    let diff = (prev - next).abs();
    if diff == T::zero() {
        T::zero()
    } else if prev == T::zero() {
        T::max_value().unwrap_or(T::one())
    } else {
        diff / prev.abs()
    }
}

/// The three terms of the training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts<T: Scalar> {
    /// `½‖Ỹ − PΘX̃‖²`
    pub fit: T,
    /// `(α/2)‖P‖²`
    pub ridge: T,
    /// `(β/4) Σ W̃ ⊙ Z`, Z the pairwise squared distances of `ΘX̃′`.
    pub graph: T,
}

impl<T: Scalar> ObjectiveParts<T> {
    pub fn total(&self) -> T {
        self.fit + self.ridge + self.graph
    }
}

pub fn objective_parts<T: Scalar>(
    theta: &Mat<T>,
    p: &Mat<T>,
    joint: &JointData<T>,
    w: &Mat<T>,
    alpha: T,
    beta: T,
) -> Result<ObjectiveParts<T>> {
    let n_all = joint.x_tilde_prime.ncols();
    if w.shape() != (n_all, n_all) {
        return Err(Error::Dimension(format!(
            "graph is {:?}, data has {n_all} nodes",
            w.shape()
        )));
    }
    if theta.ncols() != joint.dim() || p.ncols() != theta.nrows() || p.nrows() != joint.y_tilde.nrows() {
        return Err(Error::Dimension("model shapes do not match the data".into()));
    }
    let half = T::of(0.5);
    let fit = (&joint.y_tilde - p * (theta * &joint.x_tilde)).norm_squared() * half;
    let ridge = p.norm_squared() * alpha * half;
    let graph = if beta == T::zero() {
        T::zero()
    } else {
        let z = pairwise_sq_dist(&(theta * &joint.x_tilde_prime));
        w.component_mul(&z).sum() * beta * T::of(0.25)
    };
    Ok(ObjectiveParts { fit, ridge, graph })
}

/// Training objective value.
pub fn objective<T: Scalar>(
    theta: &Mat<T>,
    p: &Mat<T>,
    joint: &JointData<T>,
    w: &Mat<T>,
    alpha: T,
    beta: T,
) -> Result<T> {
    Ok(objective_parts(theta, p, joint, w, alpha, beta)?.total())
}

/// Initial projection: the top-`d` left singular vectors of `X̃` as rows,
/// padded with a seeded orthonormal complement when `X̃` has rank below `d`.
pub fn init_theta<T: Scalar>(x_tilde: &Mat<T>, d: usize, seed: u64) -> Result<Mat<T>> {
    let dim = x_tilde.nrows();
    if d == 0 || d > dim {
        return Err(Error::InvalidArgument(format!("d = {d} must lie in 1..={dim}")));
    }
    let mut rows: Vec<nalgebra::RowDVector<T>> = Vec::with_capacity(d);
    if x_tilde.ncols() > 0 {
        let svd = svd_thin(x_tilde)?;
        let smax = svd.s.first().copied().unwrap_or(T::zero());
        let tol = smax * T::of_usize(dim.max(x_tilde.ncols())) * T::default_epsilon();
        for (k, &s) in svd.s.iter().enumerate() {
            if rows.len() == d || s <= tol {
                break;
            }
            rows.push(svd.u.column(k).transpose());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while rows.len() < d {
        let mut v = nalgebra::RowDVector::<T>::from_fn(dim, |_, _| T::of(StandardNormal.sample(&mut rng)));
        // Two Gram-Schmidt passes for numerical orthogonality.
        for _ in 0..2 {
            for r in &rows {
                let c = v.dot(r);
                v -= r * c;
            }
        }
        let n = v.norm();
        if n > T::of(1e-8) {
            rows.push(v / n);
        }
    }
    Ok(Mat::from_rows(&rows))
}

/// `Θ₀` from [`init_theta`] and `P₀ = update_p(Ỹ, Θ₀X̃, α)`.
pub fn init_model<T: Scalar>(
    x_tilde: &Mat<T>,
    y_tilde: &Mat<T>,
    d: usize,
    alpha: T,
    seed: u64,
) -> Result<(Mat<T>, Mat<T>)> {
    let theta = init_theta(x_tilde, d, seed)?;
    let p = update_p(y_tilde, &(&theta * x_tilde), alpha)?;
    Ok((theta, p))
}
