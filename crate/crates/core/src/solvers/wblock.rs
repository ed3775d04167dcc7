//! ADMMs for the learnable adjacency blocks.
//!
//! Both solve the linear program
//!
//! ```text
//! min_W Σ c_ij W_ij   s.t.  0 ≤ W ≤ cap,  Σ W = s   (and W = Wᵀ for the UU block)
//! ```
//!
//! with `c = (β/4) Z`. The splits follow the classic layout: `U ≥ 0`,
//! `M` carrying the weighted ℓ1 term, `S` on the sum hyperplane and `K ≤ cap`;
//! the symmetric variant adds `V` (with `U = Wᵀ`, `V = W`, `U = V`) and moves
//! the non-negativity to `K` and the cap to `T`.
//!
//! The iteration runs in normalized units (`c / max c`, `W / cap`) so a single
//! penalty schedule works whatever the scale of the distances.

use super::AdmmSchedule;
use crate::error::{Error, Result};
use crate::numerics::{check_finite, project_sum, Mat};
use crate::numerics::prox::shrink;
use crate::scalar::Scalar;

/// Checks that a `rows × cols` block can hold total mass `s` under the cap.
pub fn check_block_feasible<T: Scalar>(rows: usize, cols: usize, cap: T, s: T) -> Result<()> {
    if !(cap > T::zero()) || !(s > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "block cap ({cap}) and sum target ({s}) must be positive"
        )));
    }
    let room = cap * T::of_usize(rows * cols);
    // A hair of slack so s == cap·numel is accepted despite round-off.
    if s > room * (T::one() + T::of(1e-12)) {
        return Err(Error::Infeasible(format!(
            "sum target {s} exceeds cap·numel = {room} for a {rows}×{cols} block"
        )));
    }
    Ok(())
}

fn linear_cost<T: Scalar>(c: &Mat<T>, w: &Mat<T>) -> T {
    c.component_mul(w).sum()
}

fn soft<T: Scalar>(v: &Mat<T>, c: &Mat<T>, mu: T) -> Mat<T> {
    v.zip_map(c, |x, t| shrink(x, t / mu))
}

fn clamp_min<T: Scalar>(v: Mat<T>, lo: T) -> Mat<T> {
    v.map(|x| if x < lo { lo } else { x })
}

fn clamp_max<T: Scalar>(v: Mat<T>, hi: T) -> Mat<T> {
    v.map(|x| if x > hi { hi } else { x })
}

fn penalty<T: Scalar>(lambda: &Mat<T>, r: &Mat<T>, mu: T) -> T {
    lambda.dot(r) + r.norm_squared() * mu * T::of(0.5)
}

fn infinity<T: Scalar>() -> T {
    T::max_value().unwrap_or(T::one() / T::zero())
}

/// Euclidean projection onto `{0 ≤ x ≤ cap, Σx = s}` by bisection on the
/// uniform shift. Preserves symmetry of a symmetric input.
fn project_capped<T: Scalar>(v: &Mat<T>, cap: T, s: T) -> Mat<T> {
    let clamped_sum = |tau: T| -> T {
        v.iter()
            .map(|&x| (x - tau).max(T::zero()).min(cap))
            .fold(T::zero(), |a, b| a + b)
    };
    let vmax = v.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b));
    let vmin = v.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
    // Sum is non-increasing in tau: full at vmin − cap, zero at vmax.
    let (mut lo, mut hi) = (vmin - cap, vmax);
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if clamped_sum(mid) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = (lo + hi) * T::of(0.5);
    let mut out = v.map(|x| (x - tau).max(T::zero()).min(cap));
    // Spread the residual bisection error over the free entries.
    let free: Vec<usize> = (0..out.len())
        .filter(|&i| out[i] > T::zero() && out[i] < cap)
        .collect();
    if !free.is_empty() {
        let delta = (s - out.sum()) / T::of_usize(free.len());
        for &i in &free {
            out[i] = (out[i] + delta).max(T::zero()).min(cap);
        }
    }
    out
}

/// ADMM iterate for a rectangular (HU or MU) block.
#[derive(Debug, Clone)]
pub struct WBlockState<T: Scalar> {
    pub w: Mat<T>,
    pub u: Mat<T>,
    pub m: Mat<T>,
    pub s_blk: Mat<T>,
    pub k: Mat<T>,
    /// Duals of `U − W`, `M − W`, `S − W`, `K − W`.
    pub lambda: [Mat<T>; 4],
    pub mu: T,
    pub weights: Mat<T>,
    pub total: T,
    pub cap: T,
}

impl<T: Scalar> WBlockState<T> {
    /// `M = warm`, every other split and dual at zero.
    pub fn new(weights: Mat<T>, total: T, cap: T, warm: &Mat<T>, mu: T) -> Self {
        let (r, c) = weights.shape();
        let z = Mat::zeros(r, c);
        Self {
            w: warm.clone(),
            u: z.clone(),
            m: warm.clone(),
            s_blk: z.clone(),
            k: z.clone(),
            lambda: [z.clone(), z.clone(), z.clone(), z],
            mu,
            weights,
            total,
            cap,
        }
    }

    pub fn step_w(&mut self) {
        let l = &self.lambda;
        let duals = (&l[0] + &l[1] + &l[2] + &l[3]) / self.mu;
        self.w = (&self.u + &self.m + &self.s_blk + &self.k + duals) * T::of(0.25);
    }

    pub fn step_u(&mut self) {
        self.u = clamp_min(&self.w - &self.lambda[0] / self.mu, T::zero());
    }

    pub fn step_m(&mut self) {
        self.m = soft(&(&self.w - &self.lambda[1] / self.mu), &self.weights, self.mu);
    }

    pub fn step_s(&mut self) {
        self.s_blk = project_sum(&(&self.w - &self.lambda[2] / self.mu), self.total);
    }

    pub fn step_k(&mut self) {
        self.k = clamp_max(&self.w - &self.lambda[3] / self.mu, self.cap);
    }

    pub fn step_duals(&mut self) {
        let mu = self.mu;
        for (l, b) in self
            .lambda
            .iter_mut()
            .zip([&self.u, &self.m, &self.s_blk, &self.k])
        {
            *l += (b - &self.w) * mu;
        }
    }

    /// Largest split disagreement `max ‖B − W‖_F`.
    pub fn residual(&self) -> T {
        [&self.u, &self.m, &self.s_blk, &self.k]
            .iter()
            .map(|b| (*b - &self.w).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Augmented Lagrangian; infinite when a split leaves its constraint set.
    pub fn augmented_lagrangian(&self) -> T {
        let tol = T::of(1e-12);
        if self.u.iter().any(|&x| x < T::zero())
            || self.k.iter().any(|&x| x > self.cap)
            || (self.s_blk.sum() - self.total).abs() > tol * (T::one() + self.total.abs())
        {
            return infinity();
        }
        let f = self
            .weights
            .zip_map(&self.m, |c, x| c * x.abs())
            .sum();
        let mut al = f;
        for (l, b) in self.lambda.iter().zip([&self.u, &self.m, &self.s_blk, &self.k]) {
            al += penalty(l, &(b - &self.w), self.mu);
        }
        al
    }

    fn iterate(&mut self) {
        self.step_w();
        self.step_u();
        self.step_m();
        self.step_s();
        self.step_k();
        self.step_duals();
    }
}

/// ADMM iterate for the symmetric UU block.
#[derive(Debug, Clone)]
pub struct WSymBlockState<T: Scalar> {
    pub w: Mat<T>,
    pub u: Mat<T>,
    pub v: Mat<T>,
    pub m: Mat<T>,
    pub s_blk: Mat<T>,
    pub k: Mat<T>,
    pub t: Mat<T>,
    /// Duals of `U − Wᵀ`, `V − W`, `M − W`, `S − W`, `K − W`, `U − V`, `T − W`.
    pub lambda: [Mat<T>; 7],
    pub mu: T,
    pub weights: Mat<T>,
    pub total: T,
    pub cap: T,
}

impl<T: Scalar> WSymBlockState<T> {
    pub fn new(weights: Mat<T>, total: T, cap: T, warm: &Mat<T>, mu: T) -> Self {
        let n = weights.nrows();
        let z = Mat::zeros(n, n);
        Self {
            w: warm.clone(),
            u: z.clone(),
            v: z.clone(),
            m: warm.clone(),
            s_blk: z.clone(),
            k: z.clone(),
            t: z.clone(),
            lambda: std::array::from_fn(|_| z.clone()),
            mu,
            weights,
            total,
            cap,
        }
    }

    pub fn step_w(&mut self) {
        let l = &self.lambda;
        let duals =
            (l[0].transpose() + &l[1] + &l[2] + &l[3] + &l[4] + &l[6]) / self.mu;
        let blocks = self.u.transpose() + &self.v + &self.m + &self.s_blk + &self.k + &self.t;
        self.w = (blocks + duals) / T::of(6.0);
    }

    pub fn step_u(&mut self) {
        let l = &self.lambda;
        self.u = (self.w.transpose() + &self.v - (&l[0] + &l[5]) / self.mu) * T::of(0.5);
    }

    pub fn step_v(&mut self) {
        let l = &self.lambda;
        self.v = (&self.w + &self.u - (&l[1] - &l[5]) / self.mu) * T::of(0.5);
    }

    pub fn step_m(&mut self) {
        self.m = soft(&(&self.w - &self.lambda[2] / self.mu), &self.weights, self.mu);
    }

    pub fn step_s(&mut self) {
        self.s_blk = project_sum(&(&self.w - &self.lambda[3] / self.mu), self.total);
    }

    pub fn step_k(&mut self) {
        self.k = clamp_min(&self.w - &self.lambda[4] / self.mu, T::zero());
    }

    pub fn step_t(&mut self) {
        self.t = clamp_max(&self.w - &self.lambda[6] / self.mu, self.cap);
    }

    fn split_residuals(&self) -> [Mat<T>; 7] {
        [
            &self.u - self.w.transpose(),
            &self.v - &self.w,
            &self.m - &self.w,
            &self.s_blk - &self.w,
            &self.k - &self.w,
            &self.u - &self.v,
            &self.t - &self.w,
        ]
    }

    pub fn step_duals(&mut self) {
        let mu = self.mu;
        let residuals = self.split_residuals();
        for (l, r) in self.lambda.iter_mut().zip(residuals) {
            *l += r * mu;
        }
    }

    pub fn residual(&self) -> T {
        self.split_residuals()
            .iter()
            .map(|r| r.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn augmented_lagrangian(&self) -> T {
        let tol = T::of(1e-12);
        if self.k.iter().any(|&x| x < T::zero())
            || self.t.iter().any(|&x| x > self.cap)
            || (self.s_blk.sum() - self.total).abs() > tol * (T::one() + self.total.abs())
        {
            return infinity();
        }
        let mut al = self
            .weights
            .zip_map(&self.m, |c, x| c * x.abs())
            .sum();
        for (l, r) in self.lambda.iter().zip(self.split_residuals()) {
            al += penalty(l, &r, self.mu);
        }
        al
    }

    fn iterate(&mut self) {
        self.step_w();
        self.step_u();
        self.step_v();
        self.step_m();
        self.step_s();
        self.step_k();
        self.step_t();
        self.step_duals();
    }
}

#[derive(Debug, Clone)]
pub struct WBlockOutcome<T: Scalar> {
    /// Feasible block: entries in `[0, cap]`, sum equal to `s`.
    pub w: Mat<T>,
    pub iterations: usize,
    /// Final split residual in normalized units.
    pub residual: T,
    pub converged: bool,
}

struct Normalized<T: Scalar> {
    weights: Mat<T>,
    total: T,
    warm: Mat<T>,
}

fn validate_and_normalize<T: Scalar>(
    z: &Mat<T>,
    beta: T,
    cap: T,
    s: T,
    schedule: &AdmmSchedule<T>,
    warm: &Mat<T>,
) -> Result<Normalized<T>> {
    schedule.validate()?;
    let (r, c) = z.shape();
    if r == 0 || c == 0 {
        return Err(Error::Dimension("empty adjacency block".into()));
    }
    if warm.shape() != z.shape() {
        return Err(Error::Dimension(format!(
            "warm start is {:?}, block is {:?}",
            warm.shape(),
            z.shape()
        )));
    }
    check_finite(z, "distance block")?;
    check_finite(warm, "warm start")?;
    if z.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidArgument("distances must be non-negative".into()));
    }
    if beta < T::zero() {
        return Err(Error::InvalidArgument(format!("graph weight {beta} is negative")));
    }
    check_block_feasible(r, c, cap, s)?;
    let cost = z * (beta * T::of(0.25));
    let peak = cost.max();
    let weights = if peak > T::zero() { cost / peak } else { Mat::zeros(r, c) };
    Ok(Normalized {
        weights,
        total: s / cap,
        warm: warm / cap,
    })
}

/// Picks the cheaper of the polished ADMM point and the projected warm start,
/// then rescales to the caller's units.
fn finish<T: Scalar>(
    admm_w: &Mat<T>,
    norm: &Normalized<T>,
    cap: T,
    iterations: usize,
    residual: T,
    eps: T,
) -> WBlockOutcome<T> {
    let polished = project_capped(admm_w, T::one(), norm.total);
    let fallback = project_capped(&norm.warm, T::one(), norm.total);
    let w = if linear_cost(&norm.weights, &fallback) < linear_cost(&norm.weights, &polished) {
        fallback
    } else {
        polished
    };
    let converged = residual < eps;
    if !converged {
        log::debug!("adjacency ADMM stopped at {iterations} iterations, residual {residual}");
    }
    WBlockOutcome {
        w: w * cap,
        iterations,
        residual,
        converged,
    }
}

/// Solves a cross block (HU or MU) from distances `z_cross` in the subspace.
pub fn solve_w_cross<T: Scalar>(
    z_cross: &Mat<T>,
    beta: T,
    cap: T,
    s: T,
    schedule: &AdmmSchedule<T>,
    warm: &Mat<T>,
) -> Result<WBlockOutcome<T>> {
    let norm = validate_and_normalize(z_cross, beta, cap, s, schedule, warm)?;
    let mut st = WBlockState::new(norm.weights.clone(), norm.total, T::one(), &norm.warm, schedule.mu0);
    let mut iterations = 0;
    let mut residual = infinity::<T>();
    while iterations < schedule.max_iter {
        iterations += 1;
        let prev = st.w.clone();
        st.iterate();
        residual = st.residual().max((&st.w - prev).norm());
        st.mu = schedule.grow(st.mu);
        if residual < schedule.eps {
            break;
        }
    }
    Ok(finish(&st.w, &norm, cap, iterations, residual, schedule.eps))
}

/// Solves the symmetric UU block from pairwise landmark distances `z_uu`.
pub fn solve_w_uu<T: Scalar>(
    z_uu: &Mat<T>,
    gamma: T,
    cap: T,
    s: T,
    schedule: &AdmmSchedule<T>,
    warm: &Mat<T>,
) -> Result<WBlockOutcome<T>> {
    if z_uu.nrows() != z_uu.ncols() {
        return Err(Error::Dimension(format!("UU distances are {:?}", z_uu.shape())));
    }
    let asym = (z_uu - z_uu.transpose()).amax();
    if asym > T::of(1e-8) * T::one().max(z_uu.amax()) {
        return Err(Error::InvalidArgument(format!("UU distances asymmetric by {asym}")));
    }
    let norm = validate_and_normalize(z_uu, gamma, cap, s, schedule, warm)?;
    let mut st =
        WSymBlockState::new(norm.weights.clone(), norm.total, T::one(), &norm.warm, schedule.mu0);
    let mut iterations = 0;
    let mut residual = infinity::<T>();
    while iterations < schedule.max_iter {
        iterations += 1;
        let prev = st.w.clone();
        st.iterate();
        residual = st.residual().max((&st.w - prev).norm());
        st.mu = schedule.grow(st.mu);
        if residual < schedule.eps {
            break;
        }
    }
    let sym = (&st.w + st.w.transpose()) * T::of(0.5);
    let mut norm = norm;
    norm.warm = (&norm.warm + norm.warm.transpose()) * T::of(0.5);
    Ok(finish(&sym, &norm, cap, iterations, residual, schedule.eps))
}
