use super::{
    init_model, objective, relative_change, AlignmentModel, FitReport, GraphParams, SolverConfig,
    Variant,
};
use crate::data::{assemble_joint, default_landmark_count, one_hot, select_landmarks, JointData, Labels, ModalityMatrix};
use crate::error::{Error, Result};
use crate::graph::{
    align_blocks, assemble, gaussian_knn_cross, gaussian_knn_graph, laplacian, JointAdjacency,
};
use crate::numerics::{pairwise_sq_dist, pairwise_sq_dist_cross, Mat};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, Stream};
use crate::solvers::{check_block_feasible, solve_theta_warm, solve_w_cross, solve_w_uu, ThetaProblem};

/// Landmarks for the unlabeled pool: `override_count` cluster centers, or one
/// per labeled sample, capped at the pool size.
pub fn prepare_landmarks<T: Scalar>(
    pool: &ModalityMatrix<T>,
    n_labeled: usize,
    override_count: Option<usize>,
    seed: u64,
) -> Result<ModalityMatrix<T>> {
    let m = default_landmark_count(n_labeled, override_count).min(pool.samples());
    select_landmarks(pool, m, derive_seed(seed, Stream::Landmarks))
}

/// Dispatches on the variant. `xu` is ignored by CoSpace and required by the
/// other two (an empty matrix is allowed).
#[allow(clippy::too_many_arguments)]
pub fn fit<T: Scalar>(
    variant: Variant,
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    labels: &Labels,
    xu: Option<&ModalityMatrix<T>>,
    graph: &GraphParams<T>,
    config: &SolverConfig<T>,
) -> Result<(AlignmentModel<T>, FitReport<T>)> {
    let need = || Error::InvalidArgument(format!("{variant} needs unlabeled samples"));
    match variant {
        Variant::CoSpace => fit_cospace(xh, xm, labels, config),
        Variant::SCoSpace => fit_s_cospace(xh, xm, labels, xu.ok_or_else(need)?, graph, config),
        Variant::Lema => fit_lema(xh, xm, labels, xu.ok_or_else(need)?, config),
    }
}

pub fn fit_cospace<T: Scalar>(
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    labels: &Labels,
    config: &SolverConfig<T>,
) -> Result<(AlignmentModel<T>, FitReport<T>)> {
    let setup = Setup::new(xh, xm, labels, None, config)?;
    let empty = Mat::zeros(setup.n, 0);
    let w = assemble(labels, &empty, &empty, &Mat::zeros(0, 0))?;
    run_bcd(setup, w, false, Variant::CoSpace, config)
}

/// HU and MU both link the labeled MS twins to the landmarks; UU is the
/// landmark k-NN graph. The graph stays fixed during training.
pub fn fit_s_cospace<T: Scalar>(
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    labels: &Labels,
    xu: &ModalityMatrix<T>,
    graph: &GraphParams<T>,
    config: &SolverConfig<T>,
) -> Result<(AlignmentModel<T>, FitReport<T>)> {
    let setup = Setup::new(xh, xm, labels, Some(xu), config)?;
    let (n, n_u) = (setup.n, setup.n_u);
    let (cross, uu) = if n_u == 0 {
        (Mat::zeros(n, 0), Mat::zeros(0, 0))
    } else {
        let cross = gaussian_knn_cross(&xm.values, &xu.values, graph.k, graph.sigma)?;
        let uu = if n_u > 1 {
            gaussian_knn_graph(&xu.values, graph.k.min(n_u - 1), graph.sigma)?
        } else {
            Mat::zeros(1, 1)
        };
        (cross, uu)
    };
    let w = assemble(labels, &cross, &cross, &uu)?;
    run_bcd(setup, w, false, Variant::SCoSpace, config)
}

pub fn fit_lema<T: Scalar>(
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    labels: &Labels,
    xu: &ModalityMatrix<T>,
    config: &SolverConfig<T>,
) -> Result<(AlignmentModel<T>, FitReport<T>)> {
    let setup = Setup::new(xh, xm, labels, Some(xu), config)?;
    let (n, n_u) = (setup.n, setup.n_u);
    let (hu, uu) = if n_u == 0 {
        (Mat::zeros(n, 0), Mat::zeros(0, 0))
    } else {
        check_block_feasible(n, n_u, setup.cap, setup.s_cross)?;
        check_block_feasible(n_u, n_u, setup.cap, setup.s_uu)?;
        // Uniform mass is feasible and lets the first sweep compare against it.
        (
            Mat::from_element(n, n_u, setup.s_cross / T::of_usize(n * n_u)),
            Mat::from_element(n_u, n_u, setup.s_uu / T::of_usize(n_u * n_u)),
        )
    };
    let w = assemble(labels, &hu, &hu, &uu)?;
    run_bcd(setup, w, true, Variant::Lema, config)
}

struct Setup<T: Scalar> {
    joint: JointData<T>,
    n: usize,
    n_u: usize,
    n_classes: usize,
    cap: T,
    s_cross: T,
    s_uu: T,
}

impl<T: Scalar> Setup<T> {
    fn new(
        xh: &ModalityMatrix<T>,
        xm: &ModalityMatrix<T>,
        labels: &Labels,
        xu: Option<&ModalityMatrix<T>>,
        config: &SolverConfig<T>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("no labeled samples".into()));
        }
        let c = labels.num_classes();
        labels.check_covers(c)?;
        let y = one_hot::<T>(labels, c)?;
        let joint = assemble_joint(xh, xm, &y, xu)?;
        config.validate(joint.dim())?;
        let (n, n_u) = (joint.n_labeled, joint.n_unlabeled);
        Ok(Self {
            cap: config.cap.unwrap_or_else(|| T::of_usize(c) / T::of_usize(n)),
            s_cross: config.s_scale * T::of_usize(n),
            s_uu: config.s_scale * T::of_usize(n_u),
            joint,
            n,
            n_u,
            n_classes: c,
        })
    }
}

/// `β X̃′ L̃ X̃′ᵀ`, symmetrized.
fn graph_term<T: Scalar>(joint: &JointData<T>, w: &Mat<T>, beta: T) -> Result<Mat<T>> {
    let dim = joint.dim();
    if beta == T::zero() {
        return Ok(Mat::zeros(dim, dim));
    }
    let l = laplacian(w)?;
    let g = &joint.x_tilde_prime * &l.0 * joint.x_tilde_prime.transpose();
    Ok((&g + g.transpose()) * (beta * T::of(0.5)))
}

fn block_cost<T: Scalar>(w: &Mat<T>, z: &Mat<T>) -> T {
    w.component_mul(z).sum()
}

fn run_bcd<T: Scalar>(
    setup: Setup<T>,
    mut w: JointAdjacency<T>,
    learnable: bool,
    variant: Variant,
    config: &SolverConfig<T>,
) -> Result<(AlignmentModel<T>, FitReport<T>)> {
    let Setup { joint, n, n_u, n_classes, cap, s_cross, s_uu } = setup;
    let (alpha, beta, gamma) = (config.alpha, config.beta, config.gamma());
    let (mut theta, mut p) = init_model(
        &joint.x_tilde,
        &joint.y_tilde,
        config.d,
        alpha,
        derive_seed(config.seed, Stream::Init),
    )?;
    let mut gterm = graph_term(&joint, w.matrix(), beta)?;
    let mut e = objective(&theta, &p, &joint, w.matrix(), alpha, beta)?;
    let mut trace = vec![e];
    let mut report = FitReport {
        objective_trace: Vec::new(),
        outer_iters: 0,
        converged: false,
        theta_unconverged: 0,
        w_unconverged: 0,
        max_theta_residual: T::zero(),
        max_w_residual: T::zero(),
        rejected_theta: 0,
        rejected_cross: 0,
        rejected_uu: 0,
        graph: Mat::zeros(0, 0),
        cap,
        s_cross,
        s_uu,
    };
    // The W step only matters when the graph term is active.
    let learn_graph = learnable && n_u > 0 && beta > T::zero();

    for t in 1..=config.max_outer {
        // P: exact ridge solution, never increases the objective.
        p = crate::solvers::update_p(&joint.y_tilde, &(&theta * &joint.x_tilde), alpha)?;
        let e_p = objective(&theta, &p, &joint, w.matrix(), alpha, beta)?;

        // Θ: accept only if the objective does not rise.
        let problem = ThetaProblem::with_graph_term(&joint.y_tilde, &p, &joint.x_tilde, gterm.clone())?;
        let out = solve_theta_warm(&problem, &config.theta_schedule, Some(&theta))?;
        if !out.converged {
            report.theta_unconverged += 1;
        }
        report.max_theta_residual = report
            .max_theta_residual
            .max(out.residual_j.max(out.residual_g));
        let e_theta = objective(&out.theta, &p, &joint, w.matrix(), alpha, beta)?;
        if e_theta <= e_p {
            theta = out.theta;
        } else {
            report.rejected_theta += 1;
        }

        if learn_graph {
            let h = &theta * &joint.x_tilde_prime;
            let h_h = h.columns(0, n).into_owned();
            let h_m = h.columns(n, n).into_owned();
            let h_u = h.columns(2 * n, n_u).into_owned();
            let z_hu = pairwise_sq_dist_cross(&h_h, &h_u)?;
            let z_mu = pairwise_sq_dist_cross(&h_m, &h_u)?;
            let z_uu = pairwise_sq_dist(&h_u);
            let (old_hu, old_mu, old_uu) = (w.hu(), w.mu(), w.uu());
            let sched = &config.w_schedule;
            let (r_hu, r_mu) = rayon::join(
                || solve_w_cross(&z_hu, beta, cap, s_cross, sched, &old_hu),
                || solve_w_cross(&z_mu, beta, cap, s_cross, sched, &old_mu),
            );
            let (r_hu, r_mu) = (r_hu?, r_mu?);
            let r_uu = solve_w_uu(&z_uu, gamma, cap, s_uu, sched, &old_uu)?;
            for r in [&r_hu, &r_mu, &r_uu] {
                if !r.converged {
                    report.w_unconverged += 1;
                }
                report.max_w_residual = report.max_w_residual.max(r.residual);
            }

            // Align by elementwise max, then restore the block mass.
            let mut aligned = align_blocks(&r_hu.w, &r_mu.w)?;
            let mass = aligned.sum();
            if mass > T::zero() {
                aligned *= s_cross / mass;
            }
            let (mut new_hu, mut new_mu) = (aligned.clone(), aligned);
            let old_cross = block_cost(&old_hu, &z_hu) + block_cost(&old_mu, &z_mu);
            if block_cost(&new_hu, &z_hu) + block_cost(&new_mu, &z_mu) > old_cross {
                report.rejected_cross += 1;
                new_hu = old_hu;
                new_mu = old_mu;
            }
            let new_uu = if block_cost(&r_uu.w, &z_uu) > block_cost(&old_uu, &z_uu) {
                report.rejected_uu += 1;
                old_uu
            } else {
                r_uu.w
            };
            w.set_learnable(&new_hu, &new_mu, &new_uu)?;
            gterm = graph_term(&joint, w.matrix(), beta)?;
        }

        let e_next = objective(&theta, &p, &joint, w.matrix(), alpha, beta)?;
        trace.push(e_next);
        report.outer_iters = t;
        let change = relative_change(e, e_next);
        log::debug!("sweep {t}: objective {e_next}, relative change {change}");
        e = e_next;
        if change < config.zeta {
            report.converged = true;
            break;
        }
    }

    let d_h = joint.d_h;
    let model = AlignmentModel {
        theta_h: theta.columns(0, d_h).into_owned(),
        theta_m: theta.columns(d_h, joint.d_m).into_owned(),
        p,
        variant,
        n_classes,
        config: config.clone(),
        objective_trace: trace.clone(),
        outer_iters: report.outer_iters,
        converged: report.converged,
        scaler_h: None,
        scaler_m: None,
    };
    report.objective_trace = trace;
    report.graph = w.into_matrix();
    Ok((model, report))
}
