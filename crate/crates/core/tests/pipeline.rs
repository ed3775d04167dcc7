mod common;

use std::path::Path;

use common::*;
use lema::data::{assemble_joint, one_hot, JointData, Labels, ModalityMatrix};
use lema::eval::{predict_regression, project};
use lema::graph::lda_like_graph;
use lema::numerics::Mat;
use lema::pipeline::*;

fn joint_random(seed: u64, dh: usize, dm: usize, n: usize, nu: usize) -> JointData<f64> {
    let mut r = rng(seed);
    let xh = ModalityMatrix::hs(gaussian(&mut r, dh, n)).unwrap();
    let xm = ModalityMatrix::ms(gaussian(&mut r, dm, n)).unwrap();
    let xu = ModalityMatrix::ms(gaussian(&mut r, dm, nu)).unwrap();
    let labels = Labels::new((0..n).map(|i| i % 3 + 1).collect()).unwrap();
    let y = one_hot(&labels, 3).unwrap();
    assemble_joint(&xh, &xm, &y, Some(&xu)).unwrap()
}

#[test]
fn objective_trivial_cases() {
    let j = joint_random(1, 4, 3, 6, 2);
    let n_all = j.x_tilde_prime.ncols();
    let zero = objective(&Mat::zeros(2, 7), &Mat::zeros(3, 2), &j, &Mat::zeros(n_all, n_all), 1.0, 1.0).unwrap();
    assert_eq!(zero, 0.5 * j.y_tilde.norm_squared());

    // Build targets the model reproduces exactly.
    let mut r = rng(2);
    let theta = random_orthonormal_rows(&mut r, 2, 7);
    let p = gaussian(&mut r, 3, 2);
    let mut exact = j.clone();
    exact.y_tilde = &p * &theta * &j.x_tilde;
    let v = objective(&theta, &p, &exact, &Mat::zeros(n_all, n_all), 0.0, 0.0).unwrap();
    assert!(v.abs() < 1e-20);
}

#[test]
fn objective_matches_loop_oracle() {
    let j = joint_random(3, 4, 3, 6, 4);
    let mut r = rng(4);
    let n_all = j.x_tilde_prime.ncols();
    let theta = random_orthonormal_rows(&mut r, 3, 7);
    let p = gaussian(&mut r, 3, 3);
    let w = random_symmetric_nonneg(&mut r, n_all, 0.5);
    let (alpha, beta) = (0.3, 0.7);
    let got = objective(&theta, &p, &j, &w, alpha, beta).unwrap();

    let pt = matmul_loop(&p, &theta);
    let pred = matmul_loop(&pt, &j.x_tilde);
    let mut fit = 0.0;
    for i in 0..pred.nrows() {
        for k in 0..pred.ncols() {
            fit += (j.y_tilde[(i, k)] - pred[(i, k)]).powi(2);
        }
    }
    let ridge: f64 = p.iter().map(|v| v * v).sum();
    let h = matmul_loop(&theta, &j.x_tilde_prime);
    let mut graph = 0.0;
    for a in 0..n_all {
        for b in 0..n_all {
            let d: f64 = (0..3).map(|k| (h[(k, a)] - h[(k, b)]).powi(2)).sum();
            graph += w[(a, b)] * d;
        }
    }
    let want = 0.5 * fit + 0.5 * alpha * ridge + 0.25 * beta * graph;
    assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
}

#[test]
fn init_is_orthonormal_and_deterministic() {
    let j = joint_random(5, 6, 4, 9, 0);
    let (t1, p1) = init_model(&j.x_tilde, &j.y_tilde, 4, 0.1, 7).unwrap();
    let (t2, p2) = init_model(&j.x_tilde, &j.y_tilde, 4, 0.1, 7).unwrap();
    assert_eq!((&t1, &p1), (&t2, &p2));
    assert!((&t1 * t1.transpose() - Mat::identity(4, 4)).norm() <= 1e-10);

    let ident = init_theta(&Mat::<f64>::identity(5, 5), 5, 0).unwrap();
    for i in 0..5 {
        let nonzero: Vec<f64> = ident.row(i).iter().copied().filter(|v| v.abs() > 1e-12).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].abs() - 1.0).abs() < 1e-12);
    }
    assert!(init_theta(&Mat::<f64>::identity(3, 3), 4, 0).is_err());
}

#[test]
fn cospace_fits_separable_data() {
    let plan = SplitPlan { sep: 12.0, ..SplitPlan::new(2, 30, 0, 0) };
    let s = plan.draw(11);
    let (model, report) = fit_cospace(&s.xh, &s.xm, &s.y, &SolverConfig { d: 5, ..Default::default() }).unwrap();
    assert!(model.orthonormality_error() <= 1e-6);
    assert!(accuracy(&s.y, &predict_regression(&model, &s.xm).unwrap()) >= 0.95);
    assert!(accuracy(&s.y, &predict_regression(&model, &s.xh).unwrap()) >= 0.95);
    let t = &report.objective_trace;
    assert!(t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)));
    assert_eq!(report.final_objective(), *t.last().unwrap());
}

#[test]
fn twins_project_close_together() {
    let s = SplitPlan::new(3, 30, 30, 0).draw(12);
    let (model, _) = fit_lema(&s.xh, &s.xm, &s.y, &s.landmarks, &SolverConfig { d: 6, ..Default::default() }).unwrap();
    let (hh, hm) = (project(&model, &s.xh).unwrap(), project(&model, &s.xm).unwrap());
    let l = s.y.as_slice();
    let mut twins: Vec<f64> = (0..l.len()).map(|i| (hh.column(i) - hm.column(i)).norm()).collect();
    let mut inter = Vec::new();
    for i in 0..l.len() {
        for j in 0..l.len() {
            if l[i] != l[j] {
                inter.push((hm.column(i) - hm.column(j)).norm());
            }
        }
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    assert!(med(&mut twins) < med(&mut inter));
}

#[test]
fn lema_graph_is_feasible_and_keeps_labeled_blocks() {
    let s = SplitPlan::new(3, 10, 10, 0).draw(13);
    let (_, report) = fit_lema(&s.xh, &s.xm, &s.y, &s.landmarks, &SolverConfig { d: 5, ..Default::default() }).unwrap();
    let (n, nu) = (s.y.len(), s.landmarks.samples());
    let w = &report.graph;
    let lda: Mat<f64> = lda_like_graph(&s.y);
    for (r0, c0) in [(0, 0), (0, n), (n, 0), (n, n)] {
        let block = w.view((r0, c0), (n, n));
        assert!(block.iter().zip(lda.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    assert!((w - w.transpose()).amax() <= 1e-6);
    for (r0, rows, s_target) in [(0, n, report.s_cross), (n, n, report.s_cross), (2 * n, nu, report.s_uu)] {
        let b = w.view((r0, 2 * n), (rows, nu));
        assert!(b.min() >= -1e-6 && b.max() <= report.cap + 1e-6);
        assert!((b.sum() - s_target).abs() <= 1e-4 * s_target);
    }
    assert_eq!(report.cap, 3.0 / n as f64);
    assert_eq!(report.s_cross, n as f64);
}

#[test]
fn s_cospace_approaches_cospace_as_sigma_shrinks() {
    let s = SplitPlan::new(3, 10, 10, 0).draw(14);
    let cfg = SolverConfig { d: 5, ..Default::default() };
    let base = fit_cospace(&s.xh, &s.xm, &s.y, &cfg).unwrap().1.final_objective();
    let tiny = GraphParams { k: 5, sigma: 1e-3 };
    let (_, report) = fit_s_cospace(&s.xh, &s.xm, &s.y, &s.landmarks, &tiny, &cfg).unwrap();
    let n = s.y.len();
    assert!(report.graph.view((0, 2 * n), (n, s.landmarks.samples())).amax() < 1e-12);
    assert!((report.final_objective() - base).abs() <= 1e-3);
}

#[test]
fn variant_and_config_validation() {
    assert_eq!("s-cospace".parse::<Variant>().unwrap(), Variant::SCoSpace);
    assert_eq!("LeMA".to_ascii_lowercase().parse::<Variant>().unwrap(), Variant::Lema);
    assert!("glp".parse::<Variant>().is_err());
    assert_eq!(Variant::CoSpace.to_string(), "cospace");

    let s = SplitPlan::new(3, 5, 5, 0).draw(15);
    let dim = s.xh.features() + s.xm.features();
    for bad in [
        SolverConfig { d: dim + 1, ..Default::default() },
        SolverConfig { alpha: -1.0, ..Default::default() },
        SolverConfig { max_outer: 0, ..Default::default() },
        SolverConfig { cap: Some(0.0), ..Default::default() },
    ] {
        assert!(fit_cospace(&s.xh, &s.xm, &s.y, &bad).is_err());
    }
    // Mass s_scale·N cannot fit under cap when the cap is tiny.
    let tight = SolverConfig { d: 4, cap: Some(1e-6), ..Default::default() };
    assert!(fit_lema(&s.xh, &s.xm, &s.y, &s.landmarks, &tight).is_err());
    let graph = GraphParams::default();
    assert!(fit(Variant::Lema, &s.xh, &s.xm, &s.y, None, &graph, &SolverConfig::default()).is_err());
}

#[test]
fn non_convergence_is_flagged() {
    let s = SplitPlan::new(3, 10, 10, 0).draw(16);
    let cfg = SolverConfig { d: 5, max_outer: 1, ..Default::default() };
    let (model, report) = fit_lema(&s.xh, &s.xm, &s.y, &s.landmarks, &cfg).unwrap();
    assert!(!report.converged && !model.converged);
    assert_eq!(report.outer_iters, 1);
    assert_eq!(report.objective_trace.len(), 2);
}

#[test]
fn archive_round_trip() {
    let s = SplitPlan::new(3, 8, 8, 0).draw(17);
    let (mut model, _) = fit_lema(&s.xh, &s.xm, &s.y, &s.landmarks, &SolverConfig { d: 4, ..Default::default() }).unwrap();
    s.scaled.attach(&mut model);
    let bytes = write_model(&model);
    assert!(bytes.starts_with(ARCHIVE_MAGIC.as_bytes()));
    let back = read_model::<f64>(&bytes, Path::new("m")).unwrap();
    assert_eq!(back, model);
    assert_eq!(write_model(&back), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lema");
    save_model(&path, &model).unwrap();
    assert_eq!(load_model::<f64>(&path).unwrap(), model);

    assert!(read_model::<f64>(&bytes[..bytes.len() - 3], Path::new("m")).is_err());
    assert!(read_model::<f64>(b"not an archive\n", Path::new("m")).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(read_model::<f64>(&extra, Path::new("m")).is_err());
}
