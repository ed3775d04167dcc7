mod common;

use common::*;
use lema::data::{Labels, ModalityMatrix};
use lema::eval::*;
use lema::numerics::Mat;
use lema::pipeline::{AlignmentModel, GraphParams, SolverConfig, Variant};
use proptest::prelude::*;

/// A hand-built model with identity projections so predictions are easy to
/// reason about.
fn model(theta_h: Mat<f64>, theta_m: Mat<f64>, p: Mat<f64>) -> AlignmentModel<f64> {
    AlignmentModel {
        n_classes: p.nrows(),
        theta_h,
        theta_m,
        p,
        variant: Variant::CoSpace,
        config: SolverConfig::default(),
        objective_trace: vec![],
        outer_iters: 0,
        converged: true,
        scaler_h: None,
        scaler_m: None,
    }
}

fn labels(v: &[usize]) -> Labels {
    Labels::new(v.to_vec()).unwrap()
}

#[test]
fn projection_picks_the_modality() {
    let m = model(Mat::identity(2, 3), Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), Mat::identity(2, 2));
    let xm = ModalityMatrix::ms(Mat::from_row_slice(2, 1, &[3.0, 4.0])).unwrap();
    assert_eq!(project(&m, &xm).unwrap(), Mat::from_row_slice(2, 1, &[4.0, 3.0]));
    let xh = ModalityMatrix::hs(Mat::zeros(3, 4)).unwrap();
    assert_eq!(project(&m, &xh).unwrap(), Mat::zeros(2, 4));
    let wrong = ModalityMatrix::hs(Mat::zeros(2, 1)).unwrap();
    assert!(project(&m, &wrong).is_err());
}

#[test]
fn regression_prediction_rules() {
    let m = model(Mat::identity(3, 3), Mat::identity(3, 3), Mat::identity(3, 3));
    let x = ModalityMatrix::ms(Mat::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
    // Columns: one-hot class 2; tie between 1 and 2; tie between 1 and 3.
    assert_eq!(predict_regression(&m, &x).unwrap(), labels(&[2, 1, 1]));
    let empty = ModalityMatrix::ms(Mat::zeros(3, 0)).unwrap();
    assert!(predict_regression(&m, &empty).unwrap().is_empty());
}

/// Votes over a full sort of distances.
fn knn_oracle(train: &Mat<f64>, tl: &Labels, q: &Mat<f64>, k: usize) -> Labels {
    let c = tl.num_classes();
    let out = (0..q.ncols())
        .map(|i| {
            let mut d: Vec<(f64, usize)> =
                (0..train.ncols()).map(|j| ((q.column(i) - train.column(j)).norm_squared(), j)).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut votes = vec![0; c];
            for &(_, j) in d.iter().take(k) {
                votes[tl.as_slice()[j] - 1] += 1;
            }
            let top = *votes.iter().max().unwrap();
            votes.iter().position(|&v| v == top).unwrap() + 1
        })
        .collect();
    Labels::new(out).unwrap()
}

#[test]
fn knn_prediction() {
    let m = model(Mat::identity(2, 2), Mat::identity(2, 2), Mat::identity(2, 2));
    let train = Mat::from_row_slice(2, 4, &[0.0, 1.0, 5.0, 6.0, 0.0, 0.0, 0.0, 0.0]);
    let tl = labels(&[1, 1, 2, 2]);
    let q = ModalityMatrix::ms(Mat::from_row_slice(2, 1, &[5.0, 0.0])).unwrap();
    assert_eq!(predict_knn(&m, &q, &train, &tl, 1).unwrap(), labels(&[2]));
    assert_eq!(predict_knn(&m, &q, &train, &tl, 4).unwrap(), labels(&[1]));
    assert!(predict_knn(&m, &q, &train, &tl, 0).is_err());
    assert!(predict_knn(&m, &q, &train, &tl, 5).is_err());
    assert!(predict_knn(&m, &q, &Mat::zeros(2, 0), &labels(&[]), 1).is_err());

    let mut r = rng(9);
    for _ in 0..20 {
        let train = gaussian(&mut r, 2, 15);
        let tl = Labels::new((0..15).map(|i| i % 3 + 1).collect()).unwrap();
        let q = gaussian(&mut r, 2, 10);
        let got = predict_knn(&m, &ModalityMatrix::ms(q.clone()).unwrap(), &train, &tl, 5).unwrap();
        assert_eq!(got, knn_oracle(&train, &tl, &q, 5));
    }
}

fn report(rows: Vec<Vec<u64>>) -> EvaluationReport {
    metrics(&ConfusionMatrix::from_counts(rows).unwrap()).unwrap()
}

#[test]
fn metric_fixtures() {
    let r = report(vec![vec![50, 0], vec![0, 50]]);
    assert_eq!((r.oa, r.aa, r.kappa), (1.0, 1.0, 1.0));
    let r = report(vec![vec![25, 25], vec![25, 25]]);
    assert_eq!((r.oa, r.kappa), (0.5, 0.0));
    let r = report(vec![vec![40, 10], vec![20, 30]]);
    assert_eq!((r.oa, r.aa, r.kappa), (0.7, 0.7, 0.4));
    assert_eq!(r.per_class, vec![Some(0.8), Some(0.6)]);
    let text = r.to_text();
    assert!(text.starts_with("oa=0.7\naa=0.7\nkappa=0.4\nclass_1=0.8\nclass_2=0.6\n"));
    assert_eq!(ConfusionMatrix::from_counts(vec![vec![40, 10], vec![20, 30]]).unwrap().to_csv(), "40,10\n20,30\n");

    // An empty row is skipped by AA.
    let r = report(vec![vec![5, 0, 0], vec![0, 0, 0], vec![1, 0, 4]]);
    assert_eq!(r.per_class[1], None);
    assert!((r.aa - 0.9).abs() < 1e-15);
    // Everything in one class: chance agreement is total.
    assert_eq!(report(vec![vec![7, 0], vec![0, 0]]).kappa, 1.0);
    assert!(ConfusionMatrix::from_counts(vec![vec![0]]).and_then(|c| metrics(&c)).is_err());
}

#[test]
fn confusion_from_labels() {
    let cm = ConfusionMatrix::from_labels(&labels(&[1, 2, 2]), &labels(&[1, 1, 2]), 2).unwrap();
    assert_eq!((cm.count(1, 1), cm.count(2, 1), cm.count(2, 2)), (1, 1, 1));
    assert_eq!(cm.total(), 3);
    assert!(ConfusionMatrix::from_labels(&labels(&[1]), &labels(&[1, 2]), 2).is_err());
}

fn counts() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (1usize..5).prop_flat_map(|c| proptest::collection::vec(proptest::collection::vec(0u64..20, c), c))
}

proptest! {
    #[test]
    fn metric_ranges(rows in counts()) {
        let total: u64 = rows.iter().flatten().sum();
        prop_assume!(total > 0);
        let diagonal = rows.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &v)| i == j || v == 0));
        let r = report(rows);
        prop_assert!((0.0..=1.0).contains(&r.oa) && (0.0..=1.0).contains(&r.aa));
        prop_assert!((-1.0..=1.0).contains(&r.kappa));
        prop_assert_eq!(r.kappa == 1.0, diagonal);
    }

    #[test]
    fn equal_rows_with_uniform_recall_give_aa_equal_oa(c in 2usize..5, n in 1u64..10, hit in 0u64..10) {
        let hit = hit.min(n);
        let rows: Vec<Vec<u64>> = (0..c)
            .map(|i| (0..c).map(|j| if i == j { hit } else if j == (i + 1) % c { n - hit } else { 0 }).collect())
            .collect();
        let r = report(rows);
        prop_assert!((r.aa - r.oa).abs() < 1e-15);
    }

    #[test]
    fn argmax_ignores_positive_scaling(seed in 0u64..500, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, 3, 6);
        let p = gaussian(&mut r, 3, 3);
        let a = model(Mat::identity(3, 3), Mat::identity(3, 3), p.clone());
        let b = model(Mat::identity(3, 3), Mat::identity(3, 3), p * scale);
        let x = ModalityMatrix::ms(x).unwrap();
        prop_assert_eq!(predict_regression(&a, &x).unwrap(), predict_regression(&b, &x).unwrap());
    }

    #[test]
    fn folds_partition_every_sample(v in proptest::collection::vec(1usize..4, 12..40), folds in 2usize..6, seed in 0u64..100) {
        let labels = Labels::new(v).unwrap();
        let a = stratified_folds(&labels, folds, seed).unwrap();
        prop_assert_eq!(&a, &stratified_folds(&labels, folds, seed).unwrap());
        prop_assert_eq!(a.len(), labels.len());
        prop_assert!(a.iter().all(|&f| f < folds));
    }
}

#[test]
fn cross_validation_selection() {
    let s = SplitPlan { sep: 8.0, ..SplitPlan::new(3, 8, 0, 0) }.draw(21);
    let base = SolverConfig { d: 4, ..Default::default() };
    let graph = GraphParams::default();
    let one = CvGrid { alphas: vec![0.1], betas: vec![0.1], dims: vec![4], folds: 3 };
    let r = cross_validate(&s.xh, &s.xm, &s.y, None, &one, Variant::CoSpace, &graph, &base, 1).unwrap();
    assert_eq!(r.scores.len(), 1);
    assert_eq!((r.best.alpha, r.best.beta, r.best.d), (0.1, 0.1, 4));
    assert_eq!(r.to_csv().lines().count(), 2);

    // Duplicated values tie exactly, so the smaller d wins.
    let dup = CvGrid { alphas: vec![0.1], betas: vec![0.1], dims: vec![4, 4, 3], folds: 3 };
    let r = cross_validate(&s.xh, &s.xm, &s.y, None, &dup, Variant::CoSpace, &graph, &base, 2).unwrap();
    assert_eq!(r.scores[0], r.scores[1]);
    if r.scores[2].mean_oa >= r.scores[0].mean_oa {
        assert_eq!(r.best.d, 3);
    }

    let two = CvGrid { alphas: vec![0.1], betas: vec![0.1, 100.0], dims: vec![4], folds: 3 };
    let r = cross_validate(&s.xh, &s.xm, &s.y, None, &two, Variant::CoSpace, &graph, &base, 1).unwrap();
    assert!(r.scores[0].mean_oa > r.scores[1].mean_oa + 0.05, "{:?}", r.scores);
    assert_eq!(r.best.beta, 0.1);
    let again = cross_validate(&s.xh, &s.xm, &s.y, None, &two, Variant::CoSpace, &graph, &base, 2).unwrap();
    assert_eq!(again.scores, r.scores);
}
