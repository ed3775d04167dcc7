mod common;

use common::*;
use lema::numerics::*;
use proptest::prelude::*;

#[test]
fn svd_reconstructs_random_matrices() {
    let mut r = rng(1);
    for (m, n) in [(4, 3), (3, 4), (1, 7), (50, 50), (20, 35)] {
        let a = gaussian(&mut r, m, n);
        let svd = svd_thin(&a).unwrap();
        let err = (svd.reconstruct() - &a).norm() / a.norm();
        assert!(err <= 1e-10, "{m}x{n}: {err}");
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]) && svd.s.iter().all(|&s| s >= 0.0));
    }
    let d = svd_thin(&Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0])).unwrap();
    assert_eq!(d.s, vec![3.0, 2.0]);
}

#[test]
fn solve_right_random_spd() {
    let mut r = rng(2);
    for n in [1, 3, 8] {
        let g = gaussian(&mut r, n, n + 2);
        let a = &g * g.transpose() + Mat::identity(n, n) * 0.1;
        let b = gaussian(&mut r, 4, n);
        let x = solve_right(&a, &b).unwrap();
        assert!((matmul_loop(&x, &a) - &b).norm() <= 1e-8 * b.norm());
    }
    let b = gaussian(&mut r, 2, 3);
    assert_eq!(solve_right(&Mat::identity(3, 3), &b).unwrap(), b);
    let half = solve_right(&(Mat::identity(2, 2) * 2.0), &Mat::identity(2, 2)).unwrap();
    assert!((half - Mat::identity(2, 2) * 0.5).amax() <= 1e-15);
}

#[test]
fn distances_match_double_loop() {
    let mut r = rng(3);
    let (a, b) = (gaussian(&mut r, 3, 5), gaussian(&mut r, 3, 4));
    let z = pairwise_sq_dist(&a);
    let zc = pairwise_sq_dist_cross(&a, &b).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let d: f64 = (0..3).map(|k| (a[(k, i)] - a[(k, j)]).powi(2)).sum();
            assert!((z[(i, j)] - d).abs() <= 1e-12);
        }
        for j in 0..4 {
            let d: f64 = (0..3).map(|k| (a[(k, i)] - b[(k, j)]).powi(2)).sum();
            assert!((zc[(i, j)] - d).abs() <= 1e-12);
        }
    }
    assert_eq!(pairwise_sq_dist_cross(&a, &a).unwrap(), z);
    let hand = pairwise_sq_dist_cross(
        &Mat::from_row_slice(2, 1, &[0.0, 0.0]),
        &Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
    )
    .unwrap();
    assert_eq!(hand, Mat::from_row_slice(1, 2, &[1.0, 4.0]));
    assert!(pairwise_sq_dist_cross(&a, &gaussian(&mut r, 2, 2)).is_err());
}

#[test]
fn prox_hand_cases() {
    let v = Mat::from_row_slice(1, 3, &[3.0, -0.5, -3.0]);
    let t = Mat::from_row_slice(1, 3, &[1.0, 1.0, 2.0]);
    assert_eq!(soft_threshold(&v, &t).unwrap(), Mat::from_row_slice(1, 3, &[2.0, 0.0, -1.0]));
    assert!(soft_threshold(&v, &(-t)).is_err());
    let p = project_sum(&Mat::from_row_slice(1, 2, &[2.0, 0.0]), 1.0);
    assert_eq!(p, Mat::from_row_slice(1, 2, &[1.5, -0.5]));
    let fixed = Mat::from_row_slice(1, 2, &[0.25, 0.75]);
    assert_eq!(project_sum(&fixed, 1.0), fixed);
    let b = project_box(&Mat::from_row_slice(1, 3, &[1.7, -0.2, 0.3]), 0.0, 0.5).unwrap();
    assert_eq!(b, Mat::from_row_slice(1, 3, &[0.5, 0.0, 0.3]));
    assert!(project_box(&b, 1.0, 0.0).is_err());
}

#[test]
fn nearest_orthonormal_cases() {
    let d = nearest_orthonormal(&Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0])).unwrap();
    assert!((d - Mat::identity(2, 2)).norm() < 1e-12);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let rot = Mat::from_row_slice(2, 2, &[c, -s, s, c]);
    assert!((nearest_orthonormal(&rot).unwrap() - &rot).norm() < 1e-12);
    assert!(nearest_orthonormal(&Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).is_err());
}

fn small_matrix() -> impl Strategy<Value = Mat<f64>> {
    (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| Mat::from_vec(r, c, v))
    })
}

proptest! {
    #[test]
    fn project_sum_is_idempotent(v in small_matrix(), s in -5.0f64..5.0) {
        let once = project_sum(&v, s);
        prop_assert_eq!(project_sum(&once, s), once);
    }

    #[test]
    fn pairwise_is_symmetric_with_zero_diagonal(h in small_matrix()) {
        let z = pairwise_sq_dist(&h);
        prop_assert_eq!(z.transpose(), z.clone());
        prop_assert!((0..z.nrows()).all(|i| z[(i, i)] == 0.0));
        prop_assert!(z.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn nearest_orthonormal_has_orthonormal_rows(a in small_matrix()) {
        prop_assume!(a.nrows() <= a.ncols());
        prop_assume!(svd_thin(&a).unwrap().s.iter().all(|&s| s > 1e-6));
        let g = nearest_orthonormal(&a).unwrap();
        prop_assert!((&g * g.transpose() - Mat::identity(a.nrows(), a.nrows())).norm() <= 1e-10);
    }

    #[test]
    fn soft_threshold_is_the_prox(v in -10.0f64..10.0, t in 0.0f64..5.0, x in -10.0f64..10.0) {
        let out = soft_threshold(&Mat::from_element(1, 1, v), &Mat::from_element(1, 1, t)).unwrap()[0];
        let f = |x: f64| t * x.abs() + 0.5 * (x - v).powi(2);
        prop_assert!(f(out) <= f(x) + 1e-12);
    }
}
