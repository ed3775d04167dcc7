//! Landmark (cluster-center) selection for the unlabeled pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModalityMatrix;
use crate::error::{Error, Result};
use crate::numerics::Mat;
use crate::scalar::Scalar;

const MAX_LLOYD_ITERS: usize = 100;
const CENTER_TOL: f64 = 1e-6;

/// One unlabeled landmark per labeled sample unless overridden.
pub fn default_landmark_count(n_labeled: usize, override_count: Option<usize>) -> usize {
    override_count.unwrap_or(n_labeled)
}

fn sq_dist<T: Scalar>(x: &Mat<T>, i: usize, c: &Mat<T>, j: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..x.nrows() {
        let d = (x[(k, i)] - c[(k, j)]).as_f64();
        acc += d * d;
    }
    acc
}

/// `m` k-means centers of the pool columns: k-means++ seeding followed by at
/// most 100 Lloyd iterations, stopping once no center moves more than 1e-6.
pub fn select_landmarks<T: Scalar>(
    pool: &ModalityMatrix<T>,
    m: usize,
    seed: u64,
) -> Result<ModalityMatrix<T>> {
    let x = &pool.values;
    let n = x.ncols();
    if m == 0 {
        return Err(Error::InvalidArgument("landmark count must be positive".into()));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {m} landmarks from {n} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut chosen = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut best: Vec<f64> = (0..n).map(|i| sq_dist(x, i, x, first)).collect();
    while chosen.len() < m {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in best.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Remaining points coincide with chosen centers.
            (0..n).find(|&i| !taken[i]).expect("m <= n")
        };
        taken[next] = true;
        chosen.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(x, i, x, next));
        }
    }
    let mut centers = x.select_columns(&chosen);

    // Lloyd iterations.
    let mut assign = vec![0usize; n];
    for _ in 0..MAX_LLOYD_ITERS {
        for (i, a) in assign.iter_mut().enumerate() {
            let mut bj = 0;
            let mut bd = f64::INFINITY;
            for j in 0..m {
                let d = sq_dist(x, i, &centers, j);
                if d < bd {
                    bd = d;
                    bj = j;
                }
            }
            *a = bj;
        }
        let mut sums = Mat::<T>::zeros(x.nrows(), m);
        let mut counts = vec![0usize; m];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            let mut col = sums.column_mut(a);
            col += x.column(i);
        }
        let mut shift = 0.0f64;
        for j in 0..m {
            if counts[j] == 0 {
                continue;
            }
            let inv = T::one() / T::of_usize(counts[j]);
            for k in 0..x.nrows() {
                let v = sums[(k, j)] * inv;
                shift = shift.max((v - centers[(k, j)]).abs().as_f64());
                centers[(k, j)] = v;
            }
        }
        if shift < CENTER_TOL {
            break;
        }
    }
    ModalityMatrix::new(centers, pool.modality)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn all_points_are_their_own_centers() {
        let pool = ModalityMatrix::ms(dmatrix![0.0, 5.0, 9.0; 1.0, -2.0, 4.0]).unwrap();
        let c = select_landmarks(&pool, 3, 7).unwrap();
        let mut cols: Vec<(i64, i64)> = (0..3)
            .map(|j| (c.values[(0, j)] as i64, c.values[(1, j)] as i64))
            .collect();
        cols.sort();
        assert_eq!(cols, vec![(0, 1), (5, -2), (9, 4)]);
    }

    #[test]
    fn single_center_is_centroid() {
        let pool = ModalityMatrix::ms(dmatrix![0.0, 2.0, 4.0; 1.0, 1.0, 4.0]).unwrap();
        let c = select_landmarks(&pool, 1, 1).unwrap();
        assert!((c.values[(0, 0)] - 2.0f64).abs() < 1e-12);
        assert!((c.values[(1, 0)] - 2.0f64).abs() < 1e-12);
    }

    #[test]
    fn errors_and_defaults() {
        let pool = ModalityMatrix::ms(dmatrix![0.0, 1.0]).unwrap();
        assert!(select_landmarks(&pool, 0, 1).is_err());
        assert!(select_landmarks(&pool, 3, 1).is_err());
        assert_eq!(default_landmark_count(100, None), 100);
        assert_eq!(default_landmark_count(1, None), 1);
        assert_eq!(default_landmark_count(100, Some(40)), 40);
    }

    #[test]
    fn duplicate_points_do_not_stall_seeding() {
        let pool = ModalityMatrix::ms(dmatrix![1.0, 1.0, 1.0]).unwrap();
        let c = select_landmarks(&pool, 3, 3).unwrap();
        assert_eq!(c.values, dmatrix![1.0, 1.0, 1.0]);
    }
}
