#![allow(dead_code)]

use lema::numerics::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.random_range(lo..hi))
}

/// Random matrix with orthonormal rows, via Gram-Schmidt on Gaussian rows.
pub fn random_orthonormal_rows(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    assert!(r <= c);
    let mut q = gaussian(rng, r, c);
    for i in 0..r {
        for j in 0..i {
            let proj = q.row(i).dot(&q.row(j));
            let rj = q.row(j).into_owned();
            let mut ri = q.row_mut(i);
            ri -= rj * proj;
        }
        let n = q.row(i).norm();
        let mut ri = q.row_mut(i);
        ri /= n;
    }
    q
}

pub fn random_symmetric_nonneg(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Mat<f64> {
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                let v = rng.random::<f64>();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

/// Plain triple-loop product, independent of the matrix library's kernels.
pub fn matmul_loop(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Exact optimum of `min Σ c_i x_i` over `0 ≤ x ≤ cap_i, Σ x = s` (a fractional
/// knapsack: fill the cheapest entries first).
pub fn greedy_lp(costs: &[f64], caps: &[f64], s: f64) -> f64 {
    let mut idx: Vec<usize> = (0..costs.len()).collect();
    idx.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap());
    let (mut rem, mut obj) = (s, 0.0);
    for i in idx {
        let take = rem.min(caps[i]);
        obj += take * costs[i];
        rem -= take;
        if rem <= 0.0 {
            break;
        }
    }
    assert!(rem <= 1e-12, "LP infeasible");
    obj
}

use lema::data::{gen_synthetic, Labels, ModalityMatrix, SrfBank, SyntheticParams};
use lema::pipeline::{prepare_landmarks, ScaledInputs};

/// Contiguous bands of the given widths.
pub fn banks(widths: &[usize]) -> SrfBank {
    let mut bands = Vec::new();
    let mut lo = 1;
    for &w in widths {
        bands.push((lo, lo + w - 1));
        lo += w;
    }
    SrfBank { bands, weights: None }
}

/// A labeled/pool/test split of one synthetic draw, scaled for training,
/// with landmarks picked from the pool.
pub struct Split {
    pub xh: ModalityMatrix<f64>,
    pub xm: ModalityMatrix<f64>,
    pub y: Labels,
    pub landmarks: ModalityMatrix<f64>,
    /// Test MS samples after the training scaler.
    pub xt: ModalityMatrix<f64>,
    pub yt: Labels,
    /// Unscaled labeled and test MS samples.
    pub raw_xm: Mat<f64>,
    pub raw_xt: Mat<f64>,
    pub scaled: ScaledInputs<f64>,
}

pub struct SplitPlan {
    pub classes: usize,
    pub labeled: usize,
    pub pool: usize,
    pub test: usize,
    pub landmarks: Option<usize>,
    pub widths: Vec<usize>,
    pub sep: f64,
    pub noise: f64,
}

impl SplitPlan {
    /// Counts are per class.
    pub fn new(classes: usize, labeled: usize, pool: usize, test: usize) -> Self {
        Self {
            classes,
            labeled,
            pool,
            test,
            landmarks: None,
            widths: vec![1, 2, 4, 8, 15],
            sep: 4.0,
            noise: 0.05,
        }
    }

    pub fn draw(&self, seed: u64) -> Split {
        let d_h = self.widths.iter().sum();
        let params = SyntheticParams {
            classes: self.classes,
            n_per_class: self.labeled + self.pool + self.test,
            d_h,
            srf: banks(&self.widths),
            sep: self.sep,
            noise_std: self.noise,
            seed,
        };
        let data = gen_synthetic::<f64>(&params).unwrap();
        let c = self.classes;
        let lab: Vec<usize> = (0..c * self.labeled).collect();
        let pool: Vec<usize> = (c * self.labeled..c * (self.labeled + self.pool)).collect();
        let test: Vec<usize> = (c * (self.labeled + self.pool)..data.labels.len()).collect();
        let pool_xm = data.xm.select(&pool);
        let scaled = ScaledInputs::fit(&data.xh.select(&lab), &data.xm.select(&lab), Some(&pool_xm)).unwrap();
        let scaled_pool = scaled.xu.clone().unwrap();
        let landmarks = if scaled_pool.samples() == 0 {
            scaled_pool
        } else {
            prepare_landmarks(&scaled_pool, lab.len(), self.landmarks, seed).unwrap()
        };
        let raw_xt = data.xm.select(&test).values;
        let xt = ModalityMatrix::ms(scaled.scaler_m.apply(&raw_xt).unwrap()).unwrap();
        Split {
            xh: scaled.xh.clone(),
            xm: scaled.xm.clone(),
            y: data.labels.select(&lab),
            landmarks,
            xt,
            yt: data.labels.select(&test),
            raw_xm: data.xm.select(&lab).values,
            raw_xt,
            scaled,
        }
    }
}

/// Nearest class mean, ties to the lower class.
pub fn nearest_centroid(train: &Mat<f64>, labels: &Labels, test: &Mat<f64>) -> Labels {
    let c = labels.num_classes();
    let mut sums = Mat::<f64>::zeros(train.nrows(), c);
    let mut counts = vec![0usize; c];
    for (j, &l) in labels.as_slice().iter().enumerate() {
        counts[l - 1] += 1;
        for i in 0..train.nrows() {
            sums[(i, l - 1)] += train[(i, j)];
        }
    }
    let pred = (0..test.ncols())
        .map(|j| {
            let mut best = (f64::INFINITY, 0);
            for k in 0..c {
                let d: f64 = (0..test.nrows())
                    .map(|i| (test[(i, j)] - sums[(i, k)] / counts[k] as f64).powi(2))
                    .sum();
                if d < best.0 {
                    best = (d, k + 1);
                }
            }
            best.1
        })
        .collect();
    Labels::new(pred).unwrap()
}

pub fn accuracy(truth: &Labels, pred: &Labels) -> f64 {
    let hits = truth.as_slice().iter().zip(pred.as_slice()).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
