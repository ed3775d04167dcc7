use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{predict_regression, ConfusionMatrix};
use crate::data::{Labels, ModalityMatrix};
use crate::error::{Error, Result};
use crate::pipeline::{fit, GraphParams, SolverConfig, Variant};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, Stream};

/// Parameter grid searched by [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid<T> {
    pub alphas: Vec<T>,
    pub betas: Vec<T>,
    pub dims: Vec<usize>,
    pub folds: usize,
}

impl<T: Scalar> Default for CvGrid<T> {
    fn default() -> Self {
        let decades: Vec<T> = [1e-2, 1e-1, 1.0, 1e1, 1e2].iter().map(|&v| T::of(v)).collect();
        Self {
            alphas: decades.clone(),
            betas: decades,
            dims: vec![10, 20, 30, 40, 50],
            folds: 10,
        }
    }
}

impl<T: Scalar> CvGrid<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.betas.is_empty() || self.dims.is_empty() {
            return Err(Error::InvalidArgument("grid lists must be non-empty".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }

    /// Cells in row-major order over (alpha, beta, d).
    fn cells(&self) -> Vec<(T, T, usize)> {
        let mut out = Vec::new();
        for &a in &self.alphas {
            for &b in &self.betas {
                for &d in &self.dims {
                    out.push((a, b, d));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore<T> {
    pub alpha: T,
    pub beta: T,
    pub d: usize,
    pub mean_oa: f64,
}

#[derive(Debug, Clone)]
pub struct CvResult<T: Scalar> {
    pub best: SolverConfig<T>,
    /// Evaluated cells in grid order. Cells with `d` above the joint
    /// dimension are left out.
    pub scores: Vec<CellScore<T>>,
}

impl<T: Scalar> CvResult<T> {
    /// `alpha,beta,d,mean_oa` table with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,beta,d,mean_oa\n");
        for c in &self.scores {
            s.push_str(&format!(
                "{:?},{:?},{},{:?}\n",
                c.alpha.to_f64().unwrap_or(f64::NAN),
                c.beta.to_f64().unwrap_or(f64::NAN),
                c.d,
                c.mean_oa
            ));
        }
        s
    }
}

/// Fold index (`0..folds`) per sample. Each class is shuffled and dealt
/// round-robin; if some class has fewer members than folds, the whole set is
/// dealt without stratification.
pub fn stratified_folds(labels: &Labels, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {folds} must lie in 2..={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Folds));
    let counts = labels.class_counts(labels.num_classes());
    let mut groups: Vec<Vec<usize>> = if counts.iter().any(|&c| c > 0 && c < folds) {
        log::warn!("a class has fewer than {folds} samples, folds are not stratified");
        vec![(0..n).collect()]
    } else {
        let mut g = vec![Vec::new(); counts.len()];
        for (i, &l) in labels.as_slice().iter().enumerate() {
            g[l - 1].push(i);
        }
        g
    };
    let mut assign = vec![0; n];
    let mut next = 0;
    for group in &mut groups {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            assign[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assign)
}

/// Mean held-out OA per grid cell, scoring MS predictions on the held-out
/// fold. `xu` is passed unchanged to every fit. Ties on OA go to smaller `d`,
/// then smaller beta, then smaller alpha. Cells are evaluated on a pool of
/// `jobs` threads; results do not depend on `jobs`.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate<T: Scalar>(
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    labels: &Labels,
    xu: Option<&ModalityMatrix<T>>,
    grid: &CvGrid<T>,
    variant: Variant,
    graph: &GraphParams<T>,
    base: &SolverConfig<T>,
    jobs: usize,
) -> Result<CvResult<T>> {
    grid.validate()?;
    let dim = xh.features() + xm.features();
    let assign = stratified_folds(labels, grid.folds, base.seed)?;
    let cells: Vec<(T, T, usize)> = grid.cells().into_iter().filter(|c| c.2 <= dim).collect();
    if cells.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "every grid dimension exceeds the joint dimension {dim}"
        )));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..grid.folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| assign[i] == f);
            (train, test)
        })
        .filter(|(_, test)| !test.is_empty())
        .collect();

    let score_cell = |&(alpha, beta, d): &(T, T, usize)| -> Result<CellScore<T>> {
        let mut config = base.clone();
        config.alpha = alpha;
        config.beta = beta;
        config.d = d;
        let mut sum = 0.0;
        for (train, test) in &splits {
            let y_train = labels.select(train);
            let (model, _) = fit(variant, &xh.select(train), &xm.select(train), &y_train, xu, graph, &config)?;
            let y_test = labels.select(test);
            let pred = predict_regression(&model, &xm.select(test))?;
            let cm = ConfusionMatrix::from_labels(&y_test, &pred, labels.num_classes())?;
            sum += super::metrics(&cm)?.oa;
        }
        Ok(CellScore { alpha, beta, d, mean_oa: sum / splits.len() as f64 })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let scores: Vec<CellScore<T>> = pool.install(|| cells.par_iter().map(score_cell).collect::<Result<_>>())?;

    let better = |a: &CellScore<T>, b: &CellScore<T>| {
        a.mean_oa > b.mean_oa
            || (a.mean_oa == b.mean_oa
                && (a.d, a.beta, a.alpha).partial_cmp(&(b.d, b.beta, b.alpha)) == Some(std::cmp::Ordering::Less))
    };
    let mut best = &scores[0];
    for s in &scores[1..] {
        if better(s, best) {
            best = s;
        }
    }
    let mut config = base.clone();
    config.alpha = best.alpha;
    config.beta = best.beta;
    config.d = best.d;
    Ok(CvResult { best: config, scores })
}
