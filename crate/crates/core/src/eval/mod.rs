//! Projection, classification, accuracy metrics and cross-validated grid
//! search.

mod cv;
mod metrics;

pub use cv::{cross_validate, stratified_folds, CellScore, CvGrid, CvResult};
pub use metrics::{metrics, ConfusionMatrix, EvaluationReport};

use crate::data::{Labels, Modality, ModalityMatrix};
use crate::error::{Error, Result};
use crate::numerics::{pairwise_sq_dist_cross, Mat};
use crate::pipeline::AlignmentModel;
use crate::scalar::Scalar;

/// Picks `Θ_H` or `Θ_M` by the modality tag and returns `Θ·x` (`d × samples`).
pub fn project<T: Scalar>(model: &AlignmentModel<T>, x: &ModalityMatrix<T>) -> Result<Mat<T>> {
    Ok(theta_for(model, x)? * &x.values)
}

fn theta_for<'a, T: Scalar>(model: &'a AlignmentModel<T>, x: &ModalityMatrix<T>) -> Result<&'a Mat<T>> {
    let theta = match x.modality {
        Modality::Hs => &model.theta_h,
        Modality::Ms => &model.theta_m,
    };
    if theta.ncols() != x.features() {
        return Err(Error::Dimension(format!(
            "{} input has {} features, model expects {} (HS {}, MS {})",
            x.modality,
            x.features(),
            theta.ncols(),
            model.theta_h.ncols(),
            model.theta_m.ncols()
        )));
    }
    Ok(theta)
}

/// Re-applies the training scaler of the matching modality, if the model has one.
pub fn prepare_input<T: Scalar>(model: &AlignmentModel<T>, x: &ModalityMatrix<T>) -> Result<ModalityMatrix<T>> {
    theta_for(model, x)?;
    let scaler = match x.modality {
        Modality::Hs => &model.scaler_h,
        Modality::Ms => &model.scaler_m,
    };
    match scaler {
        Some(s) => ModalityMatrix::new(s.apply(&x.values)?, x.modality),
        None => Ok(x.clone()),
    }
}

/// Index of the largest entry of each column, lowest index on ties.
fn argmax_columns<T: Scalar>(scores: &Mat<T>) -> Vec<usize> {
    (0..scores.ncols())
        .map(|j| {
            let col = scores.column(j);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i] > col[best] {
                    best = i;
                }
            }
            best + 1
        })
        .collect()
}

/// `argmax_k (P Θ x)_k` per sample.
pub fn predict_regression<T: Scalar>(model: &AlignmentModel<T>, x: &ModalityMatrix<T>) -> Result<Labels> {
    let h = project(model, x)?;
    if x.samples() == 0 {
        return Labels::new(Vec::new());
    }
    Labels::new(argmax_columns(&(&model.p * h)))
}

/// Majority vote over the `k` nearest training columns in the subspace
/// (distance ties by training index, vote ties toward the lowest class).
pub fn predict_knn<T: Scalar>(
    model: &AlignmentModel<T>,
    x: &ModalityMatrix<T>,
    train_features: &Mat<T>,
    train_labels: &Labels,
    k: usize,
) -> Result<Labels> {
    let n_train = train_features.ncols();
    if n_train == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train_labels.len() != n_train {
        return Err(Error::Dimension(format!(
            "{n_train} training columns, {} labels",
            train_labels.len()
        )));
    }
    if k == 0 || k > n_train {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={n_train}, got {k}")));
    }
    let h = project(model, x)?;
    if h.ncols() == 0 {
        return Labels::new(Vec::new());
    }
    let z = pairwise_sq_dist_cross(&h, train_features)?;
    let c = train_labels.num_classes();
    let tl = train_labels.as_slice();
    let mut out = Vec::with_capacity(h.ncols());
    for i in 0..h.ncols() {
        let mut idx: Vec<usize> = (0..n_train).collect();
        idx.sort_by(|&a, &b| {
            z[(i, a)]
                .partial_cmp(&z[(i, b)])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut votes = vec![0usize; c];
        for &j in idx.iter().take(k) {
            votes[tl[j] - 1] += 1;
        }
        let mut best = 0;
        for (cls, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = cls;
            }
        }
        out.push(best + 1);
    }
    Labels::new(out)
}
