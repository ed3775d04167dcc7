//! Dataset ingestion, label encoding, joint block assembly, landmark
//! selection and spectral degradation of HS cubes into MS.

pub(crate) mod io;
mod landmarks;
mod synth;

pub use io::{
    load_labels, load_matrix, read_csv, read_raw_f64, save_labels, save_matrix, write_csv,
    write_raw_f64, MatrixFormat,
};
pub use landmarks::{default_landmark_count, select_landmarks};
pub use synth::{gen_synthetic, simulate_ms, SrfBank, SyntheticData, SyntheticParams};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{check_finite, Mat};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Hs,
    Ms,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Hs => "hs",
            Modality::Ms => "ms",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "hsi" | "hyperspectral" => Ok(Modality::Hs),
            "ms" | "msi" | "multispectral" => Ok(Modality::Ms),
            other => Err(Error::InvalidArgument(format!("unknown modality '{other}'"))),
        }
    }
}

/// Feature × sample matrix for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityMatrix<T: Scalar> {
    pub values: Mat<T>,
    pub modality: Modality,
}

impl<T: Scalar> ModalityMatrix<T> {
    pub fn new(values: Mat<T>, modality: Modality) -> Result<Self> {
        check_finite(&values, "modality matrix")?;
        Ok(Self { values, modality })
    }

    pub fn hs(values: Mat<T>) -> Result<Self> {
        Self::new(values, Modality::Hs)
    }

    pub fn ms(values: Mat<T>) -> Result<Self> {
        Self::new(values, Modality::Ms)
    }

    pub fn features(&self) -> usize {
        self.values.nrows()
    }

    pub fn samples(&self) -> usize {
        self.values.ncols()
    }

    /// Columns `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_columns(idx),
            modality: self.modality,
        }
    }
}

/// 1-based class indices, one per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labels(Vec<usize>);

impl Labels {
    pub fn new(v: Vec<usize>) -> Result<Self> {
        if let Some(pos) = v.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!(
                "label at position {pos} is 0; classes are 1-based"
            )));
        }
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest class index present.
    pub fn num_classes(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Per-class sample counts, index `k-1` for class `k`.
    pub fn class_counts(&self, c: usize) -> Vec<usize> {
        let mut counts = vec![0; c];
        for &l in &self.0 {
            if l <= c {
                counts[l - 1] += 1;
            }
        }
        counts
    }

    /// Checks every class in `1..=c` appears at least once.
    pub fn check_covers(&self, c: usize) -> Result<()> {
        let counts = self.class_counts(c);
        if let Some(k) = counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidArgument(format!(
                "class {} has no training samples",
                k + 1
            )));
        }
        if let Some(&bad) = self.0.iter().find(|&&l| l > c) {
            return Err(Error::InvalidArgument(format!("label {bad} exceeds {c} classes")));
        }
        Ok(())
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self(idx.iter().map(|&i| self.0[i]).collect())
    }
}

/// One-hot label matrix, `c × n`, column `j` has a 1 in row `labels[j] - 1`.
pub fn one_hot<T: Scalar>(labels: &Labels, c: usize) -> Result<Mat<T>> {
    let mut y = Mat::zeros(c, labels.len());
    for (j, &l) in labels.as_slice().iter().enumerate() {
        if l == 0 || l > c {
            return Err(Error::InvalidArgument(format!(
                "label {l} at position {j} outside 1..={c}"
            )));
        }
        y[(l - 1, j)] = T::one();
    }
    Ok(y)
}

/// Block matrices of the joint problem.
///
/// `x_tilde = [X_H 0; 0 X_M]`, `x_tilde_prime = [X_H 0 0; 0 X_M X_U]`,
/// `y_tilde = [Y, Y]`.
#[derive(Debug, Clone)]
pub struct JointData<T: Scalar> {
    pub x_tilde: Mat<T>,
    pub x_tilde_prime: Mat<T>,
    pub y_tilde: Mat<T>,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub d_h: usize,
    pub d_m: usize,
}

impl<T: Scalar> JointData<T> {
    pub fn dim(&self) -> usize {
        self.d_h + self.d_m
    }
}

pub fn assemble_joint<T: Scalar>(
    xh: &ModalityMatrix<T>,
    xm: &ModalityMatrix<T>,
    y: &Mat<T>,
    xu: Option<&ModalityMatrix<T>>,
) -> Result<JointData<T>> {
    let n = xh.samples();
    if xm.samples() != n || y.ncols() != n {
        return Err(Error::Dimension(format!(
            "sample counts differ: HS {n}, MS {}, labels {}",
            xm.samples(),
            y.ncols()
        )));
    }
    let (d_h, d_m) = (xh.features(), xm.features());
    if let Some(u) = xu {
        if u.features() != d_m {
            return Err(Error::Dimension(format!(
                "unlabeled features {} differ from MS features {d_m}",
                u.features()
            )));
        }
    }
    let n_u = xu.map_or(0, |u| u.samples());

    let mut x_tilde = Mat::zeros(d_h + d_m, 2 * n);
    x_tilde.view_mut((0, 0), (d_h, n)).copy_from(&xh.values);
    x_tilde.view_mut((d_h, n), (d_m, n)).copy_from(&xm.values);

    let x_tilde_prime = match xu {
        Some(u) if n_u > 0 => {
            let mut xp = Mat::zeros(d_h + d_m, 2 * n + n_u);
            xp.view_mut((0, 0), (d_h + d_m, 2 * n)).copy_from(&x_tilde);
            xp.view_mut((d_h, 2 * n), (d_m, n_u)).copy_from(&u.values);
            xp
        }
        _ => x_tilde.clone(),
    };

    let mut y_tilde = Mat::zeros(y.nrows(), 2 * n);
    y_tilde.view_mut((0, 0), (y.nrows(), n)).copy_from(y);
    y_tilde.view_mut((0, n), (y.nrows(), n)).copy_from(y);

    Ok(JointData {
        x_tilde,
        x_tilde_prime,
        y_tilde,
        n_labeled: n,
        n_unlabeled: n_u,
        d_h,
        d_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    MinMaxPerFeature,
    None,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" | "minmax_per_feature" => Ok(Normalization::MinMaxPerFeature),
            "none" => Ok(Normalization::None),
            other => Err(Error::InvalidArgument(format!("unknown normalization '{other}'"))),
        }
    }
}

/// Per-feature min/max learned on one matrix and re-applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler<T: Scalar> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    /// Subtracted after range scaling; zero unless fitted with centering.
    pub shift: Vec<T>,
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn fit(x: &Mat<T>) -> Self {
        Self::fit_many(&[x])
    }

    /// Statistics over the column union of several matrices with equal rows.
    pub fn fit_many(xs: &[&Mat<T>]) -> Self {
        let rows = xs.first().map_or(0, |x| x.nrows());
        let mut lo = vec![T::max_value().unwrap_or(T::zero()); rows];
        let mut hi = vec![T::min_value().unwrap_or(T::zero()); rows];
        let mut seen = false;
        for x in xs {
            for j in 0..x.ncols() {
                seen = true;
                for i in 0..rows {
                    lo[i] = lo[i].min(x[(i, j)]);
                    hi[i] = hi[i].max(x[(i, j)]);
                }
            }
        }
        if !seen {
            lo.iter_mut().for_each(|v| *v = T::zero());
            hi.iter_mut().for_each(|v| *v = T::zero());
        }
        let shift = vec![T::zero(); rows];
        Self { lo, hi, shift }
    }

    /// Like [`fit_many`](Self::fit_many), then also removes the mean of the
    /// scaled union. The regression classifier has no intercept, so it needs
    /// centered inputs.
    pub fn fit_centered(xs: &[&Mat<T>]) -> Self {
        let mut sc = Self::fit_many(xs);
        let total: usize = xs.iter().map(|x| x.ncols()).sum();
        if total == 0 {
            return sc;
        }
        let mut mean = vec![T::zero(); sc.lo.len()];
        for x in xs {
            let scaled = sc.apply(x).expect("same feature count");
            for (i, m) in mean.iter_mut().enumerate() {
                *m += scaled.row(i).sum();
            }
        }
        let n = T::of_usize(total);
        sc.shift = mean.into_iter().map(|m| m / n).collect();
        sc
    }

    /// Maps feature `i` through `(x - lo_i) / (hi_i - lo_i) - shift_i`;
    /// constant features map to `0.5 - shift_i`.
    pub fn apply(&self, x: &Mat<T>) -> Result<Mat<T>> {
        if x.nrows() != self.lo.len() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, input has {}",
                self.lo.len(),
                x.nrows()
            )));
        }
        let half = T::of(0.5);
        let mut out = x.clone();
        for i in 0..x.nrows() {
            let span = self.hi[i] - self.lo[i];
            for j in 0..x.ncols() {
                let v = if span > T::zero() {
                    (x[(i, j)] - self.lo[i]) / span
                } else {
                    half
                };
                out[(i, j)] = v - self.shift[i];
            }
        }
        Ok(out)
    }
}

pub fn normalize<T: Scalar>(x: &ModalityMatrix<T>, mode: Normalization) -> ModalityMatrix<T> {
    match mode {
        Normalization::None => x.clone(),
        Normalization::MinMaxPerFeature => {
            let scaler = MinMaxScaler::fit(&x.values);
            ModalityMatrix {
                values: scaler.apply(&x.values).expect("scaler fitted on this matrix"),
                modality: x.modality,
            }
        }
    }
}
