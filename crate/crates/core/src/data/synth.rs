//! Spectral degradation (HS → MS through band response filters) and a
//! Gaussian-cluster generator for desk-scale experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Labels, Modality, ModalityMatrix};
use crate::error::{Error, Result};
use crate::numerics::Mat;
use crate::scalar::Scalar;

/// Spectral response filters: each output band averages an inclusive, 1-based
/// range of HS bands, optionally with per-band weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SrfBank {
    pub bands: Vec<(usize, usize)>,
    pub weights: Option<Vec<Vec<f64>>>,
}

impl SrfBank {
    /// `n_bands` contiguous ranges of (nearly) equal width with uniform weights.
    pub fn uniform(d_h: usize, n_bands: usize) -> Result<Self> {
        if n_bands == 0 || n_bands > d_h {
            return Err(Error::InvalidArgument(format!(
                "cannot split {d_h} HS bands into {n_bands} MS bands"
            )));
        }
        let bands = (0..n_bands)
            .map(|b| (b * d_h / n_bands + 1, (b + 1) * d_h / n_bands))
            .collect();
        Ok(Self { bands, weights: None })
    }

    pub fn n_out(&self) -> usize {
        self.bands.len()
    }

    pub fn validate(&self, d_h: usize) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::InvalidArgument("SRF bank has no bands".into()));
        }
        for (b, &(lo, hi)) in self.bands.iter().enumerate() {
            if lo == 0 || lo > hi || hi > d_h {
                return Err(Error::InvalidArgument(format!(
                    "band {b} range {lo}..{hi} outside 1..{d_h}"
                )));
            }
        }
        if let Some(ws) = &self.weights {
            if ws.len() != self.bands.len() {
                return Err(Error::InvalidArgument("one weight list per band required".into()));
            }
            for (b, (w, &(lo, hi))) in ws.iter().zip(&self.bands).enumerate() {
                if w.len() != hi - lo + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "band {b} has {} weights for {} HS bands",
                        w.len(),
                        hi - lo + 1
                    )));
                }
                if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "band {b} weights must be non-negative and sum to 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `n_out × d_h` filter matrix.
    pub fn matrix<T: Scalar>(&self, d_h: usize) -> Result<Mat<T>> {
        self.validate(d_h)?;
        let mut f = Mat::zeros(self.n_out(), d_h);
        for (b, &(lo, hi)) in self.bands.iter().enumerate() {
            let width = hi - lo + 1;
            for (k, band) in (lo - 1..hi).enumerate() {
                f[(b, band)] = match &self.weights {
                    Some(ws) => T::of(ws[b][k]),
                    None => T::one() / T::of_usize(width),
                };
            }
        }
        Ok(f)
    }
}

/// Degrades HS columns into MS bands, adding i.i.d. Gaussian noise of standard
/// deviation `noise_std`.
pub fn simulate_ms<T: Scalar>(
    xh: &ModalityMatrix<T>,
    srf: &SrfBank,
    noise_std: f64,
    seed: u64,
) -> Result<ModalityMatrix<T>> {
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidArgument("noise_std must be non-negative".into()));
    }
    let filter = srf.matrix::<T>(xh.features())?;
    let mut xm = filter * &xh.values;
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Column-major fill keeps the draw order independent of the shape API.
        for v in xm.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += T::of(noise_std * z);
        }
    }
    ModalityMatrix::new(xm, Modality::Ms)
}

#[derive(Debug, Clone)]
pub struct SyntheticParams {
    pub classes: usize,
    pub n_per_class: usize,
    pub d_h: usize,
    pub srf: SrfBank,
    /// Euclidean distance between every pair of class means.
    pub sep: f64,
    /// Sensor noise added to the MS bands.
    pub noise_std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticData<T: Scalar> {
    pub xh: ModalityMatrix<T>,
    pub xm: ModalityMatrix<T>,
    pub labels: Labels,
}

/// Paired HS/MS samples from `classes` unit-variance Gaussian clusters in
/// `d_h` dimensions whose means are pairwise `sep` apart. Samples are
/// interleaved by class: sample `i` belongs to class `i % classes + 1`.
pub fn gen_synthetic<T: Scalar>(p: &SyntheticParams) -> Result<SyntheticData<T>> {
    if p.classes < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    if p.classes > p.d_h {
        return Err(Error::InvalidArgument(format!(
            "{} classes need at least as many HS bands, got {}",
            p.classes, p.d_h
        )));
    }
    if p.srf.n_out() > p.d_h {
        return Err(Error::InvalidArgument("more MS bands than HS bands".into()));
    }
    p.srf.validate(p.d_h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    // Orthonormal class directions by Gram-Schmidt on Gaussian draws.
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(p.classes);
    while dirs.len() < p.classes {
        let mut v: Vec<f64> = (0..p.d_h).map(|_| StandardNormal.sample(&mut rng)).collect();
        for d in &dirs {
            let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(d).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            dirs.push(v);
        }
    }
    let scale = p.sep / std::f64::consts::SQRT_2;

    let n = p.classes * p.n_per_class;
    let mut xh = Mat::<T>::zeros(p.d_h, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let k = j % p.classes;
        labels.push(k + 1);
        for i in 0..p.d_h {
            let z: f64 = StandardNormal.sample(&mut rng);
            xh[(i, j)] = T::of(scale * dirs[k][i] + z);
        }
    }
    let xh = ModalityMatrix::new(xh, Modality::Hs)?;
    let xm = simulate_ms(&xh, &p.srf, p.noise_std, p.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    Ok(SyntheticData {
        xh,
        xm,
        labels: Labels::new(labels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn band_average() {
        let xh = ModalityMatrix::hs(dmatrix![1.0; 2.0; 3.0; 4.0]).unwrap();
        let srf = SrfBank {
            bands: vec![(1, 2), (3, 4)],
            weights: None,
        };
        let xm = simulate_ms(&xh, &srf, 0.0, 0).unwrap();
        assert_eq!(xm.values, dmatrix![1.5; 3.5]);
        assert_eq!(xm.modality, Modality::Ms);

        let full = SrfBank::uniform(4, 1).unwrap();
        let xh = ModalityMatrix::hs(dmatrix![1.0, 0.0; 2.0, 0.0; 3.0, 0.0; 6.0, 4.0]).unwrap();
        assert_eq!(simulate_ms(&xh, &full, 0.0, 0).unwrap().values, dmatrix![3.0, 1.0]);
    }

    #[test]
    fn band_ranges_are_checked() {
        let xh = ModalityMatrix::hs(dmatrix![1.0; 2.0]).unwrap();
        let srf = SrfBank {
            bands: vec![(1, 3)],
            weights: None,
        };
        assert!(simulate_ms(&xh, &srf, 0.0, 0).is_err());
        let weighted = SrfBank {
            bands: vec![(1, 2)],
            weights: Some(vec![vec![0.3, 0.6]]),
        };
        assert!(weighted.validate(2).is_err());
    }

    #[test]
    fn uniform_bank_covers_all_bands() {
        let srf = SrfBank::uniform(10, 3).unwrap();
        assert_eq!(srf.bands, vec![(1, 3), (4, 6), (7, 10)]);
        assert!(SrfBank::uniform(3, 4).is_err());
    }
}
