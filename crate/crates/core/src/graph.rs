//! The joint adjacency over {HS-labeled, MS-labeled, unlabeled} nodes and its
//! Laplacian.
//!
//! Node order is `[0, N)` HS-labeled, `[N, 2N)` MS-labeled and
//! `[2N, 2N + N_U)` unlabeled landmarks. The four labeled blocks come from the
//! labels and never change; HU, MU and UU are learnable.

use crate::data::Labels;
use crate::error::{Error, Result};
use crate::numerics::{pairwise_sq_dist, pairwise_sq_dist_cross, Mat};
use crate::scalar::Scalar;

/// `W[i,j] = 1/N_k` when samples `i` and `j` (including `i == j`) share class
/// `k`, else 0.
pub fn lda_like_graph<T: Scalar>(labels: &Labels) -> Mat<T> {
    let l = labels.as_slice();
    let n = l.len();
    let counts = labels.class_counts(labels.num_classes());
    Mat::from_fn(n, n, |i, j| {
        if l[i] == l[j] {
            T::one() / T::of_usize(counts[l[i] - 1])
        } else {
            T::zero()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBlocks<T: Scalar> {
    pub hh: Mat<T>,
    pub hm: Mat<T>,
    pub mh: Mat<T>,
    pub mm: Mat<T>,
}

/// HS and MS labeled columns are the same samples, so all four blocks equal
/// the LDA-like graph.
pub fn labeled_blocks<T: Scalar>(labels: &Labels) -> LabeledBlocks<T> {
    let g = lda_like_graph::<T>(labels);
    LabeledBlocks {
        hh: g.clone(),
        hm: g.clone(),
        mh: g.transpose(),
        mm: g,
    }
}

fn gaussian<T: Scalar>(d2: T, sigma: T) -> T {
    (-d2 / (T::of(2.0) * sigma * sigma)).exp()
}

/// Indices of the `k` smallest entries of `row`, skipping `skip`, ties broken
/// by index.
fn k_smallest<T: Scalar>(row: impl Iterator<Item = T>, k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<(T, usize)> = row
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(j, d)| (d, j))
        .collect();
    idx.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    idx.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Gaussian-kernel k-NN graph over the columns of `x`, symmetrized by
/// elementwise max, zero diagonal.
pub fn gaussian_knn_graph<T: Scalar>(x: &Mat<T>, k: usize, sigma: T) -> Result<Mat<T>> {
    let n = x.ncols();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..{n} for {n} samples, got {k}"
        )));
    }
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let z = pairwise_sq_dist(x);
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        for j in k_smallest(z.row(i).iter().copied(), k, Some(i)) {
            let v = gaussian(z[(i, j)], sigma);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Bipartite counterpart of [`gaussian_knn_graph`]: entry `(i, j)` links
/// column `i` of `a` with column `j` of `b` when either is among the other's
/// `k` nearest. `k` is clamped to the size of each side.
pub fn gaussian_knn_cross<T: Scalar>(a: &Mat<T>, b: &Mat<T>, k: usize, sigma: T) -> Result<Mat<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let z = pairwise_sq_dist_cross(a, b)?;
    let mut w = Mat::zeros(a.ncols(), b.ncols());
    for i in 0..a.ncols() {
        for j in k_smallest(z.row(i).iter().copied(), k.min(b.ncols()), None) {
            w[(i, j)] = gaussian(z[(i, j)], sigma);
        }
    }
    for j in 0..b.ncols() {
        for i in k_smallest(z.column(j).iter().copied(), k.min(a.ncols()), None) {
            w[(i, j)] = gaussian(z[(i, j)], sigma);
        }
    }
    Ok(w)
}

/// Elementwise maximum of the HU and MU blocks.
pub fn align_blocks<T: Scalar>(w_hu: &Mat<T>, w_mu: &Mat<T>) -> Result<Mat<T>> {
    if w_hu.shape() != w_mu.shape() {
        return Err(Error::Dimension(format!(
            "HU {:?} vs MU {:?}",
            w_hu.shape(),
            w_mu.shape()
        )));
    }
    Ok(w_hu.zip_map(w_mu, |a, b| a.max(b)))
}

fn check_symmetric<T: Scalar>(w: &Mat<T>, tol: f64, what: &str) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::Dimension(format!("{what} is {:?}, not square", w.shape())));
    }
    let tol = T::of(tol);
    for i in 0..w.nrows() {
        for j in (i + 1)..w.ncols() {
            if (w[(i, j)] - w[(j, i)]).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "{what} not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Full `(2N + N_U)²` joint adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAdjacency<T: Scalar> {
    n: usize,
    n_u: usize,
    w: Mat<T>,
}

impl<T: Scalar> JointAdjacency<T> {
    pub fn n_labeled(&self) -> usize {
        self.n
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_u
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.w
    }

    pub fn into_matrix(self) -> Mat<T> {
        self.w
    }

    pub fn hu(&self) -> Mat<T> {
        self.w.view((0, 2 * self.n), (self.n, self.n_u)).into_owned()
    }

    pub fn mu(&self) -> Mat<T> {
        self.w.view((self.n, 2 * self.n), (self.n, self.n_u)).into_owned()
    }

    pub fn uu(&self) -> Mat<T> {
        self.w.view((2 * self.n, 2 * self.n), (self.n_u, self.n_u)).into_owned()
    }

    /// The 2N × 2N labeled corner.
    pub fn labeled(&self) -> Mat<T> {
        self.w.view((0, 0), (2 * self.n, 2 * self.n)).into_owned()
    }

    /// Replaces the learnable blocks, leaving the labeled corner untouched.
    pub fn set_learnable(&mut self, w_hu: &Mat<T>, w_mu: &Mat<T>, w_uu: &Mat<T>) -> Result<()> {
        let (n, n_u) = (self.n, self.n_u);
        for (name, b, shape) in [
            ("HU", w_hu, (n, n_u)),
            ("MU", w_mu, (n, n_u)),
            ("UU", w_uu, (n_u, n_u)),
        ] {
            if b.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} block is {:?}, expected {shape:?}",
                    b.shape()
                )));
            }
        }
        check_symmetric(w_uu, 1e-8, "UU block")?;
        self.w.view_mut((0, 2 * n), (n, n_u)).copy_from(w_hu);
        self.w.view_mut((2 * n, 0), (n_u, n)).copy_from(&w_hu.transpose());
        self.w.view_mut((n, 2 * n), (n, n_u)).copy_from(w_mu);
        self.w.view_mut((2 * n, n), (n_u, n)).copy_from(&w_mu.transpose());
        self.w.view_mut((2 * n, 2 * n), (n_u, n_u)).copy_from(w_uu);
        Ok(())
    }
}

/// Builds W̃ from the labels (fixed corner) and the three learnable blocks.
pub fn assemble<T: Scalar>(
    labels: &Labels,
    w_hu: &Mat<T>,
    w_mu: &Mat<T>,
    w_uu: &Mat<T>,
) -> Result<JointAdjacency<T>> {
    let n = labels.len();
    let n_u = w_uu.nrows();
    let b = labeled_blocks::<T>(labels);
    let mut w = Mat::zeros(2 * n + n_u, 2 * n + n_u);
    w.view_mut((0, 0), (n, n)).copy_from(&b.hh);
    w.view_mut((0, n), (n, n)).copy_from(&b.hm);
    w.view_mut((n, 0), (n, n)).copy_from(&b.mh);
    w.view_mut((n, n), (n, n)).copy_from(&b.mm);
    let mut adj = JointAdjacency { n, n_u, w };
    adj.set_learnable(w_hu, w_mu, w_uu)?;
    Ok(adj)
}

/// Graph Laplacian `L = D − W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix<T: Scalar>(pub Mat<T>);

impl<T: Scalar> LaplacianMatrix<T> {
    pub fn matrix(&self) -> &Mat<T> {
        &self.0
    }
}

/// `L = D − W` with `D_ii = Σ_j W_ij` (full row sum, diagonal included), so
/// that `tr(E L Eᵀ) = ½ Σ_ij W_ij ‖E_i − E_j‖²` holds for any diagonal.
pub fn laplacian<T: Scalar>(w: &Mat<T>) -> Result<LaplacianMatrix<T>> {
    let scale = w.amax().max(T::one()).as_f64();
    check_symmetric(w, 1e-8 * scale, "adjacency")?;
    let mut l = -w.clone();
    for i in 0..w.nrows() {
        let deg = w.row(i).iter().fold(T::zero(), |a, &x| a + x);
        l[(i, i)] += deg;
    }
    Ok(LaplacianMatrix(l))
}
