//! Active subspaces: sensitivity matrices, their eigendecomposition,
//! threshold-based dimension selection and projections.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const CLAMP_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Monte Carlo estimate of `E[grad f grad f^T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityMatrix {
    pub entries: DMatrix<f64>,
    pub sample_count: usize,
}

/// Averages gradient outer products: `(1/S) sum g g^T`, built as `G^T G / S`
/// from the stacked `S x P` gradient matrix.
pub fn build_sensitivity(gradients: &[DVector<f64>]) -> Result<SensitivityMatrix> {
    let first = gradients
        .first()
        .ok_or_else(|| Error::InvalidArgument("no gradients to build a sensitivity matrix".into()))?;
    let p = first.len();
    if p == 0 {
        return Err(Error::InvalidArgument("gradients must be non-empty".into()));
    }
    for g in gradients {
        check_dim(p, g.len())?;
    }
    let s = gradients.len();
    let stack = DMatrix::from_fn(s, p, |i, j| gradients[i][j]);
    let gram = stack.tr_mul(&stack) / s as f64;
    let entries = (&gram + gram.transpose()) * 0.5;
    Ok(SensitivityMatrix {
        entries,
        sample_count: s,
    })
}

/// Eigenpairs sorted by descending eigenvalue; column `i` of `vectors`
/// pairs with `values[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigendecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigendecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Symmetric eigendecomposition of a sensitivity matrix.
///
/// Eigenvalues within `-1e-10 q1` of zero are clamped to zero; each
/// eigenvector is signed so its largest-magnitude entry is positive.
pub fn eigendecompose(w: &SensitivityMatrix) -> Result<Eigendecomposition> {
    eigendecompose_matrix(&w.entries)
}

pub fn eigendecompose_matrix(m: &DMatrix<f64>) -> Result<Eigendecomposition> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if scale > 0.0 && asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym / scale));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(f64::NAN));
    }

    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let p = m.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let q1 = eig.eigenvalues[order[0]].max(0.0);
    let mut values = DVector::zeros(p);
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        let mut q = eig.eigenvalues[src];
        if q < 0.0 {
            if q < -CLAMP_TOL * q1 && q < -f64::EPSILON * scale * p as f64 {
                return Err(Error::NotPositiveSemidefinite(q));
            }
            q = 0.0;
        }
        values[dst] = q;
        let mut v = eig.eigenvectors.column(src).into_owned();
        let lead = v.iamax();
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    Ok(Eigendecomposition { values, vectors })
}

/// Smallest `j` with `q_1 + ... + q_j >= tau (q_1 + ... + q_P)`.
pub fn select_dimension(eigenvalues: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue threshold must lie in (0, 1], got {tau}"
        )));
    }
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue spectrum".into()));
    }
    if eigenvalues.iter().any(|q| !q.is_finite() || *q < 0.0) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be finite and nonnegative".into(),
        ));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("eigenvalues must be sorted descending".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    let target = tau * total;
    let mut cumulative = 0.0;
    for (i, q) in eigenvalues.iter().enumerate() {
        cumulative += q;
        if cumulative >= target {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceOrigin {
    /// Supplied analytically (benchmarks with known structure).
    Exact,
    /// Learned from samples.
    Learned,
}

/// Orthonormal split of `R^P` into active and inactive directions.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSubspace {
    basis_active: DMatrix<f64>,
    basis_inactive: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    threshold: Option<f64>,
    origin: SubspaceOrigin,
}

impl ActiveSubspace {
    /// Active dimension chosen by the cumulative-eigenvalue threshold `tau`.
    pub fn from_eigen(eig: &Eigendecomposition, tau: f64) -> Result<Self> {
        let j = select_dimension(eig.values.as_slice(), tau)?;
        let mut s = Self::split(eig, j)?;
        s.threshold = Some(tau);
        Ok(s)
    }

    /// Active dimension pinned to `j`, regardless of the spectrum.
    pub fn from_eigen_fixed(eig: &Eigendecomposition, j: usize) -> Result<Self> {
        Self::split(eig, j)
    }

    fn split(eig: &Eigendecomposition, j: usize) -> Result<Self> {
        let p = eig.dim();
        if j == 0 || j > p {
            return Err(Error::InvalidArgument(format!(
                "active dimension must lie in 1..={p}, got {j}"
            )));
        }
        Ok(Self {
            basis_active: eig.vectors.columns(0, j).into_owned(),
            basis_inactive: eig.vectors.columns(j, p - j).into_owned(),
            eigenvalues: eig.values.clone(),
            threshold: None,
            origin: SubspaceOrigin::Learned,
        })
    }

    /// Wraps a known orthonormal active basis (`P x j`) and completes it
    /// with an orthonormal inactive complement. The stored spectrum is the
    /// nominal one (ones for active, zeros for inactive directions).
    pub fn exact(basis_active: DMatrix<f64>) -> Result<Self> {
        let (p, j) = basis_active.shape();
        if j == 0 || j > p {
            return Err(Error::InvalidArgument(format!(
                "active basis must be P x j with 1 <= j <= P, got {p}x{j}"
            )));
        }
        let gram_err = (basis_active.tr_mul(&basis_active) - DMatrix::identity(j, j)).amax();
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "active basis columns are not orthonormal (error {gram_err:e})"
            )));
        }
        let mut augmented = DMatrix::zeros(p, j + p);
        augmented.columns_mut(0, j).copy_from(&basis_active);
        augmented
            .columns_mut(j, p)
            .copy_from(&DMatrix::<f64>::identity(p, p));
        let q = augmented.qr().q();
        let basis_inactive = q.columns(j, p - j).into_owned();
        let eigenvalues = DVector::from_fn(p, |i, _| if i < j { 1.0 } else { 0.0 });
        Ok(Self {
            basis_active,
            basis_inactive,
            eigenvalues,
            threshold: None,
            origin: SubspaceOrigin::Exact,
        })
    }

    /// Subspace spanned by the first `j` coordinate axes of `R^P`.
    pub fn coordinate(p: usize, j: usize) -> Result<Self> {
        if j == 0 || j > p {
            return Err(Error::InvalidArgument(format!(
                "active dimension must lie in 1..={p}, got {j}"
            )));
        }
        Self::exact(DMatrix::identity(p, p).columns(0, j).into_owned())
    }

    pub fn dim(&self) -> usize {
        self.basis_active.ncols()
    }

    pub fn full_dim(&self) -> usize {
        self.basis_active.nrows()
    }

    pub fn basis_active(&self) -> &DMatrix<f64> {
        &self.basis_active
    }

    pub fn basis_inactive(&self) -> &DMatrix<f64> {
        &self.basis_inactive
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn origin(&self) -> SubspaceOrigin {
        self.origin
    }

    /// Full `P x P` basis, active columns first.
    pub fn full_basis(&self) -> DMatrix<f64> {
        let (p, j) = self.basis_active.shape();
        let mut v = DMatrix::zeros(p, p);
        v.columns_mut(0, j).copy_from(&self.basis_active);
        v.columns_mut(j, p - j).copy_from(&self.basis_inactive);
        v
    }

    /// `V_A V_A^T x`
    pub fn project_active(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.full_dim(), x.len())?;
        Ok(&self.basis_active * self.basis_active.tr_mul(x))
    }

    /// `V_I V_I^T x`
    pub fn project_inactive(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.full_dim(), x.len())?;
        Ok(&self.basis_inactive * self.basis_inactive.tr_mul(x))
    }
}

/// Spectral norm of `V - V~` after flipping each column of `V~` to the
/// sign closest to the matching column of `V`. Lies in `[0, 2]` for
/// orthonormal inputs.
pub fn subspace_distance(v: &DMatrix<f64>, v_tilde: &DMatrix<f64>) -> Result<f64> {
    if v.shape() != v_tilde.shape() {
        return Err(Error::InvalidArgument(format!(
            "basis shapes differ: {:?} vs {:?}",
            v.shape(),
            v_tilde.shape()
        )));
    }
    let mut aligned = v_tilde.clone();
    for (i, mut col) in aligned.column_iter_mut().enumerate() {
        let reference = v.column(i);
        if (&col + reference).norm() < (&col - reference).norm() {
            col.neg_mut();
        }
    }
    let diff = v - aligned;
    Ok(diff.singular_values().max())
}

/// Affine map of the samples' bounding box onto `[-1, 1]^P`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxNormalizer {
    lower: DVector<f64>,
    scale: DVector<f64>,
}

impl BoxNormalizer {
    pub fn fit(points: &[DVector<f64>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("no points to normalize".into()))?;
        let p = first.len();
        let mut lower = first.clone();
        let mut upper = first.clone();
        for x in points {
            check_dim(p, x.len())?;
            for i in 0..p {
                lower[i] = lower[i].min(x[i]);
                upper[i] = upper[i].max(x[i]);
            }
        }
        let scale = DVector::from_fn(p, |i, _| {
            let width = upper[i] - lower[i];
            if width > 0.0 {
                2.0 / width
            } else {
                1.0
            }
        });
        Ok(Self { lower, scale })
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.lower).component_mul(&self.scale) - DVector::from_element(x.len(), 1.0)
    }

    /// Converts a gradient taken in normalized coordinates back to the
    /// original ones (chain rule through the diagonal map).
    pub fn pull_back_gradient(&self, grad_normalized: &DVector<f64>) -> DVector<f64> {
        grad_normalized.component_mul(&self.scale)
    }
}

/// Writes `index, eigenvalue, v_1 .. v_P` rows, one per eigenpair.
pub fn write_spectrum_csv<W: Write>(eig: &Eigendecomposition, out: W) -> Result<()> {
    let p = eig.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "eigenvalue".to_string()];
    header.extend((1..=p).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for i in 0..p {
        let mut row = vec![(i + 1).to_string(), eig.values[i].to_string()];
        row.extend(eig.vectors.column(i).iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
