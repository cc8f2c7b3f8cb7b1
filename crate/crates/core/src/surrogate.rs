//! Closed-form surrogates fitted to ledger samples.
//!
//! Polynomial models (linear, full quadratic) are solved by ridge-regularized
//! least squares on a column-scaled design. The RBF model uses the cubic
//! kernel `|x - c|^3` with a linear polynomial tail.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::ledger::SampleLedger;

/// Smallest acceptable squared ratio of the extreme diagonal entries of the
/// triangular factor (equivalently, of the scaled normal-equation pivots).
const PIVOT_RATIO_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SurrogateKind {
    Linear,
    Quadratic,
    Rbf,
}

impl SurrogateKind {
    /// Samples needed to determine the model in `p` dimensions.
    pub fn min_samples(self, p: usize) -> usize {
        match self {
            SurrogateKind::Linear | SurrogateKind::Rbf => p + 1,
            SurrogateKind::Quadratic => (p + 1) * (p + 2) / 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurrogateKind::Linear => "linear",
            SurrogateKind::Quadratic => "quadratic",
            SurrogateKind::Rbf => "rbf",
        }
    }
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(SurrogateKind::Linear),
            "quadratic" => Ok(SurrogateKind::Quadratic),
            "rbf" => Ok(SurrogateKind::Rbf),
            other => Err(Error::InvalidArgument(format!(
                "unknown surrogate `{other}` (expected linear, quadratic or rbf)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
enum Model {
    Linear {
        intercept: f64,
        slope: DVector<f64>,
    },
    /// `c + g.z + z^T H z / 2` with `z = x - shift`.
    Quadratic {
        intercept: f64,
        gradient: DVector<f64>,
        hessian: DMatrix<f64>,
    },
    Rbf {
        /// Centers, one per row, in shifted coordinates.
        centers: DMatrix<f64>,
        weights: DVector<f64>,
        intercept: f64,
        slope: DVector<f64>,
    },
}

/// Polynomial coefficients expressed about the origin:
/// `constant + linear.x + x^T hessian x / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialCoefficients {
    pub constant: f64,
    pub linear: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct Surrogate {
    kind: SurrogateKind,
    ridge: f64,
    shift: DVector<f64>,
    model: Model,
    best_point: DVector<f64>,
    coefficient_norm: f64,
}

/// Fits a surrogate to every sample in the ledger.
pub fn fit(kind: SurrogateKind, ledger: &SampleLedger, ridge: f64) -> Result<Surrogate> {
    fit_samples(kind, &ledger.points(), &ledger.values(), ridge)
}

/// Fits a surrogate to explicit `(point, value)` pairs.
pub fn fit_samples(
    kind: SurrogateKind,
    points: &[DVector<f64>],
    values: &[f64],
    ridge: f64,
) -> Result<Surrogate> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge weight must be finite and nonnegative, got {ridge}"
        )));
    }
    if points.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let p = points.first().map(|x| x.len()).unwrap_or(0);
    let required = kind.min_samples(p);
    if points.is_empty() || points.len() < required {
        return Err(Error::TooFewSamples {
            kind: kind.name(),
            required,
            available: points.len(),
        });
    }
    for x in points {
        check_dim(p, x.len())?;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(f64::NAN));
    }

    let n = points.len();
    let shift = points.iter().fold(DVector::zeros(p), |acc, x| acc + x) / n as f64;
    let shifted: Vec<DVector<f64>> = points.iter().map(|x| x - &shift).collect();
    let y = DVector::from_column_slice(values);
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| points[i].clone())
        .unwrap_or_else(|| shift.clone());

    let (model, coefficient_norm) = match kind {
        SurrogateKind::Linear => {
            let a = linear_design(&shifted);
            let (beta, norm) = ridge_least_squares(&a, &y, ridge, |k| column_name(k, p))?;
            (
                Model::Linear {
                    intercept: beta[0],
                    slope: beta.rows(1, p).into_owned(),
                },
                norm,
            )
        }
        SurrogateKind::Quadratic => {
            let a = quadratic_design(&shifted);
            let (beta, norm) = ridge_least_squares(&a, &y, ridge, |k| column_name(k, p))?;
            let mut hessian = DMatrix::zeros(p, p);
            let mut k = p + 1;
            for i in 0..p {
                for j in i..p {
                    if i == j {
                        hessian[(i, i)] = 2.0 * beta[k];
                    } else {
                        hessian[(i, j)] = beta[k];
                        hessian[(j, i)] = beta[k];
                    }
                    k += 1;
                }
            }
            (
                Model::Quadratic {
                    intercept: beta[0],
                    gradient: beta.rows(1, p).into_owned(),
                    hessian,
                },
                norm,
            )
        }
        SurrogateKind::Rbf => fit_rbf(&shifted, &y, ridge)?,
    };

    Ok(Surrogate {
        kind,
        ridge,
        shift,
        model,
        best_point: best,
        coefficient_norm,
    })
}

fn column_name(k: usize, p: usize) -> String {
    if k == 0 {
        return "constant".into();
    }
    if k <= p {
        return format!("x{k}");
    }
    let mut idx = p + 1;
    for i in 0..p {
        for j in i..p {
            if idx == k {
                return format!("x{}*x{}", i + 1, j + 1);
            }
            idx += 1;
        }
    }
    format!("column {k}")
}

fn linear_design(z: &[DVector<f64>]) -> DMatrix<f64> {
    let p = z[0].len();
    DMatrix::from_fn(z.len(), p + 1, |i, k| if k == 0 { 1.0 } else { z[i][k - 1] })
}

fn quadratic_design(z: &[DVector<f64>]) -> DMatrix<f64> {
    let p = z[0].len();
    let cols = SurrogateKind::Quadratic.min_samples(p);
    let mut a = DMatrix::zeros(z.len(), cols);
    for (row, zi) in z.iter().enumerate() {
        a[(row, 0)] = 1.0;
        for i in 0..p {
            a[(row, 1 + i)] = zi[i];
        }
        let mut k = p + 1;
        for i in 0..p {
            for j in i..p {
                a[(row, k)] = zi[i] * zi[j];
                k += 1;
            }
        }
    }
    a
}

/// Minimizes `|A beta - y|^2 + ridge |beta|^2`. Columns are scaled to unit
/// norm and the stacked system `[A_s; sqrt(ridge) D^-1]`, with `D` the column
/// norms, is solved by Householder QR. Returns `beta` and `|beta|`.
fn ridge_least_squares(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    ridge: f64,
    name: impl Fn(usize) -> String,
) -> Result<(DVector<f64>, f64)> {
    let (n, k) = a.shape();
    let mut stacked = DMatrix::zeros(n + k, k);
    let mut norms = DVector::zeros(k);
    for j in 0..k {
        let col = a.column(j);
        let c = col.norm();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::RankDeficient(format!(
                "design column `{}` is identically zero",
                name(j)
            )));
        }
        stacked.view_mut((0, j), (n, 1)).copy_from(&(col / c));
        stacked[(n + j, j)] = ridge.sqrt() / c;
        norms[j] = c;
    }
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(y);

    let qr = stacked.qr();
    let r = qr.r();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..k {
        lo = lo.min(r[(i, i)].abs());
        hi = hi.max(r[(i, i)].abs());
    }
    if !(hi > 0.0) || (lo / hi).powi(2) < PIVOT_RATIO_TOL {
        return Err(Error::RankDeficient(format!(
            "least-squares system ({k} unknowns) is numerically singular (pivot ratio {:e})",
            lo / hi
        )));
    }
    qr.q_tr_mul(&mut rhs);
    let beta_scaled = r
        .solve_upper_triangular(&rhs.rows(0, k).into_owned())
        .ok_or_else(|| Error::RankDeficient("triangular factor is singular".into()))?;
    let beta = beta_scaled.component_div(&norms);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::RankDeficient("least-squares solution is not finite".into()));
    }
    let norm = beta.norm();
    Ok((beta, norm))
}

fn fit_rbf(z: &[DVector<f64>], y: &DVector<f64>, ridge: f64) -> Result<(Model, f64)> {
    let n = z.len();
    let p = z[0].len();
    let m = p + 1;

    let tail = linear_design(z);
    let mut tail_norms = DVector::zeros(m);
    let mut tail_scaled = tail.clone();
    for (j, mut col) in tail_scaled.column_iter_mut().enumerate() {
        let c = col.norm();
        if !(c > 0.0) {
            return Err(Error::RankDeficient(format!(
                "linear tail column `{}` is identically zero",
                column_name(j, p)
            )));
        }
        col /= c;
        tail_norms[j] = c;
    }
    let tail_gram = tail_scaled.tr_mul(&tail_scaled);
    let tail_eig = SymmetricEigen::new(tail_gram);
    let (lo, hi) = tail_eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo < PIVOT_RATIO_TOL * hi {
        return Err(Error::RankDeficient(
            "sample points are affinely dependent; the linear tail is undetermined".into(),
        ));
    }

    let mut system = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = (&z[i] - &z[j]).norm();
            let phi = r * r * r;
            system[(i, j)] = phi;
            system[(j, i)] = phi;
        }
        system[(i, i)] = ridge;
    }
    system.view_mut((0, n), (n, m)).copy_from(&tail_scaled);
    system
        .view_mut((n, 0), (m, n))
        .copy_from(&tail_scaled.transpose());
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(y);

    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::RankDeficient("RBF interpolation system is singular".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient("RBF solution is not finite".into()));
    }
    let norm = sol.norm();
    let weights = sol.rows(0, n).into_owned();
    let tail_coef = sol.rows(n, m).component_div(&tail_norms);
    let centers = DMatrix::from_fn(n, p, |i, k| z[i][k]);
    Ok((
        Model::Rbf {
            centers,
            weights,
            intercept: tail_coef[0],
            slope: tail_coef.rows(1, p).into_owned(),
        },
        norm,
    ))
}

impl Surrogate {
    pub fn kind(&self) -> SurrogateKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Norm of the penalized coefficients: the polynomial coefficients about
    /// the sample mean, or the full RBF solution vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficient_norm
    }

    /// Lowest-valued sample seen at fit time.
    pub fn best_point(&self) -> &DVector<f64> {
        &self.best_point
    }

    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let z = x - &self.shift;
        Ok(match &self.model {
            Model::Linear { intercept, slope } => intercept + slope.dot(&z),
            Model::Quadratic {
                intercept,
                gradient,
                hessian,
            } => intercept + gradient.dot(&z) + 0.5 * z.dot(&(hessian * &z)),
            Model::Rbf {
                centers,
                weights,
                intercept,
                slope,
            } => {
                let mut s = intercept + slope.dot(&z);
                for (i, row) in centers.row_iter().enumerate() {
                    let r = (&z - row.transpose()).norm();
                    s += weights[i] * r * r * r;
                }
                s
            }
        })
    }

    /// Analytic gradient of the surrogate.
    pub fn gradient_at(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        let z = x - &self.shift;
        Ok(match &self.model {
            Model::Linear { slope, .. } => slope.clone(),
            Model::Quadratic {
                gradient, hessian, ..
            } => gradient + hessian * &z,
            Model::Rbf {
                centers,
                weights,
                slope,
                ..
            } => {
                let mut g = slope.clone();
                for (i, row) in centers.row_iter().enumerate() {
                    let d = &z - row.transpose();
                    let r = d.norm();
                    g.axpy(3.0 * weights[i] * r, &d, 1.0);
                }
                g
            }
        })
    }

    /// Analytic Hessian at `x` (constant for polynomial models).
    pub fn hessian_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.len())?;
        let p = self.dim();
        Ok(match &self.model {
            Model::Linear { .. } => DMatrix::zeros(p, p),
            Model::Quadratic { hessian, .. } => hessian.clone(),
            Model::Rbf {
                centers, weights, ..
            } => {
                let z = x - &self.shift;
                let mut h = DMatrix::zeros(p, p);
                for (i, row) in centers.row_iter().enumerate() {
                    let d = &z - row.transpose();
                    let r = d.norm();
                    if r > 0.0 {
                        let w = 3.0 * weights[i];
                        for a in 0..p {
                            h[(a, a)] += w * r;
                        }
                        h.ger(w / r, &d, &d, 1.0);
                    }
                }
                h
            }
        })
    }

    /// Spectral norm of the Hessian: zero for linear models, the constant
    /// Hessian for quadratics, and the Hessian at the best-seen sample for
    /// RBFs.
    pub fn hessian_spectral_norm(&self) -> f64 {
        if self.kind == SurrogateKind::Linear {
            return 0.0;
        }
        let h = self
            .hessian_at(&self.best_point)
            .expect("best point has the surrogate's dimension");
        let sym = (&h + h.transpose()) * 0.5;
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    /// Coefficients about the origin, for polynomial models.
    pub fn polynomial_coefficients(&self) -> Option<PolynomialCoefficients> {
        let p = self.dim();
        let s = &self.shift;
        match &self.model {
            Model::Linear { intercept, slope } => Some(PolynomialCoefficients {
                constant: intercept - slope.dot(s),
                linear: slope.clone(),
                hessian: DMatrix::zeros(p, p),
            }),
            Model::Quadratic {
                intercept,
                gradient,
                hessian,
            } => {
                let hs = hessian * s;
                Some(PolynomialCoefficients {
                    constant: intercept - gradient.dot(s) + 0.5 * s.dot(&hs),
                    linear: gradient - hs,
                    hessian: hessian.clone(),
                })
            }
            Model::Rbf { .. } => None,
        }
    }
}

/// Free-function form of [`Surrogate::gradient_at`].
pub fn gradient_at(s: &Surrogate, x: &DVector<f64>) -> Result<DVector<f64>> {
    s.gradient_at(x)
}

/// Free-function form of [`Surrogate::hessian_spectral_norm`].
pub fn hessian_spectral_norm(s: &Surrogate) -> f64 {
    s.hessian_spectral_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_points(seed: u64, n: usize, p: usize, scale: f64) -> Vec<DVector<f64>> {
        let mut rng = RngStream::new(seed, 0);
        (0..n).map(|_| rng.standard_normals(p).unwrap() * scale).collect()
    }

    fn sphere(x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    fn ex5(x: &DVector<f64>) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| {
                let e = if i % 2 == 0 { i as i32 } else { -(i as i32) };
                2f64.powi(e) * xi * xi
            })
            .sum()
    }

    fn central_difference(s: &Surrogate, x: &DVector<f64>, step: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            (s.predict(&xp).unwrap() - s.predict(&xm).unwrap()) / (2.0 * step)
        })
    }

    #[test]
    fn sample_requirements() {
        assert_eq!(SurrogateKind::Linear.min_samples(20), 21);
        assert_eq!(SurrogateKind::Rbf.min_samples(20), 21);
        assert_eq!(SurrogateKind::Quadratic.min_samples(20), 231);
        assert_eq!(SurrogateKind::Quadratic.min_samples(10), 66);
    }

    #[test]
    fn linear_recovers_affine_function() {
        let p = 5;
        let pts = random_points(1, p + 2, p, 1.0);
        let vals: Vec<f64> = pts.iter().map(|x| 3.0 + 2.0 * x[0]).collect();
        let s = fit_samples(SurrogateKind::Linear, &pts, &vals, 0.0).unwrap();
        let c = s.polynomial_coefficients().unwrap();
        assert_abs_diff_eq!(c.constant, 3.0, epsilon = 1e-8);
        let mut expected = DVector::zeros(p);
        expected[0] = 2.0;
        assert_abs_diff_eq!(c.linear, expected.clone(), epsilon = 1e-8);
        let g = s.gradient_at(&DVector::from_element(p, 7.0)).unwrap();
        assert_abs_diff_eq!(g, expected, epsilon = 1e-8);
        assert_eq!(s.hessian_spectral_norm(), 0.0);
    }

    #[test]
    fn quadratic_recovers_sphere() {
        let p = 6;
        let n = SurrogateKind::Quadratic.min_samples(p) + 5;
        let pts = random_points(2, n, p, 2.0);
        let vals: Vec<f64> = pts.iter().map(sphere).collect();
        let s = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 0.0).unwrap();
        let c = s.polynomial_coefficients().unwrap();
        assert_abs_diff_eq!(c.hessian, DMatrix::identity(p, p) * 2.0, epsilon = 1e-6);
        let ones = DVector::from_element(p, 1.0);
        assert_abs_diff_eq!(s.gradient_at(&ones).unwrap(), ones * 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.hessian_spectral_norm(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn quadratic_recovers_sphere_in_twenty_dimensions() {
        let p = 20;
        let n = SurrogateKind::Quadratic.min_samples(p) + 5;
        let pts = random_points(3, n, p, 1.0);
        let vals: Vec<f64> = pts.iter().map(sphere).collect();
        let s = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 0.0).unwrap();
        let ones = DVector::from_element(p, 1.0);
        assert_abs_diff_eq!(s.gradient_at(&ones).unwrap(), ones * 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.hessian_spectral_norm(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn quadratic_hessian_norm_of_weighted_sphere() {
        let p = 10;
        let n = SurrogateKind::Quadratic.min_samples(p) + 10;
        let pts = random_points(4, n, p, 1.0);
        let vals: Vec<f64> = pts.iter().map(ex5).collect();
        let s = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 0.0).unwrap();
        let norm = s.hessian_spectral_norm();
        assert!((norm - 512.0).abs() < 0.01 * 512.0, "norm {norm}");
    }

    #[test]
    fn model_class_exactness_on_grid() {
        let p = 3;
        let quad = |x: &DVector<f64>| 1.0 - x[0] + 2.0 * x[1] * x[2] + 0.5 * x[2] * x[2];
        let pts = random_points(5, 20, p, 1.5);
        let vals: Vec<f64> = pts.iter().map(quad).collect();
        let s = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 0.0).unwrap();
        for a in -2..=2 {
            for b in -2..=2 {
                for c in -2..=2 {
                    let x = DVector::from_vec(vec![a as f64, b as f64, c as f64]);
                    assert_abs_diff_eq!(s.predict(&x).unwrap(), quad(&x), epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn rbf_reproduces_linear_data_and_interpolates() {
        let p = 3;
        let pts = random_points(6, 15, p, 1.0);
        let lin = |x: &DVector<f64>| 1.0 + x[0] - 2.0 * x[2];
        let vals: Vec<f64> = pts.iter().map(lin).collect();
        let s = fit_samples(SurrogateKind::Rbf, &pts, &vals, 0.0).unwrap();
        let probe = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        assert_abs_diff_eq!(s.predict(&probe).unwrap(), lin(&probe), epsilon = 1e-8);

        let vals: Vec<f64> = pts.iter().map(sphere).collect();
        let s = fit_samples(SurrogateKind::Rbf, &pts, &vals, 0.0).unwrap();
        for (x, v) in pts.iter().zip(&vals) {
            assert_abs_diff_eq!(s.predict(x).unwrap(), *v, epsilon = 1e-8);
        }
        assert!(s.hessian_spectral_norm() > 0.0);
    }

    #[test]
    fn rbf_with_minimum_samples_is_linear() {
        let p = 4;
        let pts = random_points(7, p + 1, p, 1.0);
        let vals: Vec<f64> = pts.iter().map(sphere).collect();
        let s = fit_samples(SurrogateKind::Rbf, &pts, &vals, 0.0).unwrap();
        let g1 = s.gradient_at(&pts[0]).unwrap();
        let g2 = s.gradient_at(&DVector::from_element(p, 3.0)).unwrap();
        assert_abs_diff_eq!(g1, g2, epsilon = 1e-8);
    }

    #[test]
    fn gradients_match_central_differences() {
        let p = 4;
        let pts = random_points(8, 30, p, 1.0);
        let f = |x: &DVector<f64>| (x[0] - 0.5 * x[1]).powi(2) + x[2].sin() + x[3];
        let vals: Vec<f64> = pts.iter().map(f).collect();
        for kind in [SurrogateKind::Linear, SurrogateKind::Quadratic, SurrogateKind::Rbf] {
            let s = fit_samples(kind, &pts, &vals, 1e-6).unwrap();
            for x in random_points(9, 100, p, 1.0) {
                let g = s.gradient_at(&x).unwrap();
                let fd = central_difference(&s, &x, 1e-5);
                let rel = (&g - &fd).norm() / g.norm().max(1.0);
                assert!(rel < 1e-4, "{kind}: relative gradient error {rel}");
            }
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let pts = random_points(10, 5, 4, 1.0);
        let vals = vec![0.0; 5];
        let err = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 0.0).unwrap_err();
        assert_eq!(
            err,
            Error::TooFewSamples {
                kind: "quadratic",
                required: 15,
                available: 5
            }
        );
        assert!(fit_samples(SurrogateKind::Rbf, &pts[..3], &vals[..3], 0.0).is_err());
    }

    #[test]
    fn degenerate_design_rejected() {
        let pts = vec![DVector::from_element(2, 1.0); 6];
        let vals = vec![1.0; 6];
        assert!(matches!(
            fit_samples(SurrogateKind::Linear, &pts, &vals, 0.0),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            fit_samples(SurrogateKind::Rbf, &pts, &vals, 0.0),
            Err(Error::RankDeficient(_))
        ));
        // collinear points cannot determine a full quadratic
        let line: Vec<_> = (0..10)
            .map(|i| DVector::from_vec(vec![i as f64, 2.0 * i as f64]))
            .collect();
        let vals: Vec<f64> = line.iter().map(sphere).collect();
        assert!(matches!(
            fit_samples(SurrogateKind::Quadratic, &line, &vals, 0.0),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn noisy_rank_one_structure_is_recovered() {
        let p = 8;
        let w = DVector::from_element(p, 1.0);
        let mut rng = RngStream::new(12, 0);
        let n = SurrogateKind::Quadratic.min_samples(p) + 20;
        let pts = random_points(11, n, p, 3.0);
        let vals: Vec<f64> = pts
            .iter()
            .map(|x| w.dot(x).powi(2) + 1e-2 * rng.standard_normal())
            .collect();
        let s = fit_samples(SurrogateKind::Quadratic, &pts, &vals, 1e-4).unwrap();
        let grads: Vec<_> = pts.iter().map(|x| s.gradient_at(x).unwrap()).collect();
        let wm = crate::subspace::build_sensitivity(&grads).unwrap();
        let e = crate::subspace::eigendecompose(&wm).unwrap();
        assert!(e.values[1] < 1e-3 * e.values[0]);
        let cos = e.vectors.column(0).dot(&(&w / w.norm())).abs();
        assert!(cos > 0.999, "cos {cos}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ridge_never_grows_coefficients(seed in 0u64..5000, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let p = 3;
            let pts = random_points(seed, 14, p, 1.0);
            let mut rng = RngStream::new(seed, 9);
            let vals: Vec<f64> = pts.iter().map(|x| sphere(x) + 0.1 * rng.standard_normal()).collect();
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            for kind in [SurrogateKind::Linear, SurrogateKind::Quadratic] {
                let a = fit_samples(kind, &pts, &vals, lo).unwrap();
                let b = fit_samples(kind, &pts, &vals, hi).unwrap();
                prop_assert!(b.coefficient_norm() <= a.coefficient_norm() * (1.0 + 1e-10));
            }
        }
    }
}
