//! The five benchmark objectives and their published constants.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::oracle::{NoiseKind, NoiseModel, NoisyOracle, Objective};
use crate::rng::RngStream;

/// Checked-in constants table; [`constants_table`] must reproduce it.
pub const CONSTANTS_CSV: &str = include_str!("../../data/problems.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::Ex1,
        ProblemId::Ex2,
        ProblemId::Ex3,
        ProblemId::Ex4,
        ProblemId::Ex5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Ex1 => "ex1",
            ProblemId::Ex2 => "ex2",
            ProblemId::Ex3 => "ex3",
            ProblemId::Ex4 => "ex4",
            ProblemId::Ex5 => "ex5",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

/// Departures from the default constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemOverrides {
    pub dim: Option<usize>,
    pub active_dim: Option<usize>,
    pub sigma2: Option<f64>,
    pub noise_kind: Option<NoiseKind>,
    /// Example 4 only: per-coordinate weights; `L1` becomes `2 max w`.
    pub weights: Option<DVector<f64>>,
    /// Replaces the Lipschitz constant used for hyperparameters.
    pub l1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
enum Function {
    /// `(w.x)^2`
    Ridge { w: DVector<f64> },
    /// `sum_{i<j} x_i^2`
    ActiveSphere { j: usize },
    /// Nesterov's chain quadratic on the first `j` coordinates.
    Nesterov { j: usize },
    /// `sum w_i x_i^2`
    Weighted { w: DVector<f64> },
}

impl Function {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Function::Ridge { w } => w.dot(x).powi(2),
            Function::ActiveSphere { j } => x.rows(0, *j).norm_squared(),
            Function::Nesterov { j } => {
                let j = *j;
                let mut s = x[0] * x[0] + x[j - 1] * x[j - 1];
                for i in 0..j - 1 {
                    s += (x[i] - x[i + 1]).powi(2);
                }
                0.5 * s - x[0]
            }
            Function::Weighted { w } => w.iter().zip(x.iter()).map(|(w, x)| w * x * x).sum(),
        }
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = x.len();
        match self {
            Function::Ridge { w } => w * (2.0 * w.dot(x)),
            Function::ActiveSphere { j } => {
                DVector::from_fn(p, |i, _| if i < *j { 2.0 * x[i] } else { 0.0 })
            }
            Function::Nesterov { j } => {
                let j = *j;
                let mut g = DVector::zeros(p);
                g[0] += x[0] - 1.0;
                g[j - 1] += x[j - 1];
                for i in 0..j - 1 {
                    let d = x[i] - x[i + 1];
                    g[i] += d;
                    g[i + 1] -= d;
                }
                g
            }
            Function::Weighted { w } => w.component_mul(x) * 2.0,
        }
    }

    fn hessian(&self, p: usize) -> DMatrix<f64> {
        match self {
            Function::Ridge { w } => w * w.transpose() * 2.0,
            Function::ActiveSphere { j } => {
                DMatrix::from_fn(p, p, |a, b| if a == b && a < *j { 2.0 } else { 0.0 })
            }
            Function::Nesterov { j } => {
                let j = *j;
                let mut h = DMatrix::zeros(p, p);
                for i in 0..j {
                    h[(i, i)] = 2.0;
                    if i + 1 < j {
                        h[(i, i + 1)] = -1.0;
                        h[(i + 1, i)] = -1.0;
                    }
                }
                h
            }
            Function::Weighted { w } => DMatrix::from_diagonal(&(w * 2.0)),
        }
    }
}

struct ProblemObjective {
    dim: usize,
    f: Function,
}

impl Objective for ProblemObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.f.value(x))
    }
}

#[derive(Clone)]
pub struct BenchmarkProblem {
    pub id: ProblemId,
    pub dim: usize,
    /// True active dimension, when the problem has one.
    pub active_dim: Option<usize>,
    pub sigma2: f64,
    pub noise_kind: NoiseKind,
    /// Lipschitz constant used for hyperparameters (the published one).
    pub l1: f64,
    pub f_star: f64,
    /// Known minimizer, where it is unique.
    pub minimizer: Option<DVector<f64>>,
    /// `x0 = init_scale * N(0, I)`.
    pub init_scale: f64,
    exact_basis: Option<DMatrix<f64>>,
    function: Function,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("active_dim", &self.active_dim)
            .field("sigma2", &self.sigma2)
            .field("l1", &self.l1)
            .finish()
    }
}

fn weight_exponent(i: usize) -> i32 {
    // coordinate i (0-based) gets 2^((-1)^i * i)
    if i % 2 == 0 {
        i as i32
    } else {
        -(i as i32)
    }
}

/// Builds a benchmark with its default constants and any overrides.
pub fn make_problem(id: ProblemId, overrides: &ProblemOverrides) -> Result<BenchmarkProblem> {
    let default_dim = match id {
        ProblemId::Ex1 | ProblemId::Ex2 => 20,
        ProblemId::Ex3 => 50,
        ProblemId::Ex4 | ProblemId::Ex5 => 10,
    };
    let p = overrides
        .dim
        .or(overrides.weights.as_ref().map(|w| w.len()))
        .unwrap_or(default_dim);
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if overrides.weights.is_some() && id != ProblemId::Ex4 {
        return Err(Error::InvalidArgument(format!(
            "weight overrides apply to ex4 only, not {id}"
        )));
    }
    let default_j = match id {
        ProblemId::Ex2 => 10,
        ProblemId::Ex3 => 5,
        _ => 0,
    };
    let j = overrides.active_dim.unwrap_or(default_j.min(p));
    let check_j = |j: usize| {
        if j == 0 || j > p {
            Err(Error::InvalidArgument(format!(
                "active dimension must lie in 1..={p}, got {j}"
            )))
        } else {
            Ok(j)
        }
    };

    let mut minimizer = None;
    let mut f_star = 0.0;
    let (function, active_dim, exact_basis, sigma2, l1) = match id {
        ProblemId::Ex1 => {
            let w = DVector::<f64>::from_element(p, 1.0);
            minimizer = Some(DVector::zeros(p));
            let basis = DMatrix::from_column_slice(p, 1, (&w / w.norm()).as_slice());
            (Function::Ridge { w }, Some(1), Some(basis), 1e-4, 2.0)
        }
        ProblemId::Ex2 => {
            let j = check_j(j)?;
            let basis = DMatrix::identity(p, p).columns(0, j).into_owned();
            (Function::ActiveSphere { j }, Some(j), Some(basis), 1e-3, 2.0)
        }
        ProblemId::Ex3 => {
            let j = check_j(j)?;
            let basis = DMatrix::identity(p, p).columns(0, j).into_owned();
            f_star = -0.5 * (1.0 - 1.0 / (j as f64 + 1.0));
            // inactive coordinates are free; zero is one minimizer
            minimizer = Some(DVector::from_fn(p, |i, _| {
                if i < j {
                    1.0 - (i + 1) as f64 / (j + 1) as f64
                } else {
                    0.0
                }
            }));
            (Function::Nesterov { j }, Some(j), Some(basis), 1e-4, 4.0)
        }
        ProblemId::Ex4 => {
            let w = match &overrides.weights {
                Some(w) => {
                    if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        return Err(Error::InvalidArgument(
                            "ex4 weights must be positive and finite".into(),
                        ));
                    }
                    w.clone()
                }
                None => DVector::from_element(p, 1.0),
            };
            let l1 = 2.0 * w.max();
            minimizer = Some(DVector::zeros(p));
            (Function::Weighted { w }, Some(p), Some(DMatrix::identity(p, p)), 1e-5, l1)
        }
        ProblemId::Ex5 => {
            let w = DVector::from_fn(p, |i, _| 2f64.powi(weight_exponent(i)));
            // published constant: 2^(P+1) for odd P, 2^P for even P
            let l1 = if p % 2 == 1 {
                2f64.powi(p as i32 + 1)
            } else {
                2f64.powi(p as i32)
            };
            minimizer = Some(DVector::zeros(p));
            (Function::Weighted { w }, None, None, 1e-3, l1)
        }
    };
    let sigma2 = overrides.sigma2.unwrap_or(sigma2);
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    let l1 = overrides.l1.unwrap_or(l1);
    if !(l1.is_finite() && l1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz constant must be positive, got {l1}"
        )));
    }
    let objective: Arc<dyn Objective> = Arc::new(ProblemObjective {
        dim: p,
        f: function.clone(),
    });
    Ok(BenchmarkProblem {
        id,
        dim: p,
        active_dim,
        sigma2,
        noise_kind: overrides.noise_kind.unwrap_or(NoiseKind::Additive),
        l1,
        f_star,
        minimizer,
        init_scale: 10.0,
        exact_basis,
        function,
        objective,
    })
}

impl BenchmarkProblem {
    pub fn objective(&self) -> Arc<dyn Objective> {
        self.objective.clone()
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self.noise_kind {
            NoiseKind::Additive => NoiseModel::additive(self.sigma2),
            NoiseKind::Multiplicative => NoiseModel::multiplicative(self.sigma2),
        }
    }

    /// A fresh oracle with noiseless reads enabled.
    pub fn oracle(&self) -> Result<NoisyOracle> {
        Ok(NoisyOracle::with_true_values(
            self.objective(),
            self.noise_model()?,
        ))
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.function.value(x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.function.gradient(x))
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        self.function.hessian(self.dim)
    }

    /// Spectral norm of the (constant) Hessian, which may differ from the
    /// published `l1`.
    pub fn hessian_norm(&self) -> f64 {
        let h = self.hessian();
        h.symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    /// Orthonormal basis of the analytic active subspace.
    pub fn exact_basis(&self) -> Option<&DMatrix<f64>> {
        self.exact_basis.as_ref()
    }

    pub fn initial_point(&self, rng: &mut RngStream) -> Result<DVector<f64>> {
        Ok(rng.standard_normals(self.dim)? * self.init_scale)
    }
}

/// Renders the default constants of every problem in the format of
/// [`CONSTANTS_CSV`].
pub fn constants_table() -> Result<String> {
    let mut out = String::from("id,P,j,sigma2,L1,f_star,init_scale\n");
    for id in ProblemId::ALL {
        let p = make_problem(id, &ProblemOverrides::default())?;
        let j = p.active_dim.map(|j| j.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            id, p.dim, j, p.sigma2, p.l1, p.f_star, p.init_scale
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default(id: ProblemId) -> BenchmarkProblem {
        make_problem(id, &ProblemOverrides::default()).unwrap()
    }

    #[test]
    fn constants_match_checked_in_table() {
        assert_eq!(constants_table().unwrap(), CONSTANTS_CSV);
    }

    #[test]
    fn ids_parse() {
        assert_eq!("ex3".parse::<ProblemId>().unwrap(), ProblemId::Ex3);
        assert_eq!("EX5".parse::<ProblemId>().unwrap(), ProblemId::Ex5);
        assert!(matches!("ex9".parse::<ProblemId>(), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn ex1_value_at_ones() {
        let p = default(ProblemId::Ex1);
        assert_eq!(p.value(&DVector::from_element(20, 1.0)).unwrap(), 400.0);
    }

    #[test]
    fn ex3_minimizer() {
        let p = default(ProblemId::Ex3);
        let mut x = DVector::zeros(50);
        for i in 0..5 {
            x[i] = 1.0 - (i as f64 + 1.0) / 6.0;
        }
        assert!((p.value(&x).unwrap() - (-5.0 / 12.0)).abs() < 1e-15);
        assert!(p.gradient(&x).unwrap().norm() < 1e-15);
        assert!((p.f_star + 5.0 / 12.0).abs() < 1e-16);
        assert!(p.hessian_norm() < 4.0);
    }

    #[test]
    fn ex4_weights_set_lipschitz() {
        let w = DVector::from_vec(vec![1.0, 3.0, 0.5]);
        let p = make_problem(
            ProblemId::Ex4,
            &ProblemOverrides {
                weights: Some(w),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.dim, 3);
        assert_eq!(p.l1, 6.0);
        assert!(make_problem(
            ProblemId::Ex1,
            &ProblemOverrides {
                weights: Some(DVector::from_element(3, 1.0)),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn ex5_weights_and_constants() {
        let p = default(ProblemId::Ex5);
        let e = DVector::from_fn(10, |i, _| if i == 8 { 1.0 } else { 0.0 });
        assert_eq!(p.value(&e).unwrap(), 256.0);
        let e = DVector::from_fn(10, |i, _| if i == 1 { 1.0 } else { 0.0 });
        assert_eq!(p.value(&e).unwrap(), 0.5);
        assert_eq!(p.l1, 1024.0);
        assert!((p.hessian_norm() - 512.0).abs() < 1e-9);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngStream::new(1, 0);
        for id in ProblemId::ALL {
            let p = default(id);
            let x = rng.standard_normals(p.dim).unwrap();
            let g = p.gradient(&x).unwrap();
            for i in 0..p.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += 1e-5;
                xm[i] -= 1e-5;
                let fd = (p.value(&xp).unwrap() - p.value(&xm).unwrap()) / 2e-5;
                assert!((fd - g[i]).abs() < 1e-4 * (1.0 + g[i].abs()), "{id} coord {i}");
            }
        }
    }

    #[test]
    fn exact_bases_are_orthonormal() {
        for id in ProblemId::ALL {
            let p = default(id);
            if let Some(v) = p.exact_basis() {
                let j = v.ncols();
                assert!((v.tr_mul(v) - DMatrix::identity(j, j)).amax() < 1e-14);
                assert_eq!(Some(j), p.active_dim);
            }
        }
    }
}
