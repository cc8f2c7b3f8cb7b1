//! Monte Carlo checks of the smoothed-oracle error bound and the moment
//! identities of Gaussian search directions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::astars::{active_hyperparameters, draw_active_direction};
use crate::bench::problems::{make_problem, BenchmarkProblem, ProblemId, ProblemOverrides};
use crate::error::{Error, Result};
use crate::oracle::NoiseKind;
use crate::rng::RngStream;
use crate::stars::compute_hyperparameters;
use crate::subspace::ActiveSubspace;

pub const ORACLE_DRAWS: usize = 10_000;
pub const MOMENT_DRAWS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSuite {
    All,
    OracleError,
    Moments,
    Coefficient,
}

impl FromStr for BoundSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(BoundSuite::All),
            "oracle" => Ok(BoundSuite::OracleError),
            "moments" => Ok(BoundSuite::Moments),
            "coefficient" => Ok(BoundSuite::Coefficient),
            other => Err(Error::InvalidArgument(format!(
                "unknown bound suite `{other}` (expected all, oracle, moments or coefficient)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.lower.is_none_or(|l| self.value >= l) && self.upper.is_none_or(|u| self.value <= u)
    }

    /// Distance to the nearest violated side; positive when passing.
    pub fn margin(&self) -> f64 {
        let lo = self.lower.map(|l| self.value - l).unwrap_or(f64::INFINITY);
        let hi = self.upper.map(|u| u - self.value).unwrap_or(f64::INFINITY);
        lo.min(hi)
    }
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l:.6}, {u:.6}]"),
            (None, Some(u)) => format!("<= {u:.6}"),
            (Some(l), None) => format!(">= {l:.6}"),
            (None, None) => "unbounded".into(),
        };
        write!(
            f,
            "{} {}: {:.6} {} (margin {:.3e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            range,
            self.margin()
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(BoundCheck::passed)
    }
}

/// `sqrt(2) sigma L1 sqrt(n (n+6)^3)`.
pub fn oracle_error_bound(sigma2: f64, l1: f64, n: usize) -> f64 {
    let n = n as f64;
    2f64.sqrt() * sigma2.sqrt() * l1 * (n * (n + 6.0).powi(3)).sqrt()
}

/// `(K1 + K2) / sqrt(2 K1 K2)`, the factor on the bound when the noise and
/// Lipschitz constants are misestimated.
pub fn estimated_bound_coefficient(k1: f64, k2: f64) -> f64 {
    (k1 + k2) / (2.0 * k1 * k2).sqrt()
}

/// Mean over `draws` of `|s_mu - <grad f(x), u> u|^2`, where
/// `s_mu = ((f^(x + mu u) - f^(x)) / mu) u` uses two fresh noisy values and
/// `u` is Gaussian, confined to `space` when given.
pub fn oracle_error_mean(
    problem: &BenchmarkProblem,
    x: &DVector<f64>,
    mu: f64,
    space: Option<&ActiveSubspace>,
    draws: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut oracle = problem.oracle()?;
    let grad = problem.gradient(x)?;
    let mut total = 0.0;
    for _ in 0..draws {
        let u = match space {
            Some(s) => draw_active_direction(s, rng)?.full_vector,
            None => rng.standard_normals(problem.dim)?,
        };
        let f_plus = oracle.evaluate(&(x + &u * mu), rng)?;
        let f_here = oracle.evaluate(x, rng)?;
        let coeff = (f_plus - f_here) / mu - grad.dot(&u);
        total += coeff * coeff * u.norm_squared();
    }
    Ok(total / draws as f64)
}

/// Sample mean and standard error of `|u|^2`, and sample mean of `|u|^6`.
pub fn direction_moments(
    dim: usize,
    space: Option<&ActiveSubspace>,
    draws: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64, f64)> {
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    let mut s6 = 0.0;
    for _ in 0..draws {
        let u = match space {
            Some(s) => draw_active_direction(s, rng)?.full_vector,
            None => rng.standard_normals(dim)?,
        };
        let r2 = u.norm_squared();
        s2 += r2;
        s4 += r2 * r2;
        s6 += r2 * r2 * r2;
    }
    let n = draws as f64;
    let m2 = s2 / n;
    let var = (s4 / n - m2 * m2) * n / (n - 1.0);
    Ok((m2, (var / n).sqrt(), s6 / n))
}

fn oracle_checks(seed: u64) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();

    let sphere = make_problem(ProblemId::Ex4, &ProblemOverrides::default())?;
    let hp = compute_hyperparameters(sphere.sigma2, sphere.l1, sphere.dim, NoiseKind::Additive, None)?;
    let x = DVector::from_element(sphere.dim, 1.0);
    let mut rng = RngStream::new(seed, 0);
    let mean = oracle_error_mean(&sphere, &x, hp.mu, None, ORACLE_DRAWS, &mut rng)?;
    out.push(BoundCheck {
        name: format!("oracle error, sphere P={}", sphere.dim),
        value: mean,
        lower: None,
        upper: Some(oracle_error_bound(sphere.sigma2, sphere.l1, sphere.dim)),
    });

    let active = make_problem(ProblemId::Ex2, &ProblemOverrides::default())?;
    let space = ActiveSubspace::exact(active.exact_basis().expect("ex2 is analytic").clone())?;
    let j = space.dim();
    let hp = active_hyperparameters(active.sigma2, active.l1, j, NoiseKind::Additive, None)?;
    let x = DVector::from_element(active.dim, 1.0);
    let mut rng = RngStream::new(seed, 1);
    let mean = oracle_error_mean(&active, &x, hp.mu, Some(&space), ORACLE_DRAWS, &mut rng)?;
    out.push(BoundCheck {
        name: format!("active oracle error, j={j}"),
        value: mean,
        lower: None,
        upper: Some(oracle_error_bound(active.sigma2, active.l1, j)),
    });
    Ok(out)
}

fn moment_checks(seed: u64) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    let p = 10;
    let mut rng = RngStream::new(seed, 2);
    let (m2, se, m6) = direction_moments(p, None, MOMENT_DRAWS, &mut rng)?;
    out.push(BoundCheck {
        name: format!("E|u|^2 = {p}"),
        value: m2,
        lower: Some(p as f64 - 3.0 * se),
        upper: Some(p as f64 + 3.0 * se),
    });
    out.push(BoundCheck {
        name: format!("E|u|^6 < (P+6)^3, P={p}"),
        value: m6,
        lower: None,
        upper: Some((p as f64 + 6.0).powi(3)),
    });

    let active = make_problem(ProblemId::Ex2, &ProblemOverrides::default())?;
    let space = ActiveSubspace::exact(active.exact_basis().expect("ex2 is analytic").clone())?;
    let j = space.dim();
    let mut rng = RngStream::new(seed, 3);
    let (m2, se, m6) = direction_moments(active.dim, Some(&space), MOMENT_DRAWS, &mut rng)?;
    out.push(BoundCheck {
        name: format!("E|u_A|^2 = {j}"),
        value: m2,
        lower: Some(j as f64 - 3.0 * se),
        upper: Some(j as f64 + 3.0 * se),
    });
    out.push(BoundCheck {
        name: format!("E|u_A|^6 < (j+6)^3, j={j}"),
        value: m6,
        lower: None,
        upper: Some((j as f64 + 6.0).powi(3)),
    });
    Ok(out)
}

fn coefficient_checks() -> Vec<BoundCheck> {
    let c = estimated_bound_coefficient(1.0, 1.0);
    let tol = 4.0 * f64::EPSILON;
    vec![BoundCheck {
        name: "bound coefficient at K1=K2=1 equals sqrt(2)".into(),
        value: c,
        lower: Some(2f64.sqrt() - tol),
        upper: Some(2f64.sqrt() + tol),
    }]
}

/// Runs the requested checks with draws from `seed`.
pub fn validate_bounds(suite: BoundSuite, seed: u64) -> Result<BoundReport> {
    let mut checks = Vec::new();
    if matches!(suite, BoundSuite::All | BoundSuite::OracleError) {
        checks.extend(oracle_checks(seed)?);
    }
    if matches!(suite, BoundSuite::All | BoundSuite::Moments) {
        checks.extend(moment_checks(seed)?);
    }
    if matches!(suite, BoundSuite::All | BoundSuite::Coefficient) {
        checks.extend(coefficient_checks());
    }
    Ok(BoundReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_constants() {
        assert!((oracle_error_bound(1e-5, 2.0, 10) - 1.8102).abs() < 5e-5);
        let expected = 2f64.sqrt() * 1e-3f64.sqrt() * 2.0 * (10.0f64 * 4096.0).sqrt();
        assert!((oracle_error_bound(1e-3, 2.0, 10) - expected).abs() < 1e-12);
        assert!((estimated_bound_coefficient(1.0, 1.0) - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn oracle_error_matches_closed_form() {
        // on a quadratic the error is (mu |u|^2 + noise/mu)^2 |u|^2, with mean
        // mu^2 P(P+2)(P+4) + 2 s2 P / mu^2
        let sphere = make_problem(ProblemId::Ex4, &ProblemOverrides::default()).unwrap();
        let hp = compute_hyperparameters(1e-5, 2.0, 10, NoiseKind::Additive, None).unwrap();
        let p = 10.0;
        let analytic = hp.mu.powi(2) * p * (p + 2.0) * (p + 4.0) + 2.0 * 1e-5 * p / hp.mu.powi(2);
        let mut rng = RngStream::new(0, 0);
        let x = DVector::from_element(10, 1.0);
        let mc = oracle_error_mean(&sphere, &x, hp.mu, None, 40_000, &mut rng).unwrap();
        assert!((mc - analytic).abs() < 0.05 * analytic, "{mc} vs {analytic}");
    }

    #[test]
    fn report_display_and_margins() {
        let c = BoundCheck {
            name: "x".into(),
            value: 1.0,
            lower: None,
            upper: Some(2.0),
        };
        assert!(c.passed());
        assert_eq!(c.margin(), 1.0);
        assert!(c.to_string().starts_with("PASS"));
        let d = BoundCheck {
            upper: Some(0.5),
            ..c
        };
        assert!(!d.passed());
        assert!(d.to_string().starts_with("FAIL"));
    }

    #[test]
    fn suites_parse() {
        assert_eq!("moments".parse::<BoundSuite>().unwrap(), BoundSuite::Moments);
        assert!("bogus".parse::<BoundSuite>().is_err());
    }
}
