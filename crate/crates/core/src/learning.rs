//! Noise-level and Lipschitz-constant estimation from a handful of samples.

use std::fmt;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::ledger::{Phase, Sample};
use crate::oracle::NoisyOracle;
use crate::rng::RngStream;
use crate::surrogate::Surrogate;

/// Smallest Lipschitz estimate ever reported.
pub const L1_FLOOR: f64 = 1e-8;

/// Adjacent difference levels must agree within this factor.
const LEVEL_AGREEMENT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Confidence {
    Accepted,
    Weak,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Confidence::Accepted => write!(f, "accepted"),
            Confidence::Weak => write!(f, "weak"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseEstimate {
    pub sigma2_hat: f64,
    pub confidence: Confidence,
    pub samples_used: usize,
    /// Difference order the estimate came from.
    pub level: usize,
}

/// `(k!)^2 / (2k)!`, built without factorials.
pub fn gamma(k: usize) -> f64 {
    (1..=k).fold(1.0, |g, j| g * j as f64 / (2.0 * (2 * j - 1) as f64))
}

/// Noise variance from values sampled at equally spaced points on a line.
///
/// Forms the forward difference table; level `k` gives
/// `gamma(k) * mean((D^k f)^2)`. The first level that agrees with the next
/// one within a factor of 4 and whose differences change sign is accepted.
/// Otherwise the smallest level estimate is returned as weak.
pub fn noise_from_values(values: &[f64]) -> Result<NoiseEstimate> {
    let m = values.len();
    if m < 3 {
        return Err(Error::TooFewSamples {
            kind: "ecnoise",
            required: 3,
            available: m,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(f64::NAN));
    }
    let mut diffs = values.to_vec();
    let mut estimates = Vec::with_capacity(m - 1);
    let mut sign_change = Vec::with_capacity(m - 1);
    for k in 1..m {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_sq = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
        estimates.push(gamma(k) * mean_sq);
        let (lo, hi) = diffs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            });
        sign_change.push(lo * hi < 0.0);
    }
    for k in 0..estimates.len().saturating_sub(1) {
        let (a, b) = (estimates[k], estimates[k + 1]);
        if a > 0.0 && b > 0.0 && a.max(b) <= LEVEL_AGREEMENT * a.min(b) && sign_change[k] {
            return Ok(NoiseEstimate {
                sigma2_hat: a,
                confidence: Confidence::Accepted,
                samples_used: m,
                level: k + 1,
            });
        }
    }
    let (idx, &best) = estimates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least two levels");
    Ok(NoiseEstimate {
        sigma2_hat: best,
        confidence: Confidence::Weak,
        samples_used: m,
        level: idx + 1,
    })
}

/// Samples `m` values of the oracle at `base + t * direction` for equally
/// spaced, centered `t`, and estimates the noise variance from them.
/// The returned samples are ordered along the line.
pub fn ecnoise(
    oracle: &mut NoisyOracle,
    base: &DVector<f64>,
    direction: &DVector<f64>,
    spacing: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<(NoiseEstimate, Vec<Sample>)> {
    if m < 6 {
        return Err(Error::InvalidArgument(format!(
            "ecnoise needs at least 6 samples, got {m}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ecnoise spacing must be positive, got {spacing}"
        )));
    }
    check_dim(base.len(), direction.len())?;
    let norm = direction.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("ecnoise direction is zero".into()));
    }
    let dir = direction / norm;
    let center = (m as f64 - 1.0) / 2.0;
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let t = (i as f64 - center) * spacing;
        let point = base + &dir * t;
        let value = oracle.evaluate(&point, rng)?;
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        samples.push(Sample {
            point,
            value,
            phase: Phase::EcNoise,
        });
    }
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    Ok((noise_from_values(&values)?, samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipschitzSource {
    FiniteDifference,
    SurrogateHessian,
}

impl fmt::Display for LipschitzSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LipschitzSource::FiniteDifference => write!(f, "finite_difference"),
            LipschitzSource::SurrogateHessian => write!(f, "surrogate_hessian"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    pub l1_hat: f64,
    pub source: LipschitzSource,
    /// Every accepted value, oldest first.
    pub history: Vec<f64>,
}

impl LipschitzEstimate {
    pub fn new(l1: f64, source: LipschitzSource) -> Self {
        let l1_hat = if l1.is_finite() { l1.max(L1_FLOOR) } else { L1_FLOOR };
        Self {
            l1_hat,
            source,
            history: vec![l1_hat],
        }
    }

    /// Accepts `candidate` only when it is strictly more pessimistic.
    pub fn update(&mut self, candidate: f64, source: LipschitzSource) -> bool {
        if candidate.is_finite() && candidate > 0.0 && candidate > self.l1_hat {
            self.l1_hat = candidate;
            self.source = source;
            self.history.push(candidate);
            true
        } else {
            false
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.l1_hat = (self.l1_hat * factor).max(L1_FLOOR);
        if let Some(last) = out.history.last_mut() {
            *last = out.l1_hat;
        }
        out
    }
}

/// Largest centered second difference over the interior of equally spaced
/// line samples, floored at [`L1_FLOOR`].
pub fn l1_init(line_samples: &[Sample], spacing: f64) -> Result<LipschitzEstimate> {
    if line_samples.len() < 3 {
        return Err(Error::TooFewSamples {
            kind: "finite difference",
            required: 3,
            available: line_samples.len(),
        });
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let h2 = spacing * spacing;
    let curvature = line_samples
        .windows(3)
        .map(|w| (w[0].value - 2.0 * w[1].value + w[2].value).abs() / h2)
        .fold(0.0, f64::max);
    Ok(LipschitzEstimate::new(
        curvature,
        LipschitzSource::FiniteDifference,
    ))
}

/// Free-function form of [`LipschitzEstimate::update`].
pub fn l1_update(current: &LipschitzEstimate, candidate: f64) -> LipschitzEstimate {
    let mut next = current.clone();
    next.update(candidate, current.source);
    next
}

/// Second derivative of the parabola through three points with distinct
/// abscissae.
pub fn uncentered_second_difference(t: [f64; 3], f: [f64; 3]) -> f64 {
    let [t0, t1, t2] = t;
    let [f0, f1, f2] = f;
    2.0 * (f0 / ((t0 - t1) * (t0 - t2))
        + f1 / ((t1 - t0) * (t1 - t2))
        + f2 / ((t2 - t0) * (t2 - t1)))
}

/// Curvature candidate from one random-search step.
///
/// The step evaluates `f_prev` at `x`, `g` at `x + mu u` and `f_next` at
/// `x - step u`; all three lie on the line through `x` along `u`.
pub fn l1_from_step(f_prev: f64, g: f64, f_next: f64, mu: f64, step: f64, u_norm: f64) -> f64 {
    if !(u_norm > 0.0) || mu == 0.0 || step == 0.0 || (mu + step) == 0.0 {
        return 0.0;
    }
    let t = [0.0, mu * u_norm, -step * u_norm];
    let c = uncentered_second_difference(t, [f_prev, g, f_next]).abs();
    if c.is_finite() {
        c
    } else {
        0.0
    }
}

/// Spectral norm of the surrogate Hessian as a Lipschitz candidate.
pub fn l1_from_surrogate(s: &Surrogate) -> f64 {
    s.hessian_spectral_norm()
}
