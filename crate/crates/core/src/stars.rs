//! Gaussian-smoothed random search in the full variables.

use std::fmt;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::history::{HistoryRow, TrialHistory};
use crate::ledger::{Phase, SampleLedger};
use crate::oracle::{NoiseKind, NoisyOracle};
use crate::rng::RngStream;

/// Values beyond `DIVERGENCE_FACTOR * (1 + |f(x0)|)` stop a run.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Estimated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Estimated => write!(f, "estimated"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparameters {
    /// Smoothing factor. For multiplicative noise this is the value at the
    /// point the parameters were computed for; see [`Self::smoothing_at`].
    pub mu: f64,
    pub h: f64,
    pub dim: usize,
    pub provenance: Provenance,
    pub noise_kind: NoiseKind,
    pub sigma2: f64,
    pub l1: f64,
}

fn smoothing(sigma2: f64, l1: f64, dim: usize, kind: NoiseKind, f: f64) -> f64 {
    let p = dim as f64;
    let cube = (p + 6.0).powi(3);
    match kind {
        NoiseKind::Additive => (8.0 * sigma2 * p / (l1 * l1 * cube)).powf(0.25),
        NoiseKind::Multiplicative => {
            let f = f.abs().max(f64::EPSILON);
            (16.0 * sigma2 * f * f * p / (l1 * l1 * (1.0 + 3.0 * sigma2) * cube)).powf(0.25)
        }
    }
}

/// Optimal smoothing factor and step size for `dim` directions.
///
/// Additive: `mu = (8 s2 P / (L1^2 (P+6)^3))^(1/4)`; multiplicative:
/// `mu = (16 s2 f^2 P / (L1^2 (1+3 s2) (P+6)^3))^(1/4)`; both use
/// `h = 1 / (4 L1 (P+4))`.
pub fn compute_hyperparameters(
    sigma2: f64,
    l1: f64,
    dim: usize,
    noise_kind: NoiseKind,
    f_value: Option<f64>,
) -> Result<Hyperparameters> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if !(l1 > 0.0 && l1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz constant must be positive, got {l1}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let f = match (noise_kind, f_value) {
        (NoiseKind::Additive, _) => 0.0,
        (NoiseKind::Multiplicative, Some(f)) if f.is_finite() => f,
        (NoiseKind::Multiplicative, _) => {
            return Err(Error::InvalidArgument(
                "multiplicative noise needs a finite function value".into(),
            ))
        }
    };
    Ok(Hyperparameters {
        mu: smoothing(sigma2, l1, dim, noise_kind, f),
        h: 1.0 / (4.0 * l1 * (dim as f64 + 4.0)),
        dim,
        provenance: Provenance::Exact,
        noise_kind,
        sigma2,
        l1,
    })
}

impl Hyperparameters {
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Smoothing factor to use at an iterate whose stored value is `f`.
    pub fn smoothing_at(&self, f: f64) -> f64 {
        match self.noise_kind {
            NoiseKind::Additive => self.mu,
            NoiseKind::Multiplicative => smoothing(self.sigma2, self.l1, self.dim, self.noise_kind, f),
        }
    }
}

/// The three values produced by one step, all on the line through the old
/// iterate along `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub f_prev: f64,
    pub g: f64,
    pub f_next: f64,
    pub mu: f64,
    /// Distance moved along `u`, in multiples of `u`: `x_new = x - step * u`.
    pub step: f64,
    pub u_norm: f64,
}

#[derive(Clone, Debug)]
pub struct StarsState {
    pub current: DVector<f64>,
    /// Stored noisy value at `current`; never re-evaluated.
    pub f_current: f64,
    pub k: usize,
    pub hyper: Hyperparameters,
    pub history: TrialHistory,
    /// Ledger tag for new evaluations.
    pub phase: Phase,
    f_start: f64,
}

impl StarsState {
    /// Evaluates the starting point once and records it.
    pub fn new(
        oracle: &mut NoisyOracle,
        x0: &DVector<f64>,
        hyper: Hyperparameters,
        rng: &mut RngStream,
        ledger: &mut SampleLedger,
        phase: Phase,
    ) -> Result<Self> {
        check_dim(oracle.dim(), x0.len())?;
        let f0 = oracle.evaluate(x0, rng)?;
        if !f0.is_finite() {
            return Err(Error::NonFinite(f0));
        }
        ledger.record(x0, f0, phase)?;
        let mut history = TrialHistory::new();
        history.push(HistoryRow {
            iteration: 0,
            fevals: oracle.eval_count(),
            fhat: f0,
            ftrue: oracle.true_value(x0),
        });
        Ok(Self {
            current: x0.clone(),
            f_current: f0,
            k: 0,
            hyper,
            history,
            phase,
            f_start: f0,
        })
    }

    pub fn diverged(&self) -> bool {
        self.history.diverged()
    }

    fn out_of_bounds(&self, v: f64) -> bool {
        !v.is_finite() || v.abs() > DIVERGENCE_FACTOR * (1.0 + self.f_start.abs())
    }
}

/// One step along a given direction `u`: `g = f(x + mu u)`,
/// `d = ((g - f_k) / mu) u`, `x <- x - h d`. Spends exactly two oracle calls
/// unless the first one already diverges.
///
/// Returns `None` when the state is (or becomes) diverged.
pub fn step_along(
    state: &mut StarsState,
    u: &DVector<f64>,
    oracle: &mut NoisyOracle,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<Option<StepRecord>> {
    check_dim(state.current.len(), u.len())?;
    if state.diverged() {
        return Ok(None);
    }
    let mu = state.hyper.smoothing_at(state.f_current);
    let probe = &state.current + u * mu;
    let g = oracle.evaluate(&probe, rng)?;
    if state.out_of_bounds(g) {
        let _ = ledger.record(&probe, g, state.phase);
        state.history.mark_diverged();
        return Ok(None);
    }
    ledger.record(&probe, g, state.phase)?;

    let coeff = (g - state.f_current) / mu;
    let step = state.hyper.h * coeff;
    let next = &state.current - u * step;
    let f_next = oracle.evaluate(&next, rng)?;
    let _ = ledger.record(&next, f_next, state.phase);
    if !f_next.is_finite() || next.iter().any(|c| !c.is_finite()) {
        state.history.mark_diverged();
        return Ok(None);
    }

    let record = StepRecord {
        f_prev: state.f_current,
        g,
        f_next,
        mu,
        step,
        u_norm: u.norm(),
    };
    state.k += 1;
    state.current = next;
    state.f_current = f_next;
    state.history.push(HistoryRow {
        iteration: state.k,
        fevals: oracle.eval_count(),
        fhat: f_next,
        ftrue: oracle.true_value(&state.current),
    });
    if state.out_of_bounds(f_next) {
        state.history.mark_diverged();
        return Ok(None);
    }
    Ok(Some(record))
}

/// One full-variable step with `u ~ N(0, I_P)`.
pub fn stars_step(
    state: &mut StarsState,
    oracle: &mut NoisyOracle,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<Option<StepRecord>> {
    if state.diverged() {
        return Ok(None);
    }
    let u = rng.standard_normals(state.current.len())?;
    step_along(state, &u, oracle, rng, ledger)
}

/// `maxit` full-variable steps from `x0`. Stops early on divergence.
pub fn run_stars(
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    maxit: usize,
    hyper: &Hyperparameters,
    rng: &mut RngStream,
) -> Result<TrialHistory> {
    if maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }
    let mut ledger = SampleLedger::new();
    let mut state = StarsState::new(oracle, x0, *hyper, rng, &mut ledger, Phase::BurnIn)?;
    for _ in 0..maxit {
        if stars_step(&mut state, oracle, rng, &mut ledger)?.is_none() {
            break;
        }
    }
    Ok(state.history)
}
