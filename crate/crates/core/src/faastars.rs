//! Fully automated pipeline: learn noise and curvature, burn in with
//! full-variable steps, learn an active subspace from the harvested samples,
//! then search inside it, optionally refitting the subspace as samples grow.

use nalgebra::{DMatrix, DVector};

use crate::astars::{active_hyperparameters, astars_step, DirectionWeights};
use crate::error::{Error, Result};
use crate::history::TrialHistory;
use crate::learning::{
    ecnoise, l1_from_step, l1_from_surrogate, l1_init, Confidence, LipschitzEstimate,
    LipschitzSource, NoiseEstimate,
};
use crate::ledger::{Phase, SampleLedger};
use crate::oracle::{NoiseKind, NoisyOracle};
use crate::rng::RngStream;
use crate::stars::{
    compute_hyperparameters, stars_step, Hyperparameters, Provenance, StarsState, StepRecord,
};
use crate::subspace::{
    build_sensitivity, eigendecompose, subspace_distance, ActiveSubspace, BoxNormalizer,
};
use crate::surrogate::{fit_samples, Surrogate, SurrogateKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RidgeMode {
    #[default]
    Off,
    /// Ridge weight equal to the noise variance estimate.
    Sigma2,
}

/// Where the noise variance and Lipschitz constant come from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum HyperSource {
    /// Learned from line samples before the burn-in.
    #[default]
    Learned,
    /// Supplied; the learning phase is skipped entirely.
    Exact { sigma2: f64, l1: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcNoiseConfig {
    pub m: usize,
    /// Line spacing; `None` means `1e-2 * (1 + |x0|)`.
    pub spacing: Option<f64>,
}

impl Default for EcNoiseConfig {
    fn default() -> Self {
        Self { m: 8, spacing: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaastarsConfig {
    pub maxit: usize,
    pub surrogate: SurrogateKind,
    pub tau: f64,
    /// Steps between subspace refits; 0 disables refitting.
    pub retrain_every: usize,
    pub l1_updates: bool,
    pub ridge: RidgeMode,
    pub hyper_source: HyperSource,
    /// Pins the learned dimension instead of thresholding the spectrum.
    pub fixed_dim: Option<usize>,
    pub ecnoise: EcNoiseConfig,
    /// Multiplier applied to the initial Lipschitz estimate.
    pub l1_safety: f64,
    /// Fit surrogates on the samples' bounding box mapped to `[-1, 1]^P`.
    pub normalize_inputs: bool,
    /// Known active basis, used only for reporting subspace error.
    pub reference_basis: Option<DMatrix<f64>>,
    pub weights: DirectionWeights,
}

impl Default for FaastarsConfig {
    fn default() -> Self {
        Self {
            maxit: 1000,
            surrogate: SurrogateKind::Rbf,
            tau: 0.95,
            retrain_every: 0,
            l1_updates: false,
            ridge: RidgeMode::Off,
            hyper_source: HyperSource::Learned,
            fixed_dim: None,
            ecnoise: EcNoiseConfig::default(),
            l1_safety: 1.0,
            normalize_inputs: false,
            reference_basis: None,
            weights: DirectionWeights::Unit,
        }
    }
}

impl FaastarsConfig {
    /// Evaluations spent before the burn-in starts.
    pub fn learning_budget(&self) -> usize {
        match self.hyper_source {
            HyperSource::Learned => self.ecnoise.m,
            HyperSource::Exact { .. } => 0,
        }
    }

    /// Fewest burn-in steps that can supply the surrogate in `p` dimensions;
    /// the burn-in runs longer when those samples leave the design singular.
    pub fn burn_in_steps(&self, p: usize) -> usize {
        let have = self.learning_budget() + 1;
        let need = self.surrogate.min_samples(p);
        need.saturating_sub(have).div_ceil(2)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1], got {}",
                self.tau
            )));
        }
        if let HyperSource::Learned = self.hyper_source {
            if self.ecnoise.m < 6 {
                return Err(Error::InvalidArgument(format!(
                    "ecnoise needs at least 6 samples, got {}",
                    self.ecnoise.m
                )));
            }
        }
        if let HyperSource::Exact { sigma2, l1 } = self.hyper_source {
            if !(sigma2 > 0.0 && l1 > 0.0) {
                return Err(Error::InvalidArgument(
                    "exact noise variance and Lipschitz constant must be positive".into(),
                ));
            }
        }
        if !(self.l1_safety > 0.0 && self.l1_safety.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz safety factor must be positive, got {}",
                self.l1_safety
            )));
        }
        if let Some(j) = self.fixed_dim {
            if j == 0 || j > p {
                return Err(Error::InvalidArgument(format!(
                    "fixed dimension must lie in 1..={p}, got {j}"
                )));
            }
        }
        if let Some(v) = &self.reference_basis {
            if v.nrows() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: v.nrows(),
                });
            }
        }
        let burn = self.burn_in_steps(p);
        if self.maxit <= burn {
            return Err(Error::InvalidArgument(format!(
                "maxit {} does not exceed the {burn} burn-in steps a {} surrogate needs in {p} dimensions",
                self.maxit, self.surrogate
            )));
        }
        Ok(())
    }
}

/// State of the learned quantities after one subspace fit.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    /// 0 for the fit after burn-in, then one per refit.
    pub stage: usize,
    pub sigma2_hat: f64,
    pub noise_confidence: Option<Confidence>,
    pub l1_hat: f64,
    /// Burn-in steps.
    pub burn_in: usize,
    /// Iteration at which this fit happened.
    pub iteration: usize,
    pub ledger_size: usize,
    pub j_tilde: usize,
    pub surrogate: SurrogateKind,
    /// The requested surrogate failed and a linear one was used.
    pub fallback: bool,
    /// The fit failed and the previous subspace was kept.
    pub refit_failed: bool,
    /// Distance to the reference basis, when one was supplied with the
    /// same dimension.
    pub delta: Option<f64>,
    /// `|cos|` between the leading learned and reference directions.
    pub leading_cosine: Option<f64>,
    pub full_hyper: Option<Hyperparameters>,
    pub active_hyper: Option<Hyperparameters>,
}

#[derive(Clone, Debug)]
pub struct Phase1Output {
    pub noise: NoiseEstimate,
    pub lipschitz: LipschitzEstimate,
}

/// Learned (or supplied) noise variance and Lipschitz estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub sigma2: f64,
    pub lipschitz: LipschitzEstimate,
    pub noise_confidence: Option<Confidence>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct FaastarsRun {
    pub history: TrialHistory,
    pub reports: Vec<PhaseReport>,
    pub ledger: SampleLedger,
    pub subspace: Option<ActiveSubspace>,
    pub estimates: Estimates,
    pub final_point: DVector<f64>,
    /// Oracle calls made by this run.
    pub oracle_calls: u64,
    pub burn_in: usize,
    pub steps: usize,
}

/// Samples the oracle along a random line through `x0`, estimates the noise
/// variance and the Lipschitz constant, and records every sample.
pub fn phase1_learn(
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    config: &EcNoiseConfig,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<Phase1Output> {
    let p = oracle.dim();
    let direction = rng.unit_vector(p)?;
    let spacing = config.spacing.unwrap_or(1e-2 * (1.0 + x0.norm()));
    let (mut noise, samples) = ecnoise(oracle, x0, &direction, spacing, config.m, rng)?;
    let mut lipschitz = l1_init(&samples, spacing)?;
    for s in &samples {
        ledger.record(&s.point, s.value, Phase::EcNoise)?;
    }
    if oracle.noise().kind() == NoiseKind::Multiplicative {
        let mean = samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64;
        if mean != 0.0 {
            noise.sigma2_hat /= mean * mean;
        }
    }
    if ledger.len() > p + 1 {
        // enough samples for a model; prefer the richest one they support
        let kind = if ledger.len() >= SurrogateKind::Quadratic.min_samples(p) {
            SurrogateKind::Quadratic
        } else {
            SurrogateKind::Linear
        };
        if let Ok(s) = fit_samples(kind, &ledger.points(), &ledger.values(), 0.0) {
            lipschitz.update(l1_from_surrogate(&s), LipschitzSource::SurrogateHessian);
        }
    }
    Ok(Phase1Output { noise, lipschitz })
}

/// Noise variance actually fed to the hyperparameter formulas: a zero
/// estimate is replaced by the rounding level of the observed values.
fn usable_sigma2(sigma2: f64, scale: f64) -> f64 {
    if sigma2 > 0.0 {
        sigma2
    } else {
        (f64::EPSILON * scale.abs().max(1.0)).powi(2)
    }
}

struct SubspaceFit {
    space: ActiveSubspace,
    surrogate: Surrogate,
    kind: SurrogateKind,
    fallback: bool,
}

/// Fits the configured surrogate to the whole ledger, averages outer
/// products of its gradients at every ledger point and splits the spectrum.
fn learn_subspace(
    ledger: &SampleLedger,
    config: &FaastarsConfig,
    sigma2: f64,
    allow_fallback: bool,
) -> Result<SubspaceFit> {
    let ridge = match config.ridge {
        RidgeMode::Off => 0.0,
        RidgeMode::Sigma2 => sigma2,
    };
    let raw_points = ledger.points();
    let values = ledger.values();
    let normalizer = if config.normalize_inputs {
        Some(BoxNormalizer::fit(&raw_points)?)
    } else {
        None
    };
    let points: Vec<DVector<f64>> = match &normalizer {
        Some(n) => raw_points.iter().map(|x| n.forward(x)).collect(),
        None => raw_points,
    };
    let (surrogate, kind, fallback) = match fit_samples(config.surrogate, &points, &values, ridge) {
        Ok(s) => (s, config.surrogate, false),
        Err(_) if allow_fallback && config.surrogate != SurrogateKind::Linear => (
            fit_samples(SurrogateKind::Linear, &points, &values, ridge)?,
            SurrogateKind::Linear,
            true,
        ),
        Err(e) => return Err(e),
    };
    let mut grads = Vec::with_capacity(points.len());
    for x in &points {
        let g = surrogate.gradient_at(x)?;
        grads.push(match &normalizer {
            Some(n) => n.pull_back_gradient(&g),
            None => g,
        });
    }
    let w = build_sensitivity(&grads)?;
    let eig = eigendecompose(&w)?;
    let space = match config.fixed_dim {
        Some(j) => ActiveSubspace::from_eigen_fixed(&eig, j)?,
        None => ActiveSubspace::from_eigen(&eig, config.tau)?,
    };
    Ok(SubspaceFit {
        space,
        surrogate,
        kind,
        fallback,
    })
}

fn compare_to_reference(
    space: &ActiveSubspace,
    reference: Option<&DMatrix<f64>>,
) -> (Option<f64>, Option<f64>) {
    let Some(v) = reference else {
        return (None, None);
    };
    let v1 = v.column(0);
    let cos = space.basis_active().column(0).dot(&v1).abs() / v1.norm();
    let delta = if v.ncols() == space.dim() {
        subspace_distance(v, space.basis_active()).ok()
    } else {
        None
    };
    (delta, Some(cos))
}

fn hyper_for(
    est: &Estimates,
    dim: usize,
    kind: NoiseKind,
    f: f64,
) -> Result<Hyperparameters> {
    let sigma2 = usable_sigma2(est.sigma2, f);
    Ok(compute_hyperparameters(sigma2, est.lipschitz.l1_hat, dim, kind, Some(f))?
        .with_provenance(est.provenance))
}

fn active_hyper_for(
    est: &Estimates,
    dim: usize,
    kind: NoiseKind,
    f: f64,
) -> Result<Hyperparameters> {
    let sigma2 = usable_sigma2(est.sigma2, f);
    Ok(active_hyperparameters(sigma2, est.lipschitz.l1_hat, dim, kind, Some(f))?
        .with_provenance(est.provenance))
}

fn maybe_update_l1(
    est: &mut Estimates,
    record: Option<StepRecord>,
    enabled: bool,
) -> bool {
    match (enabled, record) {
        (true, Some(r)) => est.lipschitz.update(
            l1_from_step(r.f_prev, r.g, r.f_next, r.mu, r.step, r.u_norm),
            LipschitzSource::FiniteDifference,
        ),
        _ => false,
    }
}

/// Result of the burn-in: the running state, the learned subspace (absent
/// when the burn-in diverged) and the report of the first fit.
#[derive(Clone, Debug)]
pub struct Phase2Output {
    pub state: StarsState,
    pub subspace: Option<ActiveSubspace>,
    pub report: Option<PhaseReport>,
}

/// Full-variable steps until the ledger holds enough samples for the
/// surrogate, then the first subspace fit.
pub fn phase2_burnin(
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    est: &mut Estimates,
    config: &FaastarsConfig,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<Phase2Output> {
    let p = oracle.dim();
    let kind = oracle.noise().kind();
    let required = config.surrogate.min_samples(p);
    // the start value is not known yet; multiplicative smoothing is
    // recomputed from the stored value at every step anyway
    let provisional = hyper_for(est, p, kind, 1.0)?;
    let mut state = StarsState::new(oracle, x0, provisional, rng, ledger, Phase::BurnIn)?;
    state.hyper = hyper_for(est, p, kind, state.f_current)?;
    while ledger.len() < required && state.k < config.maxit {
        let rec = stars_step(&mut state, oracle, rng, ledger)?;
        if rec.is_none() {
            return Ok(Phase2Output {
                state,
                subspace: None,
                report: None,
            });
        }
        if maybe_update_l1(est, rec, config.l1_updates) {
            state.hyper = hyper_for(est, p, kind, state.f_current)?;
        }
    }
    // collinear samples (the noise line, and x, x + mu u, x' within each
    // step) can leave the design singular at the minimum count, so keep
    // stepping until the requested model fits
    let fit = loop {
        match learn_subspace(ledger, config, est.sigma2, false) {
            Ok(fit) => break fit,
            Err(Error::RankDeficient(_)) if state.k < config.maxit => {
                let rec = stars_step(&mut state, oracle, rng, ledger)?;
                if rec.is_none() {
                    return Ok(Phase2Output {
                        state,
                        subspace: None,
                        report: None,
                    });
                }
                if maybe_update_l1(est, rec, config.l1_updates) {
                    state.hyper = hyper_for(est, p, kind, state.f_current)?;
                }
            }
            Err(_) => break learn_subspace(ledger, config, est.sigma2, true)?,
        }
    };
    let burn_in = state.k;
    if config.l1_updates {
        est.lipschitz
            .update(l1_from_surrogate(&fit.surrogate), LipschitzSource::SurrogateHessian);
    }
    let (delta, leading_cosine) =
        compare_to_reference(&fit.space, config.reference_basis.as_ref());
    let report = PhaseReport {
        stage: 0,
        sigma2_hat: est.sigma2,
        noise_confidence: est.noise_confidence,
        l1_hat: est.lipschitz.l1_hat,
        burn_in,
        iteration: state.k,
        ledger_size: ledger.len(),
        j_tilde: fit.space.dim(),
        surrogate: fit.kind,
        fallback: fit.fallback,
        refit_failed: false,
        delta,
        leading_cosine,
        full_hyper: Some(state.hyper),
        active_hyper: None,
    };
    Ok(Phase2Output {
        state,
        subspace: Some(fit.space),
        report: Some(report),
    })
}

/// `steps` approximate-ASTARS steps inside `space`.
#[allow(clippy::too_many_arguments)]
pub fn phase3_approx_astars(
    oracle: &mut NoisyOracle,
    state: &mut StarsState,
    space: &ActiveSubspace,
    est: &mut Estimates,
    config: &FaastarsConfig,
    steps: usize,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<()> {
    let kind = oracle.noise().kind();
    state.phase = Phase::Astars;
    state.hyper = active_hyper_for(est, space.dim(), kind, state.f_current)?;
    for _ in 0..steps {
        let rec = astars_step(state, space, config.weights, oracle, rng, ledger)?;
        if rec.is_none() {
            break;
        }
        if maybe_update_l1(est, rec, config.l1_updates) {
            state.hyper = active_hyper_for(est, space.dim(), kind, state.f_current)?;
        }
    }
    Ok(())
}

/// Alternates blocks of `retrain_every` subspace steps with refits of the
/// subspace on the full ledger until `maxit` steps have been taken. No refit
/// happens after the last block.
#[allow(clippy::too_many_arguments)]
pub fn retrain_loop(
    oracle: &mut NoisyOracle,
    state: &mut StarsState,
    space: ActiveSubspace,
    est: &mut Estimates,
    config: &FaastarsConfig,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
    reports: &mut Vec<PhaseReport>,
) -> Result<ActiveSubspace> {
    let mut space = space;
    let block = if config.retrain_every == 0 {
        usize::MAX
    } else {
        config.retrain_every
    };
    let burn_in = reports.first().map(|r| r.burn_in).unwrap_or(state.k);
    if let Some(last) = reports.last_mut() {
        last.active_hyper = Some(active_hyper_for(
            est,
            space.dim(),
            oracle.noise().kind(),
            state.f_current,
        )?);
    }
    let mut stage = reports.len();
    while state.k < config.maxit && !state.diverged() {
        let steps = block.min(config.maxit - state.k);
        phase3_approx_astars(oracle, state, &space, est, config, steps, rng, ledger)?;
        if state.k >= config.maxit || state.diverged() {
            break;
        }
        let (refit_failed, fit) = match learn_subspace(ledger, config, est.sigma2, true) {
            Ok(fit) => (false, Some(fit)),
            Err(_) => (true, None),
        };
        let (kind, fallback) = match &fit {
            Some(f) => (f.kind, f.fallback),
            None => (config.surrogate, false),
        };
        if let Some(f) = fit {
            if config.l1_updates {
                est.lipschitz
                    .update(l1_from_surrogate(&f.surrogate), LipschitzSource::SurrogateHessian);
            }
            space = f.space;
        }
        let (delta, leading_cosine) =
            compare_to_reference(&space, config.reference_basis.as_ref());
        reports.push(PhaseReport {
            stage,
            sigma2_hat: est.sigma2,
            noise_confidence: est.noise_confidence,
            l1_hat: est.lipschitz.l1_hat,
            burn_in,
            iteration: state.k,
            ledger_size: ledger.len(),
            j_tilde: space.dim(),
            surrogate: kind,
            fallback,
            refit_failed,
            delta,
            leading_cosine,
            full_hyper: None,
            active_hyper: Some(active_hyper_for(
                est,
                space.dim(),
                oracle.noise().kind(),
                state.f_current,
            )?),
        });
        stage += 1;
    }
    Ok(space)
}

/// Runs all phases from `x0`.
pub fn run_faastars(
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    config: &FaastarsConfig,
    rng: &mut RngStream,
) -> Result<FaastarsRun> {
    let p = oracle.dim();
    config.validate(p)?;
    let calls_before = oracle.eval_count();
    let mut ledger = SampleLedger::new();

    let mut est = match config.hyper_source {
        HyperSource::Learned => {
            let out = phase1_learn(oracle, x0, &config.ecnoise, rng, &mut ledger)?;
            Estimates {
                sigma2: out.noise.sigma2_hat,
                lipschitz: out.lipschitz.scaled(config.l1_safety),
                noise_confidence: Some(out.noise.confidence),
                provenance: Provenance::Estimated,
            }
        }
        HyperSource::Exact { sigma2, l1 } => Estimates {
            sigma2,
            lipschitz: LipschitzEstimate::new(l1 * config.l1_safety, LipschitzSource::FiniteDifference),
            noise_confidence: None,
            provenance: Provenance::Exact,
        },
    };
    let learning_calls = ledger.len();

    let phase2 = phase2_burnin(oracle, x0, &mut est, config, rng, &mut ledger)?;
    let mut state = phase2.state;
    let burn_in = state.k;
    let mut reports: Vec<PhaseReport> = phase2.report.into_iter().collect();
    let subspace = match phase2.subspace {
        Some(space) => Some(retrain_loop(
            oracle,
            &mut state,
            space,
            &mut est,
            config,
            rng,
            &mut ledger,
            &mut reports,
        )?),
        None => None,
    };

    let oracle_calls = oracle.eval_count() - calls_before;
    if !state.diverged() {
        assert_eq!(
            oracle_calls,
            (learning_calls + 1 + 2 * state.k) as u64,
            "evaluation accounting drifted"
        );
    }
    Ok(FaastarsRun {
        history: state.history,
        reports,
        ledger,
        subspace,
        estimates: est,
        final_point: state.current,
        oracle_calls,
        burn_in,
        steps: state.k,
    })
}
