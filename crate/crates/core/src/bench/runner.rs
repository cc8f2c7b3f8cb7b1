//! Seeded multi-trial execution.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::astars::{active_hyperparameters, run_astars};
use crate::bench::problems::BenchmarkProblem;
use crate::bench::summary::TrialSummary;
use crate::error::{Error, Result};
use crate::faastars::{phase1_learn, run_faastars, EcNoiseConfig, FaastarsConfig, HyperSource, PhaseReport};
use crate::history::TrialHistory;
use crate::ledger::SampleLedger;
use crate::oracle::{NoiseKind, NoisyOracle};
use crate::rng::RngStream;
use crate::stars::{compute_hyperparameters, run_stars, Hyperparameters, Provenance};
use crate::subspace::ActiveSubspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Stars,
    Astars,
    Faastars,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Stars => "stars",
            Algorithm::Astars => "astars",
            Algorithm::Faastars => "faastars",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stars" => Ok(Algorithm::Stars),
            "astars" => Ok(Algorithm::Astars),
            "faastars" => Ok(Algorithm::Faastars),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected stars, astars or faastars)"
            ))),
        }
    }
}

/// How the noise variance and Lipschitz constant are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HyperMode {
    /// The problem's published constants.
    Exact,
    /// Learned from line samples at the start of each trial.
    Estimated,
    /// Exact noise variance, Lipschitz constant multiplied by `c`.
    Scaled(f64),
}

impl fmt::Display for HyperMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperMode::Exact => write!(f, "exact"),
            HyperMode::Estimated => write!(f, "estimated"),
            HyperMode::Scaled(c) => write!(f, "scaled({c})"),
        }
    }
}

impl FromStr for HyperMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "exact" {
            return Ok(HyperMode::Exact);
        }
        if t == "estimated" {
            return Ok(HyperMode::Estimated);
        }
        if let Some(inner) = t.strip_prefix("scaled(").and_then(|r| r.strip_suffix(')')) {
            let c: f64 = inner
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad scale factor in `{s}`")))?;
            if c > 0.0 && c.is_finite() {
                return Ok(HyperMode::Scaled(c));
            }
        }
        Err(Error::InvalidArgument(format!(
            "unknown hyperparameter mode `{s}` (expected exact, estimated or scaled(c))"
        )))
    }
}

/// Algorithm plus everything it needs besides the problem and budget.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub hyper: HyperMode,
    /// Pipeline settings; `maxit` and the hyperparameter source are
    /// overwritten per run.
    pub faastars: FaastarsConfig,
    /// Learning-phase settings for `Estimated` mode.
    pub ecnoise: EcNoiseConfig,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm, hyper: HyperMode) -> Self {
        Self {
            algorithm,
            hyper,
            faastars: FaastarsConfig::default(),
            ecnoise: EcNoiseConfig::default(),
        }
    }

    pub fn with_faastars(mut self, config: FaastarsConfig) -> Self {
        self.faastars = config;
        self
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.algorithm, self.hyper)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub index: usize,
    pub x0: DVector<f64>,
    pub history: TrialHistory,
    pub reports: Vec<PhaseReport>,
    pub oracle_calls: u64,
    /// Evaluations spent on learning before the first iterate.
    pub learning_calls: usize,
    pub steps: usize,
}

impl TrialResult {
    pub fn diverged(&self) -> bool {
        self.history.diverged()
    }
}

#[derive(Clone, Debug)]
pub struct TrialSet {
    pub results: Vec<TrialResult>,
    pub summary: TrialSummary,
}

/// Anything trials can be run on: a benchmark problem or a user-supplied
/// black box.
pub trait TrialTarget: Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn noise_kind(&self) -> NoiseKind;
    /// Known noise variance and Lipschitz constant, needed by the exact and
    /// scaled modes.
    fn constants(&self) -> Option<(f64, f64)>;
    fn exact_basis(&self) -> Option<&DMatrix<f64>>;
    /// A fresh oracle with its own evaluation counter.
    fn oracle(&self) -> Result<NoisyOracle>;
    fn initial_point(&self, rng: &mut RngStream) -> Result<DVector<f64>>;
}

impl TrialTarget for BenchmarkProblem {
    fn name(&self) -> String {
        self.id.to_string()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    fn constants(&self) -> Option<(f64, f64)> {
        Some((self.sigma2, self.l1))
    }

    fn exact_basis(&self) -> Option<&DMatrix<f64>> {
        BenchmarkProblem::exact_basis(self)
    }

    fn oracle(&self) -> Result<NoisyOracle> {
        BenchmarkProblem::oracle(self)
    }

    fn initial_point(&self, rng: &mut RngStream) -> Result<DVector<f64>> {
        BenchmarkProblem::initial_point(self, rng)
    }
}

fn exact_subspace<T: TrialTarget + ?Sized>(target: &T) -> Result<ActiveSubspace> {
    let basis = target.exact_basis().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} has no analytic active subspace; use faastars with a fixed dimension",
            target.name()
        ))
    })?;
    ActiveSubspace::exact(basis.clone())
}

fn known_constants<T: TrialTarget + ?Sized>(target: &T) -> Result<(f64, f64)> {
    target.constants().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} has no known noise variance and Lipschitz constant; use estimated mode",
            target.name()
        ))
    })
}

/// Noise variance and Lipschitz constant for one trial, plus the
/// evaluations spent getting them.
fn trial_constants<T: TrialTarget + ?Sized>(
    target: &T,
    spec: &AlgorithmSpec,
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<(f64, f64, Provenance, usize)> {
    match spec.hyper {
        HyperMode::Exact => {
            let (sigma2, l1) = known_constants(target)?;
            Ok((sigma2, l1, Provenance::Exact, 0))
        }
        HyperMode::Scaled(c) => {
            let (sigma2, l1) = known_constants(target)?;
            Ok((sigma2, c * l1, Provenance::Estimated, 0))
        }
        HyperMode::Estimated => {
            let mut ledger = SampleLedger::new();
            let out = phase1_learn(oracle, x0, &spec.ecnoise, rng, &mut ledger)?;
            let sigma2 = if out.noise.sigma2_hat > 0.0 {
                out.noise.sigma2_hat
            } else {
                f64::EPSILON * f64::EPSILON
            };
            Ok((
                sigma2,
                out.lipschitz.l1_hat * spec.faastars.l1_safety,
                Provenance::Estimated,
                ledger.len(),
            ))
        }
    }
}

/// One trial on stream `(seed, index)`; `x0` is the first draw.
///
/// A non-finite value before the first step (at `x0` or on the learning
/// line) ends the trial as diverged with an empty history.
pub fn run_trial<T: TrialTarget + ?Sized>(
    target: &T,
    spec: &AlgorithmSpec,
    maxit: usize,
    seed: u64,
    index: usize,
) -> Result<TrialResult> {
    let mut rng = RngStream::new(seed, index as u64);
    let x0 = target.initial_point(&mut rng)?;
    let mut oracle = target.oracle()?;
    match trial_body(target, spec, maxit, &x0, &mut oracle, &mut rng) {
        Ok((history, reports, learning_calls, steps)) => Ok(TrialResult {
            index,
            x0,
            history,
            reports,
            oracle_calls: oracle.eval_count(),
            learning_calls,
            steps,
        }),
        Err(Error::NonFinite(_)) => {
            let mut history = TrialHistory::new();
            history.mark_diverged();
            Ok(TrialResult {
                index,
                x0,
                history,
                reports: Vec::new(),
                oracle_calls: oracle.eval_count(),
                learning_calls: 0,
                steps: 0,
            })
        }
        Err(e) => Err(e),
    }
}

type TrialOutput = (TrialHistory, Vec<PhaseReport>, usize, usize);

fn trial_body<T: TrialTarget + ?Sized>(
    target: &T,
    spec: &AlgorithmSpec,
    maxit: usize,
    x0: &DVector<f64>,
    oracle: &mut NoisyOracle,
    rng: &mut RngStream,
) -> Result<TrialOutput> {
    let kind = target.noise_kind();
    match spec.algorithm {
        Algorithm::Stars | Algorithm::Astars => {
            // checked before any evaluation is spent on learning
            let space = match spec.algorithm {
                Algorithm::Astars => Some(exact_subspace(target)?),
                _ => None,
            };
            let (sigma2, l1, provenance, learning_calls) =
                trial_constants(target, spec, oracle, x0, rng)?;
            // multiplicative smoothing is recomputed from each stored value
            let f_hint = Some(1.0);
            let history = match space {
                None => {
                    let hp: Hyperparameters =
                        compute_hyperparameters(sigma2, l1, target.dim(), kind, f_hint)?
                            .with_provenance(provenance);
                    run_stars(oracle, x0, maxit, &hp, rng)?
                }
                Some(space) => {
                    let hp = active_hyperparameters(sigma2, l1, space.dim(), kind, f_hint)?
                        .with_provenance(provenance);
                    run_astars(oracle, x0, maxit, &space, &hp, rng)?
                }
            };
            let steps = history.len().saturating_sub(1);
            Ok((history, Vec::new(), learning_calls, steps))
        }
        Algorithm::Faastars => {
            let mut config = spec.faastars.clone();
            config.maxit = maxit;
            config.hyper_source = match spec.hyper {
                HyperMode::Exact => {
                    let (sigma2, l1) = known_constants(target)?;
                    HyperSource::Exact { sigma2, l1 }
                }
                HyperMode::Scaled(c) => {
                    let (sigma2, l1) = known_constants(target)?;
                    HyperSource::Exact { sigma2, l1: c * l1 }
                }
                HyperMode::Estimated => {
                    config.ecnoise = spec.ecnoise;
                    HyperSource::Learned
                }
            };
            if config.reference_basis.is_none() {
                config.reference_basis = target.exact_basis().cloned();
            }
            let learning_calls = config.learning_budget();
            let run = run_faastars(oracle, x0, &config, rng)?;
            Ok((run.history, run.reports, learning_calls, run.steps))
        }
    }
}

/// `trials` independent trials, in parallel on at most `jobs` threads
/// (all cores when `None`). Results are ordered by trial index.
pub fn run_trials<T: TrialTarget + ?Sized>(
    target: &T,
    spec: &AlgorithmSpec,
    trials: usize,
    maxit: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<TrialSet> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    if maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }
    let work = || -> Result<Vec<TrialResult>> {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(target, spec, maxit, seed, t))
            .collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let histories: Vec<TrialHistory> = results.iter().map(|r| r.history.clone()).collect();
    let summary = TrialSummary::from_histories(spec.label(), &histories);
    Ok(TrialSet { results, summary })
}
