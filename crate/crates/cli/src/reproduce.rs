//! Pinned figure configurations.
//!
//! Every constant a figure depends on is spelled out here rather than taken
//! from library defaults, so changing a default elsewhere cannot move them.

use astars::astars::DirectionWeights;
use astars::bench::{Algorithm, AlgorithmSpec, HyperMode, ProblemId};
use astars::faastars::{EcNoiseConfig, FaastarsConfig, HyperSource, RidgeMode};
use astars::surrogate::SurrogateKind;

use crate::args::Figure;

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSpec {
    pub name: String,
    pub spec: AlgorithmSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FigureSpec {
    pub name: &'static str,
    pub problem: ProblemId,
    pub trials: usize,
    pub maxit: usize,
    /// Subtracted from plotted values.
    pub shift: f64,
    pub series: Vec<SeriesSpec>,
}

fn pipeline(tau: f64, retrain_every: usize, ridge: RidgeMode, fixed_dim: Option<usize>) -> FaastarsConfig {
    FaastarsConfig {
        maxit: 1,
        surrogate: SurrogateKind::Quadratic,
        tau,
        retrain_every,
        l1_updates: false,
        ridge,
        hyper_source: HyperSource::Learned,
        fixed_dim,
        ecnoise: EcNoiseConfig { m: 8, spacing: None },
        l1_safety: 1.0,
        normalize_inputs: false,
        reference_basis: None,
        weights: DirectionWeights::Unit,
    }
}

fn plain(name: &str, algorithm: Algorithm, hyper: HyperMode) -> SeriesSpec {
    let mut spec = AlgorithmSpec::new(algorithm, hyper);
    spec.ecnoise = EcNoiseConfig { m: 8, spacing: None };
    spec.faastars = pipeline(0.95, 0, RidgeMode::Off, None);
    SeriesSpec {
        name: name.into(),
        spec,
    }
}

fn faastars(name: &str, config: FaastarsConfig) -> SeriesSpec {
    let mut s = plain(name, Algorithm::Faastars, HyperMode::Exact);
    s.spec.faastars = config;
    s
}

fn three_way(problem: ProblemId, name: &'static str, trials: usize, maxit: usize, shift: f64, config: FaastarsConfig) -> FigureSpec {
    FigureSpec {
        name,
        problem,
        trials,
        maxit,
        shift,
        series: vec![
            plain("stars-exact", Algorithm::Stars, HyperMode::Exact),
            faastars("faastars-exact", config),
            plain("astars-exact", Algorithm::Astars, HyperMode::Exact),
        ],
    }
}

pub fn figure_spec(fig: Figure) -> FigureSpec {
    match fig {
        Figure::Fig1 => three_way(
            ProblemId::Ex1,
            "fig1",
            100,
            800,
            0.0,
            pipeline(0.99, 40, RidgeMode::Off, None),
        ),
        Figure::Fig2 => three_way(
            ProblemId::Ex2,
            "fig2",
            100,
            800,
            0.0,
            pipeline(0.999, 20, RidgeMode::Sigma2, None),
        ),
        // a quadratic refit in 50 dimensions over the whole ledger costs
        // seconds, so the desk-scale pipeline fits once after the burn-in
        Figure::Fig3 => three_way(
            ProblemId::Ex3,
            "fig3",
            25,
            7500,
            -5.0 / 12.0,
            pipeline(0.999, 0, RidgeMode::Sigma2, None),
        ),
        Figure::Fig4 => FigureSpec {
            name: "fig4",
            problem: ProblemId::Ex4,
            trials: 100,
            maxit: 2000,
            shift: 0.0,
            series: [0.1, 0.2, 1.0, 4.0]
                .iter()
                .map(|&c| plain(&format!("stars-c{c}"), Algorithm::Stars, HyperMode::Scaled(c)))
                .collect(),
        },
        Figure::Fig5 => {
            let mut series = vec![plain("stars-exact", Algorithm::Stars, HyperMode::Exact)];
            for j in [2, 4, 8] {
                series.push(faastars(
                    &format!("faastars-j{j}"),
                    pipeline(0.95, 0, RidgeMode::Off, Some(j)),
                ));
            }
            FigureSpec {
                name: "fig5",
                problem: ProblemId::Ex5,
                trials: 25,
                maxit: 5000,
                shift: 0.0,
                series,
            }
        }
    }
}
