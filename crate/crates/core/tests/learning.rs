use std::sync::Arc;

use nalgebra::DVector;

use astars::bench::{make_problem, ProblemId, ProblemOverrides};
use astars::faastars::{phase1_learn, EcNoiseConfig};
use astars::learning::{ecnoise, l1_init, l1_update, Confidence, LipschitzEstimate, LipschitzSource, L1_FLOOR};
use astars::ledger::{Phase, Sample, SampleLedger};
use astars::oracle::{FnObjective, NoiseModel, NoisyOracle, Objective};
use astars::rng::RngStream;

fn line(f: impl Fn(f64) -> f64, ts: &[f64]) -> Vec<Sample> {
    ts.iter()
        .map(|&t| Sample {
            point: DVector::from_vec(vec![t]),
            value: f(t),
            phase: Phase::EcNoise,
        })
        .collect()
}

#[test]
fn second_differences_of_quadratics() {
    let sq = l1_init(&line(|t| t * t, &[0.0, 0.1, 0.2]), 0.1).unwrap();
    assert!((sq.l1_hat - 2.0).abs() < 1e-12);
    let four = l1_init(&line(|t| 4.0 * t * t, &[0.3, 0.4, 0.5, 0.6]), 0.1).unwrap();
    assert!((four.l1_hat - 8.0).abs() < 1e-12);
    let flat = l1_init(&line(|t| 3.0 * t - 1.0, &[0.0, 0.1, 0.2]), 0.1).unwrap();
    assert_eq!(flat.l1_hat, L1_FLOOR);
    assert!(l1_init(&line(|t| t, &[0.0, 0.1]), 0.1).is_err());
}

#[test]
fn update_accepts_only_larger_values() {
    let cur = LipschitzEstimate::new(2.0, LipschitzSource::FiniteDifference);
    assert_eq!(l1_update(&cur, 1.0).l1_hat, 2.0);
    assert_eq!(l1_update(&cur, 2.0).l1_hat, 2.0);
    let up = l1_update(&cur, 3.0);
    assert_eq!(up.l1_hat, 3.0);
    assert_eq!(up.history, vec![2.0, 3.0]);
    assert_eq!(l1_update(&cur, -5.0).l1_hat, 2.0);
}

#[test]
fn pure_noise_on_zero_objective() {
    let obj: Arc<dyn Objective> = Arc::new(FnObjective::new(5, |_: &DVector<f64>| 0.0));
    let base = DVector::zeros(5);
    let mut hits = 0;
    for seed in 0..200 {
        let mut o = NoisyOracle::new(obj.clone(), NoiseModel::additive(1e-4).unwrap());
        let mut rng = RngStream::new(seed, 0);
        let dir = rng.unit_vector(5).unwrap();
        let (est, _) = ecnoise(&mut o, &base, &dir, 0.01, 8, &mut rng).unwrap();
        if (2.5e-5..=4e-4).contains(&est.sigma2_hat) {
            hits += 1;
        }
    }
    assert!(hits >= 160, "{hits} of 200");
}

#[test]
fn noise_level_on_first_example() {
    let p = make_problem(ProblemId::Ex1, &ProblemOverrides::default()).unwrap();
    let runs = 200;
    let mut hits = 0;
    for seed in 0..runs {
        let mut rng = RngStream::new(seed, 1);
        let x0 = p.initial_point(&mut rng).unwrap();
        let dir = rng.unit_vector(p.dim).unwrap();
        let mut o = p.oracle().unwrap();
        let (est, _) = ecnoise(&mut o, &x0, &dir, 0.01, 8, &mut rng).unwrap();
        let ratio = est.sigma2_hat / p.sigma2;
        if est.confidence == Confidence::Accepted && (0.25..=4.0).contains(&ratio) {
            hits += 1;
        }
    }
    assert!(hits * 100 >= 80 * runs, "{hits} of {runs}");
}

/// P(B in [lo, hi]) for B ~ Beta(1/2, 19/2): the squared component of a
/// uniform unit vector in 20 dimensions along a fixed axis. Computed
/// independently with a Beta CDF.
const BETA_PROB_1_TO_8: f64 = 0.451_556;

#[test]
fn phase1_curvature_along_random_lines() {
    // noiseless (sum x)^2 in 20 dimensions: the second difference along a
    // unit direction d is 2 (1.d)^2 = 40 B, so l1_hat lands in [1, 8]
    // exactly when B lies in [0.025, 0.2]
    let p = 20;
    let obj: Arc<dyn Objective> = Arc::new(FnObjective::new(p, |x: &DVector<f64>| x.sum().powi(2)));
    let runs = 400;
    let mut inside = 0;
    for seed in 0..runs {
        let mut o = NoisyOracle::new(obj.clone(), NoiseModel::noiseless());
        let mut rng = RngStream::new(seed, 2);
        let x0 = rng.standard_normals(p).unwrap();
        let mut ledger = SampleLedger::new();
        let out = phase1_learn(&mut o, &x0, &EcNoiseConfig::default(), &mut rng, &mut ledger).unwrap();
        assert_eq!(ledger.len(), 8);
        assert!(out.lipschitz.l1_hat <= 40.0 * (1.0 + 1e-6));
        if (1.0..=8.0).contains(&out.lipschitz.l1_hat) {
            inside += 1;
        }
    }
    let frac = inside as f64 / runs as f64;
    let se = (BETA_PROB_1_TO_8 * (1.0 - BETA_PROB_1_TO_8) / runs as f64).sqrt();
    assert!((frac - BETA_PROB_1_TO_8).abs() <= 4.0 * se, "{frac}");
}

#[test]
fn phase1_noise_on_first_example() {
    let p = make_problem(ProblemId::Ex1, &ProblemOverrides::default()).unwrap();
    let runs = 100;
    let mut hits = 0;
    for seed in 0..runs {
        let mut rng = RngStream::new(seed, 3);
        let x0 = p.initial_point(&mut rng).unwrap();
        let mut o = p.oracle().unwrap();
        let mut ledger = SampleLedger::new();
        let out = phase1_learn(&mut o, &x0, &EcNoiseConfig::default(), &mut rng, &mut ledger).unwrap();
        assert_eq!(o.eval_count(), 8);
        if (0.25..=4.0).contains(&(out.noise.sigma2_hat / p.sigma2)) {
            hits += 1;
        }
    }
    assert!(hits >= 70, "{hits} of {runs}");
}

#[test]
fn multiplicative_noise_is_backed_out() {
    let obj: Arc<dyn Objective> = Arc::new(FnObjective::new(3, |_: &DVector<f64>| 5.0));
    let runs = 200;
    let mut hits = 0;
    for seed in 0..runs {
        let mut o = NoisyOracle::new(obj.clone(), NoiseModel::multiplicative(1e-4).unwrap());
        let mut rng = RngStream::new(seed, 4);
        let x0 = DVector::from_element(3, 1.0);
        let mut ledger = SampleLedger::new();
        let out = phase1_learn(&mut o, &x0, &EcNoiseConfig::default(), &mut rng, &mut ledger).unwrap();
        if (0.25..=4.0).contains(&(out.noise.sigma2_hat / 1e-4)) {
            hits += 1;
        }
    }
    assert!(hits * 100 >= 80 * runs, "{hits} of {runs}");
}
