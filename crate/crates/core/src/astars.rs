//! Random search confined to an active subspace.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::history::TrialHistory;
use crate::ledger::{Phase, SampleLedger};
use crate::oracle::{NoiseKind, NoisyOracle};
use crate::rng::RngStream;
use crate::stars::{compute_hyperparameters, step_along, Hyperparameters, StarsState, StepRecord};
use crate::subspace::ActiveSubspace;

/// Hyperparameters for `j` active directions.
pub fn active_hyperparameters(
    sigma2: f64,
    l1: f64,
    j: usize,
    noise_kind: NoiseKind,
    f_value: Option<f64>,
) -> Result<Hyperparameters> {
    compute_hyperparameters(sigma2, l1, j, noise_kind, f_value)
}

/// Per-direction variance weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DirectionWeights {
    /// Unit variance on every active direction.
    #[default]
    Unit,
    /// Experimental: `sqrt(q1 / qi)` on direction `i`.
    EigenRatio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveDirection {
    pub full_vector: DVector<f64>,
    pub coeffs: DVector<f64>,
}

/// `u = V_A r` for given coefficients `r`.
pub fn active_direction_from(
    space: &ActiveSubspace,
    coeffs: DVector<f64>,
) -> Result<ActiveDirection> {
    if coeffs.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: coeffs.len(),
        });
    }
    Ok(ActiveDirection {
        full_vector: space.basis_active() * &coeffs,
        coeffs,
    })
}

pub fn draw_active_direction(
    space: &ActiveSubspace,
    rng: &mut RngStream,
) -> Result<ActiveDirection> {
    draw_weighted_direction(space, DirectionWeights::Unit, rng)
}

pub fn draw_weighted_direction(
    space: &ActiveSubspace,
    weights: DirectionWeights,
    rng: &mut RngStream,
) -> Result<ActiveDirection> {
    let mut r = rng.standard_normals(space.dim())?;
    if weights == DirectionWeights::EigenRatio {
        let q = space.eigenvalues();
        let q1 = q[0];
        for i in 0..r.len() {
            if q[i] > 0.0 && q1 > 0.0 {
                r[i] *= (q1 / q[i]).sqrt();
            }
        }
    }
    active_direction_from(space, r)
}

/// One step along a fresh direction in `span(V_A)`.
pub fn astars_step(
    state: &mut StarsState,
    space: &ActiveSubspace,
    weights: DirectionWeights,
    oracle: &mut NoisyOracle,
    rng: &mut RngStream,
    ledger: &mut SampleLedger,
) -> Result<Option<StepRecord>> {
    if state.diverged() {
        return Ok(None);
    }
    let u = draw_weighted_direction(space, weights, rng)?;
    step_along(state, &u.full_vector, oracle, rng, ledger)
}

/// `maxit` steps confined to a fixed active subspace.
pub fn run_astars(
    oracle: &mut NoisyOracle,
    x0: &DVector<f64>,
    maxit: usize,
    space: &ActiveSubspace,
    hyper: &Hyperparameters,
    rng: &mut RngStream,
) -> Result<TrialHistory> {
    if maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }
    if space.full_dim() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            got: space.full_dim(),
        });
    }
    let mut ledger = SampleLedger::new();
    let mut state = StarsState::new(oracle, x0, *hyper, rng, &mut ledger, Phase::Astars)?;
    for _ in 0..maxit {
        let step = astars_step(
            &mut state,
            space,
            DirectionWeights::Unit,
            oracle,
            rng,
            &mut ledger,
        )?;
        if step.is_none() {
            break;
        }
    }
    Ok(state.history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{FnObjective, NoiseModel, Objective};
    use crate::stars::run_stars;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    #[test]
    fn active_hyperparameter_values() {
        let hp = active_hyperparameters(1e-4, 2.0, 1, NoiseKind::Additive, None).unwrap();
        assert_relative_eq!(hp.mu, (8e-4f64 / (4.0 * 343.0)).powf(0.25), max_relative = 1e-14);
        assert!((hp.mu - 0.027634).abs() < 1e-6);
        assert_relative_eq!(hp.h, 0.025, max_relative = 1e-15);
        let hp = active_hyperparameters(1e-3, 2.0, 10, NoiseKind::Additive, None).unwrap();
        assert!((hp.mu - 0.047007).abs() < 1e-6);
        assert_relative_eq!(hp.h, 1.0 / 112.0, max_relative = 1e-15);
    }

    #[test]
    fn full_dimension_matches_stars() {
        let a = active_hyperparameters(1e-4, 2.0, 20, NoiseKind::Additive, None).unwrap();
        let b = compute_hyperparameters(1e-4, 2.0, 20, NoiseKind::Additive, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fewer_directions_means_larger_parameters() {
        let full = compute_hyperparameters(1e-4, 2.0, 20, NoiseKind::Additive, None).unwrap();
        for j in 1..20 {
            let act = active_hyperparameters(1e-4, 2.0, j, NoiseKind::Additive, None).unwrap();
            assert!(act.h > full.h && act.mu > full.mu, "j={j}");
        }
    }

    #[test]
    fn forced_directions() {
        let space = ActiveSubspace::coordinate(2, 1).unwrap();
        let u = active_direction_from(&space, DVector::from_vec(vec![0.5])).unwrap();
        assert_eq!(u.full_vector, DVector::from_vec(vec![0.5, 0.0]));
        let space = ActiveSubspace::coordinate(3, 3).unwrap();
        let r = DVector::from_vec(vec![0.1, -2.0, 3.0]);
        let u = active_direction_from(&space, r.clone()).unwrap();
        assert_eq!(u.full_vector, r);
        assert!(active_direction_from(&space, DVector::zeros(2)).is_err());
    }

    #[test]
    fn identity_basis_reproduces_stars_exactly() {
        let p = 4;
        let obj: Arc<dyn Objective> =
            Arc::new(FnObjective::new(p, |x: &DVector<f64>| x.norm_squared()));
        let hp = compute_hyperparameters(1e-3, 2.0, p, NoiseKind::Additive, None).unwrap();
        let x0 = DVector::from_element(p, 1.0);
        let space = ActiveSubspace::coordinate(p, p).unwrap();
        let mut o1 = NoisyOracle::new(obj.clone(), NoiseModel::additive(1e-3).unwrap());
        let mut o2 = NoisyOracle::new(obj, NoiseModel::additive(1e-3).unwrap());
        let h1 = run_stars(&mut o1, &x0, 30, &hp, &mut RngStream::new(5, 0)).unwrap();
        let h2 = run_astars(&mut o2, &x0, 30, &space, &hp, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn direction_statistics() {
        let p = 20;
        let j = 10;
        let mut rng = RngStream::new(42, 0);
        let m = rng.standard_normals(p * p).unwrap();
        let q = DMatrix::from_column_slice(p, p, m.as_slice()).qr().q();
        let space = ActiveSubspace::exact(q.columns(0, j).into_owned()).unwrap();
        let n = 100_000;
        let mut sum_sq = 0.0;
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for _ in 0..n {
            let u = draw_active_direction(&space, &mut rng).unwrap();
            assert_eq!(u.coeffs.len(), j);
            let inactive = space.project_inactive(&u.full_vector).unwrap();
            assert!(inactive.norm() <= 1e-10 * u.full_vector.norm());
            sum_sq += u.full_vector.norm_squared();
            cov.ger(1.0, &u.full_vector, &u.full_vector, 1.0);
        }
        let mean = sum_sq / n as f64;
        assert!((mean - j as f64).abs() < 4.0 * (2.0 * j as f64 / n as f64).sqrt(), "{mean}");
        cov /= n as f64;
        let target = space.basis_active() * space.basis_active().transpose();
        assert!((cov - target).amax() < 0.05);
    }

    #[test]
    fn iterates_stay_in_active_affine_set() {
        let p = 6;
        let obj: Arc<dyn Objective> =
            Arc::new(FnObjective::new(p, |x: &DVector<f64>| x.norm_squared()));
        let hp = active_hyperparameters(1e-4, 2.0, 2, NoiseKind::Additive, None).unwrap();
        let mut rng = RngStream::new(8, 0);
        let x0 = rng.standard_normals(p).unwrap() * 3.0;
        let space = ActiveSubspace::coordinate(p, 2).unwrap();
        let mut o = NoisyOracle::new(obj, NoiseModel::additive(1e-4).unwrap());
        let mut ledger = SampleLedger::new();
        let mut st = StarsState::new(&mut o, &x0, hp, &mut rng, &mut ledger, Phase::Astars).unwrap();
        for _ in 0..200 {
            astars_step(&mut st, &space, DirectionWeights::Unit, &mut o, &mut rng, &mut ledger)
                .unwrap();
            let drift = space.project_inactive(&(&st.current - &x0)).unwrap();
            assert!(drift.norm() <= 1e-8);
        }
    }

    #[test]
    fn eigen_ratio_weights_scale_directions() {
        let space = ActiveSubspace::coordinate(3, 2).unwrap();
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 0);
        let u = draw_weighted_direction(&space, DirectionWeights::EigenRatio, &mut a).unwrap();
        let v = draw_active_direction(&space, &mut b).unwrap();
        // coordinate subspaces carry a flat spectrum on the active block
        assert_eq!(u, v);
    }
}
