//! Capacity as a function of the constraint bound: the profile
//! alpha -> C(channel; A, alpha) swept over a grid, with the structural
//! checks the profile must satisfy (nondecreasing and concave).
//!
//! Adjacent bounds have nearby optima, so the sweep chains warm starts
//! left to right and then polishes right to left; each point keeps the
//! better of its two solves.

use crate::capacity::chi_capacity_with_warm;
use crate::channel::KrausChannel;
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::opt::config::OptimizerConfig;
use crate::state::{Ensemble, HermitianOperator};

/// Tolerance for the monotonicity and concavity checks.
pub const PROFILE_CHECK_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct ProfilePoint {
    pub alpha: f64,
    pub value: f64,
    pub certificate_gap: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct AlphaProfile {
    pub points: Vec<ProfilePoint>,
    /// Values nondecreasing in alpha within the check tolerance.
    pub nondecreasing: bool,
    /// Discrete concavity within the check tolerance: scaled second
    /// differences stay nonpositive.
    pub concave: bool,
    /// Largest drop v[k] - v[k+1], clamped at zero.
    pub max_monotonicity_defect: f64,
    /// Largest positive scaled second difference, clamped at zero. On a
    /// uniform grid this is the plain second difference
    /// v[k-1] - 2 v[k] + v[k+1] with the sign convention that concave
    /// profiles stay nonpositive.
    pub max_concavity_defect: f64,
}

struct Solved {
    point: ProfilePoint,
    ensemble: Ensemble<f64>,
}

/// Sweeps the constrained capacity over the bounds in `grid` (strictly
/// ascending, all feasible for the effect). Per-point convergence is
/// reported, never enforced; the structural checks land in the returned
/// flags.
pub fn f_alpha_profile(
    channel: &KrausChannel<f64>,
    effect: &HermitianOperator<f64>,
    grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<AlphaProfile> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("alpha grid must be strictly ascending"));
    }
    let bottom = effect.eigenvalues()[0];
    if grid[0] < bottom - 1e-12 {
        return Err(Error::Infeasible(format!(
            "alpha {} below the minimal achievable load {bottom}",
            grid[0]
        )));
    }

    let solve = |alpha: f64, warm: &[Ensemble<f64>]| -> Result<Solved> {
        let constraint = ConstraintSet::linear(effect.clone(), alpha)?;
        let r = chi_capacity_with_warm(channel, &constraint, cfg, warm)?;
        Ok(Solved {
            point: ProfilePoint {
                alpha,
                value: r.value,
                certificate_gap: r.certificate_gap,
                converged: r.converged,
            },
            ensemble: r.ensemble,
        })
    };

    // Left-to-right sweep, chaining each optimum into the next solve.
    let mut solved: Vec<Solved> = Vec::with_capacity(grid.len());
    for (k, &alpha) in grid.iter().enumerate() {
        let warm: Vec<Ensemble<f64>> = solved
            .get(k.wrapping_sub(1))
            .map(|s| vec![s.ensemble.clone()])
            .unwrap_or_default();
        solved.push(solve(alpha, &warm)?);
    }
    // Right-to-left polish: larger bounds relax the constraint, so a
    // right neighbor's ensemble is a strong start after projection.
    for k in (0..grid.len().saturating_sub(1)).rev() {
        let warm = vec![solved[k].ensemble.clone(), solved[k + 1].ensemble.clone()];
        let redo = solve(grid[k], &warm)?;
        if redo.point.value > solved[k].point.value {
            solved[k] = redo;
        }
    }

    let points: Vec<ProfilePoint> = solved.into_iter().map(|s| s.point).collect();
    let mut max_drop = 0.0f64;
    for w in points.windows(2) {
        max_drop = max_drop.max(w[0].value - w[1].value);
    }
    let mut max_bulge = 0.0f64;
    for w in points.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let left = (b.value - a.value) / (b.alpha - a.alpha);
        let right = (c.value - b.value) / (c.alpha - b.alpha);
        let mean_h = 0.5 * (c.alpha - a.alpha);
        max_bulge = max_bulge.max((right - left) * mean_h);
    }
    Ok(AlphaProfile {
        nondecreasing: max_drop <= PROFILE_CHECK_TOL,
        concave: max_bulge <= PROFILE_CHECK_TOL,
        max_monotonicity_defect: max_drop,
        max_concavity_defect: max_bulge,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::h2;
    use crate::mat::ComplexMatrix;
    use crate::random::random_channel;
    use crate::scalar::C;

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: 2,
            seed,
            ..OptimizerConfig::default()
        }
    }

    fn proj1() -> HermitianOperator<f64> {
        HermitianOperator::new(ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                C::<f64>::new(1.0, 0.0)
            } else {
                C::<f64>::new(0.0, 0.0)
            }
        }))
        .unwrap()
    }

    #[test]
    fn noiseless_profile_follows_binary_entropy_then_saturates() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.65, 0.8, 1.0];
        let prof = f_alpha_profile(&ch, &proj1(), &grid, &cfg(61)).unwrap();
        for p in &prof.points {
            let expected = if p.alpha <= 0.5 { h2(p.alpha) } else { 1.0 };
            assert!(
                (p.value - expected).abs() < 1e-5,
                "alpha {}: value {} expected {expected}",
                p.alpha,
                p.value
            );
        }
        assert!(prof.nondecreasing, "drop {}", prof.max_monotonicity_defect);
        assert!(prof.concave, "bulge {}", prof.max_concavity_defect);
    }

    #[test]
    fn inactive_region_is_flat_at_the_unconstrained_capacity() {
        let ch = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let expected = 1.0 - h2(0.15);
        let grid = [0.5, 0.7, 0.9];
        let prof = f_alpha_profile(&ch, &proj1(), &grid, &cfg(62)).unwrap();
        for p in &prof.points {
            assert!((p.value - expected).abs() < 1e-6, "alpha {}", p.alpha);
        }
        assert!(prof.nondecreasing && prof.concave);
    }

    #[test]
    fn random_channel_profile_passes_structural_checks() {
        let ch = random_channel::<f64>(2, 2, 2, 63).unwrap();
        let grid: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
        let prof = f_alpha_profile(&ch, &proj1(), &grid, &cfg(63)).unwrap();
        assert!(prof.nondecreasing, "drop {}", prof.max_monotonicity_defect);
        assert!(prof.concave, "bulge {}", prof.max_concavity_defect);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let a = proj1();
        assert!(f_alpha_profile(&ch, &a, &[], &cfg(64)).is_err());
        assert!(f_alpha_profile(&ch, &a, &[0.4, 0.3], &cfg(64)).is_err());
        // A bound below the bottom eigenvalue of a shifted effect.
        let lifted = HermitianOperator::new(ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                C::<f64>::new(if i == 0 { 0.5 } else { 1.0 }, 0.0)
            } else {
                C::<f64>::new(0.0, 0.0)
            }
        }))
        .unwrap();
        assert!(f_alpha_profile(&ch, &lifted, &[0.2, 0.6], &cfg(64)).is_err());
    }
}
