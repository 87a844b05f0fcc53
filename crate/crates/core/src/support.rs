//! Constructs a linear constraint supported at a given state: an effect
//! A and bound alpha such that the state maximizes the Holevo quantity
//! over {rho : Tr(A rho) <= alpha}.
//!
//! The chi-function is concave but need not be smooth, so the
//! supergradient is estimated by central finite differences on the
//! trace-one hyperplane and the construction is always verified a
//! posteriori by re-solving the constrained capacity. All probe solves
//! share the seed, so solver noise largely cancels in the differences.

use crate::capacity::{chi_capacity_with_warm, chi_function, hat_h};
use crate::channel::KrausChannel;
use crate::constraint::ConstraintSet;
use crate::entropy::entropy;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::OptimizerConfig;
use crate::scalar::C;
use crate::state::{DensityMatrix, Ensemble, HermitianOperator};
use crate::tol;

type Mat = ComplexMatrix<f64>;
type C64 = C<f64>;

/// States closer to singular than this are rejected: the finite
/// differences need room on both sides.
const MIN_EIGENVALUE: f64 = 1e-6;
/// Supergradient norms below this are treated as a flat objective.
const GRADIENT_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SupportingConstraint {
    pub effect: HermitianOperator<f64>,
    pub alpha: f64,
    /// The supergradient vanished (flat chi near the state), so the
    /// half-identity constraint was returned; every state satisfies it
    /// with equality.
    pub degenerate: bool,
    /// Constrained capacity minus chi at the state, from the
    /// verification solve.
    pub verified_gap: f64,
}

/// Orthonormal Hermitian basis under the Frobenius inner product:
/// diagonal units, symmetric pairs, antisymmetric pairs.
fn hermitian_basis(d: usize) -> Vec<Mat> {
    let mut basis = Vec::with_capacity(d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        basis.push(Mat::from_fn(d, d, |a, b| {
            if a == i && b == i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            basis.push(Mat::from_fn(d, d, |a, b| {
                if (a, b) == (i, j) || (a, b) == (j, i) {
                    C64::new(s, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
            basis.push(Mat::from_fn(d, d, |a, b| {
                if (a, b) == (i, j) {
                    C64::new(0.0, s)
                } else if (a, b) == (j, i) {
                    C64::new(0.0, -s)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
        }
    }
    basis
}

fn traceless(m: &Mat) -> Mat {
    let d = m.rows();
    let shift = m.trace_re() / d as f64;
    let mut out = m.clone();
    out.add_scaled(&Mat::identity(d), -shift);
    out
}

/// Supergradient of chi at rho0, restricted to the trace-one hyperplane,
/// by central differences along an orthonormal Hermitian basis.
fn supergradient(
    channel: &KrausChannel<f64>,
    rho0: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<Mat> {
    let d = rho0.dim();
    let h = tol::FD_STEP;
    let mut grad = Mat::zeros(d, d);
    for dir in hermitian_basis(d) {
        let step = traceless(&dir);
        let probe = |sign: f64| -> Result<f64> {
            let mut m = rho0.matrix().clone();
            m.add_scaled(&step, sign * h);
            let state = DensityMatrix::project(&m)?;
            chi_function(channel, &state, cfg)
        };
        let slope = (probe(1.0)? - probe(-1.0)?) / (2.0 * h);
        grad.add_scaled(&dir, slope);
    }
    Ok(grad.hermitize())
}

/// Verification gap: constrained capacity minus chi at the state. The
/// solve is warm-started with the state's own optimal decomposition, so
/// it starts at chi(rho0) and the gap is one-sided up to solver slack.
fn verify(
    channel: &KrausChannel<f64>,
    effect: &HermitianOperator<f64>,
    alpha: f64,
    chi0: f64,
    warm: &[Ensemble<f64>],
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let constraint = ConstraintSet::linear(effect.clone(), alpha)?;
    let cap = chi_capacity_with_warm(channel, &constraint, cfg, warm)?;
    Ok(cap.value - chi0)
}

/// Finds (A, alpha) supporting the chi-function at `rho0`: the state
/// attains the constrained capacity under Tr(A rho) <= alpha, verified
/// by an actual capacity solve. The two orientations of the estimated
/// supergradient are tried in turn; failure of both is an error carrying
/// the smaller verification gap (chi may be nonsmooth at the state).
pub fn find_supporting_constraint(
    channel: &KrausChannel<f64>,
    rho0: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<SupportingConstraint> {
    cfg.validate()?;
    if channel.din() != rho0.dim() {
        return Err(Error::dims("state dim does not match channel input"));
    }
    let eigs = rho0.eigenvalues();
    if eigs[0] < MIN_EIGENVALUE {
        return Err(Error::invalid(format!(
            "state must be full rank with min eigenvalue >= {MIN_EIGENVALUE}, got {}",
            eigs[0]
        )));
    }
    let d = rho0.dim();
    let roof = hat_h(channel, rho0, cfg)?;
    let chi0 = entropy(&channel.apply(rho0)?) - roof.value;
    let warm = vec![roof.ensemble];
    let grad = supergradient(channel, rho0, cfg)?;
    let norm = grad.frobenius_norm();

    if norm < GRADIENT_FLOOR {
        // Flat objective: the half-identity constraint holds with
        // equality everywhere, so rho0 trivially attains the optimum
        // when chi is constant; the verification still runs.
        let effect = HermitianOperator::new(Mat::identity(d).scale(0.5))?;
        let alpha = 0.5;
        let gap = verify(channel, &effect, alpha, chi0, &warm, cfg)?;
        if gap.abs() > 2.0 * cfg.tol_certificate {
            return Err(Error::Verification(format!(
                "degenerate supporting constraint failed verification: gap {gap:.3e}"
            )));
        }
        return Ok(SupportingConstraint {
            effect,
            alpha,
            degenerate: true,
            verified_gap: gap,
        });
    }

    // Normalized into effect range: A = (G/|G| + I)/2 keeps the spectrum
    // inside [0, 1] because the Frobenius norm dominates the spectral one.
    let mut a_mat = grad.scale(0.5 / norm);
    a_mat.add_scaled(&Mat::identity(d), 0.5);
    let a_mat = a_mat.hermitize();
    let alpha = 0.5 * (grad.trace_product_re(rho0.matrix()) / norm + 1.0);

    let mut best: Option<(HermitianOperator<f64>, f64, f64)> = None;
    for (mat, al) in [
        (a_mat.clone(), alpha),
        (Mat::identity(d).sub(&a_mat), 1.0 - alpha),
    ] {
        let effect = HermitianOperator::new(mat)?;
        let gap = verify(channel, &effect, al, chi0, &warm, cfg)?;
        if best.as_ref().map_or(true, |(_, _, g)| gap.abs() < g.abs()) {
            best = Some((effect, al, gap));
        }
        if best.as_ref().expect("just set").2.abs() <= 2.0 * cfg.tol_certificate {
            break;
        }
    }
    let (effect, alpha, gap) = best.expect("two candidates tried");
    if gap.abs() > 2.0 * cfg.tol_certificate {
        return Err(Error::Verification(format!(
            "supporting constraint failed verification on both orientations: gap {gap:.3e}"
        )));
    }
    Ok(SupportingConstraint {
        effect,
        alpha,
        degenerate: false,
        verified_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_state};

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: 2,
            seed,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn maximally_mixed_input_of_noiseless_is_degenerate() {
        // chi = H peaks at I/2, so the hyperplane supergradient vanishes
        // and the half-identity constraint comes back, still verified.
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let sc = find_supporting_constraint(&ch, &rho, &cfg(51)).unwrap();
        assert!(sc.degenerate);
        assert!((sc.alpha - 0.5).abs() < 1e-12);
        assert!(sc.verified_gap.abs() < 2e-3, "gap {}", sc.verified_gap);
    }

    #[test]
    fn skewed_input_of_noiseless_is_supported() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let m = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(if i == 0 { 0.7 } else { 0.3 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rho = DensityMatrix::new(m).unwrap();
        let sc = find_supporting_constraint(&ch, &rho, &cfg(52)).unwrap();
        assert!(!sc.degenerate);
        // The state sits on the constraint boundary by construction.
        let load = sc.effect.matrix().trace_product_re(rho.matrix());
        assert!((load - sc.alpha).abs() < 1e-9, "load {load} alpha {}", sc.alpha);
        assert!(sc.verified_gap.abs() < 2e-3, "gap {}", sc.verified_gap);
    }

    #[test]
    fn constant_channel_is_flat_everywhere() {
        let omega = random_state::<f64>(2, 2, 53).unwrap();
        let ch = KrausChannel::constant(omega).unwrap();
        let rho = random_state::<f64>(2, 2, 54).unwrap();
        let sc = find_supporting_constraint(&ch, &rho, &cfg(53)).unwrap();
        assert!(sc.degenerate);
        assert!(sc.verified_gap.abs() < 1e-6);
    }

    #[test]
    fn rank_deficient_states_are_rejected() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let pure = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert!(find_supporting_constraint(&ch, &pure, &cfg(55)).is_err());
    }

    #[test]
    fn random_channel_near_mixed_state_verifies() {
        let ch = random_channel::<f64>(2, 2, 2, 56).unwrap();
        // Blend toward I/2 to keep a healthy spectrum.
        let raw = random_state::<f64>(2, 2, 57).unwrap();
        let mut m = raw.matrix().scale(0.7);
        m.add_scaled(DensityMatrix::<f64>::maximally_mixed(2).matrix(), 0.3);
        let rho = DensityMatrix::new(m).unwrap();
        let sc = find_supporting_constraint(&ch, &rho, &cfg(58)).unwrap();
        assert!(sc.verified_gap.abs() < 2e-3, "gap {}", sc.verified_gap);
    }
}
