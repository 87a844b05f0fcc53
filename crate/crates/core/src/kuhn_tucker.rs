//! Kuhn-Tucker multiplier for a linear input constraint: the lambda >= 0
//! at which the unconstrained Lagrangian maximization (reward I - A)
//! reproduces the constrained optimum, with complementary slackness
//! lambda * (Tr A rho_av - alpha) = 0.
//!
//! The average load g(lambda) = Tr A rho_av(lambda) is nonincreasing, so
//! lambda is found by growing a bracket from [0, 1] and bisecting. When
//! the load jumps across alpha (the Lagrangian optimum switches basins),
//! the two bracket-end ensembles are mixed to hit the load exactly; the
//! mixture is still Lagrangian-optimal because the optimal-average set is
//! convex.

use crate::capacity::{lagrangian_solve, salt, SolveOutput};
use crate::certificate::lagrangian_certificate;
use crate::channel::{chi_of_ensemble, KrausChannel};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::{CapacityResult, OptimizerConfig};
use crate::opt::ensemble::AscentInit;
use crate::state::HermitianOperator;
use crate::tol;

type Mat = ComplexMatrix<f64>;

const BRACKET_DOUBLINGS: usize = 40;
const BISECTIONS: usize = 60;
/// Interval width (relative to the bracket) below which further
/// bisection only resolves solver noise in the load.
const LAMBDA_RESOLUTION: f64 = 1e-9;

struct Eval {
    out: SolveOutput,
    load: f64,
}

fn load_of(out: &SolveOutput, a: &Mat, din: usize) -> f64 {
    let mut acc = 0.0;
    for (w, m) in out.weights.iter().zip(&out.members) {
        if *w > 0.0 {
            acc += *w * Mat::outer(m, m).trace_product_re(a);
        }
    }
    debug_assert_eq!(a.rows(), din);
    acc
}

/// Mix the bracket-end ensembles so the load equals alpha exactly.
fn mix_endpoints(lo: &Eval, hi: &Eval, alpha: f64) -> SolveOutput {
    let spread = lo.load - hi.load;
    let t = if spread > 0.0 {
        ((alpha - hi.load) / spread).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut weights = Vec::new();
    let mut members = Vec::new();
    for (w, m) in lo.out.weights.iter().zip(&lo.out.members) {
        if t * w > 0.0 {
            weights.push(t * w);
            members.push(m.clone());
        }
    }
    for (w, m) in hi.out.weights.iter().zip(&hi.out.members) {
        if (1.0 - t) * w > 0.0 {
            weights.push((1.0 - t) * w);
            members.push(m.clone());
        }
    }
    SolveOutput {
        value: t * lo.out.value + (1.0 - t) * hi.out.value,
        weights,
        members,
        iterations: lo.out.iterations + hi.out.iterations,
        converged: lo.out.converged && hi.out.converged,
    }
}

/// Finds the Kuhn-Tucker multiplier of the constraint Tr(A rho) <= alpha
/// and the ensemble optimal at it. The returned value is the plain
/// constrained Holevo quantity of that ensemble (no multiplier term);
/// the certificate gap comes from the fixed-lambda dual bound
/// lambda * alpha + max over pure omega of
/// H(channel(omega) || S) - lambda Tr(A omega).
pub fn kuhn_tucker_multiplier(
    channel: &KrausChannel<f64>,
    effect: &HermitianOperator<f64>,
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<(f64, CapacityResult)> {
    cfg.validate()?;
    let din = channel.din();
    if effect.dim() != din {
        return Err(Error::dims("effect dim does not match channel input"));
    }
    if !effect.is_effect() {
        return Err(Error::invalid("constraint operator must satisfy 0 <= A <= I"));
    }
    let eigs = effect.eigenvalues();
    if alpha <= eigs[0] + 1e-10 {
        return Err(Error::invalid(
            "no strict interior point: alpha does not exceed the bottom eigenvalue of A",
        ));
    }
    let a = effect.matrix().clone();
    let reward = Mat::identity(din).sub(&a);

    let mut iterations = 0usize;
    let mut eval = |lambda: f64, warm: &[AscentInit]| -> Result<Eval> {
        let out = lagrangian_solve(channel, &reward, lambda, cfg, salt::KUHN_TUCKER, warm)?;
        iterations += out.iterations;
        let load = load_of(&out, &a, din);
        Ok(Eval { out, load })
    };

    let zero = eval(0.0, &[])?;
    let mut bracketed = true;
    let (lambda, chosen) = if zero.load <= alpha + tol::TOL_SLACKNESS {
        // Inactive constraint: slack at lambda = 0.
        (0.0, zero)
    } else {
        let mut lo = 0.0;
        let mut at_lo = zero;
        let mut hi = 1.0;
        let mut at_hi = None;
        for _ in 0..BRACKET_DOUBLINGS {
            let probe = eval(hi, &[at_lo.out.as_init()])?;
            if probe.load <= alpha {
                at_hi = Some(probe);
                break;
            }
            lo = hi;
            at_lo = probe;
            hi *= 2.0;
        }
        match at_hi {
            None => {
                bracketed = false;
                (hi, at_lo)
            }
            Some(mut at_hi) => {
                let mut resolved = None;
                for _ in 0..BISECTIONS {
                    if hi - lo <= LAMBDA_RESOLUTION * hi.max(1.0) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let warm = [at_lo.out.as_init(), at_hi.out.as_init()];
                    let probe = eval(mid, &warm)?;
                    if (probe.load - alpha).abs() <= tol::TOL_SLACKNESS / mid.max(1.0) {
                        resolved = Some((mid, probe));
                        break;
                    }
                    if probe.load > alpha {
                        lo = mid;
                        at_lo = probe;
                    } else {
                        hi = mid;
                        at_hi = probe;
                    }
                }
                match resolved {
                    Some(pair) => pair,
                    // Load jumped across alpha: mix the bracket ends.
                    None => {
                        let mixed = mix_endpoints(&at_lo, &at_hi, alpha);
                        (0.5 * (lo + hi), Eval { load: alpha, out: mixed })
                    }
                }
            }
        }
    };

    let ensemble = chosen.out.ensemble()?;
    let average = ensemble.average_state();
    let load = average.matrix().trace_product_re(&a);
    let value = chi_of_ensemble(channel, &ensemble)?;
    let slackness = (lambda * (load - alpha)).abs();

    // Dual bound on the constrained capacity at this fixed lambda.
    let neg_a = a.scale(-1.0);
    let cert = lagrangian_certificate(channel, &neg_a, lambda, &average, cfg)?;
    let gap = lambda * alpha + cert.value - value;

    let feasible = load <= alpha + tol::TOL_SLACKNESS;
    let result = CapacityResult {
        value,
        ensemble,
        average,
        certificate_gap: gap,
        multiplier: Some(lambda),
        converged: bracketed
            && feasible
            && slackness <= tol::TOL_SLACKNESS
            && gap.abs() <= cfg.tol_certificate
            && cert.converged,
        iterations,
    };
    Ok((lambda, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{chi_capacity, lagrangian_capacity};
    use crate::channel::h2;
    use crate::constraint::ConstraintSet;
    use crate::random::{random_channel, random_effect};
    use crate::scalar::C;

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: 2,
            seed,
            ..OptimizerConfig::default()
        }
    }

    fn proj1(dim: usize) -> HermitianOperator<f64> {
        HermitianOperator::new(Mat::from_fn(dim, dim, |i, j| {
            if i == 1 && j == 1 {
                C::<f64>::new(1.0, 0.0)
            } else {
                C::<f64>::new(0.0, 0.0)
            }
        }))
        .unwrap()
    }

    #[test]
    fn inactive_constraint_returns_zero_multiplier() {
        let ch = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let (lambda, r) = kuhn_tucker_multiplier(&ch, &proj1(2), 0.6, &cfg(41)).unwrap();
        assert_eq!(lambda, 0.0);
        let expected = 1.0 - h2(0.15);
        assert!((r.value - expected).abs() < 1e-6, "value {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn active_constraint_recovers_load_and_multiplier() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let (lambda, r) = kuhn_tucker_multiplier(&ch, &proj1(2), 0.25, &cfg(42)).unwrap();
        let load = r.average.matrix().get(1, 1).re;
        assert!((load - 0.25).abs() <= tol::TOL_SLACKNESS, "load {load}");
        assert!((lambda - 3f64.log2()).abs() < 1e-3, "lambda {lambda}");
        assert!((r.value - h2(0.25)).abs() < 1e-5, "value {}", r.value);
        assert!(r.converged, "gap {}", r.certificate_gap);
    }

    #[test]
    fn missing_interior_point_is_rejected() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        assert!(kuhn_tucker_multiplier(&ch, &proj1(2), 0.0, &cfg(43)).is_err());
    }

    #[test]
    fn lagrangian_value_matches_shifted_capacity() {
        // At the Kuhn-Tucker multiplier, max over rho of
        // chi(rho) + lambda Tr(rho (I - A)) equals the constrained
        // capacity plus lambda (1 - alpha).
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let alpha = 0.3;
        let (lambda, r) = kuhn_tucker_multiplier(&ch, &proj1(2), alpha, &cfg(44)).unwrap();
        let reward = Mat::identity(2).sub(proj1(2).matrix());
        let lag = lagrangian_capacity(&ch, &reward, lambda, &cfg(44)).unwrap();
        let residual = (lag.value - r.value - lambda * (1.0 - alpha)).abs();
        assert!(residual < 2e-3, "identity residual {residual}");
    }

    #[test]
    fn slackness_holds_on_random_instances() {
        for k in 0..3u64 {
            let ch = random_channel::<f64>(2, 2, 2, 100 + k).unwrap();
            let a = random_effect::<f64>(2, 200 + k);
            let eigs = a.eigenvalues();
            let alpha = eigs[0] + 0.3 * (eigs[1] - eigs[0]);
            let (lambda, r) = kuhn_tucker_multiplier(&ch, &a, alpha, &cfg(45 + k)).unwrap();
            let load = r.average.matrix().trace_product_re(a.matrix());
            let slack = (lambda * (load - alpha)).abs();
            assert!(slack <= tol::TOL_SLACKNESS, "instance {k}: slack {slack}");
            assert!(load <= alpha + tol::TOL_SLACKNESS, "instance {k}: load {load}");
        }
    }

    #[test]
    fn agrees_with_the_constrained_solver() {
        let ch = KrausChannel::<f64>::depolarizing(0.4, 2).unwrap();
        let a = proj1(2);
        let alpha = 0.2;
        let (_, r) = kuhn_tucker_multiplier(&ch, &a, alpha, &cfg(46)).unwrap();
        let c = ConstraintSet::linear(a, alpha).unwrap();
        let direct = chi_capacity(&ch, &c, &cfg(46)).unwrap();
        assert!(
            (r.value - direct.value).abs() < 1e-3,
            "kt {} vs direct {}",
            r.value,
            direct.value
        );
    }
}
