//! Optimality certificates built on the maximal-distance
//! characterization: a candidate ensemble is optimal exactly when no
//! feasible ensemble scores a larger average relative entropy to the
//! candidate's output. Each constraint family gets the matching dual
//! search; the certificate value is a valid upper bound on the capacity,
//! so cert - chi(candidate) bounds the optimality gap.

use crate::capacity::{salt, solve_capacity, SolveOutput};
use crate::channel::{chi_of_ensemble, KrausChannel};
use crate::constraint::ConstraintSet;
use crate::eig::{eigh, hermitian_log2_clipped};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::OptimizerConfig;
use crate::opt::decomp::minimize_decomposition;
use crate::opt::ensemble::{ascend, AscentInit};
use crate::opt::objective::{Component, ConstraintRuntime, EnsembleObjective, MapOp, C64};
use crate::scalar::Scalar;
use crate::state::{DensityMatrix, Ensemble};

type Mat = ComplexMatrix<f64>;

/// Second stream for independent certificate re-solves.
pub(crate) const RESEED: u64 = 0x9e37_79b9_7f4a_7c15;
/// Output weight on the clipped null space above which the certificate
/// search left the candidate output's support.
pub(crate) const SUPPORT_LEAK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CertificateOutcome {
    /// Upper bound on the constrained capacity derived from the
    /// candidate's output state.
    pub value: f64,
    /// value - chi(candidate); at most tol_certificate for certified
    /// optima, materially positive for suboptimal candidates.
    pub gap: f64,
    /// The dual multiplier for linear constraints.
    pub multiplier: Option<f64>,
    /// True when the certificate search put weight outside the support
    /// of the candidate output; the clipped value then overstates the
    /// bound's sharpness and the candidate is not certified.
    pub support_restricted: bool,
    pub converged: bool,
}

/// Internal certificate carrying the witness member for ascent
/// re-injection.
#[derive(Clone, Debug)]
pub(crate) struct CertSearch {
    pub value: f64,
    pub witness: Option<Vec<C64>>,
    pub multiplier: Option<f64>,
    pub support_restricted: bool,
    pub converged: bool,
}

/// Maximize H(channel(omega) || S) + Re Tr(extra * omega) over pure
/// omega; `s_log` is the clipped log of S.
fn sphere_max(
    channel: &KrausChannel<f64>,
    s_log: &Mat,
    extra: Option<&Mat>,
    cfg: &OptimizerConfig,
    stream_salt: u64,
    warm: &[Vec<C64>],
) -> (f64, Vec<C64>, bool) {
    let mut linear = channel.adjoint_apply_op(s_log).scale(-1.0);
    if let Some(e) = extra {
        linear = linear.add(e);
    }
    let obj = EnsembleObjective {
        din: channel.din(),
        components: vec![Component {
            map: MapOp::Kraus(channel.clone()),
            avg_coeff: 0.0,
            mem_coeff: 1.0,
        }],
        linear: Some(linear),
    };
    let warm_inits: Vec<AscentInit> = warm
        .iter()
        .map(|m| AscentInit {
            weights: vec![1.0],
            members: vec![m.clone()],
        })
        .collect();
    let out = ascend(&obj, &ConstraintRuntime::free(), 1, cfg, stream_salt, &warm_inits);
    let witness = out.members.into_iter().next().expect("one member");
    (out.value, witness, out.converged)
}

/// Weight of `out_state` on the near-null space of the reference output.
pub(crate) fn support_leak(out_state: &Mat, s: &Mat) -> Result<f64> {
    let dec = eigh(s)?;
    let mut leak = 0.0;
    for k in 0..s.rows() {
        if dec.values[k] < 1e-10 {
            let v: Vec<C64> = (0..s.rows()).map(|a| dec.vectors.get(a, k)).collect();
            leak += out_state.expectation(&v).re;
        }
    }
    Ok(leak.max(0.0))
}

fn cert_full(
    channel: &KrausChannel<f64>,
    s: &Mat,
    s_log: &Mat,
    cfg: &OptimizerConfig,
    warm: &[Vec<C64>],
) -> Result<CertSearch> {
    let (value, witness, converged) = sphere_max(channel, s_log, None, cfg, salt::CERTIFICATE, warm);
    let out = channel.apply_pure(&witness);
    let leak = support_leak(&out, s)?;
    Ok(CertSearch {
        value,
        witness: Some(witness),
        multiplier: None,
        support_restricted: leak > SUPPORT_LEAK_TOL,
        converged,
    })
}

/// Lagrangian dual for a linear constraint: minimize over lambda >= 0 of
/// lambda * alpha + max_omega [H(channel(omega) || S) - lambda Tr(A omega)].
/// The outer function is convex (a max of affine functions of lambda),
/// so bracket growth plus golden-section search converges.
fn cert_linear(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    alpha: f64,
    s: &Mat,
    s_log: &Mat,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let inner_cfg = OptimizerConfig {
        restarts: 2,
        ..cfg.clone()
    };
    let mut warm: Vec<Vec<C64>> = Vec::new();
    let mut converged = true;
    let eval = |lambda: f64, warm: &mut Vec<Vec<C64>>, full: bool| -> (f64, f64, Vec<C64>, bool) {
        let penalized = effect.scale(-lambda);
        let use_cfg = if full { cfg } else { &inner_cfg };
        let (g, witness, ok) = sphere_max(
            channel,
            s_log,
            Some(&penalized),
            use_cfg,
            salt::CERTIFICATE,
            warm,
        );
        let load = Mat::outer(&witness, &witness).trace_product_re(effect);
        *warm = vec![witness.clone()];
        (lambda * alpha + g, load, witness, ok)
    };

    let (phi0, load0, w0, ok0) = eval(0.0, &mut warm, true);
    converged &= ok0;
    if load0 <= alpha {
        // Slope alpha - Tr(A omega*) is nonnegative at 0; by convexity
        // the minimum sits at lambda = 0.
        let out = channel.apply_pure(&w0);
        let leak = support_leak(&out, s)?;
        return Ok(CertSearch {
            value: phi0,
            witness: Some(w0),
            multiplier: Some(0.0),
            support_restricted: leak > SUPPORT_LEAK_TOL,
            converged,
        });
    }

    let mut hi = 1.0;
    let mut grew = false;
    for _ in 0..40 {
        let (_, load, _, ok) = eval(hi, &mut warm, false);
        converged &= ok;
        if load <= alpha {
            grew = true;
            break;
        }
        hi *= 2.0;
    }
    if !grew {
        converged = false;
    }

    // Golden-section on [0, hi].
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = 0.0;
    let mut b = hi;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let (mut f1, _, _, _) = eval(x1, &mut warm, false);
    let (mut f2, _, _, _) = eval(x2, &mut warm, false);
    for _ in 0..50 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = eval(x1, &mut warm, false).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = eval(x2, &mut warm, false).0;
        }
        if b - a < 1e-9 * hi.max(1.0) {
            break;
        }
    }
    let lambda = 0.5 * (a + b);
    let (value, _, witness, ok_final) = eval(lambda, &mut warm, false);
    converged &= ok_final;
    let value = value.min(phi0);
    let out = channel.apply_pure(&witness);
    let leak = support_leak(&out, s)?;
    Ok(CertSearch {
        value,
        witness: Some(witness),
        multiplier: Some(lambda),
        support_restricted: leak > SUPPORT_LEAK_TOL,
        converged,
    })
}

/// Singleton certificate: maximize the average relative entropy to S
/// over decompositions of the pinned state. The cross term is constant
/// over decompositions, so this reduces to an independent convex-roof
/// minimization plus the clipped cross entropy.
fn cert_singleton(
    channel: &KrausChannel<f64>,
    rho: &DensityMatrix<f64>,
    s: &Mat,
    s_log: &Mat,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let maps = vec![(1.0, MapOp::Kraus(channel.clone()))];
    let reseeded = cfg.with_seed(cfg.seed.wrapping_add(RESEED));
    let roof = minimize_decomposition(&maps, rho, &reseeded, salt::CERTIFICATE)?;
    let out = channel.apply(rho)?;
    let cross = -out.matrix().trace_product_re(s_log);
    let leak = support_leak(out.matrix(), s)?;
    Ok(CertSearch {
        value: cross - roof.value,
        witness: None,
        multiplier: None,
        support_restricted: leak > SUPPORT_LEAK_TOL,
        converged: roof.converged,
    })
}

/// Marginal constraints have no closed dual here; the certificate is an
/// independent re-solve from a shifted seed, making the gap a
/// reproducibility check rather than a one-sided bound.
fn cert_marginals(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let reseeded = cfg.with_seed(cfg.seed.wrapping_add(RESEED));
    let solve = solve_capacity(channel, constraint, &reseeded, &[])?;
    Ok(CertSearch {
        value: solve.value,
        witness: None,
        multiplier: None,
        support_restricted: false,
        converged: solve.converged,
    })
}

pub(crate) fn certify_members(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    solve: &SolveOutput,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let din = channel.din();
    let mut avg = Mat::zeros(din, din);
    for (w, m) in solve.weights.iter().zip(&solve.members) {
        if *w > 0.0 {
            avg.add_scaled(&Mat::outer(m, m), *w);
        }
    }
    let average = DensityMatrix::new(avg.hermitize())?;
    certify_against(channel, constraint, &average, &solve.members, cfg)
}

fn certify_against(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    average: &DensityMatrix<f64>,
    warm_members: &[Vec<C64>],
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let s_state = channel.apply(average)?;
    let s = s_state.matrix().clone();
    let s_log = hermitian_log2_clipped(&s, f64::SPECTRAL_FLOOR)?;
    match constraint {
        ConstraintSet::Full => cert_full(channel, &s, &s_log, cfg, warm_members),
        ConstraintSet::Linear { effect, alpha } => {
            let eigs = effect.eigenvalues();
            if *alpha <= eigs[0] + 1e-10 {
                // No interior point: certify on the bottom eigenspace,
                // where the constraint admits every state.
                return cert_restricted(channel, effect.matrix(), &s, &s_log, cfg);
            }
            cert_linear(channel, effect.matrix(), *alpha, &s, &s_log, cfg)
        }
        ConstraintSet::Singleton { state } => cert_singleton(channel, state, &s, &s_log, cfg),
        ConstraintSet::Marginals { .. } => cert_marginals(channel, constraint, cfg),
    }
}

/// Full-style certificate restricted to the bottom eigenspace of the
/// effect, through the same isometry as the capacity fallback.
fn cert_restricted(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    s: &Mat,
    s_log: &Mat,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let din = channel.din();
    let dec = eigh(effect)?;
    let bottom = dec.values[0];
    let cols: Vec<usize> = (0..din)
        .filter(|&k| dec.values[k] <= bottom + 1e-10)
        .collect();
    let v = Mat::from_fn(din, cols.len(), |a, j| dec.vectors.get(a, cols[j]));
    let embedded_kraus: Vec<Mat> = channel
        .kraus_ops()
        .iter()
        .map(|op| op.matmul(&v))
        .collect();
    let embedded = KrausChannel::new(embedded_kraus, crate::channel::ChannelFamily::General)?;
    let mut search = cert_full(&embedded, s, s_log, cfg, &[])?;
    search.witness = search.witness.map(|w| v.matvec(&w));
    Ok(search)
}

/// Certificate for the Lagrangian objective: for any S,
/// max_rho [chi(rho) + lambda Tr(rho E)] <=
/// max_pure omega [H(channel(omega) || S) + lambda Tr(omega E)],
/// with equality at S = channel(optimal average).
pub(crate) fn lagrangian_certificate(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    lambda: f64,
    average: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let s_state = channel.apply(average)?;
    let s = s_state.matrix().clone();
    let s_log = hermitian_log2_clipped(&s, f64::SPECTRAL_FLOOR)?;
    let reward = effect.scale(lambda);
    let (value, witness, converged) =
        sphere_max(channel, &s_log, Some(&reward), cfg, salt::CERTIFICATE, &[]);
    let out = channel.apply_pure(&witness);
    let leak = support_leak(&out, &s)?;
    Ok(CertSearch {
        value,
        witness: Some(witness),
        multiplier: Some(lambda),
        support_restricted: leak > SUPPORT_LEAK_TOL,
        converged,
    })
}

/// Certificate for a candidate ensemble under the constraint. The gap is
/// cert - chi(candidate); the candidate is certified optimal when the
/// gap is at most `cfg.tol_certificate` (and meaningfully positive gaps
/// witness suboptimality).
pub fn optimality_certificate(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    candidate: &Ensemble<f64>,
    cfg: &OptimizerConfig,
) -> Result<CertificateOutcome> {
    cfg.validate()?;
    constraint.check_dim(channel.din())?;
    if candidate.dim() != channel.din() {
        return Err(Error::dims("candidate dim does not match channel"));
    }
    let average = candidate.average_state();
    let feas = constraint.violation(&average)?;
    if feas > 1e-6 {
        return Err(Error::invalid(
            "candidate average violates the constraint beyond tolerance",
        ));
    }
    let warm = crate::capacity::ensemble_to_init(candidate)?;
    let search = certify_against(channel, constraint, &average, &warm.members, cfg)?;
    let chi = chi_of_ensemble(channel, candidate)?;
    Ok(CertificateOutcome {
        value: search.value,
        gap: search.value - chi,
        multiplier: search.multiplier,
        support_restricted: search.support_restricted,
        converged: search.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::h2;
    use crate::random::random_state;
    use crate::state::HermitianOperator;

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: 3,
            seed,
            ..OptimizerConfig::default()
        }
    }

    fn basis_ensemble(weights: [f64; 2]) -> Ensemble<f64> {
        let e0 = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let e1 = DensityMatrix::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        Ensemble::new(weights.to_vec(), vec![e0, e1]).unwrap()
    }

    fn proj1() -> HermitianOperator<f64> {
        HermitianOperator::new(Mat::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
        .unwrap()
    }

    #[test]
    fn confirms_the_noiseless_optimum() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let cand = basis_ensemble([0.5, 0.5]);
        let out = optimality_certificate(&ch, &ConstraintSet::Full, &cand, &cfg(31)).unwrap();
        assert!(out.gap.abs() < 1e-7, "gap {}", out.gap);
        assert!(!out.support_restricted);
        assert!(out.converged);
    }

    #[test]
    fn flags_a_skewed_ensemble() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let cand = basis_ensemble([0.6, 0.4]);
        let out = optimality_certificate(&ch, &ConstraintSet::Full, &cand, &cfg(32)).unwrap();
        // Certificate stays an upper bound on the capacity, so the gap
        // exposes the shortfall h2(0.4) vs 1.
        assert!(out.gap >= 1.0 - h2(0.4) - 1e-6, "gap {}", out.gap);
    }

    #[test]
    fn linear_dual_recovers_the_slope_multiplier() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let c = ConstraintSet::linear(proj1(), 0.25).unwrap();
        let cand = basis_ensemble([0.75, 0.25]);
        let out = optimality_certificate(&ch, &c, &cand, &cfg(33)).unwrap();
        assert!(out.gap.abs() < 1e-4, "gap {}", out.gap);
        let lambda = out.multiplier.expect("dual multiplier");
        // Slope of h2 at 1/4 is log2(3).
        assert!((lambda - 3f64.log2()).abs() < 1e-3, "lambda {lambda}");
        assert!(out.converged);
    }

    #[test]
    fn linear_certificate_flags_an_undershooting_candidate() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let c = ConstraintSet::linear(proj1(), 0.25).unwrap();
        let cand = basis_ensemble([0.85, 0.15]);
        let out = optimality_certificate(&ch, &c, &cand, &cfg(34)).unwrap();
        assert!(out.gap > 0.1, "gap {}", out.gap);
    }

    #[test]
    fn singleton_certificate_matches_an_optimal_decomposition() {
        let ch = KrausChannel::<f64>::depolarizing(0.4, 2).unwrap();
        let rho = random_state::<f64>(2, 2, 35).unwrap();
        let roof = crate::capacity::hat_h(&ch, &rho, &cfg(35)).unwrap();
        let c = ConstraintSet::singleton(rho);
        let out = optimality_certificate(&ch, &c, &roof.ensemble, &cfg(35)).unwrap();
        assert!(out.gap.abs() < 1e-6, "gap {}", out.gap);
        assert!(out.converged);
    }

    #[test]
    fn leaving_the_candidate_support_is_flagged() {
        // A point ensemble on |0> has chi 0; the bound diverges on the
        // clipped null space and the leak is reported.
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let e0 = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let cand = Ensemble::new(vec![1.0], vec![e0]).unwrap();
        let out = optimality_certificate(&ch, &ConstraintSet::Full, &cand, &cfg(36)).unwrap();
        assert!(out.support_restricted);
        assert!(out.gap > 1.0, "gap {}", out.gap);
    }

    #[test]
    fn infeasible_candidates_are_rejected() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let c = ConstraintSet::linear(proj1(), 0.25).unwrap();
        let cand = basis_ensemble([0.25, 0.75]);
        assert!(optimality_certificate(&ch, &c, &cand, &cfg(37)).is_err());
    }
}
