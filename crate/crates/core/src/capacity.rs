//! Constrained Holevo quantities: the output-entropy convex roof, the
//! chi-function, and the chi-capacity over the supported constraint
//! families, plus the Lagrangian relaxation.
//!
//! The maximization runs the ensemble-ascent engine on a shared objective;
//! which constraint machinery engages depends on the constraint kind:
//!
//! * `Full`: unconstrained ascent.
//! * `Linear`: an exact average-weight cap enforced by projection onto an
//!   anchor member sitting at the effect's bottom eigenvector. When the
//!   bound equals the minimal achievable expectation (no interior point),
//!   the feasible averages are exactly the states on the bottom
//!   eigenspace, and the problem is re-solved on that subspace.
//! * `Singleton`: the average is pinned, so the ascent degenerates to a
//!   convex-roof minimization handled by the decomposition engine.
//! * `Marginals`: linear sides become exact weight caps on lifted
//!   effects; singleton sides are steered by a quadratic penalty, then
//!   repaired exactly and re-decomposed.

use crate::channel::{chi_of_ensemble, KrausChannel};
use crate::constraint::ConstraintSet;
use crate::bipartite::{kron, kron_vec, partial_trace_op, Keep};
use crate::eig::eigh;
use crate::entropy::entropy;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::{CapacityResult, OptimizerConfig};
use crate::opt::decomp::minimize_decomposition;
use crate::opt::ensemble::{ascend, AscentInit, AscentOutcome};
use crate::opt::objective::{
    ConstraintRuntime, EnsembleObjective, MapOp, MarginalTarget, MixOp, C64,
};
use crate::scalar::Scalar;
use crate::state::{DensityMatrix, Ensemble};
use crate::tol;

type Mat = ComplexMatrix<f64>;

/// Stream-salt blocks keeping the RNG substreams of the solve phases
/// disjoint. Each phase uses at most a few hundred consecutive streams.
pub(crate) mod salt {
    pub const PRIMARY: u64 = 0;
    pub const CERTIFICATE: u64 = 10_000;
    pub const ROOF: u64 = 20_000;
    pub const KUHN_TUCKER: u64 = 30_000;
    pub const EXTENSION: u64 = 60_000;
    pub const LAB: u64 = 70_000;
}

const MARGINAL_PENALTY_WEIGHT: f64 = 25.0;
/// Eigenvalues within this of the bottom eigenvalue count as part of the
/// bottom eigenspace for the no-interior fallback.
const EIGENSPACE_TOL: f64 = 1e-10;

/// Convex roof of the output entropy with its witnessing decomposition.
#[derive(Clone, Debug)]
pub struct RoofResult {
    pub value: f64,
    pub ensemble: Ensemble<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn pure_ensemble(weights: Vec<f64>, members: &[Vec<C64>]) -> Result<Ensemble<f64>> {
    let states = members
        .iter()
        .map(|m| DensityMatrix::pure(m))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(weights, states)
}

/// Minimal output entropy over decompositions of `rho` into at most
/// `cfg.ensemble_size` pure states.
pub fn hat_h(
    channel: &KrausChannel<f64>,
    rho: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<RoofResult> {
    cfg.validate()?;
    if channel.din() != rho.dim() {
        return Err(Error::dims("state dim does not match channel input"));
    }
    let maps = vec![(1.0, MapOp::Kraus(channel.clone()))];
    let out = minimize_decomposition(&maps, rho, cfg, salt::ROOF)?;
    Ok(RoofResult {
        value: out.value,
        ensemble: pure_ensemble(out.weights, &out.members)?,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Holevo quantity of the state: output entropy minus its convex roof.
pub fn chi_function(
    channel: &KrausChannel<f64>,
    rho: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let roof = hat_h(channel, rho, cfg)?;
    let out = channel.apply(rho)?;
    Ok(entropy(&out) - roof.value)
}

/// Raw solver output kept in member-vector form so downstream callers
/// (bisections, profiles) can chain warm starts without re-factorizing.
#[derive(Clone, Debug)]
pub(crate) struct SolveOutput {
    pub value: f64,
    pub weights: Vec<f64>,
    pub members: Vec<Vec<C64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveOutput {
    pub fn as_init(&self) -> AscentInit {
        AscentInit {
            weights: self.weights.clone(),
            members: self.members.clone(),
        }
    }

    pub fn ensemble(&self) -> Result<Ensemble<f64>> {
        pure_ensemble(self.weights.clone(), &self.members)
    }

    pub(crate) fn from_ascent(out: AscentOutcome) -> Self {
        SolveOutput {
            value: out.value,
            weights: out.weights,
            members: out.members,
            iterations: out.iterations,
            converged: out.converged,
        }
    }
}

/// Refine an ensemble into pure members for warm-starting: mixed states
/// split along their eigenvectors.
pub(crate) fn ensemble_to_init(e: &Ensemble<f64>) -> Result<AscentInit> {
    let mut weights = Vec::new();
    let mut members = Vec::new();
    for (w, s) in e.weights().iter().zip(e.states()) {
        let dec = eigh(s.matrix())?;
        for k in 0..s.dim() {
            let p = dec.values[k];
            if w * p > 1e-12 {
                weights.push(w * p);
                members.push((0..s.dim()).map(|a| dec.vectors.get(a, k)).collect());
            }
        }
    }
    if members.is_empty() {
        return Err(Error::invalid("ensemble has no spectral weight"));
    }
    Ok(AscentInit { weights, members })
}

pub(crate) fn solve_unconstrained(
    obj: &EnsembleObjective,
    cfg: &OptimizerConfig,
    stream_salt: u64,
    warm: &[AscentInit],
) -> SolveOutput {
    let m = cfg.members_for(obj.din);
    SolveOutput::from_ascent(ascend(
        obj,
        &ConstraintRuntime::free(),
        m,
        cfg,
        stream_salt,
        warm,
    ))
}

/// Build the runtime for a constraint. Linear constraints become exact
/// mix caps; marginal singleton sides become penalties. The anchor is a
/// product of per-side minimizers so the cap projection stays exact.
pub(crate) fn runtime_for(constraint: &ConstraintSet<f64>, din: usize) -> Result<ConstraintRuntime> {
    match constraint {
        ConstraintSet::Full => Ok(ConstraintRuntime::free()),
        ConstraintSet::Linear { effect, alpha } => {
            let anchor = constraint
                .mixing_anchor(din)
                .ok_or_else(|| Error::invalid("linear constraint lacks an anchor"))?;
            Ok(ConstraintRuntime {
                mix_ops: vec![MixOp {
                    op: effect.matrix().clone(),
                    alpha: *alpha,
                }],
                anchor: Some(anchor),
                penalties: Vec::new(),
                penalty_weight: 0.0,
            })
        }
        ConstraintSet::Singleton { .. } => Err(Error::invalid(
            "singleton constraints are solved by decomposition, not ascent",
        )),
        ConstraintSet::Marginals { left, right, dims } => {
            let (dh, dk) = *dims;
            let mut mix_ops = Vec::new();
            let mut penalties = Vec::new();
            let mut anchor_left: Option<Vec<C64>> = None;
            let mut anchor_right: Option<Vec<C64>> = None;
            let mut side = |cs: &ConstraintSet<f64>,
                            keep: Keep,
                            dim_side: usize,
                            anchor_slot: &mut Option<Vec<C64>>|
             -> Result<()> {
                match cs {
                    ConstraintSet::Full => {
                        *anchor_slot = Some(basis_vector(dim_side, 0));
                        Ok(())
                    }
                    ConstraintSet::Linear { effect, alpha } => {
                        let lifted = match keep {
                            Keep::Left => kron(effect.matrix(), &Mat::identity(dk)),
                            Keep::Right => kron(&Mat::identity(dh), effect.matrix()),
                        };
                        mix_ops.push(MixOp {
                            op: lifted,
                            alpha: *alpha,
                        });
                        *anchor_slot = cs.mixing_anchor(dim_side);
                        Ok(())
                    }
                    ConstraintSet::Singleton { state } => {
                        penalties.push(MarginalTarget {
                            keep,
                            dims: (dh, dk),
                            target: state.matrix().clone(),
                        });
                        // Any support vector works for the anchor side;
                        // the cap projection only needs the other side.
                        let dec = eigh(state.matrix())?;
                        let top = dim_side - 1;
                        *anchor_slot =
                            Some((0..dim_side).map(|a| dec.vectors.get(a, top)).collect());
                        Ok(())
                    }
                    ConstraintSet::Marginals { .. } => {
                        Err(Error::invalid("nested marginal constraints"))
                    }
                }
            };
            side(left, Keep::Left, dh, &mut anchor_left)?;
            side(right, Keep::Right, dk, &mut anchor_right)?;
            let anchor = if mix_ops.is_empty() {
                None
            } else {
                Some(kron_vec(
                    &anchor_left.expect("left anchor"),
                    &anchor_right.expect("right anchor"),
                ))
            };
            Ok(ConstraintRuntime {
                mix_ops,
                anchor,
                penalties,
                penalty_weight: MARGINAL_PENALTY_WEIGHT,
            })
        }
    }
}

fn basis_vector(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[k] = C64::new(1.0, 0.0);
    v
}

pub(crate) fn average_of(weights: &[f64], members: &[Vec<C64>], dim: usize) -> Mat {
    let mut acc = Mat::zeros(dim, dim);
    for (w, m) in weights.iter().zip(members) {
        if *w > 0.0 {
            acc.add_scaled(&Mat::outer(m, m), *w);
        }
    }
    acc
}

/// Linear constraint with no interior point: the feasible averages are
/// exactly the states on the effect's bottom eigenspace. Solve the full
/// problem on that subspace through an isometry.
fn solve_bottom_eigenspace(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    cfg: &OptimizerConfig,
    warm: &[AscentInit],
) -> Result<SolveOutput> {
    let din = channel.din();
    let dec = eigh(effect)?;
    let bottom = dec.values[0];
    let cols: Vec<usize> = (0..din)
        .filter(|&k| dec.values[k] <= bottom + EIGENSPACE_TOL)
        .collect();
    let k = cols.len();
    let v = Mat::from_fn(din, k, |a, j| dec.vectors.get(a, cols[j]));
    let embedded_kraus: Vec<Mat> = channel
        .kraus_ops()
        .iter()
        .map(|op| op.matmul(&v))
        .collect();
    let embedded = KrausChannel::new(embedded_kraus, crate::channel::ChannelFamily::General)?;
    let obj = EnsembleObjective::chi(&embedded);
    // Pull warm members back into the subspace: phi_sub = V^dag phi.
    let vh = v.adjoint();
    let warm_sub: Vec<AscentInit> = warm
        .iter()
        .map(|w| AscentInit {
            weights: w.weights.clone(),
            members: w.members.iter().map(|m| vh.matvec(m)).collect(),
        })
        .collect();
    let mut out = solve_unconstrained(&obj, cfg, salt::PRIMARY, &warm_sub);
    out.members = out.members.iter().map(|m| v.matvec(m)).collect();
    Ok(out)
}

/// Repair the average exactly onto the singleton marginal targets, then
/// decompose it again for the witnessing ensemble. The corrections leave
/// the other side's marginal untouched, and the bisection blends toward a
/// product of the targets, which preserves both marginals.
pub(crate) fn repair_marginal_average(
    sigma: &Mat,
    runtime: &ConstraintRuntime,
    dims: (usize, usize),
) -> Result<DensityMatrix<f64>> {
    let (dh, dk) = dims;
    let mut fixed = sigma.clone();
    for pen in &runtime.penalties {
        let current = partial_trace_op(&fixed, dims, pen.keep)?;
        let delta = pen.target.sub(&current);
        let correction = match pen.keep {
            Keep::Left => kron(&delta, &Mat::identity(dk).scale(1.0 / dk as f64)),
            Keep::Right => kron(&Mat::identity(dh).scale(1.0 / dh as f64), &delta),
        };
        fixed = fixed.add(&correction);
    }
    fixed = fixed.hermitize();
    // Blend toward the product of the repaired marginals until positive.
    let min_eig = |m: &Mat| -> Result<f64> {
        Ok(eigh(m)?.values[0])
    };
    if min_eig(&fixed)? >= -f64::TOL_STATE {
        return DensityMatrix::new(fixed);
    }
    let left = partial_trace_op(&fixed, dims, Keep::Left)?;
    let right = partial_trace_op(&fixed, dims, Keep::Right)?;
    let product = kron(&left, &right);
    let blend = |t: f64| -> Mat {
        let mut m = fixed.scale(1.0 - t);
        m.add_scaled(&product, t);
        m
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_eig(&blend(mid))? >= 1e-13 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    DensityMatrix::new(blend(hi).hermitize())
}

/// Chi-capacity under the constraint, without the certificate pass.
pub(crate) fn solve_capacity(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
    warm: &[AscentInit],
) -> Result<SolveOutput> {
    cfg.validate()?;
    constraint.check_dim(channel.din())?;
    constraint.check_feasible()?;
    let din = channel.din();
    match constraint {
        ConstraintSet::Singleton { state } => {
            let roof = hat_h(channel, state, cfg)?;
            let out = channel.apply(state)?;
            let init = ensemble_to_init(&roof.ensemble)?;
            Ok(SolveOutput {
                value: entropy(&out) - roof.value,
                weights: init.weights,
                members: init.members,
                iterations: roof.iterations,
                converged: roof.converged,
            })
        }
        ConstraintSet::Linear { effect, alpha } => {
            let dec = effect.eigenvalues();
            if *alpha <= dec[0] + EIGENSPACE_TOL {
                return solve_bottom_eigenspace(channel, effect.matrix(), cfg, warm);
            }
            let obj = EnsembleObjective::chi(channel);
            let runtime = runtime_for(constraint, din)?;
            let m = cfg.members_for(din);
            Ok(SolveOutput::from_ascent(ascend(
                &obj,
                &runtime,
                m,
                cfg,
                salt::PRIMARY,
                warm,
            )))
        }
        ConstraintSet::Full => {
            let obj = EnsembleObjective::chi(channel);
            Ok(solve_unconstrained(&obj, cfg, salt::PRIMARY, warm))
        }
        ConstraintSet::Marginals { dims, .. } => {
            let obj = EnsembleObjective::chi(channel);
            let runtime = runtime_for(constraint, din)?;
            let m = cfg.members_for(din);
            let out = ascend(&obj, &runtime, m, cfg, salt::PRIMARY, warm);
            if runtime.penalties.is_empty() {
                return Ok(SolveOutput::from_ascent(out));
            }
            // Exact repair of the singleton sides, then a fresh
            // decomposition of the repaired average.
            let sigma = average_of(&out.weights, &out.members, din);
            let repaired = repair_marginal_average(&sigma, &runtime, *dims)?;
            let roof = hat_h(channel, &repaired, cfg)?;
            let out_state = channel.apply(&repaired)?;
            let init = ensemble_to_init(&roof.ensemble)?;
            Ok(SolveOutput {
                value: entropy(&out_state) - roof.value,
                weights: init.weights,
                members: init.members,
                iterations: out.iterations + roof.iterations,
                converged: out.converged && roof.converged,
            })
        }
    }
}

fn result_from_solve(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    solve: &SolveOutput,
    certificate_gap: f64,
    multiplier: Option<f64>,
    tol_certificate: f64,
) -> Result<CapacityResult> {
    let ensemble = solve.ensemble()?;
    let value = chi_of_ensemble(channel, &ensemble)?;
    let average = ensemble.average_state();
    let feasible = constraint.violation(&average)? <= tol::TOL_FEASIBILITY;
    Ok(CapacityResult {
        value,
        ensemble,
        average,
        certificate_gap,
        multiplier,
        converged: feasible && certificate_gap.abs() <= tol_certificate,
        iterations: solve.iterations,
    })
}

/// Maximal Holevo quantity over ensembles whose average lies in the
/// constraint set. The certificate pass bounds the optimality gap; when
/// the gap exceeds the tolerance, the certificate's witness is injected
/// into the ensemble and the ascent resumes, up to three rounds.
pub fn chi_capacity(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    chi_capacity_with_warm(channel, constraint, cfg, &[])
}

/// `chi_capacity` seeded with starting ensembles tried before the random
/// restarts.
pub fn chi_capacity_with_warm(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
    warm_ensembles: &[Ensemble<f64>],
) -> Result<CapacityResult> {
    let mut warm: Vec<AscentInit> = warm_ensembles
        .iter()
        .map(ensemble_to_init)
        .collect::<Result<Vec<_>>>()?;
    let mut solve = solve_capacity(channel, constraint, cfg, &warm)?;
    let mut cert = crate::certificate::certify_members(channel, constraint, &solve, cfg)?;
    let mut multiplier = cert.multiplier;
    for round in 0..3 {
        let gap = cert.value - solve.value;
        if gap <= cfg.tol_certificate || cert.witness.is_none() {
            break;
        }
        // Resume with the certificate's witness appended to the current
        // configuration.
        let mut init = solve.as_init();
        init.weights.push(tol::WEIGHT_PRUNE * 10.0);
        init.members.push(cert.witness.clone().expect("checked"));
        let total: f64 = init.weights.iter().sum();
        for w in init.weights.iter_mut() {
            *w /= total;
        }
        warm = vec![init];
        let retry_cfg = cfg.with_seed(cfg.seed.wrapping_add(1 + round as u64));
        let retry = solve_capacity(channel, constraint, &retry_cfg, &warm)?;
        if retry.value > solve.value {
            solve = retry;
        }
        cert = crate::certificate::certify_members(channel, constraint, &solve, cfg)?;
        multiplier = cert.multiplier;
    }
    let gap = cert.value - solve.value;
    result_from_solve(channel, constraint, &solve, gap, multiplier, cfg.tol_certificate)
}

/// Unconstrained maximization of chi plus a linear reward on the average:
/// max over ensembles of chi + lambda * Tr(rho_av E). The reported value
/// includes the linear term.
pub fn lagrangian_capacity(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    lambda: f64,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    lagrangian_capacity_with_warm(channel, effect, lambda, cfg, &[])
}

pub(crate) fn lagrangian_solve(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    lambda: f64,
    cfg: &OptimizerConfig,
    stream_salt: u64,
    warm: &[AscentInit],
) -> Result<SolveOutput> {
    cfg.validate()?;
    if lambda < 0.0 {
        return Err(Error::invalid("lagrangian multiplier must be nonnegative"));
    }
    if effect.rows() != channel.din() || !effect.is_square() {
        return Err(Error::dims("effect dim does not match channel input"));
    }
    let mut obj = EnsembleObjective::chi(channel);
    obj.linear = Some(effect.scale(lambda));
    Ok(solve_unconstrained(&obj, cfg, stream_salt, warm))
}

pub fn lagrangian_capacity_with_warm(
    channel: &KrausChannel<f64>,
    effect: &Mat,
    lambda: f64,
    cfg: &OptimizerConfig,
    warm_ensembles: &[Ensemble<f64>],
) -> Result<CapacityResult> {
    let warm: Vec<AscentInit> = warm_ensembles
        .iter()
        .map(ensemble_to_init)
        .collect::<Result<Vec<_>>>()?;
    let solve = lagrangian_solve(channel, effect, lambda, cfg, salt::PRIMARY, &warm)?;
    let ensemble = solve.ensemble()?;
    let average = ensemble.average_state();
    let chi = chi_of_ensemble(channel, &ensemble)?;
    let linear = average.matrix().trace_product_re(effect) * lambda;
    let value = chi + linear;
    let cert = crate::certificate::lagrangian_certificate(
        channel,
        effect,
        lambda,
        &average,
        cfg,
    )?;
    let gap = cert.value - value;
    Ok(CapacityResult {
        value,
        ensemble,
        average,
        certificate_gap: gap,
        multiplier: Some(lambda),
        converged: gap.abs() <= cfg.tol_certificate,
        iterations: solve.iterations,
    })
}

/// Residual of the optimal-average lower bound: for a certified optimum
/// with average rho_av and any feasible rho,
/// value >= chi(rho) + H(channel(rho) || channel(rho_av)).
/// Nonnegative (within solver slack) when `optimal` is truly optimal.
pub fn corollary1_check(
    channel: &KrausChannel<f64>,
    constraint: &ConstraintSet<f64>,
    optimal: &CapacityResult,
    rho: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    constraint.check_dim(channel.din())?;
    if constraint.violation(rho)? > tol::TOL_FEASIBILITY.max(1e-6) {
        return Err(Error::invalid("probe state violates the constraint"));
    }
    let chi_rho = chi_function(channel, rho, cfg)?;
    let out_rho = channel.apply(rho)?;
    let out_avg = channel.apply(&optimal.average)?;
    let rel = crate::entropy::relative_entropy(&out_rho, &out_avg)?;
    if !rel.is_finite() {
        return Err(Error::invalid(
            "probe output leaves the support of the optimal output",
        ));
    }
    Ok(optimal.value - chi_rho - rel)
}

/// Output-entropy roof through a block channel. Blockwise flattening is
/// exact: the block output entropy splits into the weight entropy plus
/// the weighted component entropies, and the weight entropy does not
/// depend on the decomposition.
pub fn hat_h_block(
    block: &crate::channel::BlockChannel<f64>,
    rho: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<RoofResult> {
    cfg.validate()?;
    let maps: Vec<(f64, MapOp)> = block
        .components()
        .iter()
        .filter(|(q, _)| *q > 0.0)
        .map(|(q, ch)| (*q, MapOp::Kraus(ch.clone())))
        .collect();
    let weight_entropy: f64 = block
        .components()
        .iter()
        .map(|(q, _)| crate::entropy::eta(*q))
        .sum();
    let out = minimize_decomposition(&maps, rho, cfg, salt::ROOF)?;
    Ok(RoofResult {
        value: out.value + weight_entropy,
        ensemble: pure_ensemble(out.weights, &out.members)?,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Holevo quantity of a state through a block channel.
pub fn chi_function_block(
    block: &crate::channel::BlockChannel<f64>,
    rho: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let roof = hat_h_block(block, rho, cfg)?;
    let out = block.apply_block(rho)?;
    Ok(crate::entropy::block_entropy(&out) - roof.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::h2;
    use crate::random::{random_state, random_unit_vector, rng_from_seed};
    use crate::state::HermitianOperator;

    fn cfg(restarts: usize, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts,
            seed,
            ..OptimizerConfig::default()
        }
    }

    fn proj1(dim: usize) -> HermitianOperator<f64> {
        HermitianOperator::new(Mat::from_fn(dim, dim, |i, j| {
            if i == 1 && j == 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
        .unwrap()
    }

    #[test]
    fn hat_h_vanishes_for_noiseless() {
        let ch = KrausChannel::<f64>::noiseless(3).unwrap();
        let rho = random_state::<f64>(3, 3, 5).unwrap();
        let roof = hat_h(&ch, &rho, &cfg(2, 1)).unwrap();
        assert!(roof.value.abs() < 1e-9, "roof {}", roof.value);
    }

    #[test]
    fn hat_h_of_constant_channel_is_target_entropy() {
        let omega = random_state::<f64>(2, 2, 9).unwrap();
        let target = entropy(&omega);
        let ch = KrausChannel::constant(omega.clone()).unwrap();
        let rho = random_state::<f64>(2, 2, 11).unwrap();
        let roof = hat_h(&ch, &rho, &cfg(2, 2)).unwrap();
        assert!((roof.value - target).abs() < 1e-9);
        // And the chi-function collapses to zero.
        let chi = chi_function(&ch, &rho, &cfg(2, 2)).unwrap();
        assert!(chi.abs() < 1e-9, "chi {}", chi);
    }

    #[test]
    fn chi_function_of_noiseless_is_input_entropy() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let rho = random_state::<f64>(2, 2, 13).unwrap();
        let chi = chi_function(&ch, &rho, &cfg(2, 3)).unwrap();
        assert!((chi - entropy(&rho)).abs() < 1e-9);
    }

    #[test]
    fn full_capacity_of_noiseless_qubit() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let r = chi_capacity(&ch, &ConstraintSet::Full, &cfg(3, 4)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-7, "value {}", r.value);
        assert!(r.converged, "gap {}", r.certificate_gap);
        assert!(r.certificate_gap.abs() < 1e-6);
    }

    #[test]
    fn full_capacity_of_depolarizing_qubit() {
        let p = 0.3;
        let ch = KrausChannel::<f64>::depolarizing(p, 2).unwrap();
        let r = chi_capacity(&ch, &ConstraintSet::Full, &cfg(3, 5)).unwrap();
        let expected = 1.0 - h2(p / 2.0);
        assert!((r.value - expected).abs() < 1e-6, "value {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn linear_capacity_matches_binary_entropy() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        for (alpha, seed) in [(0.25, 6u64), (0.4, 7u64)] {
            let c = ConstraintSet::linear(proj1(2), alpha).unwrap();
            let r = chi_capacity(&ch, &c, &cfg(4, seed)).unwrap();
            let expected = h2(alpha);
            assert!(
                (r.value - expected).abs() < 1e-6,
                "alpha {alpha}: value {} expected {expected}",
                r.value
            );
            assert!(r.converged, "alpha {alpha}: gap {}", r.certificate_gap);
            let load = r.average.matrix().get(1, 1).re;
            assert!(load <= alpha + 1e-9, "load {load}");
            assert!(r.multiplier.is_some());
        }
    }

    #[test]
    fn linear_capacity_without_interior_point() {
        // alpha at the bottom eigenvalue pins the average to |0><0|;
        // a single admissible state carries no information.
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let c = ConstraintSet::linear(proj1(2), 0.0).unwrap();
        let r = chi_capacity(&ch, &c, &cfg(2, 8)).unwrap();
        assert!(r.value.abs() < 1e-9, "value {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn singleton_capacity_equals_chi_function() {
        let ch = KrausChannel::<f64>::depolarizing(0.4, 2).unwrap();
        let rho = random_state::<f64>(2, 2, 21).unwrap();
        let c = ConstraintSet::singleton(rho.clone());
        let r = chi_capacity(&ch, &c, &cfg(3, 9)).unwrap();
        let direct = chi_function(&ch, &rho, &cfg(3, 9)).unwrap();
        assert!((r.value - direct).abs() < 1e-7);
        let dev = r.average.matrix().sub(rho.matrix()).frobenius_norm();
        assert!(dev < 1e-9, "average drift {dev}");
    }

    #[test]
    fn lagrangian_reduces_to_capacity_at_zero() {
        let ch = KrausChannel::<f64>::depolarizing(0.5, 2).unwrap();
        let e = proj1(2);
        let r0 = lagrangian_capacity(&ch, e.matrix(), 0.0, &cfg(3, 10)).unwrap();
        let full = chi_capacity(&ch, &ConstraintSet::Full, &cfg(3, 10)).unwrap();
        assert!((r0.value - full.value).abs() < 1e-6);
    }

    #[test]
    fn lagrangian_identity_effect_adds_lambda() {
        let ch = KrausChannel::<f64>::depolarizing(0.5, 2).unwrap();
        let lambda = 0.7;
        let r = lagrangian_capacity(&ch, &Mat::identity(2), lambda, &cfg(3, 11)).unwrap();
        let full = chi_capacity(&ch, &ConstraintSet::Full, &cfg(3, 11)).unwrap();
        assert!((r.value - full.value - lambda).abs() < 1e-6, "value {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn marginal_caps_combine_independent_sides() {
        // Noiseless two-qubit channel; cap the left marginal's excited
        // weight. Capacity splits as h2(alpha) + 1.
        let ch = KrausChannel::<f64>::noiseless(4).unwrap();
        let left = ConstraintSet::linear(proj1(2), 0.25).unwrap();
        let c = ConstraintSet::marginals(left, ConstraintSet::Full, (2, 2)).unwrap();
        let r = chi_capacity(&ch, &c, &cfg(4, 12)).unwrap();
        let expected = h2(0.25) + 1.0;
        assert!((r.value - expected).abs() < 1e-5, "value {}", r.value);
    }

    #[test]
    fn marginal_singleton_side_is_repaired_exactly() {
        let ch = KrausChannel::<f64>::noiseless(4).unwrap();
        let rho = DensityMatrix::new(Mat::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(if i == 0 { 0.75 } else { 0.25 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
        .unwrap();
        let c = ConstraintSet::marginals(
            ConstraintSet::singleton(rho.clone()),
            ConstraintSet::Full,
            (2, 2),
        )
        .unwrap();
        let r = chi_capacity(&ch, &c, &cfg(3, 13)).unwrap();
        let expected = h2(0.25) + 1.0;
        assert!((r.value - expected).abs() < 1e-5, "value {}", r.value);
        let left = partial_trace_op(r.average.matrix(), (2, 2), Keep::Left).unwrap();
        let dev = left.sub(rho.matrix()).frobenius_norm();
        assert!(dev < tol::TOL_FEASIBILITY, "marginal deviation {dev}");
    }

    #[test]
    fn corollary_bound_holds_for_certified_optimum() {
        let ch = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let r = chi_capacity(&ch, &ConstraintSet::Full, &cfg(3, 14)).unwrap();
        let mut rng = rng_from_seed(0xc0c0);
        for _ in 0..4 {
            let v = random_unit_vector(2, &mut rng);
            let rho = DensityMatrix::pure(&v).unwrap();
            let res = corollary1_check(&ch, &ConstraintSet::Full, &r, &rho, &cfg(3, 14)).unwrap();
            assert!(res >= -1e-3, "residual {res}");
        }
        let at_avg =
            corollary1_check(&ch, &ConstraintSet::Full, &r, &r.average, &cfg(3, 14)).unwrap();
        assert!(at_avg >= -1e-6, "residual at average {at_avg}");
    }

    #[test]
    fn warm_start_determinism_is_bitwise() {
        let ch = KrausChannel::<f64>::depolarizing(0.6, 2).unwrap();
        let c = ConstraintSet::linear(proj1(2), 0.3).unwrap();
        let a = chi_capacity(&ch, &c, &cfg(2, 15)).unwrap();
        let b = chi_capacity(&ch, &c, &cfg(2, 15)).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.certificate_gap, b.certificate_gap);
        assert_eq!(a.multiplier, b.multiplier);
    }
}
