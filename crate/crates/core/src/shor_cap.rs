//! Capacity of the channel extension, alone or tensored with a side
//! channel whose input is constrained. The search runs in the
//! index-symmetrized parametrization, where chi of the extension is the
//! closed-form ensemble objective of [`crate::shor`]: the tensor branch,
//! the two reduced branches, and the index reward as a linear term. The
//! comparison functional the extension was built to track, and the joint
//! Lagrangian maximum it approaches as the index count grows, reuse the
//! same constrained solver.

use crate::capacity::{
    average_of, ensemble_to_init, repair_marginal_average, runtime_for, salt, SolveOutput,
};
use crate::certificate::{support_leak, CertSearch, RESEED, SUPPORT_LEAK_TOL};
use crate::channel::{tensor_channels, KrausChannel};
use crate::constraint::ConstraintSet;
use crate::eig::hermitian_log2_clipped;
use crate::entropy::subnormalized_entropy_unchecked;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::{CapacityResult, OptimizerConfig};
use crate::opt::decomp::minimize_decomposition;
use crate::opt::ensemble::{ascend, AscentInit};
use crate::opt::objective::{Component, ConstraintRuntime, EnsembleObjective, MapOp};
use crate::scalar::Scalar;
use crate::shor::{chi_extension_ensemble, f_functional_bound, ShorExtension};
use crate::state::HermitianOperator;
use crate::tol;

type Mat = ComplexMatrix<f64>;

/// Optimizer slack added to the comparison bound in [`prop3_check`].
pub const PROP3_SLACK: f64 = 1e-3;

/// Substream offsets inside the extension salt block: primary ascent,
/// decomposition repair, certificate search.
const SALT_SOLVE: u64 = salt::EXTENSION;
const SALT_ROOF: u64 = salt::EXTENSION + 200;
const SALT_CERT: u64 = salt::EXTENSION + 400;

/// Ensemble objective whose maximum is chi of (extension tensor psi) in
/// the index-symmetrized parametrization: (1-q) chi terms of the tensor
/// channel, q-weighted chi terms of the two reduced maps, and the index
/// reward q log2(d) Tr sigma_av (E x I) as a linear term.
fn joint_objective(x: &ShorExtension<f64>, psi: &KrausChannel<f64>) -> Result<EnsembleObjective> {
    let dk = psi.din();
    let din = x.base().din() * dk;
    let q = x.q();
    let mut components = Vec::new();
    if 1.0 - q > 0.0 {
        components.push(Component {
            map: MapOp::Kraus(tensor_channels(x.base(), psi)?),
            avg_coeff: 1.0 - q,
            mem_coeff: 1.0 - q,
        });
    }
    if q > 0.0 {
        for effect in [x.effect().matrix().clone(), x.effect_complement().matrix().clone()] {
            components.push(Component {
                map: MapOp::Reduced { psi: psi.clone(), effect },
                avg_coeff: q,
                mem_coeff: q,
            });
        }
    }
    let reward = q * (x.index_count() as f64).log2();
    let linear = if reward > 0.0 {
        Some(crate::bipartite::kron(x.effect().matrix(), &Mat::identity(dk)).scale(reward))
    } else {
        None
    };
    EnsembleObjective::new(din, components, linear)
}

/// chi terms of the tensor channel with weight `chi_coeff` plus the
/// linear reward `lin_coeff * Tr sigma_av (E x I)`: the comparison side
/// of the extension identity, and the joint Lagrangian objective.
fn weighted_tensor_objective(
    phi: &KrausChannel<f64>,
    psi: &KrausChannel<f64>,
    effect: &Mat,
    chi_coeff: f64,
    lin_coeff: f64,
) -> Result<EnsembleObjective> {
    let dk = psi.din();
    let tensor = tensor_channels(phi, psi)?;
    let mut components = Vec::new();
    if chi_coeff > 0.0 {
        components.push(Component {
            map: MapOp::Kraus(tensor.clone()),
            avg_coeff: chi_coeff,
            mem_coeff: chi_coeff,
        });
    }
    let linear = if lin_coeff != 0.0 {
        Some(crate::bipartite::kron(effect, &Mat::identity(dk)).scale(lin_coeff))
    } else {
        None
    };
    if components.is_empty() && linear.is_none() {
        // Both weights vanish; keep the tensor component at weight zero so
        // the solve degenerates to a constant-zero objective.
        components.push(Component {
            map: MapOp::Kraus(tensor),
            avg_coeff: 0.0,
            mem_coeff: 0.0,
        });
    }
    EnsembleObjective::new(phi.din() * dk, components, linear)
}

/// Lift the side constraint to the joint input space: nothing for Full,
/// otherwise a marginal constraint pinning only the right factor.
fn joint_constraint(b: &ConstraintSet<f64>, dims: (usize, usize)) -> Result<ConstraintSet<f64>> {
    match b {
        ConstraintSet::Full => Ok(ConstraintSet::Full),
        ConstraintSet::Marginals { .. } => Err(Error::Unsupported(
            "marginal side constraints do not lift to the joint input space".into(),
        )),
        _ => ConstraintSet::marginals(ConstraintSet::Full, b.clone(), dims),
    }
}

/// Average-only part of the objective at a fixed average input.
fn objective_at_average(obj: &EnsembleObjective, sigma: &Mat) -> f64 {
    let mut v = 0.0;
    for c in &obj.components {
        if c.avg_coeff != 0.0 {
            v += c.avg_coeff * subnormalized_entropy_unchecked(&c.map.apply(sigma).hermitize());
        }
    }
    if let Some(l) = &obj.linear {
        v += sigma.trace_product_re(l);
    }
    v
}

/// Maximize the objective over ensembles whose average satisfies the
/// lifted constraint. Pinned right marginals follow the penalized-ascent
/// path: repair the average exactly, then rebuild the decomposition by
/// minimizing the member terms over decompositions of the repaired state.
fn solve_joint(
    obj: &EnsembleObjective,
    joint: &ConstraintSet<f64>,
    dims: (usize, usize),
    cfg: &OptimizerConfig,
    warm: &[AscentInit],
) -> Result<SolveOutput> {
    cfg.validate()?;
    joint.check_feasible()?;
    let runtime = runtime_for(joint, obj.din)?;
    let m = cfg.members_for(obj.din);
    let out = ascend(obj, &runtime, m, cfg, SALT_SOLVE, warm);
    if runtime.penalties.is_empty() {
        return Ok(SolveOutput::from_ascent(out));
    }
    let sigma = average_of(&out.weights, &out.members, obj.din);
    let repaired = repair_marginal_average(&sigma, &runtime, dims)?;
    let maps: Vec<(f64, MapOp)> = obj
        .components
        .iter()
        .filter(|c| c.mem_coeff > 0.0)
        .map(|c| (c.mem_coeff, c.map.clone()))
        .collect();
    let base = objective_at_average(obj, repaired.matrix());
    if maps.is_empty() {
        let init = ensemble_to_init(&crate::state::Ensemble::new(
            vec![1.0],
            vec![repaired],
        )?)?;
        return Ok(SolveOutput {
            value: base,
            weights: init.weights,
            members: init.members,
            iterations: out.iterations,
            converged: out.converged,
        });
    }
    let roof = minimize_decomposition(&maps, &repaired, cfg, SALT_ROOF)?;
    Ok(SolveOutput {
        value: base - roof.value,
        weights: roof.weights,
        members: roof.members,
        iterations: out.iterations + roof.iterations,
        converged: out.converged && roof.converged,
    })
}

/// One-sided dual bound for the unconstrained side case. With reference
/// outputs S_c = M_c(sigma_av) of the candidate, every ensemble obeys
///
///   J <= max over pure omega of
///        [ sum_c c_c Tr M_c(omega) (log2 M_c(omega) - log2 S_c)
///          + Re Tr(L omega) ],
///
/// because the dropped correction terms assemble into a relative entropy
/// of two equal-trace block states. Encoded as a one-member ascent with
/// the cross terms folded into the linear part; clipped logs keep
/// singular references finite, with a support flag when the maximizer
/// leaves the candidate's output support.
fn cert_joint_full(
    obj: &EnsembleObjective,
    solve: &SolveOutput,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    let din = obj.din;
    let sigma = average_of(&solve.weights, &solve.members, din).hermitize();
    let mut linear = obj.linear.clone().unwrap_or_else(|| Mat::zeros(din, din));
    let mut components = Vec::new();
    let mut refs = Vec::new();
    for c in &obj.components {
        if c.mem_coeff <= 0.0 {
            continue;
        }
        let s_c = c.map.apply(&sigma).hermitize();
        let s_log = hermitian_log2_clipped(&s_c, f64::SPECTRAL_FLOOR)?;
        linear = linear.add(&c.map.adjoint_apply(&s_log).scale(-c.mem_coeff));
        components.push(Component {
            map: c.map.clone(),
            avg_coeff: 0.0,
            mem_coeff: c.mem_coeff,
        });
        refs.push((c.map.clone(), s_c));
    }
    if components.is_empty() {
        // Constant objective: the linear term alone bounds it exactly.
        let top = crate::eig::eigh(&linear)?.values[din - 1];
        return Ok(CertSearch {
            value: top.max(0.0),
            witness: None,
            multiplier: None,
            support_restricted: false,
            converged: true,
        });
    }
    let cert_obj = EnsembleObjective::new(din, components, Some(linear))?;
    let warm: Vec<AscentInit> = solve
        .members
        .iter()
        .map(|m| AscentInit {
            weights: vec![1.0],
            members: vec![m.clone()],
        })
        .collect();
    let out = ascend(&cert_obj, &ConstraintRuntime::free(), 1, cfg, SALT_CERT, &warm);
    let witness = out.members.into_iter().next().expect("one member");
    let witness_op = Mat::outer(&witness, &witness);
    let mut restricted = false;
    for (map, s_c) in &refs {
        let w_out = map.apply(&witness_op).hermitize();
        if support_leak(&w_out, s_c)? > SUPPORT_LEAK_TOL {
            restricted = true;
        }
    }
    Ok(CertSearch {
        value: out.value,
        witness: Some(witness),
        multiplier: None,
        support_restricted: restricted,
        converged: out.converged,
    })
}

/// Certificate dispatch: the dual bound when the side input is free, an
/// independent reseeded re-solve otherwise (a reproducibility gap, not a
/// one-sided bound, matching the marginal-constraint convention).
fn certify_joint(
    obj: &EnsembleObjective,
    joint: &ConstraintSet<f64>,
    dims: (usize, usize),
    solve: &SolveOutput,
    cfg: &OptimizerConfig,
) -> Result<CertSearch> {
    match joint {
        ConstraintSet::Full => cert_joint_full(obj, solve, cfg),
        _ => {
            let reseeded = cfg.with_seed(cfg.seed.wrapping_add(RESEED));
            let re = solve_joint(obj, joint, dims, &reseeded, &[])?;
            Ok(CertSearch {
                value: re.value,
                witness: None,
                multiplier: None,
                support_restricted: false,
                converged: re.converged,
            })
        }
    }
}

/// Shared driver: solve, certify, and re-inject the certificate witness
/// while it beats the candidate, then package the outcome. The reported
/// value is recomputed from the returned ensemble.
fn joint_capacity(
    obj: &EnsembleObjective,
    b: &ConstraintSet<f64>,
    dims: (usize, usize),
    cfg: &OptimizerConfig,
    warm: &[AscentInit],
) -> Result<CapacityResult> {
    let joint = joint_constraint(b, dims)?;
    let mut solve = solve_joint(obj, &joint, dims, cfg, warm)?;
    let mut cert = certify_joint(obj, &joint, dims, &solve, cfg)?;
    for round in 0..3 {
        let gap = cert.value - solve.value;
        if gap <= cfg.tol_certificate || cert.witness.is_none() {
            break;
        }
        let mut init = solve.as_init();
        init.weights.push(tol::WEIGHT_PRUNE * 10.0);
        init.members.push(cert.witness.clone().expect("checked"));
        let total: f64 = init.weights.iter().sum();
        for w in init.weights.iter_mut() {
            *w /= total;
        }
        let retry_cfg = cfg.with_seed(cfg.seed.wrapping_add(1 + round as u64));
        let retry = solve_joint(obj, &joint, dims, &retry_cfg, &[init])?;
        if retry.value > solve.value {
            solve = retry;
        }
        cert = certify_joint(obj, &joint, dims, &solve, cfg)?;
    }
    let gap = cert.value - solve.value;
    let ensemble = solve.ensemble()?;
    let value = obj.value_of_ensemble(&ensemble)?;
    let average = ensemble.average_state();
    let feasible = joint.violation(&average)? <= tol::TOL_FEASIBILITY;
    Ok(CapacityResult {
        value,
        ensemble,
        average,
        certificate_gap: gap,
        multiplier: cert.multiplier,
        converged: feasible && gap.abs() <= cfg.tol_certificate && cert.converged,
        iterations: solve.iterations,
    })
}

/// Capacity of the extension itself: the joint problem against a trivial
/// one-dimensional side channel with a free side input.
pub fn extension_capacity(
    x: &ShorExtension<f64>,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    let psi = KrausChannel::trivial();
    extension_capacity_joint(x, &psi, &ConstraintSet::Full, cfg)
}

/// Capacity of (extension tensor psi) with the side input's average
/// constrained by `b`. The winning ensemble is re-evaluated through the
/// dual-path chi of the extension, so the closed form and the direct
/// block-entropy evaluation both back the reported value.
pub fn extension_capacity_joint(
    x: &ShorExtension<f64>,
    psi: &KrausChannel<f64>,
    b: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    b.check_dim(psi.din())?;
    let obj = joint_objective(x, psi)?;
    let result = joint_capacity(&obj, b, (x.base().din(), psi.din()), cfg, &[])?;
    let check = chi_extension_ensemble(x, psi, &result.ensemble)?;
    if (check.closed_form - result.value).abs() > tol::TOL_DUAL_PATH {
        return Err(Error::Inconsistency(format!(
            "joint objective value {} vs extension chi {}",
            result.value, check.closed_form
        )));
    }
    Ok(result)
}

/// Two-sided comparison between the extension capacity and the reduced
/// functional it brackets.
#[derive(Clone, Copy, Debug)]
pub struct Prop3Report {
    /// Constrained capacity of (extension tensor psi).
    pub lhs: f64,
    /// Max of (1-q) chi terms plus the index reward over the same inputs.
    pub rhs: f64,
    /// Bracket width q (log2 dim K' + 1) from the reduced-branch bound.
    pub bound: f64,
    /// |lhs - rhs| within bound plus optimizer slack.
    pub pass: bool,
    pub lhs_converged: bool,
    pub rhs_converged: bool,
}

/// Check that the extension capacity stays within the reduced-branch
/// bracket of its comparison functional:
/// |lhs - rhs| <= q (log2 dim K' + 1) + slack with
/// lhs = capacity of (extension tensor psi) under the side constraint and
/// rhs = max of (1-q) chi_{phi x psi} + q log2(d) Tr sigma_av (E x I).
/// The capacity side is warm-started from the comparison maximizer, whose
/// objective it dominates term by term.
pub fn prop3_check(
    phi: &KrausChannel<f64>,
    psi: &KrausChannel<f64>,
    effect: &HermitianOperator<f64>,
    q: f64,
    d: usize,
    b: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
) -> Result<Prop3Report> {
    let x = ShorExtension::new(phi.clone(), effect.clone(), q, d)?;
    b.check_dim(psi.din())?;
    let dims = (phi.din(), psi.din());
    let reward = q * (d as f64).log2();
    let rhs_obj = weighted_tensor_objective(phi, psi, effect.matrix(), 1.0 - q, reward)?;
    let rhs = joint_capacity(&rhs_obj, b, dims, cfg, &[])?;

    let warm = vec![ensemble_to_init(&rhs.ensemble)?];
    let lhs_obj = joint_objective(&x, psi)?;
    let lhs = joint_capacity(&lhs_obj, b, dims, cfg, &warm)?;

    let bound = q * f_functional_bound(psi);
    Ok(Prop3Report {
        lhs: lhs.value,
        rhs: rhs.value,
        bound,
        pass: (lhs.value - rhs.value).abs() <= bound + PROP3_SLACK,
        lhs_converged: lhs.converged,
        rhs_converged: rhs.converged,
    })
}

/// Max over ensembles with a constrained side average of
/// chi_{phi x psi} + lambda Tr sigma_av (E x I): the joint Lagrangian
/// maximum that the extension capacity approximates at large index
/// counts. The reported value includes the linear term.
pub fn lagrangian_joint_max(
    phi: &KrausChannel<f64>,
    psi: &KrausChannel<f64>,
    effect: &HermitianOperator<f64>,
    lambda: f64,
    b: &ConstraintSet<f64>,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    if lambda < 0.0 {
        return Err(Error::invalid("lagrangian multiplier must be nonnegative"));
    }
    if effect.dim() != phi.din() {
        return Err(Error::dims("effect must act on the left channel's input"));
    }
    b.check_dim(psi.din())?;
    let obj = weighted_tensor_objective(phi, psi, effect.matrix(), 1.0, lambda)?;
    joint_capacity(&obj, b, (phi.din(), psi.din()), cfg, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::chi_capacity;
    use crate::channel::h2;
    use crate::random::random_channel;
    use crate::state::DensityMatrix;

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

    fn half_effect(dim: usize) -> HermitianOperator<f64> {
        HermitianOperator::new(Mat::identity(dim).scale(0.5)).unwrap()
    }

    #[test]
    fn capacity_monotone_in_index_count_with_closed_form() {
        // Noiseless qubit base with E = I/2: both reduced branches are
        // constant-output, so the capacity is exactly
        // (1 - q) + lambda / 2 at q = lambda / log2(d).
        let phi = KrausChannel::<f64>::noiseless(2).unwrap();
        let lambda = 0.5;
        let c = cfg(2, 71);
        let mut last = f64::NEG_INFINITY;
        for d in [2usize, 4, 8] {
            let q = lambda / (d as f64).log2();
            let x = ShorExtension::new(phi.clone(), half_effect(2), q, d).unwrap();
            let res = extension_capacity(&x, &c).unwrap();
            let oracle = (1.0 - q) + 0.5 * lambda;
            assert!(
                (res.value - oracle).abs() < 2e-3,
                "d {} value {} oracle {}",
                d,
                res.value,
                oracle
            );
            assert!(res.converged, "d {} gap {}", d, res.certificate_gap);
            assert!(res.value > last, "capacity must grow with d at fixed lambda");
            last = res.value;
        }
    }

    #[test]
    fn identity_effect_rewards_every_input() {
        // E = I: the reward is q log2(d) regardless of the input, the
        // complement branch is dead, and the E-branch is constant-output,
        // so the capacity is (1 - q) C(phi) + q log2(d) exactly.
        let phi = KrausChannel::<f64>::noiseless(2).unwrap();
        let e = HermitianOperator::new(Mat::identity(2)).unwrap();
        let x = ShorExtension::new(phi, e, 0.4, 4).unwrap();
        let res = extension_capacity(&x, &cfg(2, 72)).unwrap();
        let oracle = 0.6 * 1.0 + 0.4 * 2.0;
        assert!((res.value - oracle).abs() < 2e-3, "value {}", res.value);
        assert!(res.converged);
    }

    #[test]
    fn zero_branch_weight_recovers_tensor_chi() {
        let phi = random_channel::<f64>(2, 2, 2, 73).unwrap();
        let psi = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let x = ShorExtension::new(phi.clone(), proj1(2), 0.0, 3).unwrap();
        let c = cfg(2, 73);
        let joint = extension_capacity_joint(&x, &psi, &ConstraintSet::Full, &c).unwrap();
        let tensor = tensor_channels(&phi, &psi).unwrap();
        let plain = chi_capacity(&tensor, &ConstraintSet::Full, &c).unwrap();
        assert!(
            (joint.value - plain.value).abs() < 2e-3,
            "joint {} plain {}",
            joint.value,
            plain.value
        );
    }

    #[test]
    fn comparison_bracket_holds_on_qubit_instance() {
        let phi = KrausChannel::<f64>::depolarizing(0.25, 2).unwrap();
        let psi = KrausChannel::<f64>::depolarizing(0.5, 2).unwrap();
        let report = prop3_check(
            &phi,
            &psi,
            &proj1(2),
            0.1,
            4,
            &ConstraintSet::Full,
            &cfg(2, 74),
        )
        .unwrap();
        assert!((report.bound - 0.2).abs() < 1e-12);
        assert!(report.pass, "lhs {} rhs {} bound {}", report.lhs, report.rhs, report.bound);
        // The capacity side dominates the comparison side term by term.
        assert!(report.lhs >= report.rhs - 2e-3);
        assert!(report.lhs_converged && report.rhs_converged);
    }

    #[test]
    fn lagrangian_joint_identities_with_trivial_side() {
        let phi = random_channel::<f64>(2, 2, 2, 75).unwrap();
        let psi = KrausChannel::<f64>::trivial();
        let c = cfg(2, 75);
        let plain = chi_capacity(&phi, &ConstraintSet::Full, &c).unwrap();

        let at_zero =
            lagrangian_joint_max(&phi, &psi, &proj1(2), 0.0, &ConstraintSet::Full, &c).unwrap();
        assert!((at_zero.value - plain.value).abs() < 2e-3);

        let id = HermitianOperator::new(Mat::identity(2)).unwrap();
        let shifted =
            lagrangian_joint_max(&phi, &psi, &id, 0.7, &ConstraintSet::Full, &c).unwrap();
        assert!(
            (shifted.value - plain.value - 0.7).abs() < 2e-3,
            "shifted {} plain {}",
            shifted.value,
            plain.value
        );
    }

    #[test]
    fn pinned_side_marginal_reaches_joint_entropy_bound() {
        // Noiseless x noiseless with the side marginal pinned to I/2:
        // the maximum is H(sigma_av) = 2 at sigma_av = I/4.
        let phi = KrausChannel::<f64>::noiseless(2).unwrap();
        let psi = KrausChannel::<f64>::noiseless(2).unwrap();
        let x = ShorExtension::new(phi, proj1(2), 0.0, 2).unwrap();
        let pinned = ConstraintSet::Singleton {
            state: DensityMatrix::maximally_mixed(2),
        };
        let res = extension_capacity_joint(&x, &psi, &pinned, &cfg(2, 76)).unwrap();
        assert!((res.value - 2.0).abs() < 2e-3, "value {}", res.value);
        let marg = crate::bipartite::partial_trace_op(
            res.average.matrix(),
            (2, 2),
            crate::bipartite::Keep::Right,
        )
        .unwrap();
        assert!(marg.sub(&Mat::identity(2).scale(0.5)).max_abs() < 1e-6);
    }

    #[test]
    fn capped_side_marginal_matches_binary_entropy_bound() {
        // Noiseless x noiseless with Tr sigma_av (I x P1) <= 0.2: the
        // maximum splits into 1 + h2(0.2) on a product average.
        let phi = KrausChannel::<f64>::noiseless(2).unwrap();
        let psi = KrausChannel::<f64>::noiseless(2).unwrap();
        let x = ShorExtension::new(phi, proj1(2), 0.0, 2).unwrap();
        let capped = ConstraintSet::linear(proj1(2), 0.2).unwrap();
        let res = extension_capacity_joint(&x, &psi, &capped, &cfg(2, 77)).unwrap();
        let oracle = 1.0 + h2(0.2);
        assert!((res.value - oracle).abs() < 2e-3, "value {} oracle {}", res.value, oracle);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let phi = KrausChannel::<f64>::noiseless(2).unwrap();
        let psi = KrausChannel::<f64>::noiseless(2).unwrap();
        let x = ShorExtension::new(phi.clone(), proj1(2), 0.3, 2).unwrap();
        let c = cfg(1, 78);

        // Side constraint on the wrong dimension.
        let wrong = ConstraintSet::linear(proj1(3), 0.5).unwrap();
        assert!(extension_capacity_joint(&x, &psi, &wrong, &c).is_err());

        // Marginal side constraints do not lift.
        let marg = ConstraintSet::marginals(
            ConstraintSet::Full,
            ConstraintSet::Full,
            (1, 2),
        )
        .unwrap();
        let err = extension_capacity_joint(&x, &psi, &marg, &c).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "got {:?}", err);

        // Negative multiplier.
        assert!(
            lagrangian_joint_max(&phi, &psi, &proj1(2), -0.1, &ConstraintSet::Full, &c).is_err()
        );
    }
}
