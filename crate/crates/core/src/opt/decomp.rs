//! Convex-roof minimizer: search over pure-state decompositions of a
//! fixed density operator for the one minimizing a weighted sum of
//! output entropies.
//!
//! A decomposition with `r` members of a rank-`s` state `sigma` is an
//! r x s matrix `V` with orthonormal columns: the unnormalized members
//! are `phi_i = sum_k V[i,k] sqrt(lambda_k) u_k` over the eigenpairs of
//! `sigma`, and `sum_i phi_i phi_i^dag = sigma` holds for every such `V`.
//! Descent runs on the Stiefel manifold with the analytic gradient and a
//! thin-QR retraction.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::eig::{eigh, hermitian_log2_clipped};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::config::OptimizerConfig;
use crate::opt::objective::{MapOp, C64};
use crate::random::substream;
use crate::scalar::Scalar;
use crate::state::DensityMatrix;
use crate::tol;

type Mat = ComplexMatrix<f64>;

/// Best decomposition found: `value` is sum_i pi_i g(P_i) with
/// g(P) = sum_c coeff_c * H(M_c(P)) at the returned members.
#[derive(Clone, Debug)]
pub struct RoofOutcome {
    pub value: f64,
    pub weights: Vec<f64>,
    pub members: Vec<Vec<C64>>,
    pub iterations: usize,
    pub converged: bool,
}

const STALL_IMPROVEMENT: f64 = 1e-11;
const STALL_PATIENCE: usize = 5;
const LINE_TRIALS: usize = 30;
const STEP_INIT: f64 = 0.5;
const STEP_GROWTH: f64 = 1.5;
const STEP_MAX: f64 = 8.0;
const STEP_MIN: f64 = 1e-14;
const RANK_FLOOR: f64 = 1e-14;

struct Problem<'a> {
    maps: &'a [(f64, MapOp)],
    /// Columns are sqrt(lambda_k) u_k for the retained eigenpairs.
    basis: Mat,
    rank: usize,
    members: usize,
}

impl Problem<'_> {
    fn phi(&self, v: &Mat, i: usize) -> Vec<C64> {
        let din = self.basis.rows();
        let mut out = vec![C64::new(0.0, 0.0); din];
        for k in 0..self.rank {
            let c = v.get(i, k);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (a, o) in out.iter_mut().enumerate() {
                *o += c * self.basis.get(a, k);
            }
        }
        out
    }

    /// Exact objective sum_i pi_i g(P_i) written in the unnormalized
    /// members: per map, H_sub(M(phi phi^dag)) + Tr[M(phi phi^dag)] log2 pi.
    fn value(&self, v: &Mat) -> f64 {
        let mut total = 0.0;
        for i in 0..self.members {
            let phi = self.phi(v, i);
            let pi: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
            if pi < 1e-300 {
                continue;
            }
            let log_pi = pi.log2();
            for (coeff, map) in self.maps {
                let y = map.apply_pure(&phi).hermitize();
                let h = crate::entropy::subnormalized_entropy_unchecked(&y);
                total += coeff * (h + y.trace_re() * log_pi);
            }
        }
        total
    }

    /// Euclidean gradient dF/d(conj V): G[i,k] = basis_k^dag (D_i phi_i).
    fn gradient(&self, v: &Mat) -> Mat {
        let din = self.basis.rows();
        let inv_ln2 = 1.0 / std::f64::consts::LN_2;
        let mut g = Mat::zeros(self.members, self.rank);
        for i in 0..self.members {
            let phi = self.phi(v, i);
            let pi: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
            if pi < 1e-300 {
                continue;
            }
            let log_pi = pi.log2();
            let mut y_vec = vec![C64::new(0.0, 0.0); din];
            let mut trace_sum = 0.0;
            for (coeff, map) in self.maps {
                let y = map.apply_pure(&phi).hermitize();
                trace_sum += coeff * y.trace_re();
                let log_y = hermitian_log2_clipped(&y, f64::SPECTRAL_FLOOR)
                    .expect("hermitized output stays diagonalizable");
                let pulled = map.adjoint_apply(&log_y);
                let mv = pulled.matvec(&phi);
                let idv = map.adjoint_identity_apply(&phi);
                for a in 0..din {
                    y_vec[a] += C64::new(*coeff, 0.0)
                        * (-mv[a] + idv[a] * C64::new(log_pi - inv_ln2, 0.0));
                }
            }
            let radial = trace_sum / pi * inv_ln2;
            for a in 0..din {
                y_vec[a] += phi[a] * C64::new(radial, 0.0);
            }
            for k in 0..self.rank {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..din {
                    acc += self.basis.get(a, k).conj() * y_vec[a];
                }
                g.set(i, k, acc);
            }
        }
        g
    }
}

fn herm_part(m: &Mat) -> Mat {
    m.add(&m.adjoint()).scale(0.5)
}

fn tangent(v: &Mat, g: &Mat) -> Mat {
    let vg = herm_part(&v.adjoint().matmul(g));
    g.sub(&v.matmul(&vg))
}

/// Thin QR by modified Gram-Schmidt on the columns; `None` when columns
/// collapse (the caller shrinks the step).
fn qf(m: &Mat) -> Option<Mat> {
    let rows = m.rows();
    let cols = m.cols();
    let mut q = m.clone();
    for j in 0..cols {
        for p in 0..j {
            let mut ip = C64::new(0.0, 0.0);
            for a in 0..rows {
                ip += q.get(a, p).conj() * q.get(a, j);
            }
            for a in 0..rows {
                let val = q.get(a, j) - ip * q.get(a, p);
                q.set(a, j, val);
            }
        }
        let norm: f64 = (0..rows).map(|a| q.get(a, j).norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-13 {
            return None;
        }
        for a in 0..rows {
            let val = q.get(a, j) / norm;
            q.set(a, j, val);
        }
    }
    Some(q)
}

fn identity_embedding(members: usize, rank: usize) -> Mat {
    Mat::from_fn(members, rank, |i, k| {
        if i == k {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn random_stiefel(members: usize, rank: usize, rng: &mut ChaCha12Rng) -> Mat {
    loop {
        let g = Mat::from_fn(members, rank, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        if let Some(q) = qf(&g) {
            return q;
        }
    }
}

fn descend(problem: &Problem, mut v: Mat, max_iterations: usize) -> (Mat, f64, usize, bool) {
    let mut value = problem.value(&v);
    let mut step = STEP_INIT;
    let mut stall = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    for iter in 0..max_iterations {
        iterations = iter + 1;
        let g = problem.gradient(&v);
        let gt = tangent(&v, &g);
        let gnorm = gt.frobenius_norm();
        if gnorm < 1e-9 * value.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut s = step;
        let mut accepted = false;
        for trial in 0..LINE_TRIALS {
            let mut candidate = v.clone();
            candidate.add_scaled(&gt, -s / gnorm);
            if let Some(vq) = qf(&candidate) {
                let val = problem.value(&vq);
                if val < value {
                    let gain = value - val;
                    v = vq;
                    value = val;
                    if trial == 0 {
                        step = (step * STEP_GROWTH).min(STEP_MAX);
                    } else {
                        step = s;
                    }
                    accepted = true;
                    if gain < STALL_IMPROVEMENT {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    break;
                }
            }
            s *= 0.5;
            if s < STEP_MIN {
                break;
            }
        }
        if !accepted {
            stall += 1;
            step = (step * 0.5).max(STEP_MIN);
        }
        if stall >= STALL_PATIENCE {
            converged = true;
            break;
        }
    }
    (v, value, iterations, converged)
}

/// Minimize sum_i pi_i sum_c coeff_c H_sub(M_c(P_i)) over decompositions
/// {pi_i, P_i} of `sigma`, with subnormalized entropies so maps need not
/// preserve trace. Restart 0 embeds the eigendecomposition; later
/// restarts draw Haar-like Stiefel points from `substream(cfg.seed,
/// stream_salt + r)`.
pub fn minimize_decomposition(
    maps: &[(f64, MapOp)],
    sigma: &DensityMatrix<f64>,
    cfg: &OptimizerConfig,
    stream_salt: u64,
) -> Result<RoofOutcome> {
    let din = sigma.dim();
    for (_, map) in maps {
        if map.din() != din {
            return Err(Error::dims("decomposition map input dim mismatch"));
        }
    }
    if maps.is_empty() {
        return Err(Error::invalid("decomposition needs at least one map"));
    }
    let decomp = eigh(sigma.matrix())?;
    let kept: Vec<usize> = (0..din)
        .filter(|&k| decomp.values[k] > RANK_FLOOR)
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid("state has no spectral weight"));
    }
    let rank = kept.len();
    let basis = Mat::from_fn(din, rank, |a, j| {
        let k = kept[j];
        decomp.vectors.get(a, k) * C64::new(decomp.values[k].sqrt(), 0.0)
    });
    let members = (din * din).max(rank);
    let problem = Problem { maps, basis, rank, members };

    let restarts = cfg.restarts.max(1);
    let mut best: Option<(Mat, f64)> = None;
    let mut total_iterations = 0usize;
    let mut any_converged = false;
    for r in 0..restarts {
        let v0 = if r == 0 {
            identity_embedding(members, rank)
        } else {
            let mut rng = substream(cfg.seed, stream_salt + r as u64);
            random_stiefel(members, rank, &mut rng)
        };
        let (v, value, iterations, converged) = descend(&problem, v0, cfg.max_iterations);
        total_iterations += iterations;
        any_converged |= converged;
        let better = match &best {
            None => true,
            Some((_, b)) => value < *b,
        };
        if better {
            best = Some((v, value));
        }
    }
    let (v, value) = best.expect("at least one restart");

    let mut weights = Vec::new();
    let mut out_members = Vec::new();
    for i in 0..members {
        let phi = problem.phi(&v, i);
        let pi: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
        if pi < tol::WEIGHT_PRUNE {
            continue;
        }
        let scale = 1.0 / pi.sqrt();
        weights.push(pi);
        out_members.push(phi.iter().map(|c| c * scale).collect());
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    Ok(RoofOutcome {
        value,
        weights,
        members: out_members,
        iterations: total_iterations,
        converged: any_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{h2, KrausChannel};
    use crate::random::{random_effect_with, random_state, rng_from_seed};
    use crate::state::HermitianOperator;

    fn cfg(restarts: usize, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts,
            seed,
            ..OptimizerConfig::default()
        }
    }

    fn x_dephasing() -> KrausChannel<f64> {
        let plus = vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        let minus = vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        let eff = |v: &Vec<C64>| HermitianOperator::new(Mat::outer(v, v)).unwrap();
        let st = |v: &Vec<C64>| DensityMatrix::pure(v).unwrap();
        KrausChannel::entanglement_breaking(
            vec![eff(&plus), eff(&minus)],
            vec![st(&plus), st(&minus)],
        )
        .unwrap()
    }

    #[test]
    fn pure_decomposition_of_mixed_state_reaches_zero() {
        // Noiseless channel: every pure-member decomposition scores 0.
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        let maps = vec![(1.0, MapOp::Kraus(ch))];
        let out = minimize_decomposition(&maps, &sigma, &cfg(1, 2), 0).unwrap();
        assert!(out.value.abs() < 1e-9, "value {}", out.value);
        let total: f64 = out.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_output_entropy_is_flat() {
        let ch = KrausChannel::<f64>::completely_depolarizing(2).unwrap();
        let sigma = random_state::<f64>(2, 2, 31).unwrap();
        let maps = vec![(1.0, MapOp::Kraus(ch))];
        let out = minimize_decomposition(&maps, &sigma, &cfg(2, 4), 0).unwrap();
        assert!((out.value - 1.0).abs() < 1e-9, "value {}", out.value);
    }

    #[test]
    fn saddle_start_escapes_via_restarts() {
        // Dephasing in the X basis: the computational-basis start of the
        // maximally mixed state is a flat point at 1 bit; the true roof
        // is 0, reached by the |+>,|-> split found from random starts.
        let sigma = DensityMatrix::maximally_mixed(2);
        let maps = vec![(1.0, MapOp::Kraus(x_dephasing()))];
        let out = minimize_decomposition(&maps, &sigma, &cfg(4, 5), 0).unwrap();
        assert!(out.value < 1e-6, "value {}", out.value);
    }

    #[test]
    fn depolarizing_roof_matches_closed_form() {
        let p = 0.35;
        let ch = KrausChannel::<f64>::depolarizing(p, 2).unwrap();
        let sigma = random_state::<f64>(2, 2, 17).unwrap();
        let maps = vec![(1.0, MapOp::Kraus(ch))];
        let out = minimize_decomposition(&maps, &sigma, &cfg(3, 6), 0).unwrap();
        // Every pure input has the same output spectrum {1-p/2, p/2}.
        let expected = h2(p / 2.0);
        assert!((out.value - expected).abs() < 1e-8, "value {}", out.value);
    }

    #[test]
    fn members_reassemble_the_state() {
        let sigma = random_state::<f64>(3, 3, 23).unwrap();
        let ch = KrausChannel::<f64>::depolarizing(0.5, 3).unwrap();
        let maps = vec![(1.0, MapOp::Kraus(ch))];
        let out = minimize_decomposition(&maps, &sigma, &cfg(2, 8), 0).unwrap();
        let mut acc = Mat::zeros(3, 3);
        for (w, m) in out.weights.iter().zip(&out.members) {
            acc.add_scaled(&Mat::outer(m, m), *w);
        }
        let dev = acc.sub(sigma.matrix()).frobenius_norm();
        assert!(dev < 1e-8, "reassembly deviation {}", dev);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        // Mixed component set including non-trace-preserving reduced
        // maps, checked at a random non-critical Stiefel point.
        let mut rng = rng_from_seed(0x5eed);
        let base = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let side = KrausChannel::<f64>::depolarizing(0.6, 2).unwrap();
        let joint = crate::channel::tensor_channels(&base, &side).unwrap();
        let effect = random_effect_with(2, &mut rng);
        let comp = effect.complement();
        let q = 0.2;
        let maps = vec![
            (1.0 - q, MapOp::Kraus(joint)),
            (
                q,
                MapOp::Reduced {
                    psi: side.clone(),
                    effect: effect.matrix().clone(),
                },
            ),
            (
                q,
                MapOp::Reduced {
                    psi: side,
                    effect: comp.matrix().clone(),
                },
            ),
        ];
        let sigma = random_state::<f64>(4, 3, 77).unwrap();
        let decomp = eigh(sigma.matrix()).unwrap();
        let kept: Vec<usize> = (0..4).filter(|&k| decomp.values[k] > RANK_FLOOR).collect();
        let rank = kept.len();
        let basis = Mat::from_fn(4, rank, |a, j| {
            let k = kept[j];
            decomp.vectors.get(a, k) * C64::new(decomp.values[k].sqrt(), 0.0)
        });
        let members = 5;
        let problem = Problem { maps: &maps, basis, rank, members };
        let v = random_stiefel(members, rank, &mut rng);
        let g = problem.gradient(&v);
        let h = 1e-6;
        for i in 0..members {
            for k in 0..rank {
                for (axis, expected) in [(0, 2.0 * g.get(i, k).re), (1, 2.0 * g.get(i, k).im)] {
                    let mut vp = v.clone();
                    let mut vm = v.clone();
                    let bump = if axis == 0 {
                        C64::new(h, 0.0)
                    } else {
                        C64::new(0.0, h)
                    };
                    vp.set(i, k, v.get(i, k) + bump);
                    vm.set(i, k, v.get(i, k) - bump);
                    let fd = (problem.value(&vp) - problem.value(&vm)) / (2.0 * h);
                    assert!(
                        (fd - expected).abs() < 1e-5 * expected.abs().max(1.0),
                        "entry ({i},{k}) axis {axis}: fd {fd} analytic {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let ch = KrausChannel::<f64>::noiseless(3).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        let maps = vec![(1.0, MapOp::Kraus(ch))];
        assert!(minimize_decomposition(&maps, &sigma, &cfg(1, 0), 0).is_err());
    }
}
