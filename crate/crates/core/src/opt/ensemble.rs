//! Ensemble ascent over pure-state members and mixing weights.
//!
//! The search variables are unnormalized weight coordinates `x` (mapped to
//! a simplex point by `w_i = x_i^2 / sum x^2`) and one unit vector per
//! member. Gradients come from central finite differences: weight probes
//! reuse the per-member cache wholesale, member probes recompute the cache
//! for the perturbed member only. Mix constraints are enforced after every
//! weight map by an exact projection onto a frozen anchor member, so each
//! probe evaluates a feasible configuration.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::opt::config::OptimizerConfig;
use crate::opt::objective::{
    member_data, project_mix, value_at, weights_from_coords, ConstraintRuntime, DataView,
    EnsembleObjective, MemberData, C64,
};
use crate::random::{random_unit_vector, substream};
use crate::tol;

/// Starting configuration handed to the first restarts, ahead of the
/// seeded random ones.
#[derive(Clone, Debug)]
pub struct AscentInit {
    pub weights: Vec<f64>,
    pub members: Vec<Vec<C64>>,
}

/// Best configuration found across all restarts, already projected,
/// pruned, and merged.
#[derive(Clone, Debug)]
pub struct AscentOutcome {
    /// Raw objective at the returned configuration (penalty excluded).
    pub value: f64,
    /// Residual marginal penalty at the returned configuration.
    pub penalty: f64,
    pub weights: Vec<f64>,
    pub members: Vec<Vec<C64>>,
    /// Total ascent iterations spent over all restarts.
    pub iterations: usize,
    /// True when some restart stalled out rather than hitting the
    /// iteration cap.
    pub converged: bool,
}

const STALL_IMPROVEMENT: f64 = 1e-11;
const STALL_PATIENCE: usize = 5;
const GRAD_STOP: f64 = 1e-9;
const LINE_TRIALS: usize = 24;
const STEP_INIT: f64 = 0.25;
const STEP_GROWTH: f64 = 1.5;
const STEP_MAX: f64 = 4.0;
const STEP_MIN: f64 = 1e-13;

struct Config<'a> {
    obj: &'a EnsembleObjective,
    runtime: &'a ConstraintRuntime,
    kappa: f64,
}

impl Config<'_> {
    fn eval(&self, x: &[f64], view: DataView) -> f64 {
        let mut w = weights_from_coords(x);
        project_mix(&mut w, view, self.runtime);
        let (j, pen) = value_at(self.obj, self.runtime, view, &w);
        j - self.kappa * pen
    }
}

struct RunState {
    x: Vec<f64>,
    members: Vec<Vec<C64>>,
    data: Vec<MemberData>,
    /// Anchor slots never move; their cache entries are computed once.
    frozen: Vec<bool>,
    score: f64,
    iterations: usize,
    converged: bool,
}

fn normalize(v: &mut [C64]) {
    let n: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

/// Run one restart to a stall or the iteration cap.
fn run_ascent(cfg: &Config, mut state: RunState, max_iterations: usize) -> RunState {
    let slots = state.x.len();
    let din = cfg.obj.din;
    let h = tol::FD_STEP;
    let mut step = STEP_INIT;
    let mut stall = 0usize;
    let mut score = cfg.eval(&state.x, DataView::plain(&state.data));

    for iter in 0..max_iterations {
        state.iterations = iter + 1;

        // Weight gradient: cache reassembly only.
        let mut gx = vec![0.0; slots];
        if slots > 1 {
            let mut xp = state.x.clone();
            for s in 0..slots {
                let orig = xp[s];
                xp[s] = orig + h;
                let up = cfg.eval(&xp, DataView::plain(&state.data));
                xp[s] = orig - h;
                let dn = cfg.eval(&xp, DataView::plain(&state.data));
                xp[s] = orig;
                gx[s] = (up - dn) / (2.0 * h);
            }
        }

        // Member gradient: one member recomputed per probe.
        let mut gm = vec![vec![0.0; 2 * din]; slots];
        for i in 0..slots {
            if state.frozen[i] {
                continue;
            }
            for c in 0..2 * din {
                let probe = |sign: f64| {
                    let mut v = state.members[i].clone();
                    let bump = if c % 2 == 0 {
                        C64::new(sign * h, 0.0)
                    } else {
                        C64::new(0.0, sign * h)
                    };
                    v[c / 2] += bump;
                    normalize(&mut v);
                    let alt = member_data(cfg.obj, cfg.runtime, &v);
                    cfg.eval(&state.x, DataView::with(&state.data, i, &alt))
                };
                gm[i][c] = (probe(1.0) - probe(-1.0)) / (2.0 * h);
            }
        }

        let gnorm = {
            let wsq: f64 = gx.iter().map(|g| g * g).sum();
            let msq: f64 = gm.iter().flatten().map(|g| g * g).sum();
            (wsq + msq).sqrt()
        };
        if gnorm < GRAD_STOP {
            state.converged = true;
            break;
        }

        // Backtracking line search along the normalized gradient with a
        // persistent step that adapts across iterations.
        let mut accepted = false;
        let mut s = step;
        for trial in 0..LINE_TRIALS {
            let mut x_new = state.x.clone();
            for (xs, g) in x_new.iter_mut().zip(&gx) {
                *xs += s * g / gnorm;
            }
            let mut members_new = state.members.clone();
            for i in 0..slots {
                if state.frozen[i] {
                    continue;
                }
                for c in 0..2 * din {
                    let bump = if c % 2 == 0 {
                        C64::new(s * gm[i][c] / gnorm, 0.0)
                    } else {
                        C64::new(0.0, s * gm[i][c] / gnorm)
                    };
                    members_new[i][c / 2] += bump;
                }
                normalize(&mut members_new[i]);
            }
            let mut data_new = state.data.clone();
            for i in 0..slots {
                if !state.frozen[i] {
                    data_new[i] = member_data(cfg.obj, cfg.runtime, &members_new[i]);
                }
            }
            let score_new = cfg.eval(&x_new, DataView::plain(&data_new));
            if score_new > score {
                let gain = score_new - score;
                state.x = x_new;
                state.members = members_new;
                state.data = data_new;
                score = score_new;
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
            state.converged = true;
            break;
        }
    }
    state.score = score;
    state
}

fn init_state(
    cfg: &Config,
    slots: usize,
    anchored: bool,
    warm: Option<&AscentInit>,
    rng: &mut ChaCha12Rng,
) -> RunState {
    let din = cfg.obj.din;
    let free = if anchored { slots - 1 } else { slots };
    let mut x = vec![0.0; slots];
    let mut members: Vec<Vec<C64>> = Vec::with_capacity(slots);
    match warm {
        Some(init) => {
            for i in 0..free {
                if i < init.members.len() {
                    let mut v = init.members[i].clone();
                    normalize(&mut v);
                    members.push(v);
                    x[i] = init.weights[i].max(0.0).sqrt();
                } else {
                    members.push(random_unit_vector(din, rng));
                    x[i] = 1e-2;
                }
            }
        }
        None => {
            for i in 0..free {
                members.push(random_unit_vector(din, rng));
                x[i] = 1.0 + 0.3 * (rng.gen::<f64>() - 0.5);
            }
        }
    }
    let mut frozen = vec![false; slots];
    if anchored {
        members.push(cfg.runtime.anchor.clone().expect("anchored run"));
        x[slots - 1] = 0.05;
        frozen[slots - 1] = true;
    }
    let data = members
        .iter()
        .map(|m| member_data(cfg.obj, cfg.runtime, m))
        .collect();
    RunState {
        x,
        members,
        data,
        frozen,
        score: f64::NEG_INFINITY,
        iterations: 0,
        converged: false,
    }
}

/// Prune negligible members, merge near-duplicates, then project and
/// re-evaluate so the reported value matches the returned ensemble.
fn finalize(cfg: &Config, state: &RunState, anchored: bool) -> AscentOutcome {
    let slots = state.x.len();
    let w_raw = weights_from_coords(&state.x);
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..slots {
        let is_anchor = anchored && i == slots - 1;
        if is_anchor || w_raw[i] >= tol::WEIGHT_PRUNE {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        keep.push(0);
    }

    let mut weights: Vec<f64> = keep.iter().map(|&i| w_raw[i]).collect();
    let mut members: Vec<Vec<C64>> = keep.iter().map(|&i| state.members[i].clone()).collect();
    let mut data: Vec<MemberData> = keep.iter().map(|&i| state.data[i].clone()).collect();

    // Merge members with near-unit overlap; the heavier vector survives.
    // The anchor slot (last, when present) absorbs duplicates but keeps
    // its own vector and position so projection stays exact.
    let overlap = |a: &[C64], b: &[C64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .norm_sqr()
    };
    let tail = usize::from(anchored);
    let mut i = 0;
    while i + tail < members.len() {
        let mut j = i + 1;
        while j + tail < members.len() {
            if overlap(&members[i], &members[j]) > 1.0 - tol::MERGE_FIDELITY {
                if weights[j] > weights[i] {
                    members.swap(i, j);
                    data.swap(i, j);
                }
                weights[i] += weights[j];
                members.remove(j);
                data.remove(j);
                weights.remove(j);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    if anchored {
        let mut i = 0;
        while i + 1 < members.len() {
            let last = members.len() - 1;
            if overlap(&members[i], &members[last]) > 1.0 - tol::MERGE_FIDELITY {
                let w = weights.remove(i);
                members.remove(i);
                data.remove(i);
                *weights.last_mut().unwrap() += w;
            } else {
                i += 1;
            }
        }
    }

    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    let view = DataView::plain(&data);
    project_mix(&mut weights, view, cfg.runtime);
    let (value, penalty) = value_at(cfg.obj, cfg.runtime, view, &weights);
    AscentOutcome {
        value,
        penalty,
        weights,
        members,
        iterations: state.iterations,
        converged: state.converged,
    }
}

/// Maximize the ensemble objective over `member_count` pure members plus
/// an anchor slot when the runtime carries mix constraints. Warm starts
/// occupy the first restarts; the rest draw from `substream(cfg.seed,
/// stream_salt + r)`.
pub fn ascend(
    obj: &EnsembleObjective,
    runtime: &ConstraintRuntime,
    member_count: usize,
    cfg: &OptimizerConfig,
    stream_salt: u64,
    warm: &[AscentInit],
) -> AscentOutcome {
    let anchored = runtime.anchor.is_some();
    let warm_max = warm.iter().map(|w| w.members.len()).max().unwrap_or(0);
    let free = member_count.max(warm_max).max(1);
    let slots = free + usize::from(anchored);
    let config = Config { obj, runtime, kappa: runtime.penalty_weight };

    let runs = warm.len() + cfg.restarts.max(1);
    let mut best: Option<RunState> = None;
    let mut total_iterations = 0usize;
    let mut any_converged = false;
    for r in 0..runs {
        let mut rng = substream(cfg.seed, stream_salt + r as u64);
        let init = warm.get(r);
        let state = init_state(&config, slots, anchored, init, &mut rng);
        let done = run_ascent(&config, state, cfg.max_iterations);
        total_iterations += done.iterations;
        any_converged |= done.converged;
        let better = match &best {
            None => true,
            Some(b) => done.score > b.score,
        };
        if better {
            best = Some(done);
        }
    }
    let mut best = best.expect("at least one restart");
    best.iterations = total_iterations;
    best.converged = any_converged;
    finalize(&config, &best, anchored)
}
