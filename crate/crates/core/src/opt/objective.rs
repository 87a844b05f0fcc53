//! Ensemble objective shared by the solvers.
//!
//! Every quantity this library maximizes over ensembles fits one shape:
//!
//!   J = sum_c [ a_c H(M_c(rho_av)) - b_c sum_i pi_i H(M_c(rho_i)) ]
//!       + Re Tr(L rho_av)
//!
//! with completely positive maps M_c (trace-preserving channels or reduced
//! trace-nonincreasing maps), coefficients a_c, b_c, and an optional
//! Hermitian linear term L. chi itself is one component with a = b = 1;
//! direct-sum channels flatten into several weighted components; the
//! extension's closed form adds reduced-map components and a linear term;
//! relative-entropy certificate searches use a = 0, b = 1 with
//! L = -M^dagger(log2 S).

use crate::bipartite::{kron, partial_trace_op, Keep};
use crate::channel::KrausChannel;
use crate::entropy::subnormalized_entropy_unchecked;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::C;
use crate::shor::reduced_apply_op;
use crate::state::Ensemble;

pub type C64 = C<f64>;
pub type Mat = ComplexMatrix<f64>;

/// A completely positive map usable as an objective component.
#[derive(Clone, Debug)]
pub enum MapOp {
    Kraus(KrausChannel<f64>),
    /// Reduced map sigma -> Psi(Tr_H[(A x I) sigma]) on H x K inputs.
    Reduced { psi: KrausChannel<f64>, effect: Mat },
}

impl MapOp {
    pub fn din(&self) -> usize {
        match self {
            MapOp::Kraus(c) => c.din(),
            MapOp::Reduced { psi, effect } => effect.rows() * psi.din(),
        }
    }

    pub fn dout(&self) -> usize {
        match self {
            MapOp::Kraus(c) => c.dout(),
            MapOp::Reduced { psi, .. } => psi.dout(),
        }
    }

    pub fn apply(&self, m: &Mat) -> Mat {
        match self {
            MapOp::Kraus(c) => c.apply_op(m),
            MapOp::Reduced { psi, effect } => {
                reduced_apply_op(psi, effect, m).expect("dims checked at build")
            }
        }
    }

    pub fn apply_pure(&self, v: &[C64]) -> Mat {
        match self {
            MapOp::Kraus(c) => c.apply_pure(v),
            MapOp::Reduced { .. } => self.apply(&Mat::outer(v, v)),
        }
    }

    /// Heisenberg-picture action on an output-side observable. For the
    /// reduced form the adjoint of sigma -> Psi(Tr_H[(A (x) I) sigma])
    /// is X -> A (x) Psi^dag(X).
    pub fn adjoint_apply(&self, x: &Mat) -> Mat {
        match self {
            MapOp::Kraus(c) => c.adjoint_apply_op(x),
            MapOp::Reduced { psi, effect } => kron(effect, &psi.adjoint_apply_op(x)),
        }
    }

    /// Applies the adjoint of the map at the identity observable to a
    /// vector. Kraus completeness makes this the identity; the reduced
    /// form gives (A (x) I) v.
    pub fn adjoint_identity_apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            MapOp::Kraus(_) => v.to_vec(),
            MapOp::Reduced { psi, effect } => {
                let dh = effect.rows();
                let dk = psi.din();
                let mut out = vec![C64::new(0.0, 0.0); v.len()];
                for m in 0..dh {
                    for k in 0..dk {
                        let mut acc = C64::new(0.0, 0.0);
                        for mp in 0..dh {
                            acc += effect.get(m, mp) * v[mp * dk + k];
                        }
                        out[m * dk + k] = acc;
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Component {
    pub map: MapOp,
    pub avg_coeff: f64,
    pub mem_coeff: f64,
}

#[derive(Clone, Debug)]
pub struct EnsembleObjective {
    pub din: usize,
    pub components: Vec<Component>,
    pub linear: Option<Mat>,
}

impl EnsembleObjective {
    pub fn new(din: usize, components: Vec<Component>, linear: Option<Mat>) -> Result<Self> {
        if components.is_empty() && linear.is_none() {
            return Err(Error::invalid("objective needs a component or a linear term"));
        }
        for c in &components {
            if c.map.din() != din {
                return Err(Error::dims("objective component input dim mismatch"));
            }
        }
        if let Some(l) = &linear {
            if !l.is_square() || l.rows() != din {
                return Err(Error::dims("objective linear term dim mismatch"));
            }
        }
        Ok(EnsembleObjective { din, components, linear })
    }

    /// chi objective of a plain channel.
    pub fn chi(channel: &KrausChannel<f64>) -> Self {
        EnsembleObjective {
            din: channel.din(),
            components: vec![Component {
                map: MapOp::Kraus(channel.clone()),
                avg_coeff: 1.0,
                mem_coeff: 1.0,
            }],
            linear: None,
        }
    }

    /// chi objective of a direct-sum channel: the weighted component form
    /// (the classical-label entropy cancels inside chi, so this flattening
    /// is exact).
    pub fn chi_block(block: &crate::channel::BlockChannel<f64>) -> Self {
        let components = block
            .components()
            .iter()
            .filter(|(q, _)| *q > 0.0)
            .map(|(q, c)| Component {
                map: MapOp::Kraus(c.clone()),
                avg_coeff: *q,
                mem_coeff: *q,
            })
            .collect();
        EnsembleObjective { din: block.din(), components, linear: None }
    }

    /// Evaluate on an explicit ensemble (reference path used to cross-check
    /// solver bookkeeping; no caching).
    pub fn value_of_ensemble(&self, e: &Ensemble<f64>) -> Result<f64> {
        if e.dim() != self.din {
            return Err(Error::dims("ensemble dim does not match objective"));
        }
        let avg = e.average_state().matrix().clone();
        let mut j = 0.0;
        for c in &self.components {
            if c.avg_coeff != 0.0 {
                j += c.avg_coeff * subnormalized_entropy_unchecked(&c.map.apply(&avg).hermitize());
            }
            if c.mem_coeff != 0.0 {
                for (w, s) in e.weights().iter().zip(e.states()) {
                    j -= c.mem_coeff
                        * w
                        * subnormalized_entropy_unchecked(&c.map.apply(s.matrix()).hermitize());
                }
            }
        }
        if let Some(l) = &self.linear {
            j += avg.trace_product_re(l);
        }
        Ok(j)
    }
}

/// Linear constraint handled by mixing weight toward an anchor member.
#[derive(Clone, Debug)]
pub struct MixOp {
    pub op: Mat,
    pub alpha: f64,
}

/// Marginal pinned to a target by quadratic penalty during the ascent
/// (exact feasibility is restored by repair afterwards).
#[derive(Clone, Debug)]
pub struct MarginalTarget {
    pub keep: Keep,
    pub dims: (usize, usize),
    pub target: Mat,
}

/// Constraint machinery the ascent engine threads through every
/// evaluation. `anchor` is required when `mix_ops` is nonempty: a pure
/// state strictly satisfying every mix constraint, held in a dedicated
/// direction-frozen slot whose weight absorbs the feasibility projection.
#[derive(Clone, Debug, Default)]
pub struct ConstraintRuntime {
    pub mix_ops: Vec<MixOp>,
    pub anchor: Option<Vec<C64>>,
    pub penalties: Vec<MarginalTarget>,
    pub penalty_weight: f64,
}

impl ConstraintRuntime {
    pub fn free() -> Self {
        ConstraintRuntime::default()
    }

    pub fn is_free(&self) -> bool {
        self.mix_ops.is_empty() && self.penalties.is_empty()
    }
}

/// Cached per-member quantities: outputs and entropies per component,
/// linear and mix expectations, penalty marginals. Rebuilt only for
/// members that moved.
#[derive(Clone, Debug)]
pub struct MemberData {
    pub outs: Vec<Mat>,
    pub h: Vec<f64>,
    pub lin: f64,
    pub mix: Vec<f64>,
    pub marg: Vec<Mat>,
}

pub fn member_data(
    obj: &EnsembleObjective,
    runtime: &ConstraintRuntime,
    phi: &[C64],
) -> MemberData {
    let needs_p = obj.linear.is_some()
        || !runtime.mix_ops.is_empty()
        || !runtime.penalties.is_empty();
    let p = if needs_p { Some(Mat::outer(phi, phi)) } else { None };

    let mut outs = Vec::with_capacity(obj.components.len());
    let mut h = Vec::with_capacity(obj.components.len());
    for c in &obj.components {
        let out = c.map.apply_pure(phi).hermitize();
        h.push(subnormalized_entropy_unchecked(&out));
        outs.push(out);
    }
    let p_ref = p.as_ref();
    let lin = match (&obj.linear, p_ref) {
        (Some(l), Some(p)) => p.trace_product_re(l),
        _ => 0.0,
    };
    let mix = runtime
        .mix_ops
        .iter()
        .map(|m| p_ref.map(|p| p.trace_product_re(&m.op)).unwrap_or(0.0))
        .collect();
    let marg = runtime
        .penalties
        .iter()
        .map(|t| {
            partial_trace_op(p_ref.expect("penalty needs member matrix"), t.dims, t.keep)
                .expect("dims checked at build")
        })
        .collect();
    MemberData { outs, h, lin, mix, marg }
}

/// Weights from unconstrained square-parametrized coordinates.
pub fn weights_from_coords(x: &[f64]) -> Vec<f64> {
    let sum: f64 = x.iter().map(|v| v * v).sum();
    if sum <= 0.0 {
        return vec![1.0 / x.len() as f64; x.len()];
    }
    x.iter().map(|v| v * v / sum).collect()
}

/// View over the member cache with at most one member's data swapped out,
/// so finite-difference probes of a single member reuse everything else.
#[derive(Clone, Copy)]
pub struct DataView<'a> {
    data: &'a [MemberData],
    replace: Option<(usize, &'a MemberData)>,
}

impl<'a> DataView<'a> {
    pub fn plain(data: &'a [MemberData]) -> Self {
        DataView { data, replace: None }
    }

    pub fn with(data: &'a [MemberData], index: usize, alt: &'a MemberData) -> Self {
        DataView { data, replace: Some((index, alt)) }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn at(&self, i: usize) -> &'a MemberData {
        match self.replace {
            Some((idx, alt)) if idx == i => alt,
            _ => &self.data[i],
        }
    }
}

/// Restore mix-constraint feasibility by moving weight onto the anchor
/// slot (the last member). Exact: the projected average satisfies every
/// active constraint with equality.
pub fn project_mix(w: &mut [f64], view: DataView, runtime: &ConstraintRuntime) {
    if runtime.mix_ops.is_empty() {
        return;
    }
    let last = w.len() - 1;
    let mut t_need: f64 = 0.0;
    for (k, op) in runtime.mix_ops.iter().enumerate() {
        let e: f64 = w.iter().enumerate().map(|(i, wi)| wi * view.at(i).mix[k]).sum();
        if e > op.alpha {
            let a = view.at(last).mix[k];
            let denom = e - a;
            let t = if denom <= 1e-15 { 1.0 } else { (e - op.alpha) / denom };
            t_need = t_need.max(t);
        }
    }
    let t = t_need.min(1.0);
    if t > 0.0 {
        for wi in w.iter_mut() {
            *wi *= 1.0 - t;
        }
        w[last] += t;
    }
}

/// Objective value from cached member data at given (already projected)
/// weights. Returns (raw objective, penalty residual); the engine ascends
/// raw - penalty_weight * penalty.
pub fn value_at(
    obj: &EnsembleObjective,
    runtime: &ConstraintRuntime,
    view: DataView,
    w: &[f64],
) -> (f64, f64) {
    let mut j = 0.0;
    for (c_idx, c) in obj.components.iter().enumerate() {
        if c.avg_coeff != 0.0 {
            let dout = c.map.dout();
            let mut t = Mat::zeros(dout, dout);
            for (i, wi) in w.iter().enumerate() {
                if *wi > 0.0 {
                    t.add_scaled(&view.at(i).outs[c_idx], *wi);
                }
            }
            j += c.avg_coeff * subnormalized_entropy_unchecked(&t.hermitize());
        }
        if c.mem_coeff != 0.0 {
            let avg_h: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| wi * view.at(i).h[c_idx])
                .sum();
            j -= c.mem_coeff * avg_h;
        }
    }
    if obj.linear.is_some() {
        j += w
            .iter()
            .enumerate()
            .map(|(i, wi)| wi * view.at(i).lin)
            .sum::<f64>();
    }
    let mut pen = 0.0;
    for (t_idx, target) in runtime.penalties.iter().enumerate() {
        let dim = target.target.rows();
        let mut m = Mat::zeros(dim, dim);
        for (i, wi) in w.iter().enumerate() {
            if *wi > 0.0 {
                m.add_scaled(&view.at(i).marg[t_idx], *wi);
            }
        }
        let dev = m.sub(&target.target).frobenius_norm();
        pen += dev * dev;
    }
    (j, pen)
}
