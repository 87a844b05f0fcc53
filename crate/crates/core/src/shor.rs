//! Hybrid channel extension: indexed inputs, the two-branch output map,
//! reduced (trace-nonincreasing) maps, the f-functional, and the dual-path
//! chi evaluation for extended channels tensored with a side channel.

use crate::channel::{chi_of_ensemble, tensor_channels, KrausChannel};
use crate::entropy::{block_entropy, subnormalized_entropy};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::{log_base, Scalar};
use crate::state::{BlockState, DensityMatrix, Ensemble, HermitianOperator};
use crate::tol;
use num_complex::Complex;

/// Array of positive operators with unit total trace; slot j carries the
/// classical index alongside the quantum part. Slots are numbered 1..=d.
#[derive(Clone, Debug)]
pub struct IndexedState<F: Scalar> {
    parts: Vec<ComplexMatrix<F>>,
}

impl<F: Scalar> IndexedState<F> {
    /// Validating constructor: parts share one dimension, each is PSD
    /// within tolerance (zero parts allowed), traces sum to 1.
    pub fn new(parts: Vec<ComplexMatrix<F>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("indexed state needs at least one slot"));
        }
        let dim = parts[0].rows();
        let mut total = F::zero();
        for p in &parts {
            p.check_finite()?;
            if !p.is_square() || p.rows() != dim {
                return Err(Error::dims("indexed-state parts must share one dimension"));
            }
            let scale = F::one().max(p.max_abs());
            if p.hermiticity_residual() > F::TOL_ALGEBRA * scale {
                return Err(Error::invalid("indexed-state part is not Hermitian"));
            }
            let vals = crate::eig::eigvalsh(&p.hermitize())?;
            if vals.iter().any(|&l| l < -F::TOL_STATE) {
                return Err(Error::invalid("indexed-state part has a negative eigenvalue"));
            }
            total += p.trace_re();
        }
        if (total - F::one()).abs() > F::TOL_STATE {
            return Err(Error::invalid(format!("indexed-state total trace {}", total)));
        }
        Ok(IndexedState { parts })
    }

    pub(crate) fn from_valid(parts: Vec<ComplexMatrix<F>>) -> Self {
        IndexedState { parts }
    }

    pub fn index_count(&self) -> usize {
        self.parts.len()
    }
    pub fn part_dim(&self) -> usize {
        self.parts[0].rows()
    }
    pub fn parts(&self) -> &[ComplexMatrix<F>] {
        &self.parts
    }

    /// Sum of the parts: the state obtained by forgetting the index.
    pub fn total(&self) -> ComplexMatrix<F> {
        let dim = self.part_dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for p in &self.parts {
            acc = acc.add(p);
        }
        acc
    }
}

/// Place sigma at slot j (1-based) of a d-slot array, zeros elsewhere.
pub fn delta_embed<F: Scalar>(
    sigma: &DensityMatrix<F>,
    j: usize,
    d: usize,
) -> Result<IndexedState<F>> {
    if j < 1 || j > d {
        return Err(Error::invalid(format!("slot {} outside 1..={}", j, d)));
    }
    let dim = sigma.dim();
    let parts = (1..=d)
        .map(|s| {
            if s == j {
                sigma.matrix().clone()
            } else {
                ComplexMatrix::zeros(dim, dim)
            }
        })
        .collect();
    Ok(IndexedState::from_valid(parts))
}

/// The extension built from a base channel, an effect on its input space,
/// a branch probability q, and an index count d: with probability 1-q the
/// forgotten-index state goes through the base channel; with probability q
/// the output is the classical record [Tr rho Ecomp, Tr rho_1 E, ...,
/// Tr rho_d E].
#[derive(Clone, Debug)]
pub struct ShorExtension<F: Scalar> {
    base: KrausChannel<F>,
    effect: HermitianOperator<F>,
    q: F,
    d: usize,
}

impl<F: Scalar> ShorExtension<F> {
    pub fn new(
        base: KrausChannel<F>,
        effect: HermitianOperator<F>,
        q: F,
        d: usize,
    ) -> Result<Self> {
        if effect.dim() != base.din() {
            return Err(Error::dims("effect must act on the base channel's input"));
        }
        if !effect.is_effect() {
            return Err(Error::invalid("extension effect must satisfy 0 <= E <= I"));
        }
        if q < F::zero() || q > F::one() {
            return Err(Error::invalid("branch probability must lie in [0, 1]"));
        }
        if d < 1 {
            return Err(Error::invalid("index count must be >= 1"));
        }
        Ok(ShorExtension { base, effect, q, d })
    }

    pub fn base(&self) -> &KrausChannel<F> {
        &self.base
    }
    pub fn effect(&self) -> &HermitianOperator<F> {
        &self.effect
    }
    pub fn q(&self) -> F {
        self.q
    }
    pub fn index_count(&self) -> usize {
        self.d
    }

    /// Complement effect I - E, computed on demand.
    pub fn effect_complement(&self) -> HermitianOperator<F> {
        self.effect.complement()
    }

    /// Apply to an indexed input: block 0 is (1-q) Phi(rho) with
    /// rho = sum_j rho_j; block 1 is the q-weighted classical diagonal
    /// [Tr rho Ecomp, Tr rho_1 E, ..., Tr rho_d E].
    pub fn apply_extension(&self, input: &IndexedState<F>) -> Result<BlockState<F>> {
        if input.index_count() != self.d {
            return Err(Error::dims("indexed input slot count does not match extension"));
        }
        if input.part_dim() != self.base.din() {
            return Err(Error::dims("indexed input parts must live on the base input space"));
        }
        let rho = input.total();
        let block0 = self.base.apply_op(&rho).scale(F::one() - self.q);

        let e = self.effect.matrix();
        let mut diag = ComplexMatrix::zeros(self.d + 1, self.d + 1);
        let tr_e_rho = rho.trace_product_re(e);
        // Tr rho Ecomp = Tr rho - Tr rho E, clamped against roundoff.
        let comp = (rho.trace_re() - tr_e_rho).max(F::zero());
        diag.set(0, 0, Complex::new(self.q * comp, F::zero()));
        for (j, part) in input.parts().iter().enumerate() {
            let w = part.trace_product_re(e).max(F::zero());
            diag.set(j + 1, j + 1, Complex::new(self.q * w, F::zero()));
        }
        BlockState::new(vec![block0, diag])
    }

    /// Apply the extension tensored with a side channel psi to an indexed
    /// state whose parts live on (base input) x (psi input). Block 0 is
    /// (1-q)(Phi x Psi)(sigma); then q R_Ecomp(sigma), q R_E(sigma_1), ...,
    /// q R_E(sigma_d) with sigma = sum_j sigma_j.
    pub fn apply_extension_tensor(
        &self,
        psi: &KrausChannel<F>,
        input: &IndexedState<F>,
    ) -> Result<BlockState<F>> {
        let phi_psi = tensor_channels(&self.base, psi)?;
        self.apply_extension_tensor_with(&phi_psi, psi, input)
    }

    fn apply_extension_tensor_with(
        &self,
        phi_psi: &KrausChannel<F>,
        psi: &KrausChannel<F>,
        input: &IndexedState<F>,
    ) -> Result<BlockState<F>> {
        if input.index_count() != self.d {
            return Err(Error::dims("indexed input slot count does not match extension"));
        }
        let dh = self.base.din();
        let dk = psi.din();
        if input.part_dim() != dh * dk {
            return Err(Error::dims("indexed input parts must live on the joint input space"));
        }
        let sigma = input.total();
        let mut blocks = Vec::with_capacity(self.d + 2);
        blocks.push(phi_psi.apply_op(&sigma).scale(F::one() - self.q));

        let e = self.effect.matrix();
        let ecomp = self.effect.complement();
        blocks.push(reduced_apply_op(psi, ecomp.matrix(), &sigma)?.scale(self.q));
        for part in input.parts() {
            blocks.push(reduced_apply_op(psi, e, part)?.scale(self.q));
        }
        BlockState::new(blocks)
    }
}

/// Reduced map R_A(sigma) = Tr_H (A x I)(Id x Psi)(sigma): completely
/// positive and trace-nonincreasing for an effect A. Since A acts on the
/// traced factor, this equals Psi(Tr_H[(A x I) sigma]), and the inner
/// contraction T_{k,k'} = sum_{m,m'} A_{m',m} sigma_{(m k),(m' k')} is
/// formed directly without building A x I.
pub fn reduced_apply_op<F: Scalar>(
    psi: &KrausChannel<F>,
    a: &ComplexMatrix<F>,
    sigma: &ComplexMatrix<F>,
) -> Result<ComplexMatrix<F>> {
    let dh = a.rows();
    let dk = psi.din();
    if !a.is_square() || !sigma.is_square() || sigma.rows() != dh * dk {
        return Err(Error::dims(format!(
            "reduced map needs sigma of dim {} x {}, got {}",
            dh,
            dk,
            sigma.rows()
        )));
    }
    let mut t = ComplexMatrix::zeros(dk, dk);
    for m in 0..dh {
        for mp in 0..dh {
            let w = a.get(mp, m);
            if w.norm_sqr() == F::zero() {
                continue;
            }
            for k in 0..dk {
                for kp in 0..dk {
                    let v = t.get(k, kp) + w * sigma.get(m * dk + k, mp * dk + kp);
                    t.set(k, kp, v);
                }
            }
        }
    }
    Ok(psi.apply_op(&t))
}

/// Validated reduced map for effects on density matrices. Checks the trace
/// identity Tr R_A(sigma) = Tr sigma (A x I).
pub fn reduced_map<F: Scalar>(
    psi: &KrausChannel<F>,
    a: &HermitianOperator<F>,
    sigma: &DensityMatrix<F>,
) -> Result<ComplexMatrix<F>> {
    if !a.is_effect() {
        return Err(Error::invalid("reduced map requires an effect 0 <= A <= I"));
    }
    let dk = psi.din();
    let out = reduced_apply_op(psi, a.matrix(), sigma.matrix())?;
    let expected = trace_with_left_operator(a.matrix(), sigma.matrix(), dk)?;
    if (out.trace_re() - expected).abs() > F::TOL_STATE {
        return Err(Error::Inconsistency(format!(
            "reduced-map trace {} vs Tr sigma (A x I) = {}",
            out.trace_re(),
            expected
        )));
    }
    Ok(out)
}

/// Re Tr sigma (A x I) for sigma on H x K, A on H, without forming A x I.
pub fn trace_with_left_operator<F: Scalar>(
    a: &ComplexMatrix<F>,
    sigma: &ComplexMatrix<F>,
    dk: usize,
) -> Result<F> {
    let dh = a.rows();
    if sigma.rows() != dh * dk {
        return Err(Error::dims("operator/state dims do not factor"));
    }
    let mut acc = Complex::new(F::zero(), F::zero());
    for m in 0..dh {
        for mp in 0..dh {
            let w = a.get(mp, m);
            if w.norm_sqr() == F::zero() {
                continue;
            }
            let mut diag = Complex::new(F::zero(), F::zero());
            for k in 0..dk {
                diag += sigma.get(m * dk + k, mp * dk + k);
            }
            acc += w * diag;
        }
    }
    Ok(acc.re)
}

/// chi of the trace-nonincreasing reduced map R_A over an ensemble,
/// using entropies of subnormalized outputs.
pub fn chi_reduced<F: Scalar>(
    psi: &KrausChannel<F>,
    a: &ComplexMatrix<F>,
    e: &Ensemble<F>,
) -> Result<F> {
    let avg = reduced_apply_op(psi, a, e.average_state().matrix())?;
    let mut chi = subnormalized_entropy(&avg.hermitize())?;
    for (w, s) in e.weights().iter().zip(e.states()) {
        let out = reduced_apply_op(psi, a, s.matrix())?;
        chi -= *w * subnormalized_entropy(&out.hermitize())?;
    }
    Ok(chi)
}

/// f-functional: chi of the E-reduced map plus chi of the complement-reduced
/// map, over one ensemble on the joint input space. Lies in
/// [0, log2(dim K') + 1].
pub fn f_functional<F: Scalar>(
    psi: &KrausChannel<F>,
    effect: &HermitianOperator<F>,
    e: &Ensemble<F>,
) -> Result<F> {
    if e.dim() != effect.dim() * psi.din() {
        return Err(Error::dims("ensemble does not live on (effect dim) x (psi input)"));
    }
    let chi_e = chi_reduced(psi, effect.matrix(), e)?;
    let chi_comp = chi_reduced(psi, effect.complement().matrix(), e)?;
    Ok(chi_e + chi_comp)
}

/// Upper bound log2(dim K') + 1 for the f-functional of a given side channel.
pub fn f_functional_bound<F: Scalar>(psi: &KrausChannel<F>) -> F {
    log_base(F::from_f64_c(psi.dout() as f64)) + F::one()
}

/// Both evaluations of chi for the extended channel tensored with psi over
/// the index-symmetrized embedding of an ensemble on the joint input space.
#[derive(Clone, Copy, Debug)]
pub struct ExtensionChi<F> {
    /// (1-q) chi_{Phi x Psi} + q log2(d) Tr sigma_av (E x I) + q f.
    pub closed_form: F,
    /// Block-entropy evaluation over all d n embedded members.
    pub direct: F,
}

/// Evaluate chi of (extension x psi) over the embedded ensemble
/// {mu_i/d, delta_j(sigma_i)} both ways and cross-check. The two paths must
/// agree within the dual-path tolerance; tests pin agreement to 1e-9.
pub fn chi_extension_ensemble<F: Scalar>(
    x: &ShorExtension<F>,
    psi: &KrausChannel<F>,
    e: &Ensemble<F>,
) -> Result<ExtensionChi<F>> {
    let dh = x.base().din();
    let dk = psi.din();
    if e.dim() != dh * dk {
        return Err(Error::dims("ensemble does not live on the joint input space"));
    }
    let d = x.index_count();
    let d_f = F::from_f64_c(d as f64);
    let q = x.q();

    let phi_psi = tensor_channels(x.base(), psi)?;
    let chi_tensor = chi_of_ensemble(&phi_psi, e)?;
    let avg = e.average_state();
    let tr_e = trace_with_left_operator(x.effect().matrix(), avg.matrix(), dk)?;
    let f = f_functional(psi, x.effect(), e)?;
    let closed_form = (F::one() - q) * chi_tensor + q * log_base(d_f) * tr_e + q * f;

    // Direct path: average array has sigma_av/d in every slot; members are
    // delta_j(sigma_i) with weight mu_i/d.
    let avg_slot = avg.matrix().scale(F::one() / d_f);
    let avg_array = IndexedState::from_valid(vec![avg_slot; d]);
    let mut direct = block_entropy(&x.apply_extension_tensor_with(&phi_psi, psi, &avg_array)?);
    for (w, s) in e.weights().iter().zip(e.states()) {
        for j in 1..=d {
            let member = delta_embed(s, j, d)?;
            let out = x.apply_extension_tensor_with(&phi_psi, psi, &member)?;
            direct -= *w / d_f * block_entropy(&out);
        }
    }

    if (closed_form - direct).abs() > F::from_f64_c(tol::TOL_DUAL_PATH) {
        return Err(Error::Inconsistency(format!(
            "extension chi closed form {} vs direct {}",
            closed_form, direct
        )));
    }
    Ok(ExtensionChi { closed_form, direct })
}
