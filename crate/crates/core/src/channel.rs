//! Channels in Kraus form, direct-sum (block) channels, tensor composition,
//! and chi of an ensemble under both.

use crate::entropy::{binary_entropy, block_entropy, entropy};
use crate::eig::eigh;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::random::{random_state_with, rng_from_seed};
use crate::scalar::{Scalar, C};
use crate::state::{BlockState, DensityMatrix, Ensemble, HermitianOperator};
use crate::tol;
use num_complex::Complex;

/// Structural description of how the channel was built; drives reporting
/// and the structure-aware additivity suites (entanglement-breaking
/// channels keep their measure-and-prepare data).
#[derive(Clone, Debug)]
pub enum ChannelFamily<F: Scalar> {
    Noiseless,
    Trivial,
    Depolarizing { p: F },
    CompletelyDepolarizing,
    MeasurePrepare {
        effects: Vec<HermitianOperator<F>>,
        outputs: Vec<DensityMatrix<F>>,
    },
    General,
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel<F: Scalar> {
    din: usize,
    dout: usize,
    kraus: Vec<ComplexMatrix<F>>,
    family: ChannelFamily<F>,
}

/// Completeness / rank / dimension report from [`KrausChannel::validate`].
#[derive(Clone, Debug)]
pub struct ChannelDiagnostics<F: Scalar> {
    pub din: usize,
    pub dout: usize,
    pub completeness_residual: F,
    pub kraus_rank: usize,
}

impl<F: Scalar> KrausChannel<F> {
    /// Validating constructor: all operators dout x din, completeness
    /// sum K^dagger K = I within tolerance.
    pub fn new(kraus: Vec<ComplexMatrix<F>>, family: ChannelFamily<F>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::invalid("channel needs at least one Kraus operator"));
        }
        let dout = kraus[0].rows();
        let din = kraus[0].cols();
        for k in &kraus {
            k.check_finite()?;
            if k.rows() != dout || k.cols() != din {
                return Err(Error::dims("Kraus operators must share one shape"));
            }
        }
        let ch = KrausChannel { din, dout, kraus, family };
        let resid = ch.completeness_residual();
        if resid > F::TOL_STATE {
            return Err(Error::invalid(format!(
                "Kraus completeness residual {:e} exceeds tolerance",
                resid
            )));
        }
        Ok(ch)
    }

    pub fn din(&self) -> usize {
        self.din
    }
    pub fn dout(&self) -> usize {
        self.dout
    }
    pub fn kraus_ops(&self) -> &[ComplexMatrix<F>] {
        &self.kraus
    }
    pub fn family(&self) -> &ChannelFamily<F> {
        &self.family
    }

    pub fn is_entanglement_breaking_form(&self) -> bool {
        matches!(self.family, ChannelFamily::MeasurePrepare { .. })
    }

    pub fn completeness_residual(&self) -> F {
        let mut sum = ComplexMatrix::zeros(self.din, self.din);
        for k in &self.kraus {
            sum = sum.add(&k.adjoint().matmul(k));
        }
        sum.sub(&ComplexMatrix::identity(self.din)).max_abs()
    }

    /// Identity channel on d >= 2 levels.
    pub fn noiseless(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("noiseless channel needs dimension >= 2"));
        }
        KrausChannel::new(vec![ComplexMatrix::identity(d)], ChannelFamily::Noiseless)
    }

    /// The 1-dimensional identity: the "no second factor" channel used when
    /// tensoring with nothing. Kept separate from `noiseless`, whose
    /// contract starts at d = 2.
    pub fn trivial() -> Self {
        KrausChannel {
            din: 1,
            dout: 1,
            kraus: vec![ComplexMatrix::identity(1)],
            family: ChannelFamily::Trivial,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.family, ChannelFamily::Trivial)
    }

    /// Depolarizing channel rho -> (1-p) rho + p I/d, via the discrete
    /// Weyl twirl: K_0 = sqrt(1 - p + p/d^2) I and sqrt(p/d^2) X^a Z^b for
    /// (a, b) != (0, 0).
    pub fn depolarizing(p: F, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("depolarizing channel needs dimension >= 2"));
        }
        if p < F::zero() || p > F::one() {
            return Err(Error::invalid("depolarizing parameter must lie in [0, 1]"));
        }
        let d_f = F::from_f64_c(d as f64);
        let w = p / (d_f * d_f);
        let mut kraus = Vec::with_capacity(d * d);
        kraus.push(ComplexMatrix::identity(d).scale((F::one() - p + w).sqrt()));
        let sqrt_w = w.sqrt();
        for a in 0..d {
            for b in 0..d {
                if a == 0 && b == 0 {
                    continue;
                }
                // (X^a Z^b)|j> = omega^{bj} |j + a mod d>
                let mut m = ComplexMatrix::zeros(d, d);
                for j in 0..d {
                    let angle = std::f64::consts::TAU * (b * j) as f64 / d as f64;
                    let phase = Complex::new(
                        F::from_f64_c(angle.cos()),
                        F::from_f64_c(angle.sin()),
                    );
                    m.set((j + a) % d, j, phase * sqrt_w);
                }
                kraus.push(m);
            }
        }
        let fam = ChannelFamily::Depolarizing { p };
        KrausChannel::new(kraus, fam)
    }

    pub fn completely_depolarizing(d: usize) -> Result<Self> {
        let mut ch = Self::depolarizing(F::one(), d)?;
        ch.family = ChannelFamily::CompletelyDepolarizing;
        Ok(ch)
    }

    /// Measure-and-prepare channel rho -> sum_k Tr(M_k rho) sigma_k.
    /// Kraus form via spectral decompositions; the action is cross-checked
    /// against the defining formula on seeded random inputs.
    pub fn entanglement_breaking(
        povm: Vec<HermitianOperator<F>>,
        outputs: Vec<DensityMatrix<F>>,
    ) -> Result<Self> {
        if povm.is_empty() || povm.len() != outputs.len() {
            return Err(Error::invalid("POVM and output counts must match and be nonempty"));
        }
        let din = povm[0].dim();
        let dout = outputs[0].dim();
        if povm.iter().any(|m| m.dim() != din) || outputs.iter().any(|s| s.dim() != dout) {
            return Err(Error::dims("POVM elements / outputs must share dimensions"));
        }
        let mut sum = ComplexMatrix::zeros(din, din);
        for m in &povm {
            let vals = m.eigenvalues();
            if vals.iter().any(|&l| l < -F::TOL_STATE) {
                return Err(Error::invalid("POVM element has a negative eigenvalue"));
            }
            sum = sum.add(m.matrix());
        }
        if sum.sub(&ComplexMatrix::identity(din)).max_abs() > F::TOL_STATE {
            return Err(Error::invalid("POVM does not sum to the identity"));
        }

        let mut kraus = Vec::new();
        for (m, s) in povm.iter().zip(&outputs) {
            let em = eigh(m.matrix())?;
            let es = eigh(s.matrix())?;
            for a in 0..din {
                let ma = em.values[a];
                if ma <= F::SPECTRAL_FLOOR {
                    continue;
                }
                let x: Vec<C<F>> = (0..din).map(|i| em.vectors.get(i, a)).collect();
                for b in 0..dout {
                    let sb = es.values[b];
                    if sb <= F::SPECTRAL_FLOOR {
                        continue;
                    }
                    let y: Vec<C<F>> = (0..dout).map(|i| es.vectors.get(i, b)).collect();
                    kraus.push(ComplexMatrix::outer(&y, &x).scale((ma * sb).sqrt()));
                }
            }
        }
        let ch = KrausChannel::new(
            kraus,
            ChannelFamily::MeasurePrepare { effects: povm.clone(), outputs: outputs.clone() },
        )?;

        // Action check against the measure-and-prepare formula.
        let mut rng = rng_from_seed(0x6d70);
        for _ in 0..2 {
            let rho = random_state_with::<F>(din, din, &mut rng)?;
            let via_kraus = ch.apply(&rho)?;
            let mut direct = ComplexMatrix::zeros(dout, dout);
            for (m, s) in povm.iter().zip(&outputs) {
                direct.add_scaled(s.matrix(), m.expectation(&rho));
            }
            if via_kraus.matrix().sub(&direct).max_abs() > F::TOL_STATE {
                return Err(Error::Inconsistency(
                    "Kraus form disagrees with measure-and-prepare action".into(),
                ));
            }
        }
        Ok(ch)
    }

    /// Constant channel rho -> omega: measure with the trivial POVM {I}.
    pub fn constant(omega: DensityMatrix<F>) -> Result<Self> {
        let din = omega.dim();
        let id = HermitianOperator::new(ComplexMatrix::identity(din))?;
        Self::entanglement_breaking(vec![id], vec![omega])
    }

    /// Trace-to-flag: maps every state to the 1-dim flag (classical "lost"
    /// symbol). The erasure channel's second branch.
    pub fn trace_to_flag(din: usize) -> Result<Self> {
        let kraus: Vec<ComplexMatrix<F>> = (0..din)
            .map(|a| ComplexMatrix::from_fn(1, din, |_, j| {
                if j == a {
                    Complex::new(F::one(), F::zero())
                } else {
                    Complex::new(F::zero(), F::zero())
                }
            }))
            .collect();
        KrausChannel::new(kraus, ChannelFamily::General)
    }

    pub fn apply(&self, rho: &DensityMatrix<F>) -> Result<DensityMatrix<F>> {
        if rho.dim() != self.din {
            return Err(Error::dims(format!(
                "state dim {} != channel input dim {}",
                rho.dim(),
                self.din
            )));
        }
        Ok(DensityMatrix::from_valid(self.apply_op(rho.matrix())))
    }

    /// Linear extension of the channel to arbitrary operators; the
    /// optimizer's hot path (no validation, no symmetrization).
    pub fn apply_op(&self, m: &ComplexMatrix<F>) -> ComplexMatrix<F> {
        let mut out = ComplexMatrix::zeros(self.dout, self.dout);
        for k in &self.kraus {
            let km = k.matmul(m);
            let term = km.matmul(&k.adjoint());
            out = out.add(&term);
        }
        out
    }

    /// Adjoint (Heisenberg) action sum K^dagger X K; maps effects to
    /// effects and drives analytic gradients.
    pub fn adjoint_apply_op(&self, x: &ComplexMatrix<F>) -> ComplexMatrix<F> {
        let mut out = ComplexMatrix::zeros(self.din, self.din);
        for k in &self.kraus {
            let kx = k.adjoint().matmul(x);
            let term = kx.matmul(k);
            out = out.add(&term);
        }
        out
    }

    /// Fast path for pure inputs: sum_k (K v)(K v)^dagger.
    pub fn apply_pure(&self, v: &[C<F>]) -> ComplexMatrix<F> {
        let mut out = ComplexMatrix::zeros(self.dout, self.dout);
        for k in &self.kraus {
            let kv = k.matvec(v);
            out = out.add(&ComplexMatrix::outer(&kv, &kv));
        }
        out
    }

    pub fn validate(&self) -> ChannelDiagnostics<F> {
        // Kraus rank = rank of the Gram matrix G_kl = Tr(K_k^dagger K_l).
        let r = self.kraus.len();
        let mut gram = ComplexMatrix::zeros(r, r);
        for a in 0..r {
            for b in 0..r {
                let mut acc = Complex::new(F::zero(), F::zero());
                for i in 0..self.dout {
                    for j in 0..self.din {
                        acc += self.kraus[a].get(i, j).conj() * self.kraus[b].get(i, j);
                    }
                }
                gram.set(a, b, acc);
            }
        }
        let vals = crate::eig::eigvalsh(&gram.hermitize()).unwrap_or_default();
        let scale = vals.iter().fold(F::zero(), |m, &v| m.max(v.abs())).max(F::one());
        let rank = vals
            .iter()
            .filter(|&&v| v > scale * F::from_f64_c(1e-10))
            .count();
        ChannelDiagnostics {
            din: self.din,
            dout: self.dout,
            completeness_residual: self.completeness_residual(),
            kraus_rank: rank,
        }
    }
}

/// Tensor product of channels: pairwise Kronecker products of Kraus sets.
pub fn tensor_channels<F: Scalar>(
    a: &KrausChannel<F>,
    b: &KrausChannel<F>,
) -> Result<KrausChannel<F>> {
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for ka in &a.kraus {
        for kb in &b.kraus {
            kraus.push(crate::bipartite::kron(ka, kb));
        }
    }
    let family = match (&a.family, &b.family) {
        (ChannelFamily::Noiseless, ChannelFamily::Noiseless) => ChannelFamily::Noiseless,
        _ => ChannelFamily::General,
    };
    KrausChannel::new(kraus, family)
}

/// Direct-sum mixture of channels sharing an input space: with probability
/// q_j the input goes through Phi_j into the j-th output block.
#[derive(Clone, Debug)]
pub struct BlockChannel<F: Scalar> {
    components: Vec<(F, KrausChannel<F>)>,
}

impl<F: Scalar> BlockChannel<F> {
    pub fn new(components: Vec<(F, KrausChannel<F>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("block channel needs at least one component"));
        }
        let din = components[0].1.din();
        if components.iter().any(|(_, c)| c.din() != din) {
            return Err(Error::dims("block components must share the input dimension"));
        }
        if components.iter().any(|(q, _)| *q < F::zero()) {
            return Err(Error::invalid("block weights must be nonnegative"));
        }
        let sum: F = components.iter().map(|(q, _)| *q).sum();
        if (sum - F::one()).abs() > F::TOL_ALGEBRA * F::from_f64_c(components.len() as f64) {
            return Err(Error::invalid(format!("block weights sum to {}", sum)));
        }
        Ok(BlockChannel { components })
    }

    /// Erasure channel: transmit intact with probability q, otherwise emit
    /// the classical flag.
    pub fn erasure(q: F, d: usize) -> Result<Self> {
        if q < F::zero() || q > F::one() {
            return Err(Error::invalid("erasure probability weight must lie in [0, 1]"));
        }
        BlockChannel::new(vec![
            (q, KrausChannel::noiseless(d)?),
            (F::one() - q, KrausChannel::trace_to_flag(d)?),
        ])
    }

    /// Direct-sum mixture q Id + (1-q) Phi0 with an arbitrary second branch.
    pub fn noiseless_mixture(q: F, phi0: KrausChannel<F>) -> Result<Self> {
        let d = phi0.din();
        BlockChannel::new(vec![
            (q, KrausChannel::noiseless(d)?),
            (F::one() - q, phi0),
        ])
    }

    pub fn din(&self) -> usize {
        self.components[0].1.din()
    }
    pub fn components(&self) -> &[(F, KrausChannel<F>)] {
        &self.components
    }

    pub fn apply_block(&self, rho: &DensityMatrix<F>) -> Result<BlockState<F>> {
        if rho.dim() != self.din() {
            return Err(Error::dims("state dim does not match block channel input"));
        }
        let blocks = self
            .components
            .iter()
            .map(|(q, c)| c.apply_op(rho.matrix()).scale(*q))
            .collect();
        Ok(BlockState::from_valid(blocks))
    }

    /// Tensor with a Kraus channel distributes over the blocks.
    pub fn tensor_with(&self, psi: &KrausChannel<F>) -> Result<BlockChannel<F>> {
        let components = self
            .components
            .iter()
            .map(|(q, c)| Ok((*q, tensor_channels(c, psi)?)))
            .collect::<Result<Vec<_>>>()?;
        BlockChannel::new(components)
    }
}

/// chi of an ensemble through a Kraus channel:
/// H(Phi(rho_av)) - sum_i pi_i H(Phi(rho_i)).
pub fn chi_of_ensemble<F: Scalar>(ch: &KrausChannel<F>, e: &Ensemble<F>) -> Result<F> {
    if e.dim() != ch.din() {
        return Err(Error::dims("ensemble dim does not match channel input"));
    }
    let avg = ch.apply(&e.average_state())?;
    let mut chi = entropy(&avg);
    for (w, s) in e.weights().iter().zip(e.states()) {
        chi -= *w * entropy(&ch.apply(s)?);
    }
    Ok(chi)
}

/// chi of an ensemble through a direct-sum channel. Evaluated blockwise
/// (the q-weighted sum of the component chi values, which the direct-sum
/// structure makes exact) and cross-checked against the direct
/// block-entropy evaluation.
pub fn chi_of_ensemble_block<F: Scalar>(bc: &BlockChannel<F>, e: &Ensemble<F>) -> Result<F> {
    if e.dim() != bc.din() {
        return Err(Error::dims("ensemble dim does not match channel input"));
    }
    let mut blockwise = F::zero();
    for (q, c) in bc.components() {
        if *q == F::zero() {
            continue;
        }
        blockwise += *q * chi_of_ensemble(c, e)?;
    }

    let avg_out = bc.apply_block(&e.average_state())?;
    let mut direct = block_entropy(&avg_out);
    for (w, s) in e.weights().iter().zip(e.states()) {
        direct -= *w * block_entropy(&bc.apply_block(s)?);
    }

    if (blockwise - direct).abs() > F::from_f64_c(tol::TOL_BLOCK_CHI) {
        return Err(Error::Inconsistency(format!(
            "blockwise chi {} vs direct block-entropy chi {}",
            blockwise, direct
        )));
    }
    Ok(blockwise)
}

/// Average output-relative-entropy form of chi:
/// sum_i pi_i H(Phi(rho_i) || Phi(rho_av)); equals chi exactly.
pub fn chi_relative_entropy_form<F: Scalar>(
    ch: &KrausChannel<F>,
    e: &Ensemble<F>,
) -> Result<F> {
    let avg_out = ch.apply(&e.average_state())?;
    let mut acc = F::zero();
    for (w, s) in e.weights().iter().zip(e.states()) {
        acc += *w * crate::entropy::relative_entropy(&ch.apply(s)?, &avg_out)?;
    }
    Ok(acc)
}

/// Donald residual: | sum_i pi_i H(Phi rho_i || Phi sigma)
/// - chi - H(Phi rho_av || Phi sigma) |; the identity is exact.
pub fn donald_residual<F: Scalar>(
    ch: &KrausChannel<F>,
    e: &Ensemble<F>,
    sigma_ref: &DensityMatrix<F>,
) -> Result<F> {
    let out_ref = ch.apply(sigma_ref)?;
    let mut lhs = F::zero();
    for (w, s) in e.weights().iter().zip(e.states()) {
        let r = crate::entropy::relative_entropy(&ch.apply(s)?, &out_ref)?;
        if r.is_infinite() {
            return Err(Error::invalid(
                "reference output not full rank: relative entropy diverges",
            ));
        }
        lhs += *w * r;
    }
    let chi = chi_of_ensemble(ch, e)?;
    let avg_term = crate::entropy::relative_entropy(&ch.apply(&e.average_state())?, &out_ref)?;
    Ok((lhs - chi - avg_term).abs())
}

/// h2 helper reexported at channel level for output spectra of qubit maps.
pub fn h2<F: Scalar>(x: F) -> F {
    binary_entropy(x).expect("argument in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_ensemble, random_state, rng_from_seed, random_effect_with};
    use crate::state::DensityMatrix;
    type M = ComplexMatrix<f64>;
    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    fn ket0() -> DensityMatrix<f64> {
        DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }
    fn ket1() -> DensityMatrix<f64> {
        DensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn noiseless_is_identity() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let rho = random_state::<f64>(2, 2, 1).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(out.matrix().sub(rho.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn depolarizing_action() {
        // p = 1 sends everything to I/2.
        let full = KrausChannel::<f64>::completely_depolarizing(2).unwrap();
        let rho = random_state::<f64>(2, 1, 3).unwrap();
        let out = full.apply(&rho).unwrap();
        assert!(out.matrix().sub(&M::identity(2).scale(0.5)).max_abs() < 1e-12);

        // depolarizing(p) |0><0| = diag(1 - p/2, p/2).
        let p = 0.3;
        let ch = KrausChannel::<f64>::depolarizing(p, 2).unwrap();
        let out = ch.apply(&ket0()).unwrap();
        assert!((out.matrix().get(0, 0).re - (1.0 - p / 2.0)).abs() < 1e-12);
        assert!((out.matrix().get(1, 1).re - p / 2.0).abs() < 1e-12);
        assert!(out.matrix().get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn depolarizing_matches_affine_oracle() {
        // Independent affine evaluation (1-p) rho + p I/d on random states.
        for (d, seed) in [(2usize, 5u64), (3, 6)] {
            let p = 0.45;
            let ch = KrausChannel::<f64>::depolarizing(p, d).unwrap();
            let rho = random_state::<f64>(d, d, seed).unwrap();
            let out = ch.apply(&rho).unwrap();
            let mut oracle = rho.matrix().scale(1.0 - p);
            oracle.add_scaled(&M::identity(d), p / d as f64);
            assert!(out.matrix().sub(&oracle).max_abs() < 1e-12);
        }
    }

    #[test]
    fn eb_dephasing_example() {
        let povm = vec![
            HermitianOperator::new(ket0().matrix().clone()).unwrap(),
            HermitianOperator::new(ket1().matrix().clone()).unwrap(),
        ];
        let outputs = vec![ket0(), ket1()];
        let ch = KrausChannel::entanglement_breaking(povm, outputs).unwrap();
        let rho = random_state::<f64>(2, 2, 9).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!((out.matrix().get(0, 0).re - rho.matrix().get(0, 0).re).abs() < 1e-12);
        assert!(out.matrix().get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn constant_channel() {
        let omega = random_state::<f64>(2, 2, 11).unwrap();
        let ch = KrausChannel::constant(omega.clone()).unwrap();
        let rho = random_state::<f64>(2, 1, 12).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(out.matrix().sub(omega.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn random_povm_matches_formula() {
        let mut rng = rng_from_seed(21);
        let e = random_effect_with::<f64>(2, &mut rng);
        let povm = vec![e.clone(), e.complement()];
        let outs = vec![
            random_state::<f64>(2, 2, 22).unwrap(),
            random_state::<f64>(2, 2, 23).unwrap(),
        ];
        let ch = KrausChannel::entanglement_breaking(povm.clone(), outs.clone()).unwrap();
        let rho = random_state::<f64>(2, 2, 24).unwrap();
        let out = ch.apply(&rho).unwrap();
        let mut direct = M::zeros(2, 2);
        for (m, s) in povm.iter().zip(&outs) {
            direct.add_scaled(s.matrix(), m.expectation(&rho));
        }
        assert!(out.matrix().sub(&direct).max_abs() < 1e-12);
    }

    #[test]
    fn tensor_factorizes() {
        let a = KrausChannel::<f64>::depolarizing(0.2, 2).unwrap();
        let b = KrausChannel::<f64>::depolarizing(0.7, 2).unwrap();
        let ab = tensor_channels(&a, &b).unwrap();
        let rho = random_state::<f64>(2, 2, 31).unwrap();
        let omega = random_state::<f64>(2, 2, 32).unwrap();
        let joint = crate::bipartite::tensor(&rho, &omega);
        let lhs = ab.apply(&joint).unwrap();
        let rhs = crate::bipartite::tensor(&a.apply(&rho).unwrap(), &b.apply(&omega).unwrap());
        assert!(lhs.matrix().sub(rhs.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn trivial_tensor_is_identity_on_other_factor() {
        let a = KrausChannel::<f64>::depolarizing(0.3, 2).unwrap();
        let t = KrausChannel::<f64>::trivial();
        let at = tensor_channels(&a, &t).unwrap();
        assert_eq!(at.din(), 2);
        let rho = random_state::<f64>(2, 2, 41).unwrap();
        let lhs = at.apply(&rho).unwrap();
        let rhs = a.apply(&rho).unwrap();
        assert!(lhs.matrix().sub(rhs.matrix()).max_abs() < 1e-13);
    }

    #[test]
    fn block_apply_and_erasure_entropy() {
        let q = 0.35f64;
        let ch = BlockChannel::erasure(q, 2).unwrap();
        let pure = ket0();
        let out = ch.apply_block(&pure).unwrap();
        // Intact branch q |0><0|, flag branch (1-q) scalar.
        assert_eq!(out.blocks().len(), 2);
        assert!((out.blocks()[0].trace_re() - q).abs() < 1e-14);
        assert!((out.blocks()[1].trace_re() - (1.0 - q)).abs() < 1e-14);
        let h = block_entropy(&out);
        assert!((h - h2(q)).abs() < 1e-12);
    }

    #[test]
    fn block_tensor_distributes() {
        let bc = BlockChannel::erasure(0.4f64, 2).unwrap();
        let psi = KrausChannel::<f64>::depolarizing(0.5, 2).unwrap();
        let bt = bc.tensor_with(&psi).unwrap();
        let sigma = random_state::<f64>(4, 4, 51).unwrap();
        let lhs = bt.apply_block(&sigma).unwrap();
        // Componentwise: q_j (Phi_j (x) Psi)(sigma).
        for ((q, comp), blk) in bc.components().iter().zip(lhs.blocks()) {
            let expect = tensor_channels(comp, &psi)
                .unwrap()
                .apply_op(sigma.matrix())
                .scale(*q);
            assert!(blk.sub(&expect).max_abs() < 1e-12);
        }
        assert!((lhs.total_trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_ground_truths() {
        let ch = KrausChannel::<f64>::noiseless(2).unwrap();
        let e = Ensemble::new(vec![0.5, 0.5], vec![ket0(), ket1()]).unwrap();
        assert!((chi_of_ensemble(&ch, &e).unwrap() - 1.0).abs() < 1e-12);

        // Identical members give chi = 0.
        let same = Ensemble::new(vec![0.5, 0.5], vec![ket0(), ket0()]).unwrap();
        assert!(chi_of_ensemble(&ch, &same).unwrap().abs() < 1e-12);

        // Depolarizing on the antipodal pair: 1 - h2(p/2).
        let p = 0.6;
        let dep = KrausChannel::<f64>::depolarizing(p, 2).unwrap();
        let got = chi_of_ensemble(&dep, &e).unwrap();
        assert!((got - (1.0 - h2(p / 2.0))).abs() < 1e-12);
    }

    #[test]
    fn chi_equals_relative_entropy_form() {
        let ch = KrausChannel::<f64>::depolarizing(0.25, 2).unwrap();
        let e = random_ensemble::<f64>(2, 3, 61).unwrap();
        let a = chi_of_ensemble(&ch, &e).unwrap();
        let b = chi_relative_entropy_form(&ch, &e).unwrap();
        assert!((a - b).abs() < 1e-9, "m-chi residual {}", (a - b).abs());
    }

    #[test]
    fn donald_identity_random() {
        let ch = KrausChannel::<f64>::depolarizing(0.2, 3).unwrap();
        let e = random_ensemble::<f64>(3, 4, 71).unwrap();
        let sigma = random_state::<f64>(3, 3, 72).unwrap();
        let resid = donald_residual(&ch, &e, &sigma).unwrap();
        assert!(resid < 1e-9, "Donald residual {resid}");
    }

    #[test]
    fn blockwise_chi_agrees_with_direct() {
        let bc = BlockChannel::new(vec![
            (0.3f64, KrausChannel::depolarizing(0.5, 2).unwrap()),
            (0.7, KrausChannel::noiseless(2).unwrap()),
        ])
        .unwrap();
        let e = random_ensemble::<f64>(2, 3, 81).unwrap();
        // The call cross-checks internally and errors beyond 1e-10.
        let chi = chi_of_ensemble_block(&bc, &e).unwrap();
        assert!(chi >= 0.0);
    }

    #[test]
    fn diagnostics_report_rank() {
        let ch = KrausChannel::<f64>::depolarizing(0.5, 2).unwrap();
        let d = ch.validate();
        assert_eq!(d.kraus_rank, 4);
        assert!(d.completeness_residual < 1e-12);
        let id = KrausChannel::<f64>::noiseless(3).unwrap();
        assert_eq!(id.validate().kraus_rank, 1);
    }

    #[test]
    fn rejects_incomplete_kraus() {
        let half = vec![M::identity(2).scale(0.5)];
        assert!(KrausChannel::new(half, ChannelFamily::General).is_err());
    }
}
