//! Hermitian operators, density matrices, ensembles, and block states.
//!
//! Validating constructors enforce the type invariants at trust boundaries
//! (parsing, tests, user input). Internal by-construction paths - channel
//! outputs, convex mixes of valid states - use the `_unchecked` constructors
//! and document why validity is inherited.

use crate::eig::{eigh, eigvalsh, eigvalsh_unchecked};
use crate::error::{Error, Result};
use crate::mat::{vec_normalize, ComplexMatrix};
use crate::scalar::{Scalar, C};

/// Hermitian operator: residual ||M - M^dagger||_max within tolerance at
/// construction, then stored exactly symmetrized.
#[derive(Clone, Debug)]
pub struct HermitianOperator<F: Scalar> {
    mat: ComplexMatrix<F>,
}

impl<F: Scalar> HermitianOperator<F> {
    pub fn new(m: ComplexMatrix<F>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("Hermitian operator must be square"));
        }
        m.check_finite()?;
        let scale = F::one().max(m.max_abs());
        if m.hermiticity_residual() > F::TOL_ALGEBRA * scale {
            return Err(Error::invalid(format!(
                "hermiticity residual {:e} exceeds tolerance",
                m.hermiticity_residual()
            )));
        }
        Ok(HermitianOperator { mat: m.hermitize() })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }
    pub fn matrix(&self) -> &ComplexMatrix<F> {
        &self.mat
    }
    pub fn into_matrix(self) -> ComplexMatrix<F> {
        self.mat
    }

    pub fn eigenvalues(&self) -> Vec<F> {
        eigvalsh_unchecked(&self.mat)
    }

    /// Largest eigenvalue magnitude (operator norm).
    pub fn norm_spectral(&self) -> F {
        self.eigenvalues()
            .into_iter()
            .map(|l| l.abs())
            .fold(F::zero(), F::max)
    }

    /// Re Tr(M rho).
    pub fn expectation(&self, rho: &DensityMatrix<F>) -> F {
        self.mat.trace_product_re(rho.matrix())
    }

    /// True iff the spectrum lies in [0, 1] within the state tolerance:
    /// the defining property of an effect / constraint operator.
    pub fn is_effect(&self) -> bool {
        let tol = F::TOL_STATE;
        self.eigenvalues()
            .iter()
            .all(|&l| l >= -tol && l <= F::one() + tol)
    }

    /// Effect-validating constructor.
    pub fn effect(m: ComplexMatrix<F>) -> Result<Self> {
        let h = Self::new(m)?;
        if !h.is_effect() {
            return Err(Error::invalid("operator spectrum outside [0, 1]"));
        }
        Ok(h)
    }

    /// I - E, the complementary effect.
    pub fn complement(&self) -> Self {
        let n = self.dim();
        HermitianOperator { mat: ComplexMatrix::identity(n).sub(&self.mat) }
    }
}

/// Density matrix: Hermitian, minimum eigenvalue >= -tol, trace 1 within tol.
#[derive(Clone, Debug)]
pub struct DensityMatrix<F: Scalar> {
    mat: ComplexMatrix<F>,
}

impl<F: Scalar> DensityMatrix<F> {
    pub fn new(m: ComplexMatrix<F>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("density matrix must be square"));
        }
        m.check_finite()?;
        let scale = F::one().max(m.max_abs());
        if m.hermiticity_residual() > F::TOL_ALGEBRA * scale {
            return Err(Error::invalid("density matrix not Hermitian within tolerance"));
        }
        let sym = m.hermitize();
        let tr = sym.trace_re();
        if (tr - F::one()).abs() > F::TOL_STATE {
            return Err(Error::invalid(format!("trace {} deviates from 1", tr)));
        }
        let min = eigvalsh_unchecked(&sym)
            .into_iter()
            .fold(F::infinity(), F::min);
        if min < -F::TOL_STATE {
            return Err(Error::invalid(format!("negative eigenvalue {:e}", min)));
        }
        Ok(DensityMatrix { mat: sym })
    }

    /// Constructor for matrices that are valid states by construction
    /// (channel outputs of valid states, convex mixtures, partial traces).
    /// Symmetrizes but skips the eigenvalue check.
    pub(crate) fn from_valid(m: ComplexMatrix<F>) -> Self {
        DensityMatrix { mat: m.hermitize() }
    }

    /// Pure state |v><v| from a (not necessarily normalized) vector.
    pub fn pure(v: &[C<F>]) -> Result<Self> {
        let mut w = v.to_vec();
        vec_normalize(&mut w)?;
        Ok(DensityMatrix { mat: ComplexMatrix::outer(&w, &w) })
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: ComplexMatrix::identity(d).scale(F::one() / F::from_f64_c(d as f64)),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }
    pub fn matrix(&self) -> &ComplexMatrix<F> {
        &self.mat
    }
    pub fn into_matrix(self) -> ComplexMatrix<F> {
        self.mat
    }

    pub fn eigenvalues(&self) -> Vec<F> {
        eigvalsh_unchecked(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> F {
        self.eigenvalues().into_iter().fold(F::infinity(), F::min)
    }

    /// Projects an approximately-valid Hermitian matrix onto the state set:
    /// clips negative eigenvalues and renormalizes the trace. Used by
    /// optimizer steps and finite-difference probes that drift slightly
    /// outside the set.
    pub fn project(m: &ComplexMatrix<F>) -> Result<Self> {
        let sym = m.hermitize();
        let e = eigh(&sym)?;
        let clipped: Vec<F> = e.values.iter().map(|&l| l.max(F::zero())).collect();
        let total: F = clipped.iter().copied().sum();
        if total <= F::SPECTRAL_FLOOR {
            return Err(Error::invalid("projection target has no positive mass"));
        }
        let n = sym.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            if clipped[k] == F::zero() {
                continue;
            }
            let col: Vec<C<F>> = (0..n).map(|i| e.vectors.get(i, k)).collect();
            out.add_scaled(&ComplexMatrix::outer(&col, &col), clipped[k] / total);
        }
        Ok(DensityMatrix { mat: out })
    }

    /// Convex mixture (1 - t) self + t other.
    pub fn mix(&self, other: &Self, t: F) -> Self {
        let mut m = self.mat.scale(F::one() - t);
        m.add_scaled(&other.mat, t);
        DensityMatrix { mat: m }
    }
}

/// Ensemble {pi_i, rho_i}: positive weights summing to 1, states of a
/// common dimension.
#[derive(Clone, Debug)]
pub struct Ensemble<F: Scalar> {
    weights: Vec<F>,
    states: Vec<DensityMatrix<F>>,
}

impl<F: Scalar> Ensemble<F> {
    pub fn new(weights: Vec<F>, states: Vec<DensityMatrix<F>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(Error::invalid("ensemble needs matching, nonempty weights and states"));
        }
        if weights.iter().any(|&w| !(w > F::zero())) {
            return Err(Error::invalid("ensemble weights must be positive"));
        }
        let sum: F = weights.iter().copied().sum();
        if (sum - F::one()).abs() > F::TOL_ALGEBRA * F::from_f64_c(weights.len() as f64) {
            return Err(Error::invalid(format!("ensemble weights sum to {}", sum)));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::dims("ensemble states must share one dimension"));
        }
        Ok(Ensemble { weights, states })
    }

    pub(crate) fn from_valid(weights: Vec<F>, states: Vec<DensityMatrix<F>>) -> Self {
        Ensemble { weights, states }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
    pub fn weights(&self) -> &[F] {
        &self.weights
    }
    pub fn states(&self) -> &[DensityMatrix<F>] {
        &self.states
    }

    /// rho_av = sum_i pi_i rho_i.
    pub fn average_state(&self) -> DensityMatrix<F> {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for (w, s) in self.weights.iter().zip(&self.states) {
            m.add_scaled(s.matrix(), *w);
        }
        DensityMatrix::from_valid(m)
    }
}

/// Direct-sum output state: positive blocks (dims may differ per slot) with
/// traces summing to 1.
#[derive(Clone, Debug)]
pub struct BlockState<F: Scalar> {
    blocks: Vec<ComplexMatrix<F>>,
}

impl<F: Scalar> BlockState<F> {
    pub fn new(blocks: Vec<ComplexMatrix<F>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("block state needs at least one block"));
        }
        let mut total = F::zero();
        for b in &blocks {
            if !b.is_square() {
                return Err(Error::invalid("block must be square"));
            }
            b.check_finite()?;
            let scale = F::one().max(b.max_abs());
            if b.hermiticity_residual() > F::TOL_ALGEBRA * scale {
                return Err(Error::invalid("block not Hermitian within tolerance"));
            }
            let min = eigvalsh(&b.hermitize())?
                .into_iter()
                .fold(F::infinity(), F::min);
            if min < -F::TOL_STATE {
                return Err(Error::invalid(format!("block eigenvalue {:e} < 0", min)));
            }
            total += b.trace_re();
        }
        if (total - F::one()).abs() > F::TOL_STATE {
            return Err(Error::invalid(format!("block traces sum to {}", total)));
        }
        Ok(BlockState { blocks })
    }

    pub(crate) fn from_valid(blocks: Vec<ComplexMatrix<F>>) -> Self {
        BlockState { blocks }
    }

    pub fn blocks(&self) -> &[ComplexMatrix<F>] {
        &self.blocks
    }

    pub fn total_trace(&self) -> F {
        self.blocks.iter().map(|b| b.trace_re()).sum()
    }
}
