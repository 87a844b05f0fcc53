//! Constraint sets on ensemble averages: the full state space, linear
//! expectation bounds, singletons, and bipartite marginal products.

use crate::bipartite::{partial_trace_op, Keep};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::{Scalar, C};
use crate::state::{DensityMatrix, HermitianOperator};

/// Admissible-average sets for the capacity problems.
///
/// Linear means Tr A rho_av <= alpha with an effect A (general positive
/// constraint operators are normalized on ingestion, see
/// [`ConstraintSet::linear_normalized`]). Marginals constrains the two
/// partial traces of a bipartite average independently.
#[derive(Clone, Debug)]
pub enum ConstraintSet<F: Scalar> {
    Full,
    Linear {
        effect: HermitianOperator<F>,
        alpha: F,
    },
    Singleton {
        state: DensityMatrix<F>,
    },
    Marginals {
        left: Box<ConstraintSet<F>>,
        right: Box<ConstraintSet<F>>,
        dims: (usize, usize),
    },
}

impl<F: Scalar> ConstraintSet<F> {
    /// Linear constraint from an effect and a bound in [0, 1].
    pub fn linear(effect: HermitianOperator<F>, alpha: F) -> Result<Self> {
        if !effect.is_effect() {
            return Err(Error::invalid("linear constraint operator must satisfy 0 <= A <= I"));
        }
        if alpha < F::zero() || alpha > F::one() {
            return Err(Error::invalid("linear constraint bound must lie in [0, 1]"));
        }
        Ok(ConstraintSet::Linear { effect, alpha })
    }

    /// Normalize a general positive constraint Tr A rho <= a to effect form
    /// via A' = (||A||^-1 A + I)/2, alpha' = (||A||^-1 a + 1)/2, which
    /// preserves the constrained set. A vacuous bound clamps to alpha' = 1.
    pub fn linear_normalized(a: HermitianOperator<F>, bound: F) -> Result<Self> {
        let vals = a.eigenvalues();
        let lo = vals.first().copied().unwrap_or(F::zero());
        let hi = vals.last().copied().unwrap_or(F::zero());
        if lo < -F::TOL_STATE {
            return Err(Error::invalid("constraint operator must be positive"));
        }
        let norm = hi.max(lo.abs());
        if norm <= F::TOL_STATE {
            return Err(Error::invalid("constraint operator is zero"));
        }
        let dim = a.dim();
        let half = F::from_f64_c(0.5);
        let mut m = a.matrix().scale(half / norm);
        m.add_scaled(&ComplexMatrix::identity(dim), half);
        let alpha = (half * (bound / norm + F::one())).min(F::one());
        let effect = HermitianOperator::new(m)?;
        Self::linear(effect, alpha)
    }

    pub fn singleton(state: DensityMatrix<F>) -> Self {
        ConstraintSet::Singleton { state }
    }

    /// Marginal product constraint on a (dh x dk)-dimensional average.
    /// Sides must not themselves be Marginals.
    pub fn marginals(left: ConstraintSet<F>, right: ConstraintSet<F>, dims: (usize, usize)) -> Result<Self> {
        if matches!(left, ConstraintSet::Marginals { .. })
            || matches!(right, ConstraintSet::Marginals { .. })
        {
            return Err(Error::Unsupported("nested marginal constraints".into()));
        }
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::invalid("marginal dimensions must be positive"));
        }
        for (side, d) in [(&left, dims.0), (&right, dims.1)] {
            if let Some(sd) = side.dim() {
                if sd != d {
                    return Err(Error::dims("marginal side constraint dim does not match"));
                }
            }
        }
        Ok(ConstraintSet::Marginals { left: Box::new(left), right: Box::new(right), dims })
    }

    /// Dimension the constraint pins down, if any (Full pins none).
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConstraintSet::Full => None,
            ConstraintSet::Linear { effect, .. } => Some(effect.dim()),
            ConstraintSet::Singleton { state } => Some(state.dim()),
            ConstraintSet::Marginals { dims, .. } => Some(dims.0 * dims.1),
        }
    }

    /// Check the constraint can host averages of the given dimension.
    pub fn check_dim(&self, din: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != din => Err(Error::dims(format!(
                "constraint dimension {} does not match input dimension {}",
                d, din
            ))),
            _ => Ok(()),
        }
    }

    /// Verify some state satisfies the constraint (Slater-style check for
    /// Linear; recursive for Marginals).
    pub fn check_feasible(&self) -> Result<()> {
        match self {
            ConstraintSet::Full | ConstraintSet::Singleton { .. } => Ok(()),
            ConstraintSet::Linear { effect, alpha } => {
                let lo = effect.eigenvalues()[0];
                if lo > *alpha + F::TOL_STATE {
                    Err(Error::Infeasible(format!(
                        "min achievable expectation {} exceeds bound {}",
                        lo, alpha
                    )))
                } else {
                    Ok(())
                }
            }
            ConstraintSet::Marginals { left, right, .. } => {
                left.check_feasible()?;
                right.check_feasible()
            }
        }
    }

    /// Worst violation of the constraint by rho (0 when satisfied). For
    /// Singleton this is the Frobenius distance to the pinned state; for
    /// Marginals the max over sides evaluated on the partial traces.
    pub fn violation(&self, rho: &DensityMatrix<F>) -> Result<F> {
        self.violation_op(rho.matrix())
    }

    pub(crate) fn violation_op(&self, rho: &ComplexMatrix<F>) -> Result<F> {
        match self {
            ConstraintSet::Full => Ok(F::zero()),
            ConstraintSet::Linear { effect, alpha } => {
                Ok((rho.trace_product_re(effect.matrix()) - *alpha).max(F::zero()))
            }
            ConstraintSet::Singleton { state } => Ok(rho.sub(state.matrix()).frobenius_norm()),
            ConstraintSet::Marginals { left, right, dims } => {
                let l = partial_trace_op(rho, *dims, Keep::Left)?;
                let r = partial_trace_op(rho, *dims, Keep::Right)?;
                Ok(left.violation_op(&l)?.max(right.violation_op(&r)?))
            }
        }
    }

    /// A pure state with the smallest reachable constraint expectation:
    /// the mixing target the optimizer uses to restore feasibility. For
    /// Full sides any fixed state works (first basis vector); Singleton
    /// sides have no mixing anchor (the optimizer uses penalty + repair
    /// there) so this returns None for them.
    pub fn mixing_anchor(&self, din: usize) -> Option<Vec<C<F>>> {
        match self {
            ConstraintSet::Full => Some(basis_vector(din, 0)),
            ConstraintSet::Linear { effect, .. } => {
                let eig = crate::eig::eigh(effect.matrix()).ok()?;
                Some((0..effect.dim()).map(|i| eig.vectors.get(i, 0)).collect())
            }
            ConstraintSet::Singleton { .. } => None,
            ConstraintSet::Marginals { left, right, dims } => {
                let l = left.mixing_anchor(dims.0)?;
                let r = right.mixing_anchor(dims.1)?;
                Some(crate::bipartite::kron_vec(&l, &r))
            }
        }
    }
}

fn basis_vector<F: Scalar>(dim: usize, k: usize) -> Vec<C<F>> {
    let mut v = vec![C::<F>::new(F::zero(), F::zero()); dim];
    v[k] = C::<F>::new(F::one(), F::zero());
    v
}

/// Symmetric Kronecker sum A x I + I x A (n = 2) or A itself (n = 1);
/// downstream capacity calls support only these two powers.
pub fn tensor_power_constraint<F: Scalar>(
    a: &HermitianOperator<F>,
    n: usize,
) -> Result<HermitianOperator<F>> {
    match n {
        1 => Ok(a.clone()),
        2 => {
            let d = a.dim();
            let id = ComplexMatrix::identity(d);
            let mut m = crate::bipartite::kron(a.matrix(), &id);
            m = m.add(&crate::bipartite::kron(&id, a.matrix()));
            HermitianOperator::new(m)
        }
        _ => Err(Error::Unsupported(format!(
            "tensor power constraint supports n in {{1, 2}}, got {}",
            n
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_effect, random_state};
    use num_complex::Complex;
    type M = ComplexMatrix<f64>;

    fn proj1() -> HermitianOperator<f64> {
        HermitianOperator::new(M::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        }))
        .unwrap()
    }

    #[test]
    fn linear_validation_and_violation() {
        let c = ConstraintSet::linear(proj1(), 0.25).unwrap();
        assert!(c.check_feasible().is_ok());
        let rho = DensityMatrix::<f64>::maximally_mixed(2);
        assert!((c.violation(&rho).unwrap() - 0.25).abs() < 1e-12);
        let ok = DensityMatrix::pure(&[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]).unwrap();
        assert_eq!(c.violation(&ok).unwrap(), 0.0);
        assert!(ConstraintSet::linear(proj1(), 1.5).is_err());
    }

    #[test]
    fn normalization_preserves_the_set() {
        // Tr(2 P1 rho) <= 1/2 is the same set as Tr(P1 rho) <= 1/4; the
        // normalized form must agree on containment for sample states.
        let a2 = HermitianOperator::new(proj1().matrix().scale(2.0)).unwrap();
        let c = ConstraintSet::linear_normalized(a2, 0.5).unwrap();
        let direct = ConstraintSet::linear(proj1(), 0.25).unwrap();
        for seed in 0..20u64 {
            let rho = random_state::<f64>(2, 2, seed).unwrap();
            let v1 = c.violation(&rho).unwrap() > 1e-10;
            let v2 = direct.violation(&rho).unwrap() > 1e-10;
            assert_eq!(v1, v2, "containment mismatch at seed {seed}");
        }
    }

    #[test]
    fn infeasible_detected() {
        // Tr(I rho) = 1 > 0.5 for every state.
        let id = HermitianOperator::new(M::identity(2)).unwrap();
        let c = ConstraintSet::linear(id, 0.5).unwrap();
        assert!(c.check_feasible().is_err());
    }

    #[test]
    fn anchor_reaches_minimum_expectation() {
        let e = random_effect::<f64>(3, 7);
        let c = ConstraintSet::linear(e.clone(), 0.5).unwrap();
        let anchor = c.mixing_anchor(3).unwrap();
        let rho = DensityMatrix::pure(&anchor).unwrap();
        let lo = e.eigenvalues()[0];
        assert!((e.expectation(&rho) - lo).abs() < 1e-10);
    }

    #[test]
    fn marginals_checks_sides_on_partial_traces() {
        let left = ConstraintSet::linear(proj1(), 0.1).unwrap();
        let c = ConstraintSet::marginals(left, ConstraintSet::Full, (2, 2)).unwrap();
        let sigma = random_state::<f64>(4, 4, 11).unwrap();
        let l = crate::bipartite::partial_trace(&sigma, (2, 2), Keep::Left).unwrap();
        let expect = (proj1().expectation(&l) - 0.1).max(0.0);
        assert!((c.violation(&sigma).unwrap() - expect).abs() < 1e-12);
        // Product anchor exists and is feasible for the linear side.
        let anchor = c.mixing_anchor(4).unwrap();
        assert_eq!(anchor.len(), 4);
    }

    #[test]
    fn nested_marginals_rejected() {
        let inner = ConstraintSet::<f64>::marginals(ConstraintSet::Full, ConstraintSet::Full, (2, 2))
            .unwrap();
        assert!(ConstraintSet::marginals(inner, ConstraintSet::Full, (4, 2)).is_err());
    }

    #[test]
    fn tensor_power_examples() {
        let a = proj1();
        let a1 = tensor_power_constraint(&a, 1).unwrap();
        assert!(a1.matrix().sub(a.matrix()).max_abs() < 1e-15);
        // n = 2 on |1><1| gives diag(0, 1, 1, 2).
        let a2 = tensor_power_constraint(&a, 2).unwrap();
        let want = [0.0, 1.0, 1.0, 2.0];
        for (i, w) in want.iter().enumerate() {
            assert!((a2.matrix().get(i, i).re - w).abs() < 1e-14);
        }
        // Tr[(rho x rho) A2] = 2 Tr(rho A).
        let rho = random_state::<f64>(2, 2, 3).unwrap();
        let prod = crate::bipartite::tensor(&rho, &rho);
        let lhs = a2.expectation(&prod);
        assert!((lhs - 2.0 * a.expectation(&rho)).abs() < 1e-12);
        assert!(tensor_power_constraint(&a, 3).is_err());
    }
}
