//! Von Neumann entropy, subnormalized entropy, relative entropy, and binary
//! entropy, all in bits.

use crate::eig::{eigh, eigvalsh_unchecked};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::Scalar;
use crate::state::{BlockState, DensityMatrix};

/// -x log2 x with the spectral floor: eigenvalues below the floor are
/// treated as exact zeros (eigensolver noise, not physics).
#[inline]
pub fn eta<F: Scalar>(x: F) -> F {
    if x < F::SPECTRAL_FLOOR {
        F::zero()
    } else {
        -x * x.log2()
    }
}

/// Entropy of a spectrum in bits.
pub fn entropy_of_spectrum<F: Scalar>(spectrum: &[F]) -> F {
    let s: F = spectrum.iter().map(|&l| eta(l)).sum();
    // A top eigenvalue a few ulps above 1 contributes a few ulps below 0.
    s.max(F::zero())
}

/// Von Neumann entropy H(rho) in bits; lies in [0, log2 dim].
pub fn entropy<F: Scalar>(rho: &DensityMatrix<F>) -> F {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// Entropy -sum lambda log2 lambda of a positive operator with trace in
/// [0, 1]. The zero operator has entropy 0.
pub fn subnormalized_entropy<F: Scalar>(s: &ComplexMatrix<F>) -> Result<F> {
    if !s.is_square() {
        return Err(Error::invalid("subnormalized entropy needs a square operator"));
    }
    let scale = F::one().max(s.max_abs());
    if s.hermiticity_residual() > F::TOL_ALGEBRA * scale {
        return Err(Error::invalid("operator not Hermitian within tolerance"));
    }
    let vals = eigvalsh_unchecked(&s.hermitize());
    if vals.iter().any(|&l| l < -F::TOL_STATE) {
        return Err(Error::invalid("operator has a negative eigenvalue beyond tolerance"));
    }
    let tr: F = vals.iter().copied().sum();
    if tr > F::one() + F::TOL_STATE {
        return Err(Error::invalid("operator trace exceeds 1"));
    }
    Ok(entropy_of_spectrum(&vals))
}

/// Value-only fast path for operators positive by construction.
pub(crate) fn subnormalized_entropy_unchecked<F: Scalar>(s: &ComplexMatrix<F>) -> F {
    entropy_of_spectrum(&eigvalsh_unchecked(s))
}

/// Binary entropy h2(x) in bits; endpoints give 0.
pub fn binary_entropy<F: Scalar>(x: F) -> Result<F> {
    if x < -F::TOL_ALGEBRA || x > F::one() + F::TOL_ALGEBRA {
        return Err(Error::invalid(format!("binary entropy argument {} outside [0, 1]", x)));
    }
    let x = x.max(F::zero()).min(F::one());
    Ok(eta(x) + eta(F::one() - x))
}

/// Relative entropy H(rho || sigma) in bits.
///
/// Computed in sigma's eigenbasis; returns +infinity when rho carries
/// weight above tolerance on sigma's null directions.
pub fn relative_entropy<F: Scalar>(
    rho: &DensityMatrix<F>,
    sigma: &DensityMatrix<F>,
) -> Result<F> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims("relative entropy needs equal dimensions"));
    }
    let e = eigh(sigma.matrix())?;
    let n = sigma.dim();
    let mut cross = F::zero(); // Tr rho log2 sigma, over sigma's support
    for k in 0..n {
        let col: Vec<_> = (0..n).map(|i| e.vectors.get(i, k)).collect();
        let weight = rho.matrix().expectation(&col).re;
        if e.values[k] < F::SPECTRAL_FLOOR {
            if weight > F::TOL_STATE {
                return Ok(F::infinity());
            }
            continue;
        }
        cross += weight * e.values[k].log2();
    }
    // Tr rho log2 rho = -H(rho).
    Ok(-entropy(rho) - cross)
}

/// Entropy of a direct-sum state: the eigenvalues of all blocks pooled.
/// Equals H(w) + sum_j w_j H(S_j / w_j) with w_j = Tr S_j.
pub fn block_entropy<F: Scalar>(b: &BlockState<F>) -> F {
    let s: F = b
        .blocks()
        .iter()
        .map(|m| subnormalized_entropy_unchecked(m))
        .sum();
    s.max(F::zero())
}
