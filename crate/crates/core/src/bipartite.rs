//! Tensor products, partial traces, and von Neumann measurement posteriors
//! on bipartite systems H (x) K.

use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::{Scalar, C};
use crate::state::DensityMatrix;
use num_complex::Complex;

/// Which factor a partial trace keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    Left,
    Right,
}

/// Kronecker product of raw matrices.
pub fn kron<F: Scalar>(a: &ComplexMatrix<F>, b: &ComplexMatrix<F>) -> ComplexMatrix<F> {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a.get(i, j);
            if aij.re == F::zero() && aij.im == F::zero() {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors: (v (x) w)[i * |w| + k] = v[i] w[k].
pub fn kron_vec<F: Scalar>(v: &[C<F>], w: &[C<F>]) -> Vec<C<F>> {
    let mut out = Vec::with_capacity(v.len() * w.len());
    for &vi in v {
        for &wk in w {
            out.push(vi * wk);
        }
    }
    out
}

/// Tensor product of states.
pub fn tensor<F: Scalar>(rho: &DensityMatrix<F>, omega: &DensityMatrix<F>) -> DensityMatrix<F> {
    DensityMatrix::from_valid(kron(rho.matrix(), omega.matrix()))
}

/// Partial trace on a raw square matrix over the factorization dh * dk.
pub fn partial_trace_op<F: Scalar>(
    m: &ComplexMatrix<F>,
    dims: (usize, usize),
    keep: Keep,
) -> Result<ComplexMatrix<F>> {
    let (dh, dk) = dims;
    if !m.is_square() || m.rows() != dh * dk {
        return Err(Error::dims(format!(
            "matrix dim {} does not factor as {} * {}",
            m.rows(),
            dh,
            dk
        )));
    }
    Ok(match keep {
        Keep::Left => ComplexMatrix::from_fn(dh, dh, |i, j| {
            let mut acc = Complex::new(F::zero(), F::zero());
            for k in 0..dk {
                acc += m.get(i * dk + k, j * dk + k);
            }
            acc
        }),
        Keep::Right => ComplexMatrix::from_fn(dk, dk, |k, l| {
            let mut acc = Complex::new(F::zero(), F::zero());
            for i in 0..dh {
                acc += m.get(i * dk + k, i * dk + l);
            }
            acc
        }),
    })
}

/// Partial trace of a state; the marginal is again a valid state.
pub fn partial_trace<F: Scalar>(
    sigma: &DensityMatrix<F>,
    dims: (usize, usize),
    keep: Keep,
) -> Result<DensityMatrix<F>> {
    Ok(DensityMatrix::from_valid(partial_trace_op(
        sigma.matrix(),
        dims,
        keep,
    )?))
}

/// Von Neumann measurement of the H factor in an orthonormal basis
/// (columns of `basis`): returns the outcome probabilities and posterior
/// states (|e_j><e_j| (x) B_j / p_j on the full space). Outcomes with
/// probability at or below the spectral floor are omitted.
pub fn measurement_posteriors<F: Scalar>(
    sigma: &DensityMatrix<F>,
    basis: &ComplexMatrix<F>,
    dims: (usize, usize),
) -> Result<Vec<(F, DensityMatrix<F>)>> {
    let (dh, dk) = dims;
    if sigma.dim() != dh * dk {
        return Err(Error::dims("state dimension does not match factorization"));
    }
    if basis.rows() != dh || basis.cols() != dh {
        return Err(Error::dims("basis must be square on the measured factor"));
    }
    let gram = basis.adjoint().matmul(basis);
    if gram.sub(&ComplexMatrix::identity(dh)).max_abs() > F::TOL_STATE {
        return Err(Error::invalid("measurement basis is not orthonormal"));
    }

    let m = sigma.matrix();
    let mut out = Vec::with_capacity(dh);
    for j in 0..dh {
        let e: Vec<C<F>> = (0..dh).map(|i| basis.get(i, j)).collect();
        // B_j[k][l] = sum_{m,n} conj(e[m]) sigma[(m,k),(n,l)] e[n]
        let mut block = ComplexMatrix::zeros(dk, dk);
        for mm in 0..dh {
            let em = e[mm].conj();
            if em.norm_sqr() == F::zero() {
                continue;
            }
            for nn in 0..dh {
                let w = em * e[nn];
                if w.norm_sqr() == F::zero() {
                    continue;
                }
                for k in 0..dk {
                    for l in 0..dk {
                        let cur = block.get(k, l);
                        block.set(k, l, cur + w * m.get(mm * dk + k, nn * dk + l));
                    }
                }
            }
        }
        let p = block.trace_re();
        if p <= F::SPECTRAL_FLOOR {
            continue;
        }
        let proj = ComplexMatrix::outer(&e, &e);
        let posterior = kron(&proj, &block.scale(F::one() / p));
        out.push((p, DensityMatrix::from_valid(posterior)));
    }
    Ok(out)
}
