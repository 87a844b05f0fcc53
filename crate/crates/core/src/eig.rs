//! Complex Hermitian eigendecomposition.
//!
//! Cyclic Jacobi with unitary 2x2 rotations: at desk-scale dimensions it is
//! simple, deterministic, and accurate to a few ulps, which the exact-identity
//! checks (residuals at 1e-9 bits) rely on. Dimensions 1 and 2 use closed
//! forms on the value-only path since they dominate the optimizer's inner
//! loop.

use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::{Scalar, C};
use num_complex::Complex;

/// Eigendecomposition of a Hermitian matrix: `values` ascending, `vectors`
/// holding the corresponding orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigH<F: Scalar> {
    pub values: Vec<F>,
    pub vectors: ComplexMatrix<F>,
}

fn check_hermitian_input<F: Scalar>(m: &ComplexMatrix<F>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid("eigendecomposition requires a square matrix"));
    }
    m.check_finite()?;
    let scale = F::one().max(m.max_abs());
    if m.hermiticity_residual() > F::TOL_ALGEBRA * scale {
        return Err(Error::invalid("matrix is not Hermitian within tolerance"));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh<F: Scalar>(m: &ComplexMatrix<F>) -> Result<Vec<F>> {
    check_hermitian_input(m)?;
    Ok(eigvalsh_unchecked(m))
}

/// Value-only path without the hermiticity check, for callers that hold
/// matrices Hermitian by construction (channel outputs in the optimizer).
pub(crate) fn eigvalsh_unchecked<F: Scalar>(m: &ComplexMatrix<F>) -> Vec<F> {
    let n = m.rows();
    match n {
        1 => vec![m.get(0, 0).re],
        2 => {
            let (l0, l1) = eigvals_2x2(m.get(0, 0).re, m.get(1, 1).re, m.get(0, 1));
            vec![l0, l1]
        }
        _ => {
            let (vals, _) = jacobi(m, false);
            vals
        }
    }
}

/// Eigenvalues of the Hermitian 2x2 [[a, b], [conj(b), d]], ascending.
#[inline]
pub fn eigvals_2x2<F: Scalar>(a: F, d: F, b: C<F>) -> (F, F) {
    let half = F::from_f64_c(0.5);
    let mid = (a + d) * half;
    let delta = (a - d) * half;
    let r = (delta * delta + b.norm_sqr()).sqrt();
    (mid - r, mid + r)
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh<F: Scalar>(m: &ComplexMatrix<F>) -> Result<EigH<F>> {
    check_hermitian_input(m)?;
    let n = m.rows();
    if n == 1 {
        return Ok(EigH {
            values: vec![m.get(0, 0).re],
            vectors: ComplexMatrix::identity(1),
        });
    }
    let (values, vectors) = jacobi(m, true);
    Ok(EigH { values, vectors: vectors.expect("vectors requested") })
}

/// Cyclic Jacobi sweeps; returns ascending eigenvalues and, if requested,
/// the matching eigenvector columns.
fn jacobi<F: Scalar>(
    m: &ComplexMatrix<F>,
    want_vectors: bool,
) -> (Vec<F>, Option<ComplexMatrix<F>>) {
    let n = m.rows();
    let mut a = m.hermitize();
    let mut v = if want_vectors { Some(ComplexMatrix::<F>::identity(n)) } else { None };

    let scale = F::one().max(a.max_abs());
    let stop = F::epsilon() * scale * F::from_f64_c(0.5);
    let max_sweeps = 80;

    for _sweep in 0..max_sweeps {
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag <= stop {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let phase = apq / mag; // e^{i phi}
                let tau = (aqq - app) / (mag + mag);
                let t = {
                    let s = if tau >= F::zero() { F::one() } else { -F::one() };
                    s / (tau.abs() + (F::one() + tau * tau).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                let se_pos = phase * s; // s e^{i phi}
                let se_neg = se_pos.conj(); // s e^{-i phi}

                // A <- J^dagger A J with J = [[c, s e^{i phi}], [-s e^{-i phi}, c]]
                // acting on the (p, q) plane. Column pass, then row pass.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c - akq * se_neg);
                    a.set(k, q, akp * se_pos + akq * c);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c - aqk * se_pos);
                    a.set(q, k, apk * se_neg + aqk * c);
                }
                let zero = Complex::new(F::zero(), F::zero());
                a.set(p, q, zero);
                a.set(q, p, zero);
                let app_new = a.get(p, p).re;
                let aqq_new = a.get(q, q).re;
                a.set(p, p, Complex::new(app_new, F::zero()));
                a.set(q, q, Complex::new(aqq_new, F::zero()));

                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm.get(k, p);
                        let vkq = vm.get(k, q);
                        vm.set(k, p, vkp * c - vkq * se_neg);
                        vm.set(k, q, vkp * se_pos + vkq * c);
                    }
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<F> = (0..n).map(|i| a.get(i, i).re).collect();
    idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));
    let values: Vec<F> = idx.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|vm| {
        ComplexMatrix::from_fn(n, n, |r, cidx| vm.get(r, idx[cidx]))
    });
    (values, vectors)
}

/// V diag(f(lambda)) V^dagger for a Hermitian matrix.
pub fn hermitian_function<F: Scalar>(
    m: &ComplexMatrix<F>,
    f: impl Fn(F) -> F,
) -> Result<ComplexMatrix<F>> {
    let e = eigh(m)?;
    let n = m.rows();
    let fv: Vec<F> = e.values.iter().map(|&l| f(l)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            let vik = e.vectors.get(i, k) * fv[k];
            for j in 0..n {
                let add = vik * e.vectors.get(j, k).conj();
                let cur = out.get(i, j);
                out.set(i, j, cur + add);
            }
        }
    }
    Ok(out)
}

/// log2 of a PSD matrix with eigenvalues clipped at `floor`; used to build
/// relative-entropy linear terms where strict support handling happens on
/// the caller side.
pub fn hermitian_log2_clipped<F: Scalar>(
    m: &ComplexMatrix<F>,
    floor: F,
) -> Result<ComplexMatrix<F>> {
    hermitian_function(m, |l| l.max(floor).log2())
}
