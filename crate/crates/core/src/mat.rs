//! Dense row-major complex matrices and vectors.
//!
//! Dimensions stay at desk scale (<= ~64), so everything is straightforward
//! O(n^3) dense arithmetic with no blocking or sparsity.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, C};
use num_complex::Complex;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<F: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<F>>,
}

impl<F: Scalar> ComplexMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C::new(F::zero(), F::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C::new(F::one(), F::zero());
        }
        m
    }

    /// Builds from rows, validating rectangularity and finiteness.
    pub fn from_rows(rows: Vec<Vec<C<F>>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::invalid("matrix must have at least one row and column"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("rows of unequal length"));
        }
        let data: Vec<C<F>> = rows.into_iter().flatten().collect();
        let m = ComplexMatrix { rows: data.len() / cols, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<F>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<F> {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<F>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: F) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_c(&self, s: C<F>) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// self += s * other, in place (hot-path accumulation).
    pub fn add_scaled(&mut self, other: &Self, s: F) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        for i in 0..n {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a.re == F::zero() && a.im == F::zero() {
                    continue;
                }
                let row = &other.data[l * m..(l + 1) * m];
                let dst = &mut out.data[i * m..(i + 1) * m];
                for j in 0..m {
                    dst[j] += a * row[j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C<F> {
        debug_assert!(self.is_square());
        let mut t = C::new(F::zero(), F::zero());
        for i in 0..self.rows {
            t += self.data[i * self.cols + i];
        }
        t
    }

    pub fn trace_re(&self) -> F {
        self.trace().re
    }

    /// Real part of Tr(self * other); enough for Hermitian pairings.
    pub fn trace_product_re(&self, other: &Self) -> F {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut t = F::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let b = other.data[k * other.cols + i];
                t += a.re * b.re - a.im * b.im;
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> F {
        self.data.iter().map(|z| z.norm_sqr()).sum::<F>().sqrt()
    }

    /// Largest entry magnitude; the residual norm used by validity checks.
    pub fn max_abs(&self) -> F {
        self.data.iter().map(|z| z.norm()).fold(F::zero(), F::max)
    }

    pub fn hermiticity_residual(&self) -> F {
        debug_assert!(self.is_square());
        let n = self.rows;
        let mut r = F::zero();
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                r = r.max(d.norm());
            }
        }
        r
    }

    /// (M + M^dagger) / 2: kills floating-point hermiticity drift.
    pub fn hermitize(&self) -> Self {
        debug_assert!(self.is_square());
        let n = self.rows;
        let half = F::from_f64_c(0.5);
        Self::from_fn(n, n, |i, j| {
            (self.data[i * n + j] + self.data[j * n + i].conj()) * half
        })
    }

    pub fn matvec(&self, v: &[C<F>]) -> Vec<C<F>> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C::new(F::zero(), F::zero()); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = C::new(F::zero(), F::zero());
            for j in 0..self.cols {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// <v| M |v> for square M.
    pub fn expectation(&self, v: &[C<F>]) -> C<F> {
        let mv = self.matvec(v);
        vec_inner(v, &mv)
    }

    /// |v><w| outer product.
    pub fn outer(v: &[C<F>], w: &[C<F>]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }
}

/// <v|w> with conjugation on the left argument.
pub fn vec_inner<F: Scalar>(v: &[C<F>], w: &[C<F>]) -> C<F> {
    debug_assert_eq!(v.len(), w.len());
    let mut acc = Complex::new(F::zero(), F::zero());
    for (a, b) in v.iter().zip(w) {
        acc += a.conj() * b;
    }
    acc
}

pub fn vec_norm<F: Scalar>(v: &[C<F>]) -> F {
    v.iter().map(|z| z.norm_sqr()).sum::<F>().sqrt()
}

/// Normalizes in place; errors on (numerically) zero vectors.
pub fn vec_normalize<F: Scalar>(v: &mut [C<F>]) -> Result<()> {
    let n = vec_norm(v);
    if n < F::from_f64_c(1e-30) {
        return Err(Error::invalid("cannot normalize zero vector"));
    }
    let inv = F::one() / n;
    for z in v.iter_mut() {
        *z = *z * inv;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    type M = ComplexMatrix<f64>;
    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn matmul_adjoint_trace() {
        let a = M::from_rows(vec![
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(2.0, -1.0), c(3.0, 0.0)],
        ])
        .unwrap();
        let b = a.adjoint();
        let p = a.matmul(&b);
        // p = a a^dagger is Hermitian with trace = ||a||_F^2
        assert!(p.hermiticity_residual() < 1e-15);
        let fro2 = a.frobenius_norm().powi(2);
        assert!((p.trace_re() - fro2).abs() < 1e-12);
        assert!(p.trace().im.abs() < 1e-15);
    }

    #[test]
    fn outer_and_expectation() {
        let v = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let p = M::outer(&v, &v);
        assert!((p.trace_re() - 1.0).abs() < 1e-15);
        let e = p.expectation(&v).re;
        // <v|vv^dagger|v> = |<v|v>|^2 = 1
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = M::from_rows(vec![
            vec![c(1.0, 0.5), c(0.2, -0.3)],
            vec![c(0.2, 0.3), c(-1.0, 0.0)],
        ])
        .unwrap();
        let b = M::from_rows(vec![
            vec![c(0.4, 0.0), c(0.1, 0.7)],
            vec![c(0.1, -0.7), c(2.0, 0.0)],
        ])
        .unwrap();
        let direct = a.matmul(&b).trace().re;
        assert!((a.trace_product_re(&b) - direct).abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_and_nonfinite() {
        assert!(M::from_rows(vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).is_err());
        assert!(M::from_rows(vec![vec![c(f64::NAN, 0.0)]]).is_err());
    }

    #[test]
    fn f32_instantiation_works() {
        let a: ComplexMatrix<f32> = ComplexMatrix::identity(3);
        assert!((a.trace_re() - 3.0).abs() < 1e-6);
    }
}
