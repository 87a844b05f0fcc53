//! Seeded random generators for states, effects, ensembles, and unitaries.
//!
//! Every generator is a pure function of its seed (or of a caller-owned
//! stream), so fixed seeds reproduce bit-identical objects across runs.

use crate::channel::{ChannelFamily, KrausChannel};
use crate::error::{Error, Result};
use crate::mat::{vec_inner, vec_normalize, ComplexMatrix};
use crate::scalar::{Scalar, C};
use crate::state::{DensityMatrix, Ensemble, HermitianOperator};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The crate's deterministic stream type.
pub type Stream = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> Stream {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derives an independent substream, used to give restarts and instances
/// their own reproducible randomness.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut root = ChaCha12Rng::seed_from_u64(seed);
    root.set_stream(index.wrapping_add(1));
    root
}

/// Standard normal via Box-Muller; avoids a distributions dependency.
fn normal<F: Scalar>(rng: &mut Stream) -> F {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let u2: f64 = rng.gen::<f64>();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    F::from_f64_c(z)
}

fn complex_normal<F: Scalar>(rng: &mut Stream) -> C<F> {
    Complex::new(normal(rng), normal(rng))
}

/// Ginibre matrix: iid complex normal entries.
pub fn ginibre<F: Scalar>(rows: usize, cols: usize, rng: &mut Stream) -> ComplexMatrix<F> {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random pure-state vector.
pub fn random_unit_vector<F: Scalar>(dim: usize, rng: &mut Stream) -> Vec<C<F>> {
    let mut v: Vec<C<F>> = (0..dim).map(|_| complex_normal(rng)).collect();
    vec_normalize(&mut v).expect("normal vector has positive norm");
    v
}

/// Modified Gram-Schmidt on the columns of a Ginibre sample; requires
/// rows >= cols so the columns stay independent.
fn orthonormal_columns<F: Scalar>(g: &ComplexMatrix<F>) -> Vec<Vec<C<F>>> {
    let (rows, ncols) = (g.rows(), g.cols());
    let mut cols: Vec<Vec<C<F>>> = (0..ncols)
        .map(|j| (0..rows).map(|i| g.get(i, j)).collect())
        .collect();
    for k in 0..ncols {
        for j in 0..k {
            let prev = cols[j].clone();
            let overlap = vec_inner(&prev, &cols[k]);
            for i in 0..rows {
                let sub = overlap * prev[i];
                cols[k][i] -= sub;
            }
        }
        vec_normalize(&mut cols[k]).expect("Ginibre columns are independent");
    }
    cols
}

/// Haar-random unitary: modified Gram-Schmidt on a Ginibre matrix (the
/// positive-diagonal R convention makes Q Haar-distributed).
pub fn random_unitary_with<F: Scalar>(dim: usize, rng: &mut Stream) -> ComplexMatrix<F> {
    let g = ginibre::<F>(dim, dim, rng);
    let cols = orthonormal_columns(&g);
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

pub fn random_unitary<F: Scalar>(dim: usize, seed: u64) -> ComplexMatrix<F> {
    random_unitary_with(dim, &mut rng_from_seed(seed))
}

/// Random state of the given rank: G G^dagger / Tr with G Ginibre
/// (dim x rank).
pub fn random_state_with<F: Scalar>(
    dim: usize,
    rank: usize,
    rng: &mut Stream,
) -> Result<DensityMatrix<F>> {
    if rank == 0 || rank > dim {
        return Err(Error::invalid(format!("rank {} outside 1..={}", rank, dim)));
    }
    let g = ginibre::<F>(dim, rank, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace_re();
    Ok(DensityMatrix::from_valid(m.scale(F::one() / tr)))
}

pub fn random_state<F: Scalar>(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix<F>> {
    random_state_with(dim, rank, &mut rng_from_seed(seed))
}

pub fn random_pure_with<F: Scalar>(dim: usize, rng: &mut Stream) -> DensityMatrix<F> {
    let v = random_unit_vector::<F>(dim, rng);
    DensityMatrix::pure(&v).expect("unit vector")
}

/// Random channel from a Haar isometry into output (x) environment:
/// a (dout * env) x din Ginibre is orthonormalized and sliced into `env`
/// Kraus operators. Completeness holds exactly because the columns are
/// orthonormal.
pub fn random_channel_with<F: Scalar>(
    din: usize,
    dout: usize,
    env: usize,
    rng: &mut Stream,
) -> Result<KrausChannel<F>> {
    if din == 0 || dout == 0 || env == 0 {
        return Err(Error::invalid("channel dimensions must be positive"));
    }
    if dout * env < din {
        return Err(Error::invalid(format!(
            "isometry needs dout*env >= din, got {}*{} < {}",
            dout, env, din
        )));
    }
    let g = ginibre::<F>(dout * env, din, rng);
    let cols = orthonormal_columns(&g);
    let kraus: Vec<ComplexMatrix<F>> = (0..env)
        .map(|e| ComplexMatrix::from_fn(dout, din, |i, j| cols[j][e * dout + i]))
        .collect();
    KrausChannel::new(kraus, ChannelFamily::General)
}

pub fn random_channel<F: Scalar>(
    din: usize,
    dout: usize,
    env: usize,
    seed: u64,
) -> Result<KrausChannel<F>> {
    random_channel_with(din, dout, env, &mut rng_from_seed(seed))
}

/// Random effect 0 <= E <= I: uniform spectrum conjugated by a Haar unitary.
pub fn random_effect_with<F: Scalar>(dim: usize, rng: &mut Stream) -> HermitianOperator<F> {
    let u = random_unitary_with::<F>(dim, rng);
    let spectrum: Vec<F> = (0..dim).map(|_| F::from_f64_c(rng.gen::<f64>())).collect();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let col: Vec<C<F>> = (0..dim).map(|i| u.get(i, k)).collect();
        m.add_scaled(&ComplexMatrix::outer(&col, &col), spectrum[k]);
    }
    HermitianOperator::new(m.hermitize()).expect("constructed Hermitian")
}

pub fn random_effect<F: Scalar>(dim: usize, seed: u64) -> HermitianOperator<F> {
    random_effect_with(dim, &mut rng_from_seed(seed))
}

/// Random ensemble: Dirichlet(1) weights, full-rank random states.
pub fn random_ensemble_with<F: Scalar>(
    dim: usize,
    n: usize,
    rng: &mut Stream,
) -> Result<Ensemble<F>> {
    if n == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<F> = raw.iter().map(|&w| F::from_f64_c(w / total)).collect();
    let states: Vec<DensityMatrix<F>> = (0..n)
        .map(|_| random_state_with(dim, dim, rng))
        .collect::<Result<_>>()?;
    Ensemble::new(weights, states)
}

pub fn random_ensemble<F: Scalar>(dim: usize, n: usize, seed: u64) -> Result<Ensemble<F>> {
    random_ensemble_with(dim, n, &mut rng_from_seed(seed))
}

/// Random pure-state ensemble (used as optimizer seeds).
pub fn random_pure_ensemble_with<F: Scalar>(
    dim: usize,
    n: usize,
    rng: &mut Stream,
) -> Ensemble<F> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<F> = raw.iter().map(|&w| F::from_f64_c(w / total)).collect();
    let states: Vec<DensityMatrix<F>> = (0..n).map(|_| random_pure_with(dim, rng)).collect();
    Ensemble::from_valid(weights, states)
}

/// Bipartite state with tunable entanglement: a pure state on
/// (H (x) K) (x) ancilla is built from a Schmidt spectrum interpolating
/// between a product state (bias 0) and maximal entanglement (bias 1),
/// rotated by local unitaries, then mixed slightly if rank > 1.
pub fn random_biased_entangled_with<F: Scalar>(
    dh: usize,
    dk: usize,
    bias: f64,
    rng: &mut Stream,
) -> DensityMatrix<F> {
    let d = dh.min(dk);
    let bias = bias.clamp(0.0, 1.0);
    // Schmidt coefficients: (1-bias) concentrates mass on one term.
    let mut coeffs: Vec<f64> = (0..d)
        .map(|i| if i == 0 { 1.0 } else { bias / d as f64 + 1e-6 })
        .collect();
    let norm: f64 = coeffs.iter().sum();
    for c in &mut coeffs {
        *c /= norm;
    }
    let mut v = vec![Complex::new(F::zero(), F::zero()); dh * dk];
    for i in 0..d {
        v[i * dk + i] = Complex::new(F::from_f64_c(coeffs[i].sqrt()), F::zero());
    }
    let u_h = random_unitary_with::<F>(dh, rng);
    let u_k = random_unitary_with::<F>(dk, rng);
    // (U_h (x) U_k) v
    let mut w = vec![Complex::new(F::zero(), F::zero()); dh * dk];
    for i in 0..dh {
        for k in 0..dk {
            let mut acc = Complex::new(F::zero(), F::zero());
            for i2 in 0..dh {
                for k2 in 0..dk {
                    acc += u_h.get(i, i2) * u_k.get(k, k2) * v[i2 * dk + k2];
                }
            }
            w[i * dk + k] = acc;
        }
    }
    DensityMatrix::pure(&w).expect("unit vector image under unitaries")
}
