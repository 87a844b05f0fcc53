//! Optimizer configuration and the capacity result record.

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, Ensemble};
use crate::tol;

/// Knobs for the multi-start solvers. `ensemble_size` defaults to the
/// square of the input dimension (enough pure components for any
/// achievable average).
#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub ensemble_size: Option<usize>,
    /// Value slack in bits for cross-identities between independent solves.
    pub tol_value: f64,
    /// Certificate gap below which a candidate counts as converged.
    pub tol_certificate: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 6,
            max_iterations: 400,
            ensemble_size: None,
            tol_value: 1e-3,
            tol_certificate: tol::TOL_CERTIFICATE,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 || self.max_iterations < 1 {
            return Err(Error::invalid("optimizer counts must be >= 1"));
        }
        if self.ensemble_size == Some(0) {
            return Err(Error::invalid("ensemble size must be >= 1"));
        }
        if self.tol_value <= 0.0 || self.tol_certificate <= 0.0 {
            return Err(Error::invalid("optimizer tolerances must be positive"));
        }
        Ok(())
    }

    pub fn members_for(&self, din: usize) -> usize {
        self.ensemble_size.unwrap_or(din * din).max(1)
    }

    /// Derived config for auxiliary searches (certificates, duals).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}

/// Outcome of a capacity solve: the value, a witnessing ensemble, its
/// average, the optimality-certificate gap, the Kuhn-Tucker multiplier for
/// linear constraints when one was computed, and convergence bookkeeping.
#[derive(Clone, Debug)]
pub struct CapacityResult {
    pub value: f64,
    pub ensemble: Ensemble<f64>,
    pub average: DensityMatrix<f64>,
    pub certificate_gap: f64,
    pub multiplier: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}
