//! The generic two-block sPADMM engine and its primal conic specialisation.

mod engine;
mod primal;

pub use engine::{
    run_spadmm, run_spadmm_from, semi_proximal_operators, spadmm_step, Engine, StepOutput,
};
pub use primal::{primal_two_block, run_primal_spadmm, PrimalView};

pub use crate::model::IterateState;

use crate::error::{Error, Result};
use crate::Matrix;

/// The golden ratio, the upper end of the step-length range with guaranteed convergence.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Choice of a semi-proximal operator.
#[derive(Debug, Clone, PartialEq)]
pub enum SemiProx {
    /// `0` when the block has no nonsmooth term, majorization otherwise.
    Auto,
    Zero,
    /// `λ(1 + 10⁻⁶)·I − (G + σ𝒜𝒜*)` with `λ` the largest eigenvalue of the bracket.
    Majorize,
    Explicit(Matrix),
}

/// Which iterates a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    None,
    Full,
    /// Every `k`-th iterate.
    Stride(usize),
}

impl HistoryMode {
    pub(crate) fn keeps(&self, k: usize) -> bool {
        match *self {
            HistoryMode::None => false,
            HistoryMode::Full => true,
            HistoryMode::Stride(s) => s > 0 && k.is_multiple_of(s),
        }
    }
}

/// Run parameters shared by the sPADMM and sGS-sPADMM drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SPADMMConfig {
    pub sigma: f64,
    pub tau: f64,
    pub s_rule: SemiProx,
    pub t_rule: SemiProx,
    /// Semi-proximal rule for the `y` solves of the sGS sweep.
    pub s1_rule: SemiProx,
    /// Semi-proximal rule for the `w` solves of the sGS sweep.
    pub s2_rule: SemiProx,
    pub max_iter: usize,
    pub tol_rel: f64,
    pub history: HistoryMode,
    /// Permits `τ ≥ (1+√5)/2` for divergence experiments.
    pub allow_tau_out_of_range: bool,
}

impl Default for SPADMMConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            tau: 1.618,
            s_rule: SemiProx::Auto,
            t_rule: SemiProx::Zero,
            s1_rule: SemiProx::Auto,
            s2_rule: SemiProx::Auto,
            max_iter: 10_000,
            tol_rel: 1e-8,
            history: HistoryMode::None,
            allow_tau_out_of_range: false,
        }
    }
}

impl SPADMMConfig {
    pub fn tau_in_range(&self) -> bool {
        self.tau > 0.0 && self.tau < GOLDEN
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !self.tau_in_range() && !self.allow_tau_out_of_range {
            return Err(Error::Config(format!(
                "tau = {} is outside (0, (1+√5)/2); set the override to run anyway",
                self.tau
            )));
        }
        if !(self.tol_rel >= 0.0) {
            return Err(Error::Config("tolerance must be nonnegative".into()));
        }
        if let HistoryMode::Stride(0) = self.history {
            return Err(Error::Config("history stride must be positive".into()));
        }
        Ok(())
    }
}

/// Termination status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct SolveResult<S> {
    pub state: S,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Final relative KKT residual.
    pub residual: f64,
    /// Relative KKT residual after each step (index `k−1` holds step `k`).
    pub residual_history: Vec<f64>,
    /// Recorded iterates, including the starting point when kept.
    pub history: Vec<S>,
    /// Worst subproblem optimality certificate seen over the run.
    pub worst_certificate: f64,
    pub tau_in_range: bool,
}
