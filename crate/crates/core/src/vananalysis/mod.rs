//! Second-order condition verdicts at certified KKT points.
//!
//! [`certify_kkt`] produces a polished primal–dual point whose residuals are
//! verified; the verdict functions then test the second-order sufficient
//! conditions, the strict constraint qualifications, multiplier uniqueness and
//! the kernel of the directional-derivative system. When the matrix pair is
//! strictly complementary and no box coordinate is degenerate, every cone in
//! play is a subspace and each verdict is an exact rank or eigenvalue test.
//! Otherwise the tests fall back to sufficient subspace bounds and searched
//! witnesses, and report `Undetermined` when neither is conclusive.
//!
//! Only the box-indicator form of `φ` is supported here.

mod certify;
mod geometry;
mod report;
mod verdicts;

#[cfg(test)]
mod tests;

pub use certify::{certify_kkt, CertifiedKKT};
pub use report::{consistency_report, CompoundItem, ConsistencyReport};
pub use verdicts::{
    dd_system_test, dual_uniqueness, primal_uniqueness, replay_witness, sosc_dual, sosc_primal,
    srcq_dual, srcq_primal, SAMPLE_COUNT,
};

use serde::Serialize;

/// Outcome of a condition test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Holds,
    Fails,
    Undetermined,
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact rank/eigenvalue test on linear subspaces.
    ExactSubspace,
    /// Subspace bounds plus witness search outside the subspace regime.
    Sampled,
}

/// The conditions tested, which also fixes the witness layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Witness `d_x`.
    SoscPrimal,
    /// Witness `(d_s, d_y, d_w, d_z)`.
    SoscDual,
    /// Witness `(h_y, h_x)` annihilating the covering sum.
    SrcqPrimal,
    /// Witness `h` annihilating the covering sum.
    SrcqDual,
    /// Witness `(d_x, d_u, d_y, d_z)` in the kernel.
    DdSystem,
    /// Witness `(d_s, d_y, d_z)`, a feasible multiplier direction.
    PrimalUniqueness,
    /// Witness `d_x`, a feasible multiplier direction.
    DualUniqueness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub status: VerdictStatus,
    pub method: Method,
    /// The deciding eigenvalue or singular value, when one exists.
    pub margin: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

impl ConditionVerdict {
    pub(crate) fn new(condition: Condition, status: VerdictStatus, method: Method) -> Self {
        Self {
            condition,
            status,
            method,
            margin: None,
            witness: None,
            detail: String::new(),
        }
    }

    pub(crate) fn margin(mut self, m: f64) -> Self {
        self.margin = Some(m);
        self
    }

    pub(crate) fn witness(mut self, w: &crate::Vector) -> Self {
        self.witness = Some(w.iter().copied().collect());
        self
    }

    pub(crate) fn detail(mut self, s: impl Into<String>) -> Self {
        self.detail = s.into();
        self
    }

    pub fn holds(&self) -> bool {
        self.status == VerdictStatus::Holds
    }

    pub fn is_determined(&self) -> bool {
        self.status != VerdictStatus::Undetermined
    }
}
