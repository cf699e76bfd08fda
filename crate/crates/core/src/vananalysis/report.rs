use super::certify::CertifiedKKT;
use super::verdicts::{dd_system_test, sosc_dual, sosc_primal, srcq_dual, srcq_primal};
use super::{ConditionVerdict, Method, VerdictStatus};
use crate::error::Result;
use serde::Serialize;

/// A compound statement evaluated from individual verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundItem {
    pub name: &'static str,
    pub status: VerdictStatus,
}

/// All verdicts at one certificate together with the equivalence check.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub subspace_regime: bool,
    pub beta_size: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub primal_unique: ConditionVerdict,
    pub dual_unique: ConditionVerdict,
    pub sosc_primal: ConditionVerdict,
    pub sosc_dual: ConditionVerdict,
    pub srcq_primal: ConditionVerdict,
    pub srcq_dual: ConditionVerdict,
    pub dd_system: ConditionVerdict,
    /// `both SOSC`, `both SRCQ`, `primal SOSC + primal SRCQ`,
    /// `dual SOSC + dual SRCQ`, `calmness`.
    pub items: Vec<CompoundItem>,
    /// True when every determined item carries the same status.
    pub consistent: bool,
    /// Items whose determined status differs from the first determined one.
    pub disagreements: Vec<&'static str>,
}

fn both(a: VerdictStatus, b: VerdictStatus) -> VerdictStatus {
    use VerdictStatus::*;
    match (a, b) {
        (Fails, _) | (_, Fails) => Fails,
        (Holds, Holds) => Holds,
        _ => Undetermined,
    }
}

impl ConsistencyReport {
    /// Builds the compound items and agreement flags from given verdicts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_verdicts(
        cert: &CertifiedKKT,
        sosc_primal: ConditionVerdict,
        sosc_dual: ConditionVerdict,
        srcq_primal: ConditionVerdict,
        srcq_dual: ConditionVerdict,
        dd_system: ConditionVerdict,
    ) -> Self {
        let items = vec![
            CompoundItem {
                name: "sosc-both",
                status: both(sosc_primal.status, sosc_dual.status),
            },
            CompoundItem {
                name: "srcq-both",
                status: both(srcq_primal.status, srcq_dual.status),
            },
            CompoundItem {
                name: "primal-sosc-and-srcq",
                status: both(sosc_primal.status, srcq_primal.status),
            },
            CompoundItem {
                name: "dual-sosc-and-srcq",
                status: both(sosc_dual.status, srcq_dual.status),
            },
            CompoundItem {
                name: "calmness",
                status: dd_system.status,
            },
        ];
        let mut determined = items
            .iter()
            .filter(|i| i.status != VerdictStatus::Undetermined);
        let first = determined.next().map(|i| i.status);
        let disagreements: Vec<&'static str> = match first {
            Some(s) => items
                .iter()
                .filter(|i| i.status != VerdictStatus::Undetermined && i.status != s)
                .map(|i| i.name)
                .collect(),
            None => Vec::new(),
        };
        Self {
            subspace_regime: cert.subspace_regime(),
            beta_size: cert.beta_size(),
            primal_residual: cert.primal_residual,
            dual_residual: cert.dual_residual,
            primal_unique: cert.primal_unique.clone(),
            dual_unique: cert.dual_unique.clone(),
            sosc_primal,
            sosc_dual,
            srcq_primal,
            srcq_dual,
            dd_system,
            consistent: disagreements.is_empty(),
            disagreements,
            items,
        }
    }

    pub fn verdicts(&self) -> [&ConditionVerdict; 5] {
        [
            &self.sosc_primal,
            &self.sosc_dual,
            &self.srcq_primal,
            &self.srcq_dual,
            &self.dd_system,
        ]
    }

    /// True when all five verdicts were decided by exact subspace tests.
    pub fn all_exact(&self) -> bool {
        self.verdicts()
            .iter()
            .all(|v| v.method == Method::ExactSubspace)
    }

    /// In the subspace regime, a disagreement among determined items.
    pub fn contradiction(&self) -> bool {
        self.subspace_regime && !self.consistent
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evaluates every condition at the certificate.
pub fn consistency_report(cert: &CertifiedKKT) -> Result<ConsistencyReport> {
    Ok(ConsistencyReport::from_verdicts(
        cert,
        sosc_primal(cert)?,
        sosc_dual(cert)?,
        srcq_primal(cert)?,
        srcq_dual(cert)?,
        dd_system_test(cert)?,
    ))
}
