//! Fail-safe audit: where did the message end up?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{map_trials, BatchSpec, TrialRecord};
use crate::protocol::{ProtocolConfig, PsiHolder, RunOutcome, RunStatus};
use crate::Result;

/// Fidelity a holder must reach to count as holding the message.
pub const FIDELITY_TOLERANCE: f64 = 1e-9;

/// Allowed fraction of exceptional trials at security parameter `s`.
pub fn exception_budget(s: usize) -> f64 {
    2f64.powi(3 - s as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disposition {
    /// Success and the honest receiver holds the message.
    Delivered,
    /// Abort and the sender holds the message.
    Returned,
    /// The receiver is corrupt; the outcome is outside the audit's scope.
    CorruptReceiver,
    /// No honest sender was elected.
    Vacuous,
    /// Anything else: counts against the budget.
    Exception,
}

impl Disposition {
    pub fn of(receiver_corrupt: bool, status: &RunStatus, holder: PsiHolder, fidelity: Option<f64>) -> Self {
        if receiver_corrupt {
            return Disposition::CorruptReceiver;
        }
        let faithful = fidelity.is_some_and(|f| f > 1.0 - FIDELITY_TOLERANCE);
        match (status, holder) {
            (RunStatus::Vacuous, _) => Disposition::Vacuous,
            (RunStatus::Success, PsiHolder::Receiver) if faithful => Disposition::Delivered,
            (RunStatus::Abort(_), PsiHolder::Sender) if faithful => Disposition::Returned,
            _ => Disposition::Exception,
        }
    }

    /// Whether the fail-safe budget applies to this trial.
    pub fn audited(&self) -> bool {
        matches!(
            self,
            Disposition::Delivered | Disposition::Returned | Disposition::Exception
        )
    }
}

pub fn classify(cfg: &ProtocolConfig, outcome: &RunOutcome) -> Disposition {
    Disposition::of(
        cfg.is_corrupt(cfg.receiver),
        &outcome.status,
        outcome.psi_holder,
        outcome.delivered_fidelity,
    )
}

pub fn classify_record(config: &ProtocolConfig, record: &TrialRecord) -> Disposition {
    Disposition::of(
        config.is_corrupt(record.receiver),
        &record.status,
        record.psi_holder,
        record.delivered_fidelity,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub strategy: String,
    pub s: usize,
    pub trials: usize,
    pub counts: BTreeMap<Disposition, usize>,
    /// Trials the budget applies to (honest receiver, honest sender elected).
    pub audited: usize,
    pub exceptions: usize,
    pub exception_rate: f64,
    pub budget: f64,
    /// Indices of exceptional trials, for replay.
    pub exception_trials: Vec<usize>,
    pub min_delivered_fidelity: Option<f64>,
    pub min_returned_fidelity: Option<f64>,
    pub pass: bool,
}

pub fn fidelity_audit(spec: &BatchSpec) -> Result<AuditReport> {
    let rows = map_trials(spec, |i, cfg, outcome, _| {
        Ok((i, classify(cfg, &outcome), outcome.delivered_fidelity))
    })?;
    let mut counts: BTreeMap<Disposition, usize> = BTreeMap::new();
    let mut exception_trials = Vec::new();
    let (mut min_delivered, mut min_returned): (Option<f64>, Option<f64>) = (None, None);
    for (i, d, f) in &rows {
        *counts.entry(*d).or_default() += 1;
        let f = f.unwrap_or(0.0);
        match d {
            Disposition::Exception => exception_trials.push(*i),
            Disposition::Delivered => min_delivered = Some(min_delivered.map_or(f, |m| m.min(f))),
            Disposition::Returned => min_returned = Some(min_returned.map_or(f, |m| m.min(f))),
            _ => {}
        }
    }
    let audited: usize = counts.iter().filter(|(d, _)| d.audited()).map(|(_, c)| c).sum();
    let exceptions = exception_trials.len();
    let exception_rate = exceptions as f64 / audited.max(1) as f64;
    let budget = exception_budget(spec.config.s);
    Ok(AuditReport {
        strategy: spec.strategy.to_string(),
        s: spec.config.s,
        trials: spec.trials,
        audited,
        exceptions,
        exception_rate,
        budget,
        exception_trials,
        min_delivered_fidelity: min_delivered,
        min_returned_fidelity: min_returned,
        pass: exception_rate <= budget,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{Stage, StrategySpec};

    #[test]
    fn budget_values() {
        assert_eq!(exception_budget(3), 1.0);
        assert_eq!(exception_budget(6), 0.125);
    }

    #[test]
    fn step_seven_bitflips_are_returned() {
        let spec = BatchSpec::new(
            ProtocolConfig::new(4, 1, 6, 1, 3).with_corrupt([2]).with_seed(100),
            StrategySpec::AmtBitflipper(Stage::Step7),
            24,
        );
        let r = fidelity_audit(&spec).unwrap();
        assert!(r.pass, "{r:#?}");
        assert!(r.counts[&Disposition::Returned] >= 20);
    }

    #[test]
    fn corrupt_receivers_are_excluded() {
        let spec = BatchSpec::new(
            ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([3]).with_seed(1),
            StrategySpec::CorruptRFakeReturn,
            6,
        );
        let r = fidelity_audit(&spec).unwrap();
        assert_eq!(r.counts[&Disposition::CorruptReceiver], 6);
        assert_eq!(r.audited, 0);
    }
}
