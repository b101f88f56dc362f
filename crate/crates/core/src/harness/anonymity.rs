//! Statistical sender and receiver anonymity tests.
//!
//! Each trial's coalition view is reduced to a vector of named features.
//! Every feature is tested for independence from the sender's identity
//! (and, separately, the receiver's) with a χ² test, Bonferroni-adjusted
//! over the features tested, after pooling rare values. A split-half majority classifier estimates the
//! best-guess rate, compared with `1/(n - t) + 3σ`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::{self, ChiSquare};
use super::{map_trials, Assignment, BatchSpec};
use crate::adversary::{Forgery, StrategySpec};
use crate::net::{Channel, Event, Scope};
use crate::protocol::ProtocolConfig;
use crate::{Error, Result};

/// Significance level of every independence test.
pub const ALPHA: f64 = 1e-3;

/// Feature values seen fewer times than this are pooled before the χ²
/// test, which is unreliable on sparse cells.
pub const RARE: usize = 10;

/// Minimum trials per candidate identity.
pub const MIN_TRIALS_PER_IDENTITY: usize = 500;

/// Strategies the anonymity acceptance check covers.
pub fn anonymity_strategies() -> Vec<StrategySpec> {
    vec![
        StrategySpec::HonestCurious,
        StrategySpec::GhzForger(Forgery::Product),
        StrategySpec::GhzForger(Forgery::Classical),
        StrategySpec::GhzForger(Forgery::EntangledAncilla),
        StrategySpec::ParityLiar,
        StrategySpec::AbortForcer(1),
        StrategySpec::AbortForcer(3),
        StrategySpec::AbortForcer(6),
        StrategySpec::AbortForcer(7),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymitySpec {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub corrupt: BTreeSet<usize>,
    pub strategy: StrategySpec,
    pub trials_per_identity: usize,
    pub seed: u64,
}

impl AnonymitySpec {
    pub fn new(n: usize, corrupt: impl IntoIterator<Item = usize>, strategy: StrategySpec) -> Self {
        Self {
            n,
            m: 1,
            s: 3,
            corrupt: corrupt.into_iter().collect(),
            strategy,
            trials_per_identity: MIN_TRIALS_PER_IDENTITY,
            seed: 0,
        }
    }

    pub fn honest(&self) -> Vec<usize> {
        (0..self.n).filter(|p| !self.corrupt.contains(p)).collect()
    }

    pub fn batch(&self) -> Result<BatchSpec> {
        let honest = self.honest();
        if honest.len() < 2 {
            return Err(Error::InvalidConfig(
                "anonymity needs at least two honest parties".into(),
            ));
        }
        if self.trials_per_identity < MIN_TRIALS_PER_IDENTITY {
            return Err(Error::InsufficientTrials(format!(
                "{} trials per identity, need at least {MIN_TRIALS_PER_IDENTITY}",
                self.trials_per_identity
            )));
        }
        let cfg = ProtocolConfig::new(self.n, self.m, self.s, honest[0], honest[1])
            .with_corrupt(self.corrupt.iter().copied())
            .with_seed(self.seed);
        Ok(
            BatchSpec::new(cfg, self.strategy, self.trials_per_identity * honest.len())
                .with_assignment(Assignment::UniformHonest),
        )
    }
}

/// Named features of one coalition view.
pub type Features = Vec<(String, String)>;

fn parity(events: &[&Event]) -> String {
    if events.is_empty() {
        return "absent".into();
    }
    let p = events.iter().flat_map(|e| e.payload.iter()).fold(false, |a, &b| a ^ b);
    (p as u8).to_string()
}

/// Features of what `coalition` sees: the terminal abort tag, the number of
/// rounds, and for every honest party the parities of its step-5 and step-7.2
/// broadcasts and of its DC-net shares with the coalition's pads removed;
/// plus the private outputs the coalition received.
pub fn view_features(events: &[Event], coalition: &BTreeSet<usize>, n: usize) -> Features {
    let visible: Vec<&Event> = events.iter().filter(|e| e.visible_to(coalition)).collect();
    let mut out = Features::new();
    let outcome = visible
        .iter()
        .find(|e| e.channel == Channel::Abort)
        .map(|e| e.step.clone())
        .unwrap_or_else(|| "completed".into());
    out.push(("outcome".into(), outcome));
    out.push(("rounds".into(), visible.last().map_or(0, |e| e.round).to_string()));
    for h in (0..n).filter(|p| !coalition.contains(p)) {
        let broadcasts = |step: &str| -> Vec<&Event> {
            visible
                .iter()
                .filter(|e| e.channel == Channel::Broadcast && e.emitter == Some(h) && e.step == step)
                .copied()
                .collect()
        };
        out.push((format!("step5[{h}]"), parity(&broadcasts("5"))));
        out.push((format!("return[{h}]"), parity(&broadcasts("7.2"))));
        let shares: Vec<&Event> = visible
            .iter()
            .filter(|e| {
                (e.channel == Channel::Publish && e.emitter == Some(h))
                    || (e.channel == Channel::Pad && e.scope.includes(h))
            })
            .copied()
            .collect();
        out.push((format!("shares[{h}]"), parity(&shares)));
    }
    let private: String = visible
        .iter()
        .filter(|e| e.channel == Channel::Output && matches!(e.scope, Scope::Parties(_)))
        .flat_map(|e| e.payload.iter().map(|b| if *b { '1' } else { '0' }))
        .collect();
    out.push(("private-outputs".into(), private));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTest {
    pub feature: String,
    pub categories: usize,
    pub chi2: ChiSquare,
    /// Bonferroni-adjusted p-value.
    pub adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `"sender"` or `"receiver"`.
    pub target: String,
    pub identities: Vec<usize>,
    pub trials_per_identity: BTreeMap<usize, usize>,
    /// Empirical distribution of the terminal outcome per identity.
    pub outcome_distribution: BTreeMap<usize, BTreeMap<String, f64>>,
    pub tests: Vec<FeatureTest>,
    pub min_adjusted_p: f64,
    pub guess_rate: f64,
    pub guess_sigma: f64,
    /// `1/(n - t)`.
    pub guess_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymityReport {
    pub strategy: String,
    pub n: usize,
    pub corrupt: BTreeSet<usize>,
    pub trials: usize,
    pub alpha: f64,
    pub sender: IdentityReport,
    pub receiver: IdentityReport,
    pub pass: bool,
}

/// Independence and guess-rate analysis of `(features, identity)` samples.
pub fn analyse(target: &str, samples: &[(Features, usize)], honest: usize) -> IdentityReport {
    let mut identities: BTreeSet<usize> = BTreeSet::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut outcomes: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    for (f, id) in samples {
        identities.insert(*id);
        *counts.entry(*id).or_default() += 1;
        *outcomes.entry(*id).or_default().entry(f[0].1.clone()).or_default() += 1.0;
    }
    for (id, dist) in outcomes.iter_mut() {
        let total = counts[id] as f64;
        dist.values_mut().for_each(|v| *v /= total);
    }
    let names: Vec<String> = samples
        .first()
        .map(|(f, _)| f.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut tests: Vec<FeatureTest> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
            for (f, _) in samples {
                *totals.entry(f[i].1.as_str()).or_default() += 1;
            }
            let column: Vec<(String, usize)> = samples
                .iter()
                .map(|(f, id)| {
                    let v = &f[i].1;
                    let v = if totals[v.as_str()] < RARE {
                        "rare".to_string()
                    } else {
                        v.clone()
                    };
                    (v, *id)
                })
                .collect();
            let table = stats::contingency(&column);
            FeatureTest {
                feature: name.clone(),
                categories: table.len(),
                chi2: stats::chi_square_independence(&table),
                adjusted_p: 1.0,
            }
        })
        .collect();
    let informative = tests.iter().filter(|t| t.chi2.df > 0).count().max(1);
    for t in &mut tests {
        t.adjusted_p = (t.chi2.p_value * informative as f64).min(1.0);
    }
    let min_adjusted_p = tests.iter().map(|t| t.adjusted_p).fold(1.0, f64::min);
    let vectors: Vec<(Vec<String>, usize)> = samples
        .iter()
        .map(|(f, id)| (f.iter().map(|(_, v)| v.clone()).collect(), *id))
        .collect();
    let (guess_rate, tested) = stats::split_half_guess_rate(&vectors);
    let guess_bound = 1.0 / honest as f64;
    let guess_sigma = stats::binomial_sigma(guess_bound, tested);
    let pass = min_adjusted_p > ALPHA && guess_rate <= guess_bound + 3.0 * guess_sigma;
    IdentityReport {
        target: target.into(),
        identities: identities.into_iter().collect(),
        trials_per_identity: counts,
        outcome_distribution: outcomes,
        tests,
        min_adjusted_p,
        guess_rate,
        guess_sigma,
        guess_bound,
        pass,
    }
}

pub fn anonymity_test(spec: &AnonymitySpec) -> Result<AnonymityReport> {
    let batch = spec.batch()?;
    let coalition = spec.corrupt.clone();
    let samples = map_trials(&batch, |_, cfg, _, events| {
        Ok((
            view_features(&events, &coalition, spec.n),
            cfg.sender.expect("assigned"),
            cfg.receiver,
        ))
    })?;
    let honest = spec.honest().len();
    let by_sender: Vec<(Features, usize)> = samples.iter().map(|(f, s, _)| (f.clone(), *s)).collect();
    let by_receiver: Vec<(Features, usize)> = samples.into_iter().map(|(f, _, r)| (f, r)).collect();
    let sender = analyse("sender", &by_sender, honest);
    let receiver = analyse("receiver", &by_receiver, honest);
    Ok(AnonymityReport {
        strategy: spec.strategy.to_string(),
        n: spec.n,
        corrupt: spec.corrupt.clone(),
        trials: batch.trials,
        alpha: ALPHA,
        pass: sender.pass && receiver.pass,
        sender,
        receiver,
    })
}
