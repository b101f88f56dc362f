//! Trial batches, transcripts, reports and the statistical checks run on
//! top of them.

pub mod anonymity;
pub mod audit;
pub mod exact;
pub mod stats;
pub mod transcript;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::StrategySpec;
use crate::net::Event;
use crate::protocol::{self, ProtocolConfig, PsiHolder, RunOutcome, RunStatus};
use crate::qsim::{random_state, Complex};
use crate::{Error, Result};

pub use transcript::Transcript;

/// ChaCha stream reserved for the message state of a trial.
const PSI_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// Sender and receiver as given in the template.
    #[default]
    Fixed,
    /// Trial `i` uses the `i mod k`-th of the `k` ordered pairs of distinct
    /// honest parties, so every pair is used equally often.
    UniformHonest,
}

impl std::str::FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Assignment::Fixed),
            "uniform-honest" | "uniform" => Ok(Assignment::UniformHonest),
            _ => Err(Error::InvalidConfig(format!("unknown assignment policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    /// Template configuration; its seed is the base seed.
    pub config: ProtocolConfig,
    pub strategy: StrategySpec,
    pub trials: usize,
    #[serde(default)]
    pub assignment: Assignment,
}

impl BatchSpec {
    pub fn new(config: ProtocolConfig, strategy: StrategySpec, trials: usize) -> Self {
        Self {
            config,
            strategy,
            trials,
            assignment: Assignment::Fixed,
        }
    }

    pub fn with_assignment(mut self, assignment: Assignment) -> Self {
        self.assignment = assignment;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trial count must be at least 1".into()));
        }
        if self.assignment == Assignment::UniformHonest && self.config.honest().len() < 2 {
            return Err(Error::InvalidConfig(
                "uniform assignment needs two honest parties".into(),
            ));
        }
        self.trial_config(0).validate()
    }

    /// Ordered pairs of distinct honest parties.
    pub fn honest_pairs(&self) -> Vec<(usize, usize)> {
        let honest = self.config.honest();
        let mut out = Vec::new();
        for &s in &honest {
            for &r in &honest {
                if s != r {
                    out.push((s, r));
                }
            }
        }
        out
    }

    /// Configuration of trial `index`: seed `base + index`, and the pair
    /// chosen by the assignment policy.
    pub fn trial_config(&self, index: usize) -> ProtocolConfig {
        let mut cfg = self.config.clone();
        cfg.seed = self.config.seed.wrapping_add(index as u64);
        if self.assignment == Assignment::UniformHonest {
            let pairs = self.honest_pairs();
            if !pairs.is_empty() {
                let (s, r) = pairs[index % pairs.len()];
                cfg.sender = Some(s);
                cfg.receiver = r;
            }
        }
        cfg
    }
}

/// A configuration exercising `strategy` with sender 1 and receiver
/// `n - 1`. The coalition is the distributor plus participant 2 (when
/// `n >= 4`), or just the receiver for strategies that need it corrupt.
pub fn catalog_config(strategy: StrategySpec, n: usize, m: usize, s: usize) -> ProtocolConfig {
    let cfg = ProtocolConfig::new(n, m, s, 1, n - 1);
    if strategy.requires_corrupt_receiver() {
        cfg.with_corrupt([n - 1])
    } else if n >= 4 {
        cfg.with_corrupt([0, 2])
    } else {
        cfg.with_corrupt([0])
    }
}

/// The message state of a trial, derived from its seed alone.
pub fn trial_psi(cfg: &ProtocolConfig) -> Vec<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PSI_STREAM);
    random_state(cfg.m, &mut rng)
}

/// One trial with its seed-derived message state.
pub fn run_trial(cfg: &ProtocolConfig, strategy: StrategySpec) -> Result<(RunOutcome, Vec<Event>)> {
    protocol::run(cfg, &trial_psi(cfg), strategy.build().as_mut())
}

/// Runs every trial of `spec` in parallel and maps each result through `f`.
pub fn map_trials<T, F>(spec: &BatchSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &ProtocolConfig, RunOutcome, Vec<Event>) -> Result<T> + Sync,
{
    spec.validate()?;
    (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let cfg = spec.trial_config(i);
            let (outcome, events) = run_trial(&cfg, spec.strategy)?;
            f(i, &cfg, outcome, events)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub sender: Option<usize>,
    pub receiver: usize,
    pub status: RunStatus,
    pub psi_holder: PsiHolder,
    pub delivered_fidelity: Option<f64>,
    pub ghz_form_instances: usize,
    pub ghz_form_violations: usize,
    pub privacy_lost_possible: bool,
    pub quantum_receiver: Option<usize>,
    pub transcript_hash: String,
    pub view_digest: String,
}

impl TrialRecord {
    pub fn new(index: usize, cfg: &ProtocolConfig, outcome: &RunOutcome, transcript_hash: String) -> Self {
        Self {
            index,
            seed: cfg.seed,
            sender: cfg.sender,
            receiver: cfg.receiver,
            status: outcome.status.clone(),
            psi_holder: outcome.psi_holder,
            delivered_fidelity: outcome.delivered_fidelity,
            ghz_form_instances: outcome.ghz_form.len(),
            ghz_form_violations: outcome.ghz_form.iter().filter(|r| !r.holds).count(),
            privacy_lost_possible: outcome.privacy_lost_possible,
            quantum_receiver: outcome.quantum_receiver,
            transcript_hash,
            view_digest: outcome.view_digest.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub successes: usize,
    pub vacuous: usize,
    /// Abort counts by step tag.
    pub aborts: BTreeMap<String, usize>,
    /// Successes over non-vacuous trials.
    pub success_rate: f64,
    pub min_success_fidelity: Option<f64>,
    pub ghz_form_instances: usize,
    pub ghz_form_violations: usize,
}

impl BatchSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut s = BatchSummary {
            trials: records.len(),
            ..Default::default()
        };
        for r in records {
            match &r.status {
                RunStatus::Success => {
                    s.successes += 1;
                    if let Some(f) = r.delivered_fidelity {
                        s.min_success_fidelity = Some(s.min_success_fidelity.map_or(f, |m: f64| m.min(f)));
                    }
                }
                RunStatus::Abort(tag) => *s.aborts.entry(tag.clone()).or_default() += 1,
                RunStatus::Vacuous => s.vacuous += 1,
            }
            s.ghz_form_instances += r.ghz_form_instances;
            s.ghz_form_violations += r.ghz_form_violations;
        }
        s.success_rate = s.successes as f64 / (s.trials - s.vacuous).max(1) as f64;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub spec: BatchSpec,
    pub strategy: String,
    pub summary: BatchSummary,
    pub records: Vec<TrialRecord>,
}

pub fn transcript_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("trial-{index:06}.txt"))
}

pub const REPORT_FILE: &str = "report.json";

/// Runs a batch. With `out_dir`, writes one transcript per trial and the
/// aggregate report there.
pub fn run_batch(spec: &BatchSpec, out_dir: Option<&Path>) -> Result<BatchReport> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let records = map_trials(spec, |i, cfg, outcome, events| {
        let t = Transcript {
            config: cfg.clone(),
            strategy: spec.strategy,
            events,
        };
        let text = t.render();
        if let Some(dir) = out_dir {
            std::fs::write(transcript_path(dir, i), &text)?;
        }
        Ok(TrialRecord::new(i, cfg, &outcome, transcript::hash_text(&text)))
    })?;
    let report = BatchReport {
        spec: spec.clone(),
        strategy: spec.strategy.to_string(),
        summary: BatchSummary::from_records(&records),
        records,
    };
    if let Some(dir) = out_dir {
        write_json(&dir.join(REPORT_FILE), &report)?;
    }
    Ok(report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub expected_hash: String,
    pub actual_hash: String,
    pub matches: bool,
    /// Index of the first differing event line, if any.
    pub first_difference: Option<usize>,
}

/// Re-runs the configuration and strategy in a transcript's header and
/// compares the regenerated transcript with the stored text.
pub fn replay_text(text: &str) -> Result<ReplayResult> {
    let stored = Transcript::parse(text)?;
    let (_, events) = run_trial(&stored.config, stored.strategy)?;
    let fresh = Transcript {
        config: stored.config.clone(),
        strategy: stored.strategy,
        events,
    };
    let expected_hash = transcript::hash_text(text);
    let actual_hash = fresh.hash();
    let first_difference = stored
        .events
        .iter()
        .zip(&fresh.events)
        .position(|(a, b)| a != b)
        .or_else(|| (stored.events.len() != fresh.events.len()).then(|| stored.events.len().min(fresh.events.len())));
    Ok(ReplayResult {
        matches: expected_hash == actual_hash,
        expected_hash,
        actual_hash,
        first_difference,
    })
}

pub fn replay(path: &Path) -> Result<ReplayResult> {
    replay_text(&std::fs::read_to_string(path)?)
}
