//! Command-line front end: single runs, batches, anonymity tests, fail-safe
//! audits and transcript replay.
//!
//! Every subcommand prints one JSON document on stdout. Exit status is 0
//! when all assertions hold, 1 when one fails (the document then carries
//! `"status": "fail"` and a `failures` list), and 2 on usage or I/O errors.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use anonq::adversary::StrategySpec;
use anonq::harness::anonymity::{anonymity_test, AnonymitySpec, MIN_TRIALS_PER_IDENTITY};
use anonq::harness::audit::{classify, classify_record, exception_budget, fidelity_audit, Disposition};
use anonq::harness::exact::exact_anonymity;
use anonq::harness::{self, replay, run_batch, run_trial, write_json, Assignment, BatchSpec, Transcript};
use anonq::protocol::{ProtocolConfig, PsiHolder};
use anonq::{Error, Result};

#[derive(Parser)]
#[command(name = "anonq", version, about = "Anonymous quantum message transmission simulator")]
struct Cli {
    /// TOML file with parameter defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol execution and optionally save its transcript.
    Run(Params),
    /// Run a batch of trials with seeds `seed, seed + 1, ...`.
    Batch(Params),
    /// Test sender and receiver anonymity against the coalition.
    AnonymityTest {
        #[command(flatten)]
        params: Params,
        /// Exact enumeration at n = 3, m = 1, s = 1 instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Check that the message always ends with the sender or the receiver.
    FidelityAudit(Params),
    /// Re-run transcripts (files or directories) and compare hashes.
    Replay {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

/// Parameters shared by the simulation subcommands. Every field is also a
/// key of the TOML config file.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct Params {
    /// Number of participants.
    #[arg(long)]
    n: Option<usize>,
    /// Message qubits.
    #[arg(long)]
    m: Option<usize>,
    /// Security parameter.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    sender: Option<usize>,
    #[arg(long)]
    receiver: Option<usize>,
    /// Corrupt participants, comma separated.
    #[arg(long, value_delimiter = ',')]
    corrupt: Option<Vec<usize>>,
    /// Strategy name, e.g. `honest-curious`, `ghz-forger:product`, `abort-forcer:6`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (`run`) or directory (other subcommands).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sender/receiver policy for batches: `fixed` or `uniform-honest`.
    #[arg(long)]
    assignment: Option<String>,
}

impl Params {
    fn or(self, base: Params) -> Params {
        Params {
            n: self.n.or(base.n),
            m: self.m.or(base.m),
            s: self.s.or(base.s),
            sender: self.sender.or(base.sender),
            receiver: self.receiver.or(base.receiver),
            corrupt: self.corrupt.or(base.corrupt),
            strategy: self.strategy.or(base.strategy),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            assignment: self.assignment.or(base.assignment),
        }
    }

    fn strategy(&self) -> Result<StrategySpec> {
        self.strategy.as_deref().unwrap_or("honest-curious").parse()
    }

    fn corrupt(&self) -> BTreeSet<usize> {
        self.corrupt.clone().unwrap_or_default().into_iter().collect()
    }

    fn protocol_config(&self) -> Result<ProtocolConfig> {
        let n = self.n.unwrap_or(4);
        let cfg = ProtocolConfig::new(
            n,
            self.m.unwrap_or(1),
            self.s.unwrap_or(4),
            self.sender.unwrap_or(1),
            self.receiver.unwrap_or(2),
        )
        .with_corrupt(self.corrupt())
        .with_seed(self.seed.unwrap_or(0));
        cfg.validate()?;
        Ok(cfg)
    }

    fn batch(&self, default_trials: usize) -> Result<BatchSpec> {
        let assignment: Assignment = self.assignment.as_deref().unwrap_or("fixed").parse()?;
        let spec = BatchSpec::new(
            self.protocol_config()?,
            self.strategy()?,
            self.trials.unwrap_or(default_trials),
        )
        .with_assignment(assignment);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Serialize)]
struct Failure {
    check: String,
    detail: String,
}

fn failure(check: &str, detail: impl Into<String>) -> Failure {
    Failure {
        check: check.into(),
        detail: detail.into(),
    }
}

struct Outcome {
    command: &'static str,
    report: Value,
    failures: Vec<Failure>,
}

fn load_config(path: Option<&Path>) -> Result<Params> {
    let Some(path) = path else {
        return Ok(Params::default());
    };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn cmd_run(p: &Params) -> Result<Outcome> {
    let cfg = p.protocol_config()?;
    let strategy = p.strategy()?;
    let (outcome, events) = run_trial(&cfg, strategy)?;
    let transcript = Transcript {
        config: cfg.clone(),
        strategy,
        events,
    };
    if let Some(out) = &p.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        transcript.write(out)?;
    }
    let mut failures = Vec::new();
    let violations = outcome.ghz_form.iter().filter(|r| !r.holds).count();
    if violations > 0 {
        failures.push(failure(
            "ghz_form",
            format!("{violations} verified instances off the expected form"),
        ));
    }
    let disposition = classify(&cfg, &outcome);
    if disposition == Disposition::Exception {
        failures.push(failure(
            "fail-safe",
            format!("{:?} with the message {:?}", outcome.status, outcome.psi_holder),
        ));
    }
    let record = harness::TrialRecord::new(0, &cfg, &outcome, transcript.hash());
    Ok(Outcome {
        command: "run",
        report: json!({
            "strategy": strategy.to_string(),
            "disposition": disposition,
            "trial": record,
            "resources": outcome.resources,
        }),
        failures,
    })
}

fn cmd_batch(p: &Params) -> Result<Outcome> {
    let spec = p.batch(100)?;
    let report = run_batch(&spec, p.out.as_deref())?;
    let mut failures = Vec::new();
    let summary = &report.summary;
    if summary.ghz_form_violations > 0 {
        failures.push(failure(
            "ghz_form",
            format!(
                "{} of {} instances violated",
                summary.ghz_form_violations, summary.ghz_form_instances
            ),
        ));
    }
    let s = spec.config.s;
    let dispositions: Vec<Disposition> = report
        .records
        .iter()
        .map(|r| classify_record(&spec.config, r))
        .collect();
    let audited = dispositions.iter().filter(|d| d.audited()).count();
    let exceptions = dispositions.iter().filter(|d| **d == Disposition::Exception).count();
    let exception_rate = exceptions as f64 / audited.max(1) as f64;
    if exception_rate > exception_budget(s) {
        failures.push(failure(
            "fail-safe",
            format!("exception rate {exception_rate:.4} > {:.4}", exception_budget(s)),
        ));
    }
    let delivered = report
        .records
        .iter()
        .filter(|r| r.psi_holder == PsiHolder::Receiver)
        .count();
    let delivery_rate = delivered as f64 / report.records.len() as f64;
    let all_honest = spec.config.corrupt.is_empty();
    if all_honest {
        let bound = 1.0 - 2f64.powi(2 - s as i32);
        if delivery_rate < bound {
            failures.push(failure(
                "correctness",
                format!("delivery rate {delivery_rate:.4} < {bound:.4}"),
            ));
        }
    }
    Ok(Outcome {
        command: "batch",
        report: json!({
            "strategy": report.strategy,
            "trials": spec.trials,
            "summary": summary,
            "delivery_rate": delivery_rate,
            "exception_rate": exception_rate,
            "out": p.out,
        }),
        failures,
    })
}

fn cmd_anonymity(p: &Params, exact: bool) -> Result<Outcome> {
    let strategy = p.strategy()?;
    if exact {
        let r = exact_anonymity(strategy)?;
        let failures = r
            .checks
            .iter()
            .filter(|c| c.total_variation >= anonq::harness::exact::EXACT_TOLERANCE)
            .map(|c| failure(&c.name, format!("total variation {:e}", c.total_variation)))
            .collect();
        return Ok(Outcome {
            command: "anonymity-test",
            report: serde_json::to_value(&r)?,
            failures,
        });
    }
    let corrupt = p.corrupt.clone().unwrap_or_else(|| vec![0]);
    let mut spec = AnonymitySpec::new(p.n.unwrap_or(4), corrupt, strategy);
    spec.m = p.m.unwrap_or(spec.m);
    spec.s = p.s.unwrap_or(spec.s);
    spec.seed = p.seed.unwrap_or(0);
    spec.trials_per_identity = p.trials.unwrap_or(MIN_TRIALS_PER_IDENTITY);
    let r = anonymity_test(&spec)?;
    if let Some(dir) = &p.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("anonymity.json"), &r)?;
    }
    let mut failures = Vec::new();
    for side in [&r.sender, &r.receiver] {
        for t in side.tests.iter().filter(|t| t.adjusted_p <= r.alpha) {
            failures.push(failure(
                &format!("{} independence", side.target),
                format!("{}: adjusted p {:.2e}", t.feature, t.adjusted_p),
            ));
        }
        if side.guess_rate > side.guess_bound + 3.0 * side.guess_sigma {
            failures.push(failure(
                &format!("{} guess rate", side.target),
                format!(
                    "{:.4} > {:.4} + 3 x {:.4}",
                    side.guess_rate, side.guess_bound, side.guess_sigma
                ),
            ));
        }
    }
    Ok(Outcome {
        command: "anonymity-test",
        report: serde_json::to_value(&r)?,
        failures,
    })
}

fn cmd_audit(p: &Params) -> Result<Outcome> {
    let spec = p.batch(200)?;
    let r = fidelity_audit(&spec)?;
    if let Some(dir) = &p.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("audit.json"), &r)?;
    }
    let failures = if r.pass {
        Vec::new()
    } else {
        vec![failure(
            "fail-safe",
            format!(
                "exception rate {:.4} > {:.4} (trials {:?})",
                r.exception_rate, r.budget, r.exception_trials
            ),
        )]
    };
    Ok(Outcome {
        command: "fidelity-audit",
        report: serde_json::to_value(&r)?,
        failures,
    })
}

fn transcript_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|f| f.extension().is_some_and(|x| x == "txt"));
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn cmd_replay(paths: &[PathBuf]) -> Result<Outcome> {
    let files = transcript_files(paths)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for f in &files {
        let r = match replay(f) {
            Ok(r) => r,
            Err(e @ Error::Transcript { .. }) => {
                failures.push(failure("replay", format!("{}: {e}", f.display())));
                continue;
            }
            Err(e) => return Err(e),
        };
        if !r.matches {
            failures.push(failure(
                "replay",
                format!(
                    "{}: hash {} != {} (first differing event {:?})",
                    f.display(),
                    r.actual_hash,
                    r.expected_hash,
                    r.first_difference
                ),
            ));
        }
        results.push(json!({ "path": f, "result": r }));
    }
    if files.is_empty() {
        failures.push(failure("replay", "no transcripts found"));
    }
    Ok(Outcome {
        command: "replay",
        report: json!({ "transcripts": results }),
        failures,
    })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let base = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Run(p) => cmd_run(&p.or(base)),
        Command::Batch(p) => cmd_batch(&p.or(base)),
        Command::AnonymityTest { params, exact } => cmd_anonymity(&params.or(base), exact),
        Command::FidelityAudit(p) => cmd_audit(&p.or(base)),
        Command::Replay { paths } => cmd_replay(&paths),
    }
}

/// Prints to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(o) => {
            let pass = o.failures.is_empty();
            let doc = json!({
                "status": if pass { "pass" } else { "fail" },
                "command": o.command,
                "failures": o.failures,
                "report": o.report,
            });
            emit(&serde_json::to_string_pretty(&doc).expect("serialisable"));
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            emit(&json!({ "status": "error", "error": e.to_string() }).to_string());
            ExitCode::from(2)
        }
    }
}
