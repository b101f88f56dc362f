//! Line-oriented transcript files.
//!
//! ```text
//! # anonq-transcript 1
//! # n=4 m=1 s=3 sender=1 receiver=3 corrupt=0 extra=- seed=42 cap=16 suppress_notification=false strategy=honest-curious
//! 1  1  0  pad  0,1  1
//! 1  1  0  publish  *  0
//! ...
//! ```
//!
//! Event lines are tab separated (shown with spaces above): round, step tag, emitter (`-` if none),
//! channel, scope (`*` or a comma list), payload bits (`-` if empty).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::adversary::StrategySpec;
use crate::net::{Event, Scope};
use crate::protocol::ProtocolConfig;
use crate::{Error, Result};

pub const MAGIC: &str = "# anonq-transcript 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: ProtocolConfig,
    pub strategy: StrategySpec,
    pub events: Vec<Event>,
}

fn bits_to_str(bits: &[bool]) -> String {
    if bits.is_empty() {
        "-".into()
    } else {
        bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

fn list<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

pub fn event_line(e: &Event) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        e.round,
        e.step,
        e.emitter.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
        e.channel,
        e.scope,
        bits_to_str(&e.payload)
    )
}

pub fn header_line(cfg: &ProtocolConfig, strategy: &StrategySpec) -> String {
    format!(
        "# n={} m={} s={} sender={} receiver={} corrupt={} extra={} seed={} cap={} suppress_notification={} strategy={}",
        cfg.n,
        cfg.m,
        cfg.s,
        cfg.sender.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
        cfg.receiver,
        list(&cfg.corrupt),
        list(&cfg.extra_requesters),
        cfg.seed,
        cfg.qubit_cap,
        cfg.suppress_notification,
        strategy
    )
}

impl Transcript {
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "{}", header_line(&self.config, &self.strategy)).unwrap();
        for e in &self.events {
            writeln!(out, "{}", event_line(e)).unwrap();
        }
        out
    }

    pub fn hash(&self) -> String {
        hash_text(&self.render())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, reason: &str| Error::Transcript {
            line: line + 1,
            reason: reason.into(),
        };
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(err(0, "missing format marker")),
        }
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let (config, strategy) = parse_header(header).map_err(|r| err(hl, &r))?;
        let mut events = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            events.push(parse_event(line).map_err(|r| err(i, &r))?);
        }
        Ok(Self {
            config,
            strategy,
            events,
        })
    }
}

pub fn hash_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn parse_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    if v == "-" {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|x| x.parse().map_err(|e| format!("bad list `{v}`: {e}")))
        .collect()
}

fn parse_header(line: &str) -> std::result::Result<(ProtocolConfig, StrategySpec), String> {
    let body = line.strip_prefix("# ").ok_or("header must start with `# `")?;
    let mut cfg = ProtocolConfig::new(0, 0, 0, 0, 0);
    let mut strategy = None;
    let num = |k: &str, v: &str| v.parse::<u64>().map_err(|e| format!("bad {k}: {e}"));
    for field in body.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| format!("bad field `{field}`"))?;
        match k {
            "n" => cfg.n = num(k, v)? as usize,
            "m" => cfg.m = num(k, v)? as usize,
            "s" => cfg.s = num(k, v)? as usize,
            "sender" => cfg.sender = if v == "-" { None } else { Some(num(k, v)? as usize) },
            "receiver" => cfg.receiver = num(k, v)? as usize,
            "corrupt" => cfg.corrupt = parse_list(v)?.into_iter().collect::<BTreeSet<_>>(),
            "extra" => cfg.extra_requesters = parse_list(v)?,
            "seed" => cfg.seed = num(k, v)?,
            "cap" => cfg.qubit_cap = num(k, v)? as usize,
            "suppress_notification" => cfg.suppress_notification = v.parse().map_err(|e| format!("bad {k}: {e}"))?,
            "strategy" => strategy = Some(v.parse::<StrategySpec>().map_err(|e| e.to_string())?),
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    Ok((cfg, strategy.ok_or("header lacks strategy")?))
}

fn parse_event(line: &str) -> std::result::Result<Event, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 6 {
        return Err(format!("expected 6 fields, found {}", f.len()));
    }
    let payload = if f[5] == "-" {
        Vec::new()
    } else {
        f[5].chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("bad payload `{}`", f[5])),
            })
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(Event {
        round: f[0].parse().map_err(|e| format!("bad round: {e}"))?,
        step: f[1].to_string(),
        emitter: if f[2] == "-" {
            None
        } else {
            Some(f[2].parse().map_err(|e| format!("bad emitter: {e}"))?)
        },
        channel: f[3].parse()?,
        scope: f[4].parse::<Scope>()?,
        payload,
    })
}
