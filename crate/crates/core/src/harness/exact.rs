//! Exact anonymity check at `n = 3`, `m = 1`, `s = 1`.
//!
//! Participant 0 is corrupt; the honest pair (1, 2) plays sender and
//! receiver in both orders. Every fresh coin and Born outcome is enumerated
//! with [`Enumerator`] and the coalition's reduced views
//! ([`coalition_view`]) are compared in total variation. Pads come from a
//! fixed stream: the reduced view does not depend on their values.
//!
//! The run is split where the enumeration would otherwise blow up (the
//! 64-bit Clifford seed of the authentication key):
//!
//! * steps 1 to 5 of the full protocol, under the chosen strategy;
//! * anonymous message transmission of every payload of length 1 and 2;
//! * the closing OR with the receiver voting 1;
//! * the step-7.2 broadcasts, where the receiver announces real Bell
//!   outcomes and the sender announces dummies.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::StrategySpec;
use crate::dcnet::{self, coalition_view, Behavior, DcContext, ViewItem};
use crate::entropy::{total_variation, Entropy, Enumerator};
use crate::net::Network;
use crate::protocol::{run_prefix, ProtocolConfig};
use crate::qsim::{ket0, ket_plus, random_state, Gate, QuantumRegister, QubitLabel, DEFAULT_CAP};
use crate::{Error, Result};

pub const EXACT_TOLERANCE: f64 = 1e-12;

const N: usize = 3;
const CORRUPT: usize = 0;
/// The two (sender, receiver) assignments compared.
const ASSIGNMENTS: [(usize, usize); 2] = [(1, 2), (2, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub name: String,
    pub total_variation: f64,
    /// Distinct views under each assignment.
    pub support: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub strategy: String,
    pub checks: Vec<ExactCheck>,
    pub max_total_variation: f64,
    pub pass: bool,
}

fn coalition() -> BTreeSet<usize> {
    [CORRUPT].into()
}

fn fixed_pads() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn compare<K: Ord>(name: String, a: BTreeMap<K, f64>, b: BTreeMap<K, f64>) -> ExactCheck {
    ExactCheck {
        name,
        total_variation: total_variation(&a, &b),
        support: [a.len(), b.len()],
    }
}

type PrefixView = std::result::Result<(Option<String>, Vec<ViewItem>), String>;

fn prefix_distribution(strategy: StrategySpec, sender: usize, receiver: usize) -> Result<BTreeMap<PrefixView, f64>> {
    let cfg = ProtocolConfig::new(N, 1, 1, sender, receiver).with_corrupt([CORRUPT]);
    let coalition = coalition();
    let dist = Enumerator::distribution(|e| {
        let (mut protocol, mut adversary) = (e.clone(), e.clone());
        let mut pads = fixed_pads();
        let mut strat = strategy.build();
        run_prefix(&cfg, strat.as_mut(), &mut protocol, &mut pads, &mut adversary)
            .map(|(status, events)| (status.map(|s| s.label()), coalition_view(&events, &coalition)))
            .map_err(|err| err.to_string())
    });
    if let Some(Err(msg)) = dist.keys().find(|k| k.is_err()) {
        return Err(Error::Contract(format!("enumerated run failed: {msg}")));
    }
    Ok(dist)
}

fn amt_distribution(payload: &[bool], sender: usize, receiver: usize) -> Result<BTreeMap<Vec<ViewItem>, f64>> {
    let coalition = coalition();
    let dist = Enumerator::distribution(|e| {
        let mut net = Network::new(N);
        let mut pads = fixed_pads();
        let mut fresh = e.clone();
        let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
        dcnet::amt_send(&mut ctx, payload, sender, &[receiver], 1, &BTreeMap::new())
            .map(|_| coalition_view(net.events(), &coalition))
            .map_err(|err| err.to_string())
    });
    dist.into_iter()
        .map(|(k, p)| k.map(|v| (v, p)).map_err(Error::Contract))
        .collect()
}

fn or_distribution(voter: usize) -> Result<BTreeMap<Vec<ViewItem>, f64>> {
    let coalition = coalition();
    let dist = Enumerator::distribution(|e| {
        let mut net = Network::new(N);
        let mut pads = fixed_pads();
        let mut fresh = e.clone();
        let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
        let inputs: Vec<Behavior> = (0..N).map(|p| Behavior::Follow(p == voter)).collect();
        dcnet::logical_or(&mut ctx, &inputs, 1)
            .map(|_| coalition_view(net.events(), &coalition))
            .map_err(|err| err.to_string())
    });
    dist.into_iter()
        .map(|(k, p)| k.map(|v| (v, p)).map_err(Error::Contract))
        .collect()
}

/// `(speaker, bits)` in speaking order.
type Broadcasts = Vec<(usize, Vec<bool>)>;

/// Step-7.2 broadcasts of the honest parties: the receiver Bell-measures
/// the decoded message with its half of a returning pair; the sender
/// announces two uniform dummy bits.
fn return_distribution(sender: usize, receiver: usize) -> Result<BTreeMap<Broadcasts, f64>> {
    let psi = random_state(1, &mut ChaCha8Rng::seed_from_u64(7));
    let dist = Enumerator::distribution(|e| -> std::result::Result<Broadcasts, String> {
        let run = |e: &mut Enumerator| -> Result<Broadcasts> {
            let decoded = QubitLabel::new(receiver, 0);
            let (kept, far) = (QubitLabel::new(sender, 1), QubitLabel::new(receiver, 2));
            let mut reg = QuantumRegister::from_amplitudes(vec![decoded], psi.clone(), DEFAULT_CAP)?;
            reg.push_qubit(kept, ket_plus())?;
            reg.push_qubit(far, ket0())?;
            reg.apply_gate(&Gate::Cnot, &[kept, far])?;
            let mut out = Vec::new();
            for p in 1..N {
                let bits = if p == receiver {
                    let (z, x) = reg.bell_measure(decoded, far, e)?;
                    vec![z, x]
                } else {
                    e.bits(2)
                };
                out.push((p, bits));
            }
            Ok(out)
        };
        run(e).map_err(|err| err.to_string())
    });
    dist.into_iter()
        .map(|(k, p)| k.map(|v| (v, p)).map_err(Error::Contract))
        .collect()
}

/// Runs every exact comparison for `strategy` (which only acts in the
/// steps-1-to-5 part; the toolbox parts use an honest-but-curious
/// coalition).
pub fn exact_anonymity(strategy: StrategySpec) -> Result<ExactReport> {
    let [(s1, r1), (s2, r2)] = ASSIGNMENTS;
    let mut checks = vec![compare(
        "steps 1-5".into(),
        prefix_distribution(strategy, s1, r1)?,
        prefix_distribution(strategy, s2, r2)?,
    )];
    for len in 1..=2usize {
        for value in 0..1u32 << len {
            let payload: Vec<bool> = (0..len).map(|i| value >> (len - 1 - i) & 1 == 1).collect();
            let label: String = payload.iter().map(|b| if *b { '1' } else { '0' }).collect();
            checks.push(compare(
                format!("amt payload {label}"),
                amt_distribution(&payload, s1, r1)?,
                amt_distribution(&payload, s2, r2)?,
            ));
        }
    }
    checks.push(compare(
        "or with receiver vote".into(),
        or_distribution(r1)?,
        or_distribution(r2)?,
    ));
    checks.push(compare(
        "fail-safe return broadcasts".into(),
        return_distribution(s1, r1)?,
        return_distribution(s2, r2)?,
    ));
    let max_total_variation = checks.iter().map(|c| c.total_variation).fold(0.0, f64::max);
    Ok(ExactReport {
        strategy: strategy.to_string(),
        pass: max_total_variation < EXACT_TOLERANCE,
        checks,
        max_total_variation,
    })
}
