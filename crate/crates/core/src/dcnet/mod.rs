//! Classical anonymity toolbox built on dining-cryptographer parity rounds.
//!
//! In a parity round every pair `{i, j}` shares a fresh pad bit; participant
//! `i` publishes its input XOR all of its pads, so the pads cancel in the
//! XOR of the published values. On top of that primitive:
//!
//! * [`logical_or`]: veto-style OR, `s` rounds, refusals force output 1.
//! * [`collision_detection`]: zero / one / many requesters.
//! * [`notification`]: private-scope rounds towards each candidate.
//! * [`amt_send`]: masked per-bit rounds plus a key-shift-resistant tag.
//!
//! Publications within a round are simultaneous: deviating parties fix their
//! contribution before the round is evaluated.

pub mod gf;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::net::{Channel, Network, Scope};
use crate::{Error, Result};

pub use gf::{message_tag, Gf2n};

/// Pads of one round: one bit per unordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPads {
    n: usize,
    bits: Vec<bool>,
}

impl RoundPads {
    pub fn from_bits(n: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), n * (n - 1) / 2);
        Self { n, bits }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = (i.min(j), i.max(j));
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    pub fn pad(&self, i: usize, j: usize) -> bool {
        assert_ne!(i, j);
        self.bits[self.slot(i, j)]
    }

    /// XOR of all of `i`'s pads this round.
    pub fn combined(&self, i: usize) -> bool {
        (0..self.n)
            .filter(|&j| j != i)
            .fold(false, |acc, j| acc ^ self.pad(i, j))
    }
}

/// Dealer of pairwise pads, standing in for the pairwise private channels.
/// Each call to [`deal`](Self::deal) yields a never-reused round.
pub struct PadTable<'a> {
    n: usize,
    source: &'a mut dyn Entropy,
    rounds: u64,
}

impl<'a> PadTable<'a> {
    pub fn new(n: usize, source: &'a mut dyn Entropy) -> Self {
        Self { n, source, rounds: 0 }
    }

    pub fn deal(&mut self) -> RoundPads {
        self.rounds += 1;
        let count = self.n * (self.n - 1) / 2;
        RoundPads::from_bits(self.n, self.source.bits(count))
    }

    pub fn rounds_dealt(&self) -> u64 {
        self.rounds
    }
}

/// Everything a subprotocol needs: pads, fresh coins, the event log.
pub struct DcContext<'a> {
    pub pads: PadTable<'a>,
    pub fresh: &'a mut dyn Entropy,
    pub net: &'a mut Network,
}

impl<'a> DcContext<'a> {
    pub fn new(net: &'a mut Network, pads: &'a mut dyn Entropy, fresh: &'a mut dyn Entropy) -> Self {
        let n = net.participants();
        Self {
            pads: PadTable::new(n, pads),
            fresh,
            net,
        }
    }

    pub fn n(&self) -> usize {
        self.net.participants()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contribution {
    Bit(bool),
    Refuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputScope {
    Broadcast,
    PrivateTo(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    pub published: Vec<bool>,
    pub parity: bool,
    pub refused: Vec<usize>,
}

/// One parity round. A refusal is published as 0 and reported in
/// `refused`; callers decide what it means.
pub fn anonymous_parity_round(ctx: &mut DcContext<'_>, inputs: &[Contribution], scope: OutputScope) -> RoundResult {
    let n = ctx.n();
    assert_eq!(inputs.len(), n, "one contribution per participant");
    ctx.net.next_round();
    let pads = ctx.pads.deal();
    for i in 0..n {
        for j in i + 1..n {
            ctx.net.log(None, Channel::Pad, Scope::pair(i, j), vec![pads.pad(i, j)]);
        }
    }
    let (published, refused) = publish(&pads, inputs);
    for (i, &bit) in published.iter().enumerate() {
        let scope = match scope {
            OutputScope::Broadcast => Scope::All,
            OutputScope::PrivateTo(j) => Scope::pair(i, j),
        };
        ctx.net.log(Some(i), Channel::Publish, scope, vec![bit]);
    }
    let parity = published.iter().fold(false, |a, &b| a ^ b);
    RoundResult {
        published,
        parity,
        refused,
    }
}

/// Published values for given pads and inputs (no logging).
pub fn publish(pads: &RoundPads, inputs: &[Contribution]) -> (Vec<bool>, Vec<usize>) {
    let mut refused = Vec::new();
    let published = inputs
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Contribution::Bit(b) => b ^ pads.combined(i),
            Contribution::Refuse => {
                refused.push(i);
                false
            }
        })
        .collect();
    (published, refused)
}

/// How a participant behaves in a multi-round subprotocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    /// Run the subprotocol faithfully on this input.
    Follow(bool),
    /// Publish nothing.
    Refuse,
    /// Explicit per-round contributions; rounds past the end are refusals.
    Script(Vec<Contribution>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrOutcome {
    pub result: bool,
    pub refusals: BTreeSet<usize>,
}

fn or_contribution(b: &Behavior, round: usize, fresh: &mut dyn Entropy) -> Contribution {
    match b {
        Behavior::Follow(true) => Contribution::Bit(fresh.bit()),
        Behavior::Follow(false) => Contribution::Bit(false),
        Behavior::Refuse => Contribution::Refuse,
        Behavior::Script(s) => s.get(round).copied().unwrap_or(Contribution::Refuse),
    }
}

/// Veto OR over `s` broadcast parity rounds. Never aborts; any refusal
/// makes the output 1.
pub fn logical_or(ctx: &mut DcContext<'_>, inputs: &[Behavior], s: usize) -> Result<OrOutcome> {
    if s == 0 {
        return Err(Error::InvalidConfig("security parameter must be at least 1".into()));
    }
    let mut result = false;
    let mut refusals = BTreeSet::new();
    for round in 0..s {
        let contributions: Vec<_> = inputs.iter().map(|b| or_contribution(b, round, ctx.fresh)).collect();
        let r = anonymous_parity_round(ctx, &contributions, OutputScope::Broadcast);
        result |= r.parity;
        refusals.extend(r.refused);
    }
    result |= !refusals.is_empty();
    ctx.net.log(None, Channel::Output, Scope::All, vec![result]);
    Ok(OrOutcome { result, refusals })
}

/// The three collision-detection outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RClass {
    Zero,
    One,
    Many,
}

/// Input to collision detection.
///
/// `Corrupt { input, claim_mismatch }` is exactly the latitude a cheater
/// has: choosing its input, and claiming a mismatch once the first OR came
/// out 1. `input = true, claim_mismatch = true` forces "many" even when
/// everyone else is silent; `input = false, claim_mismatch = true` yields
/// "zero" if nobody else is active and "many" otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollisionInput {
    Follow(bool),
    Corrupt { input: bool, claim_mismatch: bool },
}

impl CollisionInput {
    fn input(&self) -> bool {
        match *self {
            CollisionInput::Follow(b) => b,
            CollisionInput::Corrupt { input, .. } => input,
        }
    }
}

pub fn collision_detection(ctx: &mut DcContext<'_>, inputs: &[CollisionInput], s: usize) -> Result<RClass> {
    let phase_a: Vec<_> = inputs.iter().map(|i| Behavior::Follow(i.input())).collect();
    if !logical_or(ctx, &phase_a, s)?.result {
        return Ok(RClass::Zero);
    }
    let n = ctx.n();
    let mut mismatch = vec![false; n];
    for _ in 0..s {
        let own: Vec<Option<bool>> = inputs
            .iter()
            .map(|i| if i.input() { Some(ctx.fresh.bit()) } else { None })
            .collect();
        let contributions: Vec<_> = own.iter().map(|o| Contribution::Bit(o.unwrap_or(false))).collect();
        let r = anonymous_parity_round(ctx, &contributions, OutputScope::Broadcast);
        for (flag, o) in mismatch.iter_mut().zip(&own) {
            if let Some(bit) = o {
                *flag |= *bit != r.parity;
            }
        }
    }
    let claims: Vec<_> = inputs
        .iter()
        .zip(&mismatch)
        .map(|(i, &m)| match *i {
            CollisionInput::Follow(_) => Behavior::Follow(m),
            CollisionInput::Corrupt { claim_mismatch, .. } => Behavior::Follow(m || claim_mismatch),
        })
        .collect();
    Ok(if logical_or(ctx, &claims, s)?.result {
        RClass::Many
    } else {
        RClass::One
    })
}

/// `notify[i]` lists whom participant `i` notifies. Returns each
/// participant's private "notified at least once" bit.
pub fn notification(ctx: &mut DcContext<'_>, notify: &[BTreeSet<usize>], s: usize) -> Result<Vec<bool>> {
    if s == 0 {
        return Err(Error::InvalidConfig("security parameter must be at least 1".into()));
    }
    let n = ctx.n();
    assert_eq!(notify.len(), n);
    let mut out = vec![false; n];
    for (j, flag) in out.iter_mut().enumerate() {
        for _ in 0..s {
            let contributions: Vec<_> = notify
                .iter()
                .map(|targets| Contribution::Bit(targets.contains(&j) && ctx.fresh.bit()))
                .collect();
            *flag |= anonymous_parity_round(ctx, &contributions, OutputScope::PrivateTo(j)).parity;
        }
        ctx.net.log(None, Channel::Output, Scope::Parties(vec![j]), vec![*flag]);
    }
    Ok(out)
}

/// What a deviating participant does during [`amt_send`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmtDeviation {
    /// Payload positions (message, then key, then tag) where it publishes 1.
    pub flips: BTreeSet<usize>,
    /// Input to the closing OR; `None` follows the protocol.
    pub or_input: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmtReceipt {
    pub message: Vec<bool>,
    pub tag_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmtOutcome {
    pub aborted: bool,
    /// What each masking receiver decoded.
    pub receipts: BTreeMap<usize, AmtReceipt>,
}

impl AmtOutcome {
    /// The message as delivered to `receiver`, unless the run aborted or
    /// its tag check failed.
    pub fn delivered(&self, receiver: usize) -> Option<&[bool]> {
        match self.receipts.get(&receiver) {
            Some(r) if !self.aborted && r.tag_ok => Some(&r.message),
            _ => None,
        }
    }
}

/// Number of parity rounds carrying the payload of an `ℓ`-bit message.
pub fn amt_payload_len(message_len: usize, s: usize) -> usize {
    message_len + 2 * s
}

/// Anonymous message transmission from `sender` to whoever masks.
///
/// Each payload bit takes one broadcast round in which the sender
/// contributes the bit and every receiver a fresh mask, so the public
/// parity is uniform. The payload carries the message, a fresh field
/// element `k` and [`message_tag`]. A closing [`logical_or`], where
/// receivers input "tag check failed", decides abort.
pub fn amt_send(
    ctx: &mut DcContext<'_>,
    message: &[bool],
    sender: usize,
    receivers: &[usize],
    s: usize,
    deviations: &BTreeMap<usize, AmtDeviation>,
) -> Result<AmtOutcome> {
    if message.is_empty() {
        return Err(Error::Contract("message must carry at least one bit".into()));
    }
    let field = Gf2n::new(s)?;
    let n = ctx.n();
    let key = ctx.fresh.below(field.order()) as u32;
    let tag = message_tag(&field, message, key);
    let mut payload = message.to_vec();
    payload.extend(field.to_bits(key));
    payload.extend(field.to_bits(tag));

    let mut masks: BTreeMap<usize, Vec<bool>> = receivers.iter().map(|&r| (r, Vec::new())).collect();
    let mut parities = Vec::with_capacity(payload.len());
    for (t, &bit) in payload.iter().enumerate() {
        let mut contributions = vec![Contribution::Bit(false); n];
        contributions[sender] = Contribution::Bit(bit);
        for (&r, m) in masks.iter_mut() {
            let mask = ctx.fresh.bit();
            m.push(mask);
            if let Contribution::Bit(b) = contributions[r] {
                contributions[r] = Contribution::Bit(b ^ mask);
            }
        }
        for (&p, dev) in deviations {
            if dev.flips.contains(&t) {
                if let Contribution::Bit(b) = contributions[p] {
                    contributions[p] = Contribution::Bit(b ^ true);
                }
            }
        }
        parities.push(anonymous_parity_round(ctx, &contributions, OutputScope::Broadcast).parity);
    }

    let len = message.len();
    let receipts: BTreeMap<usize, AmtReceipt> = masks
        .iter()
        .map(|(&r, mask)| {
            let decoded: Vec<bool> = parities.iter().zip(mask).map(|(p, m)| p ^ m).collect();
            let msg = decoded[..len].to_vec();
            let k = field.from_bits(&decoded[len..len + s]);
            let t = field.from_bits(&decoded[len + s..]);
            let tag_ok = message_tag(&field, &msg, k) == t;
            (r, AmtReceipt { message: msg, tag_ok })
        })
        .collect();

    let closing: Vec<Behavior> = (0..n)
        .map(|p| {
            let follow = receipts.get(&p).map(|r| !r.tag_ok).unwrap_or(false);
            match deviations.get(&p).and_then(|d| d.or_input) {
                Some(b) => Behavior::Follow(b),
                None => Behavior::Follow(follow),
            }
        })
        .collect();
    let aborted = logical_or(ctx, &closing, s)?.result;
    Ok(AmtOutcome { aborted, receipts })
}

/// One entry of a coalition's reduced view, see [`coalition_view`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewItem {
    /// XOR of every share published in a round whose shares the coalition all sees.
    Parity { round: u64, step: String, parity: bool },
    /// Any other visible event.
    Event {
        round: u64,
        step: String,
        emitter: Option<usize>,
        channel: Channel,
        scope: String,
        payload: Vec<bool>,
    },
}

/// Reduced form of what `coalition` observes.
///
/// Given its own pads and inputs, the honest shares of a parity round are
/// uniform subject to their XOR, so a round contributes only the overall
/// parity (when the coalition sees every share) or nothing (when it sees
/// only its own). Fresh per-round pads carry no further information.
pub fn coalition_view(events: &[crate::net::Event], coalition: &BTreeSet<usize>) -> Vec<ViewItem> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let ev = &events[i];
        match ev.channel {
            Channel::Pad => i += 1,
            Channel::Publish => {
                let round = ev.round;
                let mut all_visible = true;
                let mut parity = false;
                while i < events.len() && events[i].round == round && events[i].channel == Channel::Publish {
                    all_visible &= events[i].visible_to(coalition);
                    parity ^= events[i].payload.iter().fold(false, |a, &b| a ^ b);
                    i += 1;
                }
                if all_visible {
                    out.push(ViewItem::Parity {
                        round,
                        step: ev.step.clone(),
                        parity,
                    });
                }
            }
            _ => {
                if ev.visible_to(coalition) {
                    out.push(ViewItem::Event {
                        round: ev.round,
                        step: ev.step.clone(),
                        emitter: ev.emitter,
                        channel: ev.channel,
                        scope: ev.scope.to_string(),
                        payload: ev.payload.clone(),
                    });
                }
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::Enumerator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn with_ctx<T>(n: usize, seed: u64, f: impl FnOnce(&mut DcContext<'_>) -> T) -> T {
        let mut net = Network::new(n);
        let mut pads = ChaCha8Rng::seed_from_u64(seed);
        let mut fresh = ChaCha8Rng::seed_from_u64(seed ^ 0xdead_beef);
        let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
        f(&mut ctx)
    }

    fn bits(v: &[u8]) -> Vec<Contribution> {
        v.iter().map(|&b| Contribution::Bit(b == 1)).collect()
    }

    #[test]
    fn parity_round_examples() {
        with_ctx(3, 1, |ctx| {
            assert!(!anonymous_parity_round(ctx, &bits(&[0, 0, 0]), OutputScope::Broadcast).parity);
            assert!(anonymous_parity_round(ctx, &bits(&[1, 0, 0]), OutputScope::Broadcast).parity);
            assert!(!anonymous_parity_round(ctx, &bits(&[1, 1, 0]), OutputScope::Broadcast).parity);
        });
    }

    #[test]
    fn parity_round_publishes_uniform_odd_triples() {
        // Exhaustive pad enumeration at n = 3: inputs (1,0,0) publish each
        // odd-parity triple with probability 1/4.
        let dist = Enumerator::distribution(|e| {
            let pads = RoundPads::from_bits(3, e.bits(3));
            publish(&pads, &bits(&[1, 0, 0])).0
        });
        assert_eq!(dist.len(), 4);
        for (triple, p) in dist {
            assert!(triple.iter().filter(|b| **b).count() % 2 == 1);
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn parity_correctness_exhaustive() {
        for n in 3..=5usize {
            for v in 0..1u32 << n {
                let inputs: Vec<_> = (0..n).map(|i| Contribution::Bit(v >> i & 1 == 1)).collect();
                let expected = v.count_ones() % 2 == 1;
                let r = with_ctx(n, v as u64, |ctx| {
                    anonymous_parity_round(ctx, &inputs, OutputScope::Broadcast)
                });
                assert_eq!(r.parity, expected);
            }
        }
    }

    #[test]
    fn coalition_view_depends_only_on_parity() {
        // n = 4, coalition {3}: for any two honest input vectors with the
        // same parity the coalition's view (its pads and all publications)
        // has the same distribution.
        let view = |inputs: [u8; 4]| {
            Enumerator::distribution(|e| {
                let pads = RoundPads::from_bits(4, e.bits(6));
                let (published, _) = publish(&pads, &bits(&inputs));
                let own: Vec<bool> = (0..3).map(|j| pads.pad(3, j)).collect();
                (own, published)
            })
        };
        for coalition_input in 0..2u8 {
            let mut by_parity: BTreeMap<bool, Vec<_>> = BTreeMap::new();
            for v in 0..8u8 {
                let inputs = [v & 1, v >> 1 & 1, v >> 2 & 1, coalition_input];
                by_parity.entry(v.count_ones() % 2 == 1).or_default().push(view(inputs));
            }
            for group in by_parity.values() {
                for d in &group[1..] {
                    assert!(crate::entropy::total_variation(&group[0], d) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn coalition_of_two_sees_same_parity_views_equal() {
        // t = n - 2 = 2 at n = 4.
        let view = |inputs: [u8; 4]| {
            Enumerator::distribution(|e| {
                let pads = RoundPads::from_bits(4, e.bits(6));
                let (published, _) = publish(&pads, &bits(&inputs));
                let own: Vec<bool> = [(2, 0), (2, 1), (3, 0), (3, 1), (2, 3)]
                    .iter()
                    .map(|&(a, b)| pads.pad(a, b))
                    .collect();
                (own, published)
            })
        };
        let a = view([1, 0, 0, 0]);
        let b = view([0, 1, 0, 0]);
        assert!(crate::entropy::total_variation(&a, &b) < 1e-15);
        let c = view([1, 1, 0, 0]);
        assert!(crate::entropy::total_variation(&a, &c) > 0.5);
    }

    #[test]
    fn or_all_zero_is_zero() {
        for seed in 0..50 {
            let out = with_ctx(4, seed, |ctx| {
                logical_or(ctx, &vec![Behavior::Follow(false); 4], 3).unwrap()
            });
            assert!(!out.result);
        }
    }

    #[test]
    fn or_single_one_misses_with_probability_two_to_minus_s() {
        // Exhaustive over every fresh coin at n = 3.
        for s in 1..=8usize {
            let dist = Enumerator::distribution(|e| {
                let mut net = Network::new(3);
                let mut pads = ChaCha8Rng::seed_from_u64(0);
                let mut fresh = e.clone();
                let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
                let inputs = [Behavior::Follow(false), Behavior::Follow(true), Behavior::Follow(false)];
                logical_or(&mut ctx, &inputs, s).unwrap().result
            });
            let miss = dist.get(&false).copied().unwrap_or(0.0);
            assert!((miss - 0.5f64.powi(s as i32)).abs() < 1e-12, "s={s} miss={miss}");
        }
    }

    #[test]
    fn or_refusal_forces_one() {
        let out = with_ctx(3, 5, |ctx| {
            logical_or(
                ctx,
                &[Behavior::Follow(false), Behavior::Refuse, Behavior::Follow(false)],
                4,
            )
            .unwrap()
        });
        assert!(out.result);
        assert_eq!(out.refusals, BTreeSet::from([1]));
    }

    #[test]
    fn collision_examples() {
        let zero = with_ctx(4, 1, |ctx| {
            collision_detection(ctx, &[CollisionInput::Follow(false); 4], 4).unwrap()
        });
        assert_eq!(zero, RClass::Zero);
    }

    #[test]
    fn collision_error_bounds_exhaustive_n3() {
        let run = |inputs: [bool; 3], s: usize| {
            Enumerator::distribution(move |e| {
                let mut net = Network::new(3);
                let mut pads = ChaCha8Rng::seed_from_u64(0);
                let mut fresh = e.clone();
                let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
                let inputs: Vec<_> = inputs.iter().map(|&b| CollisionInput::Follow(b)).collect();
                collision_detection(&mut ctx, &inputs, s).unwrap()
            })
        };
        let one = run([false, true, false], 8);
        assert!(one[&RClass::One] >= 1.0 - 0.5f64.powi(7) - 1e-12);
        let many = run([true, true, false], 3);
        assert!(many[&RClass::Many] >= 1.0 - 0.5f64.powi(2) - 1e-12);
        // Two requesters: 2x - 2x^3 + x^4 with x = 2^-s, just inside 2^(1-s).
        let x = 0.125f64;
        assert!((1.0 - many[&RClass::Many] - (2.0 * x - 2.0 * x.powi(3) + x.powi(4))).abs() < 1e-12);
        assert_eq!(run([false; 3], 3)[&RClass::Zero], 1.0);
    }

    #[test]
    fn collision_cheating_latitude() {
        // A cheater can force "many" against an all-silent field.
        for seed in 0..20 {
            let r = with_ctx(3, seed, |ctx| {
                let inputs = [
                    CollisionInput::Follow(false),
                    CollisionInput::Follow(false),
                    CollisionInput::Corrupt {
                        input: true,
                        claim_mismatch: true,
                    },
                ];
                collision_detection(ctx, &inputs, 8).unwrap()
            });
            assert_eq!(r, RClass::Many);
        }
        // ...and conditioning on others: silent field gives zero, an honest
        // requester gives many.
        let cond = CollisionInput::Corrupt {
            input: false,
            claim_mismatch: true,
        };
        let silent = with_ctx(3, 3, |ctx| {
            collision_detection(
                ctx,
                &[CollisionInput::Follow(false), CollisionInput::Follow(false), cond],
                8,
            )
            .unwrap()
        });
        assert_eq!(silent, RClass::Zero);
        let active = with_ctx(3, 4, |ctx| {
            collision_detection(
                ctx,
                &[CollisionInput::Follow(true), CollisionInput::Follow(false), cond],
                8,
            )
            .unwrap()
        });
        assert_eq!(active, RClass::Many);
    }

    #[test]
    fn notification_examples() {
        let none = with_ctx(4, 1, |ctx| notification(ctx, &vec![BTreeSet::new(); 4], 4).unwrap());
        assert_eq!(none, vec![false; 4]);
        let mut notify = vec![BTreeSet::new(); 4];
        notify[2].insert(0);
        let mut hits = 0;
        for seed in 0..200 {
            let out = with_ctx(4, seed, |ctx| notification(ctx, &notify, 16).unwrap());
            assert!(!out[1] && !out[2] && !out[3]);
            hits += out[0] as usize;
        }
        assert!(hits >= 199);
    }

    #[test]
    fn notification_hides_the_pair_from_outsiders() {
        // n = 4, s = 2, coalition {3}: the distribution of everything
        // participant 3 sees is the same whichever honest pair communicates.
        let view = |from: usize, to: usize| {
            Enumerator::distribution(move |e| {
                let mut net = Network::new(4);
                let mut pads = ChaCha8Rng::seed_from_u64(0);
                let mut fresh = e.clone();
                let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
                let mut notify = vec![BTreeSet::new(); 4];
                notify[from].insert(to);
                notification(&mut ctx, &notify, 2).unwrap();
                coalition_view(net.events(), &BTreeSet::from([3]))
            })
        };
        let base = view(0, 1);
        for (a, b) in [(1, 0), (0, 2), (2, 1), (1, 2)] {
            assert!(crate::entropy::total_variation(&base, &view(a, b)) < 1e-12);
        }
    }

    #[test]
    fn amt_honest_delivery() {
        let msg = vec![true, false, true, true, false];
        let out = with_ctx(4, 7, |ctx| amt_send(ctx, &msg, 1, &[3], 8, &BTreeMap::new()).unwrap());
        assert!(!out.aborted);
        assert_eq!(out.delivered(3), Some(msg.as_slice()));
    }

    #[test]
    fn amt_single_flip_is_caught() {
        let msg = vec![true, false, true, true, false, false];
        let dev = BTreeMap::from([(
            0usize,
            AmtDeviation {
                flips: BTreeSet::from([2]),
                or_input: None,
            },
        )]);
        let trials = 2000u64;
        let mut escaped = 0;
        for seed in 0..trials {
            let out = with_ctx(4, seed, |ctx| amt_send(ctx, &msg, 1, &[3], 8, &dev).unwrap());
            if !out.aborted {
                escaped += 1;
                assert_ne!(out.receipts[&3].message, msg);
            }
        }
        // Flipping a message bit escapes only when the key is 0: 1/256.
        assert!((escaped as f64) < trials as f64 * 10.0 / 256.0);
    }

    #[test]
    fn amt_public_parities_independent_of_endpoints() {
        // n = 4, ℓ = 2, coalition {0}: exact distribution of the coalition
        // view for each (sender, receiver) pair and message.
        let view = |sender: usize, receiver: usize, msg: [bool; 2]| {
            Enumerator::distribution(move |e| {
                let mut net = Network::new(4);
                let mut pads = ChaCha8Rng::seed_from_u64(0);
                let mut fresh = e.clone();
                let mut ctx = DcContext::new(&mut net, &mut pads, &mut fresh);
                amt_send(&mut ctx, &msg, sender, &[receiver], 1, &BTreeMap::new()).unwrap();
                coalition_view(net.events(), &BTreeSet::from([0]))
            })
        };
        let base = view(1, 2, [false, false]);
        for (s, r, m) in [(2, 1, [true, false]), (3, 1, [true, true]), (1, 3, [false, true])] {
            assert!(crate::entropy::total_variation(&base, &view(s, r, m)) < 1e-12);
        }
    }
}
