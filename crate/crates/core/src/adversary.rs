//! Strategies for the corrupt coalition.
//!
//! The protocol consults an [`AdversaryStrategy`] at every point where a
//! corrupt participant could deviate. Every hook has an honest default, so
//! a strategy only overrides the decisions it cares about. Hooks receive an
//! [`AdvCtx`]: the public parameters, the coalition's own random stream and
//! an [`AdversaryView`] restricted to events the coalition can see.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dcnet::{AmtDeviation, CollisionInput};
use crate::entropy::Entropy;
use crate::net::{Channel, Event};
use crate::qsim::{ghz_amplitudes, random_unitary_2, Complex, Gate, QuantumRegister, QubitLabel};
use crate::{Error, Result};

/// Events visible to the coalition, filtered on access.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryView<'a> {
    events: &'a [Event],
    coalition: &'a BTreeSet<usize>,
}

impl<'a> AdversaryView<'a> {
    pub fn new(events: &'a [Event], coalition: &'a BTreeSet<usize>) -> Self {
        Self { events, coalition }
    }

    pub fn coalition(&self) -> &BTreeSet<usize> {
        self.coalition
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a Event> + '_ {
        self.events.iter().filter(move |e| e.visible_to(self.coalition))
    }

    /// Broadcast payloads seen so far, in order.
    pub fn broadcasts(&self) -> impl Iterator<Item = &'a Event> + '_ {
        self.iter().filter(|e| e.channel == Channel::Broadcast)
    }

    /// The current round clock.
    pub fn round(&self) -> u64 {
        self.events.last().map(|e| e.round).unwrap_or(0)
    }

    /// SHA-256 over the coalition's view, one canonical line per event.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in self.iter() {
            h.update(crate::harness::transcript::event_line(e).as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Public run parameters plus the coalition's private context.
pub struct AdvCtx<'a> {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// Notification bits of coalition members (all `false` before step 4).
    pub notified: &'a [bool],
    pub rng: &'a mut dyn Entropy,
    pub view: AdversaryView<'a>,
}

impl AdvCtx<'_> {
    pub fn coalition(&self) -> &BTreeSet<usize> {
        self.view.coalition()
    }

    pub fn is_notified(&self, party: usize) -> bool {
        self.coalition().contains(&party) && self.notified.get(party).copied().unwrap_or(false)
    }

    /// The coalition member that carries out single-actor attacks.
    pub fn actor(&self) -> Option<usize> {
        self.coalition().iter().next().copied()
    }
}

/// What a corrupt participant sends as its pseudo-copy in verification.
#[derive(Debug, Clone, PartialEq)]
pub enum CopyAction {
    Honest,
    /// An unrelated qubit in the given state.
    Fresh([Complex; 2]),
}

/// A request for one GHZ instance from a corrupt distributor. The register
/// returned must contain every label in `shares`; it may also contain
/// `ancilla`, which stays with the distributor.
#[derive(Debug, Clone)]
pub struct DistributeRequest {
    pub instance: usize,
    pub shares: Vec<QubitLabel>,
    pub ancilla: QubitLabel,
    pub cap: usize,
}

/// Which anonymous transmission a hook is asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Key and teleportation bits of step 6.
    Step6,
    /// Teleportation bits of step 7.
    Step7,
}

/// Which logical OR a hook is asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrStage {
    /// Decoding verdict of step 6.
    Verdict,
    /// "Communication failed" vote of step 7.
    Delivery,
}

/// Decision procedure for the corrupt coalition. Hooks are only invoked for
/// corrupt participants; a corrupt sender always behaves honestly.
#[allow(unused_variables)]
pub trait AdversaryStrategy: Send {
    fn name(&self) -> String;

    /// Called once before step 1.
    fn begin(&mut self, ctx: &mut AdvCtx<'_>) {}

    fn collision_input(&mut self, party: usize, wants: bool, ctx: &mut AdvCtx<'_>) -> CollisionInput {
        CollisionInput::Follow(wants)
    }

    /// Only consulted when the distributor is corrupt. `None` distributes
    /// an honest GHZ state.
    fn distribute(&mut self, req: &DistributeRequest, ctx: &mut AdvCtx<'_>) -> Option<Result<QuantumRegister>> {
        None
    }

    fn copy_action(&mut self, party: usize, verifier: usize, instance: usize, ctx: &mut AdvCtx<'_>) -> CopyAction {
        CopyAction::Honest
    }

    fn verifier_projects(&mut self, party: usize, instance: usize, ctx: &mut AdvCtx<'_>) -> bool {
        true
    }

    /// `outcome` is `None` when the party skipped its projection.
    fn verifier_report(&mut self, party: usize, instance: usize, outcome: Option<bool>, ctx: &mut AdvCtx<'_>) -> bool {
        outcome.unwrap_or(true)
    }

    fn notify_targets(&mut self, party: usize, ctx: &mut AdvCtx<'_>) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    /// Whether `party` keeps its GHZ shares in step 5 instead of measuring.
    fn acts_as_receiver(&mut self, party: usize, ctx: &mut AdvCtx<'_>) -> bool {
        ctx.is_notified(party)
    }

    /// Arbitrary operation on `share` before it is measured in step 5.
    fn step5_tamper(
        &mut self,
        party: usize,
        instance: usize,
        share: QubitLabel,
        reg: &mut QuantumRegister,
        ctx: &mut AdvCtx<'_>,
    ) -> Result<()> {
        Ok(())
    }

    fn step5_report(&mut self, party: usize, instance: usize, outcome: bool, ctx: &mut AdvCtx<'_>) -> bool {
        outcome
    }

    fn amt_deviation(
        &mut self,
        party: usize,
        stage: Stage,
        payload_len: usize,
        ctx: &mut AdvCtx<'_>,
    ) -> Option<AmtDeviation> {
        None
    }

    fn or_input(&mut self, party: usize, stage: OrStage, honest: bool, ctx: &mut AdvCtx<'_>) -> bool {
        honest
    }

    /// Whether a corrupt receiver returns a fresh `|0⟩` instead of the
    /// state it received in the fail-safe path.
    fn fake_return(&mut self, party: usize, ctx: &mut AdvCtx<'_>) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Forgery {
    /// `|+⟩^{⊗n}`.
    Product,
    /// `|0…0⟩`.
    Classical,
    /// `(|0…0⟩|0⟩_a + |1…1⟩|1⟩_a)/√2` with ancilla `a` kept by the distributor.
    EntangledAncilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tamper {
    Pauli,
    Unitary,
}

/// A named, parameterised strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategySpec {
    HonestCurious,
    GhzForger(Forgery),
    ParityLiar,
    AuthTamperer(Tamper),
    AmtBitflipper(Stage),
    /// Step 1, 3, 6 or 7.
    AbortForcer(u8),
    ReceiverUsurper,
    CorruptRFakeReturn,
}

impl StrategySpec {
    pub fn build(&self) -> Box<dyn AdversaryStrategy> {
        Box::new(Catalog {
            spec: *self,
            target_instance: None,
        })
    }

    /// Strategies that only make sense with particular parties corrupt.
    pub fn requires_distributor(&self) -> bool {
        matches!(self, StrategySpec::GhzForger(_))
    }

    pub fn requires_corrupt_receiver(&self) -> bool {
        matches!(self, StrategySpec::CorruptRFakeReturn)
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::HonestCurious => f.write_str("honest-curious"),
            StrategySpec::GhzForger(k) => write!(
                f,
                "ghz-forger:{}",
                match k {
                    Forgery::Product => "product",
                    Forgery::Classical => "classical",
                    Forgery::EntangledAncilla => "entangled-ancilla",
                }
            ),
            StrategySpec::ParityLiar => f.write_str("parity-liar"),
            StrategySpec::AuthTamperer(Tamper::Pauli) => f.write_str("auth-tamperer:pauli"),
            StrategySpec::AuthTamperer(Tamper::Unitary) => f.write_str("auth-tamperer:unitary"),
            StrategySpec::AmtBitflipper(Stage::Step6) => f.write_str("amt-bitflipper:6"),
            StrategySpec::AmtBitflipper(Stage::Step7) => f.write_str("amt-bitflipper:7"),
            StrategySpec::AbortForcer(step) => write!(f, "abort-forcer:{step}"),
            StrategySpec::ReceiverUsurper => f.write_str("receiver-usurper"),
            StrategySpec::CorruptRFakeReturn => f.write_str("corrupt-r-fake-return"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let (name, param) = match norm.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (norm.clone(), None),
        };
        let unknown = || Error::UnknownStrategy(s.to_string());
        let spec = match (name.as_str(), param.as_deref()) {
            ("honest-curious", None) => StrategySpec::HonestCurious,
            ("ghz-forger", Some("product")) => StrategySpec::GhzForger(Forgery::Product),
            ("ghz-forger", Some("classical") | None) => StrategySpec::GhzForger(Forgery::Classical),
            ("ghz-forger", Some("entangled-ancilla")) => StrategySpec::GhzForger(Forgery::EntangledAncilla),
            ("parity-liar", None) => StrategySpec::ParityLiar,
            ("auth-tamperer", Some("pauli") | None) => StrategySpec::AuthTamperer(Tamper::Pauli),
            ("auth-tamperer", Some("unitary")) => StrategySpec::AuthTamperer(Tamper::Unitary),
            ("amt-bitflipper", Some("6") | None) => StrategySpec::AmtBitflipper(Stage::Step6),
            ("amt-bitflipper", Some("7")) => StrategySpec::AmtBitflipper(Stage::Step7),
            ("abort-forcer", Some(p)) => match p {
                "1" | "3" | "6" | "7" => StrategySpec::AbortForcer(p.parse().map_err(|_| unknown())?),
                _ => return Err(unknown()),
            },
            ("abort-forcer", None) => StrategySpec::AbortForcer(6),
            ("receiver-usurper", None) => StrategySpec::ReceiverUsurper,
            ("corrupt-r-fake-return", None) => StrategySpec::CorruptRFakeReturn,
            _ => return Err(unknown()),
        };
        Ok(spec)
    }
}

/// Every catalogued strategy with every parameter value.
pub fn strategy_catalog() -> Vec<StrategySpec> {
    vec![
        StrategySpec::HonestCurious,
        StrategySpec::GhzForger(Forgery::Product),
        StrategySpec::GhzForger(Forgery::Classical),
        StrategySpec::GhzForger(Forgery::EntangledAncilla),
        StrategySpec::ParityLiar,
        StrategySpec::AuthTamperer(Tamper::Pauli),
        StrategySpec::AuthTamperer(Tamper::Unitary),
        StrategySpec::AmtBitflipper(Stage::Step6),
        StrategySpec::AmtBitflipper(Stage::Step7),
        StrategySpec::AbortForcer(1),
        StrategySpec::AbortForcer(3),
        StrategySpec::AbortForcer(6),
        StrategySpec::AbortForcer(7),
        StrategySpec::ReceiverUsurper,
        StrategySpec::CorruptRFakeReturn,
    ]
}

pub fn lookup(name: &str) -> Result<StrategySpec> {
    name.parse()
}

struct Catalog {
    spec: StrategySpec,
    target_instance: Option<usize>,
}

impl AdversaryStrategy for Catalog {
    fn name(&self) -> String {
        self.spec.to_string()
    }

    fn begin(&mut self, ctx: &mut AdvCtx<'_>) {
        if let StrategySpec::AuthTamperer(_) = self.spec {
            self.target_instance = Some(ctx.rng.below((2 * ctx.m + ctx.s) as u64) as usize);
        }
    }

    fn collision_input(&mut self, party: usize, wants: bool, ctx: &mut AdvCtx<'_>) -> CollisionInput {
        match self.spec {
            StrategySpec::AbortForcer(1) if ctx.actor() == Some(party) => CollisionInput::Corrupt {
                input: true,
                claim_mismatch: true,
            },
            _ => CollisionInput::Follow(wants),
        }
    }

    fn distribute(&mut self, req: &DistributeRequest, _ctx: &mut AdvCtx<'_>) -> Option<Result<QuantumRegister>> {
        let StrategySpec::GhzForger(kind) = self.spec else {
            return None;
        };
        let n = req.shares.len();
        Some(match kind {
            Forgery::Product => {
                let amp = Complex::new((0.5f64).powf(n as f64 / 2.0), 0.0);
                QuantumRegister::from_amplitudes(req.shares.clone(), vec![amp; 1 << n], req.cap)
            }
            Forgery::Classical => {
                let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
                amps[0] = Complex::new(1.0, 0.0);
                QuantumRegister::from_amplitudes(req.shares.clone(), amps, req.cap)
            }
            Forgery::EntangledAncilla => {
                let mut labels = req.shares.clone();
                labels.push(req.ancilla);
                QuantumRegister::from_amplitudes(labels, ghz_amplitudes(n + 1), req.cap)
            }
        })
    }

    fn verifier_report(&mut self, party: usize, _instance: usize, outcome: Option<bool>, ctx: &mut AdvCtx<'_>) -> bool {
        match self.spec {
            StrategySpec::AbortForcer(3) if ctx.actor() == Some(party) => false,
            _ => outcome.unwrap_or(true),
        }
    }

    fn acts_as_receiver(&mut self, party: usize, ctx: &mut AdvCtx<'_>) -> bool {
        match self.spec {
            StrategySpec::ReceiverUsurper => ctx.actor() == Some(party) || ctx.is_notified(party),
            _ => ctx.is_notified(party),
        }
    }

    fn step5_tamper(
        &mut self,
        party: usize,
        instance: usize,
        share: QubitLabel,
        reg: &mut QuantumRegister,
        ctx: &mut AdvCtx<'_>,
    ) -> Result<()> {
        if let StrategySpec::AuthTamperer(kind) = self.spec {
            if ctx.actor() == Some(party) && self.target_instance == Some(instance) {
                match kind {
                    Tamper::Pauli => reg.apply_gate(&Gate::Z, &[share])?,
                    Tamper::Unitary => reg.apply_matrix(&[share], &random_unitary_2(ctx.rng))?,
                }
            }
        }
        Ok(())
    }

    fn step5_report(&mut self, party: usize, _instance: usize, outcome: bool, ctx: &mut AdvCtx<'_>) -> bool {
        match self.spec {
            StrategySpec::ParityLiar if ctx.actor() == Some(party) => outcome ^ ctx.rng.bit(),
            _ => outcome,
        }
    }

    fn amt_deviation(
        &mut self,
        party: usize,
        stage: Stage,
        payload_len: usize,
        ctx: &mut AdvCtx<'_>,
    ) -> Option<AmtDeviation> {
        match self.spec {
            StrategySpec::AmtBitflipper(target) if target == stage && ctx.actor() == Some(party) => {
                let pos = ctx.rng.below(payload_len as u64) as usize;
                Some(AmtDeviation {
                    flips: BTreeSet::from([pos]),
                    or_input: None,
                })
            }
            _ => None,
        }
    }

    fn or_input(&mut self, party: usize, stage: OrStage, honest: bool, ctx: &mut AdvCtx<'_>) -> bool {
        match (self.spec, stage) {
            (StrategySpec::AbortForcer(6), OrStage::Verdict) | (StrategySpec::AbortForcer(7), OrStage::Delivery)
                if ctx.actor() == Some(party) =>
            {
                true
            }
            (StrategySpec::CorruptRFakeReturn, OrStage::Delivery) if ctx.is_notified(party) => true,
            _ => honest,
        }
    }

    fn fake_return(&mut self, party: usize, ctx: &mut AdvCtx<'_>) -> bool {
        self.spec == StrategySpec::CorruptRFakeReturn && ctx.is_notified(party)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for spec in strategy_catalog() {
            assert_eq!(lookup(&spec.to_string()).unwrap(), spec);
            assert_eq!(spec.build().name(), spec.to_string());
        }
    }

    #[test]
    fn constant_style_names_are_accepted() {
        assert_eq!(lookup("HONEST_CURIOUS").unwrap(), StrategySpec::HonestCurious);
        assert_eq!(lookup("ABORT_FORCER:7").unwrap(), StrategySpec::AbortForcer(7));
        assert_eq!(
            lookup("GHZ_FORGER:entangled-ancilla").unwrap(),
            StrategySpec::GhzForger(Forgery::EntangledAncilla)
        );
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(lookup("mind-reader"), Err(Error::UnknownStrategy(_))));
        assert!(matches!(lookup("abort-forcer:5"), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn view_hides_events_outside_the_coalition() {
        let mut net = crate::net::Network::new(4);
        net.private(0, 1, vec![true]);
        net.private(2, 3, vec![false]);
        net.broadcast(1, vec![true]);
        let coalition = BTreeSet::from([3]);
        let view = AdversaryView::new(net.events(), &coalition);
        let seen: Vec<_> = view.iter().collect();
        assert_eq!(seen.len(), 2);
        assert!(seen.iter().all(|e| e.visible_to(&coalition)));
    }
}
