//! The seven-step anonymous transmission of an `m`-qubit state.
//!
//! 1. collision detection elects a unique sender `S`;
//! 2. participant 0 distributes `2m + s` GHZ instances;
//! 3. every participant verifies every instance with pseudo-copies;
//! 4. `S` notifies its receiver `R`;
//! 5. everyone but `S` and `R` measures in the Hadamard basis, leaving
//!    anonymous `S`–`R` pairs;
//! 6. authentication and teleportation turn `2m + s` anonymous pairs into
//!    `2m` verified ones;
//! 7. fail-safe teleportation delivers the state or returns it to `S`.
//!
//! Each GHZ instance lives in its own register until step 6 consumes it.
//! Within a step, honest participants speak in index order and corrupt
//! participants speak last (rushing).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adversary::{AdvCtx, AdversaryStrategy, AdversaryView, CopyAction, DistributeRequest, OrStage, Stage};
use crate::dcnet::{self, AmtDeviation, Behavior, CollisionInput, DcContext, RClass};
use crate::entropy::{Entropy, TrialRng};
use crate::net::{Event, Network};
use crate::qauth::{self, AuthKey};
use crate::qsim::{
    ket0, ket_plus, Basis, Complex, Gate, QuantumRegister, QubitLabel, DEFAULT_CAP, MAX_CAP, NORM_TOLERANCE,
};
use crate::{Error, Result};

/// Index of the participant that prepares the GHZ instances.
pub const DISTRIBUTOR: usize = 0;

/// Largest supported participant count.
pub const MAX_PARTIES: usize = 8;

fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// The honest party that wants to send, if any.
    pub sender: Option<usize>,
    /// The sender's private choice of receiver.
    pub receiver: usize,
    /// Further honest parties that also request to send in step 1.
    #[serde(default)]
    pub extra_requesters: Vec<usize>,
    #[serde(default)]
    pub corrupt: BTreeSet<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub qubit_cap: usize,
    /// Fault injection: the sender's notification is lost.
    #[serde(default)]
    pub suppress_notification: bool,
}

impl ProtocolConfig {
    pub fn new(n: usize, m: usize, s: usize, sender: usize, receiver: usize) -> Self {
        Self {
            n,
            m,
            s,
            sender: Some(sender),
            receiver,
            extra_requesters: Vec::new(),
            corrupt: BTreeSet::new(),
            seed: 0,
            qubit_cap: DEFAULT_CAP,
            suppress_notification: false,
        }
    }

    pub fn with_corrupt(mut self, corrupt: impl IntoIterator<Item = usize>) -> Self {
        self.corrupt = corrupt.into_iter().collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn ghz_instances(&self) -> usize {
        2 * self.m + self.s
    }

    pub fn bell_pairs(&self) -> usize {
        2 * self.m
    }

    /// Classical bits spent on teleportation: step 6 plus step 7.
    pub fn teleport_bits(&self) -> usize {
        2 * (2 * self.m + self.s) + 2 * self.m
    }

    /// Key length of an ideal authentication scheme for `2m` qubits.
    pub fn auth_key_contract_bits(&self) -> usize {
        4 * self.m + 2 * self.s + 1
    }

    /// Key length of this implementation's scheme.
    pub fn auth_key_bits(&self) -> usize {
        AuthKey::bit_len(2 * self.m, self.s)
    }

    /// Peak register width: step 6 holds `2m` kept halves, the encoded
    /// block, and one instance being merged.
    pub fn peak_qubits(&self) -> usize {
        (4 * self.m + self.s + 2).max(5 * self.m).max(2 * self.n + 1)
    }

    pub fn is_corrupt(&self, p: usize) -> bool {
        self.corrupt.contains(&p)
    }

    pub fn honest(&self) -> Vec<usize> {
        (0..self.n).filter(|p| !self.is_corrupt(*p)).collect()
    }

    /// Honest participants in index order, then corrupt ones.
    pub fn speaking_order(&self) -> Vec<usize> {
        let mut order = self.honest();
        order.extend(self.corrupt.iter().copied());
        order
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(3..=MAX_PARTIES).contains(&self.n) {
            return bad(format!("n must be in 3..={MAX_PARTIES}, got {}", self.n));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(1..=dcnet::gf::MAX_DEGREE).contains(&self.s) {
            return bad(format!("s must be in 1..={}, got {}", dcnet::gf::MAX_DEGREE, self.s));
        }
        if self.receiver >= self.n {
            return bad(format!("receiver {} out of range", self.receiver));
        }
        if let Some(sender) = self.sender {
            if sender >= self.n {
                return bad(format!("sender {sender} out of range"));
            }
            if sender == self.receiver {
                return bad("receiver must differ from sender".into());
            }
        }
        if let Some(p) = self
            .corrupt
            .iter()
            .chain(&self.extra_requesters)
            .find(|p| **p >= self.n)
        {
            return bad(format!("participant {p} out of range"));
        }
        if self.corrupt.len() >= self.n {
            return bad("at least one participant must be honest".into());
        }
        if self.qubit_cap > MAX_CAP {
            return bad(format!("qubit cap {} exceeds {MAX_CAP}", self.qubit_cap));
        }
        if 2 * self.m + self.s > qauth::clifford::MAX_QUBITS {
            return bad("2m + s must not exceed 16".into());
        }
        if self.peak_qubits() > self.qubit_cap {
            return Err(Error::Resource {
                requested: self.peak_qubits(),
                cap: self.qubit_cap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "step")]
pub enum RunStatus {
    Success,
    Abort(String),
    /// No honest sender was elected; there is nothing to protect.
    Vacuous,
}

impl RunStatus {
    pub fn abort_tag(&self) -> Option<&str> {
        match self {
            RunStatus::Abort(t) => Some(t),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RunStatus::Success => "success".into(),
            RunStatus::Abort(t) => format!("abort:{t}"),
            RunStatus::Vacuous => "vacuous".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiHolder {
    Sender,
    Receiver,
    Lost,
    CorruptUnknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sender,
    Receiver,
    Bystander,
    Corrupt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyState {
    pub index: usize,
    pub role: Role,
    pub notified: bool,
    /// Kept its GHZ shares in step 5.
    pub acted_as_receiver: bool,
    /// Qubits held at the end of the run.
    pub held: Vec<QubitLabel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCounts {
    pub ghz_instances: usize,
    pub bell_pairs: usize,
    pub teleport_bits: usize,
    pub auth_key_bits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzFormRecord {
    pub instance: usize,
    pub weight_outside: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub psi_holder: PsiHolder,
    /// Fidelity of the holder's qubits to the input state, when a holder
    /// has them.
    pub delivered_fidelity: Option<f64>,
    pub resources: ResourceCounts,
    pub ghz_form: Vec<GhzFormRecord>,
    /// The receiver missed its notification, so a usurper could take its place.
    pub privacy_lost_possible: bool,
    /// Who kept the far ends of the anonymous pairs in step 5.
    pub quantum_receiver: Option<usize>,
    pub parties: Vec<PartyState>,
    /// SHA-256 of the coalition's view.
    pub view_digest: String,
}

/// GHZ-form predicate: the honest qubits are supported on all-zeros and
/// all-ones, whatever the corrupt qubits hold.
pub fn check_ghz_form(reg: &QuantumRegister, honest: &[QubitLabel]) -> Result<bool> {
    Ok(reg.weight_outside_all_equal(honest)? < NORM_TOLERANCE)
}

/// Runs the protocol with the trial's seeded streams.
pub fn run(
    cfg: &ProtocolConfig,
    psi: &[Complex],
    strategy: &mut dyn AdversaryStrategy,
) -> Result<(RunOutcome, Vec<Event>)> {
    let mut rng = TrialRng::new(cfg.seed);
    run_with(cfg, psi, strategy, &mut rng.protocol, &mut rng.pads, &mut rng.adversary)
}

/// Runs the protocol drawing from explicit randomness sources.
pub fn run_with(
    cfg: &ProtocolConfig,
    psi: &[Complex],
    strategy: &mut dyn AdversaryStrategy,
    protocol: &mut dyn Entropy,
    pads: &mut dyn Entropy,
    adversary: &mut dyn Entropy,
) -> Result<(RunOutcome, Vec<Event>)> {
    cfg.validate()?;
    if psi.len() != 1 << cfg.m {
        return Err(Error::Dimension {
            expected: 1 << cfg.m,
            got: psi.len(),
        });
    }
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Contract(format!("message state has squared norm {norm}")));
    }
    let mut run = Run::new(cfg, psi, strategy, protocol, pads, adversary);
    let (status, psi_holder, delivered_fidelity) = run.execute()?;
    let view_digest = AdversaryView::new(run.net.events(), &cfg.corrupt).digest();
    let parties = (0..cfg.n)
        .map(|p| PartyState {
            index: p,
            role: if cfg.is_corrupt(p) {
                Role::Corrupt
            } else if Some(p) == cfg.sender {
                Role::Sender
            } else if p == cfg.receiver {
                Role::Receiver
            } else {
                Role::Bystander
            },
            notified: run.notified[p],
            acted_as_receiver: run.acting.contains(&p),
            held: run.held.get(&p).cloned().unwrap_or_default(),
        })
        .collect();
    let outcome = RunOutcome {
        status,
        psi_holder,
        delivered_fidelity,
        resources: run.resources,
        ghz_form: run.ghz_form,
        privacy_lost_possible: !run.notified[cfg.receiver] && cfg.sender.is_some() && !cfg.is_corrupt(cfg.receiver),
        quantum_receiver: run.quantum_receiver,
        parties,
        view_digest,
    };
    Ok((outcome, run.net.into_events()))
}

/// Runs steps 1 to 5 only and returns the early terminal status, if any,
/// with the events so far. Used for exact enumeration of the anonymity
/// of the pair-establishment phase.
pub fn run_prefix(
    cfg: &ProtocolConfig,
    strategy: &mut dyn AdversaryStrategy,
    protocol: &mut dyn Entropy,
    pads: &mut dyn Entropy,
    adversary: &mut dyn Entropy,
) -> Result<(Option<RunStatus>, Vec<Event>)> {
    cfg.validate()?;
    let psi: Vec<Complex> = Vec::new();
    let mut run = Run::new(cfg, &psi, strategy, protocol, pads, adversary);
    let status = run.prefix()?.err().map(|t| t.0);
    Ok((status, run.net.into_events()))
}

/// One GHZ instance after distribution: the register and each party's share.
struct Instance {
    reg: QuantumRegister,
    shares: Vec<QubitLabel>,
}

struct Run<'a> {
    cfg: &'a ProtocolConfig,
    psi: &'a [Complex],
    strategy: &'a mut dyn AdversaryStrategy,
    net: Network,
    protocol: &'a mut dyn Entropy,
    pads: &'a mut dyn Entropy,
    adversary: &'a mut dyn Entropy,
    notified: Vec<bool>,
    next_tag: u32,
    acting: BTreeSet<usize>,
    quantum_receiver: Option<usize>,
    resources: ResourceCounts,
    ghz_form: Vec<GhzFormRecord>,
    held: BTreeMap<usize, Vec<QubitLabel>>,
}

impl<'a> Run<'a> {
    fn new(
        cfg: &'a ProtocolConfig,
        psi: &'a [Complex],
        strategy: &'a mut dyn AdversaryStrategy,
        protocol: &'a mut dyn Entropy,
        pads: &'a mut dyn Entropy,
        adversary: &'a mut dyn Entropy,
    ) -> Self {
        Run {
            cfg,
            psi,
            strategy,
            net: Network::new(cfg.n),
            protocol,
            pads,
            adversary,
            notified: vec![false; cfg.n],
            next_tag: 0,
            acting: BTreeSet::new(),
            quantum_receiver: None,
            resources: ResourceCounts::default(),
            ghz_form: Vec::new(),
            held: BTreeMap::new(),
        }
    }
}

/// Builds an adversary context from disjoint fields of a [`Run`].
macro_rules! adv {
    ($run:expr) => {
        &mut AdvCtx {
            n: $run.cfg.n,
            m: $run.cfg.m,
            s: $run.cfg.s,
            notified: &$run.notified,
            rng: &mut *$run.adversary,
            view: AdversaryView::new($run.net.events(), &$run.cfg.corrupt),
        }
    };
}

/// A [`DcContext`] over the run's network and streams.
macro_rules! dc {
    ($run:expr) => {
        &mut DcContext::new(&mut $run.net, &mut *$run.pads, &mut *$run.protocol)
    };
}

type Terminal = (RunStatus, PsiHolder, Option<f64>);

impl Run<'_> {
    fn label(&mut self, owner: usize) -> QubitLabel {
        let l = QubitLabel::new(owner, self.next_tag);
        self.next_tag += 1;
        l
    }

    fn abort(&mut self, tag: &str) -> RunStatus {
        self.net.set_step(tag);
        self.net.abort();
        RunStatus::Abort(tag.into())
    }

    fn sender(&self) -> usize {
        self.cfg.sender.expect("sender checked after step 1")
    }

    /// Corrupt and not the sender: deviations are only consulted for these.
    fn deviates(&self, p: usize) -> bool {
        self.cfg.is_corrupt(p) && Some(p) != self.cfg.sender
    }

    fn execute(&mut self) -> Result<Terminal> {
        match self.prefix()? {
            Ok(instances) => self.step6_and_7(instances),
            Err(terminal) => Ok(terminal),
        }
    }

    /// Steps 1 to 5. `Err` carries the terminal state of a run that ended
    /// early.
    fn prefix(&mut self) -> Result<std::result::Result<Vec<Instance>, Terminal>> {
        self.strategy.begin(adv!(self));
        if !self.step1()? {
            return Ok(Err((self.abort("1"), PsiHolder::Sender, Some(1.0))));
        }
        if self.cfg.sender.is_none() {
            return Ok(Err((RunStatus::Vacuous, PsiHolder::Sender, Some(1.0))));
        }
        let mut instances = self.step2()?;
        if !self.step3(&mut instances)? {
            return Ok(Err((self.abort("3.3"), PsiHolder::Sender, Some(1.0))));
        }
        self.step4()?;
        self.step5(&mut instances)?;
        Ok(Ok(instances))
    }

    fn step1(&mut self) -> Result<bool> {
        self.net.set_step("1");
        let cfg = self.cfg;
        let mut inputs = Vec::with_capacity(cfg.n);
        for p in 0..cfg.n {
            let wants = Some(p) == cfg.sender || cfg.extra_requesters.contains(&p);
            inputs.push(if self.deviates(p) {
                self.strategy.collision_input(p, wants, adv!(self))
            } else {
                CollisionInput::Follow(wants)
            });
        }
        Ok(dcnet::collision_detection(dc!(self), &inputs, cfg.s)? == RClass::One)
    }

    fn step2(&mut self) -> Result<Vec<Instance>> {
        self.net.set_step("2");
        let cfg = self.cfg;
        let mut out = Vec::with_capacity(cfg.ghz_instances());
        for k in 0..cfg.ghz_instances() {
            let shares: Vec<QubitLabel> = (0..cfg.n).map(|p| self.label(p)).collect();
            let mut reg = None;
            if self.cfg.is_corrupt(DISTRIBUTOR) {
                let req = DistributeRequest {
                    instance: k,
                    shares: shares.clone(),
                    ancilla: self.label(DISTRIBUTOR),
                    cap: cfg.qubit_cap,
                };
                if let Some(r) = self.strategy.distribute(&req, adv!(self)) {
                    let r = r?;
                    if let Some(missing) = shares.iter().find(|l| !r.contains(**l)) {
                        return Err(Error::UnknownLabel(*missing));
                    }
                    let extra: Vec<_> = r.labels().iter().filter(|l| !shares.contains(l)).copied().collect();
                    if extra.iter().any(|l| *l != req.ancilla) || r.len() > 2 * cfg.n {
                        return Err(Error::Contract("forged instance holds unexpected qubits".into()));
                    }
                    reg = Some(r);
                }
            }
            let reg = match reg {
                Some(r) => r,
                None => QuantumRegister::ghz_on(shares.clone(), cfg.qubit_cap)?,
            };
            for p in 1..cfg.n {
                self.net.quantum(DISTRIBUTOR, p);
            }
            out.push(Instance { reg, shares });
        }
        self.resources.ghz_instances = out.len();
        Ok(out)
    }

    /// Pseudo-copy verification of every instance by every participant.
    /// Returns `false` if any broadcast outcome is negative.
    fn step3(&mut self, instances: &mut [Instance]) -> Result<bool> {
        self.net.set_step("3");
        let cfg = self.cfg;
        let order = cfg.speaking_order();
        let mut all_positive = true;
        for (k, inst) in instances.iter_mut().enumerate() {
            let mut honest_pass = false;
            for &v in &order {
                let mut copies = Vec::with_capacity(cfg.n - 1);
                for i in (0..cfg.n).filter(|&i| i != v) {
                    let copy = self.label(v);
                    let action = if self.deviates(i) {
                        self.strategy.copy_action(i, v, k, adv!(self))
                    } else {
                        CopyAction::Honest
                    };
                    match action {
                        CopyAction::Honest => {
                            inst.reg.push_qubit(copy, ket0())?;
                            inst.reg.apply_gate(&Gate::Cnot, &[inst.shares[i], copy])?;
                        }
                        CopyAction::Fresh(state) => inst.reg.push_qubit(copy, state)?,
                    }
                    self.net.quantum(i, v);
                    copies.push(copy);
                }
                let project = !self.deviates(v) || self.strategy.verifier_projects(v, k, adv!(self));
                let outcome = if project {
                    let mut held = vec![inst.shares[v]];
                    held.extend(&copies);
                    Some(inst.reg.project_ghz_subspace(&held, &mut *self.protocol)?)
                } else {
                    None
                };
                for c in &copies {
                    inst.reg.apply_gate(&Gate::Cnot, &[inst.shares[v], *c])?;
                    inst.reg.discard(*c, &mut *self.protocol)?;
                }
                let report = if self.deviates(v) {
                    self.strategy.verifier_report(v, k, outcome, adv!(self))
                } else {
                    let passed = outcome.unwrap_or(false);
                    honest_pass |= passed;
                    passed
                };
                self.net.broadcast(v, vec![report]);
                all_positive &= report;
            }
            if honest_pass {
                let honest: Vec<QubitLabel> = cfg.honest().iter().map(|&p| inst.shares[p]).collect();
                let weight = inst.reg.weight_outside_all_equal(&honest)?;
                self.ghz_form.push(GhzFormRecord {
                    instance: k,
                    weight_outside: weight,
                    holds: weight < NORM_TOLERANCE,
                });
            }
        }
        Ok(all_positive)
    }

    fn step4(&mut self) -> Result<()> {
        self.net.set_step("4");
        let cfg = self.cfg;
        let mut notify = vec![BTreeSet::new(); cfg.n];
        if !cfg.suppress_notification {
            notify[self.sender()].insert(cfg.receiver);
        }
        for (p, targets) in notify.iter_mut().enumerate() {
            if self.deviates(p) {
                *targets = self.strategy.notify_targets(p, adv!(self));
            }
        }
        self.notified = dcnet::notification(dc!(self), &notify, cfg.s)?;
        Ok(())
    }

    fn step5(&mut self, instances: &mut [Instance]) -> Result<()> {
        self.net.set_step("5");
        let cfg = self.cfg;
        let s_idx = self.sender();
        let r_idx = cfg.receiver;
        for p in (0..cfg.n).filter(|&p| p != s_idx) {
            let acts = if self.deviates(p) {
                self.strategy.acts_as_receiver(p, adv!(self))
            } else {
                p == r_idx && self.notified[p]
            };
            if acts {
                self.acting.insert(p);
            }
        }
        self.quantum_receiver = if self.acting.contains(&r_idx) {
            Some(r_idx)
        } else {
            self.acting.iter().next().copied()
        };
        let order = cfg.speaking_order();
        for (k, inst) in instances.iter_mut().enumerate() {
            let mut parity = false;
            // Phase the sender's correction misses, as seen by a corrupt
            // quantum receiver other than R: R's real outcome if R measured,
            // and its own dummy bit.
            let mut residual = false;
            for &p in &order {
                let bit = if p == s_idx {
                    self.protocol.bit()
                } else if self.acting.contains(&p) {
                    if self.deviates(p) {
                        self.adversary.bit()
                    } else {
                        self.protocol.bit()
                    }
                } else {
                    let share = inst.shares[p];
                    if self.deviates(p) {
                        let ctx = adv!(self);
                        self.strategy.step5_tamper(p, k, share, &mut inst.reg, ctx)?;
                    }
                    let outcome = inst
                        .reg
                        .measure_remove(share, Basis::Hadamard, &mut *self.protocol)?
                        .outcome;
                    if self.deviates(p) {
                        self.strategy.step5_report(p, k, outcome, adv!(self))
                    } else {
                        outcome
                    }
                };
                self.net.broadcast(p, vec![bit]);
                if p != s_idx && p != r_idx {
                    parity ^= bit;
                }
                if (p == r_idx && !self.acting.contains(&p)) || (p != r_idx && Some(p) == self.quantum_receiver) {
                    residual ^= bit;
                }
            }
            if parity {
                inst.reg.apply_gate(&Gate::P, &[inst.shares[s_idx]])?;
            }
            if let Some(q) = self.quantum_receiver.filter(|&q| q != r_idx && self.deviates(q)) {
                if residual {
                    inst.reg.apply_gate(&Gate::P, &[inst.shares[q]])?;
                }
            }
            let keep: Vec<QubitLabel> = std::iter::once(inst.shares[s_idx])
                .chain(self.quantum_receiver.map(|q| inst.shares[q]))
                .collect();
            let leftovers: Vec<QubitLabel> = inst
                .reg
                .labels()
                .iter()
                .filter(|l| !keep.contains(l))
                .copied()
                .collect();
            for l in leftovers {
                inst.reg.discard(l, &mut *self.protocol)?;
            }
        }
        Ok(())
    }

    fn amt_deviations(&mut self, stage: Stage, payload_len: usize) -> BTreeMap<usize, AmtDeviation> {
        let mut out = BTreeMap::new();
        for p in self.cfg.corrupt.clone() {
            if self.deviates(p) {
                if let Some(d) = self.strategy.amt_deviation(p, stage, payload_len, adv!(self)) {
                    out.insert(p, d);
                }
            }
        }
        out
    }

    /// OR where the quantum receiver (if honest) votes `receiver_vote` and
    /// every other honest party votes 0.
    fn vote(&mut self, stage: OrStage, receiver_vote: bool) -> Result<bool> {
        let mut inputs = Vec::with_capacity(self.cfg.n);
        for p in 0..self.cfg.n {
            let honest = Some(p) == self.quantum_receiver && receiver_vote;
            inputs.push(Behavior::Follow(if self.deviates(p) {
                self.strategy.or_input(p, stage, honest, adv!(self))
            } else {
                honest
            }));
        }
        Ok(dcnet::logical_or(dc!(self), &inputs, self.cfg.s)?.result)
    }

    fn step6_and_7(&mut self, instances: Vec<Instance>) -> Result<Terminal> {
        let cfg = self.cfg;
        let s_idx = self.sender();
        let qr = self.quantum_receiver;
        let receivers: Vec<usize> = self.acting.iter().copied().collect();
        self.net.set_step("6");

        // 6.1 – 6.2: Bell pairs (K_i, Q_i) and authentication of the Q_i.
        let mut main = QuantumRegister::new(cfg.qubit_cap);
        let mut kept = Vec::with_capacity(cfg.bell_pairs());
        let mut sent = Vec::with_capacity(cfg.bell_pairs());
        for _ in 0..cfg.bell_pairs() {
            let (k, q) = (self.label(s_idx), self.label(s_idx));
            main.push_qubit(k, ket_plus())?;
            main.push_qubit(q, ket0())?;
            main.apply_gate(&Gate::Cnot, &[k, q])?;
            kept.push(k);
            sent.push(q);
        }
        self.resources.bell_pairs = kept.len();
        let mut key = AuthKey::random(cfg.bell_pairs(), cfg.s, &mut *self.protocol)?;
        let key_bits = key.to_bits();
        self.resources.auth_key_bits = key_bits.len();
        let traps: Vec<QubitLabel> = (0..cfg.s).map(|_| self.label(s_idx)).collect();
        let encoded = qauth::authenticate(&mut main, &sent, &traps, &mut key)?;

        // 6.3: teleport the encoded block through the anonymous pairs.
        let mut tele = Vec::with_capacity(2 * encoded.len());
        let mut far = Vec::with_capacity(encoded.len());
        for (j, inst) in instances.into_iter().enumerate() {
            let s_share = inst.shares[s_idx];
            main.merge(inst.reg)?;
            let (z, x) = main.bell_measure(encoded[j], s_share, &mut *self.protocol)?;
            tele.extend([z, x]);
            if let Some(q) = qr {
                far.push(inst.shares[q]);
            }
        }
        self.resources.teleport_bits = tele.len();

        // 6.4: key and teleportation bits by anonymous transmission.
        self.net.set_step("6.4");
        let mut payload = key_bits.clone();
        payload.extend(&tele);
        let devs = self.amt_deviations(Stage::Step6, dcnet::amt_payload_len(payload.len(), cfg.s));
        let amt = dcnet::amt_send(dc!(self), &payload, s_idx, &receivers, cfg.s, &devs)?;
        if amt.aborted {
            return Ok((self.abort("6.4"), PsiHolder::Sender, Some(1.0)));
        }

        // 6.5 – 6.6: the receiver corrects, decodes and reports.
        self.net.set_step("6.6");
        let mut decoded = Vec::new();
        let mut rejected = false;
        if let Some(q) = qr {
            let got = &amt.receipts[&q].message;
            let (kb, tb) = got.split_at(key_bits.len());
            for (j, l) in far.iter().enumerate() {
                main.pauli_correct(*l, tb[2 * j], tb[2 * j + 1])?;
            }
            let mut rkey = AuthKey::from_bits(cfg.bell_pairs(), cfg.s, kb)?;
            let verdict = qauth::decode(&mut main, &far, &mut rkey, &mut *self.protocol)?;
            rejected = !verdict.accepted;
            decoded = verdict.decoded_labels;
        }
        if self.vote(OrStage::Verdict, rejected)? {
            return Ok((self.abort("6.6"), PsiHolder::Sender, Some(1.0)));
        }

        // 7.1: teleport ψ through the first m verified pairs.
        self.net.set_step("7.1");
        let psi_labels: Vec<QubitLabel> = (0..cfg.m).map(|_| self.label(s_idx)).collect();
        main.merge(QuantumRegister::from_amplitudes(
            psi_labels.clone(),
            self.psi.to_vec(),
            cfg.qubit_cap,
        )?)?;
        let mut bits7 = Vec::with_capacity(2 * cfg.m);
        for i in 0..cfg.m {
            let (z, x) = main.bell_measure(psi_labels[i], kept[i], &mut *self.protocol)?;
            bits7.extend([z, x]);
        }
        self.resources.teleport_bits += bits7.len();
        let devs = self.amt_deviations(Stage::Step7, dcnet::amt_payload_len(bits7.len(), cfg.s));
        let amt7 = dcnet::amt_send(dc!(self), &bits7, s_idx, &receivers, cfg.s, &devs)?;
        let failed = amt7.aborted || qr.map(|q| !amt7.receipts[&q].tag_ok).unwrap_or(false);
        let received: Option<Vec<bool>> = qr.map(|q| amt7.receipts[&q].message.clone());

        if !self.vote(OrStage::Delivery, failed)? {
            let Some(q) = qr else {
                return Ok((RunStatus::Success, PsiHolder::Lost, None));
            };
            let bits = received.expect("receiver masks the transmission");
            for i in 0..cfg.m {
                main.pauli_correct(decoded[i], bits[2 * i], bits[2 * i + 1])?;
            }
            let holding = &decoded[..cfg.m];
            let fidelity = main.reduced_fidelity(holding, self.psi)?;
            self.held.insert(q, holding.to_vec());
            let holder = if cfg.is_corrupt(q) {
                PsiHolder::CorruptUnknown
            } else {
                PsiHolder::Receiver
            };
            return Ok((RunStatus::Success, holder, Some(fidelity)));
        }

        // 7.2: fail-safe return through the remaining m pairs.
        self.net.set_step("7.2");
        let mut returned = vec![false; 2 * cfg.m];
        if let Some(q) = qr {
            let fake = self.deviates(q) && self.strategy.fake_return(q, adv!(self));
            for i in 0..cfg.m {
                let source = if fake {
                    let f = self.label(q);
                    main.push_qubit(f, ket0())?;
                    main.discard(decoded[i], &mut *self.protocol)?;
                    f
                } else {
                    decoded[i]
                };
                let (z, x) = main.bell_measure(source, decoded[cfg.m + i], &mut *self.protocol)?;
                returned[2 * i] = z;
                returned[2 * i + 1] = x;
            }
        }
        let mut from_r = vec![false; 2 * cfg.m];
        for p in cfg.speaking_order() {
            let bits = if Some(p) == qr {
                returned.clone()
            } else if self.deviates(p) {
                self.adversary.bits(2 * cfg.m)
            } else {
                self.protocol.bits(2 * cfg.m)
            };
            if p == cfg.receiver {
                from_r.clone_from(&bits);
            }
            self.net.broadcast(p, bits);
        }
        let back = &kept[cfg.m..];
        for i in 0..cfg.m {
            main.pauli_correct(back[i], from_r[2 * i], from_r[2 * i + 1])?;
            main.pauli_correct(back[i], bits7[2 * i], bits7[2 * i + 1])?;
        }
        let fidelity = main.reduced_fidelity(back, self.psi)?;
        self.held.insert(s_idx, back.to_vec());
        let holder = match qr {
            Some(q) if q == cfg.receiver && !cfg.is_corrupt(q) => PsiHolder::Sender,
            Some(_) => PsiHolder::CorruptUnknown,
            None => PsiHolder::Lost,
        };
        Ok((self.abort("7.2"), holder, Some(fidelity)))
    }
}

#[cfg(test)]
mod tests;
