use super::*;
use crate::adversary::{Forgery, StrategySpec, Tamper};
use crate::qsim::Complex;

fn psi() -> Vec<Complex> {
    vec![Complex::new(0.6, 0.0), Complex::new(0.8, 0.0)]
}

fn run_spec(cfg: &ProtocolConfig, spec: StrategySpec) -> (RunOutcome, Vec<Event>) {
    let psi: Vec<Complex> = if cfg.m == 1 {
        psi()
    } else {
        let mut v = vec![Complex::new(0.0, 0.0); 1 << cfg.m];
        v[0] = Complex::new(0.6, 0.0);
        v[(1 << cfg.m) - 1] = Complex::new(0.0, 0.8);
        v
    };
    run(cfg, &psi, spec.build().as_mut()).unwrap()
}

/// Runs that got past collision detection; a lone requester is missed
/// with probability 2^-s.
fn past_step_one(out: &RunOutcome) -> bool {
    out.status.abort_tag() != Some("1")
}

#[test]
fn all_honest_delivers() {
    let mut delivered = 0;
    for seed in 0..10 {
        let cfg = ProtocolConfig::new(4, 1, 8, 1, 3).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
        if !past_step_one(&out) {
            continue;
        }
        assert_eq!(out.status, RunStatus::Success);
        assert_eq!(out.psi_holder, PsiHolder::Receiver);
        assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
        assert_eq!(
            out.resources,
            ResourceCounts {
                ghz_instances: 10,
                bell_pairs: 2,
                teleport_bits: 2 * 10 + 2,
                auth_key_bits: 64 + 2 * 10,
            }
        );
        assert!(out.ghz_form.iter().all(|r| r.holds));
        assert_eq!(out.ghz_form.len(), 10);
        delivered += 1;
    }
    assert!(delivered >= 9, "{delivered}");
}

#[test]
fn two_qubit_message_delivers() {
    let cfg = ProtocolConfig::new(3, 2, 3, 2, 0).with_seed(4);
    let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
    assert_eq!(out.status, RunStatus::Success);
    assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
    assert_eq!(out.resources.teleport_bits, 2 * (2 * 2 + 3) + 2 * 2);
}

#[test]
fn two_requesters_abort_at_step_one() {
    let mut aborted = 0;
    for seed in 0..40 {
        let mut cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_seed(seed);
        cfg.extra_requesters = vec![2];
        let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
        aborted += (out.status.abort_tag() == Some("1")) as usize;
    }
    assert!(aborted >= 36);
}

#[test]
fn nobody_requesting_aborts_at_step_one() {
    let mut cfg = ProtocolConfig::new(3, 1, 3, 1, 2);
    cfg.sender = None;
    let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
    assert_eq!(out.status, RunStatus::Abort("1".into()));
}

#[test]
fn classical_forgery_passes_verification_and_aborts_in_step_six() {
    let (mut at_six, mut ran) = (0, 0);
    for seed in 0..30 {
        let cfg = ProtocolConfig::new(4, 1, 6, 1, 3).with_corrupt([0]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::GhzForger(Forgery::Classical));
        assert!(out.ghz_form.iter().all(|r| r.holds));
        if !past_step_one(&out) {
            continue;
        }
        ran += 1;
        assert!(!matches!(out.status.abort_tag(), Some("3.3")));
        if matches!(out.status.abort_tag(), Some("6.4" | "6.6")) {
            at_six += 1;
            assert_eq!(out.psi_holder, PsiHolder::Sender);
        }
    }
    assert!(at_six * 10 >= ran * 9, "{at_six}/{ran}");
}

#[test]
fn product_forgery_is_caught_in_verification() {
    for seed in 0..30 {
        let cfg = ProtocolConfig::new(4, 1, 3, 1, 3).with_corrupt([0]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::GhzForger(Forgery::Product));
        if past_step_one(&out) {
            assert_eq!(out.status, RunStatus::Abort("3.3".into()), "seed {seed}");
        }
    }
}

#[test]
fn entangled_ancilla_keeps_ghz_form() {
    let (mut succeeded, mut ran) = (0, 0);
    for seed in 0..10 {
        let cfg = ProtocolConfig::new(4, 1, 6, 2, 3).with_corrupt([0]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::GhzForger(Forgery::EntangledAncilla));
        if !past_step_one(&out) {
            continue;
        }
        ran += 1;
        assert_eq!(out.ghz_form.len(), 8);
        assert!(out.ghz_form.iter().all(|r| r.holds));
        succeeded += (out.status == RunStatus::Success) as usize;
    }
    assert!(succeeded <= 1 && ran >= 8, "{succeeded}/{ran}");
}

#[test]
fn parity_lies_are_caught_in_step_six() {
    let mut caught = 0;
    for seed in 0..30 {
        let cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([2]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::ParityLiar);
        if out.status != RunStatus::Success {
            caught += 1;
            assert_eq!(out.psi_holder, PsiHolder::Sender);
        }
    }
    assert!(caught >= 27, "{caught}");
}

#[test]
fn auth_tampering_is_caught() {
    for tamper in [Tamper::Pauli, Tamper::Unitary] {
        let mut aborted = 0;
        for seed in 0..30 {
            let cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([2]).with_seed(seed);
            let (out, _) = run_spec(&cfg, StrategySpec::AuthTamperer(tamper));
            if out.status == RunStatus::Success {
                assert!(out.delivered_fidelity.is_some());
            } else {
                aborted += 1;
                assert_eq!(out.psi_holder, PsiHolder::Sender);
                assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
            }
        }
        if tamper == Tamper::Pauli {
            assert!(aborted >= 27, "{aborted}");
        }
    }
}

#[test]
fn step_seven_tampering_returns_the_state_to_the_sender() {
    let (mut returned, mut ran) = (0, 0);
    for seed in 0..20 {
        let cfg = ProtocolConfig::new(4, 1, 8, 1, 3).with_corrupt([2]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::AmtBitflipper(crate::adversary::Stage::Step7));
        if !past_step_one(&out) {
            continue;
        }
        ran += 1;
        if out.status.abort_tag() == Some("7.2") {
            returned += 1;
            assert_eq!(out.psi_holder, PsiHolder::Sender);
            assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
        }
    }
    assert!(returned * 10 >= ran * 9, "{returned}/{ran}");
}

#[test]
fn forced_step_seven_abort_recovers() {
    let (mut returned, mut ran) = (0, 0);
    for seed in 0..10 {
        let cfg = ProtocolConfig::new(4, 2, 6, 3, 1).with_corrupt([0]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::AbortForcer(7));
        if !past_step_one(&out) {
            continue;
        }
        ran += 1;
        assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
        if out.status == RunStatus::Abort("7.2".into()) {
            returned += 1;
            assert_eq!(out.psi_holder, PsiHolder::Sender);
        } else {
            // The forced vote went unregistered (probability 2^-s).
            assert_eq!(out.psi_holder, PsiHolder::Receiver);
        }
    }
    assert!(returned + 1 >= ran && ran >= 8, "{returned}/{ran}");
}

#[test]
fn abort_forcers_abort_where_they_say() {
    for (step, tag) in [(1u8, "1"), (3, "3.3"), (6, "6.6"), (7, "7.2")] {
        let mut hits = 0;
        for seed in 0..5 {
            let cfg = ProtocolConfig::new(4, 1, 8, 1, 2).with_corrupt([3]).with_seed(seed);
            let (out, _) = run_spec(&cfg, StrategySpec::AbortForcer(step));
            hits += (out.status == RunStatus::Abort(tag.into())) as usize;
        }
        assert!(hits >= 4, "step {step}: {hits}");
    }
}

#[test]
fn corrupt_receiver_fake_return_goes_unnoticed() {
    let cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([3]).with_seed(2);
    let (out, _) = run_spec(&cfg, StrategySpec::CorruptRFakeReturn);
    assert_eq!(out.status, RunStatus::Abort("7.2".into()));
    assert_eq!(out.psi_holder, PsiHolder::CorruptUnknown);
    assert!(out.delivered_fidelity.unwrap() < 0.99);
}

#[test]
fn usurper_takes_over_after_missed_notification() {
    let mut cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([2]).with_seed(5);
    cfg.suppress_notification = true;
    let (out, _) = run_spec(&cfg, StrategySpec::ReceiverUsurper);
    assert!(out.privacy_lost_possible);
    assert_eq!(out.quantum_receiver, Some(2));
    assert_eq!(out.status, RunStatus::Success);
    assert_eq!(out.psi_holder, PsiHolder::CorruptUnknown);
    assert!(out.delivered_fidelity.unwrap() > 1.0 - 1e-9);
}

#[test]
fn usurper_competing_with_the_receiver_causes_abort() {
    for seed in 0..10 {
        let cfg = ProtocolConfig::new(4, 1, 4, 1, 3).with_corrupt([2]).with_seed(seed);
        let (out, _) = run_spec(&cfg, StrategySpec::ReceiverUsurper);
        assert!(out.status.abort_tag().is_some());
        assert_eq!(out.psi_holder, PsiHolder::Sender);
    }
}

#[test]
fn missed_notification_without_usurper_loses_the_state() {
    let mut cfg = ProtocolConfig::new(4, 1, 3, 1, 3).with_seed(1);
    cfg.suppress_notification = true;
    let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
    assert!(out.privacy_lost_possible);
    assert_eq!(out.quantum_receiver, None);
    assert_eq!(out.psi_holder, PsiHolder::Lost);
}

#[test]
fn corrupt_sender_runs_honestly() {
    let cfg = ProtocolConfig::new(4, 1, 3, 1, 3).with_corrupt([1]).with_seed(1);
    let (out, _) = run_spec(&cfg, StrategySpec::ParityLiar);
    assert_eq!(out.status, RunStatus::Success);
}

#[test]
fn same_seed_same_transcript() {
    let cfg = ProtocolConfig::new(4, 1, 3, 2, 0).with_corrupt([1]).with_seed(77);
    let (a, ea) = run_spec(&cfg, StrategySpec::ParityLiar);
    let (b, eb) = run_spec(&cfg, StrategySpec::ParityLiar);
    assert_eq!(ea, eb);
    assert_eq!(a.view_digest, b.view_digest);
    let (_, ec) = run_spec(&cfg.clone().with_seed(78), StrategySpec::ParityLiar);
    assert_ne!(ea, ec);
}

#[test]
fn view_never_contains_honest_private_traffic() {
    for spec in crate::adversary::strategy_catalog() {
        let cfg = ProtocolConfig::new(4, 1, 3, 1, 2).with_corrupt([0, 3]).with_seed(3);
        let (_, events) = run_spec(&cfg, spec);
        let view = AdversaryView::new(&events, &cfg.corrupt);
        for e in view.iter() {
            if let crate::net::Scope::Parties(p) = &e.scope {
                assert!(p.iter().any(|x| cfg.corrupt.contains(x)), "{spec}: {e:?}");
            }
        }
    }
}

#[test]
fn step_three_restores_the_distributed_state() {
    // All honest: verification leaves |+_n⟩ untouched, so the GHZ-form
    // weight is exactly zero and the run succeeds.
    for n in 3..=4 {
        let cfg = ProtocolConfig::new(n, 1, 3, 1, 2).with_seed(n as u64);
        let (out, _) = run_spec(&cfg, StrategySpec::HonestCurious);
        assert!(out.ghz_form.iter().all(|r| r.weight_outside < 1e-12));
        assert_eq!(out.status, RunStatus::Success);
    }
}

#[test]
fn ghz_form_predicate_examples() {
    let ghz = QuantumRegister::make_ghz(3).unwrap();
    assert!(check_ghz_form(&ghz, ghz.labels()).unwrap());
    let labels = vec![QubitLabel::new(0, 0), QubitLabel::new(1, 1), QubitLabel::new(2, 2)];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex::new(0.0, 0.0); 8];
    amps[0b001] = Complex::new(h, 0.0);
    amps[0b000] = Complex::new(h, 0.0);
    let reg = QuantumRegister::from_amplitudes(labels.clone(), amps, 8).unwrap();
    assert!(check_ghz_form(&reg, &labels[..2]).unwrap());
    let mut amps = vec![Complex::new(0.0, 0.0); 4];
    amps[0b01] = Complex::new(h, 0.0);
    amps[0b10] = Complex::new(h, 0.0);
    let reg = QuantumRegister::from_amplitudes(labels[..2].to_vec(), amps, 8).unwrap();
    assert!(!check_ghz_form(&reg, &labels[..2]).unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = ProtocolConfig::new(4, 1, 3, 1, 2);
    let mut c = base.clone();
    c.n = 2;
    assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    let mut c = base.clone();
    c.receiver = 1;
    assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    let mut c = base.clone();
    c.m = 3;
    c.s = 4;
    assert!(matches!(c.validate(), Err(Error::Resource { .. })));
    let c = base.clone().with_corrupt([0, 1, 2, 3]);
    assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    assert_eq!(base.auth_key_contract_bits(), 4 + 6 + 1);
}
