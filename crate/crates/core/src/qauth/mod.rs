//! Quantum authentication with a Clifford code.
//!
//! `m` message qubits are joined by `s` trap qubits in `|0⟩`, scrambled by a
//! keyed uniformly random Clifford, and one-time padded with a keyed Pauli.
//! Decoding undoes both and accepts iff every trap reads 0.

pub mod clifford;

use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::qsim::{ket0, random_state, random_unitary_2, Basis, Gate, QuantumRegister, QubitLabel, DEFAULT_CAP};
use crate::{Error, Result};

pub use clifford::{Clifford, Pauli};

/// Secret key of one authenticated transmission. Each copy may be used
/// for exactly one [`authenticate`] or [`decode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthKey {
    m: usize,
    s: usize,
    pub clifford_seed: u64,
    /// `x` then `z` bit for each of the `m + s` encoded qubits.
    pub pauli_pad: Vec<bool>,
    spent: bool,
}

impl AuthKey {
    pub fn random<E: Entropy + ?Sized>(m: usize, s: usize, rng: &mut E) -> Result<Self> {
        check_sizes(m, s)?;
        Ok(Self {
            m,
            s,
            clifford_seed: rng.u64(),
            pauli_pad: rng.bits(2 * (m + s)),
            spent: false,
        })
    }

    /// Number of key bits for an `m`-qubit message with `s` traps.
    pub fn bit_len(m: usize, s: usize) -> usize {
        64 + 2 * (m + s)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut bits: Vec<bool> = (0..64).rev().map(|i| self.clifford_seed >> i & 1 == 1).collect();
        bits.extend(&self.pauli_pad);
        bits
    }

    pub fn from_bits(m: usize, s: usize, bits: &[bool]) -> Result<Self> {
        check_sizes(m, s)?;
        if bits.len() != Self::bit_len(m, s) {
            return Err(Error::Dimension {
                expected: Self::bit_len(m, s),
                got: bits.len(),
            });
        }
        Ok(Self {
            m,
            s,
            clifford_seed: bits[..64].iter().fold(0, |acc, &b| acc << 1 | b as u64),
            pauli_pad: bits[64..].to_vec(),
            spent: false,
        })
    }

    pub fn message_qubits(&self) -> usize {
        self.m
    }

    pub fn traps(&self) -> usize {
        self.s
    }

    pub fn is_spent(&self) -> bool {
        self.spent
    }

    fn spend(&mut self) -> Result<()> {
        if self.spent {
            return Err(Error::Contract("authentication key reused".into()));
        }
        self.spent = true;
        Ok(())
    }

    pub fn clifford(&self) -> Result<Clifford> {
        Clifford::from_seed(self.m + self.s, self.clifford_seed)
    }

    fn apply_pad(&self, reg: &mut QuantumRegister, labels: &[QubitLabel]) -> Result<()> {
        for (i, l) in labels.iter().enumerate() {
            if self.pauli_pad[2 * i + 1] {
                reg.apply_gate(&Gate::Z, &[*l])?;
            }
            if self.pauli_pad[2 * i] {
                reg.apply_gate(&Gate::X, &[*l])?;
            }
        }
        Ok(())
    }
}

fn check_sizes(m: usize, s: usize) -> Result<()> {
    if m == 0 || s == 0 || m + s > clifford::MAX_QUBITS {
        return Err(Error::InvalidConfig(format!(
            "need m ≥ 1, s ≥ 1 and m + s ≤ {}, got m={m} s={s}",
            clifford::MAX_QUBITS
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthVerdict {
    pub accepted: bool,
    /// The message qubits, still in the register; meaningful only if accepted.
    pub decoded_labels: Vec<QubitLabel>,
}

/// Encodes `message` in place. `traps` are fresh labels for the `s`
/// ancillas. Returns the `m + s` encoded labels (message first).
pub fn authenticate(
    reg: &mut QuantumRegister,
    message: &[QubitLabel],
    traps: &[QubitLabel],
    key: &mut AuthKey,
) -> Result<Vec<QubitLabel>> {
    if message.len() != key.m || traps.len() != key.s {
        return Err(Error::Dimension {
            expected: key.m + key.s,
            got: message.len() + traps.len(),
        });
    }
    key.spend()?;
    let mut labels: Vec<QubitLabel> = message.iter().map(|l| reg.resolve(*l)).collect::<Result<_>>()?;
    for t in traps {
        reg.push_qubit(*t, ket0())?;
        labels.push(*t);
    }
    reg.apply_matrix(&labels, &key.clifford()?.unitary())?;
    key.apply_pad(reg, &labels)?;
    Ok(labels)
}

/// Inverts pad and Clifford, then measures and removes the traps.
pub fn decode<E: Entropy + ?Sized>(
    reg: &mut QuantumRegister,
    encoded: &[QubitLabel],
    key: &mut AuthKey,
    rng: &mut E,
) -> Result<AuthVerdict> {
    if encoded.len() != key.m + key.s {
        return Err(Error::Dimension {
            expected: key.m + key.s,
            got: encoded.len(),
        });
    }
    key.spend()?;
    let labels: Vec<QubitLabel> = encoded.iter().map(|l| reg.resolve(*l)).collect::<Result<_>>()?;
    key.apply_pad(reg, &labels)?;
    reg.apply_matrix(&labels, &key.clifford()?.unitary().adjoint())?;
    let mut accepted = true;
    for t in &labels[key.m..] {
        accepted &= !reg.measure_remove(*t, Basis::Computational, rng)?.outcome;
    }
    Ok(AuthVerdict {
        accepted,
        decoded_labels: labels[..key.m].to_vec(),
    })
}

/// The fixed attack suite run against encoded qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    Identity,
    /// A uniformly random non-identity Pauli on all encoded qubits.
    RandomPauli,
    /// A Haar-random single-qubit unitary on a uniformly chosen qubit.
    RandomUnitary,
    /// Replaces a uniformly chosen qubit with a fresh Haar-random one.
    SwapWithFresh,
}

impl Attack {
    pub const SUITE: [Attack; 3] = [Attack::RandomPauli, Attack::RandomUnitary, Attack::SwapWithFresh];

    pub fn apply<E: Entropy + ?Sized>(
        self,
        reg: &mut QuantumRegister,
        encoded: &[QubitLabel],
        fresh: QubitLabel,
        rng: &mut E,
    ) -> Result<()> {
        match self {
            Attack::Identity => {}
            Attack::RandomPauli => {
                let k = encoded.len();
                let v = 1 + rng.below((1u64 << (2 * k)) - 1);
                for (i, l) in encoded.iter().enumerate() {
                    if v >> (2 * i + 1) & 1 == 1 {
                        reg.apply_gate(&Gate::Z, &[*l])?;
                    }
                    if v >> (2 * i) & 1 == 1 {
                        reg.apply_gate(&Gate::X, &[*l])?;
                    }
                }
            }
            Attack::RandomUnitary => {
                let target = encoded[rng.below(encoded.len() as u64) as usize];
                reg.apply_matrix(&[target], &random_unitary_2(rng))?;
            }
            Attack::SwapWithFresh => {
                let target = encoded[rng.below(encoded.len() as u64) as usize];
                let st = random_state(1, rng);
                reg.push_qubit(fresh, [st[0], st[1]])?;
                reg.apply_gate(&Gate::Swap, &[target, fresh])?;
                reg.discard(fresh, rng)?;
            }
        }
        Ok(())
    }
}

/// Outcome of one authenticate / attack / decode round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSample {
    pub accepted: bool,
    /// Fidelity of the decoded message to the original (0 when rejected).
    pub fidelity: f64,
}

impl AttackSample {
    /// Per-trial contribution to `p·q + (1 − p)`.
    pub fn score(&self) -> f64 {
        if self.accepted {
            self.fidelity
        } else {
            1.0
        }
    }
}

/// A random `m`-qubit message, authenticated with a fresh key, attacked,
/// then decoded.
pub fn attack_trial<E: Entropy + ?Sized>(m: usize, s: usize, attack: Attack, rng: &mut E) -> Result<AttackSample> {
    let psi = random_state(m, rng);
    let message: Vec<QubitLabel> = (0..m).map(|i| QubitLabel::new(0, i as u32)).collect();
    let traps: Vec<QubitLabel> = (0..s).map(|i| QubitLabel::new(0, (m + i) as u32)).collect();
    let mut reg = QuantumRegister::from_amplitudes(message.clone(), psi.clone(), DEFAULT_CAP)?;
    let mut key = AuthKey::random(m, s, rng)?;
    let mut receiver_key = AuthKey::from_bits(m, s, &key.to_bits())?;
    let encoded = authenticate(&mut reg, &message, &traps, &mut key)?;
    attack.apply(&mut reg, &encoded, QubitLabel::new(1, (m + s) as u32), rng)?;
    let verdict = decode(&mut reg, &encoded, &mut receiver_key, rng)?;
    let fidelity = if verdict.accepted {
        reg.reduced_fidelity(&verdict.decoded_labels, &psi)?
    } else {
        0.0
    };
    Ok(AttackSample {
        accepted: verdict.accepted,
        fidelity,
    })
}

/// `1 − (m + s) / (s (2^s + 1))`.
pub fn security_bound(m: usize, s: usize) -> f64 {
    1.0 - (m + s) as f64 / (s as f64 * ((1u64 << s) as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{Complex, Matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 1..=2 {
            for s in 2..=4 {
                for _ in 0..50 {
                    let sample = attack_trial(m, s, Attack::Identity, &mut rng).unwrap();
                    assert!(sample.accepted);
                    assert!(sample.fidelity > 1.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn key_reuse_is_a_contract_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut reg = QuantumRegister::make_ghz(2).unwrap();
        let labels = reg.labels().to_vec();
        let mut key = AuthKey::random(1, 1, &mut rng).unwrap();
        authenticate(&mut reg, &labels[..1], &[QubitLabel::new(0, 10)], &mut key).unwrap();
        let err = authenticate(&mut reg, &labels[1..], &[QubitLabel::new(1, 11)], &mut key);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn key_bits_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let key = AuthKey::random(2, 3, &mut rng).unwrap();
        assert_eq!(key.to_bits().len(), AuthKey::bit_len(2, 3));
        assert_eq!(AuthKey::from_bits(2, 3, &key.to_bits()).unwrap(), key);
    }

    #[test]
    fn pad_average_is_maximally_mixed() {
        // m = 1, s = 1: averaging the encoded state over all 16 pads with a
        // fixed Clifford gives I/4.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_state(1, &mut rng);
        let seed = rng.u64();
        let mut avg = vec![Complex::new(0.0, 0.0); 16];
        for pad in 0..16u32 {
            let mut key = AuthKey::from_bits(
                1,
                1,
                &(0..64)
                    .rev()
                    .map(|i| seed >> i & 1 == 1)
                    .chain((0..4).map(|i| pad >> i & 1 == 1))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let msg = QubitLabel::new(0, 0);
            let mut reg = QuantumRegister::from_amplitudes(vec![msg], psi.clone(), 4).unwrap();
            let enc = authenticate(&mut reg, &[msg], &[QubitLabel::new(0, 1)], &mut key).unwrap();
            let rho = reg.reduced_density(&enc).unwrap();
            for (a, b) in avg.iter_mut().zip(rho.data()) {
                *a += b / 16.0;
            }
        }
        let expected = Matrix::identity(4);
        for (a, b) in avg.iter().zip(expected.data()) {
            assert!((a - b / 4.0).norm() < 1e-12);
        }
    }

    #[test]
    fn attacks_respect_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for attack in Attack::SUITE {
            let trials = 300;
            let mean: f64 = (0..trials)
                .map(|_| attack_trial(1, 4, attack, &mut rng).unwrap().score())
                .sum::<f64>()
                / trials as f64;
            assert!(mean > security_bound(1, 4) - 0.05, "{attack:?}: {mean}");
        }
    }

    #[test]
    fn bound_example() {
        assert!((security_bound(1, 4) - (1.0 - 5.0 / 68.0)).abs() < 1e-15);
    }

    #[test]
    fn tampered_pauli_is_mostly_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rejected = (0..400)
            .filter(|_| !attack_trial(1, 4, Attack::RandomPauli, &mut rng).unwrap().accepted)
            .count();
        assert!(rejected > 350);
    }
}
