//! Dense state-vector engine.
//!
//! A [`QuantumRegister`] stores `2^k` complex amplitudes over an ordered list
//! of [`QubitLabel`]s. Label `i` of `k` is bit `k - 1 - i` of the basis index,
//! so basis index `0b10` on labels `[a, b]` is the ket `|1⟩_a |0⟩_b`.
//!
//! Global phase is never tracked; states are compared with [`fidelity`].
//!
//! [`fidelity`]: QuantumRegister::fidelity

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::{Error, Result};

pub type Complex = Complex64;

pub const DEFAULT_CAP: usize = 16;
pub const MAX_CAP: usize = 25;
pub const NORM_TOLERANCE: f64 = 1e-9;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Identifies one simulated qubit. Identity is the `tag`; `owner` is the
/// participant currently holding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitLabel {
    pub owner: usize,
    pub tag: u32,
}

impl QubitLabel {
    pub const fn new(owner: usize, tag: u32) -> Self {
        Self { owner, tag }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}@p{}", self.tag, self.owner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Computational,
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub label: QubitLabel,
    pub basis: Basis,
    pub outcome: bool,
}

/// A dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex>,
}

impl Matrix {
    pub fn new(dim: usize, data: Vec<Complex>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Self { dim: d, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        Matrix { dim: d, data }
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.adjoint().mul(self);
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((prod.get(r, c) - target).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev > NORM_TOLERANCE {
            Err(Error::NonUnitary(dev))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    /// Conditional phase change: `|0⟩ → |0⟩`, `|1⟩ → -|1⟩`.
    P,
    S,
    Cnot,
    Swap,
    Unitary(Matrix),
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Cnot | Gate::Swap => 2,
            Gate::Unitary(m) => m.dim().trailing_zeros() as usize,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> Matrix {
        let h = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex::new(re, im);
        match self {
            Gate::H => Matrix::from_real(2, &[h, h, h, -h]).unwrap(),
            Gate::X => Matrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
            Gate::Y => Matrix::new(2, vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).unwrap(),
            Gate::Z | Gate::P => Matrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap(),
            Gate::S => Matrix::new(2, vec![ONE, ZERO, ZERO, c(0.0, 1.0)]).unwrap(),
            Gate::Cnot => Matrix::from_real(
                4,
                &[
                    1.0, 0.0, 0.0, 0.0, //
                    0.0, 1.0, 0.0, 0.0, //
                    0.0, 0.0, 0.0, 1.0, //
                    0.0, 0.0, 1.0, 0.0,
                ],
            )
            .unwrap(),
            Gate::Swap => Matrix::from_real(
                4,
                &[
                    1.0, 0.0, 0.0, 0.0, //
                    0.0, 0.0, 1.0, 0.0, //
                    0.0, 1.0, 0.0, 0.0, //
                    0.0, 0.0, 0.0, 1.0,
                ],
            )
            .unwrap(),
            Gate::Unitary(m) => m.clone(),
        }
    }
}

/// `|0⟩`
pub fn ket0() -> [Complex; 2] {
    [ONE, ZERO]
}

/// `|1⟩`
pub fn ket1() -> [Complex; 2] {
    [ZERO, ONE]
}

/// `(|0⟩ + |1⟩)/√2`
pub fn ket_plus() -> [Complex; 2] {
    let h = Complex::new(FRAC_1_SQRT_2, 0.0);
    [h, h]
}

/// Amplitudes of `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz_amplitudes(n: usize) -> Vec<Complex> {
    let mut amps = vec![ZERO; 1 << n];
    let h = Complex::new(FRAC_1_SQRT_2, 0.0);
    amps[0] = h;
    amps[(1 << n) - 1] = h;
    amps
}

/// `(|00⟩ + |11⟩)/√2`
pub fn phi_plus() -> Vec<Complex> {
    ghz_amplitudes(2)
}

/// `(|00⟩ - |11⟩)/√2`
pub fn phi_minus() -> Vec<Complex> {
    let mut v = ghz_amplitudes(2);
    v[3] = -v[3];
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    labels: Vec<QubitLabel>,
    amps: Vec<Complex>,
    cap: usize,
}

impl Default for QuantumRegister {
    fn default() -> Self {
        Self::new(DEFAULT_CAP)
    }
}

impl QuantumRegister {
    /// An empty register (a single amplitude of 1 over zero qubits).
    pub fn new(cap: usize) -> Self {
        Self {
            labels: Vec::new(),
            amps: vec![ONE],
            cap: cap.min(MAX_CAP),
        }
    }

    pub fn from_amplitudes(labels: Vec<QubitLabel>, amps: Vec<Complex>, cap: usize) -> Result<Self> {
        let cap = cap.min(MAX_CAP);
        if labels.len() > cap {
            return Err(Error::Resource {
                requested: labels.len(),
                cap,
            });
        }
        if amps.len() != 1 << labels.len() {
            return Err(Error::Dimension {
                expected: 1 << labels.len(),
                got: amps.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].iter().any(|o| o.tag == l.tag) {
                return Err(Error::DuplicateLabel(*l));
            }
        }
        let reg = Self { labels, amps, cap };
        let norm = reg.norm_sq();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Contract(format!("state has squared norm {norm}")));
        }
        Ok(reg)
    }

    /// `|+_n⟩` on participants `0..n`, qubit `i` tagged `i`.
    pub fn make_ghz(n: usize) -> Result<Self> {
        let labels = (0..n).map(|i| QubitLabel::new(i, i as u32)).collect();
        Self::ghz_on(labels, DEFAULT_CAP)
    }

    pub fn ghz_on(labels: Vec<QubitLabel>, cap: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Contract("GHZ state needs at least one qubit".into()));
        }
        let amps = ghz_amplitudes(labels.len());
        Self::from_amplitudes(labels, amps, cap)
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn set_cap(&mut self, cap: usize) -> Result<()> {
        let cap = cap.min(MAX_CAP);
        if self.len() > cap {
            return Err(Error::Resource {
                requested: self.len(),
                cap,
            });
        }
        self.cap = cap;
        Ok(())
    }

    pub fn contains(&self, label: QubitLabel) -> bool {
        self.labels.iter().any(|l| l.tag == label.tag)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn labels_owned_by(&self, owner: usize) -> Vec<QubitLabel> {
        self.labels.iter().copied().filter(|l| l.owner == owner).collect()
    }

    /// Current label (with up-to-date owner) for a tag-equal label.
    pub fn resolve(&self, label: QubitLabel) -> Result<QubitLabel> {
        self.labels
            .iter()
            .copied()
            .find(|l| l.tag == label.tag)
            .ok_or(Error::UnknownLabel(label))
    }

    fn index_of(&self, label: QubitLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.tag == label.tag)
            .ok_or(Error::UnknownLabel(label))
    }

    fn bit_of(&self, label: QubitLabel) -> Result<usize> {
        Ok(self.len() - 1 - self.index_of(label)?)
    }

    /// Hands a qubit to another participant. The quantum state is untouched.
    pub fn transfer(&mut self, label: QubitLabel, new_owner: usize) -> Result<QubitLabel> {
        let i = self.index_of(label)?;
        self.labels[i].owner = new_owner;
        Ok(self.labels[i])
    }

    fn ensure_room(&self, extra: usize) -> Result<()> {
        if self.len() + extra > self.cap {
            return Err(Error::Resource {
                requested: self.len() + extra,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Appends a fresh qubit in the given (normalised) single-qubit state.
    pub fn push_qubit(&mut self, label: QubitLabel, state: [Complex; 2]) -> Result<()> {
        if self.contains(label) {
            return Err(Error::DuplicateLabel(label));
        }
        self.ensure_room(1)?;
        let norm = state[0].norm_sqr() + state[1].norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Contract(format!("qubit state has squared norm {norm}")));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * 2);
        for a in &self.amps {
            amps.push(a * state[0]);
            amps.push(a * state[1]);
        }
        self.amps = amps;
        self.labels.push(label);
        Ok(())
    }

    /// Tensor product `self ⊗ other`; `other`'s labels go last.
    pub fn merge(&mut self, other: QuantumRegister) -> Result<()> {
        for l in &other.labels {
            if self.contains(*l) {
                return Err(Error::DuplicateLabel(*l));
            }
        }
        self.ensure_room(other.len())?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        self.amps = amps;
        self.labels.extend(other.labels);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate, targets: &[QubitLabel]) -> Result<()> {
        if targets.len() != gate.arity() {
            return Err(Error::Dimension {
                expected: gate.arity(),
                got: targets.len(),
            });
        }
        match gate {
            Gate::H => self.apply_single(targets[0], &Gate::H.matrix()),
            Gate::X => {
                let bit = self.bit_of(targets[0])?;
                let mask = 1usize << bit;
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        self.amps.swap(i, i | mask);
                    }
                }
                Ok(())
            }
            Gate::Z | Gate::P => {
                let mask = 1usize << self.bit_of(targets[0])?;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a = -*a;
                    }
                }
                Ok(())
            }
            Gate::Cnot => {
                if targets[0].tag == targets[1].tag {
                    return Err(Error::Contract("CNOT control equals target".into()));
                }
                let c = 1usize << self.bit_of(targets[0])?;
                let t = 1usize << self.bit_of(targets[1])?;
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
                Ok(())
            }
            Gate::Unitary(m) => {
                m.check_unitary()?;
                self.apply_matrix(targets, m)
            }
            other => self.apply_matrix(targets, &other.matrix()),
        }
    }

    fn apply_single(&mut self, target: QubitLabel, m: &Matrix) -> Result<()> {
        let mask = 1usize << self.bit_of(target)?;
        let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let x = self.amps[i];
                let y = self.amps[i | mask];
                self.amps[i] = a * x + b * y;
                self.amps[i | mask] = c * x + d * y;
            }
        }
        Ok(())
    }

    /// Applies a `2^k`-dimensional matrix to `targets`; target `j` is bit
    /// `k - 1 - j` of the matrix index. The caller vouches for unitarity.
    pub fn apply_matrix(&mut self, targets: &[QubitLabel], m: &Matrix) -> Result<()> {
        let k = targets.len();
        if m.dim() != 1 << k {
            return Err(Error::Dimension {
                expected: 1 << k,
                got: m.dim(),
            });
        }
        if k == 1 {
            return self.apply_single(targets[0], m);
        }
        let mut bits = Vec::with_capacity(k);
        for (j, t) in targets.iter().enumerate() {
            if targets[..j].iter().any(|o| o.tag == t.tag) {
                return Err(Error::DuplicateLabel(*t));
            }
            bits.push(self.bit_of(*t)?);
        }
        let dim = 1usize << k;
        let offsets: Vec<usize> = (0..dim)
            .map(|local| {
                (0..k)
                    .filter(|&j| local >> (k - 1 - j) & 1 == 1)
                    .fold(0usize, |acc, j| acc | 1 << bits[j])
            })
            .collect();
        let mask: usize = bits.iter().fold(0, |acc, b| acc | 1 << b);
        let mut gathered = vec![ZERO; dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (slot, off) in gathered.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &m.data()[r * dim..(r + 1) * dim];
                let mut acc = ZERO;
                for (coef, v) in row.iter().zip(&gathered) {
                    acc += coef * v;
                }
                self.amps[base | off] = acc;
            }
        }
        Ok(())
    }

    fn renormalize(&mut self, weight: f64) {
        let scale = 1.0 / weight.sqrt();
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    fn prob_one(&self, mask: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projective measurement; the qubit stays in the register in the
    /// post-measurement eigenstate of `basis`.
    pub fn measure<E: Entropy + ?Sized>(
        &mut self,
        label: QubitLabel,
        basis: Basis,
        rng: &mut E,
    ) -> Result<MeasurementRecord> {
        let label = self.resolve(label)?;
        if basis == Basis::Hadamard {
            self.apply_gate(&Gate::H, &[label])?;
        }
        let mask = 1usize << self.bit_of(label)?;
        let p1 = self.prob_one(mask).clamp(0.0, 1.0);
        let outcome = rng.bernoulli(p1);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & mask != 0) != outcome {
                *a = ZERO;
            }
        }
        self.renormalize(if outcome { p1 } else { 1.0 - p1 });
        if basis == Basis::Hadamard {
            self.apply_gate(&Gate::H, &[label])?;
        }
        Ok(MeasurementRecord { label, basis, outcome })
    }

    /// Measures and drops the qubit.
    pub fn measure_remove<E: Entropy + ?Sized>(
        &mut self,
        label: QubitLabel,
        basis: Basis,
        rng: &mut E,
    ) -> Result<MeasurementRecord> {
        let label = self.resolve(label)?;
        if basis == Basis::Hadamard {
            self.apply_gate(&Gate::H, &[label])?;
        }
        let rec = self.measure(label, Basis::Computational, rng)?;
        self.drop_definite(label, rec.outcome)?;
        Ok(MeasurementRecord { basis, ..rec })
    }

    /// Traces a qubit out. On a pure-state engine this is a computational
    /// measurement whose outcome nobody keeps.
    pub fn discard<E: Entropy + ?Sized>(&mut self, label: QubitLabel, rng: &mut E) -> Result<()> {
        self.measure_remove(label, Basis::Computational, rng).map(|_| ())
    }

    /// Removes a qubit known to be in computational state `value`.
    fn drop_definite(&mut self, label: QubitLabel, value: bool) -> Result<()> {
        let bit = self.bit_of(label)?;
        let idx = self.index_of(label)?;
        let low = (1usize << bit) - 1;
        let mut amps = Vec::with_capacity(self.amps.len() / 2);
        for j in 0..self.amps.len() / 2 {
            let i = ((j & !low) << 1) | (j & low) | ((value as usize) << bit);
            amps.push(self.amps[i]);
        }
        self.amps = amps;
        self.labels.remove(idx);
        Ok(())
    }

    /// Probability that the listed qubits are all equal (all 0 or all 1).
    pub fn ghz_subspace_weight(&self, labels: &[QubitLabel]) -> Result<f64> {
        let mask = self.mask_of(labels)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let v = i & mask;
                v == 0 || v == mask
            })
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn mask_of(&self, labels: &[QubitLabel]) -> Result<usize> {
        if labels.is_empty() {
            return Err(Error::Contract("empty label list".into()));
        }
        let mut mask = 0usize;
        for l in labels {
            let b = 1usize << self.bit_of(*l)?;
            if mask & b != 0 {
                return Err(Error::DuplicateLabel(*l));
            }
            mask |= b;
        }
        Ok(mask)
    }

    /// Two-outcome measurement `{Π, I − Π}` with
    /// `Π = |0…0⟩⟨0…0| + |1…1⟩⟨1…1|` on `labels`. Returns `true` on `Π`.
    pub fn project_ghz_subspace<E: Entropy + ?Sized>(&mut self, labels: &[QubitLabel], rng: &mut E) -> Result<bool> {
        let mask = self.mask_of(labels)?;
        let w = self.ghz_subspace_weight(labels)?.clamp(0.0, 1.0);
        let pass = rng.bernoulli(w);
        for (i, a) in self.amps.iter_mut().enumerate() {
            let v = i & mask;
            if (v == 0 || v == mask) != pass {
                *a = ZERO;
            }
        }
        self.renormalize(if pass { w } else { 1.0 - w });
        Ok(pass)
    }

    /// Bell measurement of `(a, b)`; both qubits are consumed.
    ///
    /// Returns `(z, x)` such that the pair was projected onto
    /// `(I ⊗ Z^z X^x)|Φ⁺⟩`. Teleporting through `b`'s partner leaves it in
    /// `Z^z X^x |φ⟩`, undone by applying `Z^z` then `X^x`.
    pub fn bell_measure<E: Entropy + ?Sized>(
        &mut self,
        a: QubitLabel,
        b: QubitLabel,
        rng: &mut E,
    ) -> Result<(bool, bool)> {
        let a = self.resolve(a)?;
        let b = self.resolve(b)?;
        self.apply_gate(&Gate::Cnot, &[a, b])?;
        self.apply_gate(&Gate::H, &[a])?;
        let z = self.measure_remove(a, Basis::Computational, rng)?.outcome;
        let x = self.measure_remove(b, Basis::Computational, rng)?.outcome;
        Ok((z, x))
    }

    /// Applies the teleportation correction for outcome `(z, x)`.
    pub fn pauli_correct(&mut self, target: QubitLabel, z: bool, x: bool) -> Result<()> {
        if z {
            self.apply_gate(&Gate::Z, &[target])?;
        }
        if x {
            self.apply_gate(&Gate::X, &[target])?;
        }
        Ok(())
    }

    /// Reduced density matrix of `labels` (row-major, `2^k × 2^k`).
    pub fn reduced_density(&self, labels: &[QubitLabel]) -> Result<Matrix> {
        let k = labels.len();
        let bits: Vec<usize> = labels.iter().map(|l| self.bit_of(*l)).collect::<Result<_>>()?;
        let mask = self.mask_of(labels)?;
        let dim = 1usize << k;
        let local = |i: usize| {
            bits.iter()
                .enumerate()
                .fold(0usize, |acc, (j, b)| acc | ((i >> b) & 1) << (k - 1 - j))
        };
        // Group amplitudes by the environment index.
        let mut rho = vec![ZERO; dim * dim];
        let mut env: std::collections::HashMap<usize, Vec<(usize, Complex)>> = Default::default();
        for (i, a) in self.amps.iter().enumerate() {
            if *a != ZERO {
                env.entry(i & !mask).or_default().push((local(i), *a));
            }
        }
        for entries in env.values() {
            for (r, ar) in entries {
                for (c, ac) in entries {
                    rho[r * dim + c] += ar * ac.conj();
                }
            }
        }
        Matrix::new(dim, rho)
    }

    /// `⟨t|ρ|t⟩` for the reduced state on `labels`, without requiring the
    /// rest of the register to be uncorrelated.
    pub fn reduced_fidelity(&self, labels: &[QubitLabel], target: &[Complex]) -> Result<f64> {
        let rho = self.reduced_density(labels)?;
        if target.len() != rho.dim() {
            return Err(Error::Dimension {
                expected: rho.dim(),
                got: target.len(),
            });
        }
        let mut acc = ZERO;
        for r in 0..rho.dim() {
            for c in 0..rho.dim() {
                acc += target[r].conj() * rho.get(r, c) * target[c];
            }
        }
        Ok(acc.re.clamp(0.0, 1.0))
    }

    /// `|⟨target|φ⟩|²` where `φ` is the (pure) state of `labels`.
    ///
    /// Fails with a contract error if `labels` are entangled with the rest
    /// of the register.
    pub fn fidelity(&self, labels: &[QubitLabel], target: &[Complex]) -> Result<f64> {
        let rho = self.reduced_density(labels)?;
        let purity = rho
            .mul(&rho)
            .data()
            .iter()
            .step_by(rho.dim() + 1)
            .map(|d| d.re)
            .sum::<f64>();
        if purity < 1.0 - NORM_TOLERANCE {
            return Err(Error::Contract(format!(
                "qubits are entangled with the rest of the register (purity {purity:.12})"
            )));
        }
        self.reduced_fidelity(labels, target)
    }

    /// Weight outside `span{|0…0⟩_H, |1…1⟩_H} ⊗ anything`.
    pub fn weight_outside_all_equal(&self, honest: &[QubitLabel]) -> Result<f64> {
        Ok(1.0 - self.ghz_subspace_weight(honest)?)
    }
}

/// Haar-random single-qubit unitary.
pub fn random_unitary_2<E: Entropy + ?Sized>(rng: &mut E) -> Matrix {
    let v = random_state(1, rng);
    let (a, b) = (v[0], v[1]);
    let phase = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.unit());
    Matrix::new(2, vec![a, -b.conj() * phase, b, a.conj() * phase]).unwrap()
}

/// Haar-random pure state on `n` qubits.
pub fn random_state<E: Entropy + ?Sized>(n: usize, rng: &mut E) -> Vec<Complex> {
    let normal = |rng: &mut E| {
        // Box-Muller on the source's uniform draws.
        let u1 = rng.unit().max(f64::MIN_POSITIVE);
        let u2 = rng.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut v: Vec<Complex> = (0..1 << n).map(|_| Complex::new(normal(rng), normal(rng))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= norm;
    }
    v
}
