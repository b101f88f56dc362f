//! Uniformly random Clifford unitaries on up to 16 qubits.
//!
//! A Clifford is fixed (up to Pauli signs, which the authentication pad
//! absorbs) by the images `P_j = U X_j U†`, `Q_j = U Z_j U†`. Those images
//! form a symplectic basis of `GF(2)^{2k}`, sampled one vector at a time as
//! a uniform solution of the commutation constraints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::entropy::Entropy;
use crate::qsim::{Complex, Matrix};
use crate::{Error, Result};

pub const MAX_QUBITS: usize = 16;

/// A `k`-qubit Pauli `X^x Z^z` as two masks; qubit `j` is bit `k - 1 - j`,
/// matching the basis-index convention of [`Matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pauli {
    pub x: u32,
    pub z: u32,
}

impl Pauli {
    pub const IDENTITY: Pauli = Pauli { x: 0, z: 0 };

    fn pack(self, k: usize) -> u64 {
        (self.x as u64) << k | self.z as u64
    }

    fn unpack(v: u64, k: usize) -> Self {
        let mask = (1u64 << k) - 1;
        Pauli {
            x: (v >> k & mask) as u32,
            z: (v & mask) as u32,
        }
    }

    /// 1 when the two Paulis anticommute.
    pub fn symplectic(self, other: Pauli) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Applies the Hermitian representative `i^{|x∧z|} X^x Z^z` to `v`.
    pub fn apply(self, v: &[Complex]) -> Vec<Complex> {
        let phase = match (self.x & self.z).count_ones() % 4 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        };
        let mut out = vec![Complex::new(0.0, 0.0); v.len()];
        for (b, a) in v.iter().enumerate() {
            let sign = if (self.z as usize & b).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[b ^ self.x as usize] = a * phase * sign;
        }
        out
    }

    /// Dense matrix of the Hermitian representative.
    pub fn matrix(self, k: usize) -> Matrix {
        let dim = 1usize << k;
        let mut data = vec![Complex::new(0.0, 0.0); dim * dim];
        for c in 0..dim {
            let mut e = vec![Complex::new(0.0, 0.0); dim];
            e[c] = Complex::new(1.0, 0.0);
            for (r, a) in self.apply(&e).into_iter().enumerate() {
                data[r * dim + c] = a;
            }
        }
        Matrix::new(dim, data).expect("square by construction")
    }
}

/// `X_j` or `Z_j` on qubit `j` of `k`.
pub fn single(k: usize, j: usize, x: bool) -> Pauli {
    let bit = 1u32 << (k - 1 - j);
    if x {
        Pauli { x: bit, z: 0 }
    } else {
        Pauli { x: 0, z: bit }
    }
}

/// Uniform solution `y ∈ GF(2)^width` of `⟨row_i, y⟩ = rhs_i`, or `None`
/// if inconsistent.
fn random_solution<E: Entropy + ?Sized>(rows: &[(u64, bool)], width: usize, rng: &mut E) -> Option<u64> {
    let mut rows: Vec<(u64, bool)> = rows.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in (0..width).rev() {
        let bit = 1u64 << col;
        let Some(p) = (r..rows.len()).find(|&i| rows[i].0 & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        let (prow, prhs) = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.0 & bit != 0 {
                row.0 ^= prow;
                row.1 ^= prhs;
            }
        }
        pivots.push((r, col));
        r += 1;
    }
    if rows[r..].iter().any(|&(_, rhs)| rhs) {
        return None;
    }
    let pivot_mask: u64 = pivots.iter().fold(0, |acc, &(_, c)| acc | 1 << c);
    let mut y = 0u64;
    for col in 0..width {
        if pivot_mask >> col & 1 == 0 && rng.bit() {
            y |= 1 << col;
        }
    }
    for &(row, col) in &pivots {
        let (coeffs, rhs) = rows[row];
        let rest = coeffs & !(1 << col);
        if rhs ^ ((rest & y).count_ones() % 2 == 1) {
            y |= 1 << col;
        }
    }
    Some(y)
}

/// Symplectic image of a Clifford: `images[j] = (U X_j U†, U Z_j U†)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clifford {
    k: usize,
    images: Vec<(Pauli, Pauli)>,
}

impl Clifford {
    pub fn identity(k: usize) -> Self {
        Self {
            k,
            images: (0..k).map(|j| (single(k, j, true), single(k, j, false))).collect(),
        }
    }

    /// Uniform over the symplectic group `Sp(2k, 2)`.
    pub fn random<E: Entropy + ?Sized>(k: usize, rng: &mut E) -> Result<Self> {
        if k == 0 || k > MAX_QUBITS {
            return Err(Error::InvalidConfig(format!(
                "Clifford size must be in 1..={MAX_QUBITS}, got {k}"
            )));
        }
        let width = 2 * k;
        // ⟨J(u), y⟩ = ω(u, y), with J swapping the x and z halves.
        let j_of = |u: u64| {
            let p = Pauli::unpack(u, k);
            Pauli { x: p.z, z: p.x }.pack(k)
        };
        let mut chosen: Vec<u64> = Vec::new();
        let mut images = Vec::with_capacity(k);
        for _ in 0..k {
            let rows: Vec<(u64, bool)> = chosen.iter().map(|&u| (j_of(u), false)).collect();
            let a = loop {
                let a = random_solution(&rows, width, rng).expect("homogeneous system");
                if a != 0 {
                    break a;
                }
            };
            let mut rows = rows;
            rows.push((j_of(a), true));
            let b = random_solution(&rows, width, rng).expect("symplectic form is non-degenerate");
            chosen.push(a);
            chosen.push(b);
            images.push((Pauli::unpack(a, k), Pauli::unpack(b, k)));
        }
        Ok(Self { k, images })
    }

    /// Deterministic sample from a 64-bit seed.
    pub fn from_seed(k: usize, seed: u64) -> Result<Self> {
        Self::random(k, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn qubits(&self) -> usize {
        self.k
    }

    pub fn images(&self) -> &[(Pauli, Pauli)] {
        &self.images
    }

    /// A unitary `U` with `U X_j U† = P_j` and `U Z_j U† = Q_j` exactly (no
    /// signs). `U|0⟩` is the joint +1 eigenvector of the `Q_j`, and
    /// `U|x⟩ = ∏ P_j^{x_j} U|0⟩`.
    pub fn unitary(&self) -> Matrix {
        let k = self.k;
        let dim = 1usize << k;
        let zero = Complex::new(0.0, 0.0);
        let mut s0 = Vec::new();
        for start in 0..dim {
            let mut v = vec![zero; dim];
            v[start] = Complex::new(1.0, 0.0);
            for (_, q) in &self.images {
                let qv = q.apply(&v);
                for (a, b) in v.iter_mut().zip(qv) {
                    *a = (*a + b) * 0.5;
                }
            }
            let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            if norm > 1e-6 {
                let scale = 1.0 / norm.sqrt();
                s0 = v.into_iter().map(|a| a * scale).collect();
                break;
            }
        }
        let mut data = vec![zero; dim * dim];
        for col in 0..dim {
            let mut v = s0.clone();
            for (j, (p, _)) in self.images.iter().enumerate() {
                if col >> (k - 1 - j) & 1 == 1 {
                    v = p.apply(&v);
                }
            }
            for (row, a) in v.into_iter().enumerate() {
                data[row * dim + col] = a;
            }
        }
        Matrix::new(dim, data).expect("square by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn close(a: &Matrix, b: &Matrix) -> bool {
        a.data().iter().zip(b.data()).all(|(x, y)| (x - y).norm() < 1e-9)
    }

    #[test]
    fn images_form_a_symplectic_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=8 {
            let c = Clifford::random(k, &mut rng).unwrap();
            for (i, (a, b)) in c.images().iter().enumerate() {
                for (j, (a2, b2)) in c.images().iter().enumerate() {
                    assert!(!a.symplectic(*a2));
                    assert!(!b.symplectic(*b2));
                    assert_eq!(a.symplectic(*b2), i == j);
                }
            }
        }
    }

    #[test]
    fn single_qubit_sampling_is_uniform_over_six_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 60_000;
        let mut counts: BTreeMap<(Pauli, Pauli), usize> = BTreeMap::new();
        for _ in 0..trials {
            let c = Clifford::random(1, &mut rng).unwrap();
            *counts.entry(c.images()[0]).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = trials as f64 / 6.0;
        let sigma = (trials as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts.values() {
            assert!((*c as f64 - expected).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn two_qubit_sampling_reaches_the_whole_group() {
        // |Sp(4, 2)| = 720.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..20_000 {
            seen.insert(Clifford::random(2, &mut rng).unwrap().images().to_vec());
        }
        assert_eq!(seen.len(), 720);
    }

    #[test]
    fn unitary_conjugates_generators_to_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=4 {
            for _ in 0..5 {
                let c = Clifford::random(k, &mut rng).unwrap();
                let u = c.unitary();
                assert!(u.unitarity_deviation() < 1e-9);
                for (j, (p, q)) in c.images().iter().enumerate() {
                    let x = u.mul(&single(k, j, true).matrix(k)).mul(&u.adjoint());
                    let z = u.mul(&single(k, j, false).matrix(k)).mul(&u.adjoint());
                    assert!(close(&x, &p.matrix(k)));
                    assert!(close(&z, &q.matrix(k)));
                }
            }
        }
    }

    #[test]
    fn identity_images_give_identity_unitary() {
        let u = Clifford::identity(3).unitary();
        assert!(close(&u, &Matrix::identity(8)));
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(Clifford::from_seed(5, 42).unwrap(), Clifford::from_seed(5, 42).unwrap());
        assert_ne!(Clifford::from_seed(5, 42).unwrap(), Clifford::from_seed(5, 43).unwrap());
    }
}
