//! GF(2^s) arithmetic and the message tag used by anonymous transmission.

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 16;

/// Irreducible polynomials over GF(2), indexed by degree (bit `d` is `x^d`).
const MODULI: [u32; MAX_DEGREE + 1] = [
    0,
    0b11,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b100_0011,
    0b1000_0011,
    0x11B,
    0x211,
    0x409,
    0x805,
    0x1053,
    0x201B,
    0x4443,
    0x8003,
    0x1_100B,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2n {
    degree: usize,
    modulus: u32,
}

impl Gf2n {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidConfig(format!(
                "field degree must be in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        Ok(Self {
            degree,
            modulus: MODULI[degree],
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> u64 {
        1 << self.degree
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let mut acc: u64 = 0;
        let (a, mut b) = (a as u64, b as u64);
        let mut shifted = a;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= shifted;
            }
            shifted <<= 1;
            b >>= 1;
        }
        let m = self.modulus as u64;
        for bit in (self.degree..2 * self.degree).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= m << (bit - self.degree);
            }
        }
        acc as u32
    }

    pub fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let mut result = 1u32;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        result
    }

    pub fn to_bits(&self, v: u32) -> Vec<bool> {
        (0..self.degree).rev().map(|i| v >> i & 1 == 1).collect()
    }

    pub fn from_bits(&self, bits: &[bool]) -> u32 {
        bits.iter().fold(0, |acc, &b| acc << 1 | b as u32)
    }
}

/// Tag `k^D + Σ_{i=1}^{ℓ} m_i k^i` with `D` the smallest odd integer `≥ ℓ + 2`.
///
/// Every additive error on (message, key, tag) that changes the message or
/// the key is caught unless the uniform key is a root of a nonzero
/// polynomial of degree at most `ℓ + 2`.
pub fn message_tag(field: &Gf2n, message: &[bool], key: u32) -> u32 {
    let len = message.len() as u64;
    let top = if len.is_multiple_of(2) { len + 3 } else { len + 2 };
    let mut acc = field.pow(key, top);
    let mut power = key;
    for &bit in message {
        if bit {
            acc ^= power;
        }
        power = field.mul(power, key);
    }
    acc
}
