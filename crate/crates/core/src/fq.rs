//! Arbitrary-precision prime-field arithmetic and matrices over F_q.
//!
//! Every commitment and protocol message lives in a prime field whose
//! modulus is sized like 64·n!·2^{3k}, far past 64-bit words, so values are
//! `BigUint` residues tied to a certified-prime modulus. Moduli are shared
//! through `Arc`; two elements interoperate iff their moduli are equal.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::SeededRng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FqError {
    #[error("modulus {0} is not prime")]
    NotPrime(BigUint),
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(BigUint),
    #[error("operands belong to different fields")]
    ModulusMismatch,
    #[error("division by zero in F_q")]
    DivisionByZero,
    #[error("matrix shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("value {0} is not a residue mod {1}")]
    ValueOutOfRange(BigUint, BigUint),
}

/// Witnesses to the fixed Miller-Rabin bases below being a *deterministic*
/// primality test: no composite below this bound passes all twelve.
pub const MILLER_RABIN_DETERMINISTIC_BELOW: &str = "3317044064679887385961981";
const MILLER_RABIN_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const TRIAL_DIVISION_LIMIT: u64 = 1000;

fn trial_division(n: &BigUint) -> Option<bool> {
    let two = BigUint::from(2u32);
    if n < &two {
        return Some(false);
    }
    if n == &two {
        return Some(true);
    }
    if (n % 2u32).is_zero() {
        return Some(false);
    }
    let mut d = 3u64;
    while d < TRIAL_DIVISION_LIMIT {
        let db = BigUint::from(d);
        if &db * &db > *n {
            return Some(true); // fully factored range, no divisor found
        }
        if (n % d).is_zero() {
            return Some(false);
        }
        d += 2;
    }
    None // inconclusive, defer to Miller-Rabin
}

fn miller_rabin(n: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n > 1 is odd here");
    let d = &n_minus_1 >> s;
    'bases: for &a in &MILLER_RABIN_BASES {
        let a = BigUint::from(a);
        if a >= *n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Deterministic primality check: trial division by all odd numbers below
/// 1000, then Miller-Rabin with the twelve fixed bases (exact for every
/// n < 3.317e24, which covers all protocol sizings in range; see
/// [`MILLER_RABIN_DETERMINISTIC_BELOW`]).
pub fn is_prime(n: &BigUint) -> bool {
    match trial_division(n) {
        Some(answer) => answer,
        None => miller_rabin(n),
    }
}

/// Smallest prime >= x.
pub fn next_prime_at_least(x: &BigUint) -> FieldModulus {
    let two = BigUint::from(2u32);
    if *x <= two {
        return FieldModulus { q: two };
    }
    let mut candidate = x.clone();
    if (&candidate % 2u32).is_zero() {
        candidate += 1u32;
    }
    while !is_prime(&candidate) {
        candidate += 2u32;
    }
    FieldModulus { q: candidate }
}

/// A certified-prime field modulus. Construction runs the primality check;
/// holders may assume q is prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldModulus {
    q: BigUint,
}

impl FieldModulus {
    pub fn new(q: BigUint) -> Result<Arc<Self>, FqError> {
        if q < BigUint::from(2u32) {
            return Err(FqError::ModulusTooSmall(q));
        }
        if !is_prime(&q) {
            return Err(FqError::NotPrime(q));
        }
        Ok(Arc::new(FieldModulus { q }))
    }

    pub fn from_u64(q: u64) -> Result<Arc<Self>, FqError> {
        Self::new(BigUint::from(q))
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn bits(&self) -> u64 {
        self.q.bits()
    }

    /// Uniform residue via rejection sampling from fixed-width words; no
    /// modulo bias.
    pub fn sample(self: &Arc<Self>, rng: &mut SeededRng) -> FieldElement {
        let bits = self.q.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = (nbytes as u64) * 8 - bits;
        let mask: u8 = 0xffu8 >> excess;
        let mut buf = vec![0u8; nbytes];
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= mask;
            let v = BigUint::from_bytes_be(&buf);
            if v < self.q {
                return FieldElement {
                    value: v,
                    modulus: Arc::clone(self),
                };
            }
        }
    }
}

impl fmt::Display for FieldModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

fn same_field(a: &Arc<FieldModulus>, b: &Arc<FieldModulus>) -> bool {
    Arc::ptr_eq(a, b) || a.q == b.q
}

/// A residue in [0, q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    modulus: Arc<FieldModulus>,
}

impl FieldElement {
    pub fn new(value: BigUint, modulus: &Arc<FieldModulus>) -> Result<Self, FqError> {
        if value >= modulus.q {
            return Err(FqError::ValueOutOfRange(value, modulus.q.clone()));
        }
        Ok(FieldElement {
            value,
            modulus: Arc::clone(modulus),
        })
    }

    /// Residue of an arbitrary integer (reduces mod q).
    pub fn from_integer(value: &BigUint, modulus: &Arc<FieldModulus>) -> Self {
        FieldElement {
            value: value % &modulus.q,
            modulus: Arc::clone(modulus),
        }
    }

    pub fn from_u64(value: u64, modulus: &Arc<FieldModulus>) -> Self {
        Self::from_integer(&BigUint::from(value), modulus)
    }

    pub fn zero(modulus: &Arc<FieldModulus>) -> Self {
        FieldElement {
            value: BigUint::zero(),
            modulus: Arc::clone(modulus),
        }
    }

    pub fn one(modulus: &Arc<FieldModulus>) -> Self {
        Self::from_integer(&BigUint::one(), modulus)
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &Arc<FieldModulus> {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn require_same_field(&self, rhs: &Self) -> Result<(), FqError> {
        if same_field(&self.modulus, &rhs.modulus) {
            Ok(())
        } else {
            Err(FqError::ModulusMismatch)
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, FqError> {
        self.require_same_field(rhs)?;
        let mut v = &self.value + &rhs.value;
        if v >= self.modulus.q {
            v -= &self.modulus.q;
        }
        Ok(FieldElement {
            value: v,
            modulus: Arc::clone(&self.modulus),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, FqError> {
        self.require_same_field(rhs)?;
        let v = if self.value >= rhs.value {
            &self.value - &rhs.value
        } else {
            &self.modulus.q - &rhs.value + &self.value
        };
        Ok(FieldElement {
            value: v,
            modulus: Arc::clone(&self.modulus),
        })
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, FqError> {
        self.require_same_field(rhs)?;
        Ok(FieldElement {
            value: (&self.value * &rhs.value) % &self.modulus.q,
            modulus: Arc::clone(&self.modulus),
        })
    }

    /// Multiplicative inverse via Fermat (q is certified prime).
    pub fn inv(&self) -> Result<Self, FqError> {
        if self.value.is_zero() {
            return Err(FqError::DivisionByZero);
        }
        let exp = &self.modulus.q - BigUint::from(2u32);
        Ok(FieldElement {
            value: self.value.modpow(&exp, &self.modulus.q),
            modulus: Arc::clone(&self.modulus),
        })
    }

}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // decimal string: entries can exceed 2^53 and must survive JSON
        serializer.serialize_str(&self.value.to_str_radix(10))
    }
}

/// Row-major matrix over one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqMatrix {
    rows: usize,
    cols: usize,
    modulus: Arc<FieldModulus>,
    values: Vec<BigUint>,
}

impl FqMatrix {
    pub fn zero(rows: usize, cols: usize, modulus: &Arc<FieldModulus>) -> Self {
        FqMatrix {
            rows,
            cols,
            modulus: Arc::clone(modulus),
            values: vec![BigUint::zero(); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        modulus: &Arc<FieldModulus>,
        mut f: impl FnMut(usize, usize) -> BigUint,
    ) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c) % &modulus.q);
            }
        }
        FqMatrix {
            rows,
            cols,
            modulus: Arc::clone(modulus),
            values,
        }
    }

    /// Entries drawn i.i.d. uniform on [0, q); deterministic under a fixed
    /// rng state.
    pub fn sample_uniform(
        rows: usize,
        cols: usize,
        modulus: &Arc<FieldModulus>,
        rng: &mut SeededRng,
    ) -> Self {
        let values = (0..rows * cols)
            .map(|_| modulus.sample(rng).value)
            .collect();
        FqMatrix {
            rows,
            cols,
            modulus: Arc::clone(modulus),
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> &Arc<FieldModulus> {
        &self.modulus
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        assert!(r < self.rows && c < self.cols, "index out of range");
        FieldElement {
            value: self.values[r * self.cols + c].clone(),
            modulus: Arc::clone(&self.modulus),
        }
    }

    pub fn raw(&self, r: usize, c: usize) -> &BigUint {
        &self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) -> Result<(), FqError> {
        if !same_field(&self.modulus, &v.modulus) {
            return Err(FqError::ModulusMismatch);
        }
        self.values[r * self.cols + c] = v.value;
        Ok(())
    }

    fn zip(
        &self,
        rhs: &Self,
        f: impl Fn(&BigUint, &BigUint, &BigUint) -> BigUint,
    ) -> Result<Self, FqError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(FqError::ShapeMismatch(
                self.rows, self.cols, rhs.rows, rhs.cols,
            ));
        }
        if !same_field(&self.modulus, &rhs.modulus) {
            return Err(FqError::ModulusMismatch);
        }
        let q = &self.modulus.q;
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| f(a, b, q))
            .collect();
        Ok(FqMatrix {
            rows: self.rows,
            cols: self.cols,
            modulus: Arc::clone(&self.modulus),
            values,
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, FqError> {
        self.zip(rhs, |a, b, q| (a + b) % q)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, FqError> {
        self.zip(rhs, |a, b, q| if a >= b { a - b } else { q - b + a })
    }

    /// Entry-wise product (A ∘ B)_{ij} = A_{ij}·B_{ij}.
    pub fn hadamard(&self, rhs: &Self) -> Result<Self, FqError> {
        self.zip(rhs, |a, b, q| (a * b) % q)
    }
}

impl Serialize for FqMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut rows = serializer.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| self.values[r * self.cols + c].to_str_radix(10))
                .collect();
            rows.serialize_element(&row)?;
        }
        rows.end()
    }
}
