//! Arbitrary-precision arithmetic modulo N with exact work-unit accounting.
//!
//! The unit of work is one multiplication mod N. Squarings are tallied in a
//! separate counter but also cost one unit; an extended-GCD inversion costs
//! [`INVERSION_COST`] units. Additions, subtractions and multiplications by
//! single-word integers are free.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision non-negative integer.
pub type Natural = BigUint;

/// Units charged for one modular inversion (extended GCD).
pub const INVERSION_COST: u64 = 8;

/// Parses a decimal string, or a hex string with a `0x` prefix.
/// No sign, no whitespace, no separators.
pub fn parse_natural(s: &str) -> Result<Natural, ParseNaturalError> {
    let (digits, radix) = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(rest) => (rest, 16),
        None => (s, 10),
    };
    if digits.is_empty() {
        return Err(ParseNaturalError { input: s.to_string() });
    }
    BigUint::parse_bytes(digits.as_bytes(), radix)
        .ok_or_else(|| ParseNaturalError { input: s.to_string() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNaturalError {
    input: String,
}

impl fmt::Display for ParseNaturalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not an unsigned decimal or 0x-hex integer: {:?}", self.input)
    }
}

impl std::error::Error for ParseNaturalError {}

/// Shared handle on a modulus N >= 2. Cloning is cheap; residues bound to the
/// same handle compare moduli by pointer first.
#[derive(Clone, Debug)]
pub struct Modulus(Arc<Natural>);

impl Modulus {
    pub fn new(n: Natural) -> Modulus {
        assert!(n >= BigUint::from(2u32), "modulus must be at least 2");
        Modulus(Arc::new(n))
    }

    pub fn from_u64(n: u64) -> Modulus {
        Modulus::new(BigUint::from(n))
    }

    pub fn value(&self) -> &Natural {
        &self.0
    }

    /// Canonical residue of an arbitrary value.
    pub fn residue(&self, value: Natural) -> Residue {
        Residue { value: value % &*self.0, modulus: self.clone() }
    }

    pub fn residue_u64(&self, value: u64) -> Residue {
        self.residue(BigUint::from(value))
    }

    pub fn zero(&self) -> Residue {
        Residue { value: BigUint::zero(), modulus: self.clone() }
    }

    pub fn one(&self) -> Residue {
        self.residue(BigUint::one())
    }
}

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Modulus {}

/// Canonical representative in `[0, N)` bound to its modulus.
#[derive(Clone, PartialEq, Eq)]
pub struct Residue {
    value: Natural,
    modulus: Modulus,
}

impl fmt::Debug for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus.value())
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A divisor of N surfaced by a failed inversion or a phase-2 GCD. This is
/// the factor-detection channel, not an error: `divisor == N` is the rare
/// trivial event, anything else is a nontrivial factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorEvent {
    pub divisor: Natural,
}

impl FactorEvent {
    pub fn is_trivial(&self, n: &Natural) -> bool {
        self.divisor == *n
    }
}

impl fmt::Display for FactorEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "divisor {}", self.divisor)
    }
}

/// Exact count of work units for one trial. Squarings cost one unit like any
/// multiplication; inversions cost [`INVERSION_COST`]. Owned per trial and
/// merged additively at joins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkLedger {
    pub multiplications: u64,
    pub squarings: u64,
    pub inversions: u64,
}

impl WorkLedger {
    pub fn new() -> WorkLedger {
        WorkLedger::default()
    }

    pub fn unit_total(&self) -> u64 {
        self.multiplications + self.squarings + INVERSION_COST * self.inversions
    }

    pub fn merge(&mut self, other: &WorkLedger) {
        self.multiplications += other.multiplications;
        self.squarings += other.squarings;
        self.inversions += other.inversions;
    }
}

impl Residue {
    pub fn value(&self) -> &Natural {
        &self.value
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    /// (a * b) mod N, one unit. Tallied as a squaring when the operands are
    /// equal.
    pub fn mul(&self, rhs: &Residue, ledger: &mut WorkLedger) -> Residue {
        assert!(self.modulus == rhs.modulus, "modulus mismatch");
        if self.value == rhs.value {
            ledger.squarings += 1;
        } else {
            ledger.multiplications += 1;
        }
        Residue {
            value: &self.value * &rhs.value % self.modulus.value(),
            modulus: self.modulus.clone(),
        }
    }

    pub fn square(&self, ledger: &mut WorkLedger) -> Residue {
        ledger.squarings += 1;
        Residue {
            value: &self.value * &self.value % self.modulus.value(),
            modulus: self.modulus.clone(),
        }
    }

    /// Free: additions mod N are not charged.
    pub fn add(&self, rhs: &Residue) -> Residue {
        assert!(self.modulus == rhs.modulus, "modulus mismatch");
        let mut v = &self.value + &rhs.value;
        if v >= *self.modulus.value() {
            v -= self.modulus.value();
        }
        Residue { value: v, modulus: self.modulus.clone() }
    }

    /// Free: subtractions mod N are not charged.
    pub fn sub(&self, rhs: &Residue) -> Residue {
        assert!(self.modulus == rhs.modulus, "modulus mismatch");
        let v = if self.value >= rhs.value {
            &self.value - &rhs.value
        } else {
            self.modulus.value() - &rhs.value + &self.value
        };
        Residue { value: v, modulus: self.modulus.clone() }
    }

    pub fn neg(&self) -> Residue {
        let v = if self.value.is_zero() {
            BigUint::zero()
        } else {
            self.modulus.value() - &self.value
        };
        Residue { value: v, modulus: self.modulus.clone() }
    }

    /// Free: multiplication by a single-word integer.
    pub fn small_mul(&self, k: u64) -> Residue {
        Residue {
            value: &self.value * k % self.modulus.value(),
            modulus: self.modulus.clone(),
        }
    }

    /// a^e mod N by the binary method: between log2(e) and 2 log2(e) units,
    /// exactly t squarings when e = 2^t.
    pub fn pow(&self, e: &Natural, ledger: &mut WorkLedger) -> Residue {
        if e.is_zero() {
            return self.modulus.one();
        }
        let bits = e.bits();
        let mut acc = self.clone();
        for i in (0..bits - 1).rev() {
            acc = acc.square(ledger);
            if e.bit(i) {
                acc = acc.mul(self, ledger);
            }
        }
        acc
    }

    pub fn pow_u64(&self, e: u64, ledger: &mut WorkLedger) -> Residue {
        self.pow(&BigUint::from(e), ledger)
    }

    /// a^-1 mod N when gcd(a, N) = 1, charged K units; otherwise the GCD is a
    /// divisor of N and comes back as a [`FactorEvent`]. A zero input reports
    /// the trivial divisor N.
    pub fn inv(&self, ledger: &mut WorkLedger) -> Result<Residue, FactorEvent> {
        ledger.inversions += 1;
        let (g, u, _) = ext_gcd(&self.value, self.modulus.value());
        if g.is_one() {
            let n = BigInt::from(self.modulus.value().clone());
            let u = u.mod_floor(&n);
            Ok(Residue {
                value: u.to_biguint().expect("mod_floor result is non-negative"),
                modulus: self.modulus.clone(),
            })
        } else {
            Err(FactorEvent { divisor: g })
        }
    }
}

/// Extended GCD: returns (g, u, v) with a*u + n*v = g = gcd(a, n).
pub fn ext_gcd(a: &Natural, n: &Natural) -> (Natural, BigInt, BigInt) {
    let mut old_r = BigInt::from(a.clone());
    let mut r = BigInt::from(n.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    debug_assert!(!old_r.is_negative());
    (old_r.to_biguint().expect("gcd is non-negative"), old_s, old_t)
}

pub fn gcd(a: &Natural, b: &Natural) -> Natural {
    a.gcd(b)
}

/// Element-wise inverses by Montgomery's trick: exactly one inversion plus
/// 3(k-1) multiplications for k items. Any shared factor with N surfaces as
/// a [`FactorEvent`]; when the batched GCD is N itself the items are scanned
/// for a proper divisor before reporting the trivial one.
pub fn batch_inverse(items: &[Residue], ledger: &mut WorkLedger) -> Result<Vec<Residue>, FactorEvent> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let modulus = items[0].modulus.clone();
    let mut prefix = Vec::with_capacity(items.len());
    prefix.push(items[0].clone());
    for item in &items[1..] {
        let head = prefix.last().expect("nonempty").mul(item, ledger);
        prefix.push(head);
    }
    let mut carry = match prefix.last().expect("nonempty").inv(ledger) {
        Ok(inv) => inv,
        Err(event) => {
            if event.is_trivial(modulus.value()) {
                for item in items {
                    let g = gcd(item.value(), modulus.value());
                    if !g.is_one() && g != *modulus.value() {
                        return Err(FactorEvent { divisor: g });
                    }
                }
            }
            return Err(event);
        }
    };
    let mut out = vec![modulus.zero(); items.len()];
    for i in (1..items.len()).rev() {
        out[i] = carry.mul(&prefix[i - 1], ledger);
        carry = carry.mul(&items[i], ledger);
    }
    out[0] = carry;
    Ok(out)
}

/// Converts to f64 for cost modelling; saturates for very large values.
pub fn natural_to_f64(n: &Natural) -> f64 {
    n.to_f64().unwrap_or(f64::MAX)
}
