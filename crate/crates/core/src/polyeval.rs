//! Polynomial arithmetic mod N for the fast second phase: product tree,
//! formal derivative, multipoint evaluation by remainder trees, and the
//! squared difference product D^2 = +-prod_j P'(x_j).
//!
//! No FFT: a suitable root of unity mod N is not available, so products use
//! binary splitting with Karatsuba's trick, M(r) = O(r^(log2 3)). Divisions
//! by the monic tree nodes go through a Newton-iterated reciprocal of the
//! reversed divisor, keeping the whole evaluation at O(M(r)) per tree level.
//!
//! The ledger counts coefficient multiplications mod N; additions and
//! multiplications by small integers are free, as everywhere else.

use crate::bigmod::{Modulus, Residue, WorkLedger};

/// Exponent of the Karatsuba cost law M(r) = O(r^(1+epsilon)).
pub const KARATSUBA_EPSILON: f64 = 0.5849625007211562; // log2(3) - 1

/// Operand length at or below which schoolbook multiplication is used.
/// Kept minimal: coefficient multiplications dominate everything else, so
/// recursing deep keeps the measured D^2 constant near its theoretical one.
const KARATSUBA_BASE: usize = 2;

/// Quotient-length threshold below which division is schoolbook.
const DIVISION_BASE: usize = 16;

/// Dense polynomial over Z/N, coefficients ascending, no trailing zeros.
/// The empty coefficient list is the zero polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyModN {
    coeffs: Vec<Residue>,
    modulus: Modulus,
}

impl PolyModN {
    pub fn new(mut coeffs: Vec<Residue>, modulus: Modulus) -> PolyModN {
        trim(&mut coeffs);
        PolyModN { coeffs, modulus }
    }

    pub fn zero(modulus: &Modulus) -> PolyModN {
        PolyModN { coeffs: Vec::new(), modulus: modulus.clone() }
    }

    pub fn one(modulus: &Modulus) -> PolyModN {
        PolyModN { coeffs: vec![modulus.one()], modulus: modulus.clone() }
    }

    /// x - root
    pub fn linear_from_root(root: &Residue, modulus: &Modulus) -> PolyModN {
        PolyModN { coeffs: vec![root.neg(), modulus.one()], modulus: modulus.clone() }
    }

    pub fn coefficients(&self) -> &[Residue] {
        &self.coeffs
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(Residue::is_one)
    }

    /// Horner evaluation: deg(P) multiplications.
    pub fn eval(&self, x: &Residue, ledger: &mut WorkLedger) -> Residue {
        let mut iter = self.coeffs.iter().rev();
        let Some(top) = iter.next() else { return self.modulus.zero() };
        let mut acc = top.clone();
        for c in iter {
            acc = acc.mul(x, ledger).add(c);
        }
        acc
    }

    /// Formal derivative: b_j = (j+1) a_(j+1). Multiplications by the small
    /// index factors are free.
    pub fn derivative(&self) -> PolyModN {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c.small_mul(j as u64))
            .collect();
        PolyModN::new(coeffs, self.modulus.clone())
    }
}

fn trim(coeffs: &mut Vec<Residue>) {
    while coeffs.last().is_some_and(Residue::is_zero) {
        coeffs.pop();
    }
}

/// Coefficient-exact product; Karatsuba above a small schoolbook base.
pub fn poly_mul(a: &PolyModN, b: &PolyModN, ledger: &mut WorkLedger) -> PolyModN {
    assert!(a.modulus == b.modulus, "modulus mismatch");
    if a.is_zero() || b.is_zero() {
        return PolyModN::zero(&a.modulus);
    }
    let coeffs = karatsuba(&a.coeffs, &b.coeffs, &a.modulus, ledger);
    PolyModN::new(coeffs, a.modulus.clone())
}

fn schoolbook(a: &[Residue], b: &[Residue], m: &Modulus, ledger: &mut WorkLedger) -> Vec<Residue> {
    let mut out = vec![m.zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].add(&ai.mul(bj, ledger));
        }
    }
    out
}

fn add_slices(a: &[Residue], b: &[Residue], m: &Modulus) -> Vec<Residue> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => x.add(y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => m.zero(),
        })
        .collect()
}

fn karatsuba(a: &[Residue], b: &[Residue], m: &Modulus, ledger: &mut WorkLedger) -> Vec<Residue> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= KARATSUBA_BASE {
        return schoolbook(a, b, m, ledger);
    }
    let h = a.len().max(b.len()).div_ceil(2);
    let (a0, a1) = a.split_at(h.min(a.len()));
    let (b0, b1) = b.split_at(h.min(b.len()));
    let z0 = karatsuba(a0, b0, m, ledger);
    let z2 = karatsuba(a1, b1, m, ledger);
    // z1 = (a0+a1)(b0+b1) - z0 - z2; cancel before writing so the buffer
    // never grows past the true product degree on skewed splits
    let mut z1 = karatsuba(&add_slices(a0, a1, m), &add_slices(b0, b1, m), m, ledger);
    for (i, c) in z0.iter().enumerate() {
        z1[i] = z1[i].sub(c);
    }
    for (i, c) in z2.iter().enumerate() {
        z1[i] = z1[i].sub(c);
    }
    trim(&mut z1);
    let mut out = vec![m.zero(); a.len() + b.len() - 1];
    for (i, c) in z0.iter().enumerate() {
        out[i] = out[i].add(c);
    }
    for (i, c) in z1.iter().enumerate() {
        out[h + i] = out[h + i].add(c);
    }
    for (i, c) in z2.iter().enumerate() {
        out[2 * h + i] = out[2 * h + i].add(c);
    }
    out
}

/// Product of two monic polynomials at the cost of multiplying their
/// non-leading parts: (x^d + A)(x^e + B) = x^(d+e) + A x^e + B x^d + AB.
fn mul_monic(a: &PolyModN, b: &PolyModN, ledger: &mut WorkLedger) -> PolyModN {
    debug_assert!(a.is_monic() && b.is_monic());
    let m = &a.modulus;
    let da = a.coeffs.len() - 1;
    let db = b.coeffs.len() - 1;
    let low_a = &a.coeffs[..da];
    let low_b = &b.coeffs[..db];
    let mut out = vec![m.zero(); da + db + 1];
    out[da + db] = m.one();
    for (i, c) in karatsuba(low_a, low_b, m, ledger).into_iter().enumerate() {
        out[i] = out[i].add(&c);
    }
    for (i, c) in low_a.iter().enumerate() {
        out[db + i] = out[db + i].add(c);
    }
    for (i, c) in low_b.iter().enumerate() {
        out[da + i] = out[da + i].add(c);
    }
    PolyModN::new(out, m.clone())
}

/// Truncated product: a*b mod x^k.
fn mul_low(
    a: &[Residue],
    b: &[Residue],
    k: usize,
    m: &Modulus,
    ledger: &mut WorkLedger,
) -> Vec<Residue> {
    let a = &a[..a.len().min(k)];
    let b = &b[..b.len().min(k)];
    let mut out = karatsuba(a, b, m, ledger);
    out.truncate(k);
    out
}

/// Reciprocal power series: f^-1 mod x^k for f with constant term 1, by
/// Newton iteration I <- I(2 - fI).
fn inverse_series(f: &[Residue], k: usize, m: &Modulus, ledger: &mut WorkLedger) -> Vec<Residue> {
    debug_assert!(f.first().is_some_and(Residue::is_one));
    let two = m.residue_u64(2);
    let mut inv = vec![m.one()];
    let mut t = 1usize;
    while t < k {
        let t2 = (2 * t).min(k);
        let g = mul_low(f, &inv, t2, m, ledger);
        let mut h: Vec<Residue> = g.iter().map(Residue::neg).collect();
        h[0] = two.sub(&g[0]);
        inv = mul_low(&inv, &h, t2, m, ledger);
        inv.resize(t2, m.zero());
        t = t2;
    }
    inv
}

fn reverse_coeffs(coeffs: &[Residue], degree: usize, m: &Modulus) -> Vec<Residue> {
    let mut out = vec![m.zero(); degree + 1];
    for (i, c) in coeffs.iter().enumerate() {
        out[degree - i] = c.clone();
    }
    out
}

/// Remainder of a by a monic divisor. Schoolbook for short quotients,
/// reversal + Newton reciprocal above [`DIVISION_BASE`].
fn rem_monic(a: &PolyModN, divisor: &PolyModN, ledger: &mut WorkLedger) -> PolyModN {
    debug_assert!(divisor.is_monic());
    let m = &a.modulus;
    let db = divisor.coeffs.len() - 1;
    if db == 0 {
        return PolyModN::zero(m);
    }
    if a.coeffs.len() <= db {
        return a.clone();
    }
    let quotient_len = a.coeffs.len() - db;
    if quotient_len <= DIVISION_BASE || db <= DIVISION_BASE {
        let mut cur = a.coeffs.clone();
        for i in (db..cur.len()).rev() {
            if cur[i].is_zero() {
                continue;
            }
            let c = cur[i].clone();
            for (j, bj) in divisor.coeffs[..db].iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                cur[i - db + j] = cur[i - db + j].sub(&c.mul(bj, ledger));
            }
        }
        cur.truncate(db);
        return PolyModN::new(cur, m.clone());
    }
    let da = a.coeffs.len() - 1;
    let rev_a = reverse_coeffs(&a.coeffs, da, m);
    let rev_b = reverse_coeffs(&divisor.coeffs, db, m);
    let inv = inverse_series(&rev_b, quotient_len, m, ledger);
    let q_rev = mul_low(&rev_a, &inv, quotient_len, m, ledger);
    let q = reverse_coeffs(&q_rev, quotient_len - 1, m);
    // r = a - q*b, only the low db coefficients survive
    let qb_low = mul_low(&q, &divisor.coeffs, db, m, ledger);
    let zero = m.zero();
    let mut r: Vec<Residue> = a.coeffs[..db]
        .iter()
        .enumerate()
        .map(|(i, x)| x.sub(qb_low.get(i).unwrap_or(&zero)))
        .collect();
    trim(&mut r);
    PolyModN::new(r, m.clone())
}

/// Subproduct tree over a set of points. layers[0] holds the monic linear
/// leaves x - x_j; each higher layer pairs neighbours, promoting an odd
/// leftover unchanged.
pub struct ProductTree {
    layers: Vec<Vec<PolyModN>>,
}

impl ProductTree {
    pub fn build(points: &[Residue], ledger: &mut WorkLedger) -> ProductTree {
        assert!(!points.is_empty(), "product tree needs at least one point");
        let m = points[0].modulus().clone();
        let leaves: Vec<PolyModN> =
            points.iter().map(|r| PolyModN::linear_from_root(r, &m)).collect();
        let mut layers = vec![leaves];
        while layers.last().expect("nonempty").len() > 1 {
            let prev = layers.last().expect("nonempty");
            let mut next = Vec::with_capacity(prev.len().div_ceil(2));
            for pair in prev.chunks(2) {
                next.push(match pair {
                    [a, b] => mul_monic(a, b, ledger),
                    [a] => a.clone(),
                    _ => unreachable!(),
                });
            }
            layers.push(next);
        }
        ProductTree { layers }
    }

    pub fn root(&self) -> &PolyModN {
        &self.layers.last().expect("nonempty")[0]
    }

    /// Remainder-tree descent: p mod every leaf, i.e. p evaluated at every
    /// point.
    fn eval_down(&self, p: &PolyModN, ledger: &mut WorkLedger) -> Vec<Residue> {
        let m = p.modulus.clone();
        let mut current = vec![rem_monic(p, self.root(), ledger)];
        for level in (0..self.layers.len() - 1).rev() {
            let nodes = &self.layers[level];
            let mut next = Vec::with_capacity(nodes.len());
            for (parent_index, rem) in current.iter().enumerate() {
                let lo = 2 * parent_index;
                if lo + 1 >= nodes.len() {
                    next.push(rem.clone()); // promoted odd node
                } else {
                    next.push(rem_monic(rem, &nodes[lo], ledger));
                    next.push(rem_monic(rem, &nodes[lo + 1], ledger));
                }
            }
            current = next;
        }
        current
            .into_iter()
            .map(|r| r.coeffs.first().cloned().unwrap_or_else(|| m.zero()))
            .collect()
    }
}

/// Monic P(x) = prod_j (x - x_j).
pub fn product_tree(roots: &[Residue], ledger: &mut WorkLedger) -> PolyModN {
    ProductTree::build(roots, ledger).root().clone()
}

/// Formal derivative, kept as a free function to mirror the module surface.
pub fn derivative(p: &PolyModN) -> PolyModN {
    p.derivative()
}

/// Evaluates P at every point via a remainder tree; equal to Horner
/// evaluation point by point.
pub fn multipoint_eval(p: &PolyModN, points: &[Residue], ledger: &mut WorkLedger) -> Vec<Residue> {
    if points.is_empty() {
        return Vec::new();
    }
    ProductTree::build(points, ledger).eval_down(p, ledger)
}

/// prod_j P'(x_j) for P = prod_j (x - x_j), which equals
/// (-1)^(r(r-1)/2) * D^2 with D = prod_(i<j) (x_i - x_j). The sign is
/// irrelevant to the GCD consumers and is not corrected. Fastest when r is
/// a power of two (balanced tree), as required by the fast phase-2 variant.
pub fn dsquared(points: &[Residue], ledger: &mut WorkLedger) -> Residue {
    assert!(points.len() >= 2, "dsquared needs at least two points");
    let tree = ProductTree::build(points, ledger);
    let dp = tree.root().derivative();
    let values = tree.eval_down(&dp, ledger);
    let mut acc = points[0].modulus().one();
    for v in &values {
        acc = acc.mul(v, ledger);
    }
    acc
}

/// Model estimate for evaluating D^2 by the fast path: 8 r^(1+epsilon).
pub fn fast_cost_estimate(r: f64, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    8.0 * r.powf(1.0 + epsilon)
}

/// Model estimate for the naive pairwise product: r^2 / 2.
pub fn naive_cost_estimate(r: f64) -> f64 {
    r * r / 2.0
}
