//! Elliptic-curve arithmetic modulo a (possibly composite) integer N.
//!
//! Three representations: affine Weierstrass y^2 = x^3 + ax + b with the
//! textbook group law (one inversion per operation, charged K units),
//! inversion-free projective Weierstrass, and x-only Montgomery form
//! b*y^2 = x^3 + a*x^2 + x with a differential-addition ladder.
//!
//! Mod a composite N a failed inversion is not an error: the GCD it surfaces
//! is a divisor of N and propagates as a [`FactorEvent`].

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::bigmod::{batch_inverse, FactorEvent, Modulus, Natural, Residue, WorkLedger};

/// y^2 = x^3 + ax + b mod N. The discriminant condition is deliberately not
/// checked: a singular curve mod some p | N only makes a trial fail early.
#[derive(Clone, Debug)]
pub struct WeierstrassCurve {
    modulus: Modulus,
    a: Residue,
    b: Residue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AffinePoint {
    Infinity,
    Finite { x: Residue, y: Residue },
}

impl AffinePoint {
    pub fn finite(x: Residue, y: Residue) -> AffinePoint {
        AffinePoint::Finite { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, AffinePoint::Infinity)
    }

    pub fn coordinates(&self) -> Option<(&Residue, &Residue)> {
        match self {
            AffinePoint::Infinity => None,
            AffinePoint::Finite { x, y } => Some((x, y)),
        }
    }

    /// The group inverse (x, -y); free.
    pub fn negate(&self) -> AffinePoint {
        match self {
            AffinePoint::Infinity => AffinePoint::Infinity,
            AffinePoint::Finite { x, y } => AffinePoint::Finite { x: x.clone(), y: y.neg() },
        }
    }
}

impl WeierstrassCurve {
    pub fn new(modulus: Modulus, a: Residue, b: Residue) -> WeierstrassCurve {
        WeierstrassCurve { modulus, a, b }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn a(&self) -> &Residue {
        &self.a
    }

    pub fn b(&self) -> &Residue {
        &self.b
    }

    /// Membership check; used by tests and debug assertions only.
    pub fn contains(&self, p: &AffinePoint) -> bool {
        match p {
            AffinePoint::Infinity => true,
            AffinePoint::Finite { x, y } => {
                let mut scratch = WorkLedger::new();
                let lhs = y.square(&mut scratch);
                let rhs = x
                    .square(&mut scratch)
                    .mul(x, &mut scratch)
                    .add(&self.a.mul(x, &mut scratch))
                    .add(&self.b);
                lhs == rhs
            }
        }
    }

    /// The group operation, executed exactly as the affine algorithm: any
    /// inversion that fails mod N surfaces the offending divisor. Ledger:
    /// 3+K units for a distinct-x addition, 4+K for a doubling.
    ///
    /// Mod a composite, x1 = x2 with y1 != +-y2 can occur; it is routed
    /// through the doubling branch so the failed inversion (if any) is
    /// caught rather than hidden.
    pub fn add(
        &self,
        p1: &AffinePoint,
        p2: &AffinePoint,
        ledger: &mut WorkLedger,
    ) -> Result<AffinePoint, FactorEvent> {
        let (x1, y1) = match p1 {
            AffinePoint::Infinity => return Ok(p2.clone()),
            AffinePoint::Finite { x, y } => (x, y),
        };
        let (x2, y2) = match p2 {
            AffinePoint::Infinity => return Ok(p1.clone()),
            AffinePoint::Finite { x, y } => (x, y),
        };
        if x1 == x2 && *y1 == y2.neg() {
            return Ok(AffinePoint::Infinity);
        }
        let lambda = if x1 == x2 {
            // doubling: lambda = (3 x1^2 + a) / (2 y1)
            let numerator = x1.square(ledger).small_mul(3).add(&self.a);
            let denominator = y1.add(y1);
            if denominator.is_zero() {
                return Err(FactorEvent { divisor: self.modulus.value().clone() });
            }
            denominator.inv(ledger)?.mul(&numerator, ledger)
        } else {
            // lambda = (y1 - y2) / (x1 - x2), the gradient of the joining line
            let numerator = y1.sub(y2);
            x1.sub(x2).inv(ledger)?.mul(&numerator, ledger)
        };
        let x3 = lambda.square(ledger).sub(x1).sub(x2);
        let y3 = lambda.mul(&x1.sub(&x3), ledger).sub(y1);
        Ok(AffinePoint::Finite { x: x3, y: y3 })
    }

    /// k-fold group combination by the binary method; k = 0 gives the
    /// identity. Average cost (3/2) log2(k) group operations.
    pub fn scalar_mul(
        &self,
        p: &AffinePoint,
        k: &Natural,
        ledger: &mut WorkLedger,
    ) -> Result<AffinePoint, FactorEvent> {
        if k.is_zero() {
            return Ok(AffinePoint::Infinity);
        }
        let mut acc = p.clone();
        for i in (0..k.bits() - 1).rev() {
            acc = self.add(&acc, &acc, ledger)?;
            if k.bit(i) {
                acc = self.add(&acc, p, ledger)?;
            }
        }
        Ok(acc)
    }

    /// Inversion-free addition on (x/z, y/z) representatives. Ledger follows
    /// the projective cost model: 12 units for a doubling, 9 for a general
    /// addition, plus 2 when the inputs must first be brought to a common z.
    /// (The model assumes a single-word curve coefficient whose products are
    /// free; the raw operation count of this routine is slightly higher.)
    pub fn add_projective(
        &self,
        p1: &ProjectivePoint,
        p2: &ProjectivePoint,
        ledger: &mut WorkLedger,
    ) -> ProjectivePoint {
        let mut scratch = WorkLedger::new();
        if p1.z.is_zero() {
            return p2.clone();
        }
        if p2.z.is_zero() {
            return p1.clone();
        }
        let (p1, p2) = if p1.z == p2.z {
            (p1.clone(), p2.clone())
        } else {
            ledger.multiplications += 2; // co-normalization charge
            let z = p1.z.mul(&p2.z, &mut scratch);
            (
                ProjectivePoint {
                    x: p1.x.mul(&p2.z, &mut scratch),
                    y: p1.y.mul(&p2.z, &mut scratch),
                    z: z.clone(),
                },
                ProjectivePoint {
                    x: p2.x.mul(&p1.z, &mut scratch),
                    y: p2.y.mul(&p1.z, &mut scratch),
                    z,
                },
            )
        };
        if p1.x == p2.x {
            if p1.y == p2.y.neg() {
                return ProjectivePoint::infinity(&self.modulus);
            }
            // doubling: u = 3X^2 + aZ^2, v = 2YZ
            ledger.multiplications += 8;
            ledger.squarings += 4;
            let u = p1
                .x
                .square(&mut scratch)
                .small_mul(3)
                .add(&self.a.mul(&p1.z.square(&mut scratch), &mut scratch));
            let v = p1.y.mul(&p1.z, &mut scratch).small_mul(2);
            let vv = v.square(&mut scratch);
            let vvv = vv.mul(&v, &mut scratch);
            let w = u.square(&mut scratch).mul(&p1.z, &mut scratch);
            let b = vv.mul(&p1.x, &mut scratch);
            let x3_num = w.sub(&b.small_mul(2));
            ProjectivePoint {
                x: v.mul(&x3_num, &mut scratch),
                y: u.mul(&b.small_mul(3).sub(&w), &mut scratch).sub(&p1.y.mul(&vvv, &mut scratch)),
                z: vvv.mul(&p1.z, &mut scratch),
            }
        } else {
            // general addition: u = Y1 - Y2, v = X1 - X2
            ledger.multiplications += 7;
            ledger.squarings += 2;
            let u = p1.y.sub(&p2.y);
            let v = p1.x.sub(&p2.x);
            let vv = v.square(&mut scratch);
            let vvv = vv.mul(&v, &mut scratch);
            let b1 = vv.mul(&p1.x, &mut scratch);
            let b2 = vv.mul(&p2.x, &mut scratch);
            let w = u.square(&mut scratch).mul(&p1.z, &mut scratch);
            let x3_num = w.sub(&b1).sub(&b2);
            ProjectivePoint {
                x: v.mul(&x3_num, &mut scratch),
                y: u
                    .mul(&b1.small_mul(2).add(&b2).sub(&w), &mut scratch)
                    .sub(&p1.y.mul(&vvv, &mut scratch)),
                z: vvv.mul(&p1.z, &mut scratch),
            }
        }
    }
}

/// (x/z, y/z) when gcd(z, N) = 1; z = 0 encodes the point at infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectivePoint {
    pub x: Residue,
    pub y: Residue,
    pub z: Residue,
}

impl ProjectivePoint {
    pub fn infinity(modulus: &Modulus) -> ProjectivePoint {
        ProjectivePoint { x: modulus.zero(), y: modulus.one(), z: modulus.zero() }
    }

    pub fn from_affine(p: &AffinePoint, modulus: &Modulus) -> ProjectivePoint {
        match p {
            AffinePoint::Infinity => ProjectivePoint::infinity(modulus),
            AffinePoint::Finite { x, y } => {
                ProjectivePoint { x: x.clone(), y: y.clone(), z: modulus.one() }
            }
        }
    }

    /// Back to affine with one inversion (may surface a divisor of N).
    pub fn normalize(&self, ledger: &mut WorkLedger) -> Result<AffinePoint, FactorEvent> {
        if self.z.is_zero() {
            return Ok(AffinePoint::Infinity);
        }
        let inv = self.z.inv(ledger)?;
        Ok(AffinePoint::Finite { x: self.x.mul(&inv, ledger), y: self.y.mul(&inv, ledger) })
    }
}

/// Picks P = (x, y) and a single-word a at random, then solves for b, so the
/// returned point is on the returned curve by construction.
pub fn random_curve_through_point<R: Rng>(
    modulus: &Modulus,
    rng: &mut R,
) -> (WeierstrassCurve, AffinePoint) {
    let mut scratch = WorkLedger::new();
    let x = modulus.residue(rng.gen_biguint_below(modulus.value()));
    let y = modulus.residue(rng.gen_biguint_below(modulus.value()));
    let a = modulus.residue_u64(u64::from(rng.gen::<u32>()));
    let b = y
        .square(&mut scratch)
        .sub(&x.square(&mut scratch).mul(&x, &mut scratch))
        .sub(&a.mul(&x, &mut scratch));
    let curve = WeierstrassCurve::new(modulus.clone(), a, b);
    let point = AffinePoint::Finite { x, y };
    debug_assert!(curve.contains(&point));
    (curve, point)
}

/// b*y^2 = x^3 + a*x^2 + x mod N.
#[derive(Clone, Debug)]
pub struct MontgomeryCurve {
    modulus: Modulus,
    a: Residue,
    b: Residue,
}

/// x-coordinate x/z of a Montgomery-curve point; z = 0 encodes infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XZPoint {
    pub x: Residue,
    pub z: Residue,
}

impl MontgomeryCurve {
    pub fn new(modulus: Modulus, a: Residue, b: Residue) -> MontgomeryCurve {
        MontgomeryCurve { modulus, a, b }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn a(&self) -> &Residue {
        &self.a
    }

    pub fn b(&self) -> &Residue {
        &self.b
    }

    /// (a + 2)/4, the constant of the doubling formula. N is odd in every
    /// factoring path, so the inversion of 4 cannot fail.
    fn c24(&self, ledger: &mut WorkLedger) -> Residue {
        let inv4 = self
            .modulus
            .residue_u64(4)
            .inv(ledger)
            .expect("modulus must be odd for x-only arithmetic");
        self.a.add(&self.modulus.residue_u64(2)).mul(&inv4, ledger)
    }

    /// 2P from P: 2 squarings + 3 multiplications.
    fn xz_double(&self, p: &XZPoint, c24: &Residue, ledger: &mut WorkLedger) -> XZPoint {
        let s = p.x.add(&p.z).square(ledger);
        let d = p.x.sub(&p.z).square(ledger);
        let t = s.sub(&d); // 4XZ
        XZPoint { x: s.mul(&d, ledger), z: t.mul(&d.add(&c24.mul(&t, ledger)), ledger) }
    }

    /// P+Q from P, Q and D = P-Q: 2 squarings + 3 multiplications when the
    /// difference is normalized (z = 1), one more otherwise.
    fn xz_dadd(&self, p: &XZPoint, q: &XZPoint, diff: &XZPoint, ledger: &mut WorkLedger) -> XZPoint {
        let u = p.x.sub(&p.z).mul(&q.x.add(&q.z), ledger);
        let v = p.x.add(&p.z).mul(&q.x.sub(&q.z), ledger);
        let x_sq = u.add(&v).square(ledger);
        let z_sq = u.sub(&v).square(ledger);
        let x = if diff.z.is_one() { x_sq } else { diff.z.mul(&x_sq, ledger) };
        XZPoint { x, z: diff.x.mul(&z_sq, ledger) }
    }

    /// x-coordinate of kP via the Montgomery ladder, k >= 1. With a
    /// normalized base the cost is 10 units per bit plus a constant
    /// (at most 10 log2(k) + 30 in total).
    pub fn ladder(&self, p: &XZPoint, k: &Natural, ledger: &mut WorkLedger) -> XZPoint {
        let c24 = self.c24(ledger);
        self.ladder_with_c24(p, k, &c24, ledger)
    }

    fn ladder_with_c24(
        &self,
        p: &XZPoint,
        k: &Natural,
        c24: &Residue,
        ledger: &mut WorkLedger,
    ) -> XZPoint {
        assert!(!k.is_zero(), "ladder exponent must be positive");
        if k.is_one() {
            return p.clone();
        }
        let mut r0 = p.clone();
        let mut r1 = self.xz_double(p, c24, ledger);
        for i in (0..k.bits() - 1).rev() {
            if k.bit(i) {
                r0 = self.xz_dadd(&r0, &r1, p, ledger);
                r1 = self.xz_double(&r1, c24, ledger);
            } else {
                r1 = self.xz_dadd(&r0, &r1, p, ledger);
                r0 = self.xz_double(&r0, c24, ledger);
            }
        }
        r0
    }

    /// Runs a whole prime-power schedule, normalizing between entries so a
    /// collapse mod p | N is caught by the inversion.
    pub fn ladder_schedule(
        &self,
        p: &XZPoint,
        prime_powers: &[u64],
        ledger: &mut WorkLedger,
    ) -> Result<XZPoint, FactorEvent> {
        let c24 = self.c24(ledger);
        let mut q = p.clone();
        for &pe in prime_powers {
            q = self.normalize_xz(&q, ledger)?;
            q = self.ladder_with_c24(&q, &BigUint::from(pe), &c24, ledger);
        }
        self.normalize_xz(&q, ledger)
    }

    fn normalize_xz(&self, p: &XZPoint, ledger: &mut WorkLedger) -> Result<XZPoint, FactorEvent> {
        if p.z.is_one() {
            return Ok(p.clone());
        }
        let inv = p.z.inv(ledger)?;
        Ok(XZPoint { x: p.x.mul(&inv, ledger), z: self.modulus.one() })
    }
}

/// Suyama's parameterization: u = sigma^2 - 5, v = 4 sigma, x0 = u^3,
/// z0 = v^3, a = (v-u)^3 (3u+v) / (4 u^3 v) - 2. The group order mod any
/// prime p | N is divisible by 12. The returned point is normalized and the
/// curve's b coefficient is fixed by placing (x0, 1) on the curve; any other
/// choice of y0 differs by a square factor, i.e. gives the same twist.
pub fn suyama_curve(
    sigma: &Natural,
    modulus: &Modulus,
    ledger: &mut WorkLedger,
) -> Result<(MontgomeryCurve, XZPoint), FactorEvent> {
    assert!(
        !sigma.is_zero() && !sigma.is_one() && *sigma != BigUint::from(5u32),
        "sigma must avoid 0, 1, 5"
    );
    let s = modulus.residue(sigma.clone());
    let u = s.square(ledger).sub(&modulus.residue_u64(5));
    let v = s.small_mul(4);
    let u3 = u.square(ledger).mul(&u, ledger);
    let denominator = u3.mul(&v, ledger).small_mul(4);
    if denominator.is_zero() {
        return Err(FactorEvent { divisor: modulus.value().clone() });
    }
    let z0 = v.square(ledger).mul(&v, ledger);
    let inverses = batch_inverse(&[denominator, z0], ledger)?;
    let vu = v.sub(&u);
    let numerator = vu.square(ledger).mul(&vu, ledger).mul(&u.small_mul(3).add(&v), ledger);
    let a = numerator.mul(&inverses[0], ledger).sub(&modulus.residue_u64(2));
    let x0 = u3.mul(&inverses[1], ledger); // u^3 / v^3
    // b from y0 = 1: b = x0^3 + a x0^2 + x0
    let x0_sq = x0.square(ledger);
    let b = x0_sq.mul(&x0, ledger).add(&a.mul(&x0_sq, ledger)).add(&x0);
    Ok((MontgomeryCurve::new(modulus.clone(), a, b), XZPoint { x: x0, z: modulus.one() }))
}

/// Recovers the y-coordinate of Q = kP from x(Q), x(Q+P) and the affine base
/// P, using the Montgomery addition law solved for y1:
///   2 b yP y1 = f(x1) + f(xP) - (x' + a + x1 + xP)(x1 - xP)^2
/// with f(x) = x^3 + a x^2 + x. One batched normalization plus one inversion.
pub fn recover_xz_y(
    curve: &MontgomeryCurve,
    base: (&Residue, &Residue),
    q: &XZPoint,
    q_plus_base: &XZPoint,
    ledger: &mut WorkLedger,
) -> Result<(Residue, Residue), FactorEvent> {
    let (xp, yp) = base;
    let normalized = batch_inverse(&[q.z.clone(), q_plus_base.z.clone()], ledger)?;
    let x1 = q.x.mul(&normalized[0], ledger);
    let xs = q_plus_base.x.mul(&normalized[1], ledger);
    let f = |x: &Residue, ledger: &mut WorkLedger| {
        let x_sq = x.square(ledger);
        x_sq.mul(x, ledger).add(&curve.a.mul(&x_sq, ledger)).add(x)
    };
    let diff_sq = x1.sub(xp).square(ledger);
    let numerator = f(&x1, ledger)
        .add(&f(xp, ledger))
        .sub(&xs.add(&curve.a).add(&x1).add(xp).mul(&diff_sq, ledger));
    let denominator = curve.b.mul(yp, ledger).small_mul(2);
    if denominator.is_zero() {
        return Err(FactorEvent { divisor: curve.modulus.value().clone() });
    }
    let y1 = denominator.inv(ledger)?.mul(&numerator, ledger);
    Ok((x1, y1))
}

/// Birational map from b*y^2 = x^3 + a*x^2 + x to Y^2 = X^3 + A X + B:
/// X = (x + a/3)/b, Y = y/b, A = (3 - a^2)/(3 b^2), B = (2a^3 - 9a)/(27 b^3).
/// Requires gcd(3, N) = 1 (small primes are stripped before any trial).
pub fn montgomery_to_weierstrass(
    curve: &MontgomeryCurve,
    point: (&Residue, &Residue),
    ledger: &mut WorkLedger,
) -> Result<(WeierstrassCurve, AffinePoint), FactorEvent> {
    let modulus = &curve.modulus;
    let inv3 = modulus
        .residue_u64(3)
        .inv(ledger)
        .map_err(|_| FactorEvent { divisor: BigUint::from(3u32) })?;
    let inv_b = curve.b.inv(ledger)?;
    let inv_b2 = inv_b.square(ledger);
    let inv_b3 = inv_b2.mul(&inv_b, ledger);
    let a_sq = curve.a.square(ledger);
    let big_a = modulus.residue_u64(3).sub(&a_sq).mul(&inv3, ledger).mul(&inv_b2, ledger);
    let big_b = curve
        .a
        .mul(&a_sq.small_mul(2).sub(&modulus.residue_u64(9)), ledger)
        .mul(&inv3.square(ledger).mul(&inv3, ledger), ledger)
        .mul(&inv_b3, ledger);
    let (x, y) = point;
    let xw = x.add(&curve.a.mul(&inv3, ledger)).mul(&inv_b, ledger);
    let yw = y.mul(&inv_b, ledger);
    let weierstrass = WeierstrassCurve::new(modulus.clone(), big_a, big_b);
    let mapped = AffinePoint::Finite { x: xw, y: yw };
    debug_assert!(weierstrass.contains(&mapped));
    Ok((weierstrass, mapped))
}

/// |G| by enumerating x and counting quadratic residues, plus 1 for the
/// point at infinity. Test oracle: requires a prime modulus p <= ~10^4.
/// Returns None for a singular curve.
pub fn group_order_bruteforce(curve: &WeierstrassCurve) -> Option<u64> {
    let p = small_prime_modulus(curve.modulus());
    let a = residue_u64(curve.a());
    let b = residue_u64(curve.b());
    // 4a^3 + 27b^2 != 0 mod p
    let disc = (4 * pow_mod_u64(a, 3, p) % p + 27 * pow_mod_u64(b, 2, p) % p) % p;
    if disc == 0 {
        return None;
    }
    let counts = square_counts(p);
    let mut order = 1u64;
    for x in 0..p {
        let rhs = (pow_mod_u64(x, 3, p) + a % p * x % p + b % p) % p;
        order += counts[rhs as usize];
    }
    Some(order)
}

/// Same enumeration for b*y^2 = x^3 + a*x^2 + x mod p: y^2 = rhs/b has as
/// many solutions as (b * rhs) has square roots.
pub fn montgomery_group_order_bruteforce(curve: &MontgomeryCurve) -> Option<u64> {
    let p = small_prime_modulus(curve.modulus());
    let a = residue_u64(curve.a());
    let b = residue_u64(curve.b());
    if b == 0 || a * a % p == 4 % p {
        return None;
    }
    let counts = square_counts(p);
    let mut order = 1u64;
    for x in 0..p {
        let rhs = (pow_mod_u64(x, 3, p) + a * x % p * x % p + x) % p;
        order += counts[(rhs * b % p) as usize];
    }
    Some(order)
}

fn small_prime_modulus(modulus: &Modulus) -> u64 {
    let p: u64 = modulus
        .value()
        .try_into()
        .expect("brute-force order oracle needs a small modulus");
    assert!(p <= 100_000, "brute-force order oracle needs p <= 1e5");
    p
}

fn residue_u64(r: &Residue) -> u64 {
    r.value().try_into().expect("coefficient fits u64 for small-p oracle")
}

fn pow_mod_u64(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// counts[v] = number of y in [0, p) with y^2 = v mod p.
fn square_counts(p: u64) -> Vec<u64> {
    let mut counts = vec![0u64; p as usize];
    for y in 0..p {
        counts[(y * y % p) as usize] += 1;
    }
    counts
}
