//! The birthday-paradox second phase.
//!
//! Phase 1 leaves a point Q whose order n1 in the curve group mod some
//! p | N is a single prime between m and m'. A pseudo-random walk through
//! the cyclic group generated by Q produces r essentially random points; if
//! two of them collide mod p, every pairwise coordinate difference product
//! is divisible by p and one GCD recovers the factor. Using x-coordinates
//! only ("folding", since x is invariant under point negation) doubles the
//! collision probability.
//!
//! Cycle finding is useless here: a collision Q_i = Q_j does not make the
//! walk periodic, so no cycle detection is attempted anywhere.

use num_traits::{One, Zero};
use rand::Rng;

use crate::bigmod::{gcd, FactorEvent, Natural, Residue, WorkLedger};
use crate::curve::{AffinePoint, WeierstrassCurve};
use crate::polyeval;

/// Which coordinate feeds the difference product. X folds the group by
/// identifying each point with its inverse and is the default; Y is kept
/// for parity with the unfolded product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinate {
    X,
    Y,
}

/// What a second phase concluded. `Factor` carries a nontrivial divisor,
/// `Trivial` means every extracted divisor was N itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Phase2Outcome {
    Factor(Natural),
    NoFactor,
    Trivial,
}

impl Phase2Outcome {
    fn from_event(event: FactorEvent, n: &Natural) -> Phase2Outcome {
        if event.is_trivial(n) {
            Phase2Outcome::Trivial
        } else {
            Phase2Outcome::Factor(event.divisor)
        }
    }
}

/// The walk Q_1 = Q, Q_(j+1) = Q_j^2 or Q_j^2 * Q. Points are stored as
/// finite coordinate pairs; a step that would land exactly on the identity
/// mod N takes the other branch instead (mod a composite this is measure
/// zero; mod a small prime test group it keeps the walk total).
#[derive(Clone, Debug)]
pub struct Walk {
    pub points: Vec<(Residue, Residue)>,
}

pub fn random_walk<R: Rng>(
    q: &AffinePoint,
    r: u64,
    curve: &WeierstrassCurve,
    rng: &mut R,
    ledger: &mut WorkLedger,
) -> Result<Walk, FactorEvent> {
    let (qx, qy) = q.coordinates().expect("walk generator must be a finite point");
    assert!(r >= 2, "a walk needs at least two points");
    let mut points = Vec::with_capacity(r as usize);
    points.push((qx.clone(), qy.clone()));
    let mut cur = q.clone();
    for _ in 1..r {
        let squared = curve.add(&cur, &cur, ledger)?;
        let with_q = rng.next_u32() & 1 == 1;
        let mut next = if with_q { curve.add(&squared, q, ledger)? } else { squared.clone() };
        if next.is_infinity() {
            next = if with_q { squared } else { curve.add(&squared, q, ledger)? };
        }
        let (x, y) = next.coordinates().expect("identity sidestep failed");
        points.push((x.clone(), y.clone()));
        cur = next;
    }
    Ok(Walk { points })
}

impl Walk {
    pub fn coordinates(&self, mode: Coordinate) -> Vec<Residue> {
        self.points
            .iter()
            .map(|(x, y)| match mode {
                Coordinate::X => x.clone(),
                Coordinate::Y => y.clone(),
            })
            .collect()
    }
}

/// d = prod_(i<j) (c_i - c_j) mod N over the selected coordinate:
/// r(r-1)/2 multiplications, subtractions free. Zero exactly when some
/// difference vanishes mod N.
pub fn pairwise_product(walk: &Walk, mode: Coordinate, ledger: &mut WorkLedger) -> Residue {
    let coords = walk.coordinates(mode);
    difference_product(&coords, ledger)
}

fn difference_product(coords: &[Residue], ledger: &mut WorkLedger) -> Residue {
    let mut acc = coords[0].modulus().one();
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            acc = acc.mul(&coords[i].sub(&coords[j]), ledger);
        }
    }
    acc
}

/// Scans pairwise differences with individual GCDs; used when the batched
/// product collapsed to a multiple of N (the collision usually already
/// happened mod a single prime, so a proper divisor is recoverable).
pub(crate) fn pairwise_gcd_scan(coords: &[Residue], n: &Natural) -> Phase2Outcome {
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let g = gcd(coords[i].sub(&coords[j]).value(), n);
            if !g.is_one() && g != *n {
                return Phase2Outcome::Factor(g);
            }
        }
    }
    Phase2Outcome::Trivial
}

pub(crate) fn classify_gcd(d: &Residue, coords: &[Residue], n: &Natural) -> Phase2Outcome {
    let g = gcd(d.value(), n);
    if g.is_one() {
        Phase2Outcome::NoFactor
    } else if g == *n {
        pairwise_gcd_scan(coords, n)
    } else {
        Phase2Outcome::Factor(g)
    }
}

/// Walk, difference product, one GCD. `fast` evaluates the squared product
/// D^2 through the product tree instead of the naive pairwise product and
/// requires r to be a power of two; it forces x-coordinates.
#[allow(clippy::too_many_arguments)]
pub fn birthday_phase2<R: Rng>(
    curve: &WeierstrassCurve,
    q: &AffinePoint,
    r: u64,
    fast: bool,
    mode: Coordinate,
    rng: &mut R,
    ledger: &mut WorkLedger,
) -> Phase2Outcome {
    let n = curve.modulus().value().clone();
    let walk = match random_walk(q, r, curve, rng, ledger) {
        Ok(walk) => walk,
        Err(event) => return Phase2Outcome::from_event(event, &n),
    };
    if fast {
        assert!(r.is_power_of_two(), "fast evaluation requires r to be a power of 2");
        let coords = walk.coordinates(Coordinate::X);
        let d = polyeval::dsquared(&coords, ledger);
        classify_gcd(&d, &coords, &n)
    } else {
        let coords = walk.coordinates(mode);
        let d = difference_product(&coords, ledger);
        classify_gcd(&d, &coords, &n)
    }
}

/// Birthday collision probability among r points of a cyclic group of
/// order n1: 1 - exp(-r^2 / 2 n1), or 1 - exp(-r^2 / n1) folded. Zero for
/// r <= 1 (empty product convention).
pub fn success_probability(n1: f64, r: u64, folded: bool) -> f64 {
    if r <= 1 {
        return 0.0;
    }
    let r = r as f64;
    let exponent = if folded { r * r / n1 } else { r * r / (2.0 * n1) };
    -(-exponent).exp_m1()
}

/// Linear seeds for the cross-product exponents: b_i = intercept + slope*i,
/// a_i = b_i^e.
#[derive(Clone, Copy, Debug)]
pub struct CrossSeeds {
    pub left: (u64, u64),
    pub right: (u64, u64),
}

impl CrossSeeds {
    pub fn random<R: Rng>(rng: &mut R) -> CrossSeeds {
        // small seeds keep the initial difference table cheap
        let draw = |rng: &mut R| (rng.gen_range(0..64u64), rng.gen_range(1..64u64));
        CrossSeeds { left: draw(rng), right: draw(rng) }
    }
}

/// How the cross product (left points against right points) is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossEval {
    /// Right points are consumed one at a time and never stored.
    Streaming,
    /// Product-tree polynomial of the left points evaluated at the right
    /// points (in blocks of r, so storage stays O(r)).
    ProductTree,
}

/// Streams Q^(a_i) for a_i = (b0 + b1*i)^e, i = 1, 2, ...: the e-th
/// differences of the exponents are constant, so after an O(e)-cost setup
/// each further point costs exactly e group additions.
pub struct PowerStream<'a> {
    curve: &'a WeierstrassCurve,
    table: Vec<AffinePoint>,
    pub group_adds: u64,
}

impl<'a> PowerStream<'a> {
    pub fn new(
        curve: &'a WeierstrassCurve,
        q: &AffinePoint,
        e: u32,
        intercept: u64,
        slope: u64,
        ledger: &mut WorkLedger,
    ) -> Result<PowerStream<'a>, FactorEvent> {
        assert!((1..=6).contains(&e), "cross-product exponent must be in 1..=6");
        assert!(slope >= 1, "slope must be positive");
        // forward differences of a_i at i = 1
        let exps: Vec<Natural> = (1..=u64::from(e) + 1)
            .map(|i| Natural::from(intercept + slope * i).pow(e))
            .collect();
        let mut diffs = exps;
        let mut table_exps = vec![diffs[0].clone()];
        for _ in 0..e {
            diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
            table_exps.push(diffs[0].clone());
        }
        let mut stream = PowerStream { curve, table: Vec::new(), group_adds: 0 };
        for exp in &table_exps {
            let point = stream.scalar_mul_counted(q, exp, ledger)?;
            stream.table.push(point);
        }
        Ok(stream)
    }

    fn scalar_mul_counted(
        &mut self,
        p: &AffinePoint,
        k: &Natural,
        ledger: &mut WorkLedger,
    ) -> Result<AffinePoint, FactorEvent> {
        if k.is_zero() {
            return Ok(AffinePoint::Infinity);
        }
        let mut acc = p.clone();
        for i in (0..k.bits() - 1).rev() {
            acc = self.curve.add(&acc, &acc, ledger)?;
            self.group_adds += 1;
            if k.bit(i) {
                acc = self.curve.add(&acc, p, ledger)?;
                self.group_adds += 1;
            }
        }
        Ok(acc)
    }

    /// The next point Q^(a_i); advancing the difference table costs e group
    /// additions. Returns the identity as-is (callers treat it as a
    /// degenerate trial).
    pub fn next_point(&mut self, ledger: &mut WorkLedger) -> Result<AffinePoint, FactorEvent> {
        let out = self.table[0].clone();
        for j in 0..self.table.len() - 1 {
            self.table[j] = self.curve.add(&self.table[j], &self.table[j + 1], ledger)?;
            self.group_adds += 1;
        }
        Ok(out)
    }
}

/// The cross-product second phase: d = prod_j prod_i (x_i - xbar_j) over r
/// left and s right points generated with constant e-th differences. The
/// right points are streamed (or evaluated in blocks through the product
/// tree); storage is O(r) even when s >> r.
#[allow(clippy::too_many_arguments)]
pub fn cross_phase2(
    curve: &WeierstrassCurve,
    q: &AffinePoint,
    r: u64,
    s: u64,
    e: u32,
    seeds: CrossSeeds,
    eval: CrossEval,
    ledger: &mut WorkLedger,
) -> Phase2Outcome {
    let n = curve.modulus().value().clone();
    assert!(r >= 1 && s >= 1);
    let left = match collect_side(curve, q, r, e, seeds.left, ledger) {
        Ok(Some(points)) => points,
        Ok(None) => return Phase2Outcome::Trivial,
        Err(event) => return Phase2Outcome::from_event(event, &n),
    };
    let mut d = curve.modulus().one();
    let mut right_stream =
        match PowerStream::new(curve, q, e, seeds.right.0, seeds.right.1, ledger) {
            Ok(stream) => stream,
            Err(event) => return Phase2Outcome::from_event(event, &n),
        };
    let result = (|| -> Result<Option<()>, FactorEvent> {
        match eval {
            CrossEval::Streaming => {
                for _ in 0..s {
                    let point = right_stream.next_point(ledger)?;
                    let Some((xbar, _)) = point.coordinates() else { return Ok(None) };
                    for xi in &left {
                        d = d.mul(&xi.sub(xbar), ledger);
                    }
                }
            }
            CrossEval::ProductTree => {
                let poly = polyeval::product_tree(&left, ledger);
                let mut remaining = s;
                while remaining > 0 {
                    let block_len = remaining.min(r);
                    let mut block = Vec::with_capacity(block_len as usize);
                    for _ in 0..block_len {
                        let point = right_stream.next_point(ledger)?;
                        let Some((xbar, _)) = point.coordinates() else { return Ok(None) };
                        block.push(xbar.clone());
                    }
                    // P(xbar) = prod_i (xbar - x_i) = (-1)^r prod_i (x_i - xbar)
                    for value in polyeval::multipoint_eval(&poly, &block, ledger) {
                        let oriented = if r % 2 == 1 { value.neg() } else { value };
                        d = d.mul(&oriented, ledger);
                    }
                    remaining -= block_len;
                }
            }
        }
        Ok(Some(()))
    })();
    match result {
        Err(event) => return Phase2Outcome::from_event(event, &n),
        Ok(None) => return Phase2Outcome::Trivial,
        Ok(Some(())) => {}
    }
    let g = gcd(d.value(), &n);
    if g.is_one() {
        Phase2Outcome::NoFactor
    } else if g != n {
        Phase2Outcome::Factor(g)
    } else {
        // regenerate the right stream and scan pair by pair
        cross_rescan(curve, q, &left, s, e, seeds, &n, ledger)
    }
}

fn collect_side(
    curve: &WeierstrassCurve,
    q: &AffinePoint,
    count: u64,
    e: u32,
    seed: (u64, u64),
    ledger: &mut WorkLedger,
) -> Result<Option<Vec<Residue>>, FactorEvent> {
    let mut stream = PowerStream::new(curve, q, e, seed.0, seed.1, ledger)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let point = stream.next_point(ledger)?;
        let Some((x, _)) = point.coordinates() else { return Ok(None) };
        out.push(x.clone());
    }
    Ok(Some(out))
}

#[allow(clippy::too_many_arguments)]
fn cross_rescan(
    curve: &WeierstrassCurve,
    q: &AffinePoint,
    left: &[Residue],
    s: u64,
    e: u32,
    seeds: CrossSeeds,
    n: &Natural,
    ledger: &mut WorkLedger,
) -> Phase2Outcome {
    let mut stream = match PowerStream::new(curve, q, e, seeds.right.0, seeds.right.1, ledger) {
        Ok(stream) => stream,
        Err(event) => return Phase2Outcome::from_event(event, n),
    };
    for _ in 0..s {
        let point = match stream.next_point(ledger) {
            Ok(point) => point,
            Err(event) => return Phase2Outcome::from_event(event, n),
        };
        let Some((xbar, _)) = point.coordinates() else { return Phase2Outcome::Trivial };
        for xi in left {
            let g = gcd(xi.sub(xbar).value(), n);
            if !g.is_one() && g != *n {
                return Phase2Outcome::Factor(g);
            }
        }
    }
    Phase2Outcome::Trivial
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigmod::{Modulus, Natural};
    use crate::curve::{group_order_bruteforce, WeierstrassCurve};
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn curve_and_point(p: u64, a: u64, b: u64, x: u64, y: u64) -> (WeierstrassCurve, AffinePoint) {
        let m = Modulus::from_u64(p);
        let c = WeierstrassCurve::new(m.clone(), m.residue_u64(a), m.residue_u64(b));
        let pt = AffinePoint::finite(m.residue_u64(x), m.residue_u64(y));
        assert!(c.contains(&pt));
        (c, pt)
    }

    #[test]
    fn walk_of_two_points_is_square_or_cube() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let mut ledger = WorkLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let walk = random_walk(&q, 2, &c, &mut rng, &mut ledger).unwrap();
        assert_eq!(walk.points.len(), 2);
        let second = AffinePoint::finite(walk.points[1].0.clone(), walk.points[1].1.clone());
        let sq = c.scalar_mul(&q, &Natural::from(2u32), &mut ledger).unwrap();
        let cu = c.scalar_mul(&q, &Natural::from(3u32), &mut ledger).unwrap();
        assert!(second == sq || second == cu);
    }

    #[test]
    fn walk_is_deterministic_per_seed() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let mut l1 = WorkLedger::new();
        let mut l2 = WorkLedger::new();
        let w1 = random_walk(&q, 40, &c, &mut ChaCha8Rng::seed_from_u64(9), &mut l1).unwrap();
        let w2 = random_walk(&q, 40, &c, &mut ChaCha8Rng::seed_from_u64(9), &mut l2).unwrap();
        assert_eq!(w1.points, w2.points);
        assert_eq!(l1, l2);
    }

    #[test]
    fn walk_stays_in_generated_subgroup() {
        let (c, p) = curve_and_point(97, 2, 3, 17, 10);
        let mut ledger = WorkLedger::new();
        // enumerate <Q> for Q = 2P
        let q = c.scalar_mul(&p, &Natural::from(2u32), &mut ledger).unwrap();
        let mut subgroup = std::collections::HashSet::new();
        let mut cur = q.clone();
        while let Some((x, y)) = cur.coordinates() {
            subgroup.insert((x.value().clone(), y.value().clone()));
            cur = c.add(&cur, &q, &mut ledger).unwrap();
        }
        let walk =
            random_walk(&q, 25, &c, &mut ChaCha8Rng::seed_from_u64(3), &mut ledger).unwrap();
        for (x, y) in &walk.points {
            assert!(subgroup.contains(&(x.value().clone(), y.value().clone())));
        }
    }

    #[test]
    fn pairwise_product_hand_examples() {
        let m = Modulus::from_u64(101);
        let mk = |coords: &[u64]| Walk {
            points: coords.iter().map(|&c| (m.residue_u64(c), m.residue_u64(0))).collect(),
        };
        let mut ledger = WorkLedger::new();
        let d = pairwise_product(&mk(&[3, 5]), Coordinate::X, &mut ledger);
        assert_eq!(d, m.residue_u64(99));
        assert_eq!(ledger.multiplications + ledger.squarings, 1);

        let mut ledger = WorkLedger::new();
        let d = pairwise_product(&mk(&[1, 2, 3]), Coordinate::X, &mut ledger);
        assert_eq!(d, m.residue_u64(99)); // (1-2)(1-3)(2-3) = -2
        assert_eq!(ledger.multiplications + ledger.squarings, 3);

        let d = pairwise_product(&mk(&[7, 9, 7]), Coordinate::X, &mut ledger);
        assert!(d.is_zero());
    }

    #[test]
    fn folding_keeps_x_products_invariant_under_negation() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let mut ledger = WorkLedger::new();
        let w1 = random_walk(&q, 20, &c, &mut ChaCha8Rng::seed_from_u64(5), &mut ledger).unwrap();
        let w2 = random_walk(&q.negate(), 20, &c, &mut ChaCha8Rng::seed_from_u64(5), &mut ledger)
            .unwrap();
        let d1 = pairwise_product(&w1, Coordinate::X, &mut ledger);
        let d2 = pairwise_product(&w2, Coordinate::X, &mut ledger);
        assert_eq!(d1, d2);
    }

    fn crt(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
        for k in 0.. {
            let candidate = r1 + m1 * k;
            if candidate % m2 == r2 {
                return candidate;
            }
        }
        unreachable!()
    }

    /// N = 17 * 31 with the curve congruent mod 17 to one of small order:
    /// a walk longer than that order must collide mod 17.
    #[test]
    fn constructed_collision_yields_factor() {
        let p = 17u64;
        let q_prime = 31u64;
        let n = Modulus::from_u64(p * q_prime);
        // y^2 = x^3 + x + 1 has some small order g17 mod 17
        let m17 = Modulus::from_u64(p);
        let c17 = WeierstrassCurve::new(m17.clone(), m17.residue_u64(1), m17.residue_u64(1));
        let g17 = group_order_bruteforce(&c17).unwrap();
        assert!(g17 <= 50);
        // point (0, 1) mod 17; lift everything to mod N with b matched by CRT
        let (x0, y0, a0, b0) = (0u64, 1u64, 1u64, 1u64);
        let (xq, yq, aq) = (5u64, 11u64, 2u64);
        let x = crt(x0, p, xq, q_prime);
        let y = crt(y0, p, yq, q_prime);
        let a = crt(a0, p, aq, q_prime);
        // b = y^2 - x^3 - a x mod N reduces to b0 mod 17 automatically
        let mut scratch = WorkLedger::new();
        let xr = n.residue_u64(x);
        let yr = n.residue_u64(y);
        let ar = n.residue_u64(a);
        let br = yr
            .square(&mut scratch)
            .sub(&xr.square(&mut scratch).mul(&xr, &mut scratch))
            .sub(&ar.mul(&xr, &mut scratch));
        assert_eq!(br.value().to_u64().unwrap() % p, b0);
        let c = WeierstrassCurve::new(n.clone(), ar, br);
        let q = AffinePoint::finite(xr, yr);
        let mut ledger = WorkLedger::new();
        let outcome = birthday_phase2(
            &c,
            &q,
            g17 + 5,
            false,
            Coordinate::X,
            &mut ChaCha8Rng::seed_from_u64(2),
            &mut ledger,
        );
        assert_eq!(outcome, Phase2Outcome::Factor(Natural::from(p)));
    }

    #[test]
    fn fast_and_naive_paths_agree_on_success() {
        // same walk either way (same seed); compare outcome classes
        let p = 17u64;
        let q_prime = 101u64;
        let n = Modulus::from_u64(p * q_prime);
        let mut found = (0, 0);
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, pt) = crate::curve::random_curve_through_point(&n, &mut rng);
            let mut l1 = WorkLedger::new();
            let o1 = birthday_phase2(
                &c,
                &pt,
                32,
                false,
                Coordinate::X,
                &mut ChaCha8Rng::seed_from_u64(seed + 1000),
                &mut l1,
            );
            let mut l2 = WorkLedger::new();
            let o2 = birthday_phase2(
                &c,
                &pt,
                32,
                true,
                Coordinate::X,
                &mut ChaCha8Rng::seed_from_u64(seed + 1000),
                &mut l2,
            );
            let succ1 = matches!(o1, Phase2Outcome::Factor(_));
            let succ2 = matches!(o2, Phase2Outcome::Factor(_));
            assert_eq!(succ1, succ2, "seed {seed}: {o1:?} vs {o2:?}");
            found.0 += succ1 as u32;
            found.1 += succ2 as u32;
        }
        // r = 32 >= any point order mod 17, so successes must be plentiful
        assert!(found.0 > 50, "only {} successes", found.0);
    }

    #[test]
    fn success_probability_examples() {
        assert!((success_probability(365.0, 23, false) - 0.5).abs() < 0.02);
        assert_eq!(success_probability(1000.0, 1, false), 0.0);
        let folded = success_probability(100.0, 9, true);
        assert!((folded - (1.0 - (-0.81f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn cross_stream_linear_is_arithmetic_progression() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let mut ledger = WorkLedger::new();
        // e = 1, b_i = i: points Q^1, Q^2, Q^3, ...
        let mut stream = PowerStream::new(&c, &q, 1, 0, 1, &mut ledger).unwrap();
        for i in 1..=20u64 {
            let point = stream.next_point(&mut ledger).unwrap();
            let expect = c.scalar_mul(&q, &Natural::from(i), &mut ledger).unwrap();
            assert_eq!(point, expect, "i={i}");
        }
    }

    #[test]
    fn cross_stream_square_exponents() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let mut ledger = WorkLedger::new();
        // e = 2, b_i = i: points Q^(i^2), second differences constant
        let mut stream = PowerStream::new(&c, &q, 2, 0, 1, &mut ledger).unwrap();
        for i in 1..=15u64 {
            let point = stream.next_point(&mut ledger).unwrap();
            let expect = c.scalar_mul(&q, &Natural::from(i * i), &mut ledger).unwrap();
            assert_eq!(point, expect, "i={i}");
        }
    }

    #[test]
    fn cross_stream_group_op_budget() {
        let (c, q) = curve_and_point(97, 2, 3, 17, 10);
        let count = 50u64;
        // count*e for the streaming part plus a constant for the setup; the
        // setup constant is 4e up to e = 3 but grows like log2(e!) beyond,
        // since the e-th exponent difference is e! * slope^e
        for e in 1..=6u32 {
            let mut ledger = WorkLedger::new();
            let mut stream = PowerStream::new(&c, &q, e, 0, 1, &mut ledger).unwrap();
            for _ in 0..count {
                stream.next_point(&mut ledger).unwrap();
            }
            let setup = if e <= 3 { 4 * u64::from(e) } else { 3 * u64::from(e * e) };
            assert!(
                stream.group_adds <= count * u64::from(e) + setup,
                "e={e}: {} adds",
                stream.group_adds
            );
        }
    }

    #[test]
    fn cross_streaming_and_tree_agree() {
        let p = 17u64;
        let q_prime = 101u64;
        let n = Modulus::from_u64(p * q_prime);
        for seed in 0..30u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, pt) = crate::curve::random_curve_through_point(&n, &mut rng);
            let seeds = CrossSeeds { left: (3, 5), right: (1, 7) };
            let mut l1 = WorkLedger::new();
            let o1 = cross_phase2(&c, &pt, 8, 12, 2, seeds, CrossEval::Streaming, &mut l1);
            let mut l2 = WorkLedger::new();
            let o2 = cross_phase2(&c, &pt, 8, 12, 2, seeds, CrossEval::ProductTree, &mut l2);
            assert_eq!(o1, o2, "seed {seed}");
        }
    }

    #[test]
    fn cross_phase2_finds_constructed_factor() {
        // mod 17 the group is tiny, so r*s = 96 cross differences collide
        let p = 17u64;
        let q_prime = 101u64;
        let n = Modulus::from_u64(p * q_prime);
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, pt) = crate::curve::random_curve_through_point(&n, &mut rng);
            let seeds = CrossSeeds::random(&mut rng);
            let mut ledger = WorkLedger::new();
            if let Phase2Outcome::Factor(d) = cross_phase2(&c, &pt, 8, 12, 2, seeds, CrossEval::Streaming, &mut ledger) {
                assert!(d == Natural::from(p) || d == Natural::from(q_prime));
                hits += 1;
            }
        }
        assert!(hits >= 10, "only {hits} of 20 constructed cases factored");
    }
}
