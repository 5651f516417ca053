//! Benchmark competitors: Brent's improvement of the Pollard rho method
//! (the order-sqrt(p) baseline of the comparison tables) and Pollard's
//! p-1 method with the same birthday-paradox second phase as the elliptic
//! curve variant, just over the multiplicative group mod N.

use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bigmod::{gcd, FactorEvent, Modulus, Natural, Residue, WorkLedger};
use crate::phase2::{classify_gcd, Phase2Outcome};
use crate::primegen::PrimePowerSchedule;

/// Differences are accumulated into a running product and GCD-checked every
/// this many steps.
const RHO_BATCH: u64 = 128;

#[derive(Clone, Debug)]
pub struct RhoResult {
    pub divisor: Option<Natural>,
    /// f-evaluations performed (the x <- x^2 + c steps).
    pub iterations: u64,
    /// restarts with a fresh additive constant after a whole-N collision
    pub restarts: u32,
}

/// Brent's cycle-finding rho: iterate x <- x^2 + c, compare the saved
/// power-of-two iterate against the second half of each window, batch the
/// differences into a product and GCD every [`RHO_BATCH`] steps. A batched
/// GCD of N is replayed step by step; a genuine simultaneous collision
/// restarts with a new constant.
pub fn pollard_rho(
    n: &Modulus,
    seed: u64,
    max_iters: u64,
    ledger: &mut WorkLedger,
) -> RhoResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_val = n.value().clone();
    let mut iterations = 0u64;
    let mut restarts = 0u32;
    loop {
        let c = n.residue_u64(rng.gen_range(1..u64::MAX));
        let mut y = n.residue_u64(rng.gen_range(2..u64::MAX));
        let step = |v: &Residue, ledger: &mut WorkLedger| v.square(ledger).add(&c);
        let mut r = 1u64;
        'windows: loop {
            let x = y.clone();
            for _ in 0..r {
                y = step(&y, ledger);
                iterations += 1;
            }
            let mut k = 0u64;
            while k < r {
                let saved = y.clone();
                let mut q = n.one();
                let batch = RHO_BATCH.min(r - k);
                for _ in 0..batch {
                    y = step(&y, ledger);
                    iterations += 1;
                    q = q.mul(&x.sub(&y), ledger);
                }
                k += batch;
                let g = gcd(q.value(), &n_val);
                if !g.is_one() {
                    if g != n_val {
                        return RhoResult { divisor: Some(g), iterations, restarts };
                    }
                    // replay the batch one step at a time
                    let mut y2 = saved;
                    loop {
                        y2 = step(&y2, ledger);
                        iterations += 1;
                        let g = gcd(x.sub(&y2).value(), &n_val);
                        if !g.is_one() {
                            if g != n_val {
                                return RhoResult { divisor: Some(g), iterations, restarts };
                            }
                            break; // simultaneous collision: new constant
                        }
                    }
                    restarts += 1;
                    break 'windows;
                }
                if iterations >= max_iters {
                    return RhoResult { divisor: None, iterations, restarts };
                }
            }
            r *= 2;
            if iterations >= max_iters {
                return RhoResult { divisor: None, iterations, restarts };
            }
        }
    }
}

/// Stage 1 of Pollard p-1: Q = a^E over the prime-power schedule, then one
/// GCD(Q - 1, N). A proper divisor comes back as the event; gcd = N (for
/// example when the order of a is smooth for every prime of N at once) is
/// the trivial event.
pub fn pminus1_phase1(
    a: &Residue,
    schedule: &PrimePowerSchedule,
    ledger: &mut WorkLedger,
) -> Result<Residue, FactorEvent> {
    let n = a.modulus().value().clone();
    let mut q = a.clone();
    for entry in &schedule.entries {
        q = q.pow_u64(entry.prime_power, ledger);
    }
    let g = gcd(q.sub(&q.modulus().one()).value(), &n);
    if g.is_one() {
        Ok(q)
    } else {
        Err(FactorEvent { divisor: g })
    }
}

/// The birthday second phase in the multiplicative group mod N: the same
/// square-or-square-times-Q walk, but there is no point negation to fold
/// away, so the plain pairwise difference product of the walk values is
/// used.
pub fn pminus1_birthday_phase2<R: Rng>(
    q: &Residue,
    r: u64,
    rng: &mut R,
    ledger: &mut WorkLedger,
) -> Phase2Outcome {
    assert!(!q.is_zero() && !q.is_one(), "phase-2 base must generate a nontrivial subgroup");
    assert!(r >= 2);
    let n = q.modulus().value().clone();
    let mut points = Vec::with_capacity(r as usize);
    points.push(q.clone());
    let mut cur = q.clone();
    for _ in 1..r {
        let squared = cur.square(ledger);
        let with_q = rng.next_u32() & 1 == 1;
        let mut next = if with_q { squared.mul(q, ledger) } else { squared.clone() };
        if next.is_one() {
            next = if with_q { squared } else { squared.mul(q, ledger) };
        }
        points.push(next.clone());
        cur = next;
    }
    let mut d = q.modulus().one();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.mul(&points[i].sub(&points[j]), ledger);
        }
    }
    classify_gcd(&d, &points, &n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primegen::build_schedule;
    use num_traits::Zero;
    use rand::RngCore;

    #[test]
    fn rho_factors_small_semiprimes() {
        let mut ledger = WorkLedger::new();
        let result = pollard_rho(&Modulus::from_u64(8051), 1, 100_000, &mut ledger);
        let d: u64 = result.divisor.expect("factor").try_into().unwrap();
        assert!(d == 83 || d == 97);

        let result = pollard_rho(&Modulus::from_u64(91), 3, 100_000, &mut ledger);
        let d: u64 = result.divisor.expect("factor").try_into().unwrap();
        assert!(d == 7 || d == 13);
    }

    #[test]
    fn rho_is_deterministic_per_seed() {
        let n = Modulus::from_u64(10_000_019 * 3); // 3 * 10000019
        let mut l1 = WorkLedger::new();
        let mut l2 = WorkLedger::new();
        let r1 = pollard_rho(&n, 7, 1_000_000, &mut l1);
        let r2 = pollard_rho(&n, 7, 1_000_000, &mut l2);
        assert_eq!(r1.divisor, r2.divisor);
        assert_eq!(r1.iterations, r2.iterations);
        assert_eq!(l1, l2);
    }

    #[test]
    fn rho_respects_iteration_budget() {
        // 2^31 - 1 is prime: no factor can be found
        let n = Modulus::from_u64((1 << 31) - 1);
        let mut ledger = WorkLedger::new();
        let result = pollard_rho(&n, 5, 2_000, &mut ledger);
        assert!(result.divisor.is_none());
        assert!(result.iterations >= 2_000 && result.iterations < 3_000);
    }

    fn is_prime_u64(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn rho_iteration_scaling() {
        // mean iterations over random semiprimes tracks sqrt(p)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ratio_sum = 0.0;
        let mut count = 0;
        while count < 100 {
            let p = loop {
                let c = rng.gen_range(1_000u64..100_000);
                if is_prime_u64(c) {
                    break c;
                }
            };
            let q = loop {
                let c = rng.gen_range(1_000u64..100_000);
                if is_prime_u64(c) && c != p {
                    break c;
                }
            };
            let mut ledger = WorkLedger::new();
            let result =
                pollard_rho(&Modulus::from_u64(p * q), count as u64, 10_000_000, &mut ledger);
            assert!(result.divisor.is_some());
            ratio_sum += result.iterations as f64 / (p.min(q) as f64).sqrt();
            count += 1;
        }
        let mean = ratio_sum / count as f64;
        assert!((0.8..=2.5).contains(&mean), "mean iterations / sqrt(p) = {mean}");
    }

    #[test]
    fn pminus1_stage1_constructed() {
        // N = 31 * 41; p - 1 = 30 = 2 * 3 * 5 divides E for m = m' = 7
        let n = Modulus::from_u64(1271);
        let schedule = build_schedule(7, 7);
        let mut ledger = WorkLedger::new();
        let event = pminus1_phase1(&n.residue_u64(2), &schedule, &mut ledger).unwrap_err();
        assert!((event.divisor % Natural::from(31u32)).is_zero(), "31 divides the gcd");
    }

    #[test]
    fn pminus1_stage1_succeeds_iff_smooth() {
        // p - 1 = 30 = 2 * 3 * 5: (7, 7)-smooth, not (5, 5)-smooth
        let n = Modulus::from_u64(1271);
        let mut ledger = WorkLedger::new();
        assert!(pminus1_phase1(&n.residue_u64(2), &build_schedule(7, 7), &mut ledger).is_err());
        assert!(pminus1_phase1(&n.residue_u64(2), &build_schedule(5, 5), &mut ledger).is_ok());
    }

    #[test]
    fn pminus1_stage1_unit_base_is_trivial() {
        let n = Modulus::from_u64(1271);
        let schedule = build_schedule(7, 7);
        let mut ledger = WorkLedger::new();
        let event = pminus1_phase1(&n.residue_u64(1), &schedule, &mut ledger).unwrap_err();
        assert!(event.is_trivial(n.value()));
    }

    #[test]
    fn pminus1_stage1_on_prime_modulus_never_proper() {
        let n = Modulus::from_u64(101);
        let schedule = build_schedule(101, 101); // E covers 100 = 2^2 * 5^2
        let mut ledger = WorkLedger::new();
        for a in [2u64, 3, 5, 7, 11] {
            match pminus1_phase1(&n.residue_u64(a), &schedule, &mut ledger) {
                Ok(_) => {}
                Err(event) => assert!(event.is_trivial(n.value()), "a={a}"),
            }
        }
    }

    /// p = 607 (p-1 = 2*3*101), q = 887 (q-1 = 2*443): stage 1 with m = 20
    /// strips everything except the prime 101, which phase 2 catches.
    #[test]
    fn pminus1_birthday_phase2_constructed() {
        let p = 607u64;
        let n = Modulus::from_u64(p * 887);
        let schedule = build_schedule(20, 20);
        let ell = 101.0;
        let r = (2.0 * ell * std::f64::consts::LN_2).sqrt().ceil() as u64; // 12
        let mut successes = 0;
        let mut trials = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = n.residue_u64(rng.gen_range(2..1_000_000));
            let mut ledger = WorkLedger::new();
            trials += 1;
            match pminus1_phase1(&a, &schedule, &mut ledger) {
                Err(event) if !event.is_trivial(n.value()) => successes += 1, // lucky stage 1
                Err(_) => {}
                Ok(q) => if let Phase2Outcome::Factor(d) = pminus1_birthday_phase2(&q, r, &mut rng, &mut ledger) {
                    assert!((n.value() % &d).is_zero());
                    successes += 1;
                },
            }
        }
        assert!(successes * 10 >= trials * 3, "{successes}/{trials} below 30%");
    }

    #[test]
    fn pminus1_phase2_walk_stays_in_subgroup() {
        // order of Q divides 101 mod 607: enumerate <Q> and check membership
        let p = 607u64;
        let n = Modulus::from_u64(p * 887);
        let schedule = build_schedule(20, 20);
        let mut ledger = WorkLedger::new();
        let q = pminus1_phase1(&n.residue_u64(2), &schedule, &mut ledger).unwrap();
        let q_mod_p: u64 = (q.value() % Natural::from(p)).try_into().unwrap();
        let mut subgroup = std::collections::HashSet::new();
        let mut cur = q_mod_p;
        loop {
            subgroup.insert(cur);
            cur = cur * q_mod_p % p;
            if cur == q_mod_p {
                break;
            }
        }
        assert!(subgroup.len() > 1 && subgroup.len() <= 101);
        // regenerate the walk exactly as the phase does
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut walk_ledger = WorkLedger::new();
        let mut points = vec![q.clone()];
        let mut cur = q.clone();
        for _ in 1..12 {
            let squared = cur.square(&mut walk_ledger);
            let next = if rng.next_u32() & 1 == 1 {
                squared.mul(&q, &mut walk_ledger)
            } else {
                squared
            };
            points.push(next.clone());
            cur = next;
        }
        for point in &points {
            let v: u64 = (point.value() % Natural::from(p)).try_into().unwrap();
            assert!(subgroup.contains(&v));
        }
    }

    #[test]
    fn pminus1_phase2_tiny_walk_rarely_succeeds() {
        let n = Modulus::from_u64(607 * 887);
        let schedule = build_schedule(20, 20);
        let mut successes = 0;
        for seed in 200..260u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = n.residue_u64(rng.gen_range(2..1_000_000));
            let mut ledger = WorkLedger::new();
            if let Ok(q) = pminus1_phase1(&a, &schedule, &mut ledger) {
                if let Phase2Outcome::Factor(_) =
                    pminus1_birthday_phase2(&q, 2, &mut rng, &mut ledger)
                {
                    successes += 1;
                }
            }
        }
        // success probability ~ 2/101 per trial
        assert!(successes <= 6, "{successes} successes with r = 2");
    }
}
