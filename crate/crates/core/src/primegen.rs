//! Prime enumeration and the phase-1 prime-power schedule.
//!
//! The schedule lists (p, e, p^e) for every prime p < m with e the largest
//! exponent such that p^e <= m'; the implicit phase-1 exponent E is the
//! product of the p^e entries and satisfies ln(E) ~ m.

/// Segment size for the sieve, in odd numbers.
const SEGMENT: usize = 1 << 16;

/// All primes strictly below `m`, ascending. Segmented sieve of Eratosthenes.
pub fn primes_below(m: u64) -> Vec<u64> {
    if m <= 2 {
        return Vec::new();
    }
    let limit = m - 1; // largest candidate
    let root = (limit as f64).sqrt() as u64 + 1;
    // base sieve up to sqrt(limit)
    let mut base = vec![true; (root + 1) as usize];
    let mut base_primes = Vec::new();
    for p in 2..=root {
        if base[p as usize] {
            base_primes.push(p);
            let mut q = p * p;
            while q <= root {
                base[q as usize] = false;
                q += p;
            }
        }
    }
    let mut primes = Vec::new();
    if m > 2 {
        primes.push(2);
    }
    let mut low = 3u64;
    let mut segment = vec![true; SEGMENT];
    while low <= limit {
        let high = (low + 2 * SEGMENT as u64 - 1).min(limit + 1);
        segment.iter_mut().for_each(|b| *b = true);
        for &p in base_primes.iter().skip(1) {
            if p * p > high {
                break;
            }
            // first odd multiple of p in [low, high]
            let mut start = low.div_ceil(p) * p;
            if start < p * p {
                start = p * p;
            }
            if start.is_multiple_of(2) {
                start += p;
            }
            let mut q = start;
            while q <= high {
                segment[((q - low) / 2) as usize] = false;
                q += 2 * p;
            }
        }
        let mut n = low;
        while n <= high && n <= limit {
            if segment[((n - low) / 2) as usize] {
                primes.push(n);
            }
            n += 2;
        }
        low = high + 1;
        if low.is_multiple_of(2) {
            low += 1;
        }
    }
    primes
}

/// Largest e with p^e <= mprime, by integer powering comparison.
/// Returns 0 when mprime < p.
pub fn exponent_for(p: u64, mprime: u64) -> u32 {
    debug_assert!(p >= 2);
    let mut e = 0u32;
    let mut acc = 1u64;
    while acc <= mprime / p {
        acc *= p;
        e += 1;
    }
    e
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub prime: u64,
    pub exponent: u32,
    pub prime_power: u64,
}

/// Phase-1 prime-power schedule: ordered (p, e, p^e) for primes p < m with
/// p^e <= m' < p^(e+1). Materialized once per parameter choice and shared
/// read-only across trials.
#[derive(Clone, Debug)]
pub struct PrimePowerSchedule {
    pub bound_m: u64,
    pub bound_mprime: u64,
    pub entries: Vec<ScheduleEntry>,
}

pub fn build_schedule(m: u64, mprime: u64) -> PrimePowerSchedule {
    assert!(m >= 2, "phase-1 bound must be at least 2");
    assert!(m <= mprime, "m must not exceed m'");
    let entries = primes_below(m)
        .into_iter()
        .map(|p| {
            let e = exponent_for(p, mprime);
            debug_assert!(e >= 1);
            ScheduleEntry { prime: p, exponent: e, prime_power: p.pow(e) }
        })
        .collect();
    PrimePowerSchedule { bound_m: m, bound_mprime: mprime, entries }
}

impl PrimePowerSchedule {
    /// Sum of ln(p^e) over the schedule, i.e. ln(E).
    pub fn ln_exponent(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| f64::from(e.exponent) * (e.prime as f64).ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_below_small() {
        assert_eq!(primes_below(10), vec![2, 3, 5, 7]);
        assert_eq!(primes_below(3), vec![2]);
        assert_eq!(primes_below(2), Vec::<u64>::new());
        assert_eq!(primes_below(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn primes_below_counts() {
        // pi(x) reference values
        assert_eq!(primes_below(1_000).len(), 168);
        assert_eq!(primes_below(10_000).len(), 1_229);
        assert_eq!(primes_below(100_000).len(), 9_592);
        // segmented path crosses several segment boundaries
        assert_eq!(primes_below(1_000_000).len(), 78_498);
    }

    #[test]
    fn exponent_for_examples() {
        assert_eq!(exponent_for(2, 100), 6); // 64 <= 100 < 128
        assert_eq!(exponent_for(3, 100), 4); // 81 <= 100 < 243
        assert_eq!(exponent_for(97, 100), 1);
        assert_eq!(exponent_for(101, 100), 0);
    }

    #[test]
    fn schedule_examples() {
        let s = build_schedule(10, 10);
        let flat: Vec<(u64, u32, u64)> =
            s.entries.iter().map(|e| (e.prime, e.exponent, e.prime_power)).collect();
        assert_eq!(flat, vec![(2, 3, 8), (3, 2, 9), (5, 1, 5), (7, 1, 7)]);

        let s = build_schedule(3, 100);
        assert_eq!(s.entries.len(), 1);
        assert_eq!((s.entries[0].prime, s.entries[0].exponent, s.entries[0].prime_power), (2, 6, 64));

        assert!(build_schedule(2, 2).entries.is_empty());
    }

    #[test]
    fn every_entry_is_maximal() {
        let s = build_schedule(1_000, 5_000);
        for e in &s.entries {
            assert!(e.prime_power <= 5_000);
            assert!(e.prime_power > 5_000 / e.prime, "p^(e+1) must exceed m'");
        }
    }

    #[test]
    fn ln_exponent_tracks_m() {
        for m in [1_000u64, 10_000, 100_000] {
            let s = build_schedule(m, m);
            let ratio = s.ln_exponent() / m as f64;
            assert!((0.9..=1.2).contains(&ratio), "m={m} ratio={ratio}");
        }
    }
}
