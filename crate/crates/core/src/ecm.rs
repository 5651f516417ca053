//! Trial orchestration: phase-1 runs, outcome classification, the adaptive
//! parameter policy, parallel trial driving and the full factorization
//! wrapper.
//!
//! A trial draws a fresh random curve, multiplies the starting point by
//! every scheduled prime power mod N, and (for the two-phase variants)
//! hands the surviving point to the birthday-paradox second phase. Trials
//! are embarrassingly parallel: worker w runs the trial indices it pulls
//! from a shared counter, every trial derives its randomness from the
//! stream (seed, trial_index), and the first success cancels the rest.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::bigmod::{FactorEvent, Modulus, Natural, WorkLedger};
use crate::curve::{
    montgomery_to_weierstrass, random_curve_through_point, suyama_curve, AffinePoint,
    MontgomeryCurve, WeierstrassCurve, XZPoint,
};
use crate::phase2::{birthday_phase2, cross_phase2, Coordinate, CrossEval, CrossSeeds,
    Phase2Outcome};
use crate::primegen::{build_schedule, primes_below, PrimePowerSchedule};
use crate::rivals;

/// Which algorithm a trial runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Phase 1 only.
    OnePhase,
    /// Birthday phase 2 with the naive pairwise product.
    TwoPhaseNaive,
    /// Birthday phase 2 through the product tree; r must be a power of 2.
    TwoPhaseFast,
    /// Cross-product phase 2 with constant e-th differences.
    TwoPhaseCross,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::OnePhase => "ecm1",
            Variant::TwoPhaseNaive => "ecm2",
            Variant::TwoPhaseFast => "ecm2-fast",
            Variant::TwoPhaseCross => "ecm2-cross",
        }
    }

    pub fn is_two_phase(self) -> bool {
        !matches!(self, Variant::OnePhase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveForm {
    Weierstrass,
    Montgomery,
    Suyama,
}

impl CurveForm {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveForm::Weierstrass => "weierstrass",
            CurveForm::Montgomery => "montgomery",
            CurveForm::Suyama => "suyama",
        }
    }
}

/// Everything one trial needs. `alpha`/`beta` are informational echoes of
/// the analysis that produced the plan (NaN when not derived from one).
#[derive(Clone, Debug)]
pub struct TrialPlan {
    pub alpha: f64,
    pub beta: f64,
    pub m: u64,
    pub mprime: u64,
    pub r: u64,
    pub s: u64,
    pub e: u32,
    pub variant: Variant,
    pub curve_form: CurveForm,
    pub seed: u64,
}

impl TrialPlan {
    pub fn validate(&self) -> Result<(), String> {
        if self.m < 2 {
            return Err("phase-1 bound m must be at least 2".into());
        }
        if self.m > self.mprime {
            return Err("m' must be at least m".into());
        }
        if self.variant.is_two_phase() && self.r < 2 {
            return Err("two-phase variants need a walk length r >= 2".into());
        }
        if self.variant == Variant::TwoPhaseFast && !self.r.is_power_of_two() {
            return Err("fast evaluation requires r to be a power of 2".into());
        }
        if self.variant == Variant::TwoPhaseCross {
            if self.s < 1 {
                return Err("cross-product phase needs s >= 1".into());
            }
            if !(1..=6).contains(&self.e) {
                return Err("cross-product exponent e must be in 1..=6".into());
            }
        }
        Ok(())
    }
}

/// How one trial ended. `TrivialN` is the rare event that every prime of N
/// was found simultaneously (the extracted divisor was N itself); the
/// caller redraws with the next seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    FactorFound { divisor: Natural, phase: u8 },
    NoFactor,
    TrivialN,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub outcome: TrialOutcome,
    pub ledger: WorkLedger,
}

/// Phase 1: Q = P^E by successive scalar multiplications with each
/// scheduled prime power, all arithmetic mod N. E itself is never formed.
/// A failed inversion surfaces the divisor that caused it.
pub fn phase1(
    curve: &WeierstrassCurve,
    point: &AffinePoint,
    schedule: &PrimePowerSchedule,
    ledger: &mut WorkLedger,
) -> Result<AffinePoint, FactorEvent> {
    let mut q = point.clone();
    for entry in &schedule.entries {
        q = curve.scalar_mul(&q, &BigUint::from(entry.prime_power), ledger)?;
    }
    Ok(q)
}

/// Phase 1 in x-only Montgomery form: one ladder per scheduled prime power
/// with a normalization between entries, so a collapse mod p | N surfaces
/// through the inversion exactly as in the affine form.
pub fn phase1_xz(
    curve: &MontgomeryCurve,
    point: &XZPoint,
    schedule: &PrimePowerSchedule,
    ledger: &mut WorkLedger,
) -> Result<XZPoint, FactorEvent> {
    let powers: Vec<u64> = schedule.entries.iter().map(|e| e.prime_power).collect();
    curve.ladder_schedule(point, &powers, ledger)
}

fn classify_event(event: FactorEvent, n: &Natural, phase: u8) -> TrialOutcome {
    if event.is_trivial(n) {
        TrialOutcome::TrivialN
    } else {
        debug_assert!((n % &event.divisor).is_zero(), "reported divisor must divide N");
        TrialOutcome::FactorFound { divisor: event.divisor, phase }
    }
}

fn classify_phase2(outcome: Phase2Outcome) -> TrialOutcome {
    match outcome {
        Phase2Outcome::Factor(divisor) => TrialOutcome::FactorFound { divisor, phase: 2 },
        Phase2Outcome::NoFactor => TrialOutcome::NoFactor,
        Phase2Outcome::Trivial => TrialOutcome::TrivialN,
    }
}

/// One independent trial: trial_index selects the random stream, so a
/// fixed (seed, index) pair reproduces the outcome and the ledger exactly,
/// serial or parallel.
pub fn run_trial(
    n: &Modulus,
    plan: &TrialPlan,
    schedule: &PrimePowerSchedule,
    trial_index: u64,
) -> TrialResult {
    debug_assert!(plan.validate().is_ok());
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(trial_index);
    let mut ledger = WorkLedger::new();
    let n_val = n.value().clone();

    // curve generation; setup arithmetic is excluded from the work model
    let mut setup = WorkLedger::new();
    enum Drawn {
        Weierstrass(WeierstrassCurve, AffinePoint),
        XOnly(MontgomeryCurve, XZPoint),
    }
    let drawn = match plan.curve_form {
        CurveForm::Weierstrass => {
            let (curve, point) = random_curve_through_point(n, &mut rng);
            Drawn::Weierstrass(curve, point)
        }
        CurveForm::Montgomery => {
            let a = n.residue_u64(u64::from(rng.gen::<u32>()));
            let x0 = n.residue(rng.gen_biguint_below(n.value()));
            // b fixed by placing (x0, 1) on the curve
            let x0_sq = x0.square(&mut setup);
            let b = x0_sq.mul(&x0, &mut setup).add(&a.mul(&x0_sq, &mut setup)).add(&x0);
            Drawn::XOnly(MontgomeryCurve::new(n.clone(), a, b), XZPoint { x: x0, z: n.one() })
        }
        CurveForm::Suyama => {
            let sigma = Natural::from(rng.gen_range(6u64..u64::from(u32::MAX)));
            match suyama_curve(&sigma, n, &mut setup) {
                Ok((curve, point)) => Drawn::XOnly(curve, point),
                Err(event) => {
                    return TrialResult { outcome: classify_event(event, &n_val, 1), ledger }
                }
            }
        }
    };

    // phase 1
    let (curve, phase1_point): (WeierstrassCurve, AffinePoint) = match drawn {
        Drawn::Weierstrass(curve, point) => match phase1(&curve, &point, schedule, &mut ledger) {
            Ok(q) => (curve, q),
            Err(event) => {
                return TrialResult { outcome: classify_event(event, &n_val, 1), ledger }
            }
        },
        Drawn::XOnly(curve, point) => {
            if plan.variant.is_two_phase() {
                // the walk needs full (x, y) points: map the Montgomery
                // curve (with its y = 1 base) to short Weierstrass first
                let base = (point.x.clone(), n.one());
                let mapped = montgomery_to_weierstrass(&curve, (&base.0, &base.1), &mut ledger);
                let (wcurve, wpoint) = match mapped {
                    Ok(pair) => pair,
                    Err(event) => {
                        return TrialResult { outcome: classify_event(event, &n_val, 1), ledger }
                    }
                };
                match phase1(&wcurve, &wpoint, schedule, &mut ledger) {
                    Ok(q) => (wcurve, q),
                    Err(event) => {
                        return TrialResult { outcome: classify_event(event, &n_val, 1), ledger }
                    }
                }
            } else {
                return match phase1_xz(&curve, &point, schedule, &mut ledger) {
                    Ok(_) => TrialResult { outcome: TrialOutcome::NoFactor, ledger },
                    Err(event) => {
                        TrialResult { outcome: classify_event(event, &n_val, 1), ledger }
                    }
                };
            }
        }
    };

    if !plan.variant.is_two_phase() {
        return TrialResult { outcome: TrialOutcome::NoFactor, ledger };
    }
    finish_two_phase(&curve, phase1_point, plan, &mut rng, ledger)
}

fn finish_two_phase(
    curve: &WeierstrassCurve,
    q: AffinePoint,
    plan: &TrialPlan,
    rng: &mut ChaCha8Rng,
    mut ledger: WorkLedger,
) -> TrialResult {
    if q.is_infinity() {
        // P^E = I mod N exactly: every factor was smooth at once
        return TrialResult { outcome: TrialOutcome::TrivialN, ledger };
    }
    let outcome = match plan.variant {
        Variant::TwoPhaseNaive => {
            birthday_phase2(curve, &q, plan.r, false, Coordinate::X, rng, &mut ledger)
        }
        Variant::TwoPhaseFast => {
            birthday_phase2(curve, &q, plan.r, true, Coordinate::X, rng, &mut ledger)
        }
        Variant::TwoPhaseCross => {
            let seeds = CrossSeeds::random(rng);
            cross_phase2(curve, &q, plan.r, plan.s, plan.e, seeds, CrossEval::Streaming, &mut ledger)
        }
        Variant::OnePhase => unreachable!(),
    };
    TrialResult { outcome: classify_phase2(outcome), ledger }
}

/// m and r for trial T under the growing-parameter policy: m/T stays near
/// the tabulated optimum for the hinted factor size (135 at 20 digits),
/// and r makes the predicted phase-2/phase-1 work ratio about 0.5.
pub fn adaptive_policy(trial_index: u64, hint_digits: f64) -> (u64, u64) {
    assert!(trial_index >= 1);
    // ln(m/T) anchors from the optimal-parameter table rows 10/20/30
    let anchors = [(10.0, 40.0f64), (20.0, 135.0), (30.0, 348.0)];
    let d = hint_digits.clamp(4.0, 60.0);
    let ln_ratio = if d <= anchors[1].0 {
        let (d0, r0) = anchors[0];
        let (d1, r1) = anchors[1];
        r0.ln() + (d - d0) / (d1 - d0) * (r1.ln() - r0.ln())
    } else {
        let (d0, r0) = anchors[1];
        let (d1, r1) = anchors[2];
        r0.ln() + (d - d0) / (d1 - d0) * (r1.ln() - r0.ln())
    };
    let m = (ln_ratio.exp() * trial_index as f64).round().max(2.0) as u64;
    (m, walk_length_for(m))
}

/// r solving r^2/2 + cw r = (c1 m)/2, i.e. predicted w21 = 0.5.
pub fn walk_length_for(m: u64) -> u64 {
    let c1 = analysis::phase1_cost_coefficient();
    let cw = analysis::WALK_UNITS_PER_POINT;
    let r = -cw + (cw * cw + c1 * m as f64).sqrt();
    (r.round() as u64).max(2)
}

/// Deterministic Miller-Rabin with 32 rounds of seeded random bases.
pub fn is_probable_prime(n: &Natural) -> bool {
    if *n < BigUint::from(2u32) {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n - 1 > 0");
    let d = &n_minus_1 >> s;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d72_7072);
    let span = n - BigUint::from(3u32);
    'rounds: for _ in 0..32 {
        let a = rng.gen_biguint_below(&span) + BigUint::from(2u32);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x.modpow(&BigUint::from(2u32), n);
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

/// Which method the factorization driver applies to composite cofactors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyAlgorithm {
    Rho,
    Ecm { variant: Variant, curve_form: CurveForm },
    PMinus1,
}

impl PolicyAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyAlgorithm::Rho => "rho",
            PolicyAlgorithm::Ecm { variant, .. } => variant.as_str(),
            PolicyAlgorithm::PMinus1 => "pm1",
        }
    }
}

/// Full driver configuration. Explicit parameters pin the trial plan;
/// anything left None follows the adaptive policy.
#[derive(Clone, Debug)]
pub struct FactorPolicy {
    pub algorithm: PolicyAlgorithm,
    pub seed: u64,
    pub threads: usize,
    pub max_trials: u64,
    pub rho_max_iters: u64,
    pub hint_digits: Option<f64>,
    pub m: Option<u64>,
    pub mprime: Option<u64>,
    pub r: Option<u64>,
    pub beta: Option<f64>,
    pub s: Option<u64>,
    pub e: u32,
}

impl Default for FactorPolicy {
    fn default() -> FactorPolicy {
        FactorPolicy {
            algorithm: PolicyAlgorithm::Ecm {
                variant: Variant::TwoPhaseNaive,
                curve_form: CurveForm::Suyama,
            },
            seed: 0,
            threads: 1,
            max_trials: 10_000,
            rho_max_iters: 50_000_000,
            hint_digits: None,
            m: None,
            mprime: None,
            r: None,
            beta: None,
            s: None,
            e: 2,
        }
    }
}

impl FactorPolicy {
    /// The plan for a given trial index against a given composite.
    pub fn plan_for(&self, trial_index: u64, stage_seed: u64) -> TrialPlan {
        let (variant, curve_form) = match self.algorithm {
            PolicyAlgorithm::Ecm { variant, curve_form } => (variant, curve_form),
            // rho/p-1 do not use curve plans; the fields still set m/r
            _ => (Variant::TwoPhaseNaive, CurveForm::Weierstrass),
        };
        let hint = self.hint_digits.unwrap_or(20.0);
        let (adaptive_m, adaptive_r) = adaptive_policy(trial_index, hint);
        let m = self.m.unwrap_or(adaptive_m).max(2);
        let mprime = self.mprime.unwrap_or(m).max(m);
        let mut r = match (self.r, self.beta) {
            (Some(r), _) => r,
            (None, Some(beta)) => {
                ((m as f64).powf(beta) * std::f64::consts::LN_2).sqrt().round().max(2.0) as u64
            }
            (None, None) => {
                if self.m.is_some() {
                    walk_length_for(m)
                } else {
                    adaptive_r
                }
            }
        };
        if variant == Variant::TwoPhaseFast {
            r = snap_power_of_two(r);
        }
        r = r.max(2);
        let s = self.s.unwrap_or(r);
        // alpha = ln p / ln m needs the factor size; only a hint exists here
        let alpha = match self.hint_digits {
            Some(digits) => digits * std::f64::consts::LN_10 / (m as f64).ln().max(1.0),
            None => f64::NAN,
        };
        TrialPlan {
            alpha,
            beta: analysis::beta_from_r(m.max(2) as f64, r.max(2) as f64, true),
            m,
            mprime,
            r,
            s,
            e: self.e,
            variant,
            curve_form,
            seed: stage_seed,
        }
    }
}

fn snap_power_of_two(r: u64) -> u64 {
    let r = r.max(2);
    let below = 1u64 << (63 - r.leading_zeros());
    let above = below << 1;
    // nearest in log scale
    if (r as f64 / below as f64) < (above as f64 / r as f64) {
        below
    } else {
        above
    }
}

/// One factor in a finished factorization report.
#[derive(Clone, Debug)]
pub struct FactorRecord {
    pub value: Natural,
    pub multiplicity: u32,
    pub prime: bool,
    pub method: &'static str,
    pub phase: Option<u8>,
    pub trials: u64,
    pub work_units: u64,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub factors: Vec<FactorRecord>,
    /// false when a budget ran out and a composite remainder is flagged
    pub complete: bool,
    pub ledger: WorkLedger,
    /// plan of the last executed trial, echoed in reports
    pub last_plan: Option<TrialPlan>,
    pub total_trials: u64,
}

static SMALL_PRIMES: once_cell::sync::Lazy<Vec<u64>> =
    once_cell::sync::Lazy::new(|| primes_below(10_000));

struct SplitSuccess {
    divisor: Natural,
    phase: Option<u8>,
    trials: u64,
}

/// Complete factorization: strip primes below 10^4 by trial division, test
/// probable primality, split remaining composites with the policy
/// algorithm, recurse on the parts. On budget exhaustion the unfinished
/// composite is flagged and `complete` is false.
pub fn factorize(n: &Natural, policy: &FactorPolicy) -> Factorization {
    assert!(*n >= BigUint::one(), "factorize needs n >= 1");
    let mut factors: Vec<FactorRecord> = Vec::new();
    let mut ledger = WorkLedger::new();
    let mut last_plan = None;
    let mut total_trials = 0u64;
    let mut complete = true;

    let mut remaining = n.clone();
    for &p in SMALL_PRIMES.iter() {
        if remaining.is_one() {
            break;
        }
        let p = BigUint::from(p);
        if &p * &p > remaining {
            break;
        }
        let mut multiplicity = 0u32;
        while (&remaining % &p).is_zero() {
            remaining /= &p;
            multiplicity += 1;
        }
        if multiplicity > 0 {
            factors.push(FactorRecord {
                value: p,
                multiplicity,
                prime: true,
                method: "trial-division",
                phase: None,
                trials: 0,
                work_units: 0,
            });
        }
    }
    // remaining is now 1, a prime, or a composite with no factor < 10^4

    let mut stage = 0u64;
    let mut stack: Vec<Natural> = Vec::new();
    if !remaining.is_one() {
        stack.push(remaining);
    }
    while let Some(c) = stack.pop() {
        if is_probable_prime(&c) {
            push_prime(&mut factors, c, "primality", None, 0, 0);
            continue;
        }
        stage += 1;
        let stage_seed = policy.seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut stage_ledger = WorkLedger::new();
        let split = split_composite(&c, policy, stage_seed, &mut stage_ledger, &mut last_plan);
        total_trials += split.as_ref().map_or(policy.max_trials, |s| s.trials);
        let work = stage_ledger.unit_total();
        ledger.merge(&stage_ledger);
        match split {
            Some(success) => {
                let cofactor = &c / &success.divisor;
                debug_assert!((&c % &success.divisor).is_zero());
                if is_probable_prime(&success.divisor) {
                    push_prime(
                        &mut factors,
                        success.divisor,
                        policy.algorithm.as_str(),
                        success.phase,
                        success.trials,
                        work,
                    );
                } else {
                    stack.push(success.divisor);
                }
                if !cofactor.is_one() {
                    stack.push(cofactor);
                }
            }
            None => {
                complete = false;
                factors.push(FactorRecord {
                    value: c,
                    multiplicity: 1,
                    prime: false,
                    method: "unfactored",
                    phase: None,
                    trials: policy.max_trials,
                    work_units: work,
                });
            }
        }
    }

    factors.sort_by(|a, b| a.value.cmp(&b.value));
    merge_duplicates(&mut factors);
    debug_assert_eq!(
        factors.iter().fold(BigUint::one(), |acc, f| acc * f.value.pow(f.multiplicity)),
        *n
    );
    Factorization { factors, complete, ledger, last_plan, total_trials }
}

fn push_prime(
    factors: &mut Vec<FactorRecord>,
    value: Natural,
    method: &'static str,
    phase: Option<u8>,
    trials: u64,
    work_units: u64,
) {
    factors.push(FactorRecord {
        value,
        multiplicity: 1,
        prime: true,
        method,
        phase,
        trials,
        work_units,
    });
}

fn merge_duplicates(factors: &mut Vec<FactorRecord>) {
    let mut merged: Vec<FactorRecord> = Vec::with_capacity(factors.len());
    for f in factors.drain(..) {
        match merged.last_mut() {
            Some(last) if last.value == f.value => {
                last.multiplicity += f.multiplicity;
                last.trials += f.trials;
                last.work_units += f.work_units;
            }
            _ => merged.push(f),
        }
    }
    *factors = merged;
}

fn split_composite(
    c: &Natural,
    policy: &FactorPolicy,
    stage_seed: u64,
    ledger: &mut WorkLedger,
    last_plan: &mut Option<TrialPlan>,
) -> Option<SplitSuccess> {
    let modulus = Modulus::new(c.clone());
    match policy.algorithm {
        PolicyAlgorithm::Rho => {
            let result = rivals::pollard_rho(&modulus, stage_seed, policy.rho_max_iters, ledger);
            result.divisor.map(|divisor| SplitSuccess {
                divisor,
                phase: None,
                trials: 1 + u64::from(result.restarts),
            })
        }
        PolicyAlgorithm::Ecm { .. } => {
            let success = run_trials(&modulus, policy, stage_seed, last_plan, ledger);
            success.map(|(index, divisor, phase)| SplitSuccess {
                divisor,
                phase: Some(phase),
                trials: index,
            })
        }
        PolicyAlgorithm::PMinus1 => {
            let mut consecutive_trivial = 0u32;
            for index in 1..=policy.max_trials {
                let plan = policy.plan_for(index, stage_seed);
                *last_plan = Some(plan.clone());
                let schedule = build_schedule(plan.m, plan.mprime);
                let mut rng = ChaCha8Rng::seed_from_u64(stage_seed);
                rng.set_stream(index);
                let a = modulus.residue(rng.gen_biguint_below(c) + BigUint::from(2u32));
                let outcome = match rivals::pminus1_phase1(&a, &schedule, ledger) {
                    Err(event) => classify_event(event, c, 1),
                    Ok(q) => {
                        if q.is_one() {
                            TrialOutcome::TrivialN
                        } else {
                            classify_phase2(rivals::pminus1_birthday_phase2(
                                &q, plan.r, &mut rng, ledger,
                            ))
                        }
                    }
                };
                match outcome {
                    TrialOutcome::FactorFound { divisor, phase } => {
                        return Some(SplitSuccess { divisor, phase: Some(phase), trials: index })
                    }
                    TrialOutcome::TrivialN => {
                        consecutive_trivial += 1;
                        if consecutive_trivial > 5 {
                            return None;
                        }
                    }
                    TrialOutcome::NoFactor => consecutive_trivial = 0,
                }
            }
            None
        }
    }
}

/// Runs ECM trials until a factor appears, the budget runs out, or more
/// than five consecutive trials hit the trivial divisor. Worker threads
/// pull indices from a shared counter; results are deterministic for one
/// thread and valid (first-found) for many.
fn run_trials(
    n: &Modulus,
    policy: &FactorPolicy,
    stage_seed: u64,
    last_plan: &mut Option<TrialPlan>,
    ledger: &mut WorkLedger,
) -> Option<(u64, Natural, u8)> {
    let threads = policy.threads.max(1);
    if threads == 1 {
        let mut consecutive_trivial = 0u32;
        let mut cache: Option<((u64, u64), PrimePowerSchedule)> = None;
        for index in 1..=policy.max_trials {
            let plan = policy.plan_for(index, stage_seed);
            if cache.as_ref().map(|(key, _)| *key) != Some((plan.m, plan.mprime)) {
                cache = Some(((plan.m, plan.mprime), build_schedule(plan.m, plan.mprime)));
            }
            let schedule = &cache.as_ref().expect("cached").1;
            let result = run_trial(n, &plan, schedule, index);
            ledger.merge(&result.ledger);
            *last_plan = Some(plan);
            match result.outcome {
                TrialOutcome::FactorFound { divisor, phase } => {
                    return Some((index, divisor, phase))
                }
                TrialOutcome::TrivialN => {
                    consecutive_trivial += 1;
                    if consecutive_trivial > 5 {
                        return None;
                    }
                }
                TrialOutcome::NoFactor => consecutive_trivial = 0,
            }
        }
        return None;
    }

    let next_index = AtomicU64::new(1);
    let cancel = AtomicBool::new(false);
    let successes: Mutex<Vec<(u64, Natural, u8)>> = Mutex::new(Vec::new());
    let trivials = AtomicU64::new(0);
    let combined: Mutex<WorkLedger> = Mutex::new(WorkLedger::new());
    let plan_snapshot: Mutex<Option<TrialPlan>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let mut local = WorkLedger::new();
                let mut cache: Option<((u64, u64), PrimePowerSchedule)> = None;
                loop {
                    if cancel.load(Ordering::Relaxed) {
                        break;
                    }
                    let index = next_index.fetch_add(1, Ordering::Relaxed);
                    if index > policy.max_trials {
                        break;
                    }
                    let plan = policy.plan_for(index, stage_seed);
                    if cache.as_ref().map(|(key, _)| *key) != Some((plan.m, plan.mprime)) {
                        cache = Some(((plan.m, plan.mprime), build_schedule(plan.m, plan.mprime)));
                    }
                    let schedule = &cache.as_ref().expect("cached").1;
                    let result = run_trial(n, &plan, schedule, index);
                    local.merge(&result.ledger);
                    *plan_snapshot.lock().expect("plan lock") = Some(plan);
                    match result.outcome {
                        TrialOutcome::FactorFound { divisor, phase } => {
                            successes.lock().expect("success lock").push((index, divisor, phase));
                            cancel.store(true, Ordering::Relaxed);
                            break;
                        }
                        TrialOutcome::TrivialN => {
                            if trivials.fetch_add(1, Ordering::Relaxed) + 1 > 5 {
                                cancel.store(true, Ordering::Relaxed);
                                break;
                            }
                        }
                        TrialOutcome::NoFactor => {}
                    }
                }
                combined.lock().expect("ledger lock").merge(&local);
            });
        }
    });
    ledger.merge(&combined.lock().expect("ledger lock"));
    *last_plan = plan_snapshot.lock().expect("plan lock").clone();
    let mut successes = successes.into_inner().expect("success lock");
    successes.sort_by_key(|(index, _, _)| *index);
    successes.into_iter().next()
}

/// Convenience for tests and the bench harness: a random prime with the
/// requested number of bits drawn from the given rng.
pub fn random_prime<R: Rng>(bits: u64, rng: &mut R) -> Natural {
    loop {
        let candidate = rng.gen_biguint(bits) | BigUint::one() | (BigUint::one() << (bits - 1));
        if is_probable_prime(&candidate) {
            return candidate;
        }
    }
}

/// A random prime uniform in [lo, hi).
pub fn random_prime_in_range<R: Rng>(lo: u64, hi: u64, rng: &mut R) -> u64 {
    loop {
        let candidate = rng.gen_range(lo..hi) | 1;
        if is_probable_prime(&BigUint::from(candidate)) {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::group_order_bruteforce;
    use num_traits::ToPrimitive;

    fn u64_factors(f: &Factorization) -> Vec<(u64, u32)> {
        f.factors
            .iter()
            .map(|r| (r.value.to_u64().expect("small factor"), r.multiplicity))
            .collect()
    }

    #[test]
    fn probable_prime_known_values() {
        for p in [2u64, 3, 97, 607, 887, 10_007, 2_147_483_647] {
            assert!(is_probable_prime(&BigUint::from(p)), "{p} is prime");
        }
        for c in [1u64, 561, 1037, 8051, 1_000_000, 25_326_001] {
            assert!(!is_probable_prime(&BigUint::from(c)), "{c} is composite");
        }
    }

    #[test]
    fn phase1_with_empty_schedule_is_identity_map() {
        let n = Modulus::from_u64(1037);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (curve, point) = random_curve_through_point(&n, &mut rng);
        let schedule = build_schedule(2, 2);
        let mut ledger = WorkLedger::new();
        let q = phase1(&curve, &point, &schedule, &mut ledger).unwrap();
        assert_eq!(q, point);
        assert_eq!(ledger.unit_total(), 0);
    }

    /// N = 17 * 61; a curve congruent mod 17 to one of order dividing E
    /// must collapse in phase 1 and surface 17.
    #[test]
    fn phase1_constructed_factor() {
        let p = 17u64;
        let q = 61u64;
        let n = Modulus::from_u64(p * q);
        // find a curve of order 18 mod 17 through (x0, y0)
        let m17 = Modulus::from_u64(p);
        let mut found = None;
        'search: for a in 0..p {
            for b in 1..p {
                let c17 =
                    WeierstrassCurve::new(m17.clone(), m17.residue_u64(a), m17.residue_u64(b));
                if group_order_bruteforce(&c17) == Some(18) {
                    for x in 0..p {
                        for y in 1..p {
                            let pt = AffinePoint::finite(m17.residue_u64(x), m17.residue_u64(y));
                            if c17.contains(&pt) {
                                found = Some((a, b, x, y));
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let (a0, _b0, x0, y0) = found.expect("order-18 curve exists within Hasse range");
        // lift: congruent to the target mod 17, free mod 61
        let crt = |r1: u64, r2: u64| (0..).map(|k| r1 + p * k).find(|v| v % q == r2).unwrap();
        let x = crt(x0, 7);
        let y = crt(y0, 20);
        let a = crt(a0, 3);
        let mut scratch = WorkLedger::new();
        let xr = n.residue_u64(x);
        let yr = n.residue_u64(y);
        let ar = n.residue_u64(a);
        let br = yr
            .square(&mut scratch)
            .sub(&xr.square(&mut scratch).mul(&xr, &mut scratch))
            .sub(&ar.mul(&xr, &mut scratch));
        let curve = WeierstrassCurve::new(n.clone(), ar, br);
        let point = AffinePoint::finite(xr, yr);
        // m = m' = 19 covers 2^4 * 3^2, and 18 | E
        let schedule = build_schedule(19, 19);
        let mut ledger = WorkLedger::new();
        let event = phase1(&curve, &point, &schedule, &mut ledger).unwrap_err();
        assert_eq!(event.divisor, Natural::from(p));
    }

    #[test]
    fn run_trial_is_deterministic() {
        let n = Modulus::from_u64(1037);
        let plan = TrialPlan {
            alpha: f64::NAN,
            beta: f64::NAN,
            m: 20,
            mprime: 20,
            r: 16,
            s: 16,
            e: 2,
            variant: Variant::TwoPhaseNaive,
            curve_form: CurveForm::Weierstrass,
            seed: 99,
        };
        let schedule = build_schedule(plan.m, plan.mprime);
        let a = run_trial(&n, &plan, &schedule, 3);
        let b = run_trial(&n, &plan, &schedule, 3);
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn seeded_trials_factor_1037_for_every_form_and_variant() {
        let n = Modulus::from_u64(1037);
        for curve_form in [CurveForm::Weierstrass, CurveForm::Montgomery, CurveForm::Suyama] {
            for variant in [
                Variant::OnePhase,
                Variant::TwoPhaseNaive,
                Variant::TwoPhaseFast,
                Variant::TwoPhaseCross,
            ] {
                let plan = TrialPlan {
                    alpha: f64::NAN,
                    beta: f64::NAN,
                    m: 30,
                    mprime: 30,
                    r: 16,
                    s: 16,
                    e: 2,
                    variant,
                    curve_form,
                    seed: 7,
                };
                plan.validate().unwrap();
                let schedule = build_schedule(plan.m, plan.mprime);
                let mut found = 0;
                for index in 1..=500u64 {
                    if let TrialOutcome::FactorFound { divisor, .. } = run_trial(&n, &plan, &schedule, index).outcome {
                        let d = divisor.to_u64().unwrap();
                        assert!(d == 17 || d == 61, "{curve_form:?}/{variant:?}: {d}");
                        found += 1;
                    }
                }
                assert!(found > 0, "{curve_form:?}/{variant:?} never succeeded");
            }
        }
    }

    /// Phase-1 success over many random curves tracks rho(alpha) with
    /// alpha = ln p / ln m. Statistical: group orders are only
    /// approximately random integers near p (even orders are
    /// overrepresented), so the band is a factor of 3.
    #[test]
    fn phase1_success_rate_tracks_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_prime_in_range(100_000, 1_000_000, &mut rng);
        let q = random_prime_in_range(10_000_000, 100_000_000, &mut rng);
        let n = Modulus::new(Natural::from(p) * Natural::from(q));
        let m = 120u64;
        let alpha = (p as f64).ln() / (m as f64).ln();
        let expected = crate::analysis::rho(alpha);
        let schedule = build_schedule(m, m);
        let plan = TrialPlan {
            alpha,
            beta: f64::NAN,
            m,
            mprime: m,
            r: 2,
            s: 2,
            e: 2,
            variant: Variant::OnePhase,
            curve_form: CurveForm::Weierstrass,
            seed: 77,
        };
        let trials = 400u64;
        let mut successes = 0u32;
        for index in 1..=trials {
            if let TrialOutcome::FactorFound { divisor, .. } =
                run_trial(&n, &plan, &schedule, index).outcome
            {
                assert!((n.value() % &divisor).is_zero());
                successes += 1;
            }
        }
        let observed = f64::from(successes) / trials as f64;
        assert!(
            observed >= expected / 3.0 && observed <= expected * 3.0,
            "phase-1 success {observed:.4} vs rho({alpha:.2}) = {expected:.4}"
        );
    }

    #[test]
    fn factorize_prime_square_with_rho() {
        let policy = FactorPolicy {
            algorithm: PolicyAlgorithm::Rho,
            seed: 9,
            ..FactorPolicy::default()
        };
        let p = 1_000_003u64;
        let f = factorize(&(BigUint::from(p) * BigUint::from(p)), &policy);
        assert!(f.complete);
        assert_eq!(u64_factors(&f), vec![(p, 2)]);
    }

    #[test]
    fn factorize_examples() {
        let policy = FactorPolicy { seed: 5, ..FactorPolicy::default() };
        let f = factorize(&BigUint::from(8051u64), &policy);
        assert!(f.complete);
        assert_eq!(u64_factors(&f), vec![(83, 1), (97, 1)]);

        let f = factorize(&BigUint::from(1024u64), &policy);
        assert_eq!(u64_factors(&f), vec![(2, 10)]);

        let f = factorize(&BigUint::from(97u64), &policy);
        assert_eq!(u64_factors(&f), vec![(97, 1)]);
        assert_eq!(f.total_trials, 0);

        assert!(factorize(&BigUint::one(), &policy).factors.is_empty());
    }

    #[test]
    fn factorize_semiprime_beyond_trial_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_prime_in_range(1_000_000, 10_000_000, &mut rng);
        let q = random_prime_in_range(10_000_000, 100_000_000, &mut rng);
        let n = BigUint::from(p) * BigUint::from(q);
        let policy = FactorPolicy { seed: 31, ..FactorPolicy::default() };
        let f = factorize(&n, &policy);
        assert!(f.complete);
        assert_eq!(u64_factors(&f), vec![(p.min(q), 1), (p.max(q), 1)]);
        assert!(f.factors.iter().all(|r| r.prime));
        assert!(f.ledger.unit_total() > 0);
    }

    #[test]
    fn factorize_with_rho_and_pm1() {
        let rho = FactorPolicy {
            algorithm: PolicyAlgorithm::Rho,
            seed: 5,
            ..FactorPolicy::default()
        };
        let f = factorize(&BigUint::from(10_000_019u64 * 10_000_079u64), &rho);
        assert!(f.complete);
        assert_eq!(u64_factors(&f), vec![(10_000_019, 1), (10_000_079, 1)]);

        let pm1 = FactorPolicy {
            algorithm: PolicyAlgorithm::PMinus1,
            seed: 5,
            m: Some(50),
            r: Some(20),
            ..FactorPolicy::default()
        };
        // 607 * 887: p - 1 = 2 * 3 * 101 needs the birthday phase for 101
        let f = factorize(&(BigUint::from(607u64) * BigUint::from(887u64)), &pm1);
        assert!(f.complete);
        assert_eq!(u64_factors(&f), vec![(607, 1), (887, 1)]);
    }

    #[test]
    fn factorize_multithreaded_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_prime_in_range(100_000, 1_000_000, &mut rng);
        let q = random_prime_in_range(100_000, 1_000_000, &mut rng);
        let n = BigUint::from(p) * BigUint::from(q);
        let policy = FactorPolicy { seed: 3, threads: 4, ..FactorPolicy::default() };
        let f = factorize(&n, &policy);
        assert!(f.complete);
        let product =
            f.factors.iter().fold(BigUint::one(), |acc, r| acc * r.value.pow(r.multiplicity));
        assert_eq!(product, n);
    }

    #[test]
    fn adaptive_policy_examples() {
        let (m, _) = adaptive_policy(148, 20.0);
        assert!((m as f64 / 19_970.0 - 1.0).abs() <= 0.20, "m = {m}");
        let (m, _) = adaptive_policy(1, 20.0);
        assert!(m >= 2 && (m as f64 / 135.0 - 1.0).abs() <= 0.20, "m = {m}");
        // r keeps the predicted work ratio near 0.5
        for trial in [1u64, 10, 100, 1_000] {
            let (m, r) = adaptive_policy(trial, 20.0);
            let c1 = analysis::phase1_cost_coefficient();
            let w21 = ((r * r) as f64 / 2.0 + analysis::WALK_UNITS_PER_POINT * r as f64)
                / (c1 * m as f64);
            assert!((w21 - 0.5).abs() <= 0.1, "trial={trial} w21={w21}");
        }
    }

    #[test]
    fn snap_power_of_two_is_nearest() {
        assert_eq!(snap_power_of_two(2), 2);
        assert_eq!(snap_power_of_two(5), 4);
        assert_eq!(snap_power_of_two(6), 8);
        assert_eq!(snap_power_of_two(1024), 1024);
        assert_eq!(snap_power_of_two(700), 512);
        assert_eq!(snap_power_of_two(750), 1024);
    }

    #[test]
    fn plan_validation_rejects_bad_combinations() {
        let mut plan = TrialPlan {
            alpha: f64::NAN,
            beta: f64::NAN,
            m: 100,
            mprime: 100,
            r: 12,
            s: 12,
            e: 2,
            variant: Variant::TwoPhaseFast,
            curve_form: CurveForm::Suyama,
            seed: 0,
        };
        assert!(plan.validate().is_err()); // 12 is not a power of 2
        plan.r = 16;
        assert!(plan.validate().is_ok());
        plan.mprime = 50;
        assert!(plan.validate().is_err());
    }
}
