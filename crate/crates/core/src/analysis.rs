//! The analytic layer: Dickman's rho, the two-largest-factors probability
//! mu(alpha, beta), the precise phase-2 success integral, expected-work
//! models for the four algorithms, and the parameter optimizer behind the
//! planning tables.
//!
//! Everything is deterministic: the rho table is built once on a uniform
//! mesh and shared read-only, and the optimizer is plain grid plus
//! golden-section refinement.

use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

use crate::bigmod::INVERSION_COST;

/// Work per unit of the phase-1 bound m: the average group operation costs
/// (11/3 + K) units and the binary powering contributes 3/(2 ln 2)
/// operations per unit of ln E ~ m.
pub fn phase1_cost_coefficient() -> f64 {
    (11.0 / 3.0 + INVERSION_COST as f64) * 3.0 / (2.0 * std::f64::consts::LN_2)
}

/// Work units per phase-2 walk point: 1.5 group operations in inversion-free
/// form (a doubling plus half an addition, 12 + 11/2 = 17.5 units) plus a
/// batched normalization to expose the x-coordinate. Calibrated at the top
/// of the 12..22 window to reproduce the published w21 column.
pub const WALK_UNITS_PER_POINT: f64 = 22.0;

/// log10 of the rho-method constant: W = 10^0.49 sqrt(p), calibrated from
/// the half-slope benchmark column (3.49 at log10 p = 6).
pub const RHO_METHOD_LOG10_COEFF: f64 = 0.49;

/// Default mesh: h = 1/256, panel-aligned with the unit delay of the
/// recurrence.
const DEFAULT_INV_H: usize = 256;
const DEFAULT_ALPHA_MAX: f64 = 16.0;

/// Dickman's rho tabulated on a uniform mesh by advancing the integral
/// recurrence rho(a) = (1/a) * integral of rho over [a-1, a], one composite
/// Simpson window per mesh point (the newest node appears on both sides and
/// is solved for).
#[derive(Clone, Debug)]
pub struct RhoTable {
    inv_h: usize,
    values: Vec<f64>,
}

impl RhoTable {
    pub fn build(alpha_max: f64, inv_h: usize) -> RhoTable {
        assert!(inv_h >= 16 && inv_h.is_multiple_of(2), "mesh must be even");
        assert!(alpha_max >= 2.0);
        let n = (alpha_max * inv_h as f64).ceil() as usize;
        let h = 1.0 / inv_h as f64;
        let mut values = vec![1.0; n + 1];
        for i in inv_h + 1..=n {
            // Simpson over [t_i - 1, t_i]: nodes i - inv_h ..= i
            let mut known = 0.0;
            for j in 0..inv_h {
                let w = if j == 0 {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                known += w * values[i - inv_h + j];
            }
            known *= h / 3.0;
            let t = i as f64 * h;
            values[i] = known / (t - h / 3.0);
        }
        RhoTable { inv_h, values }
    }

    pub fn alpha_max(&self) -> f64 {
        (self.values.len() - 1) as f64 / self.inv_h as f64
    }

    /// rho(alpha): 1 on [0, 1], cubic interpolation on the mesh above.
    pub fn rho(&self, alpha: f64) -> f64 {
        assert!(alpha >= 0.0, "rho needs alpha >= 0");
        if alpha <= 1.0 {
            return 1.0;
        }
        let pos = alpha * self.inv_h as f64;
        let n = self.values.len() - 1;
        assert!(
            pos <= n as f64 + 1e-9,
            "alpha = {alpha} beyond table maximum {}; extend the table",
            self.alpha_max()
        );
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        // 4-point Lagrange on [i-1, i, i+1, i+2], clamped at the ends
        let i0 = i.saturating_sub(1);
        let i3 = (i + 2).min(n);
        if i0 == i || i3 != i + 2 {
            return self.values[i] * (1.0 - frac) + self.values[i + 1] * frac;
        }
        let x = frac; // in [0, 1), nodes at -1, 0, 1, 2
        let (f0, f1, f2, f3) =
            (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        let c0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        let c1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        let c2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        let c3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        f0 * c0 + f1 * c1 + f2 * c2 + f3 * c3
    }

    /// mu(alpha, beta) = rho(alpha) + integral of rho(t)/(alpha - t) over
    /// [alpha - beta, alpha - 1], the probability that the second-largest
    /// prime factor is below m while the largest is below m^beta.
    pub fn mu(&self, alpha: f64, beta: f64) -> f64 {
        assert!(alpha >= 1.0 && beta >= 1.0);
        let lo = (alpha - beta).max(0.0);
        let hi = alpha - 1.0;
        if hi <= lo {
            return self.rho(alpha);
        }
        self.rho(alpha) + self.simpson(lo, hi, None, |t| self.rho(t) / (alpha - t))
    }

    /// The precise phase-2 success probability:
    /// rho(alpha) + integral over [0, alpha-1] of
    /// (1 - 2^(-p^((t + beta - alpha)/alpha))) rho(t)/(alpha - t) dt.
    /// The smooth factor replaces the step at t = alpha - beta that turns
    /// this into mu.
    pub fn phase2_success(&self, log10_p: f64, alpha: f64, beta: f64) -> f64 {
        assert!(alpha >= 1.0 && beta >= 0.0 && log10_p > 0.0);
        let hi = alpha - 1.0;
        if hi <= 0.0 {
            return self.rho(alpha);
        }
        let ln_p = log10_p * std::f64::consts::LN_10;
        // resolve the sigmoid transition, whose width in t is ~ alpha/ln p
        let step = (alpha / ln_p / 16.0).min(1.0 / self.inv_h as f64);
        let weight = |t: f64| {
            let inner = ln_p * (t + beta - alpha) / alpha;
            if inner > 700.0 {
                1.0
            } else {
                -(-std::f64::consts::LN_2 * inner.exp()).exp_m1()
            }
        };
        self.rho(alpha)
            + self.simpson(0.0, hi, Some(step), |t| weight(t) * self.rho(t) / (alpha - t))
    }

    fn simpson(&self, lo: f64, hi: f64, step: Option<f64>, f: impl Fn(f64) -> f64) -> f64 {
        let target = step.unwrap_or(1.0 / self.inv_h as f64);
        let mut panels = ((hi - lo) / target).ceil() as usize;
        panels += panels % 2;
        let panels = panels.max(2);
        let h = (hi - lo) / panels as f64;
        let mut acc = f(lo) + f(hi);
        for j in 1..panels {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + j as f64 * h);
        }
        acc * h / 3.0
    }
}

static SHARED: Lazy<RwLock<Arc<RhoTable>>> =
    Lazy::new(|| RwLock::new(Arc::new(RhoTable::build(DEFAULT_ALPHA_MAX, DEFAULT_INV_H))));

/// The shared default-mesh table, extended on demand when alpha exceeds the
/// current maximum.
pub fn shared_table(alpha: f64) -> Arc<RhoTable> {
    {
        let guard = SHARED.read().expect("rho table lock");
        if alpha <= guard.alpha_max() {
            return guard.clone();
        }
    }
    let mut guard = SHARED.write().expect("rho table lock");
    if alpha > guard.alpha_max() {
        *guard = Arc::new(RhoTable::build(alpha.ceil() + 2.0, DEFAULT_INV_H));
    }
    guard.clone()
}

/// Dickman rho on the shared table.
pub fn rho(alpha: f64) -> f64 {
    shared_table(alpha).rho(alpha)
}

/// mu(alpha, beta) on the shared table.
pub fn mu(alpha: f64, beta: f64) -> f64 {
    shared_table(alpha).mu(alpha, beta)
}

/// Precise phase-2 success probability on the shared table.
pub fn phase2_success(log10_p: f64, alpha: f64, beta: f64) -> f64 {
    shared_table(alpha).phase2_success(log10_p, alpha, beta)
}

/// beta implied by a walk length: r^2 = m^beta ln 2 folded (x-differences),
/// r^2 = 2 m^beta ln 2 unfolded.
pub fn beta_from_r(m: f64, r: f64, folded: bool) -> f64 {
    assert!(m >= 2.0 && r >= 2.0);
    let ln2 = std::f64::consts::LN_2;
    let target = if folded { ln2 } else { 2.0 * ln2 };
    (2.0 * r.ln() - target.ln()) / m.ln()
}

/// The four algorithms of the comparison tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Brent-Pollard rho, the order-sqrt(p) benchmark.
    Rho,
    /// One-phase elliptic curve method.
    OnePhase,
    /// Two-phase with the naive r^2/2 difference product.
    TwoPhase,
    /// Two-phase with product-tree evaluation, r a power of 2.
    TwoPhaseFast,
}

impl Algorithm {
    pub fn index(self) -> u8 {
        match self {
            Algorithm::Rho => 1,
            Algorithm::OnePhase => 2,
            Algorithm::TwoPhase => 3,
            Algorithm::TwoPhaseFast => 4,
        }
    }

    pub fn from_index(index: u8) -> Option<Algorithm> {
        match index {
            1 => Some(Algorithm::Rho),
            2 => Some(Algorithm::OnePhase),
            3 => Some(Algorithm::TwoPhase),
            4 => Some(Algorithm::TwoPhaseFast),
            _ => None,
        }
    }
}

/// Parameters the work model is evaluated at.
#[derive(Clone, Copy, Debug)]
pub enum AlgParams {
    Rho,
    OnePhase { alpha: f64 },
    TwoPhase { alpha: f64, beta: f64 },
    TwoPhaseFast { alpha: f64, log2_r: u32 },
}

/// A fully evaluated plan: parameters, per-trial cost, success probability
/// and expected work, all in multiplications mod N. Fields that do not
/// apply to an algorithm are NaN.
#[derive(Clone, Debug)]
pub struct PlanEstimate {
    pub algorithm: Algorithm,
    pub log10_p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub r: f64,
    pub success_probability: f64,
    pub trial_cost: f64,
    pub expected_trials: f64,
    pub work: f64,
    pub log10_work: f64,
    /// phase-2 work / phase-1 work
    pub w21: f64,
    /// speedup over the optimized one-phase method; filled by `optimize`
    pub speedup: f64,
}

/// Expected work at explicit parameters.
///
/// Rho: W = 10^0.49 sqrt(p). One-phase: W = c1 m / rho(alpha). Two-phase:
/// W = (c1 m + r^2/2 + cw r) / P with P the precise success integral and
/// r = sqrt(m^beta ln 2). Fast variant: 8 r^(1+eps) + cw r replaces r^2/2,
/// with r a power of 2 and beta implied by r.
pub fn work_model(log10_p: f64, params: AlgParams) -> PlanEstimate {
    let c1 = phase1_cost_coefficient();
    match params {
        AlgParams::Rho => {
            let log10_work = RHO_METHOD_LOG10_COEFF + log10_p / 2.0;
            PlanEstimate {
                algorithm: Algorithm::Rho,
                log10_p,
                alpha: f64::NAN,
                beta: f64::NAN,
                m: f64::NAN,
                r: f64::NAN,
                success_probability: f64::NAN,
                trial_cost: f64::NAN,
                expected_trials: f64::NAN,
                work: 10f64.powf(log10_work),
                log10_work,
                w21: f64::NAN,
                speedup: f64::NAN,
            }
        }
        AlgParams::OnePhase { alpha } => {
            let m = 10f64.powf(log10_p / alpha);
            let p_success = rho(alpha);
            let trial_cost = c1 * m;
            let work = trial_cost / p_success;
            PlanEstimate {
                algorithm: Algorithm::OnePhase,
                log10_p,
                alpha,
                beta: f64::NAN,
                m,
                r: f64::NAN,
                success_probability: p_success,
                trial_cost,
                expected_trials: 1.0 / p_success,
                work,
                log10_work: work.log10(),
                w21: f64::NAN,
                speedup: f64::NAN,
            }
        }
        AlgParams::TwoPhase { alpha, beta } => {
            let m = 10f64.powf(log10_p / alpha);
            let r = (m.powf(beta) * std::f64::consts::LN_2).sqrt();
            let phase2_cost = r * r / 2.0 + WALK_UNITS_PER_POINT * r;
            two_phase_estimate(Algorithm::TwoPhase, log10_p, alpha, beta, m, r, phase2_cost)
        }
        AlgParams::TwoPhaseFast { alpha, log2_r } => {
            let m = 10f64.powf(log10_p / alpha);
            let r = (1u64 << log2_r) as f64;
            let beta = beta_from_r(m, r, true);
            let phase2_cost = crate::polyeval::fast_cost_estimate(r, crate::polyeval::KARATSUBA_EPSILON)
                + WALK_UNITS_PER_POINT * r;
            two_phase_estimate(Algorithm::TwoPhaseFast, log10_p, alpha, beta, m, r, phase2_cost)
        }
    }
}

fn two_phase_estimate(
    algorithm: Algorithm,
    log10_p: f64,
    alpha: f64,
    beta: f64,
    m: f64,
    r: f64,
    phase2_cost: f64,
) -> PlanEstimate {
    let c1 = phase1_cost_coefficient();
    let phase1_cost = c1 * m;
    let p_success = phase2_success(log10_p, alpha, beta);
    let trial_cost = phase1_cost + phase2_cost;
    let work = trial_cost / p_success;
    PlanEstimate {
        algorithm,
        log10_p,
        alpha,
        beta,
        m,
        r,
        success_probability: p_success,
        trial_cost,
        expected_trials: 1.0 / p_success,
        work,
        log10_work: work.log10(),
        w21: phase2_cost / phase1_cost,
        speedup: f64::NAN,
    }
}

fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - (hi - lo) * INV_PHI;
    let mut x2 = lo + (hi - lo) * INV_PHI;
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * INV_PHI;
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * INV_PHI;
            f2 = f(x2);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// Minimizes the expected work over the free parameters: alpha alone for
/// the one-phase method, (alpha, beta) for the two-phase one, (alpha, r)
/// with r snapped to powers of 2 for the fast variant. Coarse grid plus
/// golden-section refinement; deterministic.
pub fn optimize(algorithm: Algorithm, log10_p: f64) -> PlanEstimate {
    assert!((4.0..=60.0).contains(&log10_p), "log10 p must lie in [4, 60]");
    match algorithm {
        Algorithm::Rho => work_model(log10_p, AlgParams::Rho),
        Algorithm::OnePhase => {
            let mut estimate = optimize_one_phase(log10_p);
            estimate.speedup = 1.0;
            estimate
        }
        Algorithm::TwoPhase => {
            let mut estimate = optimize_two_phase(log10_p);
            estimate.speedup = optimize_one_phase(log10_p).work / estimate.work;
            estimate
        }
        Algorithm::TwoPhaseFast => {
            let mut estimate = optimize_two_phase_fast(log10_p);
            estimate.speedup = optimize_one_phase(log10_p).work / estimate.work;
            estimate
        }
    }
}

fn optimize_one_phase(log10_p: f64) -> PlanEstimate {
    let objective =
        |alpha: f64| work_model(log10_p, AlgParams::OnePhase { alpha }).log10_work;
    let mut best = (1.5, objective(1.5));
    let mut alpha = 1.5;
    while alpha <= 11.5 {
        let value = objective(alpha);
        if value < best.1 {
            best = (alpha, value);
        }
        alpha += 0.05;
    }
    let (alpha, _) = golden_min((best.0 - 0.06).max(1.05), best.0 + 0.06, 1e-5, objective);
    work_model(log10_p, AlgParams::OnePhase { alpha })
}

fn optimize_two_phase(log10_p: f64) -> PlanEstimate {
    let best_beta = |alpha: f64| -> (f64, f64) {
        golden_min(1.0, 3.4, 1e-4, |beta| {
            work_model(log10_p, AlgParams::TwoPhase { alpha, beta }).log10_work
        })
    };
    // the two-phase optimum sits below the one-phase alpha
    let anchor = optimize_one_phase(log10_p).alpha;
    let lo = (anchor - 1.6).max(1.1);
    let hi = anchor + 0.4;
    let mut best = (lo, best_beta(lo).1);
    let mut alpha = lo;
    while alpha <= hi {
        let value = best_beta(alpha).1;
        if value < best.1 {
            best = (alpha, value);
        }
        alpha += 0.05;
    }
    let (alpha, _) = golden_min((best.0 - 0.06).max(1.05), best.0 + 0.06, 1e-4, |a| best_beta(a).1);
    let (beta, _) = best_beta(alpha);
    work_model(log10_p, AlgParams::TwoPhase { alpha, beta })
}

fn optimize_two_phase_fast(log10_p: f64) -> PlanEstimate {
    let best_k = |alpha: f64| -> (u32, f64) {
        let mut best = (2u32, f64::INFINITY);
        for k in 2..=26u32 {
            let value = work_model(log10_p, AlgParams::TwoPhaseFast { alpha, log2_r: k }).log10_work;
            if value < best.1 {
                best = (k, value);
            }
        }
        best
    };
    let anchor = optimize_one_phase(log10_p).alpha;
    let lo = (anchor - 1.6).max(1.1);
    let hi = anchor + 0.4;
    let mut best = (lo, best_k(lo));
    let mut alpha = lo;
    while alpha <= hi {
        let value = best_k(alpha);
        if value.1 < best.1 .1 {
            best = (alpha, value);
        }
        alpha += 0.05;
    }
    // refine alpha on a fine grid with k re-chosen pointwise (the envelope
    // has kinks where the best k switches, so golden section is not safe)
    let mut fine = best;
    let mut alpha = (best.0 - 0.05).max(1.05);
    while alpha <= best.0 + 0.05 {
        let value = best_k(alpha);
        if value.1 < fine.1 .1 {
            fine = (alpha, value);
        }
        alpha += 0.002;
    }
    work_model(log10_p, AlgParams::TwoPhaseFast { alpha: fine.0, log2_r: fine.1 .0 })
}

/// Row set of the expected-work comparison table.
pub const TABLE1_ROWS: [f64; 11] = [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 30.0, 40.0, 50.0];

/// Row set of the optimal-parameters table.
pub const TABLE2_ROWS: [f64; 3] = [10.0, 20.0, 30.0];

/// Regenerates the two planning tables as CSV text (UTF-8, LF endings):
/// expected log10 work per algorithm, and the optimal two-phase parameters.
pub fn emit_tables() -> (String, String) {
    let mut table1 = String::from("log10p,alg1,alg2,alg3,alg4\n");
    for &row in &TABLE1_ROWS {
        let w1 = optimize(Algorithm::Rho, row).log10_work;
        let w2 = optimize(Algorithm::OnePhase, row).log10_work;
        let w3 = optimize(Algorithm::TwoPhase, row).log10_work;
        let w4 = optimize(Algorithm::TwoPhaseFast, row).log10_work;
        table1.push_str(&format!("{row:.0},{w1:.2},{w2:.2},{w3:.2},{w4:.2}\n"));
    }
    let mut table2 = String::from("log10p,alpha,beta,m,r,T,w21,m_over_T,S\n");
    for &row in &TABLE2_ROWS {
        let est = optimize(Algorithm::TwoPhase, row);
        table2.push_str(&format!(
            "{row:.0},{:.2},{:.2},{:.0},{:.0},{:.1},{:.2},{:.0},{:.2}\n",
            est.alpha,
            est.beta,
            est.m,
            est.r,
            est.expected_trials,
            est.w21,
            est.m / est.expected_trials,
            est.speedup,
        ));
    }
    (table1, table2)
}
