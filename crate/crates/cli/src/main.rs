//! Command-line front end: factorization runs, parameter planning, table
//! regeneration and the observed-versus-expected benchmark harness.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 when a factorization ran
//! out of budget (a partial report is still emitted). All randomness flows
//! from --seed (default: OS entropy, echoed in the report); stdout is byte
//! reproducible for a fixed seed with one thread, so wall-clock timing goes
//! to stderr.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use factorkit::analysis::{self, Algorithm};
use factorkit::bigmod::parse_natural;
use factorkit::ecm::{
    factorize, CurveForm, FactorPolicy, Factorization, PolicyAlgorithm, TrialPlan, Variant,
};
use factorkit::Natural;

#[derive(Parser)]
#[command(name = "factorkit", version, about = "Elliptic-curve and classical integer factorization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor an integer (decimal, or hex with an 0x prefix)
    Factor(FactorArgs),
    /// Print optimal parameters and predicted work for a factor size
    Plan(PlanArgs),
    /// Regenerate the expected-work and optimal-parameter tables as CSV
    Tables(TablesArgs),
    /// Observed versus expected work over random semiprimes
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    #[value(alias = "1")]
    Rho,
    #[value(alias = "2")]
    Ecm1,
    #[value(alias = "3")]
    Ecm2,
    #[value(name = "ecm2-fast", alias = "4")]
    Ecm2Fast,
    #[value(name = "ecm2-cross")]
    Ecm2Cross,
    Pm1,
}

impl AlgorithmArg {
    fn as_str(self) -> &'static str {
        match self {
            AlgorithmArg::Rho => "rho",
            AlgorithmArg::Ecm1 => "ecm1",
            AlgorithmArg::Ecm2 => "ecm2",
            AlgorithmArg::Ecm2Fast => "ecm2-fast",
            AlgorithmArg::Ecm2Cross => "ecm2-cross",
            AlgorithmArg::Pm1 => "pm1",
        }
    }

    fn model(self) -> Option<Algorithm> {
        match self {
            AlgorithmArg::Rho => Some(Algorithm::Rho),
            AlgorithmArg::Ecm1 => Some(Algorithm::OnePhase),
            AlgorithmArg::Ecm2 | AlgorithmArg::Ecm2Cross => Some(Algorithm::TwoPhase),
            AlgorithmArg::Ecm2Fast => Some(Algorithm::TwoPhaseFast),
            AlgorithmArg::Pm1 => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFormArg {
    Weierstrass,
    Montgomery,
    Suyama,
}

impl From<CurveFormArg> for CurveForm {
    fn from(arg: CurveFormArg) -> CurveForm {
        match arg {
            CurveFormArg::Weierstrass => CurveForm::Weierstrass,
            CurveFormArg::Montgomery => CurveForm::Montgomery,
            CurveFormArg::Suyama => CurveForm::Suyama,
        }
    }
}

#[derive(Args)]
struct FactorArgs {
    /// The integer to factor
    n: String,
    #[arg(long, value_enum, default_value = "ecm2")]
    algorithm: AlgorithmArg,
    /// Phase-1 bound (default: adaptive, m/T near the tabulated optimum)
    #[arg(long)]
    m: Option<u64>,
    /// Prime-power bound (default: m)
    #[arg(long)]
    mprime: Option<u64>,
    /// Phase-2 walk length (default: predicted work ratio w21 = 0.5)
    #[arg(long)]
    r: Option<u64>,
    /// Derive r from m via r = sqrt(m^beta ln 2)
    #[arg(long)]
    beta: Option<f64>,
    /// Cross-product exponent
    #[arg(long, default_value_t = 2)]
    e: u32,
    /// Cross-product second walk length (default: r)
    #[arg(long)]
    s: Option<u64>,
    #[arg(long, value_enum, default_value = "suyama")]
    curve_form: CurveFormArg,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Master seed (default: OS entropy)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    max_trials: u64,
    /// Expected decimal digits of the smallest factor
    #[arg(long)]
    hint_digits: Option<f64>,
    /// Emit the run report as a single JSON object
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PlanArgs {
    /// Expected decimal digits of the factor, in [4, 60]
    #[arg(long)]
    hint_digits: f64,
    #[arg(long, value_enum, default_value = "ecm2")]
    algorithm: AlgorithmArg,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Decimal digits of the smaller prime factor (desk scale: <= 9)
    #[arg(long)]
    p_digits: u32,
    /// Number of random semiprimes
    #[arg(long)]
    count: u32,
    #[arg(long, value_enum, default_value = "ecm2")]
    algorithm: AlgorithmArg,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct PlanEcho {
    alpha: f64,
    beta: f64,
    m: u64,
    mprime: u64,
    r: u64,
    s: u64,
    e: u32,
    variant: &'static str,
    curve_form: &'static str,
}

impl PlanEcho {
    fn from_plan(plan: &TrialPlan) -> PlanEcho {
        PlanEcho {
            alpha: plan.alpha,
            beta: plan.beta,
            m: plan.m,
            mprime: plan.mprime,
            r: plan.r,
            s: plan.s,
            e: plan.e,
            variant: plan.variant.as_str(),
            curve_form: plan.curve_form.as_str(),
        }
    }
}

#[derive(Serialize)]
struct FactorJson {
    value: String,
    multiplicity: u32,
    prime: bool,
    method: &'static str,
    phase: Option<u8>,
    trials_used: u64,
    work_units: u64,
}

#[derive(Serialize)]
struct RunReport {
    n: String,
    seed: u64,
    algorithm: &'static str,
    threads: usize,
    complete: bool,
    factors: Vec<FactorJson>,
    total_work_units: u64,
    total_trials: u64,
    plan: Option<PlanEcho>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Factor(args) => cmd_factor(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Tables(args) => cmd_tables(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn policy_from_args(args: &FactorArgs, seed: u64) -> FactorPolicy {
    let algorithm = match args.algorithm {
        AlgorithmArg::Rho => PolicyAlgorithm::Rho,
        AlgorithmArg::Pm1 => PolicyAlgorithm::PMinus1,
        AlgorithmArg::Ecm1 => PolicyAlgorithm::Ecm {
            variant: Variant::OnePhase,
            curve_form: args.curve_form.into(),
        },
        AlgorithmArg::Ecm2 => PolicyAlgorithm::Ecm {
            variant: Variant::TwoPhaseNaive,
            curve_form: args.curve_form.into(),
        },
        AlgorithmArg::Ecm2Fast => PolicyAlgorithm::Ecm {
            variant: Variant::TwoPhaseFast,
            curve_form: args.curve_form.into(),
        },
        AlgorithmArg::Ecm2Cross => PolicyAlgorithm::Ecm {
            variant: Variant::TwoPhaseCross,
            curve_form: args.curve_form.into(),
        },
    };
    FactorPolicy {
        algorithm,
        seed,
        threads: args.threads.max(1),
        max_trials: args.max_trials,
        hint_digits: args.hint_digits,
        m: args.m,
        mprime: args.mprime,
        r: args.r,
        beta: args.beta,
        s: args.s,
        e: args.e,
        ..FactorPolicy::default()
    }
}

fn cmd_factor(args: FactorArgs) -> ExitCode {
    let n: Natural = match parse_natural(&args.n) {
        Ok(n) => n,
        Err(err) => return usage_error(&err.to_string()),
    };
    if n < Natural::from(2u32) {
        return usage_error("n must be at least 2");
    }
    if !(1..=6).contains(&args.e) {
        return usage_error("e must be in 1..=6");
    }
    let seed = args.seed.unwrap_or_else(|| rand::thread_rng().gen());
    let policy = policy_from_args(&args, seed);
    // validate explicit plan parameters up front
    if let Err(message) = policy.plan_for(1, seed).validate() {
        return usage_error(&message);
    }
    let started = Instant::now();
    let result = factorize(&n, &policy);
    let wall = started.elapsed().as_secs_f64();

    let report = RunReport {
        n: n.to_string(),
        seed,
        algorithm: args.algorithm.as_str(),
        threads: policy.threads,
        complete: result.complete,
        factors: result
            .factors
            .iter()
            .map(|f| FactorJson {
                value: f.value.to_string(),
                multiplicity: f.multiplicity,
                prime: f.prime,
                method: f.method,
                phase: f.phase,
                trials_used: f.trials,
                work_units: f.work_units,
            })
            .collect(),
        total_work_units: result.ledger.unit_total(),
        total_trials: result.total_trials,
        plan: result.last_plan.as_ref().map(PlanEcho::from_plan),
    };

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_human_report(&result, &report);
    }
    // wall time never goes to stdout: reruns must be byte-identical
    eprintln!("wall: {wall:.3} s");
    if result.complete {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn print_human_report(result: &Factorization, report: &RunReport) {
    let rendered: Vec<String> = result
        .factors
        .iter()
        .map(|f| {
            if f.multiplicity > 1 {
                format!("{}^{}", f.value, f.multiplicity)
            } else {
                f.value.to_string()
            }
        })
        .collect();
    println!("{} = {}", report.n, rendered.join(" * "));
    for f in &result.factors {
        let kind = if f.prime { "prime" } else { "composite (unfactored)" };
        let phase = f.phase.map(|p| format!(", phase {p}")).unwrap_or_default();
        println!(
            "  {}  {kind}  via {}{phase}  trials {}  work {}",
            f.value, f.method, f.trials, f.work_units
        );
    }
    println!("total work units: {}", report.total_work_units);
    println!("total trials: {}", report.total_trials);
    println!("seed: {}", report.seed);
    if let Some(plan) = &report.plan {
        println!(
            "plan: m={} m'={} r={} variant={} curve-form={}",
            plan.m, plan.mprime, plan.r, plan.variant, plan.curve_form
        );
    }
    if !report.complete {
        println!("budget exhausted: composite remainder flagged above");
    }
}

fn cmd_plan(args: PlanArgs) -> ExitCode {
    if !(4.0..=60.0).contains(&args.hint_digits) {
        return usage_error("hint-digits must lie in [4, 60]");
    }
    let Some(model) = args.algorithm.model() else {
        return usage_error("no work model for pm1; use rho, ecm1, ecm2 or ecm2-fast");
    };
    let estimate = analysis::optimize(model, args.hint_digits);
    println!(
        "algorithm {} ({}) for log10 p = {}",
        model.index(),
        args.algorithm.as_str(),
        args.hint_digits
    );
    println!("log10W {:.3}", estimate.log10_work);
    if estimate.alpha.is_finite() {
        println!("alpha  {:.3}", estimate.alpha);
        println!("m      {:.0}", estimate.m);
        println!("T      {:.1}", estimate.expected_trials);
    }
    if estimate.beta.is_finite() {
        println!("beta   {:.3}", estimate.beta);
        println!("r      {:.0}", estimate.r);
        println!("w21    {:.2}", estimate.w21);
    }
    if estimate.speedup.is_finite() {
        println!("S      {:.2}", estimate.speedup);
    }
    ExitCode::SUCCESS
}

fn cmd_tables(args: TablesArgs) -> ExitCode {
    let (table1, table2) = analysis::emit_tables();
    let path1 = args.out_dir.join("table1.csv");
    let path2 = args.out_dir.join("table2.csv");
    for (path, contents) in [(&path1, &table1), (&path2, &table2)] {
        if let Err(err) = std::fs::write(path, contents) {
            eprintln!("error: cannot write {}: {err}", path.display());
            return ExitCode::from(2);
        }
    }
    println!("wrote {}", path1.display());
    println!("wrote {}", path2.display());
    ExitCode::SUCCESS
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    if args.p_digits < 4 || args.p_digits > 9 {
        return usage_error("p-digits must lie in [4, 9] at desk scale");
    }
    let Some(model) = args.algorithm.model() else {
        return usage_error("no work model for pm1; use rho, ecm1, ecm2 or ecm2-fast");
    };
    let seed = args.seed.unwrap_or_else(|| rand::thread_rng().gen());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("index,n,p,q,trials,observed_work,predicted_work,ratio\n");
    let mut observed_sum = 0.0;
    let mut predicted_sum = 0.0;
    let lo = 10u64.pow(args.p_digits - 1) * 10; // 10^p_digits
    for index in 0..args.count {
        let p = factorkit::ecm::random_prime_in_range(lo, lo * 10, &mut rng);
        let q = factorkit::ecm::random_prime_in_range(lo * 10, lo * 100, &mut rng);
        let n = Natural::from(p) * Natural::from(q);
        let log10_p = (p as f64).log10();
        let estimate = analysis::optimize(model, log10_p);
        let policy = bench_policy(args.algorithm, &estimate, seed.wrapping_add(index as u64));
        let result = factorize(&n, &policy);
        if !result.complete {
            eprintln!("warning: sample {index} incomplete (n = {n})");
        }
        let observed = result.ledger.unit_total() as f64;
        observed_sum += observed;
        predicted_sum += estimate.work;
        out.push_str(&format!(
            "{index},{n},{p},{q},{},{observed:.0},{:.0},{:.3}\n",
            result.total_trials,
            estimate.work,
            observed / estimate.work,
        ));
    }
    if args.count > 0 {
        let mean_observed = observed_sum / f64::from(args.count);
        let mean_predicted = predicted_sum / f64::from(args.count);
        out.push_str(&format!(
            "mean,,,,,{mean_observed:.0},{mean_predicted:.0},{:.3}\n",
            mean_observed / mean_predicted
        ));
    }
    std::io::stdout().write_all(out.as_bytes()).expect("stdout");
    ExitCode::SUCCESS
}

/// The benchmark pins the optimizer's (m, r) and uses plain Weierstrass
/// curves with the naive product, i.e. exactly what the predicted-work
/// model describes.
fn bench_policy(
    algorithm: AlgorithmArg,
    estimate: &analysis::PlanEstimate,
    seed: u64,
) -> FactorPolicy {
    let base = FactorPolicy { seed, ..FactorPolicy::default() };
    match algorithm {
        AlgorithmArg::Rho => FactorPolicy { algorithm: PolicyAlgorithm::Rho, ..base },
        AlgorithmArg::Ecm1 => FactorPolicy {
            algorithm: PolicyAlgorithm::Ecm {
                variant: Variant::OnePhase,
                curve_form: CurveForm::Weierstrass,
            },
            m: Some(estimate.m.round().max(2.0) as u64),
            ..base
        },
        AlgorithmArg::Ecm2 | AlgorithmArg::Ecm2Cross => FactorPolicy {
            algorithm: PolicyAlgorithm::Ecm {
                variant: Variant::TwoPhaseNaive,
                curve_form: CurveForm::Weierstrass,
            },
            m: Some(estimate.m.round().max(2.0) as u64),
            r: Some(estimate.r.round().max(2.0) as u64),
            ..base
        },
        AlgorithmArg::Ecm2Fast => FactorPolicy {
            algorithm: PolicyAlgorithm::Ecm {
                variant: Variant::TwoPhaseFast,
                curve_form: CurveForm::Weierstrass,
            },
            m: Some(estimate.m.round().max(2.0) as u64),
            r: Some(estimate.r.round().max(2.0) as u64),
            ..base
        },
        AlgorithmArg::Pm1 => unreachable!("rejected above"),
    }
}
