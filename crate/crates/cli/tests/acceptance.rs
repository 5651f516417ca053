//! CLI acceptance: seeded single-thread reruns are byte-identical for every
//! command, and the exit-code contract holds (0 complete, 2 usage, 3
//! partial).

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factorkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_12_determinism() {
    // factor, human and JSON
    let factor_args =
        ["factor", "1037", "--algorithm", "ecm2", "--seed", "7", "--threads", "1", "--json"];
    assert_eq!(stdout_of(&factor_args), stdout_of(&factor_args), "factor --json not reproducible");
    let human = ["factor", "1000036000099", "--seed", "3", "--threads", "1"];
    assert_eq!(stdout_of(&human), stdout_of(&human), "factor human output not reproducible");

    // plan
    let plan_args = ["plan", "--hint-digits", "20", "--algorithm", "ecm2"];
    assert_eq!(stdout_of(&plan_args), stdout_of(&plan_args), "plan not reproducible");

    // tables: files must be byte-identical across reruns
    let dir1 = std::env::temp_dir().join("factorkit-tables-1");
    let dir2 = std::env::temp_dir().join("factorkit-tables-2");
    for dir in [&dir1, &dir2] {
        std::fs::create_dir_all(dir).unwrap();
        stdout_of(&["tables", "--out-dir", dir.to_str().unwrap()]);
    }
    for name in ["table1.csv", "table2.csv"] {
        let a = std::fs::read(dir1.join(name)).unwrap();
        let b = std::fs::read(dir2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        assert!(!a.is_empty() && a.ends_with(b"\n"));
    }

    // bench with a fixed master seed
    let bench_args =
        ["bench", "--p-digits", "4", "--count", "3", "--seed", "11", "--algorithm", "ecm2"];
    assert_eq!(stdout_of(&bench_args), stdout_of(&bench_args), "bench not reproducible");

    println!("[criterion 12] PASS factor/plan/tables/bench reruns byte-identical");
}

#[test]
fn plan_prints_expected_rho_work() {
    // the half-slope benchmark: log10 W = 5.49 at 10 digits
    let out = stdout_of(&["plan", "--hint-digits", "10", "--algorithm", "rho"]);
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("log10W 5.490"), "unexpected plan output:\n{text}");
}

#[test]
fn plan_accepts_full_hint_range() {
    for digits in ["4", "60"] {
        let out = run(&["plan", "--hint-digits", digits, "--algorithm", "ecm2"]);
        assert!(out.status.success(), "hint {digits} failed");
    }
}

#[test]
fn factor_json_report_shape() {
    let out = stdout_of(&["factor", "8051", "--seed", "1", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&out).expect("well-formed JSON");
    assert_eq!(report["n"], "8051");
    assert_eq!(report["complete"], true);
    let factors = report["factors"].as_array().unwrap();
    let values: Vec<&str> = factors.iter().map(|f| f["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["83", "97"]);
    assert!(factors.iter().all(|f| f["prime"] == true));
}

#[test]
fn factor_report_reconstructs_n() {
    // product over value^multiplicity equals n
    for n in ["1024", "1000036000099", "720720"] {
        let out = stdout_of(&["factor", n, "--seed", "2", "--json"]);
        let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
        let mut product = 1u128;
        for f in report["factors"].as_array().unwrap() {
            let value: u128 = f["value"].as_str().unwrap().parse().unwrap();
            let multiplicity = f["multiplicity"].as_u64().unwrap() as u32;
            product *= value.pow(multiplicity);
        }
        assert_eq!(product.to_string(), n);
    }
}

#[test]
fn factor_prime_short_circuits() {
    let out = stdout_of(&["factor", "97", "--seed", "1", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(report["total_trials"], 0);
    let factors = report["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 1);
    assert_eq!(factors[0]["value"], "97");
}

#[test]
fn exit_codes() {
    // 2: unparsable N
    let out = run(&["factor", "12x34"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: out-of-range plan digits
    let out = run(&["plan", "--hint-digits", "99", "--algorithm", "ecm2"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: unknown algorithm (clap usage error)
    let out = run(&["factor", "91", "--algorithm", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    // 3: budget exhaustion still emits a partial report
    let out = run(&[
        "factor",
        "1000036000099",
        "--m",
        "2",
        "--r",
        "2",
        "--max-trials",
        "2",
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["complete"], false);
    let factors = report["factors"].as_array().unwrap();
    assert!(factors.iter().any(|f| f["prime"] == false && f["method"] == "unfactored"));
}

#[test]
fn threads_flag_produces_valid_factorization() {
    let out = stdout_of(&[
        "factor",
        "1000036000099",
        "--seed",
        "5",
        "--threads",
        "3",
        "--json",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(report["complete"], true);
    let factors = report["factors"].as_array().unwrap();
    let values: Vec<&str> = factors.iter().map(|f| f["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["1000003", "1000033"]);
}

#[test]
fn bench_ratio_stays_in_band() {
    // two-phase ECM at 6-digit scale: mean observed/predicted work within
    // [0.4, 1.6]
    let out = stdout_of(&[
        "bench",
        "--p-digits",
        "6",
        "--count",
        "50",
        "--seed",
        "2",
        "--algorithm",
        "ecm2",
    ]);
    let text = String::from_utf8(out).unwrap();
    let mean_line = text.lines().last().expect("mean row");
    assert!(mean_line.starts_with("mean,"), "missing mean row: {mean_line}");
    let ratio: f64 = mean_line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.4..=1.6).contains(&ratio), "bench ratio {ratio} outside [0.4, 1.6]");
}

#[test]
fn bench_empty_count_emits_header_only() {
    let out = stdout_of(&["bench", "--p-digits", "4", "--count", "0", "--seed", "1"]);
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "index,n,p,q,trials,observed_work,predicted_work,ratio\n"
    );
}
