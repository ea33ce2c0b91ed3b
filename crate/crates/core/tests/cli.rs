use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use cpcox::cli_io::{format_sig, run, Payload, RunReport, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use cpcox::simulation::{generate_dataset, SimConfig};
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args.iter().copied(), &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SIM_MAP: &str = "time = time\nstatus = status\nz = z\nu = z\nv = v\nx = x\nintercept = true\n";

/// A simulated sample as CSV with columns `time,status,z,v,x`.
fn simulated_csv(n: usize, gamma: f64, rep: u64) -> String {
    let cfg = SimConfig { n, gamma, ..SimConfig::default() };
    let ds = generate_dataset(&cfg, rep).unwrap().dataset;
    let mut text = String::from("time,status,z,v,x\n");
    for o in ds.observations() {
        writeln!(text, "{},{},{},{},{}", o.time, u8::from(o.status), o.z[0], o.v, o.x[1]).unwrap();
    }
    text
}

fn fit_payload(report: &RunReport) -> &cpcox::cli_io::FitPayload {
    match report.payload.as_ref().unwrap() {
        Payload::Fit(f) => f,
        other => panic!("{other:?}"),
    }
}

#[test]
fn three_row_file_is_read() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "time,status,z,v,x\n1.5,1,0,0.2,0.1\n2.5,0,1,-0.3,0.4\n0.5,1,1,1.0,-0.2\n");
    let map = write(&dir, "m.txt", SIM_MAP);
    let ds = cpcox::cli_io::load_csv(&data, &cpcox::cli_io::ColumnMapping::from_file(&map).unwrap()).unwrap();
    assert_eq!(ds.n(), 3);
    assert_eq!(ds.n_events(), 2);
    assert_eq!(ds.observations()[1].x, vec![1.0, 0.4]);
}

#[test]
fn bad_status_names_its_row() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("time,status,z,v,x\n");
    for i in 1..=9 {
        let status = if i == 7 { 2 } else { i % 2 };
        writeln!(text, "{i},{status},{},0.1,0.2", i % 2).unwrap();
    }
    let data = write(&dir, "d.csv", &text);
    let map = write(&dir, "m.txt", SIM_MAP);
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map)]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("row 7"), "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    assert_eq!(report.error.unwrap().code, "invalid_status");
}

#[test]
fn trial_shaped_file_gives_a_readable_rule() {
    let cfg = SimConfig { n: 400, ..SimConfig::default() };
    let sample = generate_dataset(&cfg, 1).unwrap();
    let mut text = String::from("treatment,age,homo,time,status\n");
    for o in sample.dataset.observations() {
        // age on a clinical scale, homo a 0/1 flag
        let age = 40.0 + 5.0 * o.v;
        let homo = u8::from(o.x[1] > 0.0);
        writeln!(text, "{},{age},{homo},{},{}", o.z[0], o.time, u8::from(o.status)).unwrap();
    }
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "trial.csv", &text);
    let map = write(
        &dir,
        "m.txt",
        "time = time\nstatus = status\nz = treatment\nu = treatment\nv = age\nx = homo\nintercept = true\nstandardize_v = true\n",
    );
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map), "--starts", "grid:3"]);
    assert!(o.code == EXIT_OK || o.code == 3, "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    let fit = fit_payload(&report);
    assert_eq!((fit.dims.p1, fit.dims.p2, fit.dims.q), (1, 1, 2));
    assert_eq!(fit.names.psi, vec!["(intercept)", "homo"]);
    assert!(fit.subgroup.rule.starts_with("std(age)"), "{}", fit.subgroup.rule);
    assert!(fit.subgroup.rule.contains("homo"), "{}", fit.subgroup.rule);
    assert_eq!(fit.subgroup.inside + fit.subgroup.outside, 400);
}

#[test]
fn missing_data_flag_is_a_usage_error() {
    let o = cli(&["fit", "--map", "m.txt"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("--data"), "{}", o.stderr);
    assert!(o.stderr.to_lowercase().contains("usage"), "{}", o.stderr);
    assert!(o.stdout.is_empty());

    let o = cli(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("simulate"));
}

#[test]
fn binary_exit_codes_follow_the_error_class() {
    let exe = env!("CARGO_BIN_EXE_cpcox");
    let out = Command::new(exe).args(["fit", "--map", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = Command::new(exe)
        .args(["fit", "--data", "/nonexistent/d.csv", "--map", "/nonexistent/m.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_DATA));
}

#[test]
fn reports_round_trip_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &simulated_csv(300, 1.0, 4));
    let map = write(&dir, "m.txt", SIM_MAP);
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map), "--starts", "grid:3"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    assert_eq!(report.to_json(), o.stdout);
    assert!(report.timing_seconds.is_none());
    assert_eq!(report.inputs.len(), 2);
    assert!(report.inputs.iter().all(|d| d.sha256.len() == 64));

    let out = dir.path().join("r.json");
    let o2 = cli(&["fit", "--data", s(&data), "--map", s(&map), "--starts", "grid:3", "--out", s(&out)]);
    assert_eq!(o2.code, EXIT_OK);
    assert!(o2.stdout.is_empty());
    let saved = RunReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(saved.payload, report.payload);
}

#[test]
fn text_output_agrees_with_json_to_twelve_digits() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &simulated_csv(300, 1.0, 5));
    let map = write(&dir, "m.txt", SIM_MAP);
    let base = ["fit", "--data", s(&data), "--map", s(&map), "--starts", "grid:3"];
    let json = cli(&base);
    let text = cli(&[&base[..], &["--format", "text"]].concat());
    assert_eq!(text.code, EXIT_OK);
    let report = RunReport::from_json(&json.stdout).unwrap();
    let fit = fit_payload(&report);
    let mut expected: Vec<f64> = fit.theta_hat.xi();
    expected.extend(&fit.theta_hat.psi);
    expected.extend(fit.se.as_ref().unwrap());
    expected.push(fit.loglik);
    for v in expected {
        let shown = format_sig(v, 12);
        assert!(text.stdout.contains(&shown), "{shown} missing from\n{}", text.stdout);
    }
    assert!(text.stdout.contains("subgroup rule: v + "), "{}", text.stdout);
}

#[test]
fn simulate_smoke_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.txt", "# tiny\nn = 50\ngamma = 1\nreps = 1\nseed = 3\nstarts = grid:2\n");
    let o = cli(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    let Some(Payload::Simulate(sim)) = report.payload else {
        panic!("not a simulate payload");
    };
    assert_eq!(sim.scenarios.len(), 1);
    assert_eq!(sim.scenarios[0].records.len(), 1);
    assert_eq!(sim.scenarios[0].config.n, 50);

    let o = cli(&["simulate", "--config", s(&cfg), "--format", "text"]);
    assert!(o.stdout.contains("cover gamma"), "{}", o.stdout);
}

#[test]
fn thread_count_does_not_change_the_study() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.txt", "n = 100, 150\ngamma = 1\nreps = 6\nseed = 9\nstarts = grid:3\n");
    let payload = |threads: &str| {
        let o = cli(&["simulate", "--config", s(&cfg), "--threads", threads]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        let report = RunReport::from_json(&o.stdout).unwrap();
        serde_json::to_string(&report.payload).unwrap()
    };
    assert_eq!(payload("1"), payload("8"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.txt", "n = 50\nreplicates = 3\n");
    let o = cli(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("replicates"), "{}", o.stderr);
    let map = write(&dir, "m.txt", "time = t\nstatus = d\nz = a\ncovariate = b\n");
    let data = write(&dir, "d.csv", "t,d,a\n1,1,0\n");
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map)]);
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn null_subgroup_effect_is_flagged() {
    let dir = TempDir::new().unwrap();
    // searching over ψ pushes |γ̂| away from zero, so under γ = 0 the rule
    // fires on only part of the samples; this one sits at |γ̂| ≈ 1.9 SE
    let data = write(&dir, "d.csv", &simulated_csv(400, 0.0, 0));
    let map = write(&dir, "m.txt", SIM_MAP);
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("2 standard errors")), "{:?}", report.warnings);
}

#[test]
fn intervals_cover_the_truth_on_a_large_sample() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &simulated_csv(1000, 1.0, 0));
    let map = write(&dir, "m.txt", SIM_MAP);
    let o = cli(&["fit", "--data", s(&data), "--map", s(&map)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let report = RunReport::from_json(&o.stdout).unwrap();
    let fit = fit_payload(&report);
    assert!(fit.converged);
    let ci = fit.ci.as_ref().unwrap();
    for (k, truth) in [0.8, 1.0].into_iter().enumerate() {
        assert!(ci.lower[k] < truth && truth < ci.upper[k], "{k}: [{}, {}]", ci.lower[k], ci.upper[k]);
    }
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
}
