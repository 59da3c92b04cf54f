use std::path::{Path, PathBuf};
use std::process::Command;

use orbimorse::cli::{execute, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> u8 {
    execute(std::iter::once("orbimorse").chain(args.iter().copied()))
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn without_timestamp(mut v: Value) -> Value {
    v["meta"]["header"]["timestamp"] = Value::Null;
    v
}

#[test]
fn verify_morse_on_p1_up_to_4096() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[catalog]\nid = \"wps\"\nweights = [1, 1]\n[run]\np_list = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["verify-morse", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let report = read_report(&out);
    let q1 = report["results"].as_array().unwrap().iter().find(|r| r["check"] == "verify_morse.strong.q1").unwrap();
    let points = q1["data"]["series"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 13);
    for pt in points {
        let p = pt["p"].as_f64().unwrap();
        assert_eq!(pt["rho"].as_f64().unwrap(), -1.0 / p);
        assert!(pt["tolerance"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn non_increasing_p_list_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[catalog]\nid = \"wps\"\nweights = [1, 1]\n[run]\np_list = [1, 4, 2]\n");
    assert_eq!(run(&["cohomology", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn configuration_and_catalog_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["no-such-subcommand"]), EXIT_CONFIG);
    assert_eq!(run(&["cohomology"]), EXIT_CONFIG);
    assert_eq!(run(&["cohomology", "--config", "/nonexistent/run.toml"]), EXIT_CONFIG);
    let cfg = write_config(dir.path(), "[catalog]\nid = \"wps\"\nweights = [2, 4]\n[run]\np_list = [1]\n");
    assert_eq!(run(&["cohomology", "--config", cfg.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    let cfg = data("data/p1_small.toml");
    assert_eq!(run(&["heat-trace", "--config", cfg.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    assert_eq!(run(&["cohomology", "--config", cfg.to_str().unwrap(), "--out", out, "--threads", "0"]), EXIT_CONFIG);
}

#[test]
fn kernel_asymptotics_on_c_mod_z2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[catalog]\nid = \"local-model\"\ncurvature = [1.0]\nk = 2\n[run]\np_list = [64, 128, 256, 512, 1024, 2048, 4096]\nu_list = [1.0]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["kernel-asymptotics", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let report = read_report(&out);
    let regular = report["results"].as_array().unwrap().iter().find(|r| r["check"] == "kernel.regular.u1.q0").unwrap();
    assert!(regular["data"]["fit"]["slope"].as_f64().unwrap() <= -0.4);
    let table = std::fs::read_to_string(out.join("kernel.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "u,p,q,log_error,log_bound");
    assert_eq!(table.lines().count(), 1 + 7 * 2);
}

#[test]
fn strict_turns_warnings_into_failures() {
    let dir = tempfile::tempdir().unwrap();
    // the default torus point is too close to a half-lattice point for this
    // distance, so the regular check is refused with a warning
    let cfg = write_config(
        dir.path(),
        "[catalog]\nid = \"torus\"\ndegrees = [1]\nk = 2\n[run]\np_list = [2, 4]\nu_list = [1.0]\n[kernel]\nmin_singular_distance = 0.4\n",
    );
    let out = dir.path().join("out");
    let args = ["kernel-asymptotics", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args), EXIT_OK);
    assert!(read_report(&out)["diagnostics"].as_array().unwrap().iter().any(|d| d["level"] == "warning"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict), EXIT_VIOLATION);
}

#[test]
fn violated_inequality_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // a tolerance scale this small cannot absorb the exact 1/p residual
    let cfg = write_config(
        dir.path(),
        "[catalog]\nid = \"wps\"\nweights = [1, 1]\n[run]\np_list = [1, 2]\n[tolerances]\ntol_morse_scale = 1e-6\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["verify-morse", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_VIOLATION);
}

#[test]
fn golden_cohomology_and_residual_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let p12 = data("data/p12_small.toml");
    assert_eq!(run(&["cohomology", "--config", p12.to_str().unwrap(), "--out", out]), EXIT_OK);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("cohomology.csv")).unwrap(),
        std::fs::read_to_string(data("golden/cohomology_p12.csv")).unwrap()
    );
    let p1 = data("data/p1_small.toml");
    assert_eq!(run(&["verify-morse", "--config", p1.to_str().unwrap(), "--out", out]), EXIT_OK);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap(),
        std::fs::read_to_string(data("golden/residuals_p1.csv")).unwrap()
    );
}

#[test]
fn csv_column_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let torus = data("data/torus_small.toml");
    assert_eq!(run(&["all", "--config", torus.to_str().unwrap(), "--out", out]), EXIT_OK);
    let header = |name: &str| {
        std::fs::read_to_string(dir.path().join(name)).unwrap().lines().next().unwrap().to_string()
    };
    assert_eq!(header("cohomology.csv"), "p,q,h");
    assert_eq!(header("curvature.csv"), "q,integral,cumulative");
    assert_eq!(header("spectrum.csv"), "p,q,lambda,multiplicity");
    assert_eq!(header("heat_trace.csv"), "p,u,q,trace,h,residual");
    assert_eq!(header("residuals.csv"), "q,p,residual,tolerance");
    assert_eq!(header("kernel.csv"), "u,p,q,log_error,log_bound");
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let torus = data("data/torus_small.toml");
    let cfg = torus.to_str().unwrap();
    assert_eq!(run(&["all", "--config", cfg, "--out", a.path().to_str().unwrap(), "--threads", "1"]), EXIT_OK);
    assert_eq!(run(&["all", "--config", cfg, "--out", b.path().to_str().unwrap(), "--threads", "4"]), EXIT_OK);
    let ra = std::fs::read_to_string(a.path().join("report.json")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("report.json")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ra), strip(&rb));
    assert_eq!(without_timestamp(read_report(a.path())), without_timestamp(read_report(b.path())));
    for name in ["cohomology.csv", "spectrum.csv", "heat_trace.csv", "residuals.csv", "kernel.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_changes_only_sampled_quantities() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = data("data/p12_small.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["moishezon-check", "--config", cfg, "--out", a.path().to_str().unwrap(), "--seed", "1"]), EXIT_OK);
    assert_eq!(run(&["moishezon-check", "--config", cfg, "--out", b.path().to_str().unwrap(), "--seed", "1"]), EXIT_OK);
    assert_eq!(without_timestamp(read_report(a.path())), without_timestamp(read_report(b.path())));
    assert_eq!(read_report(a.path())["meta"]["seed"], 1);
}

/// Validates reports against the shipped schema with Python's `jsonschema`
/// when it is available.
#[test]
fn reports_validate_against_the_schema() {
    let probe = Command::new("python3").args(["-c", "import jsonschema"]).status();
    if !matches!(probe, Ok(s) if s.success()) {
        eprintln!("python3 with jsonschema not available; schema validation skipped");
        return;
    }
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (sub, cfg) in [
        ("all", "data/torus_small.toml"),
        ("all", "data/p12_small.toml"),
        ("verify-morse", "data/p1_small.toml"),
    ] {
        let out = dir.path().join(format!("{sub}-{}", reports.len()));
        let cfg = data(cfg);
        assert_eq!(run(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
        reports.push(out.join("report.json"));
    }
    let script = "import json, sys, jsonschema\n\
                  schema = json.load(open(sys.argv[1]))\n\
                  jsonschema.Draft202012Validator.check_schema(schema)\n\
                  for path in sys.argv[2:]:\n    jsonschema.validate(json.load(open(path)), schema)\n";
    let status = Command::new("python3")
        .arg("-c")
        .arg(script)
        .arg(&schema)
        .args(&reports)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn binary_reports_single_line_errors() {
    let output = Command::new(env!("CARGO_BIN_EXE_orbimorse"))
        .args(["cohomology", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&output.stderr).trim_end().lines().count(), 1);
}
