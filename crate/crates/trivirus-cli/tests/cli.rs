// Binary-level checks: artifact layout, summary text, determinism,
// config validation, and bit-exact round trips of matrix literals.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trivirus_cli::config::{ParamsSpec, Scenario};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trivirus"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary launches");
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn run_err(cmd: &mut Command) -> String {
    let Output { status, stderr, .. } = cmd.output().expect("binary launches");
    assert!(!status.success(), "expected a non-zero exit");
    String::from_utf8(stderr).expect("utf-8 stderr")
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output directory exists")
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

const LINE_TAKEOVER: &str = r#"
seed = 0

[family]
kind = "line"
b1 = [[0.0, 0.0, 0.0, 1.5], [1.5, 0.0, 0.0, 0.0], [0.0, 1.5, 0.0, 0.0], [0.0, 0.0, 1.5, 0.0]]
m = [[0.0, 1.5, 0.0, 0.0], [0.0, 0.0, 1.5, 0.0], [0.0, 0.0, 0.0, 1.5], [1.5, 0.0, 0.0, 0.0]]
b3 = [[1.0, 0.0, 0.55, 0.0], [0.0, 1.0, 0.5, 0.0], [0.0, 0.5, 0.0, 1.0], [0.3, 0.0, 1.2, 0.0]]

[[plan]]
action = "check-conditions"

[[plan]]
action = "simulate"
seed = 1
horizon = 6000.0

[[expect]]
kind = "check"
name = "dfe-stability"
holds = false

[[expect]]
kind = "limit"
item = 1
target = "boundary-3"
"#;

#[test]
fn list_presets_names_all_nine_with_descriptions() {
    let stdout = run_ok(bin().arg("list-presets"));
    for i in 1..=9 {
        assert!(
            stdout.contains(&format!("example{i}")),
            "missing example{i}:\n{stdout}"
        );
    }
    let example8 = stdout.lines().find(|l| l.starts_with("example8")).unwrap();
    assert!(
        example8.contains("3-coexistence"),
        "example8 line: {example8}"
    );
}

#[test]
fn preset_writes_artifacts_and_a_passing_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ex1");
    let stdout = run_ok(
        bin()
            .args(["preset", "example1", "--seed", "0", "--out"])
            .arg(&out),
    );
    assert!(
        stdout.contains("result: 7 expectations, 0 failed"),
        "{stdout}"
    );

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(
        summary.contains("PASS boundary radii of virus 1"),
        "{summary}"
    );
    assert!(summary.contains("tolerance 5e-4"), "{summary}");
    assert!(!summary.contains("FAIL"), "{summary}");

    let csv = fs::read_to_string(out.join("traj_0.csv")).unwrap();
    assert!(
        csv.starts_with("t,x1_1,x1_2,x1_3,x1_4,x2_1"),
        "{}",
        &csv[..60.min(csv.len())]
    );
    for name in ["params.txt", "conditions.txt", "enumeration.txt"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn preset_outputs_are_deterministic_and_parallel_equivalent() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    run_ok(
        bin()
            .args(["preset", "example5", "--seed", "0", "--out"])
            .arg(&a),
    );
    run_ok(
        bin()
            .args(["preset", "example5", "--seed", "0", "--out"])
            .arg(&b),
    );
    run_ok(
        bin()
            .args(["preset", "example5", "--seed", "0", "--parallel", "--out"])
            .arg(&c),
    );
    assert_eq!(
        dir_bytes(&a),
        dir_bytes(&b),
        "repeat runs must agree byte for byte"
    );
    assert_eq!(
        dir_bytes(&a),
        dir_bytes(&c),
        "--parallel must not change the bytes"
    );
}

#[test]
fn scenario_runs_its_plan_and_reports_expectations() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("line_takeover.toml");
    fs::write(&config, LINE_TAKEOVER).unwrap();
    let out = tmp.path().join("run");
    let stdout = run_ok(bin().arg("run").arg(&config).arg("--out").arg(&out));
    assert!(
        stdout.contains("result: 2 expectations, 0 failed"),
        "{stdout}"
    );
    assert!(
        stdout.contains("PASS plan[1] reaches boundary-3"),
        "{stdout}"
    );
    for name in [
        "params.txt",
        "conditions_0.txt",
        "traj_1.csv",
        "summary.txt",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }

    // same config, same seed, fresh directory: identical bytes
    let again = tmp.path().join("again");
    run_ok(bin().arg("run").arg(&config).arg("--out").arg(&again));
    assert_eq!(dir_bytes(&out), dir_bytes(&again));
}

#[test]
fn empty_plan_succeeds_with_echoed_params() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("empty.toml");
    fs::write(
        &config,
        r#"
[params]
delta1 = [1.0, 1.0]
delta2 = [1.0, 1.0]
delta3 = [1.0, 1.0]
beta1 = [[0.0, 1.5], [1.5, 0.0]]
beta2 = [[0.0, 1.4], [1.4, 0.0]]
beta3 = [[0.0, 1.3], [1.3, 0.0]]
"#,
    )
    .unwrap();
    let out = tmp.path().join("empty");
    let stdout = run_ok(bin().arg("run").arg(&config).arg("--out").arg(&out));
    assert!(
        stdout.contains("result: 0 expectations, 0 failed"),
        "{stdout}"
    );
    let params = fs::read_to_string(out.join("params.txt")).unwrap();
    assert!(params.contains("nodes: 2"), "{params}");
    assert!(params.contains("[0, 1.5]"), "{params}");
}

#[test]
fn schema_violations_exit_nonzero_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        path
    };

    let ragged = write(
        "ragged.toml",
        r#"
[params]
delta1 = [1.0, 1.0]
delta2 = [1.0, 1.0]
delta3 = [1.0, 1.0]
beta1 = [[0.0, 1.5], [1.5, 0.0]]
beta2 = [[0.0, 1.5], [1.5]]
beta3 = [[0.0, 1.5], [1.5, 0.0]]
"#,
    );
    let stderr = run_err(bin().arg("run").arg(&ragged));
    assert!(stderr.contains("params.beta2"), "{stderr}");

    let unknown = write("unknown.toml", "bogus_key = 1\n");
    let stderr = run_err(bin().arg("run").arg(&unknown));
    assert!(stderr.contains("bogus_key"), "{stderr}");

    let nothing = write("nothing.toml", "seed = 3\n");
    let stderr = run_err(bin().arg("check").arg(&nothing));
    assert!(
        stderr.contains("[params]") && stderr.contains("[family]"),
        "{stderr}"
    );

    let bad_target = write(
        "bad_target.toml",
        r#"
[params]
delta1 = [1.0]
delta2 = [1.0]
delta3 = [1.0]
beta1 = [[1.5]]
beta2 = [[1.4]]
beta3 = [[1.3]]

[[plan]]
action = "simulate"

[[expect]]
kind = "limit"
item = 0
target = "boundary-9"
"#,
    );
    let stderr = run_err(bin().arg("run").arg(&bad_target));
    assert!(stderr.contains("expect[0].target"), "{stderr}");

    let bad_item = write(
        "bad_item.toml",
        r#"
[params]
delta1 = [1.0]
delta2 = [1.0]
delta3 = [1.0]
beta1 = [[1.5]]
beta2 = [[1.4]]
beta3 = [[1.3]]

[[plan]]
action = "enumerate"

[[expect]]
kind = "limit"
item = 0
target = "triple"
"#,
    );
    let stderr = run_err(bin().arg("run").arg(&bad_item));
    assert!(stderr.contains("expect[0].item"), "{stderr}");
}

#[test]
fn check_and_enumerate_print_their_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("line_takeover.toml");
    fs::write(&config, LINE_TAKEOVER).unwrap();

    let stdout = run_ok(bin().arg("check").arg(&config));
    assert!(stdout.contains("check: dfe-stability"), "{stdout}");
    assert!(stdout.contains("witness"), "{stdout}");

    let stdout = run_ok(bin().arg("enumerate").arg(&config));
    assert!(stdout.contains("starts used:"), "{stdout}");
    assert!(stdout.contains("continuum suspected: true"), "{stdout}");
}

#[test]
fn env_var_supplies_the_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        bin()
            .args(["preset", "example1", "--seed", "0"])
            .env("TRIVIRUS_OUT", tmp.path()),
    );
    assert!(tmp.path().join("example1").join("summary.txt").is_file());
}

#[test]
fn preset_matrices_round_trip_through_config_bit_exactly() {
    for preset in trivirus::presets::all_presets() {
        let spec = ParamsSpec::from_params(&preset.params);
        let text = toml::to_string(&spec).unwrap();
        let parsed: ParamsSpec = toml::from_str(&text).unwrap();
        let rebuilt = parsed.build().unwrap();
        for k in 0..3 {
            assert_eq!(
                preset.params.beta(k),
                rebuilt.beta(k),
                "beta{} of {} drifted through serialization",
                k + 1,
                preset.name
            );
            assert_eq!(preset.params.delta(k), rebuilt.delta(k));
        }
    }
}

#[test]
fn scenario_rejects_defining_both_params_and_family() {
    let text = format!(
        "{LINE_TAKEOVER}
[params]
delta1 = [1.0]
delta2 = [1.0]
delta3 = [1.0]
beta1 = [[1.5]]
beta2 = [[1.4]]
beta3 = [[1.3]]
"
    );
    let scenario: Scenario = toml::from_str(&text).unwrap();
    let err = scenario.validate().unwrap_err().to_string();
    assert!(err.contains("not both"), "{err}");
}
