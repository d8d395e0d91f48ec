//! End-to-end tests of the `hjhomog` binary: exit codes, artifact layout,
//! plot emission, and flag/environment-variable plumbing.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hjhomog"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect()
}

#[test]
fn quickstart_verify_exits_zero_and_matches_the_cube() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("qs");
    let res = run(&[
        "verify",
        "--config",
        repo_config("quickstart.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&res.stdout),
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(out.join("manifest.json").exists());

    // The hbar table must match the closed form |theta|^3.
    let rows = read_csv(&out.join("hbar.csv"));
    assert_eq!(rows[0], vec!["theta", "hbar"]);
    assert!(rows.len() > 100);
    for row in &rows[1..] {
        let theta: f64 = row[0].parse().unwrap();
        let hbar: f64 = row[1].parse().unwrap();
        assert!(
            (hbar - theta.abs().powi(3)).abs() <= 1e-3,
            "hbar({theta}) = {hbar}"
        );
    }
}

#[test]
fn subquadratic_growth_exits_three_with_a_named_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad-gamma.toml");
    std::fs::write(
        &cfg,
        std::fs::read_to_string(repo_config("quickstart.toml"))
            .unwrap()
            .replace("gamma = 3.0", "gamma = 1.5"),
    )
    .unwrap();
    let res = run(&[
        "critical-value",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("cell pipeline requires gamma > 2"), "stderr: {err}");
}

#[test]
fn schema_violations_exit_two_with_the_field_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad-schema.toml");
    std::fs::write(
        &cfg,
        std::fs::read_to_string(repo_config("quickstart.toml"))
            .unwrap()
            .replace("hjhomog-run-v1", "hjhomog-run-v9"),
    )
    .unwrap();
    let res = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("schema"), "stderr: {err}");
}

#[test]
fn emit_after_a_run_writes_exactly_four_documented_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fd");
    let res = run(&[
        "verify",
        "--config",
        repo_config("flat-demo.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let res = run(&["emit", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let mut files: Vec<String> = std::fs::read_dir(out.join("plots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    assert_eq!(files, vec!["correctors.csv", "hbar.csv", "traces.csv", "wings.csv"]);

    let headers = [
        ("hbar.csv", "theta,hbar"),
        ("wings.csv", "lambda,theta_minus,theta_plus"),
        ("correctors.csv", "lambda,branch,x,f"),
        ("traces.csv", "theta,t,ratio"),
    ];
    for (name, header) in headers {
        let rows = read_csv(&out.join("plots").join(name));
        assert_eq!(rows[0].join(","), header, "{name}");
        assert!(rows.len() > 1, "{name} has data rows");
    }

    // The flat-part demo plateau: a positive-width interval of slopes at the
    // minimum level.
    let rows = read_csv(&out.join("plots").join("hbar.csv"));
    let vals: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let lam0 = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let flat: Vec<f64> =
        vals.iter().filter(|v| (v.1 - lam0).abs() < 1e-12).map(|v| v.0).collect();
    let width = flat.last().unwrap() - flat.first().unwrap();
    assert!(width > 1.5, "plateau width = {width}");

    // Emission is manifest-tracked: no orphan outputs.
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    for (name, _) in headers {
        assert!(manifest.contains(&format!("plots/{name}")), "manifest misses plots/{name}");
    }
}

#[test]
fn emit_without_artifacts_names_the_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run(&["emit", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("hbar.csv"), "stderr: {err}");
}

#[test]
fn corrector_csv_plus_branches_are_ordered_across_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(
        &cfg,
        r#"
schema = "hjhomog-run-v1"

[environment]
name = "small"

[environment.diffusion]
kind = "sin2"
period = 1.0

[environment.hamiltonian]
family = "power"
gamma = 3.0

[window]
lo = -0.5
hi = 1.5

[levels]
offsets = [0.5, 1.0]
"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let res = run(&[
        "corrector",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let rows = read_csv(&out.join("correctors.csv"));
    assert_eq!(rows[0], vec!["lambda", "branch", "x", "f", "u", "region"]);
    let mut levels: Vec<f64> = Vec::new();
    for r in &rows[1..] {
        let l: f64 = r[0].parse().unwrap();
        if !levels.iter().any(|&v| v == l) {
            levels.push(l);
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(levels.len(), 2);

    let profile = |lambda: f64, branch: &str| -> Vec<(f64, f64)> {
        rows[1..]
            .iter()
            .filter(|r| r[0].parse::<f64>().unwrap() == lambda && r[1] == branch)
            .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
            .collect()
    };
    let lo = profile(levels[0], "plus");
    let hi = profile(levels[1], "plus");
    assert_eq!(lo.len(), hi.len(), "common grid");
    for (a, b) in lo.iter().zip(hi.iter()) {
        assert!((a.0 - b.0).abs() < 1e-12, "grids line up");
        assert!(b.1 >= a.1 - 1e-9, "plus branches ordered at x = {}: {} < {}", a.0, b.1, a.1);
    }
}

#[test]
fn environment_variables_mirror_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cmd = bin();
    cmd.args(["validate"])
        .env("HJHOMOG_CONFIG", repo_config("quickstart.toml"))
        .env("HJHOMOG_OUT", &out)
        .env("HJHOMOG_SEED", "7");
    let res = cmd.output().unwrap();
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 7"), "{manifest}");
}
