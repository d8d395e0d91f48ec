//! Artifact serialization for pipeline runs.
//!
//! Every CSV uses shortest round-trip float formatting and carries no
//! timestamps, so reruns of the same config are byte-identical. Headers are
//! part of the interface and documented in the README.

use super::{FileRecord, PipelineError, SweepRow};
use crate::cell::{Branch, Corrector};
use crate::effective::EffectiveCurve;
use crate::environment::Decomposition;
use crate::parabolic::ParabolicRun;

use std::path::{Path, PathBuf};

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

/// `correctors.csv`: one row per sample of each persisted corrector profile.
/// Header: `lambda,branch,x,f,u,region`; `region` is `zero` inside zero
/// regions of the diffusion and `diffusive` elsewhere.
pub(super) fn write_correctors_csv(
    path: &Path,
    rows: &[(f64, Branch, Corrector)],
    _decomp: &Decomposition,
) -> Result<(), PipelineError> {
    let mut out = String::from("lambda,branch,x,f,u,region\n");
    for (lambda, branch, corr) in rows {
        let in_zero = |i: usize| corr.zero_marks.iter().any(|&(a, b)| i >= a && i < b);
        for i in 0..corr.xs.len() {
            let region = if in_zero(i) { "zero" } else { "diffusive" };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                lambda,
                branch_name(*branch),
                corr.xs[i],
                corr.f[i],
                corr.u[i],
                region
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `curve.csv`: the flat junction row followed by the wing samples in
/// ascending level. Header: `lambda,theta_minus,theta_plus`.
pub(super) fn write_curve_csv(path: &Path, curve: &EffectiveCurve) -> Result<(), PipelineError> {
    let mut out = String::from("lambda,theta_minus,theta_plus\n");
    out.push_str(&format!(
        "{},{},{}\n",
        curve.lambda0, curve.theta_minus0, curve.theta_plus0
    ));
    for s in &curve.samples {
        out.push_str(&format!("{},{},{}\n", s.lambda, s.theta_minus, s.theta_plus));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `hbar.csv`: the effective Hamiltonian on a uniform slope grid spanning
/// the sampled wing range. Header: `theta,hbar`.
pub(super) fn write_hbar_csv(
    path: &Path,
    curve: &EffectiveCurve,
    n: usize,
) -> Result<(), PipelineError> {
    let (lo, hi) = curve.theta_range();
    let mut out = String::from("theta,hbar\n");
    for i in 0..n {
        // Clamp away the last-ulp overshoot of the grid arithmetic.
        let theta = (lo + (hi - lo) * i as f64 / (n - 1) as f64).clamp(lo, hi);
        let h = curve.hbar(theta).map_err(|e| PipelineError::Stage {
            stage: "curve",
            why: format!("hbar grid point theta = {theta}: {e}"),
        })?;
        out.push_str(&format!("{theta},{h}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `traces.csv`: decimated reference-point traces of each parabolic run.
/// Header: `theta,t,u_ref,ratio` with `ratio = u_ref / t`.
pub(super) fn write_traces_csv(
    path: &Path,
    runs: &[(f64, ParabolicRun, f64)],
) -> Result<(), PipelineError> {
    let mut out = String::from("theta,t,u_ref,ratio\n");
    for (theta, run, _) in runs {
        for &(t, ratio) in &run.trace {
            out.push_str(&format!("{},{},{},{}\n", theta, t, ratio * t, ratio));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `comparison.txt`: per-slope comparison of the long-time parabolic
/// estimate against the corrector-built effective Hamiltonian.
pub(super) fn write_comparison(
    path: &Path,
    runs: &[(f64, ParabolicRun, f64)],
    rel_tol: f64,
    gap_tol: f64,
) -> Result<(), PipelineError> {
    let mut out = String::from("parabolic cross-check\n");
    out.push_str(&format!("rel_tol = {rel_tol}, gap_tol = {gap_tol}\n"));
    for (theta, run, hbar) in runs {
        let est = run.estimate();
        let rel = (est - hbar).abs() / hbar.abs().max(1.0);
        let spread = run.spread();
        let verdict = if rel <= rel_tol && spread <= gap_tol { "PASS" } else { "FAIL" };
        out.push_str(&format!("\ntheta = {theta}\n"));
        out.push_str(&format!("  hbar      = {hbar}\n"));
        out.push_str(&format!("  estimate  = {est}\n"));
        out.push_str(&format!("  bracket   = [{}, {}]\n", run.h_low, run.h_high));
        out.push_str(&format!("  rel_error = {rel}\n"));
        out.push_str(&format!("  spread    = {spread}\n"));
        out.push_str(&format!("  horizon   = {} (steps = {})\n", run.t, run.steps));
        out.push_str(&format!("  verdict   = {verdict}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `sweep.csv` (one row per seed) and `aggregate.csv` (min, max, spread per
/// tracked quantity) at the sweep root.
pub(super) fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), PipelineError> {
    let mut out = String::from("seed,lambda0,zero_floor,theta_minus0,theta_plus0\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed, r.lambda0, r.zero_floor, r.theta_minus0, r.theta_plus0
        ));
    }
    std::fs::write(path, out)?;

    let agg_path = path.with_file_name("aggregate.csv");
    let mut agg = String::from("quantity,min,max,spread\n");
    let cols: [(&str, fn(&SweepRow) -> f64); 4] = [
        ("lambda0", |r| r.lambda0),
        ("zero_floor", |r| r.zero_floor),
        ("theta_minus0", |r| r.theta_minus0),
        ("theta_plus0", |r| r.theta_plus0),
    ];
    for (name, get) in cols {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in rows {
            lo = lo.min(get(r));
            hi = hi.max(get(r));
        }
        agg.push_str(&format!("{},{},{},{}\n", name, lo, hi, hi - lo));
    }
    std::fs::write(agg_path, agg)?;
    Ok(())
}

/// Inventory of run outputs (every file except the manifest itself, which
/// cannot self-reference), sorted by path.
pub(super) fn inventory(dir: &Path) -> Result<Vec<FileRecord>, PipelineError> {
    let mut records = Vec::new();
    let mut visit = |sub: &Path, prefix: &str| -> Result<(), PipelineError> {
        if !sub.exists() {
            return Ok(());
        }
        for entry in std::fs::read_dir(sub)? {
            let entry = entry?;
            if !entry.file_type()?.is_file() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            if prefix.is_empty() && name == "manifest.json" {
                continue;
            }
            let bytes = std::fs::read(entry.path())?;
            records.push(FileRecord {
                path: format!("{prefix}{name}"),
                bytes: bytes.len() as u64,
                fnv1a: super::fnv1a_hex(&bytes),
            });
        }
        Ok(())
    };
    visit(dir, "")?;
    visit(&dir.join("plots"), "plots/")?;
    records.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(records)
}

// ── Plot-ready emission ─────────────────────────────────────────────────────

fn missing(name: &'static str) -> PipelineError {
    PipelineError::Stage {
        stage: "emit",
        why: format!("missing artifact {name}; run the pipeline stage that produces it first"),
    }
}

fn read_csv(path: &Path, name: &'static str) -> Result<Vec<Vec<String>>, PipelineError> {
    if !path.exists() {
        return Err(missing(name));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect())
}

/// Write the four plot-ready CSVs into `<dir>/plots` from a completed run:
///
/// - `plots/hbar.csv`   header `theta,hbar`
/// - `plots/wings.csv`  header `lambda,theta_minus,theta_plus`
/// - `plots/correctors.csv` header `lambda,branch,x,f`
/// - `plots/traces.csv` header `theta,t,ratio`
///
/// Errors name any missing upstream artifact.
pub fn emit_plots_data(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let mut written = Vec::new();

    let hbar = read_csv(&dir.join("hbar.csv"), "hbar.csv")?;
    let mut out = String::from("theta,hbar\n");
    for row in &hbar {
        out.push_str(&format!("{},{}\n", row[0], row[1]));
    }
    let p = plots.join("hbar.csv");
    std::fs::write(&p, out)?;
    written.push(p);

    let curve = read_csv(&dir.join("curve.csv"), "curve.csv")?;
    let mut out = String::from("lambda,theta_minus,theta_plus\n");
    for row in &curve {
        out.push_str(&format!("{},{},{}\n", row[0], row[1], row[2]));
    }
    let p = plots.join("wings.csv");
    std::fs::write(&p, out)?;
    written.push(p);

    let corr = read_csv(&dir.join("correctors.csv"), "correctors.csv")?;
    let mut out = String::from("lambda,branch,x,f\n");
    for row in &corr {
        out.push_str(&format!("{},{},{},{}\n", row[0], row[1], row[2], row[3]));
    }
    let p = plots.join("correctors.csv");
    std::fs::write(&p, out)?;
    written.push(p);

    let traces = read_csv(&dir.join("traces.csv"), "traces.csv")?;
    let mut out = String::from("theta,t,ratio\n");
    for row in &traces {
        out.push_str(&format!("{},{},{}\n", row[0], row[1], row[3]));
    }
    let p = plots.join("traces.csv");
    std::fs::write(&p, out)?;
    written.push(p);

    Ok(written)
}
