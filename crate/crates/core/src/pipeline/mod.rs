//! End-to-end run orchestration.
//!
//! A run is described by a versioned plain-text config (TOML), executed as a
//! fixed sequence of stages (validate, critical value, correctors, effective
//! curve, parabolic cross-check), each persisting its artifact into the
//! output directory. Stages are checkpointed: a rerun with an unchanged
//! config resumes after the last completed stage unless asked to start
//! fresh. All numeric output is written with shortest round-trip float
//! formatting and no timestamps, so single-thread reruns reproduce every
//! CSV byte for byte; the manifest (which does carry wall-clock timestamps)
//! inventories every file the run produced.

mod artifacts;

pub use artifacts::emit_plots_data;

use crate::cell::{
    build_corrector, critical_value, Branch, CellConfig, CellError, Corrector, CriticalValue,
};
use crate::effective::{
    audit_curve, build_effective_curve, CurveConfig, CurveSample, EffectiveCurve, EffectiveError,
};
use crate::environment::{
    decompose_components, sample_environment, validate_environment, EnvSpec,
};
use crate::parabolic::{
    solve_parabolic, BoundaryMode, NumFlux, ParabolicConfig, ParabolicError, ParabolicRun,
};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_ID: &str = "hjhomog-run-v1";

// ── Errors ──────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub enum PipelineError {
    /// Schema violation, with the offending field named.
    Config { field: String, why: String },
    /// A stage failed, with the stage named.
    Stage { stage: &'static str, why: String },
    /// A configured acceptance gate failed, with the gate named.
    Gate { gate: &'static str, why: String },
    Io(std::io::Error),
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Config { field, why } => write!(f, "config field {field}: {why}"),
            PipelineError::Stage { stage, why } => write!(f, "stage {stage} failed: {why}"),
            PipelineError::Gate { gate, why } => write!(f, "gate {gate} failed: {why}"),
            PipelineError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e)
    }
}

fn stage_err(stage: &'static str) -> impl Fn(CellError) -> PipelineError {
    move |e| PipelineError::Stage { stage, why: e.to_string() }
}

// ── Config schema ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema identifier; must equal [`SCHEMA_ID`].
    pub schema: String,
    pub environment: EnvSpec,
    pub window: WindowCfg,
    #[serde(default)]
    pub cell: CellCfg,
    #[serde(default)]
    pub curve: CurveCfg,
    /// Offsets above `lambda0` at which corrector profiles are persisted.
    #[serde(default)]
    pub levels: LevelsCfg,
    #[serde(default)]
    pub parabolic: Option<ParabolicCfg>,
    #[serde(default)]
    pub gates: GatesCfg,
    #[serde(default)]
    pub sweep: Option<SweepCfg>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCfg {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellCfg {
    pub dx: f64,
    pub tol_lambda: f64,
    pub a_tol: f64,
    pub junction_tol: f64,
    pub c_gamma: f64,
}

impl Default for CellCfg {
    fn default() -> Self {
        let c = CellConfig::default();
        CellCfg {
            dx: c.dx,
            tol_lambda: c.lambda_tol,
            a_tol: c.a_tol,
            junction_tol: c.junction_tol,
            c_gamma: c.c_gamma,
        }
    }
}

impl CellCfg {
    pub fn to_cell_config(self) -> CellConfig {
        CellConfig {
            dx: self.dx,
            lambda_tol: self.tol_lambda,
            a_tol: self.a_tol,
            junction_tol: self.junction_tol,
            c_gamma: self.c_gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveCfg {
    pub theta_span: f64,
    pub dtheta_max: f64,
    pub max_passes: usize,
    pub fit_offset: f64,
}

impl Default for CurveCfg {
    fn default() -> Self {
        let c = CurveConfig::default();
        CurveCfg {
            theta_span: c.theta_span,
            dtheta_max: c.dtheta_max,
            max_passes: c.max_passes,
            fit_offset: c.fit_offset,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsCfg {
    /// Offsets above `lambda0`.
    pub offsets: Vec<f64>,
}

impl Default for LevelsCfg {
    fn default() -> Self {
        LevelsCfg { offsets: vec![0.5, 1.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParabolicCfg {
    pub thetas: Vec<f64>,
    pub t_final: f64,
    pub dx: f64,
    /// "local-lax-friedrichs" or "engquist-osher".
    pub flux: String,
    /// "quasi-periodic" or "far-field".
    pub boundary: String,
    pub periods: u32,
    pub halfwidth: f64,
    pub tail_fraction: f64,
    pub p_bound: Option<f64>,
    /// Relative tolerance on `|estimate - hbar| / max(1, |hbar|)`.
    pub rel_tol: f64,
    /// Tolerance on the tail bracket width (inconclusive above it).
    pub gap_tol: f64,
}

impl Default for ParabolicCfg {
    fn default() -> Self {
        ParabolicCfg {
            thetas: vec![0.5, 1.0],
            t_final: 30.0,
            dx: 0.01,
            flux: "local-lax-friedrichs".into(),
            boundary: "quasi-periodic".into(),
            periods: 1,
            halfwidth: 50.0,
            tail_fraction: 0.25,
            p_bound: None,
            rel_tol: 0.05,
            gap_tol: 0.02,
        }
    }
}

impl ParabolicCfg {
    fn to_parabolic_config(&self) -> Result<ParabolicConfig, PipelineError> {
        let flux = match self.flux.as_str() {
            "local-lax-friedrichs" => NumFlux::LocalLaxFriedrichs,
            "engquist-osher" => NumFlux::EngquistOsher,
            other => {
                return Err(PipelineError::Config {
                    field: "parabolic.flux".into(),
                    why: format!("unknown flux {other:?}"),
                })
            }
        };
        let boundary = match self.boundary.as_str() {
            "quasi-periodic" => BoundaryMode::QuasiPeriodic { periods: self.periods },
            "far-field" => BoundaryMode::FarFieldLinear { halfwidth: self.halfwidth },
            other => {
                return Err(PipelineError::Config {
                    field: "parabolic.boundary".into(),
                    why: format!("unknown boundary {other:?}"),
                })
            }
        };
        Ok(ParabolicConfig {
            dx: self.dx,
            t_final: self.t_final,
            cfl_safety: crate::tol::CFL_SAFETY,
            flux,
            boundary,
            p_bound: self.p_bound,
            tail_fraction: self.tail_fraction,
            max_record: 2000,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatesCfg {
    /// Validation report must contain no failing checks.
    pub validation: bool,
    /// `lambda0` must sit inside the a-priori bounds and above the zero-set
    /// floor (within `tol_lambda`).
    pub lambda0_bounds: bool,
    /// Curve audit must pass (monotone wings, quasiconvex, min at lambda0).
    pub curve_audit: bool,
    /// Every parabolic comparison must land within `rel_tol` with a tail
    /// bracket below `gap_tol`.
    pub parabolic: bool,
}

impl Default for GatesCfg {
    fn default() -> Self {
        GatesCfg { validation: true, lambda0_bounds: true, curve_audit: true, parabolic: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    pub seeds: Vec<u64>,
}

/// Parse and schema-check a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| PipelineError::Config {
        field: "(parse)".into(),
        why: e.to_string(),
    })?;
    if cfg.schema != SCHEMA_ID {
        return Err(PipelineError::Config {
            field: "schema".into(),
            why: format!("expected {SCHEMA_ID:?}, got {:?}", cfg.schema),
        });
    }
    if !(cfg.window.hi > cfg.window.lo) {
        return Err(PipelineError::Config {
            field: "window".into(),
            why: format!("requires lo < hi, got [{}, {}]", cfg.window.lo, cfg.window.hi),
        });
    }
    Ok(cfg)
}

// ── Run options and manifest ────────────────────────────────────────────────

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Discard checkpoints and previous artifacts.
    pub fresh: bool,
    /// Cap the worker pool; `Some(1)` is the bit-reproducible mode.
    pub threads: Option<usize>,
    /// Override `environment.seed`.
    pub seed: Option<u64>,
    /// Override the window with `[-L/2, L/2]`.
    pub window: Option<f64>,
    /// Override `cell.tol_lambda`.
    pub tol_lambda: Option<f64>,
    /// Stop after this stage (checkpoints keep later reruns incremental).
    pub stop_after: Option<StageKind>,
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Validate,
    Critical,
    Correctors,
    Curve,
    Parabolic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub fnv1a: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    /// FNV-1a hash of the effective (post-override) config.
    pub config_hash: String,
    pub crate_version: String,
    pub env_name: String,
    pub seed: u64,
    pub window: (f64, f64),
    pub tol_lambda: f64,
    pub threads: Option<usize>,
    /// Wall-clock seconds since the unix epoch at completion (informational;
    /// never feeds numeric outputs).
    pub unix_time: u64,
    pub outputs: Vec<FileRecord>,
    pub gates_passed: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StageState {
    config_hash: String,
    done: Vec<String>,
}

/// FNV-1a 64-bit content hash, hex-encoded.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

// ── Pipeline ────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

struct StageIo<'a> {
    dir: &'a Path,
    state: StageState,
}

impl<'a> StageIo<'a> {
    fn is_done(&self, stage: &str) -> bool {
        self.state.done.iter().any(|s| s == stage)
    }

    fn mark_done(&mut self, stage: &str) -> Result<(), PipelineError> {
        if !self.is_done(stage) {
            self.state.done.push(stage.to_string());
        }
        let text = serde_json::to_string_pretty(&self.state).expect("state serializes");
        std::fs::write(self.dir.join("state.json"), text)?;
        Ok(())
    }
}

/// Execute the full pipeline described by `config` into `out_dir`.
pub fn run_pipeline(
    config: &RunConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<PipelineOutcome, PipelineError> {
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| PipelineError::Stage { stage: "setup", why: e.to_string() })?;
            pool.install(|| run_pipeline_inner(config, out_dir, opts))
        }
        None => run_pipeline_inner(config, out_dir, opts),
    }
}

fn effective_config(config: &RunConfig, opts: &RunOptions) -> RunConfig {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.environment.seed = seed;
    }
    if let Some(l) = opts.window {
        cfg.window = WindowCfg { lo: -0.5 * l, hi: 0.5 * l };
    }
    if let Some(t) = opts.tol_lambda {
        cfg.cell.tol_lambda = t;
    }
    cfg
}

fn run_pipeline_inner(
    config: &RunConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<PipelineOutcome, PipelineError> {
    let cfg = effective_config(config, opts);
    let config_hash = fnv1a_hex(
        toml::to_string(&cfg)
            .map_err(|e| PipelineError::Config { field: "(serialize)".into(), why: e.to_string() })?
            .as_bytes(),
    );

    std::fs::create_dir_all(out_dir)?;
    if opts.fresh {
        clear_artifacts(out_dir)?;
    }
    let state = load_state(out_dir, &config_hash)?;
    let mut io = StageIo { dir: out_dir, state };
    let mut gates_passed: Vec<String> = Vec::new();

    let env = sample_environment(&cfg.environment)
        .map_err(|e| PipelineError::Stage { stage: "validate", why: e.to_string() })?;

    // The cell pipeline is only certified for superquadratic growth.
    let gamma = env.ham.constants.gamma;
    if gamma <= 2.0 {
        return Err(PipelineError::Stage {
            stage: "critical-value",
            why: format!("cell pipeline requires gamma > 2, got gamma = {gamma}"),
        });
    }

    let cell = cfg.cell.to_cell_config();
    let decomp = decompose_components(&env, cfg.window.lo, cfg.window.hi, cell.a_tol)
        .map_err(|e| PipelineError::Stage { stage: "validate", why: e.to_string() })?;

    // Stage: validate.
    if !io.is_done("validate") {
        let report = validate_environment(&env, cfg.window.lo, cfg.window.hi);
        std::fs::write(out_dir.join("validation.txt"), format!("{report}"))?;
        if cfg.gates.validation && !report.pass() {
            return Err(PipelineError::Gate {
                gate: "validation",
                why: "environment validation report has failing checks".into(),
            });
        }
        io.mark_done("validate")?;
    }
    if cfg.gates.validation {
        gates_passed.push("validation".into());
    }
    if opts.stop_after == Some(StageKind::Validate) {
        return finalize(out_dir, &cfg, opts, config_hash, gates_passed);
    }

    // Stage: critical value.
    let critical: CriticalValue = if io.is_done("critical") {
        read_json(out_dir.join("critical.json"))?
    } else {
        let cv = critical_value(&env, &decomp, &cell).map_err(stage_err("critical-value"))?;
        write_json(out_dir.join("critical.json"), &cv)?;
        io.mark_done("critical")?;
        cv
    };
    if cfg.gates.lambda0_bounds {
        let c = &env.ham.constants;
        let t = cell.lambda_tol.max(1e-4);
        let (lo_b, hi_b) = (-1.0 / c.alpha0 - t, c.alpha1 + t);
        if critical.lambda0 < lo_b
            || critical.lambda0 > hi_b
            || critical.lambda0 < critical.zero_floor - t
        {
            return Err(PipelineError::Gate {
                gate: "lambda0-bounds",
                why: format!(
                    "lambda0 = {} outside [{lo_b}, {hi_b}] or below floor {}",
                    critical.lambda0, critical.zero_floor
                ),
            });
        }
        gates_passed.push("lambda0-bounds".into());
    }
    if opts.stop_after == Some(StageKind::Critical) {
        return finalize(out_dir, &cfg, opts, config_hash, gates_passed);
    }

    // Stage: correctors at the configured offsets.
    if !io.is_done("correctors") {
        let mut rows: Vec<(f64, Branch, Corrector)> = Vec::new();
        for &off in &cfg.levels.offsets {
            let lambda = critical.lambda0 + off;
            for branch in [Branch::Minus, Branch::Plus] {
                let corr = build_corrector(&env, &decomp, lambda, branch, &cell)
                    .map_err(stage_err("correctors"))?;
                rows.push((lambda, branch, corr));
            }
        }
        artifacts::write_correctors_csv(&out_dir.join("correctors.csv"), &rows, &decomp)?;
        io.mark_done("correctors")?;
    }
    if opts.stop_after == Some(StageKind::Correctors) {
        return finalize(out_dir, &cfg, opts, config_hash, gates_passed);
    }

    // Stage: effective curve.
    let curve: EffectiveCurve = if io.is_done("curve") {
        let parts: CurveParts = read_json(out_dir.join("curve.json"))?;
        EffectiveCurve::from_parts(
            parts.critical,
            parts.theta_minus0,
            parts.theta_plus0,
            parts.samples,
        )
        .map_err(|e| PipelineError::Stage { stage: "curve", why: e.to_string() })?
    } else {
        let curve_cfg = CurveConfig {
            cell,
            theta_span: cfg.curve.theta_span,
            dtheta_max: cfg.curve.dtheta_max,
            max_passes: cfg.curve.max_passes,
            fit_offset: cfg.curve.fit_offset,
        };
        let curve = build_effective_curve(&env, &decomp, &curve_cfg).map_err(|e| match e {
            EffectiveError::Cell(c) => stage_err("curve")(c),
            other => PipelineError::Stage { stage: "curve", why: other.to_string() },
        })?;
        write_json(
            out_dir.join("curve.json"),
            &CurveParts {
                critical: curve.critical.clone(),
                theta_minus0: curve.theta_minus0,
                theta_plus0: curve.theta_plus0,
                samples: curve.samples.clone(),
            },
        )?;
        artifacts::write_curve_csv(&out_dir.join("curve.csv"), &curve)?;
        artifacts::write_hbar_csv(&out_dir.join("hbar.csv"), &curve, 401)?;
        io.mark_done("curve")?;
        curve
    };
    if cfg.gates.curve_audit {
        let audit = audit_curve(&curve);
        if !(audit.wings_monotone && audit.quasiconvex && audit.min_is_lambda0) {
            return Err(PipelineError::Gate {
                gate: "curve-audit",
                why: format!(
                    "wings_monotone = {}, quasiconvex = {}, min_is_lambda0 = {}",
                    audit.wings_monotone, audit.quasiconvex, audit.min_is_lambda0
                ),
            });
        }
        gates_passed.push("curve-audit".into());
    }
    if opts.stop_after == Some(StageKind::Curve) {
        return finalize(out_dir, &cfg, opts, config_hash, gates_passed);
    }

    // Stage: parabolic cross-check.
    if let Some(par) = &cfg.parabolic {
        if !io.is_done("parabolic") {
            let pcfg = par.to_parabolic_config()?;
            let mut runs: Vec<(f64, ParabolicRun, f64)> = Vec::new();
            for &theta in &par.thetas {
                let hbar = curve.hbar(theta).map_err(|e| PipelineError::Stage {
                    stage: "parabolic",
                    why: format!("theta = {theta}: {e}"),
                })?;
                let run = solve_parabolic(&env, theta, pcfg).map_err(|e: ParabolicError| {
                    PipelineError::Stage { stage: "parabolic", why: e.to_string() }
                })?;
                runs.push((theta, run, hbar));
            }
            artifacts::write_traces_csv(&out_dir.join("traces.csv"), &runs)?;
            artifacts::write_comparison(
                &out_dir.join("comparison.txt"),
                &runs,
                par.rel_tol,
                par.gap_tol,
            )?;
            if cfg.gates.parabolic {
                for (theta, run, hbar) in &runs {
                    let rel = (run.estimate() - hbar).abs() / hbar.abs().max(1.0);
                    if rel > par.rel_tol || run.spread() > par.gap_tol {
                        return Err(PipelineError::Gate {
                            gate: "parabolic",
                            why: format!(
                                "theta = {theta}: estimate {} vs hbar {hbar} (rel {rel:.4}), spread {:.4}",
                                run.estimate(),
                                run.spread()
                            ),
                        });
                    }
                }
            }
            io.mark_done("parabolic")?;
        }
        if cfg.gates.parabolic {
            gates_passed.push("parabolic".into());
        }
    }

    finalize(out_dir, &cfg, opts, config_hash, gates_passed)
}

/// Write the manifest, inventorying every file the run has produced so far.
fn finalize(
    out_dir: &Path,
    cfg: &RunConfig,
    opts: &RunOptions,
    config_hash: String,
    gates_passed: Vec<String>,
) -> Result<PipelineOutcome, PipelineError> {
    let outputs = artifacts::inventory(out_dir)?;
    let manifest = RunManifest {
        schema: SCHEMA_ID.into(),
        config_hash,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        env_name: cfg.environment.name.clone(),
        seed: cfg.environment.seed,
        window: (cfg.window.lo, cfg.window.hi),
        tol_lambda: cfg.cell.tol_lambda,
        threads: opts.threads,
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs,
        gates_passed,
    };
    write_json(out_dir.join("manifest.json"), &manifest)?;
    Ok(PipelineOutcome { out_dir: out_dir.to_path_buf(), manifest })
}

/// Re-inventory the output directory into an existing manifest (keeps the
/// original run metadata; used after plot emission adds files).
pub fn refresh_manifest_inventory(dir: &Path) -> Result<RunManifest, PipelineError> {
    let mut manifest: RunManifest = read_json(dir.join("manifest.json")).map_err(|_| {
        PipelineError::Stage {
            stage: "emit",
            why: "missing artifact manifest.json; run the pipeline first".into(),
        }
    })?;
    manifest.outputs = artifacts::inventory(dir)?;
    write_json(dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Serialize, Deserialize)]
struct CurveParts {
    critical: CriticalValue,
    theta_minus0: f64,
    theta_plus0: f64,
    samples: Vec<CurveSample>,
}

fn load_state(dir: &Path, config_hash: &str) -> Result<StageState, PipelineError> {
    let path = dir.join("state.json");
    if path.exists() {
        let st: StageState = read_json(path)?;
        if st.config_hash == config_hash {
            return Ok(st);
        }
        // Config changed: previous checkpoints are stale.
        clear_artifacts(dir)?;
    }
    Ok(StageState { config_hash: config_hash.to_string(), done: Vec::new() })
}

fn clear_artifacts(dir: &Path) -> Result<(), PipelineError> {
    for name in [
        "state.json",
        "manifest.json",
        "validation.txt",
        "critical.json",
        "correctors.csv",
        "curve.json",
        "curve.csv",
        "hbar.csv",
        "traces.csv",
        "comparison.txt",
    ] {
        let p = dir.join(name);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    let plots = dir.join("plots");
    if plots.exists() {
        std::fs::remove_dir_all(plots)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Stage { stage: "persist", why: e.to_string() })?;
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: PathBuf) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Stage {
        stage: "resume",
        why: format!("{}: {e}", path.display()),
    })
}

// ── Seed sweep ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub lambda0: f64,
    pub zero_floor: f64,
    pub theta_minus0: f64,
    pub theta_plus0: f64,
}

/// One pipeline run per seed into `out/seed-<s>/`, plus an aggregate spread
/// table at the sweep root.
pub fn run_sweep(
    config: &RunConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Vec<SweepRow>, PipelineError> {
    let seeds = config
        .sweep
        .as_ref()
        .map(|s| s.seeds.clone())
        .ok_or_else(|| PipelineError::Config {
            field: "sweep.seeds".into(),
            why: "sweep requested but no [sweep] table in config".into(),
        })?;
    if seeds.is_empty() {
        return Err(PipelineError::Config {
            field: "sweep.seeds".into(),
            why: "empty seed list".into(),
        });
    }
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let mut o = opts.clone();
        o.seed = Some(seed);
        let sub = out_dir.join(format!("seed-{seed}"));
        let outcome = run_pipeline(config, &sub, &o)?;
        let parts: CurveParts = read_json(outcome.out_dir.join("curve.json"))?;
        rows.push(SweepRow {
            seed,
            lambda0: parts.critical.lambda0,
            zero_floor: parts.critical.zero_floor,
            theta_minus0: parts.theta_minus0,
            theta_plus0: parts.theta_plus0,
        });
    }
    artifacts::write_sweep_csv(&out_dir.join("sweep.csv"), &rows)?;
    Ok(rows)
}
