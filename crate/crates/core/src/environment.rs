//! Environments: a degenerate diffusion coefficient paired with a Hamiltonian.
//!
//! An environment is a pair `(a, H)` on the line with `0 <= a <= 1`,
//! `sqrt(a)` kappa-Lipschitz, and `H` satisfying the declared growth and
//! regularity constants of its family. The zero set `{a = 0}` is where the
//! equation degenerates to the algebraic relation `H(x, u') = lambda`; the
//! open components of `{a > 0}` carry the branch ODE of the corrector
//! construction. This module builds environments from declarative specs
//! (TOML-friendly), validates the structural assumptions by dense sampling,
//! applies exact shifts, and decomposes a window into zero regions and the
//! components between them.

use crate::hamlib::{
    qc_violation, sqc_margin, Field, HamiltonianField, HamlibError, StructuralForm,
};
use crate::rng::poisson_points;
use crate::tol;
use serde::{Deserialize, Serialize};
use std::fmt;

// ── Errors ──────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub enum EnvError {
    /// The diffusion coefficient never touches zero inside the window.
    NoZeroInWindow { lo: f64, hi: f64, min_a: f64 },
    /// A spec parameter is outside the supported range.
    BadSpec { what: String },
    /// Hamiltonian family construction failed.
    Ham(HamlibError),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::NoZeroInWindow { lo, hi, min_a } => write!(
                f,
                "diffusion coefficient has no zero in [{lo}, {hi}] (min a = {min_a}); the corrector construction needs a nonempty zero set"
            ),
            EnvError::BadSpec { what } => write!(f, "bad environment spec: {what}"),
            EnvError::Ham(e) => write!(f, "hamiltonian construction: {e}"),
        }
    }
}

impl std::error::Error for EnvError {}

impl From<HamlibError> for EnvError {
    fn from(e: HamlibError) -> Self {
        EnvError::Ham(e)
    }
}

// ── Diffusion coefficient ───────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum DiffusionKind {
    /// `a(x) = sin(pi x / period)^2`; zeros at the lattice `period * Z`.
    Sin2 { period: f64 },
    /// `sqrt(a) = min(1, slope * dist(x, period * Z))`; piecewise linear.
    Vee { period: f64, slope: f64 },
    /// `sqrt(a) = min(1, slope * max(0, dist_to_points - plateau))` for a
    /// seeded Poisson point cloud: `a` vanishes on a plateau around each
    /// point and saturates at 1 away from all points.
    PoissonPlateau { intensity: f64, plateau: f64, slope: f64, seed: u64, stream: u64 },
    /// Constant coefficient (no zero set; rejected by the cell pipeline).
    Const { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiffusionField {
    pub kind: DiffusionKind,
    /// Translation applied to the x argument (exact shift composition).
    pub offset: f64,
}

impl DiffusionField {
    pub fn sqrt_a(&self, x: f64) -> f64 {
        let xx = x + self.offset;
        match &self.kind {
            DiffusionKind::Sin2 { period } => (std::f64::consts::PI * xx / period).sin().abs(),
            DiffusionKind::Vee { period, slope } => {
                let r = xx / period;
                let d = (r - r.round()).abs() * period;
                (slope * d).min(1.0)
            }
            DiffusionKind::PoissonPlateau { intensity, plateau, slope, seed, stream } => {
                // Points farther than plateau + 1/slope cannot lower the value
                // below the cap, so the cell search radius is bounded.
                let reach = plateau + 1.0 / slope + 1.0;
                let lo = (xx - reach).floor() as i64;
                let hi = (xx + reach).floor() as i64;
                let mut dist = f64::INFINITY;
                for cell in lo..=hi {
                    for y in poisson_points(*seed, *stream, cell, *intensity) {
                        dist = dist.min((xx - y).abs());
                    }
                }
                if dist.is_infinite() {
                    1.0
                } else {
                    (slope * (dist - plateau).max(0.0)).min(1.0)
                }
            }
            DiffusionKind::Const { value } => value.sqrt(),
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        let s = self.sqrt_a(x);
        s * s
    }

    /// Lipschitz constant of `sqrt(a)`.
    pub fn kappa(&self) -> f64 {
        match &self.kind {
            DiffusionKind::Sin2 { period } => std::f64::consts::PI / period,
            DiffusionKind::Vee { slope, .. } => *slope,
            DiffusionKind::PoissonPlateau { slope, .. } => *slope,
            DiffusionKind::Const { .. } => 0.0,
        }
    }

    pub fn shift_by(&mut self, y: f64) {
        self.offset += y;
    }

    /// Period when the coefficient is periodic.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            DiffusionKind::Sin2 { period } | DiffusionKind::Vee { period, .. } => Some(*period),
            _ => None,
        }
    }
}

// ── Environment ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Environment {
    pub diffusion: DiffusionField,
    pub ham: HamiltonianField,
    pub seed: u64,
    pub name: String,
}

impl Environment {
    pub fn a(&self, x: f64) -> f64 {
        self.diffusion.a(x)
    }

    pub fn sqrt_a(&self, x: f64) -> f64 {
        self.diffusion.sqrt_a(x)
    }

    pub fn h(&self, x: f64, p: f64) -> f64 {
        self.ham.eval(x, p)
    }

    /// Lipschitz constant of `sqrt(a)`, floored away from zero so the
    /// regularity bounds stay finite for constant coefficients.
    pub fn kappa(&self) -> f64 {
        self.diffusion.kappa().max(1e-9)
    }

    /// Exact translation: `shifted.a(x) == self.a(x + y)` and likewise for H.
    pub fn shift(&mut self, y: f64) {
        self.diffusion.shift_by(y);
        self.ham.shift_by(y);
    }

    /// Common period of `a` and `H`, when the environment is periodic.
    pub fn period(&self) -> Option<f64> {
        let pa = self.diffusion.period()?;
        match self.ham.period() {
            None => Some(pa),
            Some(ph) if ph.is_nan() => None,
            Some(ph) => {
                // Accept integer multiples either way.
                let r = pa / ph;
                let k = r.round();
                if k >= 1.0 && (r - k).abs() < 1e-9 {
                    Some(pa)
                } else {
                    let r2 = ph / pa;
                    let k2 = r2.round();
                    if k2 >= 1.0 && (r2 - k2).abs() < 1e-9 {
                        Some(ph)
                    } else {
                        None
                    }
                }
            }
        }
    }
}

// ── Declarative specs ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionSpec {
    Sin2 { period: f64 },
    Vee { period: f64, slope: f64 },
    Poisson { intensity: f64, plateau: f64, slope: f64 },
    Const { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Bumps { height: f64, width: f64, center: f64, period: f64 },
    Shot { intensity: f64, amp: f64, width: f64, cap: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HamSpec {
    Power { gamma: f64 },
    PowerPlus { gamma: f64, v: FieldSpec },
    ShiftedPower { gamma: f64, c: FieldSpec, v: FieldSpec },
    Pinned { c0: f64, v: FieldSpec },
    FlatBottom { gamma: f64, width: f64, v: FieldSpec },
    DoubleWell { v: FieldSpec },
    Strictified { n: u32, base: Box<HamSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvSpec {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub diffusion: DiffusionSpec,
    pub hamiltonian: HamSpec,
}

fn default_name() -> String {
    "env".into()
}

fn build_field(spec: &FieldSpec) -> Result<Field, EnvError> {
    match spec {
        FieldSpec::Zero => Ok(Field::zero()),
        FieldSpec::Bumps { height, width, center, period } => {
            if *width <= 0.0 || *width > period / 2.0 || *height < 0.0 {
                return Err(EnvError::BadSpec {
                    what: format!("bump train needs 0 < width <= period/2, height >= 0 (got width {width}, period {period}, height {height})"),
                });
            }
            Ok(Field::bump_train(*height, *width, *center, *period))
        }
        FieldSpec::Shot { intensity, amp, width, cap } => {
            if *intensity <= 0.0 || *intensity >= 64.0 || *amp < 0.0 || *width <= 0.0 || *cap < 0.0 {
                return Err(EnvError::BadSpec {
                    what: format!("shot noise needs 0 < intensity < 64, amp >= 0, width > 0, cap >= 0 (got intensity {intensity}, amp {amp}, width {width}, cap {cap})"),
                });
            }
            Ok(Field::shot_noise(*intensity, *amp, *width, *cap))
        }
    }
}

fn build_ham(spec: &HamSpec) -> Result<HamiltonianField, EnvError> {
    match spec {
        HamSpec::Power { gamma } => Ok(HamiltonianField::power(*gamma)?),
        HamSpec::PowerPlus { gamma, v } => {
            Ok(HamiltonianField::power_plus(*gamma, build_field(v)?)?)
        }
        HamSpec::ShiftedPower { gamma, c, v } => {
            Ok(HamiltonianField::shifted_power(*gamma, build_field(c)?, build_field(v)?)?)
        }
        HamSpec::Pinned { c0, v } => Ok(HamiltonianField::pinned(*c0, build_field(v)?)?),
        HamSpec::FlatBottom { gamma, width, v } => {
            Ok(HamiltonianField::flat_bottom(*gamma, *width, build_field(v)?)?)
        }
        HamSpec::DoubleWell { v } => Ok(HamiltonianField::double_well(build_field(v)?)?),
        HamSpec::Strictified { n, base } => {
            let b = build_ham(base)?;
            Ok(crate::hamlib::strictify(&b, *n)?)
        }
    }
}

/// Build an environment from its spec, threading the seed into every
/// stochastic coefficient (diffusion stream 21, potential 11, drift 12).
pub fn sample_environment(spec: &EnvSpec) -> Result<Environment, EnvError> {
    let diffusion = match &spec.diffusion {
        DiffusionSpec::Sin2 { period } => {
            if *period <= 0.0 {
                return Err(EnvError::BadSpec { what: "sin2 needs period > 0".into() });
            }
            DiffusionField { kind: DiffusionKind::Sin2 { period: *period }, offset: 0.0 }
        }
        DiffusionSpec::Vee { period, slope } => {
            if *period <= 0.0 || *slope <= 0.0 {
                return Err(EnvError::BadSpec { what: "vee needs period > 0, slope > 0".into() });
            }
            DiffusionField { kind: DiffusionKind::Vee { period: *period, slope: *slope }, offset: 0.0 }
        }
        DiffusionSpec::Poisson { intensity, plateau, slope } => {
            if *intensity <= 0.0 || *intensity >= 64.0 || *plateau < 0.0 || *slope <= 0.0 {
                return Err(EnvError::BadSpec {
                    what: "poisson diffusion needs 0 < intensity < 64, plateau >= 0, slope > 0".into(),
                });
            }
            DiffusionField {
                kind: DiffusionKind::PoissonPlateau {
                    intensity: *intensity,
                    plateau: *plateau,
                    slope: *slope,
                    seed: spec.seed,
                    stream: 21,
                },
                offset: 0.0,
            }
        }
        DiffusionSpec::Const { value } => {
            if !(0.0..=1.0).contains(value) {
                return Err(EnvError::BadSpec { what: "const diffusion needs value in [0, 1]".into() });
            }
            DiffusionField { kind: DiffusionKind::Const { value: *value }, offset: 0.0 }
        }
    };
    let mut ham = build_ham(&spec.hamiltonian)?;
    ham.reseed(spec.seed);
    Ok(Environment { diffusion, ham, seed: spec.seed, name: spec.name.clone() })
}

// ── Validation ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    /// Standing hypothesis (gates the pipeline) versus informational shape
    /// report (non-quasiconvex sections are in scope).
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// All standing hypotheses hold; informational checks never fail a run.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.required)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.pass {
                "ok"
            } else if c.required {
                "FAIL"
            } else {
                "note"
            };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Dense-sampling audit of the structural assumptions on a window:
/// coefficient bounds, sqrt-Lipschitz regularity, nonempty zero set, the
/// Hamiltonian growth/regularity envelopes, and the (strict) quasiconvexity
/// of the momentum sections. Sampled checks certify the assumptions at the
/// probed resolution only; they are the arbiter used by the pipeline gate.
pub fn validate_environment(env: &Environment, lo: f64, hi: f64) -> ValidationReport {
    let mut checks = Vec::new();
    let nx = 2048usize;
    let xs: Vec<f64> = (0..=nx).map(|i| lo + (hi - lo) * i as f64 / nx as f64).collect();

    // Coefficient bounds 0 <= a <= 1.
    let mut a_min = f64::INFINITY;
    let mut a_max = f64::NEG_INFINITY;
    for &x in &xs {
        let a = env.a(x);
        a_min = a_min.min(a);
        a_max = a_max.max(a);
    }
    checks.push(CheckResult {
        name: "coefficient-bounds",
        required: true,
        pass: a_min >= -1e-14 && a_max <= 1.0 + 1e-12,
        detail: format!("a in [{a_min:.3e}, {a_max:.6}]"),
    });

    // sqrt(a) is kappa-Lipschitz (sampled difference quotients).
    let kappa = env.kappa();
    let mut worst_q = 0.0f64;
    for w in xs.windows(2) {
        let q = (env.sqrt_a(w[1]) - env.sqrt_a(w[0])).abs() / (w[1] - w[0]);
        worst_q = worst_q.max(q);
    }
    checks.push(CheckResult {
        name: "sqrt-a-lipschitz",
        required: true,
        pass: worst_q <= kappa * (1.0 + 1e-6) + 1e-9,
        detail: format!("max |d sqrt(a)| = {worst_q:.6}, declared kappa = {kappa:.6}"),
    });

    // Nonempty zero set (informational for parabolic-only use, hard
    // requirement for the cell pipeline).
    checks.push(CheckResult {
        name: "zero-set-nonempty",
        required: true,
        pass: a_min <= tol::A_TOL,
        detail: format!("min a = {a_min:.3e} (tolerance {:.1e})", tol::A_TOL),
    });

    // Hamiltonian envelopes on a momentum box.
    let c = env.ham.constants;
    let p_max = c.sublevel_radius(c.alpha1) + 2.0;
    let np = 200usize;
    let nxh = 160usize;
    let mut growth_viol = 0.0f64;
    let mut lip_p_viol = 0.0f64;
    let mut lip_x_viol = 0.0f64;
    let xh: Vec<f64> = (0..=nxh).map(|i| lo + (hi - lo) * i as f64 / nxh as f64).collect();
    for &x in &xh {
        let mut prev: Option<(f64, f64)> = None;
        for j in 0..=np {
            let p = -p_max + 2.0 * p_max * j as f64 / np as f64;
            let v = env.h(x, p);
            let lower = c.alpha0 * p.abs().powf(c.gamma) - 1.0 / c.alpha0;
            let upper = c.alpha1 * (p.abs().powf(c.gamma) + 1.0);
            growth_viol = growth_viol.max(lower - v).max(v - upper);
            if let Some((q, vq)) = prev {
                let cap = c.alpha1 * (p.abs() + q.abs() + 1.0).powf(c.gamma - 1.0) * (p - q).abs();
                lip_p_viol = lip_p_viol.max((v - vq).abs() - cap);
            }
            prev = Some((p, v));
        }
    }
    for w in xh.windows(2) {
        for j in 0..=40 {
            let p = -p_max + 2.0 * p_max * j as f64 / 40.0;
            let cap = c.alpha1 * (p.abs().powf(c.gamma) + 1.0) * (w[1] - w[0]);
            lip_x_viol = lip_x_viol.max((env.h(w[1], p) - env.h(w[0], p)).abs() - cap);
        }
    }
    checks.push(CheckResult {
        name: "growth-envelope",
        required: true,
        pass: growth_viol <= 1e-9,
        detail: format!("worst violation {growth_viol:.3e} on |p| <= {p_max:.3}"),
    });
    checks.push(CheckResult {
        name: "momentum-lipschitz",
        required: true,
        pass: lip_p_viol <= 1e-9,
        detail: format!("worst violation {lip_p_viol:.3e}"),
    });
    checks.push(CheckResult {
        name: "space-lipschitz",
        required: true,
        pass: lip_x_viol <= 1e-9,
        detail: format!("worst violation {lip_x_viol:.3e}"),
    });

    // Quasiconvexity of the momentum sections (waived for the pinned family,
    // which is quasiconvex only above its pin level by design).
    if env.ham.form == StructuralForm::Pinned {
        checks.push(CheckResult {
            name: "quasiconvex-sections",
            required: false,
            pass: true,
            detail: "pinned family: valley shape waived below the pin level".into(),
        });
    } else {
        let mut worst = 0.0f64;
        let mut wx = lo;
        let mut wp = 0.0;
        for &x in xh.iter().step_by(4) {
            let (v, p) = qc_violation(&env.ham, x, p_max, 400, 1e-9);
            if v > worst {
                worst = v;
                wx = x;
                wp = p;
            }
        }
        checks.push(CheckResult {
            name: "quasiconvex-sections",
            required: false,
            pass: worst <= 1e-9,
            detail: if worst > 0.0 {
                format!("valley violation {worst:.3e} at x = {wx:.4}, p = {wp:.4}")
            } else {
                "sections valley-shaped on the sampled grid".into()
            },
        });
    }

    // Strict quasiconvexity modulus, outside the unit zone around the
    // minimizer where a quartic penalty cannot beat a linear modulus.
    if c.eta > 0.0 {
        let mut worst = f64::INFINITY;
        for &x in xh.iter().step_by(8) {
            let (m, _) = sqc_margin(&env.ham, x, p_max, 400, c.eta, tol::SQC_ZONE);
            worst = worst.min(m);
        }
        checks.push(CheckResult {
            name: "strict-quasiconvexity",
            required: true,
            pass: worst >= -1e-9,
            detail: format!("worst modulus margin {worst:.3e} (eta = {:.3e})", c.eta),
        });
    }

    ValidationReport { checks }
}

// ── Zero-set decomposition ──────────────────────────────────────────────────

/// Maximal interval of the sampled window where `a <= a_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRegion {
    pub lo: f64,
    pub hi: f64,
}

impl ZeroRegion {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Open component of `{a > a_tol}` between two consecutive zero regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
}

impl Component {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub zeros: Vec<ZeroRegion>,
    /// Components strictly between consecutive zero regions
    /// (`components.len() == zeros.len() - 1`).
    pub components: Vec<Component>,
    pub lo: f64,
    pub hi: f64,
}

impl Decomposition {
    /// Zero-to-zero trimmed window used for slope averages.
    pub fn trimmed(&self) -> (f64, f64) {
        (self.zeros.first().unwrap().mid(), self.zeros.last().unwrap().mid())
    }
}

/// Locate the zero regions of `a` in `[lo, hi]` and the components between
/// them.
///
/// The coarse scan flags `a <= (2 kappa dx)^2`, which cannot miss a true
/// zero: if `a(x0) = 0` then the nearest grid point x satisfies
/// `sqrt(a(x)) <= kappa dx / 2`. Flagged runs are refined by golden-section
/// minimization and the region edges are resolved by bisection on the
/// `a_tol` crossing. Regions closer than one scan cell merge.
pub fn decompose_components(
    env: &Environment,
    lo: f64,
    hi: f64,
    a_tol: f64,
) -> Result<Decomposition, EnvError> {
    assert!(hi > lo, "window must be nonempty");
    assert!(a_tol > 0.0);
    let kappa = env.kappa();
    let dx = (1e-3 / kappa).min((hi - lo) / 64.0);
    let n = ((hi - lo) / dx).ceil() as usize;
    let dx = (hi - lo) / n as f64;
    let thr = (2.0 * kappa * dx).powi(2).max(a_tol);

    // Flagged runs of the coarse scan.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut min_a = f64::INFINITY;
    let mut cur: Option<usize> = None;
    for i in 0..=n {
        let x = lo + dx * i as f64;
        let a = env.a(x);
        min_a = min_a.min(a);
        if a <= thr {
            if cur.is_none() {
                cur = Some(i);
            }
        } else if let Some(s) = cur.take() {
            runs.push((s, i - 1));
        }
    }
    if let Some(s) = cur.take() {
        runs.push((s, n));
    }

    // Refine each run to a zero region, discarding shallow dips.
    let a_of = |x: f64| env.a(x);
    let mut zeros: Vec<ZeroRegion> = Vec::new();
    for (s, e) in runs {
        let xl = (lo + dx * s as f64 - dx).max(lo);
        let xr = (lo + dx * e as f64 + dx).min(hi);
        // Representative point with minimal a inside the run.
        let (x_min, a_min) = {
            let m = 64usize;
            let mut bi = 0;
            let mut bv = f64::INFINITY;
            for i in 0..=m {
                let x = xl + (xr - xl) * i as f64 / m as f64;
                let v = a_of(x);
                if v < bv {
                    bv = v;
                    bi = i;
                }
            }
            let step = (xr - xl) / m as f64;
            let gl = (xl + step * bi.saturating_sub(1) as f64).max(xl);
            let gh = (xl + step * (bi + 1) as f64).min(xr);
            golden_min_scalar(&a_of, gl, gh, 1e-13)
        };
        if a_min > a_tol {
            continue;
        }
        // Edge crossings of a_tol from the representative outward.
        let edge = |dir: f64, limit: f64| -> f64 {
            let mut inside = x_min;
            loop {
                let next = inside + dir * dx;
                let out_of_window = (dir < 0.0 && next < limit) || (dir > 0.0 && next > limit);
                if out_of_window {
                    return limit;
                }
                if a_of(next) > a_tol {
                    // Bisect the crossing in [inside, next].
                    let mut a = inside;
                    let mut b = next;
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if a_of(m) <= a_tol {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    return 0.5 * (a + b);
                }
                inside = next;
            }
        };
        let z_lo = edge(-1.0, lo);
        let z_hi = edge(1.0, hi);
        match zeros.last_mut() {
            Some(last) if z_lo <= last.hi + dx => last.hi = last.hi.max(z_hi),
            _ => zeros.push(ZeroRegion { lo: z_lo, hi: z_hi }),
        }
    }

    if zeros.is_empty() {
        return Err(EnvError::NoZeroInWindow { lo, hi, min_a });
    }

    let components = zeros
        .windows(2)
        .map(|w| Component { lo: w[0].hi, hi: w[1].lo })
        .collect();
    Ok(Decomposition { zeros, components, lo, hi })
}

fn golden_min_scalar(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
