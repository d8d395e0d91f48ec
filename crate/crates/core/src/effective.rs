//! Effective Hamiltonian assembly.
//!
//! The effective Hamiltonian of the degenerate equation has a flat piece:
//! `Hbar(theta) = lambda0` on the interval `[theta-_0, theta+_0]` spanned by
//! the average slopes of the two critical correctors, and strictly monotone
//! wings outside it. The wings are the inverses of the average-slope maps
//! `lambda -> theta+-(lambda)` computed from corrector profiles at levels
//! above `lambda0`, with `theta+` increasing and `theta-` decreasing in
//! `lambda`. This module samples the wings on a geometric ladder of levels,
//! densifies until adjacent slope gaps are small, extrapolates the flat-piece
//! endpoints with a power-law fit, and inverts the wings with a monotone
//! piecewise cubic so the assembled `Hbar` is quasiconvex by construction.

use crate::cell::{
    build_corrector, critical_value, Branch, CellConfig, CellError, Corrector, CriticalValue,
};
use crate::environment::{Decomposition, Environment};
use crate::tol;

use rayon::prelude::*;

/// Interpolation tolerance honored by the assembled curve: round-trip
/// evaluation `hbar(theta_pm(lambda))` recovers `lambda` within this bound at
/// every retained wing sample. The inverse interpolants are node-exact, so
/// the published bound is conservative.
pub const INTERP_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum EffectiveError {
    Cell(CellError),
    /// A wing lost strict monotonicity beyond slack even after a refined
    /// recomputation of the offending level.
    NonMonotone { lambda: f64, theta_prev: f64, theta: f64, branch: Branch },
    /// Slope requested outside the sampled wing range.
    OutOfRange { theta: f64, lo: f64, hi: f64 },
    /// The level ladder produced too few wing samples to interpolate.
    TooFewSamples { got: usize },
}

impl std::fmt::Display for EffectiveError {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EffectiveError::Cell(e) => write!(fm, "cell problem failed: {e}"),
            EffectiveError::NonMonotone { lambda, theta_prev, theta, branch } => write!(
                fm,
                "wing {branch:?} lost monotonicity at lambda = {lambda}: theta went {theta_prev} -> {theta}"
            ),
            EffectiveError::OutOfRange { theta, lo, hi } => {
                write!(fm, "slope {theta} outside the sampled range [{lo}, {hi}]")
            }
            EffectiveError::TooFewSamples { got } => {
                write!(fm, "only {got} wing samples; need at least 2")
            }
        }
    }
}

impl std::error::Error for EffectiveError {}

impl From<CellError> for EffectiveError {
    fn from(e: CellError) -> Self {
        EffectiveError::Cell(e)
    }
}

// ── Monotone piecewise cubic (Fritsch-Carlson) ──────────────────────────────

/// Shape-preserving cubic Hermite interpolant on strictly increasing knots.
///
/// Derivatives are the Fritsch-Carlson weighted harmonic means of adjacent
/// secants, zeroed at local extrema, so monotone data yields a monotone
/// interpolant with no overshoot.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2, "need at least two knots");
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "knots must increase strictly");
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        let sec: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            if sec[i - 1] * sec[i] <= 0.0 {
                ds[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
            }
        }
        ds[0] = edge_slope(h[0], sec[0], h.get(1).copied(), sec.get(1).copied());
        ds[n - 1] = edge_slope(
            h[n - 2],
            sec[n - 2],
            (n >= 3).then(|| h[n - 3]),
            (n >= 3).then(|| sec[n - 3]),
        );
        MonotoneCubic { xs, ys, ds }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluate at `x`; clamps to the end intervals outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }
}

/// Three-point endpoint slope with the standard monotonicity clamps.
fn edge_slope(h0: f64, s0: f64, h1: Option<f64>, s1: Option<f64>) -> f64 {
    let m = match (h1, s1) {
        (Some(h1), Some(s1)) => ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1),
        _ => s0,
    };
    if m * s0 <= 0.0 {
        0.0
    } else if let Some(s1) = s1 {
        if s0 * s1 <= 0.0 && m.abs() > 3.0 * s0.abs() {
            3.0 * s0
        } else {
            m
        }
    } else {
        m
    }
}

// ── Wing sampling ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CurveSample {
    pub lambda: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub cell: CellConfig,
    /// Extend the level ladder until both wings cover `[-span, span]`.
    pub theta_span: f64,
    /// Densify levels until adjacent slope gaps stay below this.
    pub dtheta_max: f64,
    /// Cap on densification passes.
    pub max_passes: usize,
    /// Base offset above `lambda0` for the flat-endpoint power-law fit.
    pub fit_offset: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            cell: CellConfig::default(),
            theta_span: 2.5,
            dtheta_max: 0.02,
            max_passes: 6,
            fit_offset: 1e-4,
        }
    }
}

/// Average slopes of the two corrector branches at one level, over the
/// zero-to-zero trimmed window of the decomposition.
pub fn theta_pair(
    env: &Environment,
    decomp: &Decomposition,
    lambda: f64,
    cfg: &CellConfig,
) -> Result<(f64, f64), CellError> {
    let (lo, hi) = decomp.trimmed();
    let mut pair = [Ok(0.0), Ok(0.0)];
    let branches = [Branch::Minus, Branch::Plus];
    pair.par_iter_mut().zip(branches.par_iter()).for_each(|(slot, &b)| {
        *slot = build_corrector(env, decomp, lambda, b, cfg).map(|c| c.average_slope(lo, hi));
    });
    let [m, p] = pair;
    Ok((m?, p?))
}

/// Corrector pair at one level (both branches), for callers that need the
/// full profiles rather than just the averaged slopes.
pub fn corrector_pair(
    env: &Environment,
    decomp: &Decomposition,
    lambda: f64,
    cfg: &CellConfig,
) -> Result<(Corrector, Corrector), CellError> {
    let minus = build_corrector(env, decomp, lambda, Branch::Minus, cfg)?;
    let plus = build_corrector(env, decomp, lambda, Branch::Plus, cfg)?;
    Ok((minus, plus))
}

// ── Flat-piece endpoints ─────────────────────────────────────────────────────

/// Endpoint of the flat piece by a three-level power-law fit.
///
/// With `theta(lambda0 + h) = theta0 + c h^beta`, samples at offsets `h`,
/// `2h`, `4h` give the ratio `r = 2^beta` exactly and
/// `theta0 = theta(h) - (theta(2h) - theta(h)) / (r - 1)`. Degenerate ratios
/// fall back to the innermost sample.
fn fit_flat_endpoint(th_h: f64, th_2h: f64, th_4h: f64) -> f64 {
    let d1 = th_2h - th_h;
    let d2 = th_4h - th_2h;
    if d1.abs() < 1e-14 * (1.0 + th_h.abs()) {
        return th_h;
    }
    let r = d2 / d1;
    if !(1.01..=16.0).contains(&r) {
        return th_h;
    }
    let theta0 = th_h - d1 / (r - 1.0);
    // The fit must stay on the sample side of the innermost value.
    if (theta0 - th_h) * d1 > 0.0 {
        th_h
    } else {
        theta0
    }
}

// ── Curve construction ──────────────────────────────────────────────────────

/// The assembled effective Hamiltonian: a flat piece at `lambda0` between
/// `theta_minus0` and `theta_plus0`, and monotone wings interpolated from
/// the sampled levels.
#[derive(Debug, Clone)]
pub struct EffectiveCurve {
    pub critical: CriticalValue,
    pub lambda0: f64,
    pub theta_minus0: f64,
    pub theta_plus0: f64,
    /// Wing samples in ascending `lambda`.
    pub samples: Vec<CurveSample>,
    /// `lambda` as a function of `theta` on the upper wing.
    plus_inv: MonotoneCubic,
    /// `lambda` as a function of `-theta` on the lower wing.
    minus_inv: MonotoneCubic,
}

impl EffectiveCurve {
    /// Slope range covered by the sampled wings.
    pub fn theta_range(&self) -> (f64, f64) {
        (-self.minus_inv.range().1, self.plus_inv.range().1)
    }

    /// Effective Hamiltonian at slope `theta`.
    pub fn hbar(&self, theta: f64) -> Result<f64, EffectiveError> {
        let (lo, hi) = self.theta_range();
        if theta < lo || theta > hi {
            return Err(EffectiveError::OutOfRange { theta, lo, hi });
        }
        if theta >= self.theta_minus0 && theta <= self.theta_plus0 {
            return Ok(self.lambda0);
        }
        if theta > self.theta_plus0 {
            Ok(self.plus_inv.eval(theta))
        } else {
            Ok(self.minus_inv.eval(-theta))
        }
    }
}

/// Sample both wings over a geometric ladder of levels above `lambda0`,
/// densify until adjacent slope gaps fall below `dtheta_max`, enforce wing
/// monotonicity (one refined retry per offending level), extrapolate the
/// flat-piece endpoints, and assemble the monotone inverse interpolants.
pub fn build_effective_curve(
    env: &Environment,
    decomp: &Decomposition,
    cfg: &CurveConfig,
) -> Result<EffectiveCurve, EffectiveError> {
    let critical = critical_value(env, decomp, &cfg.cell)?;
    let lambda0 = critical.lambda0;
    let tol_l = cfg.cell.lambda_tol;

    // Geometric ladder, extended until the wings cover the requested span.
    let mut samples: Vec<CurveSample> = Vec::new();
    let mut k = 0u32;
    loop {
        let lambda = lambda0 + tol_l * (2.0f64).powi(k as i32);
        let (tm, tp) = theta_pair(env, decomp, lambda, &cfg.cell)?;
        samples.push(CurveSample { lambda, theta_minus: tm, theta_plus: tp });
        if (tp >= cfg.theta_span && tm <= -cfg.theta_span) || k >= 60 {
            break;
        }
        k += 1;
    }

    // Densification: split level gaps whose slope gap is too wide. The new
    // level is the geometric mean of the offsets, which halves the ratio of
    // a power-law wing per pass.
    for _ in 0..cfg.max_passes {
        let mut inserts: Vec<f64> = Vec::new();
        for w in samples.windows(2) {
            let gap = (w[1].theta_plus - w[0].theta_plus)
                .abs()
                .max((w[1].theta_minus - w[0].theta_minus).abs());
            if gap > cfg.dtheta_max {
                let o0 = w[0].lambda - lambda0;
                let o1 = w[1].lambda - lambda0;
                inserts.push(lambda0 + (o0 * o1).sqrt());
            }
        }
        if inserts.is_empty() {
            break;
        }
        let new: Vec<CurveSample> = inserts
            .par_iter()
            .map(|&lambda| {
                theta_pair(env, decomp, lambda, &cfg.cell)
                    .map(|(tm, tp)| CurveSample { lambda, theta_minus: tm, theta_plus: tp })
            })
            .collect::<Result<_, _>>()?;
        samples.extend(new);
        samples.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    }

    // Monotonicity: theta+ must increase and theta- decrease along the
    // ladder. A violation beyond slack gets one recomputation on a refined
    // grid; sub-slack wiggles are clamped to the running bound.
    for i in 1..samples.len() {
        let slack = 1e-8 * (1.0 + samples[i].theta_plus.abs().max(samples[i].theta_minus.abs()));
        let bad_plus = samples[i].theta_plus < samples[i - 1].theta_plus - slack;
        let bad_minus = samples[i].theta_minus > samples[i - 1].theta_minus + slack;
        if bad_plus || bad_minus {
            let mut fine = cfg.cell;
            fine.dx *= 0.5;
            let (tm, tp) = theta_pair(env, decomp, samples[i].lambda, &fine)?;
            samples[i].theta_minus = tm;
            samples[i].theta_plus = tp;
        }
        if samples[i].theta_plus < samples[i - 1].theta_plus - slack {
            return Err(EffectiveError::NonMonotone {
                lambda: samples[i].lambda,
                theta_prev: samples[i - 1].theta_plus,
                theta: samples[i].theta_plus,
                branch: Branch::Plus,
            });
        }
        if samples[i].theta_minus > samples[i - 1].theta_minus + slack {
            return Err(EffectiveError::NonMonotone {
                lambda: samples[i].lambda,
                theta_prev: samples[i - 1].theta_minus,
                theta: samples[i].theta_minus,
                branch: Branch::Minus,
            });
        }
        samples[i].theta_plus = samples[i].theta_plus.max(samples[i - 1].theta_plus);
        samples[i].theta_minus = samples[i].theta_minus.min(samples[i - 1].theta_minus);
    }
    if samples.len() < 2 {
        return Err(EffectiveError::TooFewSamples { got: samples.len() });
    }

    // Flat-piece endpoints from three fit levels near lambda0.
    let h = cfg.fit_offset;
    let fit: Vec<(f64, f64)> = [h, 2.0 * h, 4.0 * h]
        .par_iter()
        .map(|&o| theta_pair(env, decomp, lambda0 + o, &cfg.cell))
        .collect::<Result<_, _>>()?;
    let theta_plus0 = fit_flat_endpoint(fit[0].1, fit[1].1, fit[2].1);
    let theta_minus0 = -fit_flat_endpoint(-fit[0].0, -fit[1].0, -fit[2].0);

    EffectiveCurve::from_parts(critical, theta_minus0, theta_plus0, samples)
}

impl EffectiveCurve {
    /// Assemble a curve from already-computed parts (also the deterministic
    /// rebuild path when resuming from persisted samples).
    pub fn from_parts(
        critical: CriticalValue,
        theta_minus0: f64,
        theta_plus0: f64,
        samples: Vec<CurveSample>,
    ) -> Result<EffectiveCurve, EffectiveError> {
        let lambda0 = critical.lambda0;
        // Inverse wings with the flat-piece junction as the first knot.
        // Knots must increase strictly; drop samples that fail to clear the
        // junction.
        let mut pxs = vec![theta_plus0];
        let mut pys = vec![lambda0];
        let mut mxs = vec![-theta_minus0];
        let mut mys = vec![lambda0];
        for s in &samples {
            if s.theta_plus > *pxs.last().unwrap() + tol::MACHINE_SLACK {
                pxs.push(s.theta_plus);
                pys.push(s.lambda);
            }
            if -s.theta_minus > *mxs.last().unwrap() + tol::MACHINE_SLACK {
                mxs.push(-s.theta_minus);
                mys.push(s.lambda);
            }
        }
        if pxs.len() < 2 || mxs.len() < 2 {
            return Err(EffectiveError::TooFewSamples { got: pxs.len().min(mxs.len()) });
        }
        let plus_inv = MonotoneCubic::new(pxs, pys);
        let minus_inv = MonotoneCubic::new(mxs, mys);

        Ok(EffectiveCurve {
            critical,
            lambda0,
            theta_minus0,
            theta_plus0,
            samples,
            plus_inv,
            minus_inv,
        })
    }
}

// ── Structural audit ─────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct CurveAudit {
    /// Wing slopes are monotone in `lambda` across all retained samples.
    pub wings_monotone: bool,
    /// Max round-trip error `|hbar(theta(lambda)) - lambda|` over samples.
    pub roundtrip_max: f64,
    /// `hbar` is quasiconvex on a fine slope grid (non-increasing then
    /// non-decreasing up to slack).
    pub quasiconvex: bool,
    /// Min of `hbar` over the fine grid equals `lambda0` up to slack.
    pub min_is_lambda0: bool,
}

/// Structural checks on an assembled curve.
pub fn audit_curve(curve: &EffectiveCurve) -> CurveAudit {
    let mut wings_monotone = true;
    for w in curve.samples.windows(2) {
        if w[1].theta_plus < w[0].theta_plus || w[1].theta_minus > w[0].theta_minus {
            wings_monotone = false;
        }
    }

    let mut roundtrip_max = 0.0f64;
    for s in &curve.samples {
        for th in [s.theta_minus, s.theta_plus] {
            if let Ok(l) = curve.hbar(th) {
                roundtrip_max = roundtrip_max.max((l - s.lambda).abs());
            }
        }
    }

    let (lo, hi) = curve.theta_range();
    let n = 800;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let th = lo + (hi - lo) * i as f64 / n as f64;
        vals.push(curve.hbar(th).unwrap_or(f64::NAN));
    }
    let slack = 1e-9 * (1.0 + curve.lambda0.abs());
    let mut quasiconvex = true;
    let mut rising = false;
    for w in vals.windows(2) {
        if w[1] > w[0] + slack {
            rising = true;
        } else if w[1] < w[0] - slack && rising {
            quasiconvex = false;
        }
    }
    let min_val = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_is_lambda0 = (min_val - curve.lambda0).abs() <= 10.0 * slack;

    CurveAudit { wings_monotone, roundtrip_max, quasiconvex, min_is_lambda0 }
}
