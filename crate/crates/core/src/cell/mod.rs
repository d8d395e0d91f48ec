//! Cell problem: bounded branch solutions of `a(x) f' + H(x, f) = lambda`.
//!
//! On each component of `{a > 0}` the equation has two distinguished
//! solutions at admissible levels: the upper branch `p+_lambda` (attracting
//! when marched rightward) and the lower branch `p-_lambda` (attracting
//! leftward). On the zero set the equation collapses to the algebraic
//! relation `H(x, f) = lambda`, which forces `lambda >= min_p H(x, .)`
//! there. A level is feasible when it clears that floor on the whole zero
//! set and the upper branch tracks across every component, landing on the
//! algebraic upper root at the far endpoint. Feasibility is monotone in
//! `lambda`; the critical value `lambda_0` is resolved by bisection and is
//! the minimum of the effective Hamiltonian.
//!
//! Trackers switch between stiff ODE integration and algebraic root
//! following ("glue" mode) based on the local relaxation length `a / H_p`
//! compared to the output spacing, so components can be traversed all the
//! way into the degenerate endpoints where `1/a` blows up.

mod integrate;

use crate::environment::{Component, Decomposition, EnvError, Environment};
use crate::hamlib::{h_slope, lipschitz_bound, min_profile, HamlibError};
use crate::tol;
use integrate::{integrate_interval, IntervalOutcome, Rhs};
use rayon::prelude::*;
use std::fmt;

// ── Errors ──────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub enum CellError {
    Env(EnvError),
    Ham(HamlibError),
    /// No branch root of `H(x, .) = lambda` in the basin of the guess.
    RootLost { x: f64, lambda: f64 },
    /// Branch tracking failed on a component at a level that should admit it.
    TrackFailed { lambda: f64, comp_lo: f64, comp_hi: f64, why: String },
    /// Upper feasibility bracket not found below the doubling cap.
    NoUpperBracket { tried: f64 },
}

impl fmt::Display for CellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellError::Env(e) => write!(f, "environment: {e}"),
            CellError::Ham(e) => write!(f, "hamiltonian: {e}"),
            CellError::RootLost { x, lambda } => {
                write!(f, "no branch root of H(x, .) = {lambda} near the guess at x = {x}")
            }
            CellError::TrackFailed { lambda, comp_lo, comp_hi, why } => write!(
                f,
                "branch tracking failed at lambda = {lambda} on component [{comp_lo}, {comp_hi}]: {why}"
            ),
            CellError::NoUpperBracket { tried } => {
                write!(f, "no feasible level found up to lambda = {tried}")
            }
        }
    }
}

impl std::error::Error for CellError {}

impl From<EnvError> for CellError {
    fn from(e: EnvError) -> Self {
        CellError::Env(e)
    }
}

impl From<HamlibError> for CellError {
    fn from(e: HamlibError) -> Self {
        CellError::Ham(e)
    }
}

// ── Configuration ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy)]
pub struct CellConfig {
    /// Output grid spacing for branch and corrector profiles.
    pub dx: f64,
    /// Bisection width for the critical value.
    pub lambda_tol: f64,
    /// Degeneracy threshold on `a` (shared with the decomposition).
    pub a_tol: f64,
    /// Constant multiplying the interior regularity bounds.
    pub c_gamma: f64,
    /// Relative endpoint mismatch allowed for a tracked branch.
    pub junction_tol: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            dx: tol::GRID_DX,
            lambda_tol: tol::LAMBDA_TOL,
            a_tol: tol::A_TOL,
            c_gamma: tol::C_GAMMA,
            junction_tol: tol::JUNCTION_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// +1 for the upper branch, -1 for the lower branch.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// Marching direction in which the branch is attracting.
    pub fn dir(self) -> f64 {
        self.sign()
    }
}

/// A-priori bound certifying blow-down: any bounded branch solution obeys
/// the interior Lipschitz bound `K(lambda)`, so passing `2 K + 1` certifies
/// there is no bounded solution through the current state.
pub fn escape_bound(env: &Environment, lambda: f64, cfg: &CellConfig) -> f64 {
    let k = lipschitz_bound(&env.ham.constants, env.kappa(), lambda, cfg.c_gamma)
        .unwrap_or(1e6)
        .min(1e6);
    2.0 * k + 1.0
}

// ── Branch roots of the algebraic relation ──────────────────────────────────

fn bisect_root(phi: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    // Invariant: phi changes sign on [a, b].
    let mut va = phi(a);
    let scale = 1.0 + a.abs().max(b.abs());
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let vm = phi(m);
        if (va > 0.0) != (vm > 0.0) {
            b = m;
        } else {
            a = m;
            va = vm;
        }
        if (b - a).abs() <= tol::ROOT_TOL * scale {
            break;
        }
    }
    0.5 * (a + b)
}

/// Basin-local root of `H(x, .) = lambda` from a warm guess.
///
/// Walks from the guess in both directions with geometrically growing
/// steps, bisecting the first sign change; local dips along a walk are
/// refined by golden search to catch touching roots (level equal to a local
/// minimum of the section, where the sign never changes). Among candidates
/// the one nearest the guess wins, keeping the result in the guess's basin
/// for sections that are not quasiconvex.
pub fn branch_root(
    env: &Environment,
    x: f64,
    lambda: f64,
    guess: f64,
    branch: Branch,
) -> Result<f64, CellError> {
    let phi = |p: f64| env.h(x, p) - lambda;
    let side = branch.sign();
    let scale = 1.0 + guess.abs();
    let touch_tol = 1e-9 * (1.0 + lambda.abs());
    let v0 = phi(guess);
    if v0.abs() <= 0.01 * touch_tol {
        return Ok(guess);
    }
    let p_limit = env.ham.constants.sublevel_radius(lambda.max(env.ham.constants.alpha1)) + 4.0;
    let primary = if v0 > 0.0 { -side } else { side };

    let mut best: Option<f64> = None;
    let consider = |cand: f64, best: &mut Option<f64>| match best {
        Some(b) if (cand - guess).abs() >= (*b - guess).abs() => {}
        _ => *best = Some(cand),
    };
    for dir in [primary, -primary] {
        let mut samples: Vec<(f64, f64)> = vec![(guess, v0)];
        let mut step = 1e-6 * scale;
        let mut crossing: Option<f64> = None;
        for _ in 0..240 {
            let (p_prev, v_prev) = *samples.last().unwrap();
            let p_next = p_prev + dir * step;
            let v_next = phi(p_next);
            if (v_prev > 0.0) != (v_next > 0.0) {
                crossing = Some(bisect_root(&phi, p_prev, p_next));
                break;
            }
            samples.push((p_next, v_next));
            step *= 1.6;
            if p_next.abs() > p_limit {
                break;
            }
        }
        if let Some(root) = crossing {
            if dir == primary {
                // Exact crossing in the stated direction is the basin root.
                return Ok(root);
            }
            consider(root, &mut best);
        }
        for w in samples.windows(3) {
            if w[0].1 > 0.0 && w[1].1 <= w[0].1 && w[1].1 <= w[2].1 {
                let lo = w[0].0.min(w[2].0);
                let hi = w[0].0.max(w[2].0);
                let (p_m, v_m) = golden_min(&phi, lo, hi, 1e-13);
                if v_m < -touch_tol {
                    // The walk step straddled a thin sign change: both
                    // crossings are genuine roots, candidate each.
                    consider(bisect_root(&phi, lo, p_m), &mut best);
                    consider(bisect_root(&phi, p_m, hi), &mut best);
                } else if v_m <= touch_tol {
                    consider(p_m, &mut best);
                }
            }
        }
    }
    best.ok_or(CellError::RootLost { x, lambda })
}

/// Upper/lower root found from a cold start: a uniform scan marches inward
/// from the branch side across the full growth-implied momentum range, so
/// the outermost root on that side is found first, independent of any basin
/// guess. Touching roots are caught by refining interior dips.
pub fn outer_root(
    env: &Environment,
    x: f64,
    lambda: f64,
    branch: Branch,
) -> Result<f64, CellError> {
    let r = env.ham.constants.sublevel_radius(lambda) + 1.0;
    let side = branch.sign();
    let phi = |p: f64| env.h(x, p) - lambda;
    let touch_tol = 1e-9 * (1.0 + lambda.abs());
    let dip_thr = 5e-2 * (1.0 + lambda.abs());
    let n = 512usize;
    let p_at = |i: usize| side * r * (1.0 - 2.0 * i as f64 / n as f64);
    let mut vs: Vec<f64> = Vec::with_capacity(n + 1);
    vs.push(phi(p_at(0)));
    for i in 1..=n {
        let v = phi(p_at(i));
        vs.push(v);
        if (vs[i - 1] > 0.0) != (v > 0.0) {
            return Ok(bisect_root(&phi, p_at(i - 1), p_at(i)));
        }
        if i >= 2 && vs[i - 1] <= vs[i - 2] && vs[i - 1] <= v && vs[i - 1] <= dip_thr {
            let lo = p_at(i - 2).min(p_at(i));
            let hi = p_at(i - 2).max(p_at(i));
            let (p_m, v_m) = golden_min(&phi, lo, hi, 1e-13);
            if v_m < -touch_tol {
                // The scan straddled a thin sign change: the crossing
                // between the branch-side sample and the interior minimum
                // is the outermost root.
                return Ok(bisect_root(&phi, p_at(i - 2), p_m));
            }
            if v_m <= touch_tol {
                return Ok(p_m);
            }
        }
    }
    Err(CellError::RootLost { x, lambda })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
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

// ── Branch tracking across a component ──────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackFail {
    /// |f| crossed the a-priori bound: no bounded branch through this level.
    BlowDown { x: f64 },
    /// The step controller stalled (numerical breakdown, not a verdict).
    Stalled { x: f64 },
    /// No branch root at the starting endpoint (level below the local min).
    NoBranchAtStart { x: f64 },
}

#[derive(Debug, Clone)]
pub struct BranchTrack {
    /// Ascending grid over the component (both endpoints included).
    pub xs: Vec<f64>,
    /// Branch values on `xs`; truncated at the failure point on failure.
    pub f: Vec<f64>,
    pub completed: bool,
    pub fail: Option<TrackFail>,
    /// |f(far end) - algebraic branch root there| when completed.
    pub end_gap: f64,
}

enum Mode {
    Algebraic,
    Ode { h: f64 },
}

/// March the branch across one component on a uniform output grid.
///
/// Starts in algebraic mode at the near endpoint (where `a ~ 0` pins the
/// value to the outer root), switches to stiff integration when the
/// relaxation length `a/H_p` exceeds half the grid spacing, and glues back
/// onto the algebraic root when the relaxation length drops below a quarter
/// spacing, the residual is slope-consistent, and the integrated value sits
/// inside the junction band around the local root.
pub fn track_component(
    env: &Environment,
    lambda: f64,
    comp: &Component,
    branch: Branch,
    cfg: &CellConfig,
) -> BranchTrack {
    let len = comp.len();
    let n = ((len / cfg.dx).ceil() as usize).max(8);
    let seg = len / n as f64;
    let grid =
        |i: usize| -> f64 { if i == n { comp.hi } else { comp.lo + len * i as f64 / n as f64 } };
    let bound = escape_bound(env, lambda, cfg);
    let rhs = Rhs { env, lambda };

    // Marching order: Plus left-to-right, Minus right-to-left.
    let order: Vec<usize> = match branch {
        Branch::Plus => (0..=n).collect(),
        Branch::Minus => (0..=n).rev().collect(),
    };

    let x_start = grid(order[0]);
    let mut f_cur = match outer_root(env, x_start, lambda, branch) {
        Ok(r) => r,
        Err(_) => {
            return BranchTrack {
                xs: vec![x_start],
                f: vec![],
                completed: false,
                fail: Some(TrackFail::NoBranchAtStart { x: x_start }),
                end_gap: f64::INFINITY,
            };
        }
    };

    let relax = |x: f64, f: f64| -> f64 { env.a(x) / h_slope(&env.ham, x, f).abs().max(1e-12) };

    let mut mode = Mode::Algebraic;
    let mut march: Vec<f64> = Vec::with_capacity(n + 1);
    march.push(f_cur);
    let mut x_cur = x_start;
    let mut fail: Option<TrackFail> = None;

    for &i in order.iter().skip(1) {
        let xg = grid(i);
        match mode {
            Mode::Algebraic => {
                match branch_root(env, xg, lambda, f_cur, branch) {
                    Ok(r) => {
                        f_cur = r;
                        x_cur = xg;
                        if relax(xg, r) > 0.5 * seg {
                            mode = Mode::Ode { h: 0.1 * seg };
                        }
                    }
                    Err(_) => {
                        // Root gone within one cell: hand to the integrator.
                        mode = Mode::Ode { h: 0.1 * seg };
                        match integrate_interval(
                            &rhs,
                            x_cur,
                            f_cur,
                            xg,
                            0.1 * seg,
                            tol::ODE_REL_TOL,
                            tol::ODE_ABS_TOL,
                            bound,
                        ) {
                            IntervalOutcome::Done { z, h_next } => {
                                f_cur = z;
                                x_cur = xg;
                                mode = Mode::Ode { h: h_next };
                            }
                            IntervalOutcome::Escaped { x, .. } => {
                                fail = Some(TrackFail::BlowDown { x });
                            }
                            IntervalOutcome::Stalled { x } => {
                                fail = Some(TrackFail::Stalled { x });
                            }
                        }
                    }
                }
            }
            Mode::Ode { h } => {
                match integrate_interval(
                    &rhs,
                    x_cur,
                    f_cur,
                    xg,
                    h,
                    tol::ODE_REL_TOL,
                    tol::ODE_ABS_TOL,
                    bound,
                ) {
                    IntervalOutcome::Done { z, h_next } => {
                        f_cur = z;
                        x_cur = xg;
                        mode = Mode::Ode { h: h_next };
                        // Glue back onto the algebraic root when the layer is
                        // thinner than the grid can see.
                        let a = env.a(xg);
                        let resid = (lambda - env.h(xg, z)).abs();
                        if resid <= a * tol::SLOPE_CAP && relax(xg, z) <= 0.25 * seg {
                            if let Ok(r) = branch_root(env, xg, lambda, z, branch) {
                                if (z - r).abs() <= cfg.junction_tol * (1.0 + r.abs()) {
                                    f_cur = r;
                                    mode = Mode::Algebraic;
                                }
                            }
                        }
                    }
                    IntervalOutcome::Escaped { x, .. } => {
                        fail = Some(TrackFail::BlowDown { x });
                    }
                    IntervalOutcome::Stalled { x } => {
                        fail = Some(TrackFail::Stalled { x });
                    }
                }
            }
        }
        if fail.is_some() {
            break;
        }
        march.push(f_cur);
    }

    let completed = fail.is_none();
    let end_gap = if completed {
        let x_far = grid(*order.last().unwrap());
        match outer_root(env, x_far, lambda, branch) {
            Ok(r) => (f_cur - r).abs(),
            Err(_) => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };

    let mut xs: Vec<f64> = (0..=n).map(grid).collect();
    let mut f = march;
    if branch == Branch::Minus {
        f.reverse();
        if !completed {
            // Truncated march covers the right end of the grid.
            xs = xs.split_off(n + 1 - f.len());
        }
    } else if !completed {
        xs.truncate(f.len());
    }

    BranchTrack { xs, f, completed, fail, end_gap }
}

// ── Feasibility ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct ComponentFeasibility {
    pub lo: f64,
    pub hi: f64,
    pub tracked: bool,
    pub end_gap: f64,
    pub fail: Option<TrackFail>,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub lambda: f64,
    pub feasible: bool,
    /// sup over the zero set of `min_p H(x, .)`; levels below are infeasible
    /// because the algebraic relation has no solution there.
    pub zero_floor: f64,
    pub components: Vec<ComponentFeasibility>,
}

/// sup over the zero regions of the pointwise minimum of `H`.
///
/// Every level the pipeline visits must solve the algebraic relation at
/// every zero-set point it touches, so the floor has to track the true
/// supremum to the root finder's touching tolerance. Each region is
/// scanned at spacing 0.01 and every interior local maximum is polished by
/// golden search; potential features narrower than the scan spacing are
/// not certified.
pub fn sup_zero_lambda_hat(env: &Environment, decomp: &Decomposition) -> f64 {
    let lam = |x: f64| min_profile(&env.ham, x, 1e-11).lambda_hat;
    let mut sup = f64::NEG_INFINITY;
    for z in &decomp.zeros {
        let len = z.hi - z.lo;
        let n = ((len / 0.01).ceil() as usize).max(4);
        let xs: Vec<f64> = (0..=n).map(|i| z.lo + len * i as f64 / n as f64).collect();
        let vs: Vec<f64> = xs.iter().map(|&x| lam(x)).collect();
        for i in 0..=n {
            sup = sup.max(vs[i]);
            // Flat stretches need no polish: the plateau value is a sample.
            let rise = i > 0
                && i < n
                && vs[i] >= vs[i - 1]
                && vs[i] >= vs[i + 1]
                && (vs[i] - vs[i - 1]).max(vs[i] - vs[i + 1]) > 1e-12 * (1.0 + vs[i].abs());
            if rise {
                let neg_lam = |x: f64| -lam(x);
                let (_, neg) =
                    golden_min(&neg_lam, xs[i - 1], xs[i + 1], 1e-10 * (1.0 + xs[i].abs()));
                sup = sup.max(-neg);
            }
        }
    }
    sup
}

fn feasibility_with_floor(
    env: &Environment,
    decomp: &Decomposition,
    lambda: f64,
    zero_floor: f64,
    cfg: &CellConfig,
) -> FeasibilityReport {
    let slack = 1e-9 * (1.0 + lambda.abs());
    if lambda < zero_floor - slack {
        return FeasibilityReport { lambda, feasible: false, zero_floor, components: vec![] };
    }
    let components: Vec<ComponentFeasibility> = decomp
        .components
        .par_iter()
        .map(|comp| {
            let t = track_component(env, lambda, comp, Branch::Plus, cfg);
            let tracked = t.completed && t.end_gap <= cfg.junction_tol * (1.0 + lambda.abs());
            ComponentFeasibility {
                lo: comp.lo,
                hi: comp.hi,
                tracked,
                end_gap: t.end_gap,
                fail: t.fail,
            }
        })
        .collect();
    let feasible = components.iter().all(|c| c.tracked);
    FeasibilityReport { lambda, feasible, zero_floor, components }
}

/// Feasibility of a level: the zero-set floor plus upper-branch tracking
/// with endpoint matching on every component. Monotone in `lambda`.
pub fn feasibility(
    env: &Environment,
    decomp: &Decomposition,
    lambda: f64,
    cfg: &CellConfig,
) -> FeasibilityReport {
    let floor = sup_zero_lambda_hat(env, decomp);
    feasibility_with_floor(env, decomp, lambda, floor, cfg)
}

// ── Critical value ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CriticalValue {
    /// Certified-feasible upper end of the final bisection bracket.
    pub lambda0: f64,
    pub bracket: (f64, f64),
    pub zero_floor: f64,
    pub iterations: usize,
    /// Monotonicity spot checks at levels above lambda0.
    pub spot_checks: Vec<(f64, bool)>,
}

/// Critical value by bisection on the monotone feasibility predicate.
pub fn critical_value(
    env: &Environment,
    decomp: &Decomposition,
    cfg: &CellConfig,
) -> Result<CriticalValue, CellError> {
    let floor = sup_zero_lambda_hat(env, decomp);
    let mut iterations = 0usize;

    let feasible = |lambda: f64, iters: &mut usize| -> bool {
        *iters += 1;
        feasibility_with_floor(env, decomp, lambda, floor, cfg).feasible
    };

    let (mut lo, mut hi);
    if feasible(floor, &mut iterations) {
        // The zero-set floor itself admits the branch: it is the critical
        // value (levels below fail the algebraic relation on the zero set).
        lo = floor - cfg.lambda_tol;
        hi = floor;
    } else {
        lo = floor;
        let mut gap = (env.ham.constants.alpha1 + 1.0 - floor).max(1.0);
        hi = floor + gap;
        let mut tries = 0;
        while !feasible(hi, &mut iterations) {
            gap *= 2.0;
            hi = floor + gap;
            tries += 1;
            if tries > 60 {
                return Err(CellError::NoUpperBracket { tried: hi });
            }
        }
        while hi - lo > cfg.lambda_tol {
            let mid = 0.5 * (lo + hi);
            if feasible(mid, &mut iterations) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let mut spot_checks = Vec::new();
    for k in [1.0, 10.0, 100.0] {
        let l = hi + k * cfg.lambda_tol;
        spot_checks.push((l, feasible(l, &mut iterations)));
    }

    Ok(CriticalValue { lambda0: hi, bracket: (lo, hi), zero_floor: floor, iterations, spot_checks })
}

// ── Corrector assembly ──────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct Corrector {
    pub lambda: f64,
    pub branch: Branch,
    /// Strictly increasing grid from the first to the last zero region.
    pub xs: Vec<f64>,
    /// Slope profile `f = u'` on `xs`.
    pub f: Vec<f64>,
    /// Cumulative integral of `f` (trapezoid), `u[0] = 0`.
    pub u: Vec<f64>,
    /// Index ranges of `xs` lying inside zero regions.
    pub zero_marks: Vec<(usize, usize)>,
}

impl Corrector {
    /// Average slope over the span between the first and last zero-region
    /// midpoints (the zero-to-zero trimmed window).
    pub fn average_slope(&self, trim_lo: f64, trim_hi: f64) -> f64 {
        let u_at = |x: f64| -> f64 {
            match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                Ok(i) => self.u[i],
                Err(i) => {
                    let i = i.clamp(1, self.xs.len() - 1);
                    let t = (x - self.xs[i - 1]) / (self.xs[i] - self.xs[i - 1]);
                    self.u[i - 1] + t * (self.u[i] - self.u[i - 1])
                }
            }
        };
        (u_at(trim_hi) - u_at(trim_lo)) / (trim_hi - trim_lo)
    }
}

/// Build the corrector slope profile across the whole decomposition at a
/// feasible level: algebraic roots on zero regions, tracked branch values
/// on components, integrated into `u` by the trapezoid rule.
pub fn build_corrector(
    env: &Environment,
    decomp: &Decomposition,
    lambda: f64,
    branch: Branch,
    cfg: &CellConfig,
) -> Result<Corrector, CellError> {
    // Track all components in parallel (ordered collect keeps determinism).
    let tracks: Vec<BranchTrack> = decomp
        .components
        .par_iter()
        .map(|comp| track_component(env, lambda, comp, branch, cfg))
        .collect();
    for (comp, t) in decomp.components.iter().zip(&tracks) {
        if !t.completed {
            return Err(CellError::TrackFailed {
                lambda,
                comp_lo: comp.lo,
                comp_hi: comp.hi,
                why: format!("{:?}", t.fail),
            });
        }
    }

    // Zero-region grids with warm-started roots, marched in branch order.
    let zero_grids: Vec<(Vec<f64>, Vec<f64>)> = {
        let mut grids = Vec::with_capacity(decomp.zeros.len());
        for (zi, z) in decomp.zeros.iter().enumerate() {
            let m = (((z.hi - z.lo) / cfg.dx).ceil() as usize).max(1);
            let xs: Vec<f64> = (0..=m).map(|i| z.lo + (z.hi - z.lo) * i as f64 / m as f64).collect();
            // Warm start from the adjacent component in marching order.
            let seed = match branch {
                Branch::Plus if zi > 0 => tracks[zi - 1].f.last().copied(),
                Branch::Minus if zi < tracks.len() => tracks[zi].f.first().copied(),
                _ => None,
            };
            let order: Vec<usize> = match branch {
                Branch::Plus => (0..xs.len()).collect(),
                Branch::Minus => (0..xs.len()).rev().collect(),
            };
            let mut fs = vec![0.0; xs.len()];
            let mut warm: Option<f64> = seed;
            for &i in &order {
                let r = match warm {
                    Some(w) => branch_root(env, xs[i], lambda, w, branch)?,
                    None => outer_root(env, xs[i], lambda, branch)?,
                };
                fs[i] = r;
                warm = Some(r);
            }
            grids.push((xs, fs));
        }
        grids
    };

    // Stitch zero regions and components into one ascending grid.
    let mut xs: Vec<f64> = Vec::new();
    let mut f: Vec<f64> = Vec::new();
    let mut zero_marks = Vec::new();
    for (zi, (zxs, zfs)) in zero_grids.iter().enumerate() {
        let start = xs.len();
        let skip = usize::from(!xs.is_empty());
        xs.extend_from_slice(&zxs[skip.min(zxs.len())..]);
        f.extend_from_slice(&zfs[skip.min(zfs.len())..]);
        zero_marks.push((start.saturating_sub(skip.min(1)), xs.len().saturating_sub(1)));
        if zi < tracks.len() {
            let t = &tracks[zi];
            xs.extend_from_slice(&t.xs[1..]);
            f.extend_from_slice(&t.f[1..]);
        }
    }

    let mut u = Vec::with_capacity(xs.len());
    u.push(0.0);
    for i in 1..xs.len() {
        let du = 0.5 * (f[i] + f[i - 1]) * (xs[i] - xs[i - 1]);
        u.push(u[i - 1] + du);
    }

    Ok(Corrector { lambda, branch, xs, f, u, zero_marks })
}

/// Corrector at the critical value, retrying slightly above when the
/// borderline level fails to track (the retry level is recorded).
pub fn corrector_at_critical(
    env: &Environment,
    decomp: &Decomposition,
    cv: &CriticalValue,
    branch: Branch,
    cfg: &CellConfig,
) -> Result<(Corrector, f64), CellError> {
    let mut last_err = None;
    for k in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let lambda = cv.lambda0 + k * cfg.lambda_tol;
        match build_corrector(env, decomp, lambda, branch, cfg) {
            Ok(c) => return Ok((c, lambda)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

// ── Residual audit ──────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub at_x: f64,
}

/// Max residual `|a u'' + H(x, u') - lambda|` of a corrector profile, with
/// `u''` taken as the central difference of the slope profile on the
/// (possibly uneven) grid.
pub fn residual(env: &Environment, corr: &Corrector) -> ResidualReport {
    let mut max_abs = 0.0f64;
    let mut at_x = corr.xs[0];
    for i in 1..corr.xs.len() - 1 {
        let dx = corr.xs[i + 1] - corr.xs[i - 1];
        if dx <= 0.0 {
            continue;
        }
        let fp = (corr.f[i + 1] - corr.f[i - 1]) / dx;
        let r = env.a(corr.xs[i]) * fp + env.h(corr.xs[i], corr.f[i]) - corr.lambda;
        if r.abs() > max_abs {
            max_abs = r.abs();
            at_x = corr.xs[i];
        }
    }
    ResidualReport { max_abs, at_x }
}

// ── Contraction audit (Gronwall) ────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct GronwallReport {
    pub x_start: f64,
    pub x_end: f64,
    pub gap_start: f64,
    pub gap_end: f64,
    /// Gronwall envelope `gap_start * exp(-int eta/a)` accumulated along
    /// the pair of paths.
    pub contraction_bound: f64,
    /// Numerical `int 1/a` over the half of the span moving away from the
    /// left endpoint.
    pub int_inv_a_half: f64,
    /// Conservative lower bound `(1/(2 kappa)) log(d_mid/d_start)` implied
    /// by `sqrt(a) <= kappa * dist` and `a <= 1`.
    pub lemma_floor: f64,
    pub eta_min: f64,
}

/// Twin-solution contraction audit on a component interior, glue-free.
///
/// Integrates the branch ODE with plain RK4 from two starts `gap_start`
/// apart and reports the measured gap against the Gronwall envelope,
/// together with the `int 1/a` lower bound implied by the Lipschitz
/// geometry of `sqrt(a)` near the degenerate endpoint.
pub fn gronwall_merge_check(
    env: &Environment,
    comp: &Component,
    lambda: f64,
    gap_start: f64,
    cfg: &CellConfig,
) -> Result<GronwallReport, CellError> {
    // Interior span where the explicit integrator is stable.
    let scan = 512usize;
    let mut max_a = 0.0f64;
    for i in 0..=scan {
        let x = comp.lo + comp.len() * i as f64 / scan as f64;
        max_a = max_a.max(env.a(x));
    }
    let thr_a = (0.01f64).min(0.25 * max_a);
    let mut x_start = comp.lo;
    let mut x_end = comp.hi;
    for i in 0..=scan {
        let x = comp.lo + comp.len() * i as f64 / scan as f64;
        if env.a(x) >= thr_a {
            x_start = x;
            break;
        }
    }
    for i in (0..=scan).rev() {
        let x = comp.lo + comp.len() * i as f64 / scan as f64;
        if env.a(x) >= 1e-4 * max_a.max(1e-2) {
            x_end = x;
            break;
        }
    }
    if x_end <= x_start {
        return Err(CellError::TrackFailed {
            lambda,
            comp_lo: comp.lo,
            comp_hi: comp.hi,
            why: "component too degenerate for the glue-free audit".into(),
        });
    }

    let f0 = outer_root(env, x_start, lambda, Branch::Plus)?;
    let rhs = Rhs { env, lambda };

    let steps = 40_000usize;
    let h = (x_end - x_start) / steps as f64;
    let x_mid = 0.5 * (x_start + x_end);
    let mut f1 = f0;
    let mut f2 = f0 - gap_start;
    let mut exponent = 0.0f64;
    let mut int_inv_a_half = 0.0f64;
    let mut eta_min = f64::INFINITY;
    let bound = escape_bound(env, lambda, cfg);
    let mut x = x_start;
    let rk4 = |x: f64, z: f64| -> f64 {
        let k1 = rhs.g(x, z);
        let k2 = rhs.g(x + 0.5 * h, z + 0.5 * h * k1);
        let k3 = rhs.g(x + 0.5 * h, z + 0.5 * h * k2);
        let k4 = rhs.g(x + h, z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    for _ in 0..steps {
        let xm = x + 0.5 * h;
        let inv_a = 1.0 / env.a(xm);
        // Slope floor over the tube between the two paths.
        let eta = h_slope(&env.ham, xm, f1)
            .min(h_slope(&env.ham, xm, f2))
            .min(h_slope(&env.ham, xm, 0.5 * (f1 + f2)));
        eta_min = eta_min.min(eta);
        exponent += eta.max(0.0) * inv_a * h;
        if xm < x_mid {
            int_inv_a_half += inv_a * h;
        }
        f1 = rk4(x, f1);
        f2 = rk4(x, f2);
        x += h;
        if f1.abs() > bound || f2.abs() > bound {
            return Err(CellError::TrackFailed {
                lambda,
                comp_lo: comp.lo,
                comp_hi: comp.hi,
                why: "audit paths escaped the a-priori bound".into(),
            });
        }
    }

    let kappa = env.kappa();
    let d_start = (x_start - comp.lo).max(1e-12);
    let d_mid = (x_mid - comp.lo).max(d_start);
    Ok(GronwallReport {
        x_start,
        x_end,
        gap_start,
        gap_end: (f1 - f2).abs(),
        contraction_bound: gap_start * (-exponent).exp(),
        int_inv_a_half,
        lemma_floor: (1.0 / (2.0 * kappa)) * (d_mid / d_start).ln(),
        eta_min,
    })
}

// ── Bridged supersolution probes ────────────────────────────────────────────

#[derive(Debug, Clone, Copy)]
pub struct BridgeProbe {
    pub x: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    /// Concave kink: the slope drops from the upper to the lower branch.
    pub admissible: bool,
}

#[derive(Debug, Clone)]
pub struct BridgeReport {
    pub probes: Vec<BridgeProbe>,
    pub all_admissible: bool,
}

/// Probe the bridged supersolution on a component: upper branch up to a
/// kink, lower branch after. The kink is admissible (supersolution
/// preserved) when the slope drops, `p+ >= p-`, at the kink point.
pub fn bridge_supersolution(
    env: &Environment,
    comp: &Component,
    lambda: f64,
    cfg: &CellConfig,
) -> Result<BridgeReport, CellError> {
    let plus = track_component(env, lambda, comp, Branch::Plus, cfg);
    let minus = track_component(env, lambda, comp, Branch::Minus, cfg);
    if !plus.completed || !minus.completed {
        return Err(CellError::TrackFailed {
            lambda,
            comp_lo: comp.lo,
            comp_hi: comp.hi,
            why: "both branches must track to probe the bridge".into(),
        });
    }
    let n = plus.xs.len();
    let mut probes = Vec::new();
    for t in [0.25, 0.5, 0.75] {
        let i = ((n - 1) as f64 * t).round() as usize;
        let p_plus = plus.f[i];
        let p_minus = minus.f[i];
        probes.push(BridgeProbe {
            x: plus.xs[i],
            p_plus,
            p_minus,
            admissible: p_plus >= p_minus - 1e-9 * (1.0 + p_plus.abs()),
        });
    }
    let all_admissible = probes.iter().all(|p| p.admissible);
    Ok(BridgeReport { probes, all_admissible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{
        decompose_components, sample_environment, DiffusionSpec, EnvSpec, FieldSpec, HamSpec,
    };

    fn cube_env() -> Environment {
        sample_environment(&EnvSpec {
            name: "sin2-cube".into(),
            seed: 0,
            diffusion: DiffusionSpec::Sin2 { period: 1.0 },
            hamiltonian: HamSpec::Power { gamma: 3.0 },
        })
        .unwrap()
    }

    fn bumpy_env(height: f64, width: f64, center: f64) -> Environment {
        sample_environment(&EnvSpec {
            name: "sin2-bumpy".into(),
            seed: 0,
            diffusion: DiffusionSpec::Sin2 { period: 1.0 },
            hamiltonian: HamSpec::PowerPlus {
                gamma: 3.0,
                v: FieldSpec::Bumps { height, width, center, period: 1.0 },
            },
        })
        .unwrap()
    }

    #[test]
    fn constant_branch_for_x_independent_hamiltonian() {
        // a f' + f^3 = 1 has the exact bounded solution f = 1.
        let env = cube_env();
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let t = track_component(&env, 1.0, &comp, Branch::Plus, &CellConfig::default());
        assert!(t.completed, "{:?}", t.fail);
        for (x, f) in t.xs.iter().zip(&t.f) {
            assert!((f - 1.0).abs() < 1e-7, "f({x}) = {f}");
        }
        assert!(t.end_gap < 1e-9);
    }

    #[test]
    fn tracker_matches_fine_rk4_oracle() {
        // x-dependent H: a f' + f^3 + V(x) = 2 with an interior bump.
        let env = bumpy_env(0.5, 0.3, 0.5);
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let cfg = CellConfig::default();
        let t = track_component(&env, 2.0, &comp, Branch::Plus, &cfg);
        assert!(t.completed, "{:?}", t.fail);
        // Start the reference at a grid point with healthy a.
        let i0 = t.xs.iter().position(|&x| x >= 0.05).unwrap();
        let i1 = t.xs.iter().rposition(|&x| x <= 0.95).unwrap();
        let rhs = Rhs { env: &env, lambda: 2.0 };
        let path = super::integrate::rk4_path(&rhs, t.xs[i0], t.f[i0], t.xs[i1], 200_000);
        let mut worst = 0.0f64;
        for (x, z) in path.iter().skip(1) {
            // Compare at tracked grid points only.
            if let Some(j) = t.xs.iter().position(|&g| (g - x).abs() < 1e-12) {
                worst = worst.max((t.f[j] - z).abs());
            }
        }
        assert!(worst < 1e-5, "worst deviation from RK4 oracle: {worst}");
    }

    #[test]
    fn steep_bump_near_degenerate_endpoint_blows_down() {
        // A tall potential bump over a region where a is small forces the
        // upper branch to dive past the a-priori bound.
        let env = bumpy_env(6.0, 0.15, 0.25);
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let t = track_component(&env, 0.5, &comp, Branch::Plus, &CellConfig::default());
        assert!(!t.completed);
        assert!(matches!(t.fail, Some(TrackFail::BlowDown { .. })), "{:?}", t.fail);
    }

    #[test]
    fn critical_value_of_reference_environment_is_zero() {
        let env = cube_env();
        let d = decompose_components(&env, 0.0, 3.0, tol::A_TOL).unwrap();
        let cv = critical_value(&env, &d, &CellConfig::default()).unwrap();
        assert!(cv.lambda0.abs() <= 1e-6, "lambda0 = {}", cv.lambda0);
        assert!(cv.zero_floor.abs() <= 1e-9);
        for (l, ok) in &cv.spot_checks {
            assert!(ok, "level {l} above lambda0 must be feasible");
        }
    }

    #[test]
    fn critical_value_pinned_with_potential_on_the_zero_set() {
        // H = p^2/2 - |p| + V, V bumps of height 1.3 centered on the zeros
        // of a: the zero-set floor is 1.3 - 1/2 = 0.8 and is itself
        // feasible, so lambda0 = 0.8 exactly.
        let env = sample_environment(&EnvSpec {
            name: "pinned".into(),
            seed: 0,
            diffusion: DiffusionSpec::Sin2 { period: 1.0 },
            hamiltonian: HamSpec::Pinned {
                c0: 1.0,
                v: FieldSpec::Bumps { height: 1.3, width: 0.2, center: 0.0, period: 1.0 },
            },
        })
        .unwrap();
        let d = decompose_components(&env, 0.0, 2.0, tol::A_TOL).unwrap();
        let cv = critical_value(&env, &d, &CellConfig::default()).unwrap();
        assert!((cv.lambda0 - 0.8).abs() <= 1e-6, "lambda0 = {}", cv.lambda0);
    }

    #[test]
    fn corrector_profile_and_residual() {
        let env = cube_env();
        let d = decompose_components(&env, 0.0, 2.0, tol::A_TOL).unwrap();
        let cfg = CellConfig::default();
        let corr = build_corrector(&env, &d, 1.0, Branch::Plus, &cfg).unwrap();
        let (t0, t1) = d.trimmed();
        assert!((corr.average_slope(t0, t1) - 1.0).abs() < 1e-7);
        let res = residual(&env, &corr);
        assert!(res.max_abs <= 5.0 * cfg.dx, "residual {} at {}", res.max_abs, res.at_x);
    }

    #[test]
    fn branch_profiles_are_monotone_in_lambda() {
        let env = bumpy_env(0.5, 0.3, 0.5);
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let cfg = CellConfig::default();
        let t1 = track_component(&env, 1.5, &comp, Branch::Plus, &cfg);
        let t2 = track_component(&env, 2.5, &comp, Branch::Plus, &cfg);
        assert!(t1.completed && t2.completed);
        for i in 0..t1.f.len() {
            assert!(t2.f[i] >= t1.f[i] - 1e-8, "upper branch must rise with lambda");
        }
        let m1 = track_component(&env, 1.5, &comp, Branch::Minus, &cfg);
        let m2 = track_component(&env, 2.5, &comp, Branch::Minus, &cfg);
        assert!(m1.completed && m2.completed);
        for i in 0..m1.f.len() {
            assert!(m2.f[i] <= m1.f[i] + 1e-8, "lower branch must drop with lambda");
        }
    }

    #[test]
    fn twin_paths_merge_within_the_gronwall_envelope() {
        let env = bumpy_env(0.5, 0.3, 0.5);
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let rep = gronwall_merge_check(&env, &comp, 2.0, 1e-2, &CellConfig::default()).unwrap();
        assert!(rep.gap_end <= 1e-8, "gap_end = {}", rep.gap_end);
        assert!(
            rep.gap_end <= 1.1 * rep.contraction_bound + 1e-14,
            "gap_end = {} vs bound {}",
            rep.gap_end,
            rep.contraction_bound
        );
        assert!(
            rep.int_inv_a_half >= rep.lemma_floor,
            "int 1/a = {} vs floor {}",
            rep.int_inv_a_half,
            rep.lemma_floor
        );
        assert!(rep.eta_min > 0.0);
    }

    #[test]
    fn bridge_probes_are_admissible() {
        let env = cube_env();
        let d = decompose_components(&env, 0.0, 1.0, tol::A_TOL).unwrap();
        let comp = d.components[0];
        let rep = bridge_supersolution(&env, &comp, 1.0, &CellConfig::default()).unwrap();
        assert!(rep.all_admissible, "{:?}", rep.probes);
        for p in &rep.probes {
            assert!(p.p_plus > 0.0 && p.p_minus < 0.0);
        }
    }
}
