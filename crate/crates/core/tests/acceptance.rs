//! Acceptance gate: one integration test per published guarantee, each
//! printing a `[acceptance] criterion N (...): PASS` line (visible under
//! `cargo test --test acceptance -- --nocapture`).
//!
//! Every check is scored against an oracle that does not share code with the
//! construction under test: closed forms where the environment admits them
//! (the x-independent cubic has `Hbar(theta) = |theta|^3` and `lambda0 = 0`),
//! a-priori bounds carried by the growth constants, algebraic sublevel
//! endpoints resolved by bisection, the Gronwall contraction envelope, and
//! the long-time parabolic solver marching the full equation.

use hjhomog::cell::{
    critical_value, gronwall_merge_check, residual, sup_zero_lambda_hat, CellConfig,
};
use hjhomog::effective::{
    audit_curve, build_effective_curve, corrector_pair, theta_pair, CurveConfig, INTERP_TOL,
};
use hjhomog::environment::{
    decompose_components, sample_environment, DiffusionSpec, EnvSpec, Environment, FieldSpec,
    HamSpec,
};
use hjhomog::hamlib::{lipschitz_bound, strictify, sublevel_endpoints};
use hjhomog::parabolic::{
    solve_parabolic, BoundaryMode, NumFlux, ParabolicConfig, ParabolicSolver,
};
use hjhomog::pipeline::{load_config, run_pipeline, RunOptions};
use hjhomog::rng::CellRng;

fn sin2() -> DiffusionSpec {
    DiffusionSpec::Sin2 { period: 1.0 }
}

fn bumps(height: f64, width: f64, center: f64) -> FieldSpec {
    FieldSpec::Bumps { height, width, center, period: 1.0 }
}

fn env_of(diffusion: DiffusionSpec, hamiltonian: HamSpec, seed: u64, name: &str) -> Environment {
    sample_environment(&EnvSpec { name: name.into(), seed, diffusion, hamiltonian })
        .expect("environment")
}

fn pass(n: usize, label: &str) {
    println!("[acceptance] criterion {n} ({label}): PASS");
}

#[test]
fn criterion_01_x_independent_cubic_matches_closed_form() {
    let env = env_of(sin2(), HamSpec::Power { gamma: 3.0 }, 0, "cubic");
    let cell = CellConfig::default();
    let decomp = decompose_components(&env, -0.5, 2.5, cell.a_tol).expect("decomposition");

    let cv = critical_value(&env, &decomp, &cell).expect("critical value");
    assert!(cv.lambda0.abs() <= 1e-6, "lambda0 = {} should vanish", cv.lambda0);

    for lambda in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let (tm, tp) = theta_pair(&env, &decomp, lambda, &cell).expect("theta pair");
        let root = lambda.cbrt();
        assert!((tp - root).abs() <= 1e-4, "theta+({lambda}) = {tp}, want {root}");
        assert!((tm + root).abs() <= 1e-4, "theta-({lambda}) = {tm}, want {}", -root);
    }

    let curve = build_effective_curve(
        &env,
        &decomp,
        &CurveConfig { theta_span: 2.05, dtheta_max: 0.015, ..CurveConfig::default() },
    )
    .expect("curve");
    for i in 0..=400 {
        let theta = -2.0 + 4.0 * i as f64 / 400.0;
        let want = theta.abs().powi(3);
        let got = curve.hbar(theta).expect("slope inside sampled range");
        assert!((got - want).abs() <= 1e-3, "hbar({theta}) = {got}, want {want}");
    }
    pass(1, "x-independent cubic matches the closed form");
}

#[test]
fn criterion_02_critical_value_bounds_hold_on_random_ensemble() {
    let tol = 1e-4;
    let cell = CellConfig::default();
    for seed in 0..20u64 {
        let spec = EnvSpec {
            name: format!("random-{seed}"),
            seed,
            diffusion: DiffusionSpec::Poisson { intensity: 0.9, plateau: 0.3, slope: 2.0 },
            hamiltonian: HamSpec::PowerPlus {
                gamma: 3.0,
                v: FieldSpec::Shot { intensity: 0.6, amp: 1.0, width: 0.2, cap: 2.5 },
            },
        };
        let env = sample_environment(&spec).expect("environment");
        let mut half = 8.0;
        let decomp = loop {
            let d = decompose_components(&env, -half, half, cell.a_tol).expect("decomposition");
            if d.zeros.len() >= 2 || half >= 64.0 {
                break d;
            }
            half *= 2.0;
        };
        assert!(decomp.zeros.len() >= 2, "seed {seed}: no degenerate structure in window");

        let cv = critical_value(&env, &decomp, &cell).expect("critical value");
        let c = &env.ham.constants;
        assert!(
            cv.lambda0 >= -1.0 / c.alpha0 - tol,
            "seed {seed}: lambda0 = {} below -1/alpha0 = {}",
            cv.lambda0,
            -1.0 / c.alpha0
        );
        assert!(
            cv.lambda0 <= c.alpha1 + tol,
            "seed {seed}: lambda0 = {} above alpha1 = {}",
            cv.lambda0,
            c.alpha1
        );
        let floor = sup_zero_lambda_hat(&env, &decomp);
        assert!(
            cv.lambda0 >= floor - tol,
            "seed {seed}: lambda0 = {} below the zero-set floor {floor}",
            cv.lambda0
        );
    }
    pass(2, "critical value bounds hold on 20 random environments");
}

#[test]
fn criterion_03_correctors_solve_the_branch_equation_and_order() {
    let cases: [(&str, DiffusionSpec, HamSpec, (f64, f64)); 5] = [
        ("cubic", sin2(), HamSpec::Power { gamma: 3.0 }, (-0.5, 2.5)),
        (
            "cubic-bumps",
            sin2(),
            HamSpec::PowerPlus { gamma: 3.0, v: bumps(1.0, 0.2, 0.5) },
            (-0.5, 2.5),
        ),
        (
            "shifted-vee",
            DiffusionSpec::Vee { period: 1.0, slope: 3.0 },
            HamSpec::ShiftedPower { gamma: 3.0, c: bumps(0.8, 0.3, 0.5), v: bumps(0.5, 0.25, 0.3) },
            (-0.5, 2.5),
        ),
        (
            "flat-bottom",
            sin2(),
            HamSpec::FlatBottom { gamma: 3.0, width: 1.0, v: bumps(0.6, 0.2, 0.5) },
            (-0.5, 2.5),
        ),
        ("double-well", sin2(), HamSpec::DoubleWell { v: bumps(0.5, 0.2, 0.5) }, (-0.25, 2.25)),
    ];
    let cell = CellConfig::default();
    for (name, diff, ham, (lo, hi)) in cases {
        let env = env_of(diff, ham, 3, name);
        let decomp = decompose_components(&env, lo, hi, cell.a_tol).expect("decomposition");
        let cv = critical_value(&env, &decomp, &cell).expect("critical value");
        let levels = [cv.lambda0 + 0.3, cv.lambda0 + 1.0, cv.lambda0 + 3.0];

        let pairs: Vec<_> = levels
            .iter()
            .map(|&l| corrector_pair(&env, &decomp, l, &cell).expect("corrector pair"))
            .collect();

        for (&lambda, (minus, plus)) in levels.iter().zip(&pairs) {
            for corr in [minus, plus] {
                let r = residual(&env, corr);
                assert!(
                    r.max_abs <= 5.0 * cell.dx,
                    "{name}, level {lambda}: residual {} at x = {}",
                    r.max_abs,
                    r.at_x
                );
            }
            // On the degenerate set the branch slopes must equal the
            // sublevel endpoints resolved independently by bisection.
            for &(i0, i1) in &plus.zero_marks {
                let step = ((i1 - i0) / 8).max(1);
                for i in (i0..=i1).step_by(step) {
                    let x = plus.xs[i];
                    if env.a(x) > cell.a_tol {
                        continue;
                    }
                    let se = sublevel_endpoints(&env.ham, x, lambda, 1e-9).expect("sublevel");
                    assert!(
                        (plus.f[i] - se.p_plus).abs() <= 1e-6,
                        "{name}, level {lambda}: plus slope {} vs endpoint {} at x = {x}",
                        plus.f[i],
                        se.p_plus
                    );
                    assert!(
                        (minus.f[i] - se.p_minus).abs() <= 1e-6,
                        "{name}, level {lambda}: minus slope {} vs endpoint {} at x = {x}",
                        minus.f[i],
                        se.p_minus
                    );
                }
            }
        }

        // Sample-wise nesting across levels: for mu < lambda the profiles
        // satisfy f-_lambda < f-_mu < f+_mu < f+_lambda everywhere.
        for lo_idx in 0..levels.len() {
            for hi_idx in lo_idx + 1..levels.len() {
                let (m_mu, p_mu) = &pairs[lo_idx];
                let (m_la, p_la) = &pairs[hi_idx];
                assert_eq!(p_mu.xs.len(), p_la.xs.len(), "{name}: grids must agree");
                for i in 0..p_mu.xs.len() {
                    assert!(
                        m_la.f[i] < m_mu.f[i] && m_mu.f[i] < p_mu.f[i] && p_mu.f[i] < p_la.f[i],
                        "{name}: branch nesting fails at x = {} for levels {} < {}",
                        p_mu.xs[i],
                        levels[lo_idx],
                        levels[hi_idx]
                    );
                }
            }
        }
    }
    pass(3, "correctors meet the residual, endpoint, and nesting checks");
}

#[test]
fn criterion_04_upper_branch_gap_contracts_per_component() {
    let env = env_of(sin2(), HamSpec::Power { gamma: 3.0 }, 0, "cubic");
    let cell = CellConfig::default();
    let decomp = decompose_components(&env, -0.5, 2.5, cell.a_tol).expect("decomposition");
    let cv = critical_value(&env, &decomp, &cell).expect("critical value");
    let lambda = cv.lambda0 + 1.0;

    assert!(!decomp.components.is_empty());
    for comp in &decomp.components {
        let rep = gronwall_merge_check(&env, comp, lambda, 1e-3, &cell).expect("merge check");
        assert!(
            rep.gap_end <= 1e-8,
            "gap {} after the span [{}, {}]",
            rep.gap_end,
            rep.x_start,
            rep.x_end
        );
        assert!(
            rep.gap_end <= 1.1 * rep.contraction_bound + 1e-14,
            "gap {} decays slower than the contraction envelope {}",
            rep.gap_end,
            rep.contraction_bound
        );
        assert!(
            rep.int_inv_a_half >= rep.lemma_floor,
            "1/a integral {} below the divergence floor {}",
            rep.int_inv_a_half,
            rep.lemma_floor
        );
        assert!(rep.eta_min > 0.0, "slope margin must be positive above lambda0");
    }
    pass(4, "upper-branch perturbations contract inside each component");
}

#[test]
fn criterion_05_curve_is_quasiconvex_with_exact_roundtrip() {
    let env = env_of(sin2(), HamSpec::Power { gamma: 3.0 }, 0, "cubic");
    let cell = CellConfig::default();
    let decomp = decompose_components(&env, -0.5, 2.5, cell.a_tol).expect("decomposition");
    let curve = build_effective_curve(
        &env,
        &decomp,
        &CurveConfig { theta_span: 1.5, ..CurveConfig::default() },
    )
    .expect("curve");

    for w in curve.samples.windows(2) {
        assert!(w[1].lambda > w[0].lambda, "level ladder must increase");
        assert!(w[1].theta_plus > w[0].theta_plus, "theta+ must increase strictly");
        assert!(w[1].theta_minus < w[0].theta_minus, "theta- must decrease strictly");
    }

    let audit = audit_curve(&curve);
    assert!(audit.wings_monotone);
    assert!(
        audit.roundtrip_max <= 2.0 * INTERP_TOL,
        "roundtrip error {} exceeds twice the interpolation tolerance",
        audit.roundtrip_max
    );
    assert!(audit.quasiconvex, "fine-grid quasiconvexity audit failed");
    assert!(audit.min_is_lambda0, "curve minimum drifted from lambda0");

    // Sublevel sets on a fixed 401-point slope grid are intervals and the
    // grid minimum sits at the critical value.
    let (lo, hi) = curve.theta_range();
    let vals: Vec<f64> = (0..401)
        .map(|i| {
            let th = (lo + (hi - lo) * i as f64 / 400.0).clamp(lo, hi);
            curve.hbar(th).expect("slope inside sampled range")
        })
        .collect();
    let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        (vmin - curve.lambda0).abs() <= 1e-6,
        "grid minimum {} vs lambda0 {}",
        vmin,
        curve.lambda0
    );
    for k in 1..=20 {
        let level = vmin + (vmax - vmin) * k as f64 / 21.0;
        let inside: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= level + 1e-12).collect();
        assert!(!inside.is_empty());
        for w in inside.windows(2) {
            assert!(w[1] == w[0] + 1, "sublevel set at {level} is not an interval");
        }
    }
    pass(5, "wing monotonicity, roundtrip, and interval sublevels hold");
}

#[test]
fn criterion_06_flat_part_matches_long_time_parabolic_growth() {
    let env = env_of(sin2(), HamSpec::Pinned { c0: 1.0, v: bumps(1.3, 0.25, 0.5) }, 0, "pinned");
    let cell = CellConfig::default();
    let decomp = decompose_components(&env, -0.25, 2.25, cell.a_tol).expect("decomposition");
    let curve = build_effective_curve(
        &env,
        &decomp,
        &CurveConfig { theta_span: 1.6, ..CurveConfig::default() },
    )
    .expect("curve");
    let (tm0, tp0) = (curve.theta_minus0, curve.theta_plus0);
    assert!(tm0 < 0.0 && 0.0 < tp0, "flat piece must straddle zero, got [{tm0}, {tp0}]");

    // The pinned sections are W-shaped, so the splitting flux is not
    // monotone here; the two-point flux with a fixed gradient box is.
    // Comparison with the linear-in-time profile theta*x + t*min_x H(x, theta)
    // pins the long-time growth at or above the section minimum, so the
    // critical value is attained only where single-well slope profiles can
    // average to theta: two bands at the ends of the flat interval. The test
    // slopes sit inside those bands, on both wings. The gradient box must
    // still cover the outer well edge (slopes up to about 1.19 here).
    let cfg = ParabolicConfig {
        dx: 0.005,
        t_final: 300.0,
        flux: NumFlux::LocalLaxFriedrichs,
        boundary: BoundaryMode::QuasiPeriodic { periods: 1 },
        p_bound: Some(1.5),
        tail_fraction: 0.25,
        ..ParabolicConfig::default()
    };
    let lambda0 = curve.lambda0;
    for theta in [0.96 * tm0, 0.92 * tp0, 0.97 * tp0] {
        let run = solve_parabolic(&env, theta, cfg).expect("parabolic run");
        let err = (run.estimate() - lambda0).abs();
        assert!(
            err <= 0.05 * lambda0.abs(),
            "theta = {theta}: parabolic growth {} vs lambda0 {lambda0}",
            run.estimate()
        );
    }
    pass(6, "flat-part growth matches the critical value within 5 percent");
}

#[test]
fn criterion_07_wing_values_match_long_time_parabolic_growth() {
    let cases = [
        ("cubic", HamSpec::Power { gamma: 3.0 }, 2.6),
        ("cubic-bumps", HamSpec::PowerPlus { gamma: 3.0, v: bumps(1.0, 0.2, 0.5) }, 3.0),
    ];
    let cell = CellConfig::default();
    for (name, ham, p_bound) in cases {
        let env = env_of(sin2(), ham, 0, name);
        let decomp = decompose_components(&env, -0.5, 2.5, cell.a_tol).expect("decomposition");
        let curve = build_effective_curve(
            &env,
            &decomp,
            &CurveConfig { theta_span: 1.8, ..CurveConfig::default() },
        )
        .expect("curve");
        let (tm0, tp0) = (curve.theta_minus0, curve.theta_plus0);
        let thetas = [tm0 - 1.0, tm0 - 0.35, tp0 + 0.25, tp0 + 0.6, tp0 + 1.0];

        let cfg = ParabolicConfig {
            dx: 0.0125,
            t_final: 200.0,
            flux: NumFlux::EngquistOsher,
            boundary: BoundaryMode::QuasiPeriodic { periods: 1 },
            p_bound: Some(p_bound),
            tail_fraction: 0.25,
            ..ParabolicConfig::default()
        };
        for theta in thetas {
            let want = curve.hbar(theta).expect("slope inside sampled range");
            let run = solve_parabolic(&env, theta, cfg).expect("parabolic run");
            let rel = (run.estimate() - want).abs() / want.abs().max(1.0);
            assert!(
                rel <= 0.05,
                "{name}, theta = {theta}: parabolic {} vs curve {want} (rel {rel:.4})",
                run.estimate()
            );
            assert!(
                run.spread() <= 0.02,
                "{name}, theta = {theta}: tail bracket spread {} above 2 percent",
                run.spread()
            );
        }
    }
    pass(7, "wing values match the long-time parabolic growth rate");
}

#[test]
fn criterion_08_strictification_error_and_curve_convergence() {
    let cell = CellConfig::default();
    let base_spec = HamSpec::FlatBottom { gamma: 3.0, width: 1.0, v: FieldSpec::Zero };
    let env = env_of(sin2(), base_spec.clone(), 0, "flat-bottom");
    let rhat = env.ham.constants.rhat();
    let gamma_bar = env.ham.constants.gamma.max(4.0);

    // Uniform distance to each strictified member obeys the published bound
    // on one period times the slope box [-3, 3].
    for n in [5u32, 10, 20] {
        let hn = strictify(&env.ham, n).expect("strictify");
        let bound = 2.0 / n as f64 + hn.constants.eta * (3.0 + rhat).powf(gamma_bar);
        let mut sup = 0.0f64;
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            for j in 0..=600 {
                let p = -3.0 + j as f64 / 100.0;
                sup = sup.max((env.ham.eval(x, p) - hn.eval(x, p)).abs());
            }
        }
        assert!(sup <= bound + 1e-12, "n = {n}: distance {sup} exceeds the bound {bound}");
    }

    // Effective values converge monotonically along the strictification.
    let decomp = decompose_components(&env, -0.5, 2.5, cell.a_tol).expect("decomposition");
    let ccfg = CurveConfig { theta_span: 1.9, ..CurveConfig::default() };
    let base_curve = build_effective_curve(&env, &decomp, &ccfg).expect("base curve");
    let thetas = [-1.8, -1.2, 0.0, 1.2, 1.8];
    let mut errs: Vec<[f64; 5]> = Vec::new();
    for n in [5u32, 10, 20] {
        let env_n = env_of(
            sin2(),
            HamSpec::Strictified { n, base: Box::new(base_spec.clone()) },
            0,
            "flat-bottom-strict",
        );
        let decomp_n = decompose_components(&env_n, -0.5, 2.5, cell.a_tol).expect("decomposition");
        let curve_n = build_effective_curve(&env_n, &decomp_n, &ccfg).expect("strictified curve");
        let mut row = [0.0; 5];
        for (k, &th) in thetas.iter().enumerate() {
            let hn = curve_n.hbar(th).expect("slope inside sampled range");
            let hb = base_curve.hbar(th).expect("slope inside sampled range");
            row[k] = (hn - hb).abs();
        }
        errs.push(row);
    }
    for (k, &th) in thetas.iter().enumerate() {
        assert!(
            errs[0][k] >= errs[1][k] - 1e-9 && errs[1][k] >= errs[2][k] - 1e-9,
            "theta = {th}: errors {:?} do not decrease along n = 5, 10, 20",
            [errs[0][k], errs[1][k], errs[2][k]]
        );
    }
    pass(8, "strictification obeys the uniform bound and converges monotonically");
}

#[test]
fn criterion_09_discrete_comparison_and_gradient_bound() {
    let env = env_of(sin2(), HamSpec::PowerPlus { gamma: 3.0, v: bumps(1.0, 0.2, 0.5) }, 0, "mixed");
    let tau = std::f64::consts::TAU;

    // 100 seeded ordered pairs stay ordered after marching both solutions
    // with the monotone two-point flux.
    let cfg = ParabolicConfig {
        dx: 0.02,
        t_final: 1.0,
        flux: NumFlux::LocalLaxFriedrichs,
        boundary: BoundaryMode::QuasiPeriodic { periods: 1 },
        p_bound: Some(6.0),
        ..ParabolicConfig::default()
    };
    for k in 0..100i64 {
        let mut rng = CellRng::new(97, 11, k);
        let theta = 2.0 * rng.next_f64() - 1.0;
        let (a1, m1, ph1) = (0.15 * rng.next_f64(), 1 + (rng.next_f64() * 3.0) as u32, rng.next_f64());
        let (a2, m2, ph2) = (0.10 * rng.next_f64(), 1 + (rng.next_f64() * 3.0) as u32, rng.next_f64());
        let (g0, ga, mg, phg) =
            (0.05 + 0.1 * rng.next_f64(), 0.1 * rng.next_f64(), 1 + (rng.next_f64() * 2.0) as u32, rng.next_f64());

        let mut lo_sol = ParabolicSolver::new(&env, theta, cfg).expect("solver");
        let mut hi_sol = ParabolicSolver::new(&env, theta, cfg).expect("solver");
        let lo: Vec<f64> = lo_sol
            .xs
            .iter()
            .map(|&x| {
                theta * x
                    + a1 * (tau * (m1 as f64 * x + ph1)).sin()
                    + a2 * (tau * (m2 as f64 * x + ph2)).sin()
            })
            .collect();
        let hi: Vec<f64> = lo_sol
            .xs
            .iter()
            .zip(&lo)
            .map(|(&x, &l)| l + g0 + ga * (tau * (mg as f64 * x + phg)).sin().powi(2))
            .collect();
        lo_sol.set_initial(&lo).expect("initial data");
        hi_sol.set_initial(&hi).expect("initial data");
        for _ in 0..100 {
            lo_sol.step().expect("step");
            hi_sol.step().expect("step");
        }
        for i in 0..lo_sol.u.len() {
            assert!(
                hi_sol.u[i] >= lo_sol.u[i] - 1e-12,
                "pair {k}: order lost at cell {i}: {} < {}",
                hi_sol.u[i],
                lo_sol.u[i]
            );
        }
    }

    // Observed slope ranges stay inside three times the a-priori interior
    // gradient bound evaluated at the running level of the data.
    let run_cfg = ParabolicConfig {
        dx: 0.01,
        t_final: 5.0,
        flux: NumFlux::LocalLaxFriedrichs,
        boundary: BoundaryMode::QuasiPeriodic { periods: 1 },
        p_bound: None,
        ..ParabolicConfig::default()
    };
    let envs = [
        env_of(sin2(), HamSpec::Power { gamma: 3.0 }, 0, "cubic"),
        env_of(sin2(), HamSpec::PowerPlus { gamma: 3.0, v: bumps(1.0, 0.2, 0.5) }, 0, "mixed"),
    ];
    for env in &envs {
        for theta in [0.4, 1.2] {
            let lambda = (0..=100)
                .map(|i| env.h(i as f64 / 100.0, theta))
                .fold(f64::NEG_INFINITY, f64::max);
            let k_bound =
                lipschitz_bound(&env.ham.constants, env.kappa(), lambda, 10.0).expect("bound");
            let run = solve_parabolic(env, theta, run_cfg).expect("parabolic run");
            let seen = run.p_seen.0.abs().max(run.p_seen.1.abs());
            assert!(
                seen <= 3.0 * k_bound,
                "{}: theta = {theta}: observed slope {seen} above 3 * {k_bound}",
                env.name
            );
        }
    }
    pass(9, "discrete comparison holds and slopes respect the a-priori bound");
}

#[test]
fn criterion_10_single_thread_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
schema = "hjhomog-run-v1"

[environment]
name = "cubic"
seed = 0

[environment.diffusion]
kind = "sin2"
period = 1.0

[environment.hamiltonian]
family = "power"
gamma = 3.0

[window]
lo = -0.5
hi = 2.5

[curve]
theta_span = 0.9

[levels]
offsets = [0.5]

[parabolic]
thetas = [0.6]
t_final = 3.0
dx = 0.02
flux = "engquist-osher"
boundary = "quasi-periodic"
periods = 1
p_bound = 2.0
rel_tol = 0.5
gap_tol = 0.5
"#,
    )
    .expect("write config");
    let config = load_config(&config_path).expect("load config");
    let opts = RunOptions {
        fresh: true,
        threads: Some(1),
        seed: None,
        window: None,
        tol_lambda: None,
        stop_after: None,
    };

    let dir_a = dir.path().join("a");
    let dir_b = dir.path().join("b");
    run_pipeline(&config, &dir_a, &opts).expect("first run");
    run_pipeline(&config, &dir_b, &opts).expect("second run");

    let names = [
        "validation.txt",
        "critical.json",
        "correctors.csv",
        "curve.json",
        "curve.csv",
        "hbar.csv",
        "traces.csv",
        "comparison.txt",
        "state.json",
    ];
    for name in names {
        let a = std::fs::read(dir_a.join(name)).unwrap_or_else(|_| panic!("missing {name} (a)"));
        let b = std::fs::read(dir_b.join(name)).unwrap_or_else(|_| panic!("missing {name} (b)"));
        assert!(a == b, "{name} differs between identical single-thread runs");
    }

    // Manifests agree except for wall-clock timestamps.
    let strip = |p: &std::path::Path| -> serde_json::Value {
        let text = std::fs::read_to_string(p.join("manifest.json")).expect("manifest");
        let mut v: serde_json::Value = serde_json::from_str(&text).expect("manifest json");
        v.as_object_mut().expect("object").remove("unix_time");
        v
    };
    assert_eq!(strip(&dir_a), strip(&dir_b), "manifests differ beyond the timestamp");
    pass(10, "single-thread reruns reproduce every artifact byte for byte");
}
