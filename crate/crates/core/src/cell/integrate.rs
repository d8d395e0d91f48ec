//! Stiff integrator for the branch ODE `a(x) f' + H(x, f) = lambda`.
//!
//! The right-hand side `f' = (lambda - H(x, f)) / a(x)` is stiff wherever
//! `a` is small: the attracting branch pulls perturbations back at rate
//! `H_p / a`. Steps use TR-BDF2 (trapezoidal stage to `x + gamma h`, BDF2
//! stage to `x + h`, `gamma = 2 - sqrt(2)`), which is L-stable and one-step,
//! so the marching direction can be chosen per branch: the upper branch is
//! attracting forward, the lower branch attracting backward, and in the
//! stable direction both Newton stages have derivative `1 - beta h g_f > 1`.
//! Step size is controlled by step doubling with local extrapolation.

use crate::environment::Environment;
use crate::hamlib::h_slope;

/// gamma = 2 - sqrt(2); both stages then share the Newton coefficient
/// `beta = gamma/2 = (1-gamma)/(2-gamma)`.
const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

pub(crate) struct Rhs<'a> {
    pub env: &'a Environment,
    pub lambda: f64,
}

impl Rhs<'_> {
    pub fn g(&self, x: f64, f: f64) -> f64 {
        (self.lambda - self.env.h(x, f)) / self.env.a(x)
    }

    pub fn g_f(&self, x: f64, f: f64) -> f64 {
        -h_slope(&self.env.ham, x, f) / self.env.a(x)
    }
}

/// Solve `z = r + beta_h * g(xn, z)` by damped Newton from `z0`.
fn solve_stage(rhs: &Rhs, xn: f64, beta_h: f64, r: f64, z0: f64, bound: f64) -> Option<f64> {
    let mut z = z0;
    for _ in 0..30 {
        let fval = z - beta_h * rhs.g(xn, z) - r;
        if fval.abs() <= 1e-12 * (1.0 + z.abs()) {
            return Some(z);
        }
        let mut deriv = 1.0 - beta_h * rhs.g_f(xn, z);
        if deriv.abs() < 1e-8 {
            deriv = if deriv >= 0.0 { 1e-8 } else { -1e-8 };
        }
        let mut dz = -fval / deriv;
        let cap = 0.5 * (1.0 + z.abs());
        if dz.abs() > cap {
            dz = dz.signum() * cap;
        }
        z += dz;
        if z.abs() > 4.0 * bound {
            return None;
        }
        if dz.abs() <= 1e-13 * (1.0 + z.abs()) && fval.abs() <= 1e-9 * (1.0 + z.abs()) {
            return Some(z);
        }
    }
    None
}

/// One TR-BDF2 step of (signed) size `h`.
fn trbdf2_step(rhs: &Rhs, x: f64, z: f64, h: f64, bound: f64) -> Option<f64> {
    let g0 = rhs.g(x, z);
    let beta = 0.5 * GAMMA;
    let x1 = x + GAMMA * h;
    let r1 = z + beta * h * g0;
    let mut pred = z + GAMMA * h * g0;
    let cap = 2.0 * (1.0 + z.abs());
    if (pred - z).abs() > cap {
        pred = z + (pred - z).signum() * cap;
    }
    let z1 = solve_stage(rhs, x1, beta * h, r1, pred, bound)?;
    let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
    let c0 = (1.0 - GAMMA) * (1.0 - GAMMA) * c1;
    let d = (1.0 - GAMMA) / (2.0 - GAMMA);
    let r2 = c1 * z1 - c0 * z;
    solve_stage(rhs, x + h, d * h, r2, z1, bound)
}

pub(crate) enum IntervalOutcome {
    /// Reached `x1`; `h_next` is the suggested (signed) next step size.
    Done { z: f64, h_next: f64 },
    /// |f| exceeded the a-priori bound: no bounded solution on this branch.
    Escaped { x: f64 },
    /// The controller drove h below the resolvable scale without escaping.
    Stalled { x: f64 },
}

/// Integrate from `(x0, z0)` to `x1` (either direction) with adaptive
/// step-doubling TR-BDF2. `h0` seeds the step size from a previous interval.
pub(crate) fn integrate_interval(
    rhs: &Rhs,
    x0: f64,
    z0: f64,
    x1: f64,
    h0: f64,
    rtol: f64,
    atol: f64,
    bound: f64,
) -> IntervalOutcome {
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let total = (x1 - x0).abs();
    let h_min = 1e-12 * total.max(1e-6);
    let mut x = x0;
    let mut z = z0;
    let mut h = h0.abs().clamp(h_min * 10.0, total) * dir;
    if h == 0.0 {
        h = total * dir;
    }
    loop {
        if (x1 - x) * dir <= 1e-14 * total.max(1.0) {
            return IntervalOutcome::Done { z, h_next: h };
        }
        if z.abs() > bound {
            return IntervalOutcome::Escaped { x };
        }
        if h.abs() > (x1 - x).abs() {
            h = x1 - x;
        }
        let attempt = trbdf2_step(rhs, x, z, h, bound).and_then(|zf| {
            let zh1 = trbdf2_step(rhs, x, z, 0.5 * h, bound)?;
            let zh2 = trbdf2_step(rhs, x + 0.5 * h, zh1, 0.5 * h, bound)?;
            Some((zf, zh2))
        });
        match attempt {
            Some((zf, zh2)) => {
                let err = (zf - zh2).abs() / 3.0;
                let scale = atol + rtol * zh2.abs();
                if err <= scale {
                    x += h;
                    z = zh2 + (zh2 - zf) / 3.0;
                    let grow = if err > 0.0 {
                        (0.9 * (scale / err).powf(1.0 / 3.0)).min(4.0)
                    } else {
                        4.0
                    };
                    h *= grow.max(1.0);
                } else {
                    let shrink = (0.9 * (scale / err).powf(1.0 / 3.0)).max(0.2);
                    h *= shrink;
                    if h.abs() < h_min {
                        return if z.abs() > 0.5 * bound {
                            IntervalOutcome::Escaped { x }
                        } else {
                            IntervalOutcome::Stalled { x }
                        };
                    }
                }
            }
            None => {
                h *= 0.5;
                if h.abs() < h_min {
                    return if z.abs() > 0.5 * bound {
                        IntervalOutcome::Escaped { x }
                    } else {
                        IntervalOutcome::Stalled { x }
                    };
                }
            }
        }
    }
}

/// Fixed-step RK4 reference path, used as an independent oracle in tests.
#[cfg(test)]
pub(crate) fn rk4_path(rhs: &Rhs, x0: f64, z0: f64, x1: f64, steps: usize) -> Vec<(f64, f64)> {
    let h = (x1 - x0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut x, mut z) = (x0, z0);
    out.push((x, z));
    for _ in 0..steps {
        let k1 = rhs.g(x, z);
        let k2 = rhs.g(x + 0.5 * h, z + 0.5 * h * k1);
        let k3 = rhs.g(x + 0.5 * h, z + 0.5 * h * k2);
        let k4 = rhs.g(x + h, z + h * k3);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x += h;
        out.push((x, z));
    }
    out
}
