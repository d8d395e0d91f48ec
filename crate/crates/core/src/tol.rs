//! Central numeric tolerances and solver defaults.
//!
//! Tolerances that couple more than one module live here so the relations
//! between them stay visible: the zero-set threshold decides where the branch
//! ODE hands over to the algebraic branch, the root tolerance bounds how well
//! sublevel endpoints satisfy `H = lambda`, and the junction tolerance is the
//! continuity budget for gluing component solutions to the zero-set formula.

/// Threshold on `a(x)` below which a point is treated as part of the zero set.
pub const A_TOL: f64 = 1e-10;

/// Bisection half-width for momentum root finding (sublevel endpoints,
/// minimizer localization). Roots satisfy `|H - lambda| <= local slope * ROOT_TOL`.
pub const ROOT_TOL: f64 = 1e-12;

/// Default half-width of the critical-value bracket returned by bisection.
pub const LAMBDA_TOL: f64 = 1e-6;

/// Relative local error target per accepted step of the branch integrator.
pub const ODE_REL_TOL: f64 = 1e-9;

/// Absolute local error floor per accepted step of the branch integrator.
pub const ODE_ABS_TOL: f64 = 1e-11;

/// Maximum |f'| the integrator accepts when handing over to the algebraic
/// branch: the switch fires where `|lambda - H(x, f)| <= a(x) * SLOPE_CAP`.
pub const SLOPE_CAP: f64 = 1e3;

/// Continuity budget at component/zero-set junctions for assembled correctors.
pub const JUNCTION_TOL: f64 = 1e-6;

/// Default output grid spacing for corrector profiles.
pub const GRID_DX: f64 = 1e-3;

/// Calibration constant in the explicit Lipschitz/Hoelder bounds.
pub const C_GAMMA: f64 = 10.0;

/// Exclusion-zone half-width around the minimizer for the strict
/// quasiconvexity (slope modulus) check. The modulus is certified for
/// momenta at least this far from `p_hat`, which is where the cell pipeline
/// applies it (sublevel endpoints sit at unit-order distance for the levels
/// visited). A quartic penalty has vanishing slope at `p_hat` itself, so no
/// positive modulus can hold all the way in.
pub const SQC_ZONE: f64 = 1.0;

/// Safety factor applied to the CFL bound of the parabolic scheme.
pub const CFL_SAFETY: f64 = 0.9;

/// Machine-level slack used when comparing quantities that are exact in real
/// arithmetic (shift composition, periodic translates).
pub const MACHINE_SLACK: f64 = 1e-12;
