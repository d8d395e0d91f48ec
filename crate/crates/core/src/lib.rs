//! Effective Hamiltonians of the one-dimensional degenerate viscous
//! Hamilton-Jacobi equation
//!
//! ```text
//!     du/dt = a(x) u_xx + H(x, u_x)
//! ```
//!
//! where the diffusion coefficient `a = sqrt_a^2 >= 0` vanishes on a nonempty
//! zero set and `H(x, .)` is coercive and quasiconvex. The homogenized (or
//! effective) Hamiltonian `Hbar` is constructed from correctors of the
//! stationary cell problem
//!
//! ```text
//!     a(x) u'' + H(x, u') = lambda,
//! ```
//!
//! whose sublinear solutions exist exactly for lambda at or above a critical
//! value lambda_0. For each admissible level the equation restricted to a
//! component of `{a > 0}` reduces to a scalar first-order ODE for `f = u'`
//! with prescribed boundary values on the zero set; gluing the upper (resp.
//! lower) branch across components yields correctors whose average slope
//! `theta_plus(lambda)` (resp. `theta_minus(lambda)`) parametrizes the two
//! monotone wings of `Hbar`. Between `theta_minus(lambda_0)` and
//! `theta_plus(lambda_0)` the effective Hamiltonian is flat at `lambda_0`.
//!
//! Module map:
//!
//! * [`hamlib`]: Hamiltonian evaluators, pointwise minimization and sublevel
//!   endpoints in the momentum variable, the strictification that turns a
//!   merely quasiconvex Hamiltonian into a strictly quasiconvex one, and the
//!   explicit Lipschitz/Hoelder regularity bounds.
//! * [`environment`]: diffusion coefficients, full environments (periodic or
//!   seeded stationary-random), hypothesis validation, exact shifts, and the
//!   decomposition of a window into components of `{a > 0}`.
//! * [`cell`]: the stiff branch integrator for the component ODE, the
//!   feasibility predicate, the critical value bisection, corrector assembly,
//!   residual diagnostics, branch-merging (Gronwall) checks, and the bridged
//!   supersolution used by the flat-part argument.
//! * [`effective`]: average corrector slopes, the effective curve
//!   `lambda -> (theta_minus, theta_plus)`, its monotone inverse
//!   `theta -> Hbar(theta)`, and structural audits.
//! * [`parabolic`]: a monotone explicit finite-difference solver for the
//!   time-dependent equation with linear initial data, an independent oracle
//!   for `Hbar` through the long-time limit `u(t, 0)/t`.
//! * [`pipeline`]: configuration, manifests, checkpointed stage execution and
//!   CSV emission shared by the CLI.

pub mod cell;
pub mod effective;
pub mod environment;
pub mod hamlib;
pub mod parabolic;
pub mod pipeline;
pub mod rng;
pub mod tol;
