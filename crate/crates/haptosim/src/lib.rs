//! 1D solver and verification harness for a strongly degenerate
//! haptotaxis system.
//!
//! The continuous model couples a cell density `u` and a tissue variable `w`
//! on an interval:
//!
//! ```text
//! u_t = (d(x) u)_xx - (d(x) u w_x)_x + u f(x,u,w)
//! w_t = -u g(w)
//! ```
//!
//! with zero total flux at the boundary. The diffusion coefficient `d` may
//! vanish on a subregion, where the PDE degenerates into the pointwise ODE
//! system `u_t = u f`, `w_t = -u g(w)`.
//!
//! The harness builds a family of non-degenerate approximations indexed by a
//! regularization parameter `eps` (floored smoothed diffusion, artificial
//! `w`-diffusion of size `eps`, saturated absorption), integrates each level
//! with a positivity-preserving IMEX finite-volume scheme, and certifies a
//! suite of a priori bounds (mass growth, pointwise barriers for `w`, an
//! entropy/dissipation budget, weighted gradient estimates) together with the
//! empirical `eps -> 0` convergence of the family: Cauchy tables on the
//! non-degenerate region, agreement with the limit ODE inside the degeneracy
//! set, and weak-form residuals of the limit system.
//!
//! Modules:
//! - [`func`]: tagged scalar function families (profiles in `x`, rates in `w`,
//!   reaction terms) with analytic derivatives.
//! - [`grid`]: uniform cell-centered grid, face operators, degeneracy masks.
//! - [`problem`]: the continuous problem, derived constants, hypothesis checks.
//! - [`reg`]: the regularization family (`d_eps`, `delta_eps`, `eta_eps`,
//!   lifted initial data) and the horizon gate.
//! - [`solver`]: IMEX time integration of one regularized level.
//! - [`limit_ode`]: the pointwise ODE system on the degeneracy set.
//! - [`estimates`]: estimate monitors with explicit constants.
//! - [`experiments`]: eps-sweeps, Cauchy tables, ODE comparison, weak residuals.
//! - [`config`], [`report`]: config parsing and CSV/SVG emission.

pub mod config;
pub mod estimates;
pub mod experiments;
pub mod func;
pub mod grid;
pub mod limit_ode;
pub mod problem;
pub mod reg;
pub mod report;
pub mod solver;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("g is nonpositive on (0, M]: g({w}) = {value}")]
    NonpositiveGamma { w: f64, value: f64 },
    #[error("g' is nonpositive on [0, M]: g'({w}) = {value}")]
    NonmonotoneG { w: f64, value: f64 },
    #[error("psi is nonpositive at v = {v}: psi = {value}")]
    NonpositivePsi { v: f64, value: f64 },
    #[error("bisection bracket failure: g({hi}) = {ghi} <= eps = {eps}")]
    BracketFailure { hi: f64, ghi: f64, eps: f64 },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("positivity loss in {quantity} at t = {t}, dt = {dt}: min = {min}")]
    PositivityLoss {
        quantity: &'static str,
        t: f64,
        dt: f64,
        min: f64,
    },
    #[error("tridiagonal solve failure: {0}")]
    LinearSolveFailure(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("empty schedule")]
    EmptySchedule,
    #[error("no interior degenerate cells (increase grid resolution or reduce margin)")]
    NoDegeneracy,
    #[error("level {index} (eps = {eps}): {source}")]
    Level {
        index: usize,
        eps: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: invalid value for `{key}`: {msg}")]
    InvalidValue {
        path: String,
        line: usize,
        key: String,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the identity of the regularization level it came from.
    pub fn at_level(self, index: usize, eps: f64) -> Error {
        Error::Level {
            index,
            eps,
            source: Box::new(self),
        }
    }
}
