//! IMEX time integration of one regularized level.
//!
//! Scheme per step, on a uniform cell-centered grid with reflecting ghost
//! cells (`u_x = w_x = 0` at the boundary; `d_eps` has zero boundary slope by
//! construction, so zero boundary-face fluxes realize the no-flux condition):
//!
//! - `u`: implicit composite diffusion `(d_eps u)_xx`, discretized as the
//!   second difference of the product `q = d_eps u` (the drift part
//!   `(d_eps_x u)_x` is genuinely part of the operator and must not be
//!   rewritten as `div(d_eps grad u)`); explicit upwind taxis flux
//!   `F = V u_upwind` with face velocity `V = d_eps w_x / (1 + eta u_upwind)^2`;
//!   explicit reaction `u f` at the old time level. The implicit matrix is a
//!   column-diagonally-dominant M-matrix whose columns sum to 1, so the
//!   update preserves positivity and telescopes mass exactly.
//! - `w`: explicit absorption `-u/(1+eta u) g(w)` at the old time level,
//!   plus the artificial diffusion `eps (w_x / sqrt(g(w)))_x` treated
//!   semi-implicitly with the coefficient `eps / sqrt(g(w))` lagged at the
//!   old time level (symmetric M-matrix, discrete maximum principle).
//!
//! Time accuracy is first order; the verification targets are inequalities
//! and limits, not high-order accuracy.

use crate::estimates::{self, StepMonitors};
use crate::grid::{face_gradient, integrate, Field, Grid1D};
use crate::problem::{DerivedConstants, ProblemSpec};
use crate::reg::RegLevel;
use crate::{Error, Result};

/// Discrete solution at one time.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub w: Field,
}

/// Stepping knobs and blow-up detector ceilings.
#[derive(Debug, Clone, Copy)]
pub struct StepControls {
    /// Courant factor applied to the stability-derived bounds, in (0, 1].
    pub cfl: f64,
    /// Hard cap on the step size (not scaled by `cfl`).
    pub dt_max: f64,
    /// Absolute tolerance on the lower barrier check for `w`.
    pub tol_lb: f64,
    /// Absolute tolerance on the upper bound check for `w`.
    pub tol_ub: f64,
    /// Semi-implicit treatment of the `w`-diffusion (on by default).
    pub theta_w: bool,
    /// Extensibility-criterion ceilings: `||u||_inf`,
    /// `max|w| + max|w_x|`, and `1 / min g(w)`.
    pub ceil_u_inf: f64,
    pub ceil_w_w12: f64,
    pub ceil_inv_g: f64,
}

impl StepControls {
    /// Defaults for a given grid: `cfl = 0.45`, `dt_max = h/4` (so the time
    /// error scales with resolution), barrier tolerances `1e-8`, generous
    /// detector ceilings.
    pub fn for_grid(grid: &Grid1D) -> Self {
        Self {
            cfl: 0.45,
            dt_max: grid.h / 4.0,
            tol_lb: 1e-8,
            tol_ub: 1e-8,
            theta_w: true,
            ceil_u_inf: 1e9,
            ceil_w_w12: 1e9,
            ceil_inv_g: 1e12,
        }
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepDiag {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_w: f64,
    pub max_w: f64,
    /// Entropy `int u ln u + (1/2) int d_eps w_x^2 / g(w)`.
    pub entropy_y: f64,
    /// Dissipation rate paired with the entropy.
    pub dissipation_h: f64,
    pub monitors: StepMonitors,
}

/// Which surrogate of the extensibility criterion fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpQuantity {
    UInf,
    WSobolev,
    InvG,
    Positivity,
}

impl std::fmt::Display for BlowUpQuantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BlowUpQuantity::UInf => "sup |u|",
            BlowUpQuantity::WSobolev => "max|w| + max|w_x|",
            BlowUpQuantity::InvG => "1 / min g(w)",
            BlowUpQuantity::Positivity => "positivity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowUpDetected { t: f64, quantity: BlowUpQuantity },
}

/// A field snapshot at a requested output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub w: Field,
}

/// Full trajectory of one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<StepDiag>,
    pub status: RunStatus,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn completed(&self) -> bool {
        matches!(self.status, RunStatus::Completed)
    }

    pub fn final_state(&self) -> &Snapshot {
        self.snapshots.last().expect("run always records t = 0")
    }
}

/// Face taxis velocities and upwind values.
///
/// The upwind side is decided by the sign of `d_face w_x`, which does not
/// depend on `u`, so the saturated velocity `V = d w_x / (1 + eta u_upw)^2`
/// is well defined.
fn taxis_faces(
    u: &Field,
    w: &Field,
    level: &RegLevel,
    grid: &Grid1D,
    velocities: &mut [f64],
    fluxes: &mut [f64],
) {
    let n = grid.n;
    let eta = level.eta_eps;
    velocities[0] = 0.0;
    velocities[n] = 0.0;
    fluxes[0] = 0.0;
    fluxes[n] = 0.0;
    for f in 1..n {
        let wx = (w[f] - w[f - 1]) / grid.h;
        let dface = 0.5 * (level.d_eps[f - 1] + level.d_eps[f]);
        let s = dface * wx;
        if s == 0.0 {
            velocities[f] = 0.0;
            fluxes[f] = 0.0;
            continue;
        }
        let upw = if s > 0.0 { u[f - 1] } else { u[f] };
        let sat = 1.0 + eta * upw;
        let v = s / (sat * sat);
        velocities[f] = v;
        fluxes[f] = v * upw;
    }
}

/// Largest stable step: Courant bound on the explicit taxis transport, an
/// `h^2` guard for the `w`-diffusion when it is treated explicitly, and the
/// hard cap `dt_max`.
pub fn stable_dt(
    state: &State,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
    controls: &StepControls,
) -> f64 {
    let n = grid.n;
    let mut velocities = vec![0.0; n + 1];
    let mut fluxes = vec![0.0; n + 1];
    taxis_faces(&state.u, &state.w, level, grid, &mut velocities, &mut fluxes);
    let vmax = velocities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut dt = controls.dt_max;
    if vmax > 0.0 {
        dt = dt.min(controls.cfl * grid.h / vmax);
    }
    if !controls.theta_w {
        let mut guard = 1.0f64;
        for f in 1..n {
            let wbar = 0.5 * (state.w[f - 1] + state.w[f]);
            let g = spec.g.eval(wbar).max(0.0);
            guard = guard.min(g.sqrt() / (level.eps + 1e-300));
        }
        dt = dt.min(controls.cfl * grid.h * grid.h * guard.min(1.0));
    }
    dt
}

/// Solve a tridiagonal system in place (Thomas algorithm). `sub[i]` couples
/// row `i` to `i-1`, `sup[i]` couples row `i` to `i+1`.
fn thomas(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    cw: &mut Vec<f64>,
    dw: &mut Vec<f64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    let n = diag.len();
    cw.clear();
    cw.resize(n, 0.0);
    dw.clear();
    dw.resize(n, 0.0);
    out.clear();
    out.resize(n, 0.0);
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::LinearSolveFailure("zero or non-finite pivot at row 0".into()));
    }
    dw[0] = rhs[0] / beta;
    for i in 1..n {
        cw[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * cw[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolveFailure(format!(
                "zero or non-finite pivot at row {i}"
            )));
        }
        dw[i] = (rhs[i] - sub[i] * dw[i - 1]) / beta;
    }
    out[n - 1] = dw[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = dw[i] - cw[i] * out[i + 1];
    }
    Ok(())
}

/// Scratch buffers reused across steps.
struct StepBuffers {
    velocities: Vec<f64>,
    fluxes: Vec<f64>,
    rhs: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    cface: Vec<f64>,
    cw: Vec<f64>,
    dw: Vec<f64>,
    out: Vec<f64>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        Self {
            velocities: vec![0.0; n + 1],
            fluxes: vec![0.0; n + 1],
            rhs: vec![0.0; n],
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            cface: vec![0.0; n + 1],
            cw: Vec::new(),
            dw: Vec::new(),
            out: Vec::new(),
        }
    }
}

fn step_inner(
    state: &State,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
    controls: &StepControls,
    dt: f64,
    bufs: &mut StepBuffers,
) -> Result<State> {
    let n = grid.n;
    let h = grid.h;
    let eta = level.eta_eps;
    let r = dt / (h * h);

    // Explicit taxis fluxes and reaction, then the implicit composite
    // diffusion solve for u.
    taxis_faces(
        &state.u,
        &state.w,
        level,
        grid,
        &mut bufs.velocities,
        &mut bufs.fluxes,
    );
    for i in 0..n {
        let adv = (bufs.fluxes[i + 1] - bufs.fluxes[i]) / h;
        let react = state.u[i] * spec.f.eval(grid.centers[i], state.u[i], state.w[i]);
        bufs.rhs[i] = state.u[i] + dt * (react - adv);
    }
    for i in 0..n {
        bufs.sub[i] = if i > 0 { -r * level.d_eps[i - 1] } else { 0.0 };
        bufs.sup[i] = if i + 1 < n { -r * level.d_eps[i + 1] } else { 0.0 };
        // Reflecting ghost cells: the missing neighbor of a boundary cell is
        // the cell itself, which cancels one diagonal contribution.
        let neighbors = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        bufs.diag[i] = 1.0 + r * neighbors * level.d_eps[i];
    }
    thomas(
        &bufs.sub, &bufs.diag, &bufs.sup, &bufs.rhs, &mut bufs.cw, &mut bufs.dw, &mut bufs.out,
    )?;
    let u_new = Field::new(bufs.out.clone());

    let u_min = u_new.min();
    if u_min < -controls.tol_lb {
        return Err(Error::PositivityLoss {
            quantity: "u",
            t: state.t,
            dt,
            min: u_min,
        });
    }

    // Explicit absorption for w at the old time level.
    for i in 0..n {
        let g = spec.g.eval(state.w[i]);
        if g < -1e-14 {
            return Err(Error::PositivityLoss {
                quantity: "g(w)",
                t: state.t,
                dt,
                min: g,
            });
        }
        let sat = state.u[i] / (1.0 + eta * state.u[i]);
        bufs.rhs[i] = state.w[i] - dt * sat * g.max(0.0);
    }

    // Artificial w-diffusion with lagged coefficient eps / sqrt(g(w^n)).
    bufs.cface[0] = 0.0;
    bufs.cface[n] = 0.0;
    for f in 1..n {
        let wbar = 0.5 * (state.w[f - 1] + state.w[f]);
        let g = spec.g.eval(wbar);
        if g <= 0.0 {
            return Err(Error::PositivityLoss {
                quantity: "g(w)",
                t: state.t,
                dt,
                min: g,
            });
        }
        bufs.cface[f] = level.eps / g.sqrt();
    }
    let w_new = if controls.theta_w {
        for i in 0..n {
            bufs.sub[i] = if i > 0 { -r * bufs.cface[i] } else { 0.0 };
            bufs.sup[i] = if i + 1 < n { -r * bufs.cface[i + 1] } else { 0.0 };
            bufs.diag[i] = 1.0 + r * (bufs.cface[i] + bufs.cface[i + 1]);
        }
        let rhs_w = bufs.rhs.clone();
        thomas(
            &bufs.sub, &bufs.diag, &bufs.sup, &rhs_w, &mut bufs.cw, &mut bufs.dw, &mut bufs.out,
        )?;
        Field::new(bufs.out.clone())
    } else {
        let w = &state.w;
        let mut vals = vec![0.0; n];
        for (i, v) in vals.iter_mut().enumerate() {
            let flux_r = if i + 1 < n {
                bufs.cface[i + 1] * (w[i + 1] - w[i])
            } else {
                0.0
            };
            let flux_l = if i > 0 { bufs.cface[i] * (w[i] - w[i - 1]) } else { 0.0 };
            *v = bufs.rhs[i] + r * (flux_r - flux_l);
        }
        Field::new(vals)
    };

    Ok(State {
        t: state.t + dt,
        u: u_new,
        w: w_new,
    })
}

/// Advance one IMEX step of size `dt` (which must obey [`stable_dt`]).
pub fn step(
    state: &State,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
    controls: &StepControls,
    dt: f64,
) -> Result<State> {
    let mut bufs = StepBuffers::new(grid.n);
    step_inner(state, level, spec, grid, controls, dt, &mut bufs)
}

fn diagnostics(
    state: &State,
    dt: f64,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
) -> StepDiag {
    let monitors = estimates::step_monitors(state, level, spec, grid);
    StepDiag {
        t: state.t,
        dt,
        mass: integrate(&state.u, grid),
        min_u: state.u.min(),
        max_u: state.u.max(),
        min_w: state.w.min(),
        max_w: state.w.max(),
        entropy_y: monitors.entropy_y,
        dissipation_h: monitors.dissipation_h,
        monitors,
    }
}

fn detector(diag: &StepDiag, state: &State, spec: &ProblemSpec, controls: &StepControls, grid: &Grid1D)
    -> Option<BlowUpQuantity>
{
    if diag.max_u.abs() > controls.ceil_u_inf {
        return Some(BlowUpQuantity::UInf);
    }
    let wx = face_gradient(&state.w, grid);
    let wx_max = wx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w_abs = diag.max_w.abs().max(diag.min_w.abs());
    if w_abs + wx_max > controls.ceil_w_w12 {
        return Some(BlowUpQuantity::WSobolev);
    }
    let g_min = state
        .w
        .values
        .iter()
        .map(|&w| spec.g.eval(w))
        .fold(f64::INFINITY, f64::min);
    let inv_g = if g_min > 0.0 { 1.0 / g_min } else { f64::INFINITY };
    if inv_g > controls.ceil_inv_g {
        return Some(BlowUpQuantity::InvG);
    }
    None
}

/// Integrate one level on `[0, T]`, recording per-step diagnostics and field
/// snapshots at the requested output times (always including `t = 0` and
/// `t = T`). Completion means the extensibility-criterion surrogate never
/// fired below its ceilings.
pub fn run(
    level: &RegLevel,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    t_final: f64,
    controls: &StepControls,
    output_times: &[f64],
) -> Result<RunResult> {
    assert!(t_final > 0.0);
    let mut warnings = Vec::new();
    let gate = level.gate(consts.gamma_upper);
    if t_final > gate {
        warnings.push(format!(
            "level eps = {:e}: horizon T = {} exceeds the gate {:.6}; \
             barrier and entropy bounds are only certified up to the gate",
            level.eps, t_final, gate
        ));
    }

    let mut times: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_final)
        .collect();
    times.push(t_final);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut state = State {
        t: 0.0,
        u: grid.sample(|x| spec.u0.eval(x)),
        w: level.w0_eps.clone(),
    };
    let mut bufs = StepBuffers::new(grid.n);
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        u: state.u.clone(),
        w: state.w.clone(),
    }];
    let mut series = vec![diagnostics(&state, 0.0, level, spec, grid)];
    let mut status = RunStatus::Completed;
    let mut next_out = 0usize;

    while state.t < t_final {
        let mut dt = stable_dt(&state, level, spec, grid, controls);
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvariantViolation(format!(
                "non-positive stable dt = {dt} at t = {}",
                state.t
            )));
        }
        let mut hit_output = None;
        if next_out < times.len() {
            let target = times[next_out];
            if state.t + dt >= target - 1e-13 {
                dt = target - state.t;
                hit_output = Some(target);
            }
        }
        state = step_inner(&state, level, spec, grid, controls, dt, &mut bufs)?;
        if let Some(target) = hit_output {
            state.t = target;
            next_out += 1;
        }

        // Pointwise barrier assertions for w (Lemma-level bounds as runtime
        // checks; the lower barrier is only certified up to the gate).
        let w_max = state.w.max();
        if w_max > consts.m + controls.tol_ub {
            return Err(Error::InvariantViolation(format!(
                "w exceeded its ceiling: max w = {w_max} > M + tol = {}",
                consts.m + controls.tol_ub
            )));
        }
        if state.t <= gate {
            let barrier = level.barrier(state.t, consts.gamma_upper);
            let w_min = state.w.min();
            if w_min < barrier - controls.tol_lb {
                return Err(Error::InvariantViolation(format!(
                    "w dipped below the lower barrier at t = {}: {w_min} < {barrier}",
                    state.t
                )));
            }
        }

        let diag = diagnostics(&state, dt, level, spec, grid);
        series.push(diag);
        if hit_output.is_some() {
            snapshots.push(Snapshot {
                t: state.t,
                u: state.u.clone(),
                w: state.w.clone(),
            });
        }
        if let Some(q) = detector(&diag, &state, spec, controls, grid) {
            status = RunStatus::BlowUpDetected {
                t: state.t,
                quantity: q,
            };
            if snapshots.last().map(|s| s.t) != Some(state.t) {
                snapshots.push(Snapshot {
                    t: state.t,
                    u: state.u.clone(),
                    w: state.w.clone(),
                });
            }
            break;
        }
    }

    Ok(RunResult {
        snapshots,
        series,
        status,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{RateFn, Reaction, SpaceProfile};
    use crate::problem::derive_constants;
    use crate::reg::{build_level, default_a};

    fn flat_spec() -> ProblemSpec {
        ProblemSpec {
            a: 0.0,
            b: 1.0,
            d: SpaceProfile::Constant(1.0),
            f: Reaction::Zero,
            rho: RateFn::Const(0.0),
            g: RateFn::identity(),
            u0: SpaceProfile::Constant(1.0),
            w0: SpaceProfile::Constant(0.5),
            delta: 0.5,
        }
    }

    fn plateau_spec() -> ProblemSpec {
        ProblemSpec {
            a: 0.0,
            b: 1.0,
            d: SpaceProfile::PlateauSq {
                center: 0.5,
                halfwidth: 0.2,
            },
            f: Reaction::Zero,
            rho: RateFn::Const(0.0),
            g: RateFn::identity(),
            u0: SpaceProfile::Cosine {
                offset: 1.0,
                amp: 0.5,
                k: 2,
                a: 0.0,
                len: 1.0,
            },
            w0: SpaceProfile::Cosine {
                offset: 0.5,
                amp: 0.3,
                k: 1,
                a: 0.0,
                len: 1.0,
            },
            delta: 0.2,
        }
    }

    fn controls(grid: &Grid1D) -> StepControls {
        StepControls::for_grid(grid)
    }

    /// Hand-checked single absorption step: u = 1, w = 0.6, eta = 0.25,
    /// dt = 0.1, g = id, constant d: w <- 0.6 - 0.1 * (1/1.25) * 0.6 = 0.552
    /// and u unchanged because every flux vanishes.
    #[test]
    fn single_step_absorption_value() {
        let spec = flat_spec();
        let grid = Grid1D::new(0.0, 1.0, 16).unwrap();
        let level = RegLevel {
            eps: 1e-2,
            d_eps: Field::constant(16, 1.0 + 0.1),
            delta_eps: 1e-2,
            eta_eps: 0.25,
            w0_eps: Field::constant(16, 0.6),
            a_param: default_a(),
        };
        let state = State {
            t: 0.0,
            u: Field::constant(16, 1.0),
            w: Field::constant(16, 0.6),
        };
        let ctrl = controls(&grid);
        let next = step(&state, &level, &spec, &grid, &ctrl, 0.1).unwrap();
        for i in 0..16 {
            assert!((next.u[i] - 1.0).abs() < 1e-13, "u must stay 1: {}", next.u[i]);
            assert!((next.w[i] - 0.552).abs() < 1e-13, "w = {}", next.w[i]);
        }
    }

    #[test]
    fn stable_dt_respects_caps() {
        let spec = flat_spec();
        let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
        let level = RegLevel {
            eps: 1e-2,
            d_eps: Field::constant(100, 1.1),
            delta_eps: 1e-2,
            eta_eps: 0.3,
            w0_eps: Field::constant(100, 0.5),
            a_param: default_a(),
        };
        // Constant w: no taxis, theta_w on => dt = dt_max.
        let state = State {
            t: 0.0,
            u: Field::constant(100, 1.0),
            w: Field::constant(100, 0.5),
        };
        let mut ctrl = controls(&grid);
        ctrl.dt_max = 0.37;
        assert_eq!(stable_dt(&state, &level, &spec, &grid, &ctrl), 0.37);

        // Engineer a face velocity of exactly 1 on a d = 1 level with eta = 0:
        // w jump of h across one face gives w_x = 1.
        let level1 = RegLevel {
            eps: 1e-2,
            d_eps: Field::constant(100, 1.0),
            delta_eps: 1e-2,
            eta_eps: 0.0,
            w0_eps: Field::constant(100, 0.5),
            a_param: default_a(),
        };
        let mut w = vec![0.5; 100];
        for (i, wi) in w.iter_mut().enumerate() {
            if i >= 50 {
                *wi = 0.5 + grid.h;
            }
        }
        let state = State {
            t: 0.0,
            u: Field::constant(100, 1.0),
            w: Field::new(w),
        };
        let mut ctrl = controls(&grid);
        ctrl.dt_max = 1.0;
        ctrl.cfl = 0.45;
        let dt = stable_dt(&state, &level1, &spec, &grid, &ctrl);
        assert!((dt - 0.45 * grid.h).abs() < 1e-12, "dt = {dt}");
    }

    #[test]
    fn mass_is_conserved_without_reaction() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let ctrl = controls(&grid);
        let mut state = State {
            t: 0.0,
            u: grid.sample(|x| spec.u0.eval(x)),
            w: level.w0_eps.clone(),
        };
        let mass0 = integrate(&state.u, &grid);
        for _ in 0..1000 {
            let dt = stable_dt(&state, &level, &spec, &grid, &ctrl);
            state = step(&state, &level, &spec, &grid, &ctrl, dt).unwrap();
        }
        let drift = (integrate(&state.u, &grid) - mass0).abs() / mass0;
        assert!(drift <= 1e-12, "relative mass drift {drift}");
        assert!(state.u.min() >= 0.0, "min u = {}", state.u.min());
    }

    /// The discrete mass identity with reaction: the flux terms telescope, so
    /// each step satisfies int u_new = int u_old + dt int u_old f exactly.
    #[test]
    fn mass_identity_with_reaction() {
        let mut spec = plateau_spec();
        spec.f = Reaction::LogisticU { r: 1.0 };
        spec.rho = RateFn::Const(1.0);
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let ctrl = controls(&grid);
        let mut state = State {
            t: 0.0,
            u: grid.sample(|x| spec.u0.eval(x)),
            w: level.w0_eps.clone(),
        };
        for _ in 0..200 {
            let dt = stable_dt(&state, &level, &spec, &grid, &ctrl);
            let source: f64 = grid.h
                * (0..grid.n)
                    .map(|i| {
                        state.u[i] * spec.f.eval(grid.centers[i], state.u[i], state.w[i])
                    })
                    .sum::<f64>();
            let expected = integrate(&state.u, &grid) + dt * source;
            state = step(&state, &level, &spec, &grid, &ctrl, dt).unwrap();
            let got = integrate(&state.u, &grid);
            assert!(
                (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "identity violated: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn zero_u_stays_zero_and_w_obeys_maximum_principle() {
        let mut spec = flat_spec();
        spec.w0 = SpaceProfile::Cosine {
            offset: 0.5,
            amp: 0.2,
            k: 1,
            a: 0.0,
            len: 1.0,
        };
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = RegLevel {
            eps: 1e-2,
            d_eps: Field::constant(64, 1.1),
            delta_eps: 1e-2,
            eta_eps: 0.3,
            w0_eps: grid.sample(|x| spec.w0.eval(x) + 0.1),
            a_param: default_a(),
        };
        let ctrl = controls(&grid);
        let mut state = State {
            t: 0.0,
            u: Field::constant(64, 0.0),
            w: level.w0_eps.clone(),
        };
        let (mut prev_min, mut prev_max) = (state.w.min(), state.w.max());
        for _ in 0..400 {
            let dt = stable_dt(&state, &level, &spec, &grid, &ctrl);
            state = step(&state, &level, &spec, &grid, &ctrl, dt).unwrap();
            assert_eq!(state.u.max(), 0.0, "u must remain identically zero");
            let (mn, mx) = (state.w.min(), state.w.max());
            assert!(mn >= prev_min - 1e-13, "min w decreased: {mn} < {prev_min}");
            assert!(mx <= prev_max + 1e-13, "max w increased: {mx} > {prev_max}");
            prev_min = mn;
            prev_max = mx;
        }
        // Pure eps-diffusion drives w toward its mean: the cos(pi x) mode
        // decays at rate ~ eps pi^2 / sqrt(w_mean) ~ 0.127, so after
        // T = 400 h/4 ~ 1.56 the contrast 0.4 shrinks to ~0.33.
        assert!(state.w.max() - state.w.min() < 0.35);
    }

    #[test]
    fn run_completes_and_detector_plumbing_fires() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let ctrl = controls(&grid);
        let out: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let result = run(&level, &spec, &consts, &grid, 1.0, &ctrl, &out).unwrap();
        assert!(result.completed());
        assert_eq!(result.snapshots.len(), 11);
        for (s, &t) in result.snapshots.iter().zip(&out) {
            assert!((s.t - t).abs() < 1e-12, "snapshot time {} vs {t}", s.t);
        }
        let mass0 = result.series[0].mass;
        let mass1 = result.series.last().unwrap().mass;
        assert!(((mass1 - mass0) / mass0).abs() < 1e-10);

        // Absurdly low ceiling trips the detector immediately.
        let mut low = ctrl;
        low.ceil_u_inf = 0.5 * result.series[0].max_u;
        let tripped = run(&level, &spec, &consts, &grid, 1.0, &low, &out).unwrap();
        match tripped.status {
            RunStatus::BlowUpDetected { quantity, .. } => {
                assert_eq!(quantity, BlowUpQuantity::UInf)
            }
            RunStatus::Completed => panic!("detector must fire"),
        }
        assert!(tripped.series.len() <= 3, "must stop at once");
    }

    #[test]
    fn run_beyond_gate_warns() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
        // Gate of eps = 1e-2 is ~0.74 < 1.
        let level = build_level(&spec, &consts, &grid, 1e-2, default_a()).unwrap();
        let ctrl = controls(&grid);
        let result = run(&level, &spec, &consts, &grid, 1.0, &ctrl, &[]).unwrap();
        assert!(result.completed());
        assert_eq!(result.warnings.len(), 1);
    }

    #[test]
    fn explicit_w_diffusion_matches_semi_implicit_to_first_order() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let mut ctrl = controls(&grid);
        ctrl.dt_max = 1e-4;
        let state = State {
            t: 0.0,
            u: grid.sample(|x| spec.u0.eval(x)),
            w: level.w0_eps.clone(),
        };
        let implicit = step(&state, &level, &spec, &grid, &ctrl, 1e-4).unwrap();
        ctrl.theta_w = false;
        let explicit = step(&state, &level, &spec, &grid, &ctrl, 1e-4).unwrap();
        for i in 0..grid.n {
            assert!(
                (implicit.w[i] - explicit.w[i]).abs() < 1e-8,
                "theta splitting differs beyond O(dt^2) at cell {i}"
            );
        }
    }
}
