//! The pointwise ODE system governing the dynamics inside the degeneracy set:
//!
//! ```text
//! u_t = u f(x, u, w),    w_t = -u g(w)
//! ```
//!
//! solved per location with classical RK4. Inside `{d = 0}` the PDE loses
//! every spatial coupling, so these trajectories are the oracle against which
//! the regularized runs are compared deep in the plateau.

use crate::grid::{DegeneracyMask, Grid1D};
use crate::problem::{DerivedConstants, ProblemSpec};
use crate::{Error, Result};

/// A single-location trajectory at the requested output times.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub x: f64,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

/// Integrate the limit ODE at location `x` from data `(u0, w0)` up to `T`,
/// sampling at `output_times` (always including 0 and `T`).
///
/// The trajectory invariants are asserted at every output time with `1e-9`
/// slack: `u >= 0`, `0 <= w <= M`, `u <= u0 e^{rho(M) t}`, and `w`
/// nonincreasing. A violation signals a too-large `dt` or inadmissible data.
pub fn solve_limit_ode(
    x: f64,
    u0: f64,
    w0: f64,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    t_final: f64,
    dt: f64,
    output_times: &[f64],
) -> Result<OdeTrajectory> {
    if u0 < 0.0 || w0 < 0.0 {
        return Err(Error::DomainError(format!(
            "limit ODE needs nonnegative data, got u0 = {u0}, w0 = {w0}"
        )));
    }
    let mut times: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_final)
        .collect();
    times.push(t_final);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let rhs = |u: f64, w: f64| -> (f64, f64) {
        (u * spec.f.eval(x, u, w), -u * spec.g.eval(w.max(0.0)))
    };
    let rk4 = |u: f64, w: f64, h: f64| -> (f64, f64) {
        let (k1u, k1w) = rhs(u, w);
        let (k2u, k2w) = rhs(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
        let (k3u, k3w) = rhs(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
        let (k4u, k4w) = rhs(u + h * k3u, w + h * k3w);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    };

    let slack = 1e-9;
    let mut out = OdeTrajectory {
        x,
        times: vec![0.0],
        u: vec![u0],
        w: vec![w0],
    };
    let (mut t, mut u, mut w) = (0.0f64, u0, w0);
    let mut w_prev_out = w0;
    for &target in &times {
        while t < target - 1e-14 {
            let h = dt.min(target - t);
            let (nu, nw) = rk4(u, w, h);
            u = nu;
            w = nw;
            t += h;
        }
        t = target;
        let u_cap = u0 * (consts.rho_m * t).exp();
        if u < -slack
            || w < -slack
            || w > consts.m + slack
            || u > u_cap + slack * u_cap.max(1.0)
            || w > w_prev_out + slack
        {
            return Err(Error::InvariantViolation(format!(
                "limit ODE bounds broken at x = {x}, t = {t}: u = {u}, w = {w} \
                 (caps: u <= {u_cap}, 0 <= w <= {} nonincreasing)",
                consts.m
            )));
        }
        out.times.push(t);
        out.u.push(u);
        out.w.push(w);
        w_prev_out = w;
    }
    Ok(out)
}

/// Solve the limit ODE at every zero cell of the mask, with that cell's
/// sampled initial data. `w0_shift` lifts the initial tissue datum (pass
/// `sqrt(delta_eps)` to match a regularized level, 0 for the limit problem).
pub fn solve_limit_field(
    mask: &DegeneracyMask,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    t_final: f64,
    dt: f64,
    output_times: &[f64],
    w0_shift: f64,
) -> Result<Vec<(usize, OdeTrajectory)>> {
    let mut out = Vec::new();
    for i in 0..grid.n {
        if !mask.zero_cells[i] {
            continue;
        }
        let x = grid.centers[i];
        let traj = solve_limit_ode(
            x,
            spec.u0.eval(x),
            spec.w0.eval(x) + w0_shift,
            spec,
            consts,
            t_final,
            dt,
            output_times,
        )
        .map_err(|e| e.at_level(i, 0.0))?;
        out.push((i, traj));
    }
    Ok(out)
}

/// Default RK4 step for a horizon `T`: the dynamics are smooth and non-stiff
/// for admissible data, so a fixed small step suffices.
pub fn default_dt(t_final: f64) -> f64 {
    (1e-3f64).min(t_final / 1000.0)
}
