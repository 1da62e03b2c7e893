//! Estimate monitors: every quantitative a priori bound of the analysis as a
//! computable check with explicit constants.
//!
//! The central object is the entropy
//!
//! ```text
//! y(t) = int u ln u + (1/2) int d_eps w_x^2 / g(w)
//! ```
//!
//! paired with the dissipation rate
//!
//! ```text
//! h(t) = (1/2) int d_eps u_x^2 / u
//!      + (1/2) int d_eps u/(1+eta u) (g'/g)(w) w_x^2
//!      + int_{u >= 1} u ln u f_-(x, u, w)
//! ```
//!
//! which satisfy the Gronwall inequality `y' + h <= c4 + c5 y` up to the
//! horizon gate of the level, with
//!
//! ```text
//! c1 = (rho(M) + K1/2) (int u0) e^{rho(M) T}
//! c2 = max f_- on [a,b] x [0,1] x [0,M]
//! c3 = (|Omega|/e) (c2 + rho(M))
//! c4 = c1 + c3 + K1 |Omega| / e        c5 = rho(M) + K1
//! c6 = (int u0 ln u0 + (1/2)(||d||+1) int w0_x^2/g(w0 + sqrt(delta_eps)) + c4/c5) e^{c5 T}
//! c7 = c6 + |Omega|/e + c4 T + c5 c6 T
//! ```
//!
//! yielding `y(t) <= c6` and `int_0^T h <= c7`. Bounds whose constants the
//! analysis leaves implicit (the weighted space-time norms of `sqrt(d_eps) u`)
//! are recorded and required to be finite; the two weighted energies inherit
//! explicit constants through `g(w) <= g(M)` and `g'/g >= gamma`.

use crate::func::Reaction;
use crate::grid::{integrate, Grid1D};
use crate::problem::{
    check_degeneracy_geometry, sup_scan, w0_entropy_integral, DerivedConstants, ProblemSpec,
};
use crate::reg::RegLevel;
use crate::solver::{RunResult, State, StepDiag};
use crate::{Error, Result};

/// `xi ln xi`, continuously extended by 0 at `xi = 0`.
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy `int u ln u + (1/2) int d_eps w_x^2 / g(w_bar)` with face-averaged
/// `w` in the weighted gradient term.
pub fn entropy_y(state: &State, level: &RegLevel, spec: &ProblemSpec, grid: &Grid1D) -> Result<f64> {
    let n = grid.n;
    let h = grid.h;
    let mut y: f64 = state.u.values.iter().map(|&u| xlnx(u)).sum::<f64>() * h;
    for f in 1..n {
        let wx = (state.w[f] - state.w[f - 1]) / h;
        let wbar = 0.5 * (state.w[f - 1] + state.w[f]);
        let g = spec.g.eval(wbar);
        if g <= 0.0 {
            return Err(Error::DomainError(format!(
                "g(w_bar) = {g} <= 0 at face {f} in the entropy integrand"
            )));
        }
        let dface = 0.5 * (level.d_eps[f - 1] + level.d_eps[f]);
        y += 0.5 * h * dface * wx * wx / g;
    }
    Ok(y)
}

/// Dissipation rate paired with [`entropy_y`]. Faces with vanishing upwind
/// `u` are skipped in the Fisher-type term; they contribute 0 in the limit.
pub fn dissipation_h(
    state: &State,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
) -> Result<f64> {
    let n = grid.n;
    let h = grid.h;
    let eta = level.eta_eps;
    let mut total = 0.0;
    for f in 1..n {
        let dface = 0.5 * (level.d_eps[f - 1] + level.d_eps[f]);
        let ux = (state.u[f] - state.u[f - 1]) / h;
        let wx = (state.w[f] - state.w[f - 1]) / h;
        let wbar = 0.5 * (state.w[f - 1] + state.w[f]);
        let g = spec.g.eval(wbar);
        if g <= 0.0 {
            return Err(Error::DomainError(format!(
                "g(w_bar) = {g} <= 0 at face {f} in the dissipation integrand"
            )));
        }
        // Upwind u w.r.t. the taxis drift direction, face average when the
        // drift vanishes.
        let s = dface * wx;
        let u_upw = if s > 0.0 {
            state.u[f - 1]
        } else if s < 0.0 {
            state.u[f]
        } else {
            0.5 * (state.u[f - 1] + state.u[f])
        };
        if u_upw >= 1e-300 {
            total += 0.5 * h * dface * ux * ux / u_upw;
        }
        let ubar = 0.5 * (state.u[f - 1] + state.u[f]);
        total += 0.5 * h * dface * (ubar / (1.0 + eta * ubar)) * (spec.g.deriv(wbar) / g) * wx * wx;
    }
    for i in 0..n {
        let u = state.u[i];
        if u >= 1.0 {
            total += h * xlnx(u) * spec.f.neg_part(grid.centers[i], u, state.w[i]);
        }
    }
    Ok(total)
}

/// Per-step scalar monitors recorded alongside the entropy pair.
#[derive(Debug, Clone, Copy)]
pub struct StepMonitors {
    pub entropy_y: f64,
    pub dissipation_h: f64,
    /// `int d_eps w_x^2`
    pub w_grad_energy: f64,
    /// `int d_eps u/(1+eta u) w_x^2`
    pub taxis_energy: f64,
    /// `|| (sqrt(d_eps) u)_x ||_{L^1}`
    pub grad_sqrt_du_l1: f64,
    /// `|| sqrt(d_eps) u ||_inf`
    pub sqrt_du_linf: f64,
    /// `int d_eps^{3/2} u^3`
    pub cube_weighted: f64,
}

/// Evaluate all per-step monitors; entropy and dissipation become NaN when
/// their integrand leaves its domain (recorded, audited as failures).
pub fn step_monitors(
    state: &State,
    level: &RegLevel,
    spec: &ProblemSpec,
    grid: &Grid1D,
) -> StepMonitors {
    let n = grid.n;
    let h = grid.h;
    let eta = level.eta_eps;
    let mut w_grad_energy = 0.0;
    let mut taxis_energy = 0.0;
    let mut grad_l1 = 0.0;
    for f in 1..n {
        let dface = 0.5 * (level.d_eps[f - 1] + level.d_eps[f]);
        let wx = (state.w[f] - state.w[f - 1]) / h;
        w_grad_energy += h * dface * wx * wx;
        let ubar = 0.5 * (state.u[f - 1] + state.u[f]);
        taxis_energy += h * dface * (ubar / (1.0 + eta * ubar)) * wx * wx;
        let ql = level.d_eps[f - 1].sqrt() * state.u[f - 1];
        let qr = level.d_eps[f].sqrt() * state.u[f];
        grad_l1 += (qr - ql).abs();
    }
    let sqrt_du_linf = (0..n)
        .map(|i| level.d_eps[i].sqrt() * state.u[i])
        .fold(0.0f64, f64::max);
    let cube_weighted = h
        * (0..n)
            .map(|i| level.d_eps[i].powf(1.5) * state.u[i].powi(3))
            .sum::<f64>();
    StepMonitors {
        entropy_y: entropy_y(state, level, spec, grid).unwrap_or(f64::NAN),
        dissipation_h: dissipation_h(state, level, spec, grid).unwrap_or(f64::NAN),
        w_grad_energy,
        taxis_energy,
        grad_sqrt_du_l1: grad_l1,
        sqrt_du_linf,
        cube_weighted,
    }
}

/// The explicit constants of the entropy inequality on `[0, T]`.
#[derive(Debug, Clone, Copy)]
pub struct EntropyConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
}

/// Compute `c1..c7` for a level and horizon `T` (which must not exceed the
/// level's gate for the bounds to be meaningful).
pub fn constants_c(
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    level: &RegLevel,
    grid: &Grid1D,
    t: f64,
) -> EntropyConstants {
    let len = spec.length();
    let e = std::f64::consts::E;
    let u0 = grid.sample(|x| spec.u0.eval(x));
    let m0 = integrate(&u0, grid);
    let c1 = (consts.rho_m + consts.k1 / 2.0) * m0 * (consts.rho_m * t).exp();

    // c2 = max f_- over [a,b] x [0,1] x [0,M], dense lattice capped at 101^3.
    let nl = 101;
    let mut c2: f64 = 0.0;
    for i in 0..=nl {
        let x = spec.a + len * i as f64 / nl as f64;
        for j in 0..=nl {
            let u = j as f64 / nl as f64;
            for k in 0..=nl {
                let w = consts.m * k as f64 / nl as f64;
                c2 = c2.max(spec.f.neg_part(x, u, w));
            }
        }
    }

    let c3 = len / e * (c2 + consts.rho_m);
    let c4 = c1 + c3 + consts.k1 * len / e;
    let c5 = consts.rho_m + consts.k1;

    let d_inf = sup_scan(|x| spec.d.eval(x), spec.a, spec.b, 8 * grid.n);
    let i_w0 = w0_entropy_integral(spec, 8 * grid.n, level.delta_eps.sqrt());
    let y0 = grid.h * grid.centers.iter().map(|&x| xlnx(spec.u0.eval(x))).sum::<f64>()
        + 0.5 * (d_inf + 1.0) * i_w0;
    let c6 = if c5 > 0.0 {
        (y0 + c4 / c5) * (c5 * t).exp()
    } else {
        y0 + c4 * t
    };
    let c7 = c6 + len / e + c4 * t + c5 * c6 * t;
    EntropyConstants {
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
    }
}

/// One audited check: `observed` is the worst value seen, `margin` the slack
/// toward the bound (nonnegative means the bound holds).
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: &'static str,
    pub bound: f64,
    pub observed: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Row of the equi-integrability table.
#[derive(Debug, Clone, Copy)]
pub struct EquiRow {
    pub threshold: f64,
    pub kappa: f64,
    /// Space-time measure of `{u >= kappa(N)}`.
    pub superlevel_measure: f64,
    /// `int int_{u >= kappa(N)} u f_-`.
    pub tail_reaction: f64,
    /// `int int_{u >= N} u g(w)`.
    pub tail_absorption: f64,
}

/// Full audit of one run.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub checks: Vec<CheckRow>,
    pub constants: EntropyConstants,
    /// Horizon actually audited for the gate-dependent bounds.
    pub t_window: f64,
    pub kappa_table: Vec<(f64, f64)>,
    pub equi_table: Vec<EquiRow>,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRow> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn trapz_series(series: &[StepDiag], t_max: f64, f: impl Fn(&StepDiag) -> f64) -> f64 {
    let mut total = 0.0;
    for pair in series.windows(2) {
        if pair[1].t > t_max + 1e-12 {
            break;
        }
        total += 0.5 * (pair[1].t - pair[0].t) * (f(&pair[0]) + f(&pair[1]));
    }
    total
}

fn upper_bound_row(name: &'static str, bound: f64, observed: f64, tol: f64) -> CheckRow {
    let margin = bound - observed;
    CheckRow {
        name,
        bound,
        observed,
        margin,
        pass: observed.is_finite() && observed <= bound + tol,
    }
}

fn recorded_row(name: &'static str, observed: f64) -> CheckRow {
    CheckRow {
        name,
        bound: f64::INFINITY,
        observed,
        margin: f64::INFINITY,
        pass: observed.is_finite(),
    }
}

/// Audit a completed run against every lemma-derived bound.
pub fn audit_run(
    result: &RunResult,
    level: &RegLevel,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    t: f64,
) -> EstimateReport {
    let gate = level.gate(consts.gamma_upper);
    let t_window = t.min(gate);
    let constants = constants_c(spec, consts, level, grid, t_window);
    let mut checks = Vec::new();

    // Mass growth: mass(t) <= (int u0) e^{rho(M) t}, checked on the per-step
    // series and on the stored snapshots.
    let m0 = result.series[0].mass;
    let mut mass_ratio: f64 = 0.0;
    for d in &result.series {
        mass_ratio = mass_ratio.max(d.mass / (m0 * (consts.rho_m * d.t).exp()));
    }
    for s in &result.snapshots {
        let mass = integrate(&s.u, grid);
        mass_ratio = mass_ratio.max(mass / (m0 * (consts.rho_m * s.t).exp()));
    }
    checks.push(upper_bound_row("mass_growth", 1.0 + 1e-10, mass_ratio, 0.0));

    // Pointwise bounds for w.
    let w_max = result
        .series
        .iter()
        .map(|d| d.max_w)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(upper_bound_row(
        "w_upper",
        consts.m + 1e-8,
        w_max,
        0.0,
    ));
    let mut lower_gap = f64::INFINITY;
    for d in &result.series {
        if d.t <= gate + 1e-12 {
            lower_gap = lower_gap.min(d.min_w - level.barrier(d.t, consts.gamma_upper));
        }
    }
    checks.push(CheckRow {
        name: "w_lower",
        bound: -1e-8,
        observed: lower_gap,
        margin: lower_gap + 1e-8,
        pass: lower_gap.is_finite() && lower_gap >= -1e-8,
    });

    // Entropy bound y(t) <= c6 on [0, min(T, gate)].
    let y_max = result
        .series
        .iter()
        .filter(|d| d.t <= t_window + 1e-12)
        .map(|d| d.entropy_y)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(upper_bound_row(
        "entropy_bound",
        constants.c6,
        y_max,
        1e-9 * constants.c6.abs().max(1.0),
    ));

    // Dissipation budget int_0^T h <= c7 (trapezoid in t).
    let h_int = trapz_series(&result.series, t_window, |d| d.dissipation_h);
    checks.push(upper_bound_row(
        "dissipation_budget",
        constants.c7,
        h_int,
        1e-9 * constants.c7.abs().max(1.0),
    ));

    // Weighted gradient energy sup_t int d_eps w_x^2 <= 2 g(M) (c6 + |Omega|/e),
    // via g(w) <= g(M) and int u ln u >= -|Omega|/e.
    let e = std::f64::consts::E;
    let w_grad_sup = result
        .series
        .iter()
        .filter(|d| d.t <= t_window + 1e-12)
        .map(|d| d.monitors.w_grad_energy)
        .fold(0.0f64, f64::max);
    checks.push(upper_bound_row(
        "weighted_w_grad",
        2.0 * consts.g_m * (constants.c6 + spec.length() / e),
        w_grad_sup,
        0.0,
    ));

    // Weighted taxis energy int int d_eps u/(1+eta u) w_x^2 <= 2 c7 / gamma,
    // via g'/g >= gamma.
    let taxis_int = trapz_series(&result.series, t_window, |d| d.monitors.taxis_energy);
    checks.push(upper_bound_row(
        "weighted_taxis_energy",
        2.0 * constants.c7 / consts.gamma_low,
        taxis_int,
        0.0,
    ));

    // Space-time norms of sqrt(d_eps) u: recorded, required finite.
    let l1_grad_sq = trapz_series(&result.series, t_window, |d| {
        d.monitors.grad_sqrt_du_l1.powi(2)
    });
    checks.push(recorded_row("l1_grad_sq", l1_grad_sq));
    let linf_sq = trapz_series(&result.series, t_window, |d| d.monitors.sqrt_du_linf.powi(2));
    checks.push(recorded_row("linf_sq", linf_sq));
    let l3 = trapz_series(&result.series, t_window, |d| d.monitors.cube_weighted);
    checks.push(recorded_row("l3_weighted", l3));

    // kappa(N) monotonicity table.
    let u_seen = result
        .series
        .iter()
        .map(|d| d.max_u)
        .fold(0.0f64, f64::max);
    let u_scan = (10.0 * u_seen).max(10.0);
    let thresholds = [1.0, 2.0, 4.0, 8.0];
    let kappa_table: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&n| {
            (
                n,
                kappa_of_n(&spec.f, spec.a, spec.b, consts.m, n, u_scan, 400).value,
            )
        })
        .collect();
    let mut kappa_violation: f64 = 0.0;
    for pair in kappa_table.windows(2) {
        if pair[0].1 > pair[1].1 {
            kappa_violation = kappa_violation.max(pair[0].1 - pair[1].1);
        }
    }
    checks.push(upper_bound_row("kappa_table", 0.0, kappa_violation, 1e-12));

    // Equi-integrability tails, nonincreasing in N.
    let equi_table = equiintegrability_profile(result, spec, consts, grid, &thresholds);
    let mut equi_violation: f64 = 0.0;
    for pair in equi_table.windows(2) {
        equi_violation = equi_violation
            .max(pair[1].superlevel_measure - pair[0].superlevel_measure)
            .max(pair[1].tail_reaction - pair[0].tail_reaction)
            .max(pair[1].tail_absorption - pair[0].tail_absorption);
    }
    checks.push(upper_bound_row(
        "equiintegrability_table",
        0.0,
        equi_violation,
        1e-12,
    ));

    // Quadratic decay of d toward its zero set.
    let d_vals: Vec<f64> = grid.centers.iter().map(|&x| spec.d.eval(x)).collect();
    let tol_zero = 1e-14 * d_vals.iter().fold(1.0f64, |m, &v| m.max(v));
    let geo = check_degeneracy_geometry(&grid.centers, &d_vals, consts.k1, tol_zero);
    checks.push(upper_bound_row(
        "dist_sq_geometry",
        1.0 + 1e-6,
        geo.max_ratio,
        0.0,
    ));

    EstimateReport {
        checks,
        constants,
        t_window,
        kappa_table,
        equi_table,
    }
}

/// Result of the superlevel threshold scan.
#[derive(Debug, Clone, Copy)]
pub struct KappaResult {
    /// Smallest `u` with `u f_-(x, u, w) >= N` for some admissible `(x, w)`;
    /// `+inf` when no such `u` exists below the scan ceiling.
    pub value: f64,
    /// The crossing sits at (or beyond) the scan ceiling `u_max_scan`; the
    /// scan window should be enlarged.
    pub at_scan_boundary: bool,
}

/// Brute-force evaluation of `kappa(N) = inf { u : u f_-(x,u,w) >= N }` over
/// the lattice `[a,b] x [0, u_max_scan] x [0, M]`, refined by bisection in
/// `u` to absolute tolerance 1e-10.
pub fn kappa_of_n(
    f: &Reaction,
    a: f64,
    b: f64,
    m: f64,
    n_threshold: f64,
    u_max_scan: f64,
    n_scan: usize,
) -> KappaResult {
    assert!(n_threshold > 0.0);
    let nxw = n_scan.min(64).max(8);
    let worst = |u: f64| -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..=nxw {
            let x = a + (b - a) * i as f64 / nxw as f64;
            for k in 0..=nxw {
                let w = m * k as f64 / nxw as f64;
                best = best.max(u * f.neg_part(x, u, w));
            }
        }
        best
    };
    let mut prev_u = 0.0;
    for j in 1..=n_scan {
        let u = u_max_scan * j as f64 / n_scan as f64;
        if worst(u) >= n_threshold {
            let (mut lo, mut hi) = (prev_u, u);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if worst(mid) >= n_threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return KappaResult {
                value: 0.5 * (lo + hi),
                at_scan_boundary: j == n_scan,
            };
        }
        prev_u = u;
    }
    // No crossing below the ceiling. If f has a negative part at all, the
    // true kappa may be finite beyond the window.
    KappaResult {
        value: f64::INFINITY,
        at_scan_boundary: worst(u_max_scan) > 0.0,
    }
}

/// Space-time superlevel tails per threshold, from the stored snapshots
/// (trapezoid in time).
pub fn equiintegrability_profile(
    result: &RunResult,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    thresholds: &[f64],
) -> Vec<EquiRow> {
    let u_seen = result
        .snapshots
        .iter()
        .map(|s| s.u.max())
        .fold(0.0f64, f64::max);
    let u_scan = (10.0 * u_seen).max(10.0);
    thresholds
        .iter()
        .map(|&n| {
            let kappa = kappa_of_n(&spec.f, spec.a, spec.b, consts.m, n, u_scan, 400).value;
            let per_snapshot = |s: &crate::solver::Snapshot| -> (f64, f64, f64) {
                let mut measure = 0.0;
                let mut tail_f = 0.0;
                let mut tail_g = 0.0;
                for i in 0..grid.n {
                    let u = s.u[i];
                    if u >= kappa {
                        measure += grid.h;
                        tail_f += grid.h * u * spec.f.neg_part(grid.centers[i], u, s.w[i]);
                    }
                    if u >= n {
                        tail_g += grid.h * u * spec.g.eval(s.w[i]);
                    }
                }
                (measure, tail_f, tail_g)
            };
            let vals: Vec<(f64, f64, f64)> = result.snapshots.iter().map(per_snapshot).collect();
            let mut row = EquiRow {
                threshold: n,
                kappa,
                superlevel_measure: 0.0,
                tail_reaction: 0.0,
                tail_absorption: 0.0,
            };
            for (k, pair) in result.snapshots.windows(2).enumerate() {
                let dt = pair[1].t - pair[0].t;
                row.superlevel_measure += 0.5 * dt * (vals[k].0 + vals[k + 1].0);
                row.tail_reaction += 0.5 * dt * (vals[k].1 + vals[k + 1].1);
                row.tail_absorption += 0.5 * dt * (vals[k].2 + vals[k + 1].2);
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{RateFn, SpaceProfile};
    use crate::grid::Field;
    use crate::problem::derive_constants;
    use crate::reg::{build_level, default_a};
    use crate::solver::{run, StepControls};

    fn base_spec(d: SpaceProfile, u0: SpaceProfile, f: Reaction, rho: RateFn) -> ProblemSpec {
        ProblemSpec {
            a: 0.0,
            b: 1.0,
            d,
            f,
            rho,
            g: RateFn::identity(),
            u0,
            w0: SpaceProfile::Constant(0.5),
            delta: 0.5,
        }
    }

    fn dummy_level(n: usize, d: f64, eta: f64) -> RegLevel {
        RegLevel {
            eps: 1e-2,
            d_eps: Field::constant(n, d),
            delta_eps: 1e-2,
            eta_eps: eta,
            w0_eps: Field::constant(n, 0.6),
            a_param: default_a(),
        }
    }

    #[test]
    fn entropy_closed_forms() {
        let spec = base_spec(
            SpaceProfile::Constant(1.0),
            SpaceProfile::Constant(1.0),
            Reaction::Zero,
            RateFn::Const(0.0),
        );
        let grid = Grid1D::new(0.0, 1.0, 50).unwrap();
        let level = dummy_level(50, 1.1, 0.3);

        // u = 1, w constant: y = 0.
        let s = State {
            t: 0.0,
            u: Field::constant(50, 1.0),
            w: Field::constant(50, 0.5),
        };
        assert!(entropy_y(&s, &level, &spec, &grid).unwrap().abs() < 1e-14);

        // u = e: int e ln e = e.
        let s = State {
            t: 0.0,
            u: Field::constant(50, std::f64::consts::E),
            w: Field::constant(50, 0.5),
        };
        let y = entropy_y(&s, &level, &spec, &grid).unwrap();
        assert!((y - std::f64::consts::E).abs() < 1e-12);

        // u = 1/e: the pointwise minimum of xi ln xi, so y = -|Omega|/e exactly.
        let s = State {
            t: 0.0,
            u: Field::constant(50, 1.0 / std::f64::consts::E),
            w: Field::constant(50, 0.5),
        };
        let y = entropy_y(&s, &level, &spec, &grid).unwrap();
        assert!((y + 1.0 / std::f64::consts::E).abs() < 1e-13, "y = {y}");
    }

    #[test]
    fn dissipation_zero_cases_and_independent_quadrature() {
        let spec = base_spec(
            SpaceProfile::Constant(1.0),
            SpaceProfile::Constant(1.0),
            Reaction::Zero,
            RateFn::Const(0.0),
        );
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = dummy_level(64, 1.1, 0.3);

        let s = State {
            t: 0.0,
            u: Field::constant(64, 2.0),
            w: Field::constant(64, 0.5),
        };
        assert_eq!(dissipation_h(&s, &level, &spec, &grid).unwrap(), 0.0);

        // Constant u, varying w, g = id: h reduces to the taxis-energy term
        // (1/2) int d u/(1+eta u) w_x^2 / w. Cross-check against a second,
        // independently written quadrature.
        let w = grid.sample(|x| 0.5 + 0.2 * (std::f64::consts::PI * x).cos());
        let s = State {
            t: 0.0,
            u: Field::constant(64, 2.0),
            w,
        };
        let got = dissipation_h(&s, &level, &spec, &grid).unwrap();
        let mut expected = 0.0;
        for f in 1..64 {
            let wl = s.w[f - 1];
            let wr = s.w[f];
            let wx = (wr - wl) / grid.h;
            let wbar = 0.5 * (wl + wr);
            let sat = 2.0 / (1.0 + 0.3 * 2.0);
            expected += 0.5 * grid.h * 1.1 * sat * wx * wx / wbar;
        }
        assert!(
            (got - expected).abs() < 1e-12,
            "two quadrature routes disagree: {got} vs {expected}"
        );

        // f >= 0 everywhere: the reaction sink contributes nothing.
        let spec_pos = base_spec(
            SpaceProfile::Constant(1.0),
            SpaceProfile::Constant(1.0),
            Reaction::Const(1.0),
            RateFn::Const(1.0),
        );
        let got_pos = dissipation_h(&s, &level, &spec_pos, &grid).unwrap();
        assert!((got_pos - got).abs() < 1e-14);
    }

    #[test]
    fn constants_collapse_and_worked_values() {
        // f = 0: rho(M) = 0, c2 = 0, c3 = 0, c5 = K1; plateau d has K1 = 4
        // and u0 = 1 + cos(2 pi x)/2 integrates to 1.
        let spec = base_spec(
            SpaceProfile::PlateauSq {
                center: 0.5,
                halfwidth: 0.2,
            },
            SpaceProfile::Cosine {
                offset: 1.0,
                amp: 0.5,
                k: 2,
                a: 0.0,
                len: 1.0,
            },
            Reaction::Zero,
            RateFn::Const(0.0),
        );
        let consts = derive_constants(&spec, 2000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let c = constants_c(&spec, &consts, &level, &grid, 1.0);
        assert!((c.c1 - 2.0).abs() < 1e-10, "c1 = {}", c.c1);
        assert_eq!(c.c2, 0.0);
        assert_eq!(c.c3, 0.0);
        assert!((c.c4 - (2.0 + 4.0 / std::f64::consts::E)).abs() < 1e-10);
        assert!((c.c5 - 4.0).abs() < 1e-10);
        assert!(c.c6.is_finite() && c.c7 > c.c6);
    }

    #[test]
    fn constants_are_linear_in_t_when_c5_vanishes() {
        // d constant (K1 = 0) and f = -u (rho = 0, c2 = 1): c5 = 0 and
        // c7 grows linearly in T while c1 stays 0.
        let spec = base_spec(
            SpaceProfile::Constant(1.0),
            SpaceProfile::Constant(1.0),
            Reaction::LogisticU { r: 0.0 },
            RateFn::Const(0.0),
        );
        let consts = derive_constants(&spec, 500).unwrap();
        assert!(consts.k1.abs() < 1e-20);
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let c_t1 = constants_c(&spec, &consts, &level, &grid, 1.0);
        let c_t2 = constants_c(&spec, &consts, &level, &grid, 2.0);
        assert_eq!(c_t1.c1, 0.0);
        assert_eq!(c_t2.c1, 0.0);
        assert!((c_t1.c2 - 1.0).abs() < 1e-12);
        let growth1 = c_t2.c7 - c_t1.c7;
        let c_t3 = constants_c(&spec, &consts, &level, &grid, 3.0);
        let growth2 = c_t3.c7 - c_t2.c7;
        assert!(
            (growth1 - growth2).abs() < 1e-10,
            "c7 must grow linearly: {growth1} vs {growth2}"
        );
    }

    #[test]
    fn kappa_matches_logistic_closed_form() {
        // f = 1 - u: u f_- = u (u - 1) for u >= 1, so kappa(N) solves
        // u^2 - u - N = 0.
        let f = Reaction::LogisticU { r: 1.0 };
        for n in [1.0, 2.0, 8.0] {
            let got = kappa_of_n(&f, 0.0, 1.0, 1.0, n, 15.0, 600);
            let expected = 0.5 * (1.0 + (1.0 + 4.0 * n).sqrt());
            assert!(
                (got.value - expected).abs() < 1e-8,
                "kappa({n}) = {} vs {expected}",
                got.value
            );
            assert!(!got.at_scan_boundary);
        }
        // kappa(2) = 2 exactly.
        let got = kappa_of_n(&f, 0.0, 1.0, 1.0, 2.0, 15.0, 600);
        assert!((got.value - 2.0).abs() < 1e-8);

        // Nonnegative f: empty superlevel set.
        let f_pos = Reaction::Const(0.5);
        let got = kappa_of_n(&f_pos, 0.0, 1.0, 1.0, 1.0, 15.0, 200);
        assert!(got.value.is_infinite() && !got.at_scan_boundary);

        // Monotone in N.
        let mut prev = 0.0;
        for n in [1.0, 2.0, 4.0, 8.0] {
            let k = kappa_of_n(&f, 0.0, 1.0, 1.0, n, 15.0, 400).value;
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn audit_passes_on_plateau_run_and_detects_tampering() {
        let spec = base_spec(
            SpaceProfile::PlateauSq {
                center: 0.5,
                halfwidth: 0.2,
            },
            SpaceProfile::Cosine {
                offset: 1.0,
                amp: 0.5,
                k: 2,
                a: 0.0,
                len: 1.0,
            },
            Reaction::Zero,
            RateFn::Const(0.0),
        );
        let spec = ProblemSpec {
            w0: SpaceProfile::Cosine {
                offset: 0.5,
                amp: 0.3,
                k: 1,
                a: 0.0,
                len: 1.0,
            },
            delta: 0.2,
            ..spec
        };
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-3, default_a()).unwrap();
        let ctrl = StepControls::for_grid(&grid);
        let out: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let result = run(&level, &spec, &consts, &grid, 1.0, &ctrl, &out).unwrap();
        assert!(result.completed());
        let report = audit_run(&result, &level, &spec, &consts, &grid, 1.0);
        assert!(
            report.all_pass(),
            "failing checks: {:?}",
            report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| (c.name, c.observed, c.bound))
                .collect::<Vec<_>>()
        );

        // Determinism: identical input, identical report.
        let report2 = audit_run(&result, &level, &spec, &consts, &grid, 1.0);
        assert_eq!(format!("{report:?}"), format!("{report2:?}"));

        // Tamper with a snapshot: the mass check must fail.
        let mut tampered = result.clone();
        for v in &mut tampered.snapshots[5].u.values {
            *v *= 10.0;
        }
        let bad = audit_run(&tampered, &level, &spec, &consts, &grid, 1.0);
        assert!(!bad.get("mass_growth").unwrap().pass);
    }

    #[test]
    fn equi_tails_are_monotone_in_threshold() {
        let spec = base_spec(
            SpaceProfile::Constant(1.0),
            SpaceProfile::Cosine {
                offset: 1.0,
                amp: 0.5,
                k: 2,
                a: 0.0,
                len: 1.0,
            },
            Reaction::LogisticU { r: 1.0 },
            RateFn::Const(1.0),
        );
        let consts = derive_constants(&spec, 500).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-2, default_a()).unwrap();
        let ctrl = StepControls::for_grid(&grid);
        let out: Vec<f64> = (0..=5).map(|k| 0.05 * k as f64).collect();
        let result = run(&level, &spec, &consts, &grid, 0.25, &ctrl, &out).unwrap();
        let rows = equiintegrability_profile(&result, &spec, &consts, &grid, &[1.0, 10.0, 100.0]);
        for pair in rows.windows(2) {
            assert!(pair[1].superlevel_measure <= pair[0].superlevel_measure + 1e-14);
            assert!(pair[1].tail_reaction <= pair[0].tail_reaction + 1e-14);
            assert!(pair[1].tail_absorption <= pair[0].tail_absorption + 1e-14);
        }
        // u stays bounded by ~1.5 here, so every tail vanishes for large N.
        assert_eq!(rows[2].tail_absorption, 0.0);
    }
}
