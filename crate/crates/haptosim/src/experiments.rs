//! Sweep orchestration and the empirical limit checks.
//!
//! A sweep integrates every level of a schedule (concurrently), audits each
//! run, and designates the finest level as the limit candidate. Convergence
//! toward the degenerate problem is then certified at desk scale by:
//!
//! - a Cauchy table of pairwise space-time `L^1` distances on a region where
//!   the diffusion stays bounded away from zero,
//! - agreement with the limit ODE at cells deep inside the degeneracy set,
//! - decay of the weak-form residuals of the limit system, assembled with the
//!   true degenerate diffusion against a battery of separable test functions
//!   `phi(x, t) = X(x) Theta(t)` with `X_x = 0` at the boundary.

use crate::estimates::{audit_run, EstimateReport};
use crate::grid::{integrate, DegeneracyMask, Field, Grid1D};
use crate::limit_ode::{default_dt, solve_limit_ode};
use crate::problem::{sup_scan, DerivedConstants, ProblemSpec};
use crate::reg::Schedule;
use crate::solver::{run, RunResult, StepControls};
use crate::{Error, Result};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker cap for concurrent level runs: `HAPTOSIM_THREADS` when set,
/// otherwise the machine parallelism.
fn thread_cap() -> usize {
    std::env::var("HAPTOSIM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Order-preserving parallel map over a slice.
pub(crate) fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let cap = thread_cap().min(items.len().max(1));
    if cap <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..cap {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Runs, audits, and the designated limit candidate of one sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub schedule: Schedule,
    pub runs: Vec<RunResult>,
    pub reports: Vec<EstimateReport>,
    /// Index of the finest level, whose trajectory is the candidate
    /// `(u~, w~)`.
    pub candidate: usize,
}

impl SweepResult {
    pub fn candidate_run(&self) -> &RunResult {
        &self.runs[self.candidate]
    }
}

/// Run all levels of the schedule on `[0, T]` (concurrently) and audit each.
pub fn run_sweep(
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    schedule: &Schedule,
    t_final: f64,
    controls: &StepControls,
    output_times: &[f64],
) -> Result<SweepResult> {
    if schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let outcomes = parallel_map(&schedule.levels, |i, level| {
        run(level, spec, consts, grid, t_final, controls, output_times)
            .map_err(|e| e.at_level(i, level.eps))
    });
    let mut runs = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        runs.push(outcome?);
    }
    let reports: Vec<EstimateReport> = schedule
        .levels
        .iter()
        .zip(&runs)
        .map(|(level, result)| audit_run(result, level, spec, consts, grid, t_final))
        .collect();
    let candidate = schedule.len() - 1;
    Ok(SweepResult {
        schedule: schedule.clone(),
        runs,
        reports,
        candidate,
    })
}

/// Pairwise space-time `L^1` distances between consecutive levels.
#[derive(Debug, Clone)]
pub struct CauchyTable {
    /// `(eps_coarse, eps_fine)` per consecutive pair.
    pub pairs: Vec<(f64, f64)>,
    pub dist_u: Vec<f64>,
    pub dist_w: Vec<f64>,
    pub region_cells: usize,
    pub warning: Option<String>,
}

/// Space-time `L^1` distance of consecutive runs over the cells selected by
/// `mask.positive_cells` (build the mask with `tol_zero = d_floor` to
/// restrict to `{d > d_floor}`), trapezoid in time over the shared snapshots.
pub fn cauchy_table(sweep: &SweepResult, grid: &Grid1D, mask: &DegeneracyMask) -> CauchyTable {
    let cells: Vec<usize> = (0..grid.n).filter(|&i| mask.positive_cells[i]).collect();
    let warning = if cells.is_empty() {
        Some("restriction region {d > d_floor} is empty; distances are 0".into())
    } else {
        None
    };
    let mut pairs = Vec::new();
    let mut dist_u = Vec::new();
    let mut dist_w = Vec::new();
    for k in 0..sweep.runs.len().saturating_sub(1) {
        let (ra, rb) = (&sweep.runs[k], &sweep.runs[k + 1]);
        assert_eq!(
            ra.snapshots.len(),
            rb.snapshots.len(),
            "sweep runs must share the output-time set"
        );
        let l1_at = |field: fn(&crate::solver::Snapshot) -> &Field, j: usize| -> f64 {
            let (fa, fb) = (field(&ra.snapshots[j]), field(&rb.snapshots[j]));
            grid.h
                * cells
                    .iter()
                    .map(|&i| (fa[i] - fb[i]).abs())
                    .sum::<f64>()
        };
        let mut du = 0.0;
        let mut dw = 0.0;
        for j in 0..ra.snapshots.len() - 1 {
            let dt = ra.snapshots[j + 1].t - ra.snapshots[j].t;
            du += 0.5 * dt * (l1_at(|s| &s.u, j) + l1_at(|s| &s.u, j + 1));
            dw += 0.5 * dt * (l1_at(|s| &s.w, j) + l1_at(|s| &s.w, j + 1));
        }
        pairs.push((
            sweep.schedule.levels[k].eps,
            sweep.schedule.levels[k + 1].eps,
        ));
        dist_u.push(du);
        dist_w.push(dw);
    }
    CauchyTable {
        pairs,
        dist_u,
        dist_w,
        region_cells: cells.len(),
        warning,
    }
}

/// Per-level sup errors against the limit ODE at the interior degenerate cells.
#[derive(Debug, Clone)]
pub struct OdeComparison {
    pub eps: f64,
    pub times: Vec<f64>,
    pub sup_err_u: Vec<f64>,
    pub sup_err_w: Vec<f64>,
}

impl OdeComparison {
    pub fn final_err_u(&self) -> f64 {
        *self.sup_err_u.last().unwrap()
    }

    pub fn final_err_w(&self) -> f64 {
        *self.sup_err_w.last().unwrap()
    }
}

/// Compare every level of a sweep against the limit ODE on the interior of
/// the degeneracy set. The ODE at level `eps` starts from the level's lifted
/// datum `w0 + sqrt(delta_eps)`, matching the regularized initial condition.
pub fn compare_limit_ode(
    sweep: &SweepResult,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    mask: &DegeneracyMask,
) -> Result<Vec<OdeComparison>> {
    let interior: Vec<usize> = (0..grid.n)
        .filter(|&i| mask.interior_zero_cells[i])
        .collect();
    if interior.is_empty() {
        return Err(Error::NoDegeneracy);
    }
    let mut out = Vec::new();
    for (level, result) in sweep.schedule.levels.iter().zip(&sweep.runs) {
        let times: Vec<f64> = result.snapshots.iter().map(|s| s.t).collect();
        let t_final = *times.last().unwrap();
        let dt = default_dt(t_final);
        let mut sup_err_u = vec![0.0f64; times.len()];
        let mut sup_err_w = vec![0.0f64; times.len()];
        for &i in &interior {
            let x = grid.centers[i];
            let traj = solve_limit_ode(
                x,
                spec.u0.eval(x),
                spec.w0.eval(x) + level.delta_eps.sqrt(),
                spec,
                consts,
                t_final,
                dt,
                &times,
            )?;
            debug_assert_eq!(traj.times.len(), times.len());
            for (k, snap) in result.snapshots.iter().enumerate() {
                sup_err_u[k] = sup_err_u[k].max((snap.u[i] - traj.u[k]).abs());
                sup_err_w[k] = sup_err_w[k].max((snap.w[i] - traj.w[k]).abs());
            }
        }
        out.push(OdeComparison {
            eps: level.eps,
            times,
            sup_err_u,
            sup_err_w,
        });
    }
    Ok(out)
}

/// Separable test function `phi(x, t) = X(x) Theta(t)` with analytic
/// derivatives, `X_x = 0` at the interval endpoints, and `Theta(T) = 0`.
pub trait WeakTestFn {
    fn x_val(&self, x: f64) -> f64;
    fn x_d1(&self, x: f64) -> f64;
    fn x_d2(&self, x: f64) -> f64;
    fn theta(&self, t: f64) -> f64;
    fn theta_d(&self, t: f64) -> f64;
    fn label(&self) -> String;
}

/// Time envelope of a battery member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaKind {
    /// Smooth bump supported in `(0, T)`; blind to the initial data.
    InteriorBump,
    /// Equals 1 near `t = 0`, decays smoothly to 0 before `T`; exercises the
    /// initial-datum terms.
    StepDown,
}

/// Battery member: `cos(k pi (x - a)/L)` times a smooth time envelope.
#[derive(Debug, Clone, Copy)]
pub struct CosineBump {
    pub k: u32,
    pub kind: ThetaKind,
    pub a: f64,
    pub len: f64,
    pub t_final: f64,
}

impl WeakTestFn for CosineBump {
    fn x_val(&self, x: f64) -> f64 {
        let om = self.k as f64 * std::f64::consts::PI / self.len;
        (om * (x - self.a)).cos()
    }

    fn x_d1(&self, x: f64) -> f64 {
        let om = self.k as f64 * std::f64::consts::PI / self.len;
        -om * (om * (x - self.a)).sin()
    }

    fn x_d2(&self, x: f64) -> f64 {
        let om = self.k as f64 * std::f64::consts::PI / self.len;
        -om * om * (om * (x - self.a)).cos()
    }

    fn theta(&self, t: f64) -> f64 {
        let s = t / self.t_final;
        match self.kind {
            ThetaKind::InteriorBump => crate::func::bump01(s),
            ThetaKind::StepDown => crate::func::step_down(s, 0.1, 0.9),
        }
    }

    fn theta_d(&self, t: f64) -> f64 {
        let s = t / self.t_final;
        match self.kind {
            ThetaKind::InteriorBump => crate::func::bump01_deriv(s) / self.t_final,
            ThetaKind::StepDown => crate::func::step_down_deriv(s, 0.1, 0.9) / self.t_final,
        }
    }

    fn label(&self) -> String {
        let env = match self.kind {
            ThetaKind::InteriorBump => "bump",
            ThetaKind::StepDown => "stepdown",
        };
        format!("cos({}pi s)*{env}", self.k)
    }
}

/// The default battery: cosine modes `k = 0, 1, 2, ...` crossed with the two
/// time envelopes, in a fixed order.
pub fn battery(spec: &ProblemSpec, t_final: f64, size: usize) -> Vec<CosineBump> {
    (0..size)
        .map(|i| CosineBump {
            k: (i / 2) as u32,
            kind: if i % 2 == 0 {
                ThetaKind::InteriorBump
            } else {
                ThetaKind::StepDown
            },
            a: spec.a,
            len: spec.length(),
            t_final,
        })
        .collect()
}

/// Residuals of the two weak identities for one test function.
#[derive(Debug, Clone)]
pub struct WeakResidualEntry {
    pub label: String,
    /// `|LHS - RHS|` of the cell-equation identity, unnormalized.
    pub raw_u: f64,
    /// Sum of the magnitudes of the five assembled terms.
    pub scale_u: f64,
    pub residual_u: f64,
    pub raw_w: f64,
    pub scale_w: f64,
    pub residual_w: f64,
}

#[derive(Debug, Clone)]
pub struct WeakResidualReport {
    pub entries: Vec<WeakResidualEntry>,
    pub battery: String,
}

impl WeakResidualReport {
    pub fn max_residual_u(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.residual_u)
            .fold(0.0f64, f64::max)
    }

    pub fn max_residual_w(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.residual_w)
            .fold(0.0f64, f64::max)
    }

    /// Battery-aggregated residual of the cell-equation identity:
    /// total defect over total term magnitude.
    pub fn battery_residual_u(&self) -> f64 {
        let raw: f64 = self.entries.iter().map(|e| e.raw_u).sum();
        let scale: f64 = self.entries.iter().map(|e| e.scale_u).sum();
        raw / scale.max(1e-30)
    }

    /// Battery-aggregated residual of the tissue-equation identity.
    pub fn battery_residual_w(&self) -> f64 {
        let raw: f64 = self.entries.iter().map(|e| e.raw_w).sum();
        let scale: f64 = self.entries.iter().map(|e| e.scale_w).sum();
        raw / scale.max(1e-30)
    }
}

/// Cell-centered `w_x` on the positive set: centered differences inside,
/// one-sided from the positive side at cells whose neighbor is degenerate or
/// outside the domain.
fn candidate_w_gradient(w: &Field, grid: &Grid1D, positive: &[bool]) -> Vec<f64> {
    let n = grid.n;
    let mut wx = vec![0.0; n];
    for i in 0..n {
        if !positive[i] {
            continue;
        }
        let left_ok = i > 0 && positive[i - 1];
        let right_ok = i + 1 < n && positive[i + 1];
        wx[i] = match (left_ok, right_ok) {
            (true, true) => (w[i + 1] - w[i - 1]) / (2.0 * grid.h),
            (false, true) => (w[i + 1] - w[i]) / grid.h,
            (true, false) => (w[i] - w[i - 1]) / grid.h,
            (false, false) => 0.0,
        };
    }
    wx
}

/// Assemble both weak identities for one test function against a candidate
/// trajectory, by midpoint quadrature in space and trapezoid over the stored
/// snapshots in time. The `d`-weighted terms use the true degenerate `d`,
/// restricted to `{d > 0}`; the initial-datum terms use the unlifted data of
/// the limit problem.
pub fn assemble_weak_identity(
    candidate: &RunResult,
    spec: &ProblemSpec,
    grid: &Grid1D,
    phi: &dyn WeakTestFn,
) -> (f64, f64, f64, f64) {
    let n = grid.n;
    let h = grid.h;
    let d_vals: Vec<f64> = grid.centers.iter().map(|&x| spec.d.eval(x)).collect();
    let d_max = d_vals.iter().fold(0.0f64, |m, &v| m.max(v));
    let tol_zero = 1e-14 * d_max.max(1.0);
    let positive: Vec<bool> = d_vals.iter().map(|&d| d > tol_zero).collect();

    let xv: Vec<f64> = grid.centers.iter().map(|&x| phi.x_val(x)).collect();
    let xd1: Vec<f64> = grid.centers.iter().map(|&x| phi.x_d1(x)).collect();
    let xd2: Vec<f64> = grid.centers.iter().map(|&x| phi.x_d2(x)).collect();

    let m = candidate.snapshots.len();
    // Signed spatial sums per snapshot, plus the L1 magnitude of each
    // integrand (the normalizing "term magnitude", immune to sign
    // cancellation in the assembled value).
    let mut a_k = vec![0.0; m]; // int u X
    let mut a_abs = vec![0.0; m];
    let mut b_k = vec![0.0; m]; // int_{d>0} d u X''
    let mut b_abs = vec![0.0; m];
    let mut c_k = vec![0.0; m]; // int_{d>0} d u w_x X'
    let mut c_abs = vec![0.0; m];
    let mut f_k = vec![0.0; m]; // int u f X
    let mut f_abs = vec![0.0; m];
    let mut w_k = vec![0.0; m]; // int w X
    let mut w_abs = vec![0.0; m];
    let mut g_k = vec![0.0; m]; // int u g(w) X
    let mut g_abs = vec![0.0; m];
    for (k, snap) in candidate.snapshots.iter().enumerate() {
        let wx = candidate_w_gradient(&snap.w, grid, &positive);
        for i in 0..n {
            let u = snap.u[i];
            let w = snap.w[i];
            let fu = u * spec.f.eval(grid.centers[i], u, w);
            let gu = u * spec.g.eval(w.max(0.0));
            a_k[k] += h * u * xv[i];
            a_abs[k] += h * (u * xv[i]).abs();
            f_k[k] += h * fu * xv[i];
            f_abs[k] += h * (fu * xv[i]).abs();
            w_k[k] += h * w * xv[i];
            w_abs[k] += h * (w * xv[i]).abs();
            g_k[k] += h * gu * xv[i];
            g_abs[k] += h * (gu * xv[i]).abs();
            if positive[i] {
                b_k[k] += h * d_vals[i] * u * xd2[i];
                b_abs[k] += h * (d_vals[i] * u * xd2[i]).abs();
                c_k[k] += h * d_vals[i] * u * wx[i] * xd1[i];
                c_abs[k] += h * (d_vals[i] * u * wx[i] * xd1[i]).abs();
            }
        }
    }

    let times: Vec<f64> = candidate.snapshots.iter().map(|s| s.t).collect();
    let trapz = |vals: &[f64], weight: &dyn Fn(f64) -> f64| -> f64 {
        let mut total = 0.0;
        for k in 0..m - 1 {
            let dt = times[k + 1] - times[k];
            total += 0.5
                * dt
                * (vals[k] * weight(times[k]) + vals[k + 1] * weight(times[k + 1]));
        }
        total
    };
    let th = |t: f64| phi.theta(t);
    let thd = |t: f64| phi.theta_d(t);
    let th_abs = |t: f64| phi.theta(t).abs();
    let thd_abs = |t: f64| phi.theta_d(t).abs();

    let init_u: f64 = h
        * grid
            .centers
            .iter()
            .zip(&xv)
            .map(|(&x, &xi)| spec.u0.eval(x) * xi)
            .sum::<f64>();
    let init_u_abs: f64 = h
        * grid
            .centers
            .iter()
            .zip(&xv)
            .map(|(&x, &xi)| (spec.u0.eval(x) * xi).abs())
            .sum::<f64>();
    let init_w: f64 = h
        * grid
            .centers
            .iter()
            .zip(&xv)
            .map(|(&x, &xi)| spec.w0.eval(x) * xi)
            .sum::<f64>();
    let init_w_abs: f64 = h
        * grid
            .centers
            .iter()
            .zip(&xv)
            .map(|(&x, &xi)| (spec.w0.eval(x) * xi).abs())
            .sum::<f64>();

    // Cell equation: -int int u phi_t - int u0 phi(0)
    //   = int int_{d>0} d u phi_xx + int int_{d>0} d u w_x phi_x + int int u f phi.
    let t1 = -trapz(&a_k, &thd);
    let t2 = -init_u * th(0.0);
    let r1 = trapz(&b_k, &th);
    let r2 = trapz(&c_k, &th);
    let r3 = trapz(&f_k, &th);
    let raw_u = (t1 + t2 - r1 - r2 - r3).abs();
    let scale_u = trapz(&a_abs, &thd_abs)
        + init_u_abs * th(0.0).abs()
        + trapz(&b_abs, &th_abs)
        + trapz(&c_abs, &th_abs)
        + trapz(&f_abs, &th_abs);

    // Tissue equation: int int w phi_t + int w0 phi(0) = int int u g(w) phi.
    let l1 = trapz(&w_k, &thd);
    let l2 = init_w * th(0.0);
    let rg = trapz(&g_k, &th);
    let raw_w = (l1 + l2 - rg).abs();
    let scale_w = trapz(&w_abs, &thd_abs) + init_w_abs * th(0.0).abs() + trapz(&g_abs, &th_abs);

    (raw_u, scale_u, raw_w, scale_w)
}

/// Evaluate the weak-residual battery against the candidate trajectory.
pub fn weak_residual(
    candidate: &RunResult,
    spec: &ProblemSpec,
    grid: &Grid1D,
    battery_size: usize,
) -> WeakResidualReport {
    let t_final = candidate.snapshots.last().map(|s| s.t).unwrap_or(1.0);
    let fns = battery(spec, t_final, battery_size);
    let entries = fns
        .iter()
        .map(|phi| {
            let (raw_u, scale_u, raw_w, scale_w) =
                assemble_weak_identity(candidate, spec, grid, phi);
            WeakResidualEntry {
                label: phi.label(),
                raw_u,
                scale_u,
                residual_u: raw_u / scale_u.max(1e-30),
                raw_w,
                scale_w,
                residual_w: raw_w / scale_w.max(1e-30),
            }
        })
        .collect();
    WeakResidualReport {
        entries,
        battery: format!(
            "{battery_size} separable functions: cos(k pi s), k = 0..{}, x interior bump / step-down envelopes",
            battery_size.div_ceil(2).saturating_sub(1)
        ),
    }
}

/// Mass fraction inside the degeneracy set per snapshot. Exploratory output.
pub fn concentration_diagnostic(
    result: &RunResult,
    grid: &Grid1D,
    mask: &DegeneracyMask,
) -> Vec<(f64, f64)> {
    result
        .snapshots
        .iter()
        .map(|s| {
            let total = integrate(&s.u, grid);
            let inside = grid.h
                * (0..grid.n)
                    .filter(|&i| mask.zero_cells[i])
                    .map(|i| s.u[i])
                    .sum::<f64>();
            (s.t, if total > 0.0 { inside / total } else { 0.0 })
        })
        .collect()
}

/// Largest `d` value on the grid, for default zero tolerances.
pub fn d_scale(spec: &ProblemSpec, grid: &Grid1D) -> f64 {
    sup_scan(|x| spec.d.eval(x), spec.a, spec.b, 4 * grid.n).max(1e-300)
}
