//! Deterministic CSV/SVG emission and re-rendering.
//!
//! All floating-point values are written with 17 significant digits, so
//! identical configurations produce byte-identical files and every value
//! round-trips through `f64` parsing.

use crate::estimates::EstimateReport;
use crate::experiments::{CauchyTable, OdeComparison, SweepResult, WeakResidualReport};
use crate::grid::Grid1D;
use crate::problem::{DerivedConstants, ValidationReport};
use crate::reg::RegLevel;
use crate::solver::{RunResult, RunStatus};
use crate::Result;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Fixed float formatting: 17 significant digits, scientific.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Short label for a level used in file names, e.g. `1e-3`.
pub fn eps_label(eps: f64) -> String {
    format!("{eps:e}")
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(content.as_bytes())?;
    Ok(())
}

/// `snapshots_<eps>.csv`: one row per (time, cell).
pub fn write_snapshots(dir: &Path, eps: f64, result: &RunResult, grid: &Grid1D) -> Result<()> {
    let mut s = String::from("t,x,u,w\n");
    for snap in &result.snapshots {
        for i in 0..grid.n {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f(snap.t),
                fmt_f(grid.centers[i]),
                fmt_f(snap.u[i]),
                fmt_f(snap.w[i])
            );
        }
    }
    write_file(&dir.join(format!("snapshots_{}.csv", eps_label(eps))), &s)
}

/// `series_<eps>.csv`: per-step scalar diagnostics.
pub fn write_series(dir: &Path, eps: f64, result: &RunResult) -> Result<()> {
    let mut s = String::from("t,dt,mass,min_u,max_u,min_w,max_w,y,h\n");
    for d in &result.series {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f(d.t),
            fmt_f(d.dt),
            fmt_f(d.mass),
            fmt_f(d.min_u),
            fmt_f(d.max_u),
            fmt_f(d.min_w),
            fmt_f(d.max_w),
            fmt_f(d.entropy_y),
            fmt_f(d.dissipation_h)
        );
    }
    write_file(&dir.join(format!("series_{}.csv", eps_label(eps))), &s)
}

/// `audit_<eps>.csv`: one row per estimate check.
pub fn write_audit(dir: &Path, eps: f64, report: &EstimateReport) -> Result<()> {
    let mut s = String::from("check,bound,observed,margin,pass\n");
    for c in &report.checks {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            c.name,
            fmt_f(c.bound),
            fmt_f(c.observed),
            fmt_f(c.margin),
            c.pass
        );
    }
    write_file(&dir.join(format!("audit_{}.csv", eps_label(eps))), &s)
}

/// Human-readable audit block.
pub fn render_audit_text(eps: f64, report: &EstimateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "estimate audit, eps = {} (window [0, {:.6}])", eps_label(eps), report.t_window);
    let c = &report.constants;
    let _ = writeln!(
        s,
        "  constants: c1={:.4e} c2={:.4e} c3={:.4e} c4={:.4e} c5={:.4e} c6={:.4e} c7={:.4e}",
        c.c1, c.c2, c.c3, c.c4, c.c5, c.c6, c.c7
    );
    for row in &report.checks {
        let _ = writeln!(
            s,
            "  {:<26} {}  bound={:<12.5e} observed={:<12.5e} margin={:.5e}",
            row.name,
            if row.pass { "PASS" } else { "FAIL" },
            row.bound,
            row.observed,
            row.margin
        );
    }
    s
}

/// Render the hypothesis validation report.
pub fn render_validation_text(report: &ValidationReport, consts: Option<&DerivedConstants>) -> String {
    let mut s = String::new();
    if let Some(c) = consts {
        let _ = writeln!(
            s,
            "derived constants: M={:.8e} Gamma={:.8e} gamma={:.8e} rho(M)={:.8e} K1={:.8e} g(M)={:.8e} eps0={:.8e}",
            c.m, c.gamma_upper, c.gamma_low, c.rho_m, c.k1, c.g_m, c.eps0
        );
    }
    for check in &report.checks {
        let _ = writeln!(
            s,
            "  {:<34} {}  margin={:.5e}  ({})",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.margin,
            check.detail
        );
    }
    s
}

/// `sweep.csv`: one row per level with parameters, audit outcome, Cauchy
/// distances (vs the previous level), ODE errors, and (for the candidate)
/// weak residuals. Non-applicable entries hold `nan`.
#[allow(clippy::too_many_arguments)]
pub fn write_sweep_summary(
    dir: &Path,
    sweep: &SweepResult,
    gamma_upper: f64,
    cauchy: &CauchyTable,
    ode: Option<&[OdeComparison]>,
    weak: Option<&WeakResidualReport>,
) -> Result<()> {
    let mut s = String::from(
        "eps,delta_eps,eta_eps,min_d_eps,gate,completed,audit_pass,cauchy_du,cauchy_dw,ode_err_u,ode_err_w,weak_res_u,weak_res_w\n",
    );
    for (k, level) in sweep.schedule.levels.iter().enumerate() {
        let run = &sweep.runs[k];
        let report = &sweep.reports[k];
        let (du, dw) = if k >= 1 && k - 1 < cauchy.dist_u.len() {
            (cauchy.dist_u[k - 1], cauchy.dist_w[k - 1])
        } else {
            (f64::NAN, f64::NAN)
        };
        let (eu, ew) = match ode {
            Some(list) => (list[k].final_err_u(), list[k].final_err_w()),
            None => (f64::NAN, f64::NAN),
        };
        let (wu, ww) = if k == sweep.candidate {
            match weak {
                Some(w) => (w.max_residual_u(), w.max_residual_w()),
                None => (f64::NAN, f64::NAN),
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f(level.eps),
            fmt_f(level.delta_eps),
            fmt_f(level.eta_eps),
            fmt_f(level.d_eps.min()),
            fmt_f(level.gate(gamma_upper)),
            matches!(run.status, RunStatus::Completed),
            report.all_pass(),
            fmt_f(du),
            fmt_f(dw),
            fmt_f(eu),
            fmt_f(ew),
            fmt_f(wu),
            fmt_f(ww)
        );
    }
    write_file(&dir.join("sweep.csv"), &s)
}

/// `weak_residuals.csv`: per battery function.
pub fn write_weak_residuals(dir: &Path, report: &WeakResidualReport) -> Result<()> {
    let mut s = String::from("label,raw_u,scale_u,residual_u,raw_w,scale_w,residual_w\n");
    for e in &report.entries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            e.label,
            fmt_f(e.raw_u),
            fmt_f(e.scale_u),
            fmt_f(e.residual_u),
            fmt_f(e.raw_w),
            fmt_f(e.scale_w),
            fmt_f(e.residual_w)
        );
    }
    write_file(&dir.join("weak_residuals.csv"), &s)
}

/// Columns parsed back from a `series_<eps>.csv`.
pub struct SeriesColumns {
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    pub y: Vec<f64>,
}

/// Read back a series CSV (used by the `report` subcommand).
pub fn read_series(path: &Path) -> Result<SeriesColumns> {
    let text = std::fs::read_to_string(path)?;
    let mut out = SeriesColumns {
        t: Vec::new(),
        mass: Vec::new(),
        y: Vec::new(),
    };
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 9 {
            continue;
        }
        let get = |i: usize| cols[i].parse::<f64>().unwrap_or(f64::NAN);
        out.t.push(get(0));
        out.mass.push(get(2));
        out.y.push(get(7));
    }
    Ok(out)
}

/// A labelled polyline for [`write_line_plot`].
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PLOT_COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal self-contained SVG polyline plot with axes and a legend.
pub fn write_line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[PlotSeries],
) -> Result<()> {
    let (w, h) = (640.0f64, 400.0f64);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| {
            (a.min(x), b.max(x))
        });
    let (mut y0, mut y1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| {
            (a.min(y), b.max(y))
        });
    if !x0.is_finite() || x0 == x1 {
        x0 -= 0.5;
        x1 = x0 + 1.0;
    }
    if !y0.is_finite() || y0 == y1 {
        y0 -= 0.5;
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
        w / 2.0
    );
    // Axes.
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{fx:.3}</text>",
            sx(fx),
            h - mb + 18.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{fy:.3e}</text>",
            ml - 6.0,
            sy(fy) + 4.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            sy(fy),
            w - mr,
            sy(fy)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>",
        (ml + w - mr) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PLOT_COLORS[k % PLOT_COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        } else if pts.len() == 1 {
            let xy: Vec<&str> = pts[0].split(',').collect();
            let _ = writeln!(
                s,
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                xy[0], xy[1]
            );
        }
        let ly = mt + 14.0 * k as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            w - mr - 150.0,
            ly
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            w - mr - 135.0,
            ly + 9.0,
            ser.label
        );
    }
    let _ = writeln!(s, "</svg>");
    write_file(path, &s)
}

/// Serialize one level's parameters into a text line for logs.
pub fn level_summary(level: &RegLevel, gamma_upper: f64) -> String {
    format!(
        "eps={:<8} delta_eps={:.6e} eta_eps={:.6} min_d_eps={:.6e} gate={:.4}",
        eps_label(level.eps),
        level.delta_eps,
        level.eta_eps,
        level.d_eps.min(),
        level.gate(gamma_upper)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.5e-17, 123456.789, -0.0, f64::MAX] {
            let s = fmt_f(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x, back, "{s} does not round-trip");
        }
        assert_eq!(fmt_f(f64::INFINITY), "inf");
        assert!("inf".parse::<f64>().unwrap().is_infinite());
        assert!("nan".parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn eps_labels_are_compact() {
        assert_eq!(eps_label(1e-2), "1e-2");
        assert_eq!(eps_label(1e-4), "1e-4");
        assert_eq!(eps_label(2.5e-3), "2.5e-3");
    }

    #[test]
    fn svg_plot_is_well_formed() {
        let dir = std::env::temp_dir().join("haptosim_plot_test");
        let path = dir.join("t.svg");
        let series = vec![PlotSeries {
            label: "mass".into(),
            points: (0..=10).map(|k| (k as f64, (k as f64).sin())).collect(),
        }];
        write_line_plot(&path, "test", "t", "mass", &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("polyline"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
