//! Command-line driver for the haptotaxis verification harness.

use clap::{Parser, Subcommand};
use haptosim::config::{parse_config, RunConfig};
use haptosim::experiments::{
    cauchy_table, compare_limit_ode, concentration_diagnostic, run_sweep, weak_residual,
};
use haptosim::grid::classify;
use haptosim::problem::{derive_constants, validate_hypotheses};
use haptosim::reg::{build_schedule, epsilon_star};
use haptosim::report::{
    self, eps_label, level_summary, render_audit_text, render_validation_text, PlotSeries,
};
use haptosim::solver::{run, RunStatus};
use haptosim::{estimates, Error};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_HYPOTHESES: u8 = 3;
const EXIT_RUN: u8 = 4;
const EXIT_CHECKS: u8 = 5;

#[derive(Parser)]
#[command(
    name = "haptosim",
    about = "1D solver and verification harness for a strongly degenerate haptotaxis system",
    disable_help_flag = false
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every standing hypothesis on the configured problem and print
    /// the derived constants.
    Validate { config: PathBuf },
    /// Integrate a single regularization level end-to-end and audit it.
    Run { config: PathBuf },
    /// Run the full schedule, audit every level, and evaluate the Cauchy
    /// table, the limit-ODE comparison, and the weak residuals.
    Sweep { config: PathBuf },
    /// Re-render plots and summaries from previously written CSV files.
    Report { config: PathBuf },
}

fn load_config(path: &Path) -> Result<RunConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    parse_config(&text, &path.display().to_string()).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn cmd_validate(path: &Path) -> u8 {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let spec = cfg.build_problem();
    let n_samples = cfg.problem.n_samples;
    let consts = match derive_constants(&spec, n_samples) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hypothesis failure while deriving constants: {e}");
            return EXIT_HYPOTHESES;
        }
    };
    let u_scan = cfg
        .problem
        .u_scan
        .unwrap_or_else(|| spec.default_u_scan(n_samples));
    let report = validate_hypotheses(&spec, &consts, n_samples, u_scan);
    print!("{}", render_validation_text(&report, Some(&consts)));
    if report.all_pass() {
        println!("all hypothesis checks passed");
        EXIT_OK
    } else {
        println!("hypothesis validation FAILED");
        EXIT_HYPOTHESES
    }
}

struct Prepared {
    cfg: RunConfig,
    spec: haptosim::problem::ProblemSpec,
    consts: haptosim::problem::DerivedConstants,
    grid: haptosim::grid::Grid1D,
    out_dir: PathBuf,
}

fn prepare(path: &Path) -> Result<Prepared, u8> {
    let cfg = load_config(path)?;
    let spec = cfg.build_problem();
    let consts = derive_constants(&spec, cfg.problem.n_samples).map_err(|e| {
        eprintln!("hypothesis failure while deriving constants: {e}");
        EXIT_HYPOTHESES
    })?;
    let grid = cfg.build_grid().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    let out_dir = PathBuf::from(&cfg.output.directory);
    Ok(Prepared {
        cfg,
        spec,
        consts,
        grid,
        out_dir,
    })
}

fn cmd_run(path: &Path) -> u8 {
    let p = match prepare(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if p.cfg.schedule.eps_list.len() != 1 {
        eprintln!(
            "error: `run` integrates exactly one level; the schedule lists {} \
             (use `sweep` for several)",
            p.cfg.schedule.eps_list.len()
        );
        return EXIT_CONFIG;
    }
    let eps = p.cfg.schedule.eps_list[0];
    let level = match haptosim::reg::build_level(
        &p.spec,
        &p.consts,
        &p.grid,
        eps,
        p.cfg.schedule.a_param,
    ) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    println!("{}", level_summary(&level, p.consts.gamma_upper));
    let controls = p.cfg.step_controls(&p.grid);
    let t_final = p.cfg.experiment.t_final;
    let result = match run(
        &level,
        &p.spec,
        &p.consts,
        &p.grid,
        t_final,
        &controls,
        &p.cfg.output_times(),
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failure: {e}");
            return EXIT_RUN;
        }
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let emit = (|| -> haptosim::Result<()> {
        report::write_snapshots(&p.out_dir, eps, &result, &p.grid)?;
        report::write_series(&p.out_dir, eps, &result)?;
        Ok(())
    })();
    if let Err(e) = emit {
        eprintln!("error writing outputs: {e}");
        return EXIT_CONFIG;
    }
    if let RunStatus::BlowUpDetected { t, quantity } = result.status {
        eprintln!("blow-up detector fired at t = {t}: {quantity}");
        return EXIT_RUN;
    }
    let audit = estimates::audit_run(&result, &level, &p.spec, &p.consts, &p.grid, t_final);
    if let Err(e) = report::write_audit(&p.out_dir, eps, &audit) {
        eprintln!("error writing audit: {e}");
        return EXIT_CONFIG;
    }
    print!("{}", render_audit_text(eps, &audit));
    if p.cfg.output.plots {
        let _ = plot_runs(&p.out_dir, &[(eps, &result)]);
    }
    if audit.all_pass() {
        println!("run completed, all estimate checks passed");
        EXIT_OK
    } else {
        println!("run completed, but some estimate checks FAILED");
        EXIT_CHECKS
    }
}

fn plot_runs(dir: &Path, runs: &[(f64, &haptosim::solver::RunResult)]) -> haptosim::Result<()> {
    let mass: Vec<PlotSeries> = runs
        .iter()
        .map(|(eps, r)| PlotSeries {
            label: format!("eps={}", eps_label(*eps)),
            points: r.series.iter().map(|d| (d.t, d.mass)).collect(),
        })
        .collect();
    report::write_line_plot(&dir.join("mass_vs_t.svg"), "mass", "t", "mass", &mass)?;
    let entropy: Vec<PlotSeries> = runs
        .iter()
        .map(|(eps, r)| PlotSeries {
            label: format!("eps={}", eps_label(*eps)),
            points: r.series.iter().map(|d| (d.t, d.entropy_y)).collect(),
        })
        .collect();
    report::write_line_plot(&dir.join("entropy_vs_t.svg"), "entropy y", "t", "y", &entropy)?;
    Ok(())
}

fn cmd_sweep(path: &Path) -> u8 {
    let p = match prepare(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let schedule = match build_schedule(
        &p.spec,
        &p.consts,
        &p.grid,
        &p.cfg.schedule.eps_list,
        p.cfg.schedule.a_param,
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let t_final = p.cfg.experiment.t_final;
    let valid = epsilon_star(t_final, &schedule, p.consts.gamma_upper);
    for (k, level) in schedule.levels.iter().enumerate() {
        let gate_note = if valid.contains(&k) { "" } else { "  [beyond gate]" };
        println!("{}{}", level_summary(level, p.consts.gamma_upper), gate_note);
    }
    if valid.is_empty() {
        eprintln!(
            "warning: no level satisfies the T = {t_final} gate; extend eps_list downward"
        );
    }
    let controls = p.cfg.step_controls(&p.grid);
    let sweep = match run_sweep(
        &p.spec,
        &p.consts,
        &p.grid,
        &schedule,
        t_final,
        &controls,
        &p.cfg.output_times(),
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("run failure: {e}");
            return EXIT_RUN;
        }
    };
    for r in &sweep.runs {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Some((k, RunStatus::BlowUpDetected { t, quantity })) = sweep
        .runs
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.status))
        .find(|(_, s)| !matches!(s, RunStatus::Completed))
    {
        eprintln!(
            "blow-up detector fired on level {} at t = {t}: {quantity}",
            eps_label(schedule.levels[k].eps)
        );
        return EXIT_RUN;
    }

    let d_field = p.grid.sample(|x| p.spec.d.eval(x));
    let floor_mask = classify(&d_field, &p.grid, p.cfg.experiment.d_floor, 0.0);
    let cauchy = cauchy_table(&sweep, &p.grid, &floor_mask);
    if let Some(w) = &cauchy.warning {
        eprintln!("warning: {w}");
    }
    for (k, pair) in cauchy.pairs.iter().enumerate() {
        println!(
            "cauchy {} -> {}: |u|_L1 = {:.6e}, |w|_L1 = {:.6e}",
            eps_label(pair.0),
            eps_label(pair.1),
            cauchy.dist_u[k],
            cauchy.dist_w[k]
        );
    }

    let d_scale = haptosim::experiments::d_scale(&p.spec, &p.grid);
    let zero_mask = classify(
        &d_field,
        &p.grid,
        1e-14 * d_scale,
        p.cfg.experiment.margin,
    );
    let ode = match compare_limit_ode(&sweep, &p.spec, &p.consts, &p.grid, &zero_mask) {
        Ok(list) => {
            for cmp in &list {
                println!(
                    "limit ODE, eps={}: sup|u - u_hat|(T) = {:.6e}, sup|w - w_hat|(T) = {:.6e}",
                    eps_label(cmp.eps),
                    cmp.final_err_u(),
                    cmp.final_err_w()
                );
            }
            Some(list)
        }
        Err(Error::NoDegeneracy) => {
            println!("limit ODE comparison skipped: no interior degenerate cells");
            None
        }
        Err(e) => {
            eprintln!("run failure: {e}");
            return EXIT_RUN;
        }
    };

    let weak = weak_residual(
        sweep.candidate_run(),
        &p.spec,
        &p.grid,
        p.cfg.experiment.battery_size,
    );
    println!(
        "weak residuals (candidate eps={}): max |res_u| = {:.6e}, max |res_w| = {:.6e}",
        eps_label(schedule.levels[sweep.candidate].eps),
        weak.max_residual_u(),
        weak.max_residual_w()
    );

    let emit = (|| -> haptosim::Result<()> {
        for (k, level) in schedule.levels.iter().enumerate() {
            report::write_snapshots(&p.out_dir, level.eps, &sweep.runs[k], &p.grid)?;
            report::write_series(&p.out_dir, level.eps, &sweep.runs[k])?;
            report::write_audit(&p.out_dir, level.eps, &sweep.reports[k])?;
        }
        report::write_sweep_summary(
            &p.out_dir,
            &sweep,
            p.consts.gamma_upper,
            &cauchy,
            ode.as_deref(),
            Some(&weak),
        )?;
        report::write_weak_residuals(&p.out_dir, &weak)?;
        if p.cfg.output.plots {
            let runs: Vec<(f64, &haptosim::solver::RunResult)> = schedule
                .levels
                .iter()
                .zip(&sweep.runs)
                .map(|(l, r)| (l.eps, r))
                .collect();
            plot_runs(&p.out_dir, &runs)?;
            let frac: Vec<PlotSeries> = schedule
                .levels
                .iter()
                .zip(&sweep.runs)
                .map(|(l, r)| PlotSeries {
                    label: format!("eps={}", eps_label(l.eps)),
                    points: concentration_diagnostic(r, &p.grid, &zero_mask),
                })
                .collect();
            report::write_line_plot(
                &p.out_dir.join("fraction_vs_t.svg"),
                "mass fraction in {d=0}",
                "t",
                "fraction",
                &frac,
            )?;
            let dk: Vec<PlotSeries> = vec![
                PlotSeries {
                    label: "D_k(u)".into(),
                    points: cauchy
                        .dist_u
                        .iter()
                        .enumerate()
                        .map(|(k, &d)| (k as f64 + 1.0, d))
                        .collect(),
                },
                PlotSeries {
                    label: "D_k(w)".into(),
                    points: cauchy
                        .dist_w
                        .iter()
                        .enumerate()
                        .map(|(k, &d)| (k as f64 + 1.0, d))
                        .collect(),
                },
            ];
            report::write_line_plot(
                &p.out_dir.join("cauchy.svg"),
                "pairwise L1 distances",
                "pair index",
                "distance",
                &dk,
            )?;
        }
        Ok(())
    })();
    if let Err(e) = emit {
        eprintln!("error writing outputs: {e}");
        return EXIT_CONFIG;
    }

    for (level, report) in schedule.levels.iter().zip(&sweep.reports) {
        print!("{}", render_audit_text(level.eps, report));
    }
    let all_pass = sweep.reports.iter().all(|r| r.all_pass());
    if all_pass {
        println!("sweep completed, all estimate checks passed");
        EXIT_OK
    } else {
        println!("sweep completed, but some estimate checks FAILED");
        EXIT_CHECKS
    }
}

fn cmd_report(path: &Path) -> u8 {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = PathBuf::from(&cfg.output.directory);
    let mut mass_series = Vec::new();
    let mut entropy_series = Vec::new();
    for &eps in &cfg.schedule.eps_list {
        let path = dir.join(format!("series_{}.csv", eps_label(eps)));
        match report::read_series(&path) {
            Ok(cols) => {
                mass_series.push(PlotSeries {
                    label: format!("eps={}", eps_label(eps)),
                    points: cols.t.iter().copied().zip(cols.mass.iter().copied()).collect(),
                });
                entropy_series.push(PlotSeries {
                    label: format!("eps={}", eps_label(eps)),
                    points: cols.t.iter().copied().zip(cols.y.iter().copied()).collect(),
                });
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
    }
    let emit = (|| -> haptosim::Result<()> {
        report::write_line_plot(&dir.join("mass_vs_t.svg"), "mass", "t", "mass", &mass_series)?;
        report::write_line_plot(
            &dir.join("entropy_vs_t.svg"),
            "entropy y",
            "t",
            "y",
            &entropy_series,
        )?;
        Ok(())
    })();
    if let Err(e) = emit {
        eprintln!("error writing plots: {e}");
        return EXIT_CONFIG;
    }
    println!("re-rendered plots from {}", dir.display());
    EXIT_OK
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Run { config } => cmd_run(config),
        Command::Sweep { config } => cmd_sweep(config),
        Command::Report { config } => cmd_report(config),
    };
    ExitCode::from(code)
}
