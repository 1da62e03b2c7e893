//! Scratch probe for the acceptance thresholds (not part of the test suite).

use haptosim::config::{parse_config, plateau_example};
use haptosim::experiments::{cauchy_table, compare_limit_ode, run_sweep, weak_residual};
use haptosim::grid::{classify, Grid1D};
use haptosim::problem::derive_constants;
use haptosim::reg::{build_level, build_schedule, default_a};
use haptosim::solver::{run, StepControls};

fn main() {
    let cfg = parse_config(plateau_example(), "plateau.cfg").unwrap();
    let spec = cfg.build_problem();
    let consts = derive_constants(&spec, 2048).unwrap();
    println!(
        "consts: M={} Gamma={} gamma={} K1={} eps0={}",
        consts.m, consts.gamma_upper, consts.gamma_low, consts.k1, consts.eps0
    );

    // --- AC-6 / AC-7: sweep on shared grid n=200, T=1 ---
    let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
    let schedule = build_schedule(&spec, &consts, &grid, &[1e-2, 1e-3, 1e-4], default_a()).unwrap();
    let ctrl = StepControls::for_grid(&grid);
    let out: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
    let t0 = std::time::Instant::now();
    let sweep = run_sweep(&spec, &consts, &grid, &schedule, 1.0, &ctrl, &out).unwrap();
    println!("sweep time: {:?}", t0.elapsed());
    for (k, r) in sweep.runs.iter().enumerate() {
        println!(
            "level {k}: completed={} steps={} audit_pass={}",
            r.completed(),
            r.series.len(),
            sweep.reports[k].all_pass()
        );
        for c in &sweep.reports[k].checks {
            if !c.pass {
                println!("  FAIL {}: bound={} observed={}", c.name, c.bound, c.observed);
            }
        }
    }
    let d_field = grid.sample(|x| spec.d.eval(x));
    let mask01 = classify(&d_field, &grid, 0.01, 0.0);
    let ct = cauchy_table(&sweep, &grid, &mask01);
    println!("cauchy u: {:?}", ct.dist_u);
    println!("cauchy w: {:?}", ct.dist_w);

    let mask = classify(&d_field, &grid, 1e-14, 0.1);
    let cmp = compare_limit_ode(&sweep, &spec, &consts, &grid, &mask).unwrap();
    for c in &cmp {
        println!(
            "ode cmp eps={:e}: err_u(T)={:.4e} err_w(T)={:.4e}",
            c.eps,
            c.final_err_u(),
            c.final_err_w()
        );
    }

    // --- AC-8: paired refinement ---
    println!("--- weak residuals ---");
    for (eps, n) in [(1e-2, 100), (1e-3, 200), (1e-4, 400)] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let level = build_level(&spec, &consts, &grid, eps, default_a()).unwrap();
        let ctrl = StepControls::for_grid(&grid);
        let out: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let t0 = std::time::Instant::now();
        let result = run(&level, &spec, &consts, &grid, 1.0, &ctrl, &out).unwrap();
        let rep = weak_residual(&result, &spec, &grid, 6);
        println!(
            "eps={eps:e} n={n}: max_res_u={:.4e} max_res_w={:.4e}  ({:?})",
            rep.max_residual_u(),
            rep.max_residual_w(),
            t0.elapsed()
        );
        for e in &rep.entries {
            println!(
                "   {:<22} res_u={:.4e} (raw {:.3e}/scale {:.3e})  res_w={:.4e} (raw {:.3e}/scale {:.3e})",
                e.label, e.residual_u, e.raw_u, e.scale_u, e.residual_w, e.raw_w, e.scale_w
            );
        }
    }

    // --- AC-10: self-convergence at eps=1e-2, T=0.5 ---
    println!("--- self convergence ---");
    let t_final = 0.5;
    let eps = 1e-2;
    let mut errors = Vec::new();
    let fine_n = 1600;
    let fine_grid = Grid1D::new(0.0, 1.0, fine_n).unwrap();
    let fine_level = build_level(&spec, &consts, &fine_grid, eps, default_a()).unwrap();
    let fine_ctrl = StepControls::for_grid(&fine_grid);
    let t0 = std::time::Instant::now();
    let fine = run(&fine_level, &spec, &consts, &fine_grid, t_final, &fine_ctrl, &[t_final]).unwrap();
    println!("reference n=1600 time: {:?}", t0.elapsed());
    let fine_u = &fine.final_state().u;
    for n in [100usize, 200, 400] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let level = build_level(&spec, &consts, &grid, eps, default_a()).unwrap();
        let ctrl = StepControls::for_grid(&grid);
        let result = run(&level, &spec, &consts, &grid, t_final, &ctrl, &[t_final]).unwrap();
        let coarse_u = &result.final_state().u;
        // Restrict the reference by cell-average coarsening.
        let ratio = fine_n / n;
        let mut err = 0.0;
        for i in 0..n {
            let avg: f64 =
                (0..ratio).map(|j| fine_u[i * ratio + j]).sum::<f64>() / ratio as f64;
            err += grid.h * (coarse_u[i] - avg).abs();
        }
        errors.push(err);
        println!("n={n}: L1 error vs reference = {err:.6e}");
    }
    for k in 0..errors.len() - 1 {
        println!("order {k}: {:.3}", (errors[k] / errors[k + 1]).log2());
    }
}
