//! Second probe: is the ODE-oracle gap at eps = 1e-3 structural (a property
//! of the regularized PDE itself) or a discretization artifact?

use haptosim::config::{parse_config, plateau_example};
use haptosim::grid::{classify, Grid1D};
use haptosim::problem::derive_constants;
use haptosim::reg::{build_level, default_a};
use haptosim::solver::{run, StepControls};

fn main() {
    let cfg = parse_config(plateau_example(), "plateau.cfg").unwrap();
    let spec = cfg.build_problem();
    let consts = derive_constants(&spec, 2048).unwrap();

    for (n, dt_div) in [(200usize, 4.0), (400, 8.0), (800, 8.0)] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let mut ctrl = StepControls::for_grid(&grid);
        ctrl.dt_max = grid.h / dt_div;
        for eps in [1e-3, 1e-4] {
            let level = build_level(&spec, &consts, &grid, eps, default_a()).unwrap();
            // Dense snapshots so the exposure integral is accurate.
            let out: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
            let result = run(&level, &spec, &consts, &grid, 1.0, &ctrl, &out).unwrap();
            let d_field = grid.sample(|x| spec.d.eval(x));
            let mask = classify(&d_field, &grid, 1e-14, 0.1);

            let mut sup_oracle = 0.0f64; // |w_eps(1) - w0eps exp(-u0)|
            let mut sup_self = 0.0f64; // |w_eps(1) - w0eps exp(-int u/(1+eta u))|
            let mut arg = 0.0;
            for i in 0..n {
                if !mask.interior_zero_cells[i] {
                    continue;
                }
                let x = grid.centers[i];
                let w0e = spec.w0.eval(x) + level.delta_eps.sqrt();
                let w_final = result.snapshots.last().unwrap().w[i];
                let oracle = w0e * (-spec.u0.eval(x)).exp();
                if (w_final - oracle).abs() > sup_oracle {
                    sup_oracle = (w_final - oracle).abs();
                    arg = x;
                }
                // Saturated exposure of the actual trajectory.
                let mut expo = 0.0;
                for k in 0..result.snapshots.len() - 1 {
                    let dt = result.snapshots[k + 1].t - result.snapshots[k].t;
                    let s0 = result.snapshots[k].u[i]
                        / (1.0 + level.eta_eps * result.snapshots[k].u[i]);
                    let s1 = result.snapshots[k + 1].u[i]
                        / (1.0 + level.eta_eps * result.snapshots[k + 1].u[i]);
                    expo += 0.5 * dt * (s0 + s1);
                }
                let self_pred = w0e * (-expo).exp();
                sup_self = sup_self.max((w_final - self_pred).abs());
            }
            println!(
                "n={n} dt=h/{dt_div} eps={eps:e}: sup|w - oracle| = {sup_oracle:.5e} (at x={arg:.3}), sup|w - own-exposure| = {sup_self:.5e}"
            );
        }
    }
}
