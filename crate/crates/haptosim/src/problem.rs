//! The continuous problem, its derived constants, and hypothesis validation.
//!
//! A problem instance consists of the interval, the (possibly degenerate)
//! diffusion profile `d`, the reaction `f` with its nondecreasing majorant
//! `rho`, the absorption rate `g`, nonnegative initial data `u0`, `w0`, and a
//! positive margin `delta`. From these the harness derives the constants that
//! drive every quantitative bound: `M = ||w0||_inf + delta`, the linear bound
//! `g(w) <= Gamma w`, the logarithmic-derivative bound `g'/g >= gamma`, the
//! diffusion shape constant `K1 >= d_x^2 / d`, and the admissible
//! regularization range `(0, eps0)`.

use crate::func::{MonotoneTable, RateFn, Reaction, SpaceProfile};
use crate::{Error, Result};

/// The continuous problem data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub d: SpaceProfile,
    pub f: Reaction,
    pub rho: RateFn,
    pub g: RateFn,
    pub u0: SpaceProfile,
    pub w0: SpaceProfile,
    pub delta: f64,
}

impl ProblemSpec {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Default upper edge of the `u`-scan lattice used in hypothesis checks.
    pub fn default_u_scan(&self, n_samples: usize) -> f64 {
        10.0 * sup_scan(|x| self.u0.eval(x), self.a, self.b, 10 * n_samples).max(0.1)
    }
}

/// Constants derived from a [`ProblemSpec`].
#[derive(Debug, Clone, Copy)]
pub struct DerivedConstants {
    /// `M = ||w0||_inf + delta`; ceiling for the tissue variable.
    pub m: f64,
    /// `Gamma` with `g(w) <= Gamma w` on `[0, M]`.
    pub gamma_upper: f64,
    /// `gamma` with `g'(w)/g(w) >= gamma` on `(0, M]`.
    pub gamma_low: f64,
    /// `rho(M)`; exponential mass growth rate.
    pub rho_m: f64,
    /// `K1` with `d_x^2 / d <= K1` wherever `d > 0`; equals `4 Lip(sqrt d)^2`.
    pub k1: f64,
    /// `g(M)`.
    pub g_m: f64,
    /// Regularization levels are admissible for `eps` in `(0, eps0)`.
    pub eps0: f64,
}

/// Supremum of `f` over `[a, b]` sampled at `n + 1` uniform points.
pub(crate) fn sup_scan(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2);
    (0..=n)
        .map(|i| f(a + (b - a) * i as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sample points in `(0, M]`: a uniform grid plus a geometric tail toward 0,
/// so suprema attained in the limit `w -> 0` (such as `g(w)/w` for logistic
/// `g`) are captured to high accuracy.
fn w_samples(m: f64, n_samples: usize) -> Vec<f64> {
    let mut ws: Vec<f64> = (1..=n_samples)
        .map(|j| m * j as f64 / n_samples as f64)
        .collect();
    for k in 1..=192 {
        ws.push(m * 10f64.powf(-(k as f64) / 16.0));
    }
    ws
}

/// Derive the quantitative constants of the problem.
///
/// `Gamma` is the sampled maximum of `g(w)/w`, `gamma` the sampled minimum of
/// `g'(w)/g(w)`, `K1 = 4 Lip(sqrt d)^2` from a dense finite-difference scan,
/// and `eps0 = min(1, g(M)/2, g(min(delta^2, M))/2)`, which guarantees both
/// `delta_eps = g^{-1}(eps) < delta^2` and the floor `g >= eps` on
/// `[delta_eps, M]` for every `eps < eps0`.
pub fn derive_constants(spec: &ProblemSpec, n_samples: usize) -> Result<DerivedConstants> {
    assert!(n_samples > 0, "n_samples must be positive");
    let w0_inf = sup_scan(|x| spec.w0.eval(x), spec.a, spec.b, 10 * n_samples);
    let m = w0_inf + spec.delta;

    let mut gamma_upper = f64::NEG_INFINITY;
    let mut gamma_low = f64::INFINITY;
    for w in w_samples(m, n_samples) {
        let gv = spec.g.eval(w);
        if gv <= 0.0 {
            return Err(Error::NonpositiveGamma { w, value: gv });
        }
        gamma_upper = gamma_upper.max(gv / w);
        gamma_low = gamma_low.min(spec.g.deriv(w) / gv);
    }
    for j in 0..=n_samples {
        let w = m * j as f64 / n_samples as f64;
        let gp = spec.g.deriv(w);
        if gp <= 0.0 {
            return Err(Error::NonmonotoneG { w, value: gp });
        }
    }

    let k1 = 4.0 * sqrt_d_lipschitz(spec, 10 * n_samples).powi(2);
    let g_m = spec.g.eval(m);
    let eps0 = 1f64
        .min(g_m / 2.0)
        .min(spec.g.eval(spec.delta.powi(2).min(m)) / 2.0);
    Ok(DerivedConstants {
        m,
        gamma_upper,
        gamma_low,
        rho_m: spec.rho.eval(m),
        k1,
        g_m,
        eps0,
    })
}

/// Dense finite-difference Lipschitz constant of `sqrt(d)` on `[a, b]`.
pub(crate) fn sqrt_d_lipschitz(spec: &ProblemSpec, n: usize) -> f64 {
    let n = n.max(8);
    let h = (spec.b - spec.a) / n as f64;
    let mut lip: f64 = 0.0;
    let mut prev = spec.d.eval(spec.a).max(0.0).sqrt();
    for i in 1..=n {
        let cur = spec.d.eval(spec.a + i as f64 * h).max(0.0).sqrt();
        lip = lip.max(((cur - prev) / h).abs());
        prev = cur;
    }
    lip
}

/// One named hypothesis check.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst margin observed; positive means the hypothesis holds strictly.
    pub margin: f64,
    pub detail: String,
}

/// Outcome of [`validate_hypotheses`]. Failures are reported, never thrown.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Check every standing hypothesis on the problem data by dense sampling.
///
/// `u_scan` bounds the `u`-range of the `f <= rho(w)` lattice; pass
/// [`ProblemSpec::default_u_scan`] unless the reaction needs a wider window.
pub fn validate_hypotheses(
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    n_samples: usize,
    u_scan: f64,
) -> ValidationReport {
    let mut checks = Vec::new();
    let xs: Vec<f64> = (0..=10 * n_samples)
        .map(|i| spec.a + spec.length() * i as f64 / (10 * n_samples) as f64)
        .collect();

    // u0 >= 0 and u0 not identically zero.
    let u0_min = xs
        .iter()
        .map(|&x| spec.u0.eval(x))
        .fold(f64::INFINITY, f64::min);
    let u0_max = xs
        .iter()
        .map(|&x| spec.u0.eval(x))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(HypothesisCheck {
        name: "u0_admissible",
        pass: u0_min >= 0.0 && u0_max > 0.0,
        margin: u0_min,
        detail: format!("min u0 = {u0_min:.6e}, max u0 = {u0_max:.6e}"),
    });

    // w0 >= 0.
    let w0_min = xs
        .iter()
        .map(|&x| spec.w0.eval(x))
        .fold(f64::INFINITY, f64::min);
    checks.push(HypothesisCheck {
        name: "w0_nonnegative",
        pass: w0_min >= 0.0,
        margin: w0_min,
        detail: format!("min w0 = {w0_min:.6e}"),
    });

    // f(x, u, w) <= rho(w) on the sample lattice.
    let n_lat = n_samples.min(101).max(3);
    let mut f_margin = f64::INFINITY;
    for i in 0..=n_lat {
        let x = spec.a + spec.length() * i as f64 / n_lat as f64;
        for j in 0..=n_lat {
            let u = u_scan * j as f64 / n_lat as f64;
            for k in 0..=n_lat {
                let w = consts.m * k as f64 / n_lat as f64;
                f_margin = f_margin.min(spec.rho.eval(w) - spec.f.eval(x, u, w));
            }
        }
    }
    checks.push(HypothesisCheck {
        name: "f_below_rho",
        pass: f_margin >= 0.0,
        margin: f_margin,
        detail: format!("min(rho(w) - f) = {f_margin:.6e} on lattice u <= {u_scan:.3e}"),
    });

    // g(0) = 0.
    let g0 = spec.g.eval(0.0);
    checks.push(HypothesisCheck {
        name: "g_vanishes_at_zero",
        pass: g0.abs() <= 1e-12,
        margin: -g0.abs(),
        detail: format!("g(0) = {g0:.6e}"),
    });

    // g > 0 on (0, M].
    let mut g_min = f64::INFINITY;
    let mut g_argmin = f64::NAN;
    for w in w_samples(consts.m, n_samples) {
        let gv = spec.g.eval(w);
        if gv < g_min {
            g_min = gv;
            g_argmin = w;
        }
    }
    checks.push(HypothesisCheck {
        name: "g_positive",
        pass: g_min > 0.0,
        margin: g_min,
        detail: format!("min g = {g_min:.6e} at w = {g_argmin:.6e}"),
    });

    // g' > 0 on [0, M].
    let mut gp_min = f64::INFINITY;
    for j in 0..=n_samples {
        let w = consts.m * j as f64 / n_samples as f64;
        gp_min = gp_min.min(spec.g.deriv(w));
    }
    checks.push(HypothesisCheck {
        name: "g_prime_positive",
        pass: gp_min > 0.0,
        margin: gp_min,
        detail: format!("min g' = {gp_min:.6e} on [0, M]"),
    });

    // liminf of g'/g near 0: scan (0, M/100].
    let mut ratio_min = f64::INFINITY;
    for k in 0..=128 {
        let w = consts.m / 100.0 * 10f64.powf(-(k as f64) / 32.0);
        let gv = spec.g.eval(w);
        if gv > 0.0 {
            ratio_min = ratio_min.min(spec.g.deriv(w) / gv);
        } else {
            ratio_min = f64::NEG_INFINITY;
        }
    }
    checks.push(HypothesisCheck {
        name: "g_log_derivative_bounded_below",
        pass: ratio_min > 0.0,
        margin: ratio_min,
        detail: format!("min g'/g = {ratio_min:.6e} on (0, M/100]"),
    });

    // Integrability of w0_x^2 / g(w0), with the convention 0/0 := 0 where w0_x = 0.
    let integral = w0_entropy_integral(spec, n_samples, 0.0);
    checks.push(HypothesisCheck {
        name: "w0_entropy_integral_finite",
        pass: integral.is_finite(),
        margin: if integral.is_finite() { 1.0 } else { -1.0 },
        detail: format!("integral w0_x^2 / g(w0) = {integral:.6e}"),
    });

    ValidationReport { checks }
}

/// Midpoint quadrature of `w0_x^2 / g(w0 + shift)` over the interval.
///
/// Where `w0_x = 0` the integrand is taken as 0 even if `g(w0 + shift) = 0`.
pub fn w0_entropy_integral(spec: &ProblemSpec, n_samples: usize, shift: f64) -> f64 {
    let n = n_samples.max(16);
    let h = spec.length() / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x = spec.a + (i as f64 + 0.5) * h;
        let wx = spec.w0.deriv(x);
        if wx == 0.0 {
            continue;
        }
        let g = spec.g.eval(spec.w0.eval(x) + shift);
        if g <= 0.0 {
            return f64::INFINITY;
        }
        total += h * wx * wx / g;
    }
    total
}

/// Result of the degeneracy geometry check `d(x) <= (K1/4) dist(x, {d=0})^2`.
#[derive(Debug, Clone, Copy)]
pub struct GeometryReport {
    /// Worst ratio `d / ((K1/4) dist^2)` over positive samples; 0 when the
    /// sampled zero set is empty.
    pub max_ratio: f64,
    pub has_degeneracy: bool,
}

/// Verify the quadratic decay of `d` toward its zero set on given samples.
pub fn check_degeneracy_geometry(
    xs: &[f64],
    ds: &[f64],
    k1: f64,
    tol_zero: f64,
) -> GeometryReport {
    assert_eq!(xs.len(), ds.len());
    let zeros: Vec<f64> = xs
        .iter()
        .zip(ds)
        .filter(|(_, &d)| d <= tol_zero)
        .map(|(&x, _)| x)
        .collect();
    if zeros.is_empty() {
        return GeometryReport {
            max_ratio: 0.0,
            has_degeneracy: false,
        };
    }
    let mut max_ratio: f64 = 0.0;
    for (&x, &d) in xs.iter().zip(ds) {
        if d <= tol_zero {
            continue;
        }
        let dist = zeros
            .iter()
            .map(|&z| (x - z).abs())
            .fold(f64::INFINITY, f64::min);
        let bound = k1 / 4.0 * dist * dist;
        max_ratio = max_ratio.max(if bound > 0.0 { d / bound } else { f64::INFINITY });
    }
    GeometryReport {
        max_ratio,
        has_degeneracy: true,
    }
}

/// Convert a sensitivity/consumption pair `(psi, h)` of the original model
/// into the absorption rate `g` of the substituted system.
///
/// With `W(v) = int_0^v psi`, the substitution `w = W(v)` turns `v_t = -u h(v)`
/// into `w_t = -u g(w)` with `g(w) = psi(W^{-1}(w)) h(W^{-1}(w))`. `W` is
/// computed by cumulative trapezoid quadrature on a fine `v`-grid and inverted
/// by monotone interpolation; the result is tabulated on a uniform `w`-grid
/// over `[0, W(v_max)]`.
pub fn transform_sensitivity(
    psi: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
    v_max: f64,
    n_samples: usize,
) -> Result<RateFn> {
    assert!(v_max > 0.0 && n_samples >= 2);
    let fine = 10 * n_samples;
    let dv = v_max / fine as f64;
    let mut vs = Vec::with_capacity(fine + 1);
    let mut psis = Vec::with_capacity(fine + 1);
    for j in 0..=fine {
        let v = j as f64 * dv;
        let p = psi(v);
        if p <= 0.0 {
            return Err(Error::NonpositivePsi { v, value: p });
        }
        vs.push(v);
        psis.push(p);
    }
    let mut big_psi = vec![0.0; fine + 1];
    for j in 0..fine {
        big_psi[j + 1] = big_psi[j] + 0.5 * dv * (psis[j] + psis[j + 1]);
    }
    let inverse = MonotoneTable::new(big_psi.clone(), vs)?;
    let w_end = big_psi[fine];
    let mut w_grid = Vec::with_capacity(n_samples + 1);
    let mut g_vals = Vec::with_capacity(n_samples + 1);
    for k in 0..=n_samples {
        let w = w_end * k as f64 / n_samples as f64;
        let v = inverse.eval(w);
        w_grid.push(w);
        g_vals.push(psi(v) * h(v));
    }
    Ok(RateFn::Tabulated(MonotoneTable::new(w_grid, g_vals)?))
}
