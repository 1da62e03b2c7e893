//! The regularization family.
//!
//! One level with parameter `eps` consists of:
//! - `d_eps = (S_sigma[sqrt d])^2 + sqrt(eps)`: the square of the mollified
//!   square root of `d`, floored at `sqrt(eps)`. Mollifying `sqrt d` (rather
//!   than `d`) keeps the shape constant `d_x^2 / d <= K1` uniformly in `eps`,
//!   and the even-reflected extension forces a zero boundary derivative.
//! - `delta_eps = g^{-1}(eps)`: the threshold below which the absorption rate
//!   may drop under `eps`; lies in `(0, delta^2)` for every `eps < eps0`.
//! - `eta_eps = ln ln(A / sqrt(delta_eps)) / ln(A / sqrt(delta_eps))`: the
//!   saturation strength, chosen so that `eta_eps -> 0` while
//!   `eta_eps ln(1/sqrt(delta_eps)) -> infinity`.
//! - `w0_eps = w0 + sqrt(delta_eps)`: the lifted initial tissue datum.
//!
//! The horizon gate of a level is `(eta_eps / Gamma) ln(1/sqrt(delta_eps))`;
//! for `T` up to the gate the exponential lower barrier
//! `sqrt(delta_eps) exp(-Gamma t / eta_eps)` stays above `delta_eps` on
//! `[0, T]`, which is what all entropy estimates rely on.

use crate::func::{bump01, RateFn};
use crate::grid::{Field, Grid1D};
use crate::problem::{sup_scan, DerivedConstants, ProblemSpec};
use crate::{Error, Result};

/// Default saturation scale `A = e^e`, the smallest value guaranteeing
/// `eta_eps` lies in `(0, 1/e]` for every `delta_eps <= 1`.
pub fn default_a() -> f64 {
    std::f64::consts::E.exp()
}

/// One regularization level.
#[derive(Debug, Clone)]
pub struct RegLevel {
    pub eps: f64,
    pub d_eps: Field,
    pub delta_eps: f64,
    pub eta_eps: f64,
    pub w0_eps: Field,
    pub a_param: f64,
}

impl RegLevel {
    /// Largest horizon on which the lower barrier stays above `delta_eps`.
    pub fn gate(&self, gamma_upper: f64) -> f64 {
        self.eta_eps / gamma_upper * (1.0 / self.delta_eps.sqrt()).ln()
    }

    /// Exponential lower barrier for the tissue variable at time `t`.
    pub fn barrier(&self, t: f64, gamma_upper: f64) -> f64 {
        self.delta_eps.sqrt() * (-gamma_upper * t / self.eta_eps).exp()
    }
}

/// Ordered family of levels with strictly decreasing `eps`.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub levels: Vec<RegLevel>,
    pub eps0: f64,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Mollify `sqrt(d)` and return `d_eps = (S_sigma[sqrt d])^2 + sqrt(eps)`.
///
/// The mollifier is a compactly supported bump of width
/// `sigma = sqrt(eps) (b - a)`, applied to the even-reflected extension of
/// `sqrt d` and discretized with nonnegative normalized weights, so the
/// smoothed function inherits both the supremum and the Lipschitz constant
/// of `sqrt d` exactly.
pub fn mollify_sqrt_d(spec: &ProblemSpec, eps: f64, grid: &Grid1D) -> Result<Field> {
    let sigma = eps.sqrt() * spec.length();
    let m = 201usize;
    let dy = 2.0 * sigma / m as f64;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut wsum = 0.0;
    for k in 0..m {
        let y = -sigma + (k as f64 + 0.5) * dy;
        let w = bump01((y + sigma) / (2.0 * sigma));
        nodes.push(y);
        weights.push(w);
        wsum += w;
    }
    for w in &mut weights {
        *w /= wsum;
    }

    let reflect = |mut x: f64| -> f64 {
        if x < spec.a {
            x = 2.0 * spec.a - x;
        }
        if x > spec.b {
            x = 2.0 * spec.b - x;
        }
        x.clamp(spec.a, spec.b)
    };
    let sqrt_d = |x: f64| spec.d.eval(reflect(x)).max(0.0).sqrt();

    let floor = eps.sqrt();
    let values: Vec<f64> = grid
        .centers
        .iter()
        .map(|&x| {
            let s: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&y, &w)| w * sqrt_d(x - y))
                .sum();
            s * s + floor
        })
        .collect();
    Ok(Field::new(values))
}

/// Solve `g(w) = eps` on `[0, min(delta^2, M)]` by bisection to absolute
/// tolerance `1e-14`.
pub fn delta_eps(g: &RateFn, eps: f64, delta: f64, m: f64) -> Result<f64> {
    let hi0 = delta.powi(2).min(m);
    let ghi = g.eval(hi0);
    if ghi <= eps {
        return Err(Error::BracketFailure {
            hi: hi0,
            ghi,
            eps,
        });
    }
    let (mut lo, mut hi) = (0.0f64, hi0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if g.eval(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `eta_eps = ln ln(A / sqrt(delta_eps)) / ln(A / sqrt(delta_eps))`.
pub fn eta_eps(delta_eps: f64, a_param: f64) -> f64 {
    debug_assert!(a_param >= default_a() - 1e-9 && delta_eps > 0.0);
    let z = (a_param / delta_eps.sqrt()).ln();
    z.ln() / z
}

/// Build the full schedule for a strictly decreasing `eps` list.
pub fn build_schedule(
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    eps_list: &[f64],
    a_param: f64,
) -> Result<Schedule> {
    if eps_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvariantViolation(
            "eps list must be strictly decreasing".into(),
        ));
    }
    let mut levels = Vec::with_capacity(eps_list.len());
    for (index, &eps) in eps_list.iter().enumerate() {
        let level = build_level(spec, consts, grid, eps, a_param)
            .map_err(|e| e.at_level(index, eps))?;
        levels.push(level);
    }
    // Monotonicity along the schedule: delta_eps strictly decreasing and the
    // gate product strictly increasing (discrete witness of the divergence
    // of eta_eps ln(1/sqrt(delta_eps))).
    for pair in levels.windows(2) {
        if pair[1].delta_eps >= pair[0].delta_eps {
            return Err(Error::InvariantViolation(format!(
                "delta_eps not strictly decreasing: {} then {}",
                pair[0].delta_eps, pair[1].delta_eps
            )));
        }
        let gate = |l: &RegLevel| l.eta_eps * (1.0 / l.delta_eps.sqrt()).ln();
        if gate(&pair[1]) <= gate(&pair[0]) {
            return Err(Error::InvariantViolation(format!(
                "eta ln(1/sqrt(delta)) not strictly increasing: {} then {}",
                gate(&pair[0]),
                gate(&pair[1])
            )));
        }
    }
    Ok(Schedule {
        levels,
        eps0: consts.eps0,
    })
}

/// Build and verify a single level.
pub fn build_level(
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
    eps: f64,
    a_param: f64,
) -> Result<RegLevel> {
    if !(eps > 0.0 && eps < consts.eps0) {
        return Err(Error::InvariantViolation(format!(
            "eps = {eps} outside the admissible range (0, {})",
            consts.eps0
        )));
    }
    let d_eps = mollify_sqrt_d(spec, eps, grid)?;
    let de = delta_eps(&spec.g, eps, spec.delta, consts.m)?;
    let eta = eta_eps(de, a_param);
    let w0_eps = grid.sample(|x| spec.w0.eval(x) + de.sqrt());
    let level = RegLevel {
        eps,
        d_eps,
        delta_eps: de,
        eta_eps: eta,
        w0_eps,
        a_param,
    };
    verify_level(&level, spec, consts, grid)?;
    Ok(level)
}

/// Check every level invariant exhaustively on the grid (relative tolerance
/// 1e-9 on the inequality checks).
pub fn verify_level(
    level: &RegLevel,
    spec: &ProblemSpec,
    consts: &DerivedConstants,
    grid: &Grid1D,
) -> Result<()> {
    const RTOL: f64 = 1e-9;
    let eps = level.eps;
    let floor = eps.sqrt();
    let d_inf = sup_scan(|x| spec.d.eval(x), spec.a, spec.b, 8 * grid.n);

    let dmin = level.d_eps.min();
    let dmax = level.d_eps.max();
    if dmin < floor * (1.0 - RTOL) || dmax > (d_inf + 1.0) * (1.0 + RTOL) {
        return Err(Error::InvariantViolation(format!(
            "d_eps out of range: [{dmin}, {dmax}] vs [sqrt(eps), ||d||+1] = [{floor}, {}]",
            d_inf + 1.0
        )));
    }

    for f in 1..grid.n {
        let dl = level.d_eps[f - 1];
        let dr = level.d_eps[f];
        let slope = (dr - dl) / grid.h;
        let ratio = slope * slope / (0.5 * (dl + dr));
        if ratio > consts.k1 * (1.0 + RTOL) + 1e-30 {
            return Err(Error::InvariantViolation(format!(
                "discrete d_eps_x^2/d_eps = {ratio} exceeds K1 = {} at face {f} \
                 (grid too coarse for the mollifier width?)",
                consts.k1
            )));
        }
    }

    if !(level.delta_eps > 0.0 && level.delta_eps < spec.delta.powi(2)) {
        return Err(Error::InvariantViolation(format!(
            "delta_eps = {} outside (0, delta^2 = {})",
            level.delta_eps,
            spec.delta.powi(2)
        )));
    }

    // g >= eps on [delta_eps, M], sampled.
    let scan = 2000;
    for j in 0..=scan {
        let w = level.delta_eps + (consts.m - level.delta_eps) * j as f64 / scan as f64;
        let gv = spec.g.eval(w);
        if gv < eps * (1.0 - 1e-6) {
            return Err(Error::InvariantViolation(format!(
                "g({w}) = {gv} < eps = {eps} inside [delta_eps, M]"
            )));
        }
    }

    let eta_expected = eta_eps(level.delta_eps, level.a_param);
    if (level.eta_eps - eta_expected).abs() > 1e-12
        || !(level.eta_eps > 0.0 && level.eta_eps <= 1.0 / std::f64::consts::E + 1e-12)
    {
        return Err(Error::InvariantViolation(format!(
            "eta_eps = {} violates its defining formula or range (0, 1/e]",
            level.eta_eps
        )));
    }
    Ok(())
}

/// Indices of the levels whose gate covers the horizon `T`, i.e. those with
/// `T <= (eta_eps / Gamma) ln(1 / sqrt(delta_eps))`. May be empty; the caller
/// should then extend the schedule toward smaller `eps`.
pub fn epsilon_star(t: f64, schedule: &Schedule, gamma_upper: f64) -> Vec<usize> {
    assert!(t > 0.0);
    schedule
        .levels
        .iter()
        .enumerate()
        .filter(|(_, l)| t <= l.gate(gamma_upper))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{Reaction, SpaceProfile};
    use crate::problem::derive_constants;

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

    #[test]
    fn mollifying_a_constant_is_exact() {
        let mut spec = plateau_spec();
        spec.d = SpaceProfile::Constant(1.0);
        let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
        for eps in [1e-2, 1e-4] {
            let d_eps = mollify_sqrt_d(&spec, eps, &grid).unwrap();
            for &v in &d_eps.values {
                assert!(
                    (v - (1.0 + eps.sqrt())).abs() < 1e-13,
                    "constant must mollify to itself: {v}"
                );
            }
        }
    }

    #[test]
    fn plateau_level_invariants_hold() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 2000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let level = build_level(&spec, &consts, &grid, 1e-4, default_a()).unwrap();
        // On the plateau interior the smoothed sqrt(d) vanishes, so the floor
        // is attained exactly.
        assert!(
            (level.d_eps.min() - 0.01).abs() < 1e-12,
            "min d_eps = {}",
            level.d_eps.min()
        );
        // Discrete shape constant stays below K1 = 4.
        for f in 1..grid.n {
            let slope = (level.d_eps[f] - level.d_eps[f - 1]) / grid.h;
            let ratio = slope * slope / (0.5 * (level.d_eps[f] + level.d_eps[f - 1]));
            assert!(ratio <= 4.0 + 1e-9, "face {f}: ratio {ratio}");
        }
    }

    #[test]
    fn sup_distance_to_d_decreases_with_eps() {
        let spec = plateau_spec();
        let grid = Grid1D::new(0.0, 1.0, 400).unwrap();
        let d_true = grid.sample(|x| spec.d.eval(x));
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6] {
            let d_eps = mollify_sqrt_d(&spec, eps, &grid).unwrap();
            let dist = d_eps
                .values
                .iter()
                .zip(&d_true.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            // The constructive bound Lip sigma (2 ||sqrt d|| + Lip sigma) + sqrt(eps).
            let lip = 1.0;
            let sigma = eps.sqrt();
            let bound = lip * sigma * (2.0 * 0.3 + lip * sigma) + eps.sqrt();
            assert!(dist <= bound + 1e-12, "eps={eps}: dist {dist} > bound {bound}");
            assert!(dist < prev, "sup distance must strictly decrease");
            prev = dist;
        }
    }

    #[test]
    fn delta_eps_inverts_g() {
        let g = RateFn::identity();
        let de = delta_eps(&g, 1e-4, 0.5, 1.0).unwrap();
        assert!((de - 1e-4).abs() < 1e-12);

        // g = w(1 - w): root (1 - sqrt(1 - 4 eps)) / 2.
        let g = RateFn::Logistic { rate: 1.0 };
        let de = delta_eps(&g, 1e-4, 0.5, 0.25).unwrap();
        let expected = (1.0 - (1.0 - 4e-4f64).sqrt()) / 2.0;
        assert!((de - expected).abs() < 1e-12, "{de} vs {expected}");

        // Strictly decreasing along an eps sequence.
        let g = RateFn::identity();
        let seq: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| delta_eps(&g, e, 0.5, 1.0).unwrap())
            .collect();
        assert!(seq[0] > seq[1] && seq[1] > seq[2]);
        assert!((seq[0] - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn delta_eps_bracket_failure() {
        let g = RateFn::identity();
        match delta_eps(&g, 0.5, 0.5, 1.0) {
            Err(Error::BracketFailure { .. }) => {}
            other => panic!("expected BracketFailure, got {other:?}"),
        }
    }

    #[test]
    fn eta_formula_values() {
        // A / sqrt(delta) = e^e gives ln ln = 1, ln = e, eta = 1/e.
        let eta = eta_eps(1.0, default_a());
        assert!((eta - 1.0 / std::f64::consts::E).abs() < 1e-14);

        // Worked value at delta_eps = 1e-4: ln(A/1e-2) = 7.3234451,
        // ln ln = 1.9910798, ratio 0.2718775.
        let eta = eta_eps(1e-4, default_a());
        assert!((eta - 0.2718775).abs() < 1e-6, "eta = {eta}");

        // eta decreases while eta ln(1/sqrt(delta)) increases as delta drops.
        let deltas = [1e-2, 1e-6, 1e-10];
        let etas: Vec<f64> = deltas.iter().map(|&d| eta_eps(d, default_a())).collect();
        let gates: Vec<f64> = deltas
            .iter()
            .zip(&etas)
            .map(|(&d, &e)| e * (1.0 / d.sqrt()).ln())
            .collect();
        assert!(etas[0] > etas[1] && etas[1] > etas[2]);
        assert!(gates[0] < gates[1] && gates[1] < gates[2]);
    }

    #[test]
    fn schedule_construction_and_invariants() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 2000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let sched = build_schedule(&spec, &consts, &grid, &[1e-2, 1e-3, 1e-4], default_a())
            .unwrap();
        assert_eq!(sched.len(), 3);
        for level in &sched.levels {
            verify_level(level, &spec, &consts, &grid).unwrap();
        }
        // Empty schedule is valid.
        let empty = build_schedule(&spec, &consts, &grid, &[], default_a()).unwrap();
        assert!(empty.is_empty());
        // Non-decreasing list is rejected.
        assert!(build_schedule(&spec, &consts, &grid, &[1e-3, 1e-2], default_a()).is_err());
    }

    #[test]
    fn lifted_initial_datum() {
        let mut spec = plateau_spec();
        spec.w0 = SpaceProfile::Constant(0.0);
        spec.delta = 0.2;
        let consts = derive_constants(&spec, 1000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 50).unwrap();
        // eps0 = g(delta^2)/2 = 0.02, so use eps below that.
        let level = build_level(&spec, &consts, &grid, 1e-2, default_a()).unwrap();
        for &v in &level.w0_eps.values {
            assert!((v - 0.1).abs() < 1e-12, "w0 + sqrt(1e-2) = 0.1, got {v}");
        }
    }

    #[test]
    fn gate_selects_levels() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 2000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let sched = build_schedule(&spec, &consts, &grid, &[1e-2, 1e-3, 1e-4], default_a())
            .unwrap();
        // Worked example: eta(1e-4) ~ 0.27189, gate = eta ln(100) ~ 1.2521.
        let finest = &sched.levels[2];
        assert!((finest.gate(1.0) - 1.2521).abs() < 1e-4, "gate = {}", finest.gate(1.0));

        let valid_t1 = epsilon_star(1.0, &sched, consts.gamma_upper);
        assert_eq!(valid_t1, vec![1, 2], "coarsest level must miss the T=1 gate");
        let valid_t2 = epsilon_star(2.0, &sched, consts.gamma_upper);
        assert!(valid_t2.is_empty());
        let tiny_t = epsilon_star(1e-9, &sched, consts.gamma_upper);
        assert_eq!(tiny_t, vec![0, 1, 2]);
        // Doubling Gamma shrinks (or keeps) the valid set.
        let doubled = epsilon_star(1.0, &sched, 2.0 * consts.gamma_upper);
        assert!(doubled.iter().all(|i| valid_t1.contains(i)));
    }

    #[test]
    fn barrier_consistency_for_valid_levels() {
        let spec = plateau_spec();
        let consts = derive_constants(&spec, 2000).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let sched = build_schedule(&spec, &consts, &grid, &[1e-3, 1e-4], default_a()).unwrap();
        let t_final = 1.0;
        for &i in &epsilon_star(t_final, &sched, consts.gamma_upper) {
            let level = &sched.levels[i];
            let min_barrier = (0..=1000)
                .map(|k| level.barrier(t_final * k as f64 / 1000.0, consts.gamma_upper))
                .fold(f64::INFINITY, f64::min);
            assert!(
                min_barrier >= level.delta_eps * (1.0 - 1e-12),
                "barrier dips below delta_eps for level {i}"
            );
            // Equality is attained exactly at the gate.
            let at_gate = level.barrier(level.gate(consts.gamma_upper), consts.gamma_upper);
            assert!((at_gate - level.delta_eps).abs() < 1e-12 * level.delta_eps.max(1e-30));
        }
    }
}
