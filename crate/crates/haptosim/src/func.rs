//! Tagged scalar function families.
//!
//! Problem data (diffusion profile, initial data, absorption rate, reaction
//! term) is supplied as small closed-form families plus a tabulated fallback
//! with shape-preserving interpolation. Every family carries an analytic
//! derivative so that hypothesis scans and estimate constants never rely on
//! finite differencing of user input.

use crate::{Error, Result};

/// Shape-preserving piecewise-cubic interpolant (Fritsch-Carlson PCHIP).
///
/// Monotone data produces a monotone interpolant; general data is
/// overshoot-limited. Evaluation clamps to the table range.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Node derivatives, same length as `xs`.
    ms: Vec<f64>,
}

impl MonotoneTable {
    /// Build from strictly increasing abscissae. Requires at least two points.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::DomainError(format!(
                "tabulated function needs >= 2 points with matching lengths, got {} / {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::DomainError(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|p| p[1] - p[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ms = vec![0.0; n];
        if n == 2 {
            ms[0] = delta[0];
            ms[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    ms[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ms[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ms[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
            ms[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, ms })
    }

    fn segment(&self, x: f64) -> (usize, f64, f64) {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("NaN abscissa"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        (i, h, t)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, h, t) = self.segment(x);
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.ms[i], self.ms[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + h * m1 * (t3 - t2)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (i, h, t) = self.segment(x);
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.ms[i], self.ms[i + 1]);
        let t2 = t * t;
        (y0 * (6.0 * t2 - 6.0 * t)
            + h * m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + y1 * (-6.0 * t2 + 6.0 * t)
            + h * m1 * (3.0 * t2 - 2.0 * t))
            / h
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }
}

/// Non-centered three-point endpoint slope with the usual PCHIP limiting.
fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}

/// Scalar function of position on a fixed interval.
///
/// `Cosine` and `SinSq` are expressed in the normalized coordinate
/// `s = (x - a) / (b - a)` and therefore carry the interval.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceProfile {
    Constant(f64),
    /// `offset + amp * cos(k pi s)`; `k` half-waves across the interval.
    Cosine {
        offset: f64,
        amp: f64,
        k: u32,
        a: f64,
        len: f64,
    },
    /// `(max(0, |x - center| - halfwidth))^2`; vanishes on a plateau.
    PlateauSq { center: f64, halfwidth: f64 },
    /// `sin^2(k pi s)`; vanishes exactly at the interval endpoints.
    SinSq { k: u32, a: f64, len: f64 },
    Tabulated(MonotoneTable),
}

impl SpaceProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpaceProfile::Constant(c) => *c,
            SpaceProfile::Cosine {
                offset,
                amp,
                k,
                a,
                len,
            } => {
                let s = (x - a) / len;
                offset + amp * (*k as f64 * std::f64::consts::PI * s).cos()
            }
            SpaceProfile::PlateauSq { center, halfwidth } => {
                let s = ((x - center).abs() - halfwidth).max(0.0);
                s * s
            }
            SpaceProfile::SinSq { k, a, len } => {
                let s = (x - a) / len;
                let v = (*k as f64 * std::f64::consts::PI * s).sin();
                v * v
            }
            SpaceProfile::Tabulated(t) => t.eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            SpaceProfile::Constant(_) => 0.0,
            SpaceProfile::Cosine {
                amp, k, a, len, ..
            } => {
                let om = *k as f64 * std::f64::consts::PI / len;
                -amp * om * (om * (x - a)).sin()
            }
            SpaceProfile::PlateauSq { center, halfwidth } => {
                let r = (x - center).abs() - halfwidth;
                if r <= 0.0 {
                    0.0
                } else {
                    2.0 * r * (x - center).signum()
                }
            }
            SpaceProfile::SinSq { k, a, len } => {
                let om = *k as f64 * std::f64::consts::PI / len;
                om * (2.0 * om * (x - a)).sin()
            }
            SpaceProfile::Tabulated(t) => t.deriv(x),
        }
    }
}

/// Scalar rate function of the tissue variable `w >= 0`.
///
/// Used for both the absorption rate `g` and the reaction majorant `rho`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFn {
    Const(f64),
    /// `c w`
    Linear { slope: f64 },
    /// `c w (1 - w)`
    Logistic { rate: f64 },
    /// `c w^p`
    Power { coeff: f64, exponent: f64 },
    Tabulated(MonotoneTable),
}

impl RateFn {
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            RateFn::Const(c) => *c,
            RateFn::Linear { slope } => slope * w,
            RateFn::Logistic { rate } => rate * w * (1.0 - w),
            RateFn::Power { coeff, exponent } => coeff * w.powf(*exponent),
            RateFn::Tabulated(t) => t.eval(w),
        }
    }

    pub fn deriv(&self, w: f64) -> f64 {
        match self {
            RateFn::Const(_) => 0.0,
            RateFn::Linear { slope } => *slope,
            RateFn::Logistic { rate } => rate * (1.0 - 2.0 * w),
            RateFn::Power { coeff, exponent } => {
                if w == 0.0 && *exponent < 1.0 {
                    f64::INFINITY
                } else {
                    coeff * exponent * w.powf(exponent - 1.0)
                }
            }
            RateFn::Tabulated(t) => t.deriv(w),
        }
    }

    /// Identity rate `g(w) = w`.
    pub fn identity() -> Self {
        RateFn::Linear { slope: 1.0 }
    }
}

/// Reaction term `f(x, u, w)` of the cell equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Reaction {
    Zero,
    Const(f64),
    /// `r - u`
    LogisticU { r: f64 },
    /// `w (1 - u)`
    TissueLogistic,
}

impl Reaction {
    pub fn eval(&self, _x: f64, u: f64, w: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::Const(c) => *c,
            Reaction::LogisticU { r } => r - u,
            Reaction::TissueLogistic => w * (1.0 - u),
        }
    }

    /// Negative part `f_- = max(0, -f)`.
    pub fn neg_part(&self, x: f64, u: f64, w: f64) -> f64 {
        (-self.eval(x, u, w)).max(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Reaction::Zero) || matches!(self, Reaction::Const(c) if *c == 0.0)
    }
}

/// Compactly supported C-infinity bump on (0, 1), normalized to peak 1 at s = 1/2:
/// `exp(4 - 1/(s (1 - s)))`, zero outside (0, 1).
pub fn bump01(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let p = s * (1.0 - s);
        (4.0 - 1.0 / p).exp()
    }
}

/// Derivative of [`bump01`].
pub fn bump01_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let p = s * (1.0 - s);
        bump01(s) * (1.0 - 2.0 * s) / (p * p)
    }
}

fn sigma(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn sigma_deriv(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        sigma(x) / (x * x)
    }
}

/// C-infinity step: equals 1 for `s <= s0`, 0 for `s >= s1`, smooth in between.
pub fn step_down(s: f64, s0: f64, s1: f64) -> f64 {
    let q = (s - s0) / (s1 - s0);
    if q <= 0.0 {
        1.0
    } else if q >= 1.0 {
        0.0
    } else {
        sigma(1.0 - q) / (sigma(q) + sigma(1.0 - q))
    }
}

/// Derivative of [`step_down`] with respect to `s`.
pub fn step_down_deriv(s: f64, s0: f64, s1: f64) -> f64 {
    let q = (s - s0) / (s1 - s0);
    if q <= 0.0 || q >= 1.0 {
        0.0
    } else {
        let (a, b) = (sigma(q), sigma(1.0 - q));
        let (da, db) = (sigma_deriv(q), sigma_deriv(1.0 - q));
        // d/dq [ b / (a + b) ] with b = sigma(1-q): db/dq = -db.
        let num = -db * (a + b) - b * (da - db);
        num / ((a + b) * (a + b)) / (s1 - s0)
    }
}
