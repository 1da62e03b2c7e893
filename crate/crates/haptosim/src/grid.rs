//! Uniform 1D cell-centered grid with face-based operators and
//! degeneracy-set classification.

use crate::{Error, Result};

/// Uniform cell-centered grid on `(a, b)` with `n` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
    pub centers: Vec<f64>,
    pub faces: Vec<f64>,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::DomainError(format!(
                "interval endpoints must satisfy a < b, got ({a}, {b})"
            )));
        }
        if n < 4 {
            return Err(Error::DomainError(format!("cell count must be >= 4, got {n}")));
        }
        let h = (b - a) / n as f64;
        let centers = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
        let faces = (0..=n).map(|i| a + i as f64 * h).collect();
        Ok(Self {
            a,
            b,
            n,
            h,
            centers,
            faces,
        })
    }

    /// Interval length `b - a`.
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Sample a function of position at the cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::new(self.centers.iter().map(|&x| f(x)).collect())
    }
}

/// Cell-averaged scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// Face gradient under homogeneous Neumann closure: interior face `i` holds
/// `(v[i] - v[i-1]) / h`, boundary faces hold 0.
pub fn face_gradient(field: &Field, grid: &Grid1D) -> Vec<f64> {
    let n = grid.n;
    debug_assert_eq!(field.len(), n);
    let mut g = vec![0.0; n + 1];
    for i in 1..n {
        g[i] = (field[i] - field[i - 1]) / grid.h;
    }
    g
}

/// Discrete integral `h * sum(values)`; exact for cell-average data.
pub fn integrate(field: &Field, grid: &Grid1D) -> f64 {
    grid.h * field.values.iter().sum::<f64>()
}

/// Discrete integral restricted to the cells selected by `mask`.
pub fn integrate_masked(field: &Field, grid: &Grid1D, mask: &[bool]) -> f64 {
    debug_assert_eq!(field.len(), mask.len());
    grid.h
        * field
            .values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v)
            .sum::<f64>()
}

/// Partition of cells into the degeneracy set `{d <= tol_zero}` and its
/// complement, with an interior core at a prescribed physical margin from
/// the zero/positive interface.
#[derive(Debug, Clone)]
pub struct DegeneracyMask {
    pub zero_cells: Vec<bool>,
    pub positive_cells: Vec<bool>,
    pub interior_zero_cells: Vec<bool>,
}

impl DegeneracyMask {
    pub fn count_zero(&self) -> usize {
        self.zero_cells.iter().filter(|&&b| b).count()
    }

    pub fn count_interior(&self) -> usize {
        self.interior_zero_cells.iter().filter(|&&b| b).count()
    }

    pub fn has_degeneracy(&self) -> bool {
        self.count_zero() > 0
    }
}

/// Classify cells by the sampled diffusion values.
///
/// A zero cell is interior when its center is at least `margin` away from
/// every face separating it from the positive region. Zero runs touching the
/// domain boundary have no interface on that side.
pub fn classify(d_field: &Field, grid: &Grid1D, tol_zero: f64, margin: f64) -> DegeneracyMask {
    let n = grid.n;
    let zero_cells: Vec<bool> = d_field.values.iter().map(|&d| d <= tol_zero).collect();
    let positive_cells: Vec<bool> = zero_cells.iter().map(|&z| !z).collect();

    // Interface positions: faces between a zero cell and a positive cell.
    let mut interfaces = Vec::new();
    for f in 1..n {
        if zero_cells[f - 1] != zero_cells[f] {
            interfaces.push(grid.faces[f]);
        }
    }

    let interior_zero_cells: Vec<bool> = (0..n)
        .map(|i| {
            zero_cells[i]
                && interfaces
                    .iter()
                    .all(|&p| (grid.centers[i] - p).abs() >= margin)
        })
        .collect();

    DegeneracyMask {
        zero_cells,
        positive_cells,
        interior_zero_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::SpaceProfile;

    fn unit_grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn face_gradient_of_constant_is_zero() {
        let g = unit_grid(10);
        let f = Field::constant(10, 3.25);
        assert!(face_gradient(&f, &g).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn face_gradient_of_linear_is_one() {
        let g = unit_grid(10);
        let f = Field::new(g.centers.clone());
        let grad = face_gradient(&f, &g);
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[10], 0.0);
        for i in 1..10 {
            assert!((grad[i] - 1.0).abs() < 1e-12, "face {i}: {}", grad[i]);
        }
    }

    #[test]
    fn face_gradient_of_indicator_has_single_jump() {
        let g = unit_grid(10);
        let f = Field::new((0..10).map(|i| if i >= 5 { 1.0 } else { 0.0 }).collect());
        let grad = face_gradient(&f, &g);
        for i in 0..=10 {
            let expected = if i == 5 { 1.0 / g.h } else { 0.0 };
            assert!((grad[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn integrate_is_exact_for_constants_and_linears() {
        for n in [4, 10, 33, 200] {
            let g = unit_grid(n);
            assert!((integrate(&Field::constant(n, 1.0), &g) - 1.0).abs() < 1e-13);
            let lin = Field::new(g.centers.clone());
            assert!(
                (integrate(&lin, &g) - 0.5).abs() < 1e-13,
                "midpoint rule must be exact for linears at n={n}"
            );
        }
    }

    #[test]
    fn integrate_masked_empty_mask_is_zero() {
        let g = unit_grid(8);
        let f = Field::constant(8, 2.0);
        assert_eq!(integrate_masked(&f, &g, &vec![false; 8]), 0.0);
    }

    #[test]
    fn classify_no_degeneracy() {
        let g = unit_grid(10);
        let mask = classify(&Field::constant(10, 1.0), &g, 1e-14, 0.1);
        assert_eq!(mask.count_zero(), 0);
        assert!(!mask.has_degeneracy());
    }

    #[test]
    fn classify_plateau_cells_and_interior_core() {
        let g = unit_grid(100);
        let d = SpaceProfile::PlateauSq {
            center: 0.5,
            halfwidth: 0.2,
        };
        let df = g.sample(|x| d.eval(x));
        let mask = classify(&df, &g, 1e-14, 0.1);
        assert_eq!(mask.count_zero(), 40, "zero cells must cover [0.3, 0.7]");
        for i in 0..100 {
            let x = g.centers[i];
            assert_eq!(mask.zero_cells[i], (0.3..=0.7).contains(&x), "cell at {x}");
            assert_eq!(
                mask.interior_zero_cells[i],
                (0.4..=0.6).contains(&x),
                "interior cell at {x}"
            );
        }
        assert_eq!(mask.count_interior(), 20);
    }

    /// Discrete integration by parts: with zero boundary fluxes,
    /// `h * sum_i u_i * div_i(q) = -h * sum_faces grad(u)_f * q_f`
    /// for any face flux `q` vanishing at the boundary faces.
    #[test]
    fn summation_by_parts_is_exact() {
        let g = unit_grid(16);
        let u = Field::new((0..16).map(|i| ((i * 7 + 3) % 5) as f64 * 0.3 - 0.4).collect());
        let mut q = vec![0.0; 17];
        for (f, qf) in q.iter_mut().enumerate().take(16).skip(1) {
            *qf = ((f * 11 + 1) % 7) as f64 * 0.2 - 0.5;
        }
        let lhs: f64 = (0..16).map(|i| g.h * u[i] * (q[i + 1] - q[i]) / g.h).sum();
        let grad = face_gradient(&u, &g);
        let rhs: f64 = -(0..=16).map(|f| g.h * grad[f] * q[f]).sum::<f64>();
        assert!(
            (lhs - rhs).abs() < 1e-12,
            "SBP identity violated: {lhs} vs {rhs}"
        );
    }
}
