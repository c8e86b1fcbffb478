use crate::error::{Error, Result};

/// Uniform periodic grid on `[a, b)` with `x_j = a + j dx`, `dx = (b - a) / n_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub n_x: usize,
    pub a: f64,
    pub b: f64,
    pub dx: f64,
}

impl SpatialGrid {
    pub fn new(n_x: usize, a: f64, b: f64) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::InvalidArgument("n_x must be positive".into()));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid domain [{a}, {b}]")));
        }
        Ok(Self { n_x, a, b, dx: (b - a) / n_x as f64 })
    }

    pub fn point(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.point(j)).collect()
    }
}
