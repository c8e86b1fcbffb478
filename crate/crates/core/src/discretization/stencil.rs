//! Central difference stencils on uniform periodic grids.
//!
//! A stencil is stored by its three diagonal coefficients and a boundary
//! treatment; it is applied matrix-free along one axis of a flattened
//! multi-dimensional grid.

use nalgebra::DMatrix;

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Treatment of the first and last rows of the stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryVariant {
    /// True circulant wrap; the summation-by-parts identities hold exactly.
    #[default]
    PeriodicCirculant,
    /// The rows `1` and `N` of `D^x` and `D^xx` set to zero and no wrap for
    /// `D^+`, as literally printed alongside the periodic assumption.
    PaperLiteralZeroedRows,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Boundary {
    Wrap,
    ZeroRows,
    /// No wrap-around, interior rows unchanged.
    Open,
}

/// Tridiagonal (plus corner) stencil with constant diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub n: usize,
    pub lower: f64,
    pub diag: f64,
    pub upper: f64,
    boundary: Boundary,
}

impl Stencil {
    /// Dense `n x n` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            if self.boundary == Boundary::ZeroRows && (j == 0 || j == n - 1) {
                continue;
            }
            m[(j, j)] += self.diag;
            match (j.checked_sub(1), self.boundary) {
                (Some(jm), _) => m[(j, jm)] += self.lower,
                (None, Boundary::Wrap) => m[(j, n - 1)] += self.lower,
                _ => {}
            }
            match (j + 1 < n, self.boundary) {
                (true, _) => m[(j, j + 1)] += self.upper,
                (false, Boundary::Wrap) => m[(j, 0)] += self.upper,
                _ => {}
            }
        }
        m
    }

    /// `dst += alpha * D src` along one axis of a flattened grid. The axis has
    /// `self.n` points separated by `stride` in memory; `src.len()` must be a
    /// multiple of `n * stride`.
    pub fn apply_axis_add(&self, alpha: f64, src: &[f64], stride: usize, dst: &mut [f64]) {
        let n = self.n;
        let block = n * stride;
        debug_assert_eq!(src.len() % block, 0);
        debug_assert_eq!(src.len(), dst.len());
        let (l, d, u) = (alpha * self.lower, alpha * self.diag, alpha * self.upper);
        for (sb, db) in src.chunks_exact(block).zip(dst.chunks_exact_mut(block)) {
            // interior rows
            for j in 1..n.saturating_sub(1) {
                let (s_prev, s_mid, s_next) = (
                    &sb[(j - 1) * stride..j * stride],
                    &sb[j * stride..(j + 1) * stride],
                    &sb[(j + 1) * stride..(j + 2) * stride],
                );
                let out = &mut db[j * stride..(j + 1) * stride];
                for i in 0..stride {
                    out[i] += l * s_prev[i] + d * s_mid[i] + u * s_next[i];
                }
            }
            if n == 1 {
                if self.boundary == Boundary::Wrap {
                    for i in 0..stride {
                        db[i] += (l + d + u) * sb[i];
                    }
                } else if self.boundary == Boundary::Open {
                    for i in 0..stride {
                        db[i] += d * sb[i];
                    }
                }
                continue;
            }
            let last = n - 1;
            match self.boundary {
                Boundary::ZeroRows => {}
                Boundary::Wrap | Boundary::Open => {
                    let wrap = if self.boundary == Boundary::Wrap { 1.0 } else { 0.0 };
                    for i in 0..stride {
                        let first_row = d * sb[i] + u * sb[stride + i] + wrap * l * sb[last * stride + i];
                        let last_row = l * sb[(last - 1) * stride + i]
                            + d * sb[last * stride + i]
                            + wrap * u * sb[i];
                        db[i] += first_row;
                        db[last * stride + i] += last_row;
                    }
                }
            }
        }
    }
}

/// The three spatial difference operators of one axis: centered first
/// derivative `d_x`, second derivative `d_xx` and forward difference `d_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilSet {
    pub d_x: Stencil,
    pub d_xx: Stencil,
    pub d_plus: Stencil,
    pub variant: BoundaryVariant,
    pub dx: f64,
}

pub fn build_stencils(grid: &SpatialGrid, variant: BoundaryVariant) -> Result<StencilSet> {
    let n = grid.n_x;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("stencils need n_x >= 3, got {n}")));
    }
    let dx = grid.dx;
    let (centered, plus) = match variant {
        BoundaryVariant::PeriodicCirculant => (Boundary::Wrap, Boundary::Wrap),
        BoundaryVariant::PaperLiteralZeroedRows => (Boundary::ZeroRows, Boundary::Open),
    };
    let d_x = Stencil { n, lower: -0.5 / dx, diag: 0.0, upper: 0.5 / dx, boundary: centered };
    let d_xx = Stencil {
        n,
        lower: 1.0 / (dx * dx),
        diag: -2.0 / (dx * dx),
        upper: 1.0 / (dx * dx),
        boundary: centered,
    };
    let d_plus = Stencil { n, lower: 0.0, diag: -1.0 / dx, upper: 1.0 / dx, boundary: plus };
    Ok(StencilSet { d_x, d_xx, d_plus, variant, dx })
}
