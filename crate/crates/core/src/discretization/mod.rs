//! Velocity quadrature, spatial grids, stencils and the time step rule.

mod grid;
mod quadrature;
mod stencil;

pub use grid::SpatialGrid;
pub use quadrature::{gauss_hermite_rule, tensor_velocity_grid_2d, VelocityGrid};
pub use stencil::{build_stencils, BoundaryVariant, Stencil, StencilSet};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `dt = cfl * dx / V` with `V = ceil(v_cap)` when `round_up_vcap` is set.
///
/// Rejects `cfl > 1`, which violates `max|v| dt <= dx`.
pub fn cfl_timestep(dx: f64, v_cap: f64, cfl: f64, round_up_vcap: bool) -> Result<f64> {
    if cfl > 1.0 {
        return Err(Error::CflViolation { cfl });
    }
    cfl_timestep_unchecked(dx, v_cap, cfl, round_up_vcap)
}

/// Same rule without the stability bound on `cfl`, for instability studies.
pub fn cfl_timestep_unchecked(dx: f64, v_cap: f64, cfl: f64, round_up_vcap: bool) -> Result<f64> {
    if !(dx > 0.0) || !(v_cap > 0.0) || !(cfl > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cfl_timestep needs dx > 0, v_cap > 0, cfl > 0 (got {dx}, {v_cap}, {cfl})"
        )));
    }
    let divisor = if round_up_vcap { v_cap.ceil() } else { v_cap };
    Ok(cfl * dx / divisor)
}

/// Which of the three difference operators to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    Centered,
    Second,
    Forward,
}

/// Spatial grid (one grid per axis, flattened with the first axis fastest),
/// its stencils and a velocity grid of the same dimension.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    pub axes: Vec<SpatialGrid>,
    pub stencils: Vec<StencilSet>,
    pub velocity: VelocityGrid,
    abs_components: Vec<Vec<f64>>,
}

impl PhaseSpace {
    pub fn new(axes: Vec<SpatialGrid>, variant: BoundaryVariant, velocity: VelocityGrid) -> Result<Self> {
        if axes.is_empty() || axes.len() != velocity.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} spatial axes but {} velocity dimensions",
                axes.len(),
                velocity.dim()
            )));
        }
        let stencils = axes
            .iter()
            .map(|g| build_stencils(g, variant))
            .collect::<Result<Vec<_>>>()?;
        let abs_components = velocity
            .components
            .iter()
            .map(|c| c.iter().map(|v| v.abs()).collect())
            .collect();
        Ok(Self { axes, stencils, velocity, abs_components })
    }

    /// One-dimensional phase space on `[a, b]` with `n_x` cells and `n_v` nodes.
    pub fn new_1d(n_x: usize, a: f64, b: f64, n_v: usize) -> Result<Self> {
        Self::new(
            vec![SpatialGrid::new(n_x, a, b)?],
            BoundaryVariant::PeriodicCirculant,
            gauss_hermite_rule(n_v)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn n_space(&self) -> usize {
        self.axes.iter().map(|g| g.n_x).product()
    }

    pub fn n_v(&self) -> usize {
        self.velocity.n_v
    }

    /// Product of the spacings.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|g| g.dx).product()
    }

    /// Smallest spacing over all axes, the `dx` of the CFL rule.
    pub fn min_dx(&self) -> f64 {
        self.axes.iter().map(|g| g.dx).fold(f64::INFINITY, f64::min)
    }

    /// Velocity component along `axis` for every node.
    pub fn velocity_component(&self, axis: usize) -> &[f64] {
        &self.velocity.components[axis]
    }

    pub fn abs_velocity_component(&self, axis: usize) -> &[f64] {
        &self.abs_components[axis]
    }

    /// Coordinates of flattened spatial point `j`.
    pub fn coordinates(&self, mut j: usize) -> Vec<f64> {
        self.axes
            .iter()
            .map(|g| {
                let i = j % g.n_x;
                j /= g.n_x;
                g.point(i)
            })
            .collect()
    }

    fn stride(&self, axis: usize) -> usize {
        self.axes[..axis].iter().map(|g| g.n_x).product()
    }

    fn stencil(&self, axis: usize, which: Difference) -> &Stencil {
        let s = &self.stencils[axis];
        match which {
            Difference::Centered => &s.d_x,
            Difference::Second => &s.d_xx,
            Difference::Forward => &s.d_plus,
        }
    }

    /// `dst += alpha D src` for a single vector over the flattened space.
    pub fn apply_vec_add(&self, axis: usize, which: Difference, alpha: f64, src: &[f64], dst: &mut [f64]) {
        self.stencil(axis, which)
            .apply_axis_add(alpha, src, self.stride(axis), dst);
    }

    /// `D m` applied to every column of `m` (rows are flattened space).
    pub fn apply(&self, axis: usize, which: Difference, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        self.apply_scaled_add(axis, which, m, |_| 1.0, &mut out);
        out
    }

    /// `out[:, k] += scale(k) D m[:, k]`.
    pub fn apply_scaled_add(
        &self,
        axis: usize,
        which: Difference,
        m: &DMatrix<f64>,
        scale: impl Fn(usize) -> f64,
        out: &mut DMatrix<f64>,
    ) {
        let st = self.stencil(axis, which);
        let stride = self.stride(axis);
        let n = m.nrows();
        for (k, (src, dst)) in m
            .as_slice()
            .chunks_exact(n)
            .zip(out.as_mut_slice().chunks_exact_mut(n))
            .enumerate()
        {
            let alpha = scale(k);
            if alpha != 0.0 {
                st.apply_axis_add(alpha, src, stride, dst);
            }
        }
    }

    /// Stabilized explicit transport increment
    /// `sum_a [ -dt D^x_a F diag(v_a) + (dt dx_a / 2) D^xx_a F diag(|v_a|) ]`.
    pub fn transport_increment(&self, f: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(f.nrows(), f.ncols());
        for axis in 0..self.dim() {
            let v = self.velocity_component(axis);
            let va = self.abs_velocity_component(axis);
            let half_dx = 0.5 * self.axes[axis].dx;
            self.apply_scaled_add(axis, Difference::Centered, f, |k| -dt * v[k], &mut out);
            self.apply_scaled_add(axis, Difference::Second, f, |k| dt * half_dx * va[k], &mut out);
        }
        out
    }
}
