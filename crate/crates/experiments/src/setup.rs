//! Phase space and initial data for each preset family.

use std::f64::consts::PI;

use bgk_core::dlra::{moment_direction, Factors, LowRankState};
use bgk_core::linalg::hcat;
use bgk_core::{
    tensor_velocity_grid_2d, BoundaryVariant, DMatrix, DVector, FullState, PhaseSpace, SpatialGrid, VelocityGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Family, RunConfig};
use crate::error::Result;

pub const BEAM_VELOCITY: [f64; 2] = [-1.0, -1.0];

impl Family {
    /// Spatial domain `[a, b]` on every axis.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Family::PlaneSource1d => (-10.0, 10.0),
            Family::PlaneSource2d => (-3.0, 3.0),
            Family::Beam2d => (-5.0, 5.0),
        }
    }

    /// Width of the initial density profile.
    pub fn sigma_ic(self) -> f64 {
        match self {
            Family::PlaneSource1d | Family::PlaneSource2d => 0.3,
            Family::Beam2d => 0.01,
        }
    }
}

pub fn phase_space(c: &RunConfig) -> Result<PhaseSpace> {
    let (a, b) = c.preset.family().domain();
    let ps = match c.dim() {
        1 => PhaseSpace::new_1d(c.n_x, a, b, c.n_v)?,
        _ => {
            let g = SpatialGrid::new(c.n_x, a, b)?;
            PhaseSpace::new(vec![g, g], BoundaryVariant::PeriodicCirculant, tensor_velocity_grid_2d(c.n_v, c.n_v)?)?
        }
    };
    Ok(ps)
}

/// Initial density at every spatial point.
pub fn initial_density(family: Family, ps: &PhaseSpace) -> DVector<f64> {
    let s = family.sigma_ic();
    DVector::from_fn(ps.n_space(), |j, _| {
        let x = ps.coordinates(j);
        let r2: f64 = x.iter().map(|xi| xi * xi).sum();
        match family {
            Family::PlaneSource1d => ((-r2 / (2.0 * s * s)).exp() / (2.0 * PI * s * s).sqrt()).max(1e-4),
            Family::PlaneSource2d | Family::Beam2d => {
                (100.0 / (4.0 * PI * s * s) * (-r2 / (4.0 * s * s)).exp()).max(0.1) / (4.0 * PI)
            }
        }
    })
}

/// Velocity profile `h` of the initial `g(x, v) = h(v)`, normalized so that
/// `(2 pi)^{-d/2} sum_k w_half_k h_k = 1` on the discrete grid.
pub fn initial_profile(family: Family, vgrid: &VelocityGrid) -> DVector<f64> {
    let h = match family {
        Family::PlaneSource1d | Family::PlaneSource2d => return DVector::from_element(vgrid.n_v, 1.0),
        Family::Beam2d => {
            // exp(-|v - v_beam|^2 / (4 s^2)) is far below the smallest normal
            // float at most nodes; the prefactor and the maximum are divided
            // out since the discrete normalization fixes the scale anyway
            let s = family.sigma_ic();
            let expo: Vec<f64> = (0..vgrid.n_v)
                .map(|k| {
                    let d2: f64 = (0..vgrid.dim()).map(|a| (vgrid.components[a][k] - BEAM_VELOCITY[a]).powi(2)).sum();
                    -d2 / (4.0 * s * s)
                })
                .collect();
            let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            DVector::from_iterator(vgrid.n_v, expo.iter().map(|e| (e - top).exp()))
        }
    };
    let m: f64 = h.iter().zip(&vgrid.w_half).map(|(h, w)| h * w).sum::<f64>() / vgrid.maxwellian_norm();
    h / m
}

pub fn initial_full(c: &RunConfig, ps: &PhaseSpace) -> Result<FullState> {
    let family = c.preset.family();
    let rho = initial_density(family, ps);
    let h = initial_profile(family, &ps.velocity);
    let g = DMatrix::from_fn(ps.n_space(), ps.n_v(), |_, k| h[k]);
    Ok(FullState::new(rho, g, 0.0)?)
}

/// Rank-one factorization of `g = 1 hᵀ`, padded to rank `r0`. The velocity
/// basis is completed with the moment direction first, then seeded random
/// directions; the spatial basis with random directions.
pub fn initial_low_rank(c: &RunConfig, ps: &PhaseSpace) -> Result<LowRankState> {
    let family = c.preset.family();
    let rho = initial_density(family, ps);
    let h = initial_profile(family, &ps.velocity);
    let (n_x, n_v) = (ps.n_space(), ps.n_v());
    let hn = h.norm();
    let factors = Factors {
        x: DMatrix::from_element(n_x, 1, 1.0 / (n_x as f64).sqrt()),
        s: DMatrix::from_element(1, 1, (n_x as f64).sqrt() * hn),
        v: DMatrix::from_column_slice(n_v, 1, (h / hn).as_slice()),
    };
    let state = LowRankState::new(rho, factors, 0.0)?;
    let r0 = c.r0.min(n_x).min(n_v);
    if r0 <= 1 {
        return Ok(state);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let fill_x = DMatrix::from_fn(n_x, r0, |_, _| rng.random_range(-1.0..1.0));
    let z = moment_direction(&ps.velocity);
    let random_v = DMatrix::from_fn(n_v, r0, |_, _| rng.random_range(-1.0..1.0));
    let fill_v = hcat(&DMatrix::from_column_slice(n_v, 1, z.as_slice()), &random_v);
    Ok(state.padded(r0, &fill_x, &fill_v)?)
}
