//! Weighted stability norm, moment bounds, the CFL inequality of the
//! stability proof and an instability demonstration for the naive scheme.

pub mod checks;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::discretization::{cfl_timestep, Difference, PhaseSpace, VelocityGrid};
use crate::dlra::LowRankState;
use crate::error::{Error, Result};
use crate::full_solver::{FullState, SchemeVariant};

/// One row of the diagnostics trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub rank: usize,
    pub h_norm_sq: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub mass: f64,
}

impl DiagRecord {
    pub fn for_full(state: &FullState, ps: &PhaseSpace) -> Self {
        let (kappa_plus, kappa_minus) = kappa_bounds(&state.g, &ps.velocity);
        Self {
            t: state.t,
            rank: ps.n_space().min(ps.n_v()),
            h_norm_sq: h_norm_sq_rho_g(&state.rho, &state.g, &ps.velocity),
            kappa_plus,
            kappa_minus,
            mass: mass(&state.rho, ps),
        }
    }

    pub fn for_low_rank(state: &LowRankState, ps: &PhaseSpace) -> Self {
        let (kappa_plus, kappa_minus) = kappa_bounds_low_rank(state, &ps.velocity);
        Self {
            t: state.t,
            rank: state.rank(),
            h_norm_sq: h_norm_sq_low_rank(state, &ps.velocity),
            kappa_plus,
            kappa_minus,
            mass: mass(&state.rho, ps),
        }
    }
}

/// `(2pi)^{d/2} sum_{j,k} f_jk^2 w_three_half_k`.
///
/// Entries of `f` far out in velocity underflow for large grids; use
/// [`h_norm_sq_rho_g`] when `rho` and `g` are available.
pub fn h_norm_sq(f: &DMatrix<f64>, vgrid: &VelocityGrid) -> f64 {
    let c = vgrid.maxwellian_norm();
    weighted_sq_sum(f, &vgrid.w_three_half) * c
}

/// The same norm for `f = M g` evaluated without forming `f`:
/// `(2pi)^{-d/2} sum_{j,k} rho_j^2 g_jk^2 w_half_k`.
pub fn h_norm_sq_rho_g(rho: &DVector<f64>, g: &DMatrix<f64>, vgrid: &VelocityGrid) -> f64 {
    let c = vgrid.maxwellian_norm();
    let n = g.nrows();
    let mut sum = 0.0;
    for (col, w) in g.as_slice().chunks_exact(n).zip(&vgrid.w_half) {
        let s: f64 = col.iter().zip(rho.iter()).map(|(g, r)| (r * g) * (r * g)).sum();
        sum += w * s;
    }
    sum / c
}

/// Factored evaluation `(2pi)^{-d/2} sum_j rho_j^2 K_j W K_jᵀ` with `K = X S`
/// and `W = Vᵀ diag(w_half) V`.
pub fn h_norm_sq_low_rank(state: &LowRankState, vgrid: &VelocityGrid) -> f64 {
    let c = vgrid.maxwellian_norm();
    let k = &state.x * &state.s;
    let w = crate::linalg::weighted_gram(&state.v, &vgrid.w_half, &state.v);
    let kw = &k * w;
    let sum: f64 = (0..k.nrows())
        .map(|j| state.rho[j] * state.rho[j] * k.row(j).dot(&kw.row(j)))
        .sum();
    sum / c
}

fn weighted_sq_sum(m: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    m.as_slice()
        .chunks_exact(n)
        .zip(w)
        .map(|(col, w)| w * col.iter().map(|x| x * x).sum::<f64>())
        .sum()
}

/// `(max_j, min_j)` of the moment `(2pi)^{-d/2} sum_k g_jk w_half_k`.
pub fn kappa_bounds(g: &DMatrix<f64>, vgrid: &VelocityGrid) -> (f64, f64) {
    let z = moment_weights(vgrid);
    extremes(&(g * z))
}

/// Factored evaluation; `V` is contracted with the weights first.
pub fn kappa_bounds_low_rank(state: &LowRankState, vgrid: &VelocityGrid) -> (f64, f64) {
    let z = moment_weights(vgrid);
    extremes(&(&state.x * (&state.s * (state.v.transpose() * z))))
}

fn moment_weights(vgrid: &VelocityGrid) -> DVector<f64> {
    let c = vgrid.maxwellian_norm();
    DVector::from_iterator(vgrid.n_v, vgrid.w_half.iter().map(|w| w / c))
}

fn extremes(m: &DVector<f64>) -> (f64, f64) {
    m.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)))
}

/// `sum_j rho_j` times the cell volume.
pub fn mass(rho: &DVector<f64>, ps: &PhaseSpace) -> f64 {
    rho.sum() * ps.cell_volume()
}

/// Both sides of the inequality behind the stability proof, along one axis:
///
/// ```text
/// lhs = dt ‖D^x F diag(v) - (dx/2) D^xx F diag(|v|)‖_H^2
/// rhs = dx ‖D^+ F diag(|v|^{1/2})‖_H^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportBoundTerms {
    pub lhs: f64,
    pub rhs: f64,
}

impl TransportBoundTerms {
    /// `lhs - rhs`; non-positive under the CFL bound.
    pub fn value(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Magnitude used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.rhs.abs()
    }
}

pub fn transport_bound_terms(f: &DMatrix<f64>, ps: &PhaseSpace, axis: usize, dt: f64) -> TransportBoundTerms {
    let v = ps.velocity_component(axis);
    let va = ps.abs_velocity_component(axis);
    let dx = ps.axes[axis].dx;
    let mut a = DMatrix::zeros(f.nrows(), f.ncols());
    ps.apply_scaled_add(axis, Difference::Centered, f, |k| v[k], &mut a);
    ps.apply_scaled_add(axis, Difference::Second, f, |k| -0.5 * dx * va[k], &mut a);
    let mut b = DMatrix::zeros(f.nrows(), f.ncols());
    ps.apply_scaled_add(axis, Difference::Forward, f, |k| va[k].sqrt(), &mut b);
    TransportBoundTerms {
        lhs: dt * h_norm_sq(&a, &ps.velocity),
        rhs: dx * h_norm_sq(&b, &ps.velocity),
    }
}

/// `lhs - rhs` of [`transport_bound_terms`].
pub fn transport_bound_gap(f: &DMatrix<f64>, ps: &PhaseSpace, axis: usize, dt: f64) -> f64 {
    transport_bound_terms(f, ps, axis, dt).value()
}

/// H-norm traces of the naive and the stable scheme from identical data.
#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityTrace {
    /// Includes `t = 0`; stops early if the naive run breaks down.
    pub naive: Vec<f64>,
    pub stable: Vec<f64>,
    /// Why the naive run stopped before the requested number of steps.
    pub naive_failure: Option<Error>,
}

/// `1 + amplitude cos(pi alpha x)` with `alpha = fraction / dx`, i.e. the
/// mode at `fraction` of the grid Nyquist frequency.
pub fn mode_perturbed_density(ps: &PhaseSpace, amplitude: f64, fraction: f64) -> DVector<f64> {
    let grid = &ps.axes[0];
    let alpha = fraction / grid.dx;
    DVector::from_fn(grid.n_x, |j, _| 1.0 + amplitude * (PI * alpha * grid.point(j)).cos())
}

/// Runs both schemes from `rho0`, `g ≡ 1` at CFL 0.99.
pub fn instability_demo(ps: &PhaseSpace, rho0: DVector<f64>, steps: usize, sigma: f64) -> Result<InstabilityTrace> {
    let dt = cfl_timestep(ps.min_dx(), ps.velocity.v_cap, 0.99, false)?;
    let g = DMatrix::from_element(ps.n_space(), ps.n_v(), 1.0);
    let start = FullState::new(rho0, g, 0.0)?;
    let trace = |variant| -> (Vec<f64>, Option<Error>) {
        let mut s = start.clone();
        let mut out = vec![h_norm_sq_rho_g(&s.rho, &s.g, &ps.velocity)];
        for _ in 0..steps {
            match s.step(ps, sigma, dt, variant) {
                Ok(next) => s = next,
                Err(e) => return (out, Some(e)),
            }
            out.push(h_norm_sq_rho_g(&s.rho, &s.g, &ps.velocity));
        }
        (out, None)
    };
    let (naive, naive_failure) = trace(SchemeVariant::NaiveAdvection);
    let (stable, stable_failure) = trace(SchemeVariant::StableConservative);
    if let Some(e) = stable_failure {
        return Err(e);
    }
    Ok(InstabilityTrace { naive, stable, naive_failure })
}
