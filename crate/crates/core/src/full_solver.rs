//! Explicit transport / implicit collision time stepping on the full grid.
//!
//! Both schemes update the density first (it needs time-`n` data only) and
//! then solve the pointwise implicit collision terms for `g` in closed form.

use nalgebra::{DMatrix, DVector};

use crate::discretization::{Difference, PhaseSpace};
use crate::error::{Error, Result};
use crate::linalg::scale_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeVariant {
    /// Stabilization applied to `d_x(rho g)` and the `rho^{n+1}/rho^n` factor
    /// in the collision term. Stable in the weighted norm under the CFL rule.
    StableConservative,
    /// Advection form with stabilization on `rho d_x g`. Not von Neumann stable.
    NaiveAdvection,
}

/// Density and deviation factor on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub rho: DVector<f64>,
    /// `n_space x n_v`
    pub g: DMatrix<f64>,
    pub t: f64,
}

impl FullState {
    pub fn new(rho: DVector<f64>, g: DMatrix<f64>, t: f64) -> Result<Self> {
        if rho.len() != g.nrows() {
            return Err(Error::Shape(format!(
                "rho has {} entries, g has {} rows",
                rho.len(),
                g.nrows()
            )));
        }
        if let Some((index, &value)) = rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::NonPositiveDensity { index, value, t });
        }
        Ok(Self { rho, g, t })
    }

    /// Global equilibrium: constant density and `g = 1`.
    pub fn equilibrium(ps: &PhaseSpace, rho: f64) -> Self {
        Self {
            rho: DVector::from_element(ps.n_space(), rho),
            g: DMatrix::from_element(ps.n_space(), ps.n_v(), 1.0),
            t: 0.0,
        }
    }

    pub fn f(&self, ps: &PhaseSpace) -> DMatrix<f64> {
        reconstruct_f(&self.rho, &self.g, ps)
    }

    pub fn step(&self, ps: &PhaseSpace, sigma: f64, dt: f64, variant: SchemeVariant) -> Result<Self> {
        let rho_next = step_rho(self, ps, dt)?;
        let g = match variant {
            SchemeVariant::StableConservative => step_g_stable(self, &rho_next, ps, sigma, dt),
            SchemeVariant::NaiveAdvection => step_g_naive(self, &rho_next, ps, sigma, dt)?,
        };
        Ok(Self { rho: rho_next, g, t: self.t + dt })
    }
}

/// `M_jk = rho_j e^{-|v_k|^2/2} / (2 pi)^{d/2}`.
pub fn maxwellian(rho: &DVector<f64>, ps: &PhaseSpace) -> DMatrix<f64> {
    let c = ps.velocity.maxwellian_norm();
    let damp: Vec<f64> = ps.velocity.speed_sq().iter().map(|s| (-0.5 * s).exp() / c).collect();
    DMatrix::from_fn(rho.len(), ps.n_v(), |j, k| rho[j] * damp[k])
}

/// `f_jk = rho_j g_jk e^{-|v_k|^2/2} / (2 pi)^{d/2}`.
pub fn reconstruct_f(rho: &DVector<f64>, g: &DMatrix<f64>, ps: &PhaseSpace) -> DMatrix<f64> {
    let c = ps.velocity.maxwellian_norm();
    let damp: Vec<f64> = ps.velocity.speed_sq().iter().map(|s| (-0.5 * s).exp() / c).collect();
    let mut f = scale_rows(rho.as_slice(), g);
    for (k, mut col) in f.column_iter_mut().enumerate() {
        col *= damp[k];
    }
    f
}

/// Density update shared by both schemes:
/// `rho + (2pi)^{-d/2} sum_a [ -dt D^x_a (rho o g)(v_a w_half) + dt dx_a/2 D^xx_a (rho o g)(|v_a| w_half) ]`.
pub fn step_rho(state: &FullState, ps: &PhaseSpace, dt: f64) -> Result<DVector<f64>> {
    let w = &ps.velocity.w_half;
    let mut fluxes = Vec::with_capacity(ps.dim());
    for axis in 0..ps.dim() {
        let v = ps.velocity_component(axis);
        let va = ps.abs_velocity_component(axis);
        let vw = DVector::from_fn(ps.n_v(), |k, _| v[k] * w[k]);
        let vaw = DVector::from_fn(ps.n_v(), |k, _| va[k] * w[k]);
        fluxes.push((&state.g * vw, &state.g * vaw));
    }
    density_from_moments(&state.rho, fluxes, ps, dt, state.t)
}

/// Shared tail of the density update; `moments[a] = (g (v_a w_half), g (|v_a| w_half))`
/// evaluated by the caller in whatever factored form it holds `g`.
pub(crate) fn density_from_moments(
    rho: &DVector<f64>,
    moments: Vec<(DVector<f64>, DVector<f64>)>,
    ps: &PhaseSpace,
    dt: f64,
    t: f64,
) -> Result<DVector<f64>> {
    let c = ps.velocity.maxwellian_norm();
    let mut out = rho.clone();
    for (axis, (first, abs_first)) in moments.into_iter().enumerate() {
        let q = first.component_mul(rho);
        let p = abs_first.component_mul(rho);
        let half_dx = 0.5 * ps.axes[axis].dx;
        ps.apply_vec_add(axis, Difference::Centered, -dt / c, q.as_slice(), out.as_mut_slice());
        ps.apply_vec_add(axis, Difference::Second, dt * half_dx / c, p.as_slice(), out.as_mut_slice());
    }
    check_positive(&out, t + dt)?;
    Ok(out)
}

pub(crate) fn check_positive(rho: &DVector<f64>, t: f64) -> Result<()> {
    match rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        Some((index, &value)) => Err(Error::NonPositiveDensity { index, value, t }),
        None => Ok(()),
    }
}

/// Conservative-form update
/// `g' = [ (rho/rho') g + (1/rho') T(rho o g) + sigma dt ] / (1 + sigma dt)`,
/// with `T` the stabilized transport increment.
pub fn step_g_stable(
    state: &FullState,
    rho_next: &DVector<f64>,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
) -> DMatrix<f64> {
    let rho_g = scale_rows(state.rho.as_slice(), &state.g);
    let mut num = ps.transport_increment(&rho_g, dt);
    num += rho_g;
    let inv_next: Vec<f64> = rho_next.iter().map(|r| 1.0 / r).collect();
    let denom = 1.0 + sigma * dt;
    let n = num.nrows();
    for col in num.as_mut_slice().chunks_exact_mut(n) {
        for (x, inv) in col.iter_mut().zip(&inv_next) {
            *x = (*x * inv + sigma * dt) / denom;
        }
    }
    num
}

/// Advection-form update, solved pointwise for `g'`:
/// `g' (1 + sigma dt + (rho' - rho)/rho) = g + T(g) + sigma dt - dt (g/rho) sum_a (D^x_a rho) v_a`.
pub fn step_g_naive(
    state: &FullState,
    rho_next: &DVector<f64>,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    let n = ps.n_space();
    let mut num = ps.transport_increment(&state.g, dt);
    num += &state.g;
    let mut grad_rho = vec![vec![0.0; n]; ps.dim()];
    for (axis, out) in grad_rho.iter_mut().enumerate() {
        ps.apply_vec_add(axis, Difference::Centered, 1.0, state.rho.as_slice(), out);
    }
    let t = state.t + dt;
    let mut denom = Vec::with_capacity(n);
    for j in 0..n {
        let d = 1.0 + sigma * dt + (rho_next[j] - state.rho[j]) / state.rho[j];
        if d.abs() < 1e-14 {
            return Err(Error::VanishingDenominator { index: j, value: d, t });
        }
        denom.push(d);
    }
    for k in 0..ps.n_v() {
        for j in 0..n {
            let mut adv = 0.0;
            for (axis, grad) in grad_rho.iter().enumerate() {
                adv += grad[j] * ps.velocity_component(axis)[k];
            }
            let g = state.g[(j, k)];
            let x = num[(j, k)] + sigma * dt - dt * g / state.rho[j] * adv;
            num[(j, k)] = x / denom[j];
        }
    }
    Ok(num)
}
