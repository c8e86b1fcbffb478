//! Density update and the K, L and S sub-steps in factored form.
//!
//! Every sub-step is a Galerkin projection of the same conservative-form
//! right-hand side
//!
//! ```text
//! F(g) = diag(rho/rho') g + diag(1/rho') T(diag(rho) g) + sigma dt 1 1ᵀ
//! ```
//!
//! where `T` is the stabilized transport increment. Only the S-step divides
//! by `1 + sigma dt`.

use nalgebra::{DMatrix, DVector};

use super::LowRankState;
use crate::discretization::{Difference, PhaseSpace};
use crate::error::Result;
use crate::full_solver::density_from_moments;
use crate::linalg::{scale_rows, weighted_gram};

/// `rho^{n+1}` from the factors: the velocity weights are contracted with `V`
/// first, then with `S`, `X` and the stencils.
pub fn rho_update(state: &LowRankState, ps: &PhaseSpace, dt: f64) -> Result<DVector<f64>> {
    let w = &ps.velocity.w_half;
    let vt = state.v.transpose();
    let moments = (0..ps.dim())
        .map(|axis| {
            let v = ps.velocity_component(axis);
            let va = ps.abs_velocity_component(axis);
            let vw = DVector::from_fn(ps.n_v(), |k, _| v[k] * w[k]);
            let vaw = DVector::from_fn(ps.n_v(), |k, _| va[k] * w[k]);
            let first = &state.x * (&state.s * (&vt * vw));
            let abs_first = &state.x * (&state.s * (&vt * vaw));
            (first, abs_first)
        })
        .collect();
    density_from_moments(&state.rho, moments, ps, dt, state.t)
}

/// Velocity-space coefficient matrices `Wᵀ diag(v_a) W` and
/// `Wᵀ diag(|v_a|) W` for every axis.
pub(crate) fn velocity_couplings(w: &DMatrix<f64>, ps: &PhaseSpace) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    (0..ps.dim())
        .map(|axis| {
            (
                weighted_gram(w, ps.velocity_component(axis), w),
                weighted_gram(w, ps.abs_velocity_component(axis), w),
            )
        })
        .collect()
}

/// Space-side projections of `F` onto a basis `Y`:
/// `ratio = Yᵀ diag(rho/rho') Y` and, per axis,
/// `Yᵀ diag(1/rho') D^x_a diag(rho) Y`, `Yᵀ diag(1/rho') D^xx_a diag(rho) Y`.
pub(crate) struct SpaceCouplings {
    pub ratio: DMatrix<f64>,
    pub axes: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl SpaceCouplings {
    pub fn new(y: &DMatrix<f64>, rho: &DVector<f64>, rho_next: &DVector<f64>, ps: &PhaseSpace) -> Self {
        let inv_next: Vec<f64> = rho_next.iter().map(|r| 1.0 / r).collect();
        let ratio_w: Vec<f64> = rho.iter().zip(&inv_next).map(|(a, b)| a * b).collect();
        let ratio = weighted_gram(y, &ratio_w, y);
        let rho_y = scale_rows(rho.as_slice(), y);
        let y_over = scale_rows(&inv_next, y).transpose();
        let axes = (0..ps.dim())
            .map(|axis| {
                let c = &y_over * ps.apply(axis, Difference::Centered, &rho_y);
                let e = &y_over * ps.apply(axis, Difference::Second, &rho_y);
                (c, e)
            })
            .collect();
        Self { ratio, axes }
    }
}

/// `K' = F(K Vᵀ) V` with `K = X S`.
pub fn k_step(
    state: &LowRankState,
    rho_next: &DVector<f64>,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
) -> DMatrix<f64> {
    let k = &state.x * &state.s;
    let inv_next: Vec<f64> = rho_next.iter().map(|r| 1.0 / r).collect();
    let ratio: Vec<f64> = state.rho.iter().zip(&inv_next).map(|(a, b)| a * b).collect();
    let rho_k = scale_rows(state.rho.as_slice(), &k);

    let mut transport = DMatrix::zeros(k.nrows(), k.ncols());
    for (axis, (a, b)) in velocity_couplings(&state.v, ps).into_iter().enumerate() {
        let half_dx = 0.5 * ps.axes[axis].dx;
        transport -= dt * ps.apply(axis, Difference::Centered, &rho_k) * a;
        transport += (dt * half_dx) * ps.apply(axis, Difference::Second, &rho_k) * b;
    }
    let mut out = scale_rows(&ratio, &k);
    out += scale_rows(&inv_next, &transport);
    let c = state.v.row_sum();
    for (p, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(sigma * dt * c[p]);
    }
    out
}

/// `L' = F(X Lᵀ)ᵀ X` with `L = V Sᵀ`.
pub fn l_step(
    state: &LowRankState,
    rho_next: &DVector<f64>,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
) -> DMatrix<f64> {
    let l = &state.v * state.s.transpose();
    let proj = SpaceCouplings::new(&state.x, &state.rho, rho_next, ps);
    let mut out = &l * proj.ratio.transpose();
    for (axis, (c, e)) in proj.axes.iter().enumerate() {
        let half_dx = 0.5 * ps.axes[axis].dx;
        let v = ps.velocity_component(axis);
        let va = ps.abs_velocity_component(axis);
        let vc: Vec<f64> = v.iter().map(|x| -dt * x).collect();
        let ve: Vec<f64> = va.iter().map(|x| dt * half_dx * x).collect();
        out += scale_rows(&vc, &(&l * c.transpose()));
        out += scale_rows(&ve, &(&l * e.transpose()));
    }
    let d = state.x.row_sum();
    for (p, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(sigma * dt * d[p]);
    }
    out
}

/// Galerkin update of the augmented core
/// `S' = Xbᵀ F(Xb S̃ Vbᵀ) Vb / (1 + sigma dt)`.
#[allow(clippy::too_many_arguments)]
pub fn s_step(
    xbig: &DMatrix<f64>,
    vbig: &DMatrix<f64>,
    s_tilde: &DMatrix<f64>,
    rho: &DVector<f64>,
    rho_next: &DVector<f64>,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
) -> DMatrix<f64> {
    let space = SpaceCouplings::new(xbig, rho, rho_next, ps);
    let vel = velocity_couplings(vbig, ps);
    let mut out = &space.ratio * s_tilde;
    for (axis, ((c, e), (a, b))) in space.axes.iter().zip(&vel).enumerate() {
        let half_dx = 0.5 * ps.axes[axis].dx;
        out -= dt * c * s_tilde * a;
        out += (dt * half_dx) * e * s_tilde * b;
    }
    let xs = xbig.row_sum().transpose();
    let vs = vbig.row_sum();
    out += (sigma * dt) * xs * vs;
    out / (1.0 + sigma * dt)
}
