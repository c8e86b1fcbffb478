//! Rank-adaptive basis-update & Galerkin integrator for `g = X S Vᵀ`.
//!
//! One step: density update, K- and L-steps on the old factors, augmentation
//! of the bases with the old ones (and optionally with the weighted copies
//! needed for the norm-stability proof), a Galerkin S-step on the augmented
//! bases, then truncation. The conservative truncation keeps the rank-one
//! component of `g` along the moment vector `w_half` untouched.

mod augment;
mod substeps;
mod truncation;

pub use augment::{augment_2r, augment_4r};
pub use substeps::{k_step, l_step, rho_update, s_step};
pub use truncation::{
    moment_direction, select_rank, truncate_conservative, truncate_standard,
    ConservativeTruncation,
};

use nalgebra::{DMatrix, DVector};

use crate::discretization::PhaseSpace;
use crate::error::{Error, Result};
use crate::full_solver::check_positive;
use crate::linalg::{hcat, orthonormal_basis, orthonormality_error, svd_sorted};

/// Orthonormality defect above which a state is rejected.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// `x s vᵀ` with orthonormal `x`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl Factors {
    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.x * &self.s * self.v.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AugmentationMode {
    #[default]
    Reduced2r,
    BasisAug4r,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub theta_coeff: f64,
    pub r_max: usize,
    pub conservative: bool,
}

impl TruncationPolicy {
    pub fn new(theta_coeff: f64, r_max: usize, conservative: bool) -> Result<Self> {
        if !(theta_coeff >= 0.0) {
            return Err(Error::InvalidArgument(format!("theta_coeff must be >= 0, got {theta_coeff}")));
        }
        if r_max < 2 {
            return Err(Error::InvalidArgument(format!("r_max must be >= 2, got {r_max}")));
        }
        Ok(Self { theta_coeff, r_max, conservative })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { theta_coeff: 1e-5, r_max: 200, conservative: true }
    }
}

/// Density and low-rank factors of `g` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankState {
    pub rho: DVector<f64>,
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub t: f64,
}

impl LowRankState {
    /// Validates shapes, orthonormality and positivity of `rho`.
    pub fn new(rho: DVector<f64>, factors: Factors, t: f64) -> Result<Self> {
        let Factors { x, s, v } = factors;
        let r = s.nrows();
        if r == 0 || !s.is_square() || x.ncols() != r || v.ncols() != r || x.nrows() != rho.len() {
            return Err(Error::Shape(format!(
                "low-rank factors {}x{}, {}x{}, {}x{} with {} densities",
                x.nrows(),
                x.ncols(),
                s.nrows(),
                s.ncols(),
                v.nrows(),
                v.ncols(),
                rho.len()
            )));
        }
        for (name, b) in [("x", &x), ("v", &v)] {
            let e = orthonormality_error(b);
            if e > ORTHONORMALITY_TOL {
                return Err(Error::InvalidArgument(format!("{name} basis not orthonormal (defect {e:e})")));
            }
        }
        check_positive(&rho, t)?;
        Ok(Self { rho, x, s, v, t })
    }

    /// Best rank-`r` factorization of a dense `g` (zero-padded when `g` has
    /// lower rank).
    pub fn from_dense(rho: DVector<f64>, g: &DMatrix<f64>, r: usize, t: f64) -> Result<Self> {
        let svd = svd_sorted(g);
        let k = svd.singular_values.len().min(r);
        let factors = Factors {
            x: svd.u.columns(0, k).into_owned(),
            s: DMatrix::from_diagonal(&svd.singular_values.rows(0, k).into_owned()),
            v: svd.v.columns(0, k).into_owned(),
        };
        Self::new(rho, factors, t)
    }

    /// `g ≡ 1` as a rank-one factorization.
    pub fn unit_g(rho: DVector<f64>, n_v: usize, t: f64) -> Result<Self> {
        let n_x = rho.len();
        let factors = Factors {
            x: DMatrix::from_element(n_x, 1, 1.0 / (n_x as f64).sqrt()),
            s: DMatrix::from_element(1, 1, ((n_x * n_v) as f64).sqrt()),
            v: DMatrix::from_element(n_v, 1, 1.0 / (n_v as f64).sqrt()),
        };
        Self::new(rho, factors, t)
    }

    /// Extend the bases to `r` columns using `fill_x`, `fill_v` as candidate
    /// directions; the core is zero-padded so `g` is unchanged.
    pub fn padded(self, r: usize, fill_x: &DMatrix<f64>, fill_v: &DMatrix<f64>) -> Result<Self> {
        let cur = self.rank();
        if r <= cur {
            return Ok(self);
        }
        let r = r.min(self.x.nrows()).min(self.v.nrows());
        let x = orthonormal_basis(&hcat(&self.x, fill_x)).columns(0, r).into_owned();
        let v = orthonormal_basis(&hcat(&self.v, fill_v)).columns(0, r).into_owned();
        if x.ncols() < r || v.ncols() < r {
            return Err(Error::Shape(format!("not enough fill directions to reach rank {r}")));
        }
        // the QR keeps span(old) in the leading columns, possibly rotated
        let s_old = (x.columns(0, cur).transpose() * &self.x) * &self.s * (self.v.transpose() * v.columns(0, cur));
        let mut s = DMatrix::zeros(r, r);
        s.view_mut((0, 0), (cur, cur)).copy_from(&s_old);
        let factors = Factors { x, s, v };
        Self::new(self.rho, factors, self.t)
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    pub fn g(&self) -> DMatrix<f64> {
        &self.x * &self.s * self.v.transpose()
    }

    pub fn factors(&self) -> Factors {
        Factors { x: self.x.clone(), s: self.s.clone(), v: self.v.clone() }
    }

    /// `g Z` per spatial point, `Z = w_half / c_d`; identically 1 for a
    /// conservative state.
    pub fn moment(&self, ps: &PhaseSpace) -> DVector<f64> {
        let c = ps.velocity.maxwellian_norm();
        let w = DVector::from_fn(ps.n_v(), |k, _| ps.velocity.w_half[k] / c);
        &self.x * (&self.s * (self.v.transpose() * w))
    }
}

/// Per-step information besides the new state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Columns of the augmented bases the S-step ran on.
    pub augmented_rank: usize,
    /// Absolute truncation threshold.
    pub threshold: f64,
}

/// One step of the integrator.
pub fn dlra_step(
    state: &LowRankState,
    ps: &PhaseSpace,
    sigma: f64,
    dt: f64,
    mode: AugmentationMode,
    policy: &TruncationPolicy,
) -> Result<(LowRankState, StepReport)> {
    let rho_next = rho_update(state, ps, dt)?;
    let (k_new, l_new) = crate::par::join(
        || k_step(state, &rho_next, ps, sigma, dt),
        || l_step(state, &rho_next, ps, sigma, dt),
    );
    let (xhat, m) = augment_2r(&k_new, &state.x);
    let (vhat, n) = augment_2r(&l_new, &state.v);
    let (xhat, vhat, m, n) = match mode {
        AugmentationMode::Reduced2r => (xhat, vhat, m, n),
        AugmentationMode::BasisAug4r => {
            let (x4, v4) = augment_4r(&xhat, &rho_next, &vhat, &ps.velocity);
            let m = x4.transpose() * &state.x;
            let n = v4.transpose() * &state.v;
            (x4, v4, m, n)
        }
    };
    let s_tilde = &m * &state.s * n.transpose();
    let s_hat = s_step(&xhat, &vhat, &s_tilde, &state.rho, &rho_next, ps, sigma, dt);
    let augmented_rank = s_hat.nrows().max(s_hat.ncols());

    let (factors, threshold) = if policy.conservative {
        let out = truncate_conservative(&xhat, &s_hat, &vhat, &ps.velocity, policy);
        (out.factors, out.threshold)
    } else {
        let theta = policy.theta_coeff * svd_sorted(&s_hat).singular_values.iter().copied().next().unwrap_or(0.0);
        (truncate_standard(&xhat, &s_hat, &vhat, policy), theta)
    };
    let next = LowRankState::new(rho_next, factors, state.t + dt)?;
    Ok((next, StepReport { augmented_rank, threshold }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{tensor_velocity_grid_2d, BoundaryVariant, SpatialGrid};
    use crate::full_solver::{step_g_stable, step_rho, FullState, SchemeVariant};
    use crate::linalg::orthonormal_basis;

    fn ps(n_x: usize, n_v: usize) -> PhaseSpace {
        PhaseSpace::new_1d(n_x, -1.0, 1.0, n_v).unwrap()
    }

    fn bumpy_rho(n: usize) -> DVector<f64> {
        DVector::from_fn(n, |j, _| 1.0 + 0.3 * (0.9 * j as f64).sin() + 0.1 * (2.3 * j as f64).cos())
    }

    fn sample(m: usize, n: usize, seed: f64) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |i, j| ((i * 13 + j * 7 + i * i * j + 3 * j * j + 1) as f64 * seed).sin())
    }

    /// Conservative dense `g`: random perturbation with its moment removed.
    fn conservative_g(ps: &PhaseSpace, amp: f64) -> DMatrix<f64> {
        let z = moment_direction(&ps.velocity);
        let p = sample(ps.n_space(), ps.n_v(), 0.37) * amp;
        let p = &p - (&p * &z) * z.transpose();
        p.add_scalar(1.0)
    }

    fn dt_for(ps: &PhaseSpace) -> f64 {
        crate::cfl_timestep(ps.min_dx(), ps.velocity.v_cap, 0.9, false).unwrap()
    }

    #[test]
    fn rho_update_matches_dense_update() {
        let p = ps(12, 8);
        let g = conservative_g(&p, 0.2);
        let rho = bumpy_rho(12);
        let lr = LowRankState::from_dense(rho.clone(), &g, 8, 0.0).unwrap();
        let full = FullState::new(rho, lr.g(), 0.0).unwrap();
        let dt = dt_for(&p);
        let a = rho_update(&lr, &p, dt).unwrap();
        let b = step_rho(&full, &p, dt).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn full_rank_step_matches_full_solver() {
        let p = ps(16, 16);
        let rho = bumpy_rho(16);
        let g = conservative_g(&p, 0.3);
        let policy = TruncationPolicy { theta_coeff: 0.0, r_max: 16, conservative: false };
        let mut lr = LowRankState::from_dense(rho.clone(), &g, 16, 0.0).unwrap();
        let mut full = FullState::new(rho, g, 0.0).unwrap();
        let dt = dt_for(&p);
        for _ in 0..3 {
            lr = dlra_step(&lr, &p, 2.0, dt, AugmentationMode::Reduced2r, &policy).unwrap().0;
            full = full.step(&p, 2.0, dt, SchemeVariant::StableConservative).unwrap();
            assert!((&lr.rho - &full.rho).amax() < 1e-12);
            assert!((lr.g() - &full.g).amax() < 1e-10);
        }
    }

    #[test]
    fn global_equilibrium_is_preserved() {
        let p = ps(10, 6);
        let rho = DVector::from_element(10, 2.0);
        let lr = LowRankState::unit_g(rho.clone(), 6, 0.0).unwrap();
        let dt = dt_for(&p);
        for mode in [AugmentationMode::Reduced2r, AugmentationMode::BasisAug4r] {
            let (next, _) = dlra_step(&lr, &p, 5.0, dt, mode, &TruncationPolicy::default()).unwrap();
            assert!(next.rank() <= 2);
            assert!((next.g().add_scalar(-1.0)).amax() < 1e-12);
            assert!((&next.rho - &rho).amax() < 1e-14);
        }
    }

    #[test]
    fn k_step_constant_term() {
        let p = ps(8, 6);
        let v = orthonormal_basis(&sample(6, 2, 0.3));
        let lr = LowRankState {
            rho: DVector::from_element(8, 1.0),
            x: orthonormal_basis(&sample(8, 2, 0.7)),
            s: DMatrix::zeros(2, 2),
            v: v.clone(),
            t: 0.0,
        };
        let k = k_step(&lr, &lr.rho, &p, 1.0, 1.0);
        let c = v.row_sum();
        for j in 0..8 {
            assert!((k.row(j) - &c).amax() < 1e-14);
        }
        let l = l_step(&lr, &lr.rho, &p, 1.0, 1.0);
        let d = lr.x.row_sum();
        for k in 0..6 {
            assert!((l.row(k) - &d).amax() < 1e-14);
        }
    }

    #[test]
    fn k_and_l_steps_are_projections_of_the_dense_step() {
        let p = ps(10, 8);
        let rho = bumpy_rho(10);
        let g = conservative_g(&p, 0.2);
        let lr = LowRankState::from_dense(rho.clone(), &g, 3, 0.0).unwrap();
        let dt = dt_for(&p);
        let sigma = 3.0;
        let full = FullState::new(rho, lr.g(), 0.0).unwrap();
        let rho_next = step_rho(&full, &p, dt).unwrap();
        // dense right-hand side before the division by 1 + sigma dt
        let dense = step_g_stable(&full, &rho_next, &p, sigma, dt) * (1.0 + sigma * dt);
        let k = k_step(&lr, &rho_next, &p, sigma, dt);
        assert!((k - &dense * &lr.v).amax() < 1e-12);
        let l = l_step(&lr, &rho_next, &p, sigma, dt);
        assert!((l - dense.transpose() * &lr.x).amax() < 1e-12);
    }

    #[test]
    fn augment_spans_both_inputs() {
        let a = sample(12, 3, 0.41);
        let b = orthonormal_basis(&sample(12, 3, 0.17));
        let (q, m) = augment_2r(&a, &b);
        assert_eq!(q.ncols(), 6);
        assert!(orthonormality_error(&q) < 1e-12);
        let both = hcat(&a, &b);
        assert!((&both - &q * (q.transpose() * &both)).norm() < 1e-10);
        assert!((m - q.transpose() * &b).amax() < 1e-15);

        let (q, _) = augment_2r(&b, &b);
        let proj = &q * q.transpose();
        let rank = svd_sorted(&proj).singular_values.iter().filter(|&&s| s > 0.5).count();
        assert_eq!(rank, 6.min(12));
        assert!((&b - &proj * &b).norm() < 1e-12);
    }

    #[test]
    fn augment_4r_contains_weighted_copies() {
        let p = ps(10, 6);
        let x = orthonormal_basis(&sample(10, 2, 0.3));
        let v = orthonormal_basis(&sample(6, 2, 0.5));
        let rho = bumpy_rho(10);
        let (x4, v4) = augment_4r(&x, &rho, &v, &p.velocity);
        assert_eq!((x4.ncols(), v4.ncols()), (4, 4));
        let rho_sq: Vec<f64> = rho.iter().map(|r| r * r).collect();
        let sx = crate::linalg::scale_rows(&rho_sq, &x);
        assert!((&sx - &x4 * (x4.transpose() * &sx)).norm() < 1e-10);
        let sv = crate::linalg::scale_rows(&p.velocity.w_half, &v);
        assert!((&sv - &v4 * (v4.transpose() * &sv)).norm() < 1e-10);
    }

    #[test]
    fn s_step_with_full_bases_is_the_dense_step() {
        let p = ps(8, 8);
        let rho = bumpy_rho(8);
        let g = conservative_g(&p, 0.25);
        let full = FullState::new(rho.clone(), g.clone(), 0.0).unwrap();
        let dt = dt_for(&p);
        let rho_next = step_rho(&full, &p, dt).unwrap();
        let xb = orthonormal_basis(&sample(8, 8, 0.23));
        let vb = orthonormal_basis(&sample(8, 8, 0.61));
        let s_tilde = xb.transpose() * &g * &vb;
        let s = s_step(&xb, &vb, &s_tilde, &rho, &rho_next, &p, 4.0, dt);
        let dense = step_g_stable(&full, &rho_next, &p, 4.0, dt);
        assert!((&xb * s * vb.transpose() - dense).amax() < 1e-12);
    }

    /// `1 + P Qᵀ` with `Q ⟂ z`: unit moment and rank at most `q + 1`.
    fn conservative_low_rank_g(ps: &PhaseSpace, q: usize, amp: f64) -> DMatrix<f64> {
        let z = moment_direction(&ps.velocity);
        let p = sample(ps.n_space(), q, 0.29) * amp;
        let w = sample(ps.n_v(), q, 0.53);
        let w = &w - &z * (z.transpose() * &w);
        (p * w.transpose()).add_scalar(1.0)
    }

    #[test]
    fn conservative_step_keeps_unit_moment() {
        let p = ps(20, 12);
        let rho = bumpy_rho(20);
        let g = conservative_low_rank_g(&p, 2, 0.1);
        let lr = LowRankState::from_dense(rho, &g, 3, 0.0).unwrap();
        let z = moment_direction(&p.velocity);
        let fill_v = hcat(&DMatrix::from_column_slice(12, 1, z.as_slice()), &sample(12, 1, 0.7));
        let lr = lr.padded(4, &sample(20, 1, 0.4), &fill_v).unwrap();
        assert!((lr.moment(&p).add_scalar(-1.0)).amax() < 1e-12);
        let dt = dt_for(&p);
        let policy = TruncationPolicy { theta_coeff: 1e-3, r_max: 8, conservative: true };
        for mode in [AugmentationMode::Reduced2r, AugmentationMode::BasisAug4r] {
            let (next, _) = dlra_step(&lr, &p, 1.0, dt, mode, &policy).unwrap();
            assert!(next.rank() <= 8);
            assert!(orthonormality_error(&next.x) < 1e-10);
            assert!(orthonormality_error(&next.v) < 1e-10);
            let defect = next.moment(&p).add_scalar(-1.0).amax();
            assert!(defect < 1e-12, "{mode:?}: moment defect {defect:e}");
        }
    }

    #[test]
    fn padding_keeps_g() {
        let rho = DVector::from_element(9, 1.0);
        let lr = LowRankState::unit_g(rho, 7, 0.0).unwrap();
        let g = lr.g();
        let padded = lr.padded(4, &sample(9, 4, 0.3), &sample(7, 4, 0.9)).unwrap();
        assert_eq!(padded.rank(), 4);
        assert!((padded.g() - g).amax() < 1e-12);
    }

    #[test]
    fn two_dimensional_full_rank_oracle() {
        let v = tensor_velocity_grid_2d(2, 2).unwrap();
        let axes = vec![SpatialGrid::new(4, 0.0, 1.0).unwrap(), SpatialGrid::new(3, 0.0, 1.0).unwrap()];
        let p = PhaseSpace::new(axes, BoundaryVariant::PeriodicCirculant, v).unwrap();
        let rho = bumpy_rho(12);
        let g = conservative_g(&p, 0.2);
        let policy = TruncationPolicy { theta_coeff: 0.0, r_max: 4, conservative: false };
        let lr = LowRankState::from_dense(rho.clone(), &g, 4, 0.0).unwrap();
        let full = FullState::new(rho, g, 0.0).unwrap();
        let dt = dt_for(&p);
        let (lr, _) = dlra_step(&lr, &p, 1.0, dt, AugmentationMode::Reduced2r, &policy).unwrap();
        let full = full.step(&p, 1.0, dt, SchemeVariant::StableConservative).unwrap();
        assert!((lr.g() - full.g).amax() < 1e-10);
    }
}
