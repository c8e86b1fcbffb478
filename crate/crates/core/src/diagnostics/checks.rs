//! Randomized numerical checks of the discrete identities and stability
//! results. Each check returns an outcome instead of panicking so callers can
//! report every result.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    h_norm_sq_rho_g, instability_demo, kappa_bounds, transport_bound_terms, mode_perturbed_density,
};
use crate::discretization::{
    build_stencils, cfl_timestep, BoundaryVariant, Difference, PhaseSpace, SpatialGrid, Stencil,
};
use crate::dlra::moment_direction;
use crate::error::Result;
use crate::full_solver::{FullState, SchemeVariant};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(name: &str, worst: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: worst <= tolerance, worst, tolerance, detail }
    }

    fn above(name: &str, worst: f64, bound: f64, detail: String) -> Self {
        Self { name: name.into(), passed: worst > bound, worst, tolerance: bound, detail }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:.3e} (bound {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.detail
        )
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn apply(st: &Stencil, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    st.apply_axis_add(1.0, x, 1, &mut out);
    out
}

/// Summation-by-parts identities of the periodic stencils:
/// `yᵀ D^x z = -zᵀ D^x y`, `zᵀ D^x z = 0`, `yᵀ D^xx z = zᵀ D^xx y` and
/// `zᵀ D^xx z = -‖D^+ z‖²`. Errors are relative to `‖y‖ ‖z‖ ‖D‖`.
pub fn summation_by_parts_suite(sizes: &[usize], pairs: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng(seed);
    let mut worst = [0.0_f64; 4];
    for &n in sizes {
        let grid = SpatialGrid::new(n, -1.0, 1.0)?;
        let st = build_stencils(&grid, BoundaryVariant::PeriodicCirculant)?;
        let dx = grid.dx;
        let (nx, nxx) = (1.0 / dx, 4.0 / (dx * dx));
        for _ in 0..pairs {
            let y = uniform_vec(&mut rng, n);
            let z = uniform_vec(&mut rng, n);
            let (ny, nz) = (norm(&y), norm(&z));
            let dz = apply(&st.d_x, &z);
            let dy = apply(&st.d_x, &y);
            let ddz = apply(&st.d_xx, &z);
            let ddy = apply(&st.d_xx, &y);
            let dpz = apply(&st.d_plus, &z);
            let errs = [
                (dot(&y, &dz) + dot(&z, &dy)).abs() / (ny * nz * nx),
                dot(&z, &dz).abs() / (nz * nz * nx),
                (dot(&y, &ddz) - dot(&z, &ddy)).abs() / (ny * nz * nxx),
                (dot(&z, &ddz) + dot(&dpz, &dpz)).abs() / (nz * nz * nxx),
            ];
            for (w, e) in worst.iter_mut().zip(errs) {
                *w = w.max(e);
            }
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok(CheckOutcome::at_most(
        "summation by parts",
        max,
        1e-12,
        format!(
            "n_x {sizes:?}, {pairs} pairs each; per identity {:.1e} {:.1e} {:.1e} {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

/// Random positive density and `g` with exact unit moment and `g >= 0`.
pub fn random_conservative_state(ps: &PhaseSpace, rng: &mut ChaCha8Rng) -> FullState {
    let n = ps.n_space();
    let rho = DVector::from_fn(n, |_, _| rng.random_range(0.2..2.0));
    let z = moment_direction(&ps.velocity);
    let p = DMatrix::from_fn(n, ps.n_v(), |_, _| rng.random_range(-0.3..0.3));
    let p = &p - (&p * &z) * z.transpose();
    let g = p.add_scalar(1.0);
    FullState { rho, g, t: 0.0 }
}

/// Outcomes of [`stable_scheme_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct StableSuite {
    pub norm_decay: CheckOutcome,
    pub moment: CheckOutcome,
    pub mass: CheckOutcome,
}

/// Runs the stable scheme on `instances` random states (cycling through
/// `sigmas`) for `steps` steps at CFL 0.99 and records the largest relative
/// H-norm increase, the largest moment defect `|kappa - 1|` and the largest
/// relative mass drift.
pub fn stable_scheme_suite(
    instances: usize,
    n_x: usize,
    n_v: usize,
    sigmas: &[f64],
    steps: usize,
    seed: u64,
) -> Result<StableSuite> {
    let ps = PhaseSpace::new_1d(n_x, -1.0, 1.0, n_v)?;
    let dt = cfl_timestep(ps.min_dx(), ps.velocity.v_cap, 0.99, false)?;
    let mut rng = rng(seed);
    let mut worst_growth = f64::NEG_INFINITY;
    let mut worst_moment = 0.0_f64;
    let mut worst_mass = 0.0_f64;
    for i in 0..instances {
        let sigma = sigmas[i % sigmas.len()];
        let mut s = random_conservative_state(&ps, &mut rng);
        let m0 = s.rho.sum();
        let mut h = h_norm_sq_rho_g(&s.rho, &s.g, &ps.velocity);
        for _ in 0..steps {
            s = s.step(&ps, sigma, dt, SchemeVariant::StableConservative)?;
            let h_next = h_norm_sq_rho_g(&s.rho, &s.g, &ps.velocity);
            worst_growth = worst_growth.max((h_next - h) / h);
            h = h_next;
            let (hi, lo) = kappa_bounds(&s.g, &ps.velocity);
            worst_moment = worst_moment.max((hi - 1.0).abs()).max((lo - 1.0).abs());
            worst_mass = worst_mass.max((s.rho.sum() - m0).abs() / m0);
        }
    }
    let detail = format!("{instances} states, n_x {n_x}, n_v {n_v}, sigma {sigmas:?}, {steps} steps");
    Ok(StableSuite {
        norm_decay: CheckOutcome::at_most(
            "stable scheme H-norm non-increasing",
            worst_growth,
            1e-12,
            format!("{detail}; worst relative one-step change"),
        ),
        moment: CheckOutcome::at_most("stable scheme unit moment", worst_moment, 1e-11, detail.clone()),
        mass: CheckOutcome::at_most("mass conservation", worst_mass, 1e-12, detail),
    })
}

/// Outcomes of [`transport_bound_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportBoundSuite {
    pub within_cfl: CheckOutcome,
    pub counter_witness: CheckOutcome,
}

/// Evaluates the CFL inequality on `samples` random `f` at
/// `dt = dx / max|v|`, and on a seeded near-Nyquist witness concentrated on
/// the fastest node at three times that step.
pub fn transport_bound_suite(samples: usize, n_x: usize, n_v: usize, seed: u64) -> Result<TransportBoundSuite> {
    let ps = PhaseSpace::new_1d(n_x, -1.0, 1.0, n_v)?;
    let dx = ps.min_dx();
    let dt = dx / ps.velocity.v_cap;
    let mut rng = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let f = DMatrix::from_fn(n_x, n_v, |_, _| rng.random_range(-1.0..1.0));
        let t = transport_bound_terms(&f, &ps, 0, dt);
        worst = worst.max(t.value() / t.scale());
    }
    let within_cfl = CheckOutcome::at_most(
        "transport bound under CFL",
        worst,
        1e-12,
        format!("{samples} random f, n_x {n_x}, n_v {n_v}; value / scale"),
    );

    let fastest = (0..n_v)
        .max_by(|&a, &b| ps.velocity.nodes()[a].abs().total_cmp(&ps.velocity.nodes()[b].abs()))
        .unwrap_or(0);
    let mut f = DMatrix::from_fn(n_x, n_v, |_, _| 1e-3 * rng.random_range(-1.0..1.0));
    for j in 0..n_x {
        f[(j, fastest)] += if j % 2 == 0 { 1.0 } else { -1.0 };
    }
    let t = transport_bound_terms(&f, &ps, 0, 3.0 * dt);
    let counter_witness = CheckOutcome::above(
        "transport bound violated at 3x the CFL step",
        t.value() / t.scale(),
        0.0,
        "alternating mode on the fastest node; value / scale".into(),
    );
    Ok(TransportBoundSuite { within_cfl, counter_witness })
}

/// Outcomes of [`naive_instability_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveInstabilitySuite {
    /// First naive step from `g ≡ 1`, `sigma = 0` equals forward-time centered
    /// transport of `f` and increases the norm.
    pub first_step_ftcs: CheckOutcome,
    /// Sustained growth (> 1%) from the mode-perturbed density.
    pub mode_growth: CheckOutcome,
    /// Every naive step from the mode-perturbed density increases the norm.
    pub mode_monotone: CheckOutcome,
    /// Growth (> 1%) or breakdown from a steep plane-source density.
    pub steep_growth: CheckOutcome,
    /// Stable scheme on the mode-perturbed density does not grow.
    pub stable_decay: CheckOutcome,
}

/// Plane-source density `max(1e-4, N(0, 0.3^2))` on `ps`.
pub fn plane_source_density(ps: &PhaseSpace) -> DVector<f64> {
    let var = 0.09;
    DVector::from_fn(ps.n_space(), |j, _| {
        let x = ps.coordinates(j)[0];
        ((-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()).max(1e-4)
    })
}

pub fn naive_instability_check(n_x: usize, n_v: usize, steps: usize) -> Result<NaiveInstabilitySuite> {
    let ps = PhaseSpace::new_1d(n_x, -1.0, 1.0, n_v)?;
    let rho = mode_perturbed_density(&ps, 0.1, 0.75);
    let detail = format!("n_x {n_x}, n_v {n_v}, {steps} steps, CFL 0.99, rho 1 + 0.1 cos");

    let dt = cfl_timestep(ps.min_dx(), ps.velocity.v_cap, 0.99, false)?;
    let s0 = FullState::new(rho.clone(), DMatrix::from_element(n_x, n_v, 1.0), 0.0)?;
    let s1 = s0.step(&ps, 0.0, dt, SchemeVariant::NaiveAdvection)?;
    let f0 = s0.f(&ps);
    let mut ftcs = f0.clone();
    let v = ps.velocity_component(0);
    ps.apply_scaled_add(0, Difference::Centered, &f0, |k| -dt * v[k], &mut ftcs);
    let defect = (s1.f(&ps) - &ftcs).amax() / f0.amax();
    let grew = h_norm_sq_rho_g(&s1.rho, &s1.g, &ps.velocity) > h_norm_sq_rho_g(&s0.rho, &s0.g, &ps.velocity);
    let first_step_ftcs = CheckOutcome {
        name: "first naive step is centered FTCS".into(),
        passed: defect <= 1e-12 && grew,
        worst: defect,
        tolerance: 1e-12,
        detail: format!("n_x {n_x}, n_v {n_v}; relative max defect, norm increased: {grew}"),
    };

    let tr = instability_demo(&ps, rho, steps, 0.0)?;
    let last = *tr.naive.last().unwrap_or(&f64::NAN);
    let ratio = last / tr.naive[0];
    let non_increasing = tr.naive.windows(2).filter(|w| w[1] <= w[0]).count();
    let stable_growth = tr
        .stable
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0])
        .fold(f64::NEG_INFINITY, f64::max);

    let steep_ps = PhaseSpace::new_1d(n_x, -10.0, 10.0, n_v)?;
    let steep = instability_demo(&steep_ps, plane_source_density(&steep_ps), steps, 0.0)?;
    let steep_ratio = steep.naive.iter().copied().fold(0.0, f64::max) / steep.naive[0];
    let breakdown = steep.naive_failure.as_ref().map(|e| e.to_string());

    Ok(NaiveInstabilitySuite {
        first_step_ftcs,
        mode_growth: CheckOutcome::above(
            "naive growth, mode-perturbed density",
            ratio,
            1.01,
            format!("{detail}; final / initial"),
        ),
        mode_monotone: CheckOutcome::at_most(
            "naive strictly increasing, mode-perturbed density",
            non_increasing as f64,
            0.0,
            format!("{detail}; steps without increase"),
        ),
        steep_growth: CheckOutcome {
            name: "naive growth, plane-source density".into(),
            passed: steep_ratio > 1.01 || breakdown.is_some(),
            worst: steep_ratio,
            tolerance: 1.01,
            detail: format!(
                "n_x {n_x}, n_v {n_v} on [-10, 10], {} of {steps} steps; max / initial{}",
                steep.naive.len() - 1,
                breakdown.map(|b| format!(", then {b}")).unwrap_or_default()
            ),
        },
        stable_decay: CheckOutcome::at_most(
            "stable scheme on the mode-perturbed density",
            stable_growth,
            1e-12,
            format!("{detail}; worst relative one-step change"),
        ),
    })
}

/// The suite run by the command line `check`.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![summation_by_parts_suite(&[8, 33, 128], 100, seed)?];
    let l4 = transport_bound_suite(100, 64, 32, seed.wrapping_add(1))?;
    out.extend([l4.within_cfl, l4.counter_witness]);
    let t1 = naive_instability_check(128, 32, 200)?;
    out.extend([t1.first_step_ftcs, t1.steep_growth, t1.stable_decay]);
    let st = stable_scheme_suite(50, 64, 32, &[0.0, 1.0, 10.0], 100, seed.wrapping_add(2))?;
    out.extend([st.norm_decay, st.moment, st.mass]);
    Ok(out)
}
