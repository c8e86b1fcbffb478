//! Time stepping, diagnostics and snapshot output for one run.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bgk_core::diagnostics::DiagRecord;
use bgk_core::dlra::{dlra_step, AugmentationMode, LowRankState, TruncationPolicy};
use bgk_core::full_solver::reconstruct_f;
use bgk_core::{cfl_timestep, cfl_timestep_unchecked, DVector, FullState, PhaseSpace, SchemeVariant};

use crate::config::{RunConfig, Scheme};
use crate::error::{ExperimentError, Result};
use crate::io::{snapshot_name, write_text, DiagnosticsWriter, Domain2d, Snapshot};
use crate::setup::{initial_full, initial_low_rank, phase_space};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// A step is clipped to the next snapshot or final time when it would
/// otherwise overshoot it by more than this fraction of `dt`.
const CLIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum SolverState {
    Full(FullState),
    LowRank(LowRankState),
}

impl SolverState {
    pub fn initial(c: &RunConfig, ps: &PhaseSpace) -> Result<Self> {
        Ok(if c.scheme.is_low_rank() {
            SolverState::LowRank(initial_low_rank(c, ps)?)
        } else {
            SolverState::Full(initial_full(c, ps)?)
        })
    }

    pub fn rho(&self) -> &DVector<f64> {
        match self {
            SolverState::Full(s) => &s.rho,
            SolverState::LowRank(s) => &s.rho,
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            SolverState::Full(s) => s.t,
            SolverState::LowRank(s) => s.t,
        }
    }

    fn set_t(&mut self, t: f64) {
        match self {
            SolverState::Full(s) => s.t = t,
            SolverState::LowRank(s) => s.t = t,
        }
    }

    pub fn record(&self, ps: &PhaseSpace) -> DiagRecord {
        match self {
            SolverState::Full(s) => DiagRecord::for_full(s, ps),
            SolverState::LowRank(s) => DiagRecord::for_low_rank(s, ps),
        }
    }

    pub fn step(&self, c: &RunConfig, ps: &PhaseSpace, dt: f64) -> Result<Self> {
        let next = match self {
            SolverState::Full(s) => {
                let variant = match c.scheme {
                    Scheme::FullNaive => SchemeVariant::NaiveAdvection,
                    _ => SchemeVariant::StableConservative,
                };
                SolverState::Full(s.step(ps, c.sigma, dt, variant)?)
            }
            SolverState::LowRank(s) => {
                let mode = match c.scheme {
                    Scheme::Dlra4r => AugmentationMode::BasisAug4r,
                    _ => AugmentationMode::Reduced2r,
                };
                let policy = TruncationPolicy::new(c.theta_coeff, c.r_max, c.conservative)?;
                SolverState::LowRank(dlra_step(s, ps, c.sigma, dt, mode, &policy)?.0)
            }
        };
        Ok(next)
    }
}

/// Time step of the run: the CFL rule, without the `cfl <= 1` guard for the
/// naive scheme.
pub fn time_step(c: &RunConfig, ps: &PhaseSpace) -> Result<f64> {
    let dx = ps.min_dx();
    let v = ps.velocity.v_cap;
    Ok(match c.scheme {
        Scheme::FullNaive => cfl_timestep_unchecked(dx, v, c.cfl, c.round_up_vcap)?,
        _ => cfl_timestep(dx, v, c.cfl, c.round_up_vcap)?,
    })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Diagnostics at `t = 0` and after every step.
    pub records: Vec<DiagRecord>,
    /// Density at each snapshot time.
    pub densities: Vec<(f64, DVector<f64>)>,
    pub files: Vec<PathBuf>,
    /// Whole run including setup and output.
    pub wall_clock: Duration,
    /// Time spent inside the step function only.
    pub stepping: Duration,
}

impl RunSummary {
    pub fn max_rank(&self) -> usize {
        self.records.iter().map(|r| r.rank).max().unwrap_or(0)
    }
}

/// Runs `c` and writes `diagnostics.csv`, snapshots and `manifest.txt` to
/// `c.output_dir`. A failing step (e.g. a non-positive density) still
/// leaves the diagnostics up to that step and a manifest marking the
/// failure.
pub fn run_experiment(c: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    c.validate()?;
    let dir = &c.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let ps = phase_space(c)?;
    let dt = time_step(c, &ps)?;
    let mut summary = RunSummary {
        steps: 0,
        dt,
        t_final: 0.0,
        records: Vec::new(),
        densities: Vec::new(),
        files: Vec::new(),
        wall_clock: Duration::ZERO,
        stepping: Duration::ZERO,
    };
    let mut diag = DiagnosticsWriter::create(dir)?;
    let result = step_all(c, &ps, dt, &mut diag, &mut summary);
    let flushed = diag.flush();
    summary.wall_clock = start.elapsed();
    let status = match &result {
        Ok(()) => "completed".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    write_manifest(dir, c, &summary, &status)?;
    result?;
    flushed?;
    Ok(summary)
}

fn step_all(
    c: &RunConfig,
    ps: &PhaseSpace,
    dt: f64,
    diag: &mut DiagnosticsWriter,
    summary: &mut RunSummary,
) -> Result<()> {
    let mut state = SolverState::initial(c, ps)?;
    let first = state.record(ps);
    diag.push(&first)?;
    summary.records.push(first);
    if c.snapshot_times.contains(&0.0) {
        write_snapshots(c, ps, &state, summary)?;
    }

    let mut targets: Vec<f64> = c.snapshot_times.iter().copied().filter(|&t| t > 0.0).collect();
    targets.push(c.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut t = 0.0;
    for target in targets {
        // times are counted from the segment start to avoid drift
        let t0 = t;
        let mut k = 0usize;
        while t < target {
            let remaining = target - t;
            let last = remaining <= dt * (1.0 + CLIP_SLACK);
            let h = if last { remaining } else { dt };
            let clock = Instant::now();
            let mut next = state.step(c, ps, h)?;
            summary.stepping += clock.elapsed();
            k += 1;
            t = if last { target } else { t0 + k as f64 * dt };
            next.set_t(t);
            state = next;
            let rec = state.record(ps);
            diag.push(&rec)?;
            summary.records.push(rec);
            summary.steps += 1;
            summary.t_final = t;
        }
        if c.snapshot_times.contains(&target) {
            write_snapshots(c, ps, &state, summary)?;
        }
    }
    Ok(())
}

fn write_snapshots(c: &RunConfig, ps: &PhaseSpace, state: &SolverState, summary: &mut RunSummary) -> Result<()> {
    let t = state.t();
    let rho = state.rho();
    summary.densities.push((t, rho.clone()));
    let mut out = Vec::new();
    if ps.dim() == 1 {
        let x = ps.axes[0].points();
        out.push(("rho", Snapshot::Density1d { x: x.clone(), rho: rho.as_slice().to_vec() }));
        let g = match state {
            SolverState::Full(s) => s.g.clone(),
            SolverState::LowRank(s) => s.g(),
        };
        let f = reconstruct_f(rho, &g, ps);
        // row-major x by v
        let f = f.transpose().as_slice().to_vec();
        out.push(("f", Snapshot::Distribution1d { v: ps.velocity.nodes().to_vec(), x, f }));
    } else {
        let (g1, g2) = (ps.axes[0], ps.axes[1]);
        // flattened index i1 + n_x1 i2; rows run over x1
        let values = (0..g1.n_x).flat_map(|i1| (0..g2.n_x).map(move |i2| rho[i1 + g1.n_x * i2])).collect();
        out.push((
            "rho",
            Snapshot::Density2d {
                n_x1: g1.n_x,
                n_x2: g2.n_x,
                domain: Domain2d { a1: g1.a, b1: g1.b, a2: g2.a, b2: g2.b },
                rho: values,
            },
        ));
    }
    for (kind, snap) in out {
        let path = c.output_dir.join(snapshot_name(kind, t));
        write_text(&path, &snap.to_csv())?;
        summary.files.push(path);
    }
    Ok(())
}

fn write_manifest(dir: &Path, c: &RunConfig, s: &RunSummary, status: &str) -> Result<()> {
    let mut text = String::from("# resolved configuration\n");
    text.push_str(&c.to_config_text());
    text.push_str("# run\n");
    for (k, v) in [
        ("status", status.to_string()),
        ("steps", s.steps.to_string()),
        ("dt", format!("{:.16e}", s.dt)),
        ("t_final", format!("{:.16e}", s.t_final)),
        ("max_rank", s.max_rank().to_string()),
        ("threads", bgk_core::par::max_threads().to_string()),
        ("wall_clock_seconds", format!("{:.6}", s.wall_clock.as_secs_f64())),
        ("stepping_seconds", format!("{:.6}", s.stepping.as_secs_f64())),
    ] {
        text.push_str(&format!("# {k}={v}\n"));
    }
    write_text(&dir.join(MANIFEST_FILE), &text)
}

/// Reads `BGK_THREADS`, if set, as a positive thread count.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("BGK_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ExperimentError::config("BGK_THREADS", format!("expected a positive integer, got `{v}`"))),
        },
    }
}
