use std::path::PathBuf;
use std::process::ExitCode;

use bgk_core::diagnostics::checks;
use bgk_experiments::config::{parse_config, Overrides, RunConfig};
use bgk_experiments::{io, run_experiment, threads_from_env, ExperimentError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bgk", version, about = "Full-grid and low-rank solvers for the linear BGK equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset and write diagnostics.csv, snapshots and manifest.txt.
    Run(RunArgs),
    /// Run the randomized identity and stability checks; exits 1 on any failure.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset name (plane1d, plane1d-small, plane2d, plane2d-small, beam2d, beam2d-small, custom).
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full_stable, full_naive, dlra_2r or dlra_4r.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    nv: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    tend: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshots: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Overrides, ExperimentError> {
        let mut o = Overrides::new();
        for (key, value) in [
            ("preset", &self.preset),
            ("scheme", &self.scheme),
            ("nx", &self.nx),
            ("nv", &self.nv),
            ("sigma", &self.sigma),
            ("cfl", &self.cfl),
            ("tend", &self.tend),
            ("theta", &self.theta),
            ("rmax", &self.rmax),
            ("r0", &self.r0),
            ("out", &self.out),
            ("seed", &self.seed),
            ("snapshots", &self.snapshots),
        ] {
            if let Some(v) = value {
                o.set(key, v.clone())?;
            }
        }
        Ok(o)
    }
}

fn run(args: &RunArgs) -> Result<(), ExperimentError> {
    let file = match &args.config {
        Some(path) => parse_config(&io::read_text(path)?)?,
        None => Overrides::new(),
    };
    let config = RunConfig::resolve(&file.merged(&args.overrides()?), None)?;
    eprintln!(
        "running {} / {} ({}D, n_x {}, n_v {} per axis) to t = {} in {}",
        config.preset,
        config.scheme,
        config.dim(),
        config.n_x,
        config.n_v,
        config.t_end,
        config.output_dir.display()
    );
    let s = run_experiment(&config)?;
    eprintln!(
        "{} steps, dt {:.4e}, max rank {}, {:.2} s",
        s.steps,
        s.dt,
        s.max_rank(),
        s.wall_clock.as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads_from_env() {
        Ok(Some(n)) => bgk_core::par::set_max_threads(n),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Check { seed } => match checks::run_all(seed) {
            Ok(outcomes) => {
                for o in &outcomes {
                    println!("{o}");
                }
                if outcomes.iter().all(|o| o.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
