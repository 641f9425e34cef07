//! escat: command-line driver for the spectral rigid-scattering solver.
//! Configures medium, geometry and incidence, runs assemble -> solve ->
//! far field, and emits convergence tables and CSV artifacts.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Spectral solver for time-harmonic elastic scattering by a rigid obstacle.
///
/// All settings can come from an optional flat key=value config file,
/// individual flags, or both; flags override file entries. Exit code 2
/// signals a configuration problem, 1 a runtime failure.
#[derive(Parser)]
#[command(name = "escat", version)]
pub struct Cli {
    /// Key=value config file ('#' comments allowed); flags override it.
    pub config: Option<PathBuf>,

    /// Obstacle: sphere, ellipsoid, cushion, or bean.
    #[arg(long)]
    pub geometry: Option<String>,

    /// Angular frequency; accepts pi multiples such as 8pi. Default pi.
    #[arg(long)]
    pub omega: Option<String>,

    /// First Lame parameter. Default 2.
    #[arg(long)]
    pub lambda: Option<String>,

    /// Second Lame parameter (shear modulus). Default 1.
    #[arg(long)]
    pub mu: Option<String>,

    /// Ansatz order(s), comma separated; exactly one in solve mode.
    #[arg(long)]
    pub n: Option<String>,

    /// Inner quadrature order; defaults to 2n + 1 per run.
    #[arg(long)]
    pub nprime: Option<String>,

    /// solve, pointsource-test, planewave-selfconvergence, or
    /// convergence-table.
    #[arg(long)]
    pub mode: Option<String>,

    /// pointsource, planewave, plane-p, or plane-s. Defaults to pointsource
    /// for pointsource-test and planewave otherwise.
    #[arg(long)]
    pub incidence: Option<String>,

    /// Plane-wave propagation direction x,y,z. Default 0,0,1.
    #[arg(long)]
    pub direction: Option<String>,

    /// Polarization x,y,z (direction only; amplitude scales it).
    /// Default 1,0,0.
    #[arg(long)]
    pub polarization: Option<String>,

    /// Incident-field amplitude; 0 yields the zero solution. Default 1.
    #[arg(long)]
    pub amplitude: Option<String>,

    /// Interior point-source location x,y,z. Default 0,0.05,0.0866.
    #[arg(long)]
    pub source: Option<String>,

    /// Far-field observation grid NTHETAxNPHI. Default 26x50.
    #[arg(long, value_name = "NTHETAxNPHI")]
    pub obs_grid: Option<String>,

    /// Output CSV path: the far field in solve mode, the convergence table
    /// otherwise.
    #[arg(long)]
    pub out: Option<String>,

    /// Worker threads for assembly; default uses all cores.
    #[arg(long)]
    pub threads: Option<String>,

    /// Reference order n* for self-convergence; must exceed every run order.
    #[arg(long)]
    pub reference_n: Option<String>,

    /// Directory for cached self-convergence references. Default escat-refs.
    #[arg(long)]
    pub cache_dir: Option<String>,

    /// Also write solved density coefficients to this CSV (solve mode).
    #[arg(long)]
    pub coeffs_out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::build(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cfg.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run::run(&cfg)),
            Err(e) => {
                eprintln!("error: cannot build a {t}-thread pool: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => run::run(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
