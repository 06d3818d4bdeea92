//! Command-line front end: argument parsing, file formats, reports and the
//! regression gallery.

pub mod commands;
pub mod formats;
pub mod gallery;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quasimult::product::AscentOptions;
use quasimult::sdp::SdpOptions;
use quasimult::Tolerances;

use report::RunReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] quasimult::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(quasimult::Error::Inconclusive { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qmtool", version, about = "Multipliers, quasimultipliers and cb norms of concrete operator spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Membership tolerance (τ_mem).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Base seed for randomized ascents and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Ascent restarts.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Ascent iterations per restart.
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    /// Relative residual target of the semidefinite solver.
    #[arg(long = "solver-eps", global = true)]
    pub solver_eps: Option<f64>,
    /// Iteration cap of the semidefinite solver.
    #[arg(long = "solver-maxiter", global = true)]
    pub solver_maxiter: Option<usize>,
    /// Write the machine-readable report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Space file.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Envelope file; when given, intrinsic spaces are computed.
    #[arg(long)]
    pub envelope: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProductArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Product file.
    #[arg(long)]
    pub product: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// Map file with the images of the basis.
    #[arg(long)]
    pub map: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Beta,
    Alpha,
}

#[derive(Debug, Clone, Subcommand)]
pub enum GalleryAction {
    /// Run one case or `all`.
    Run { name: String },
    /// List the cases.
    List,
    /// Write the space, envelope and product files of a fixture.
    Export { name: String, dir: PathBuf },
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Quasimultiplier space.
    Qm(SpaceArgs),
    /// Left multiplier space.
    Lmult(SpaceArgs),
    /// Right multiplier space.
    Rmult(SpaceArgs),
    /// Ternary part X ∩ QM(X)* (needs an envelope).
    Ter(SpaceArgs),
    /// Associativity residual of a product.
    Assoc {
        #[arg(long)]
        product: PathBuf,
    },
    /// Complete contractivity of a linear map.
    Ccheck(MapArgs),
    /// cb norm of a linear map.
    Cbnorm {
        #[command(flatten)]
        map: MapArgs,
        /// Compare with an ascent lower bound at level max(r, s) + 1.
        #[arg(long)]
        cross_check: bool,
    },
    /// OAP membership of a product.
    Oap(ProductArgs),
    /// Bootstrap complete-contractivity test of a product.
    Bootstrap {
        #[command(flatten)]
        product: ProductArgs,
        #[arg(long, value_enum, default_value_t = SideArg::Beta)]
        side: SideArg,
    },
    /// Scaled representation π(x) = [xz, x·√(r² − zz*)].
    Soaprep {
        #[command(flatten)]
        space: SpaceArgs,
        /// Matrix file holding z.
        #[arg(long)]
        z: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Structure of a linear complete isometry between operator algebras.
    BanachStone {
        /// Source algebra.
        #[arg(long)]
        space: PathBuf,
        /// Target algebra.
        #[arg(long)]
        target: PathBuf,
        /// Images of the source basis.
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        envelope: Option<PathBuf>,
        #[arg(long)]
        target_envelope: Option<PathBuf>,
    },
    /// Quasicentralizer factorizations of a product.
    Qc(ProductArgs),
    /// Regression gallery.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
}

/// Numerical settings derived from the global flags.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tol: Tolerances,
    pub sdp: SdpOptions,
    pub ascent: AscentOptions,
}

impl Settings {
    pub fn from_args(g: &GlobalArgs) -> Result<Self, CliError> {
        let mut tol = Tolerances::default();
        if let Some(t) = g.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Input(format!("--tol must be positive, got {t}")));
            }
            tol.mem = t;
        }
        let mut sdp = SdpOptions::default();
        if let Some(e) = g.solver_eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::Input(format!("--solver-eps must be positive, got {e}")));
            }
            sdp.eps = e;
        }
        if let Some(m) = g.solver_maxiter {
            sdp.max_iter = m;
        }
        let mut ascent = AscentOptions { seed: g.seed, ..AscentOptions::default() };
        if let Some(r) = g.restarts {
            ascent.restarts = r.max(1);
        }
        if let Some(i) = g.iters {
            ascent.iters = i;
        }
        Ok(Self { tol, sdp, ascent })
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let command: Vec<String> = argv.iter().skip(1).cloned().collect();
    let started = Instant::now();
    let result = Settings::from_args(&cli.global)
        .and_then(|settings| commands::execute(&cli.command, &settings, RunReport::new(command, cli.global.seed)));
    match result {
        Ok(mut report) => {
            report.timing_ms = started.elapsed().as_secs_f64() * 1e3;
            print!("{}", report.render_text());
            if let Some(path) = &cli.global.out {
                if let Err(e) = std::fs::write(path, report.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
            }
            report.outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
