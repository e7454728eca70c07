use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use commands::Failure;

/// Numerical experiments on 2-positive bisectional curvature and lattice
/// Yang-Mills flow over the 2-sphere.
///
/// Exit codes: 0 success, 1 a checked claim failed, 2 usage error,
/// 3 numerical guard tripped.
#[derive(Debug, Parser)]
#[command(name = "curvflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify 2-positivity of the hyperquadric curvature and cross-check the
    /// curvature oracles.
    Quadric(QuadricArgs),
    /// Run the lattice Yang-Mills flow, writing a CSV trace and a JSON report.
    Ymflow(FlowArgs),
    /// Run the flow and apply the 2-positivity maximum-principle monitor.
    Maxprin(MaxprinArgs),
    /// Check the degree chain for a splitting type.
    Cert(CertArgs),
}

#[derive(Debug, Args)]
pub struct QuadricArgs {
    /// Complex dimension of the quadric (2..=16).
    #[arg(long)]
    pub n: Option<usize>,
    /// Random unit pairs in the nonnegativity sweep.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Optimizer restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iterations per restart.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Random pairs for the oracle cross-check.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub out: Option<String>,
    /// JSON file with any of the options above; flags take precedence.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct FlowArgs {
    /// Icosphere subdivision level (0..=7).
    #[arg(long)]
    pub level: Option<usize>,
    /// Bundle rank (1..=8).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Comma-separated monopole degrees, one per rank.
    #[arg(long, allow_hyphen_values = true)]
    pub degrees: Option<String>,
    /// Initial field: monopole, perturbed, flat or quasi.
    #[arg(long)]
    pub init: Option<String>,
    /// Perturbation size for `perturbed` and `flat`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Maximum number of flow steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Gradient-norm convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Step size (defaults to the mesh's stable step).
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Keep every k-th step in the trace.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Disable energy backtracking.
    #[arg(long)]
    pub no_backtrack: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV trace path.
    #[arg(long)]
    pub trace: Option<String>,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub report: Option<String>,
    /// JSON file with any of the options above; flags take precedence.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Args)]
pub struct MaxprinArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Tolerance coefficient of h².
    #[arg(long)]
    pub tol_c: Option<f64>,
    /// Tolerance coefficient of the step size.
    #[arg(long)]
    pub tol_c_prime: Option<f64>,
    /// Relative floating-point floor of the tolerance.
    #[arg(long)]
    pub tol_floor: Option<f64>,
    /// Fit the tolerance constants on a stationary (1,1) monopole run at
    /// the same level before monitoring.
    #[arg(long)]
    pub calibrate: bool,
    /// Monitor an existing trace CSV instead of running the flow.
    #[arg(long)]
    pub trace_in: Option<String>,
}

#[derive(Debug, Args)]
pub struct CertArgs {
    /// Dimension of the manifold.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated splitting type, e.g. -1,2,2.
    #[arg(long, allow_hyphen_values = true)]
    pub splitting: Option<String>,
    /// Order of vanishing k of the differential.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i64>,
    /// JSON file with any of the options above; flags take precedence.
    #[arg(long)]
    pub config: Option<String>,
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CURVFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CURVFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Quadric(a) => commands::quadric(a),
        Command::Ymflow(a) => commands::ymflow(a),
        Command::Maxprin(a) => commands::maxprin(a),
        Command::Cert(a) => commands::cert(a),
    });
    match result {
        Ok(code) => code.into(),
        Err(f) => {
            eprintln!("curvflow: {f}");
            f.exit_code()
        }
    }
}
