//! `boojum` command-line front end. Exit codes: 0 success, 1 invalid input, 2 solver failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use boojum::{Error, Lambda};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "boojum", version, about = "Boundary-layer energies of nematic Q-tensor profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimal one-dimensional transition energy D_lambda of a boundary tensor.
    Dlambda(DlambdaArgs),
    /// Integral of D_lambda over the unit sphere for a boundary field.
    Sphere(SphereArgs),
    /// D_lambda over tangent directions at one surface point.
    Scan(ScanArgs),
    /// Heatmap of the trace polynomial over (alpha, beta) with optimal-path overlays.
    Abmap(AbmapArgs),
    /// Region energies of the explicit recovery constructions.
    Recovery(RecoveryArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Seed recorded in the output for reproducible sweeps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Length of the truncated half line.
    #[arg(long, default_value_t = boojum::profile1d::Grid1D::DEFAULT_T)]
    pub t_max: f64,
    /// Number of grid nodes.
    #[arg(long, default_value_t = boojum::profile1d::Grid1D::DEFAULT_NODES)]
    pub nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Density {
    Exact,
    Minimized,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("data").required(true).args(["v3", "q0"]))]
pub struct DlambdaArgs {
    /// Field ratio; `inf` imposes the uniaxial constraint.
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    pub lambda: Lambda,
    /// Boundary director (-sqrt(1 - v3^2), 0, v3).
    #[arg(long, allow_hyphen_values = true)]
    pub v3: Option<f64>,
    /// Boundary tensor as five comma-separated entries Q11,Q12,Q13,Q22,Q23.
    #[arg(long, value_parser = parse_list::<5>, allow_hyphen_values = true)]
    pub q0: Option<[f64; 5]>,
    /// `csv` writes the minimizing profile instead of the summary.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Bc {
    Longitudinal,
    RadialReference,
    FixedFrame,
    Uniform,
}

#[derive(Args, Debug)]
pub struct SphereArgs {
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    pub lambda: Lambda,
    #[arg(long, value_enum)]
    pub bc: Bc,
    /// Angle from e_phi towards e_theta for `fixed-frame`.
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<f64>,
    /// Director x,y,z for `uniform`.
    #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
    pub dir: Option<[f64; 3]>,
    /// Density evaluation; defaults to `exact` for lambda = inf and `minimized` otherwise.
    #[arg(long, value_enum)]
    pub density: Option<Density>,
    /// Gauss-Legendre nodes per hemisphere.
    #[arg(long, default_value_t = 32)]
    pub polar_nodes: usize,
    /// Azimuthal nodes for fields without axial symmetry.
    #[arg(long, default_value_t = 64)]
    pub azimuthal_nodes: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    pub lambda: Lambda,
    /// Polar angle of the surface point.
    #[arg(long)]
    pub phi: f64,
    /// Azimuth of the surface point.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 32)]
    pub ndirs: usize,
    #[arg(long, value_enum)]
    pub density: Option<Density>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct AbmapArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub v3: f64,
    /// Heatmap resolution per axis.
    #[arg(long, default_value_t = 200)]
    pub res: usize,
    /// Skip the optimal-path overlays.
    #[arg(long)]
    pub no_overlay: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Inf,
    Fin,
}

#[derive(Args, Debug)]
pub struct RecoveryArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Layer thickness.
    #[arg(long)]
    pub eta: f64,
    /// Partition width (`fin` only).
    #[arg(long, default_value_t = 0.2)]
    pub h: f64,
    /// Mollifier width (`fin` only); defaults to h / 5.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Field ratio (`fin` only).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Bulk length scale (`fin` only); defaults to eta / lambda.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Also write an N x N field sample next to the output.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

fn parse_lambda(s: &str) -> Result<Lambda, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

/// Failed runs: `Usage` maps to exit code 1, `Solver` to 2.
pub enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_solver_failure(&e) {
            Self::Solver(e.to_string())
        } else {
            Self::Usage(e.to_string())
        }
    }
}

fn is_solver_failure(e: &Error) -> bool {
    match e {
        Error::NewtonFailed { .. }
        | Error::NotConverged(_)
        | Error::QuadratureNotConverged { .. }
        | Error::InterfaceMismatch { .. } => true,
        Error::NodeFailed { source, .. } => is_solver_failure(source),
        _ => false,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Dlambda(a) => commands::dlambda(&a),
        Command::Sphere(a) => commands::sphere(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Abmap(a) => commands::abmap(&a),
        Command::Recovery(a) => commands::recovery(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("boojum: solver did not converge; output written");
            ExitCode::from(2)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("boojum: {m}");
            eprintln!("run `boojum --help` for usage");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("boojum: {m}");
            ExitCode::from(2)
        }
    }
}
