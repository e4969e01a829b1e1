//! `kottler` command-line front end.
//!
//! Every run prints a JSON report `{run_id, config, result, verdicts}` and
//! exits 0 when all verdicts pass, 1 when any fails, 2 on usage errors.

mod commands;
mod config;
mod error;
mod report;
mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{Report, Verdict};

/// Environment variable prefixed to relative output paths.
pub const OUT_DIR_ENV: &str = "KOTTLER_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(name = "kottler", version, about = "Static vacuum verification runs", args_override_self = true)]
pub struct Cli {
    /// `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Also write the JSON report to this path.
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub json: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Model lapse profile (BK or Nariai) as CSV.
    #[command(args_override_self = true)]
    Model(ModelArgs),
    /// Virtual mass from a surface gravity, or gravities from a mass.
    #[command(args_override_self = true)]
    Mass(MassArgs),
    /// Radial evolution from umbilic data on the maximum set.
    #[command(args_override_self = true)]
    Evolve(EvolveArgs),
    /// Pseudo-radial function and model gradient.
    #[command(args_override_self = true)]
    Psi(PsiArgs),
    /// Verification runs.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Łojasiewicz exponent fits and checks on built-in 2D fields.
    #[command(args_override_self = true)]
    Loja(LojaArgs),
    /// Grid of independent cases, run in parallel.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "check", rename_all = "lowercase")]
pub enum VerifyCommand {
    /// Gradient-estimate ratios of a profile CSV.
    #[command(args_override_self = true)]
    Gradest(GradestArgs),
    /// Remainder order of a Taylor expansion at the maximum set.
    #[command(args_override_self = true)]
    Expansion(ExpansionArgs),
    /// Gradient and surface-gravity limits.
    #[command(args_override_self = true)]
    Limits(LimitsArgs),
    /// Evolve both ways, classify and recover the mass.
    #[command(args_override_self = true)]
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Bk,
    Nariai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassArg {
    Outer,
    Inner,
    Cylindrical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Outer,
    Inner,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Mass parameter (BK only).
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Bk)]
    pub family: FamilyArg,
    /// Lapse at the maximum set; defaults to `u_max(m)` (BK) or 1 (Nariai).
    #[arg(long)]
    pub gauge: Option<f64>,
    /// BK samples per side between the maximum and the horizon window.
    #[arg(long, default_value_t = 400)]
    pub interior: usize,
    /// BK samples per side inside each horizon window.
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    /// Nariai sample count.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub constraint_tol: f64,
    /// Profile CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Profile manifest JSON output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MassArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Normalized surface gravity to invert.
    #[arg(long, conflicts_with = "m")]
    pub k: Option<f64>,
    /// Region class; classified from `k` when omitted.
    #[arg(long, value_enum, requires = "k")]
    pub class: Option<ClassArg>,
    /// Mass whose horizon gravities are reported.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub class_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub rho0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gauge: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
    /// Adaptive step tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Fixed step size; overrides `--tol`.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    pub constraint_tol: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_range: f64,
    /// Profile CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PsiArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub u: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Outer)]
    pub branch: BranchArg,
    /// `|∇u|` at the point, for the gradient ratio and W.
    #[arg(long)]
    pub grad: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradestArgs {
    /// Profile CSV (`r,rho,u,dudr,drhodr,constraint_residual`).
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Virtual mass of the model; omit for a Nariai (cylindrical) check.
    #[arg(long)]
    pub m: Option<f64>,
    /// Allowed excess of the ratio over 1.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also require `|ratio − 1| ≤ tol` (model profiles).
    #[arg(long)]
    pub saturate: bool,
    /// Per-sample ratio CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionTarget {
    Lapse,
    Psi,
    Ratio,
    Nariai,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpansionArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub m: f64,
    /// Remainder order p; the check is `|exact − expansion| = O(r^(p+1))`.
    #[arg(long, default_value_t = 4)]
    pub order: u32,
    /// Expanded quantity; defaults by order (4 lapse, 3 psi, 1 ratio).
    #[arg(long, value_enum)]
    pub target: Option<ExpansionTarget>,
    /// Dyadic radii, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025, 0.0125])]
    pub grid: Vec<f64>,
    /// Evaluate at `−r` instead of `r`.
    #[arg(long)]
    pub inner: bool,
    /// Convergence table CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitsArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub m: f64,
    /// Distance from the maximum set at which the gradient limit is probed.
    #[arg(long, default_value_t = 1e-3)]
    pub r: f64,
    /// Relative tolerance on `|v|²/(u_max − u)` against `−2Δu`.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RoundtripArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub rho0: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Tolerance on each recovered mass.
    #[arg(long, default_value_t = 1e-6)]
    pub mass_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LojaMode {
    Fit,
    Forward,
    Reverse,
    Identity,
}

#[derive(Debug, Args, Serialize)]
pub struct LojaArgs {
    /// neg_x2y2 | neg_x2y4 | torus_sin2sin2 | bk_lapse_radial
    #[arg(long)]
    pub field: String,
    #[arg(long, value_delimiter = ',', value_name = "X,Y")]
    pub center: Option<Vec<f64>>,
    /// Annulus radii around the center.
    #[arg(long, value_delimiter = ',', value_name = "R1,R2")]
    pub window: Option<Vec<f64>>,
    /// Keep only points with `f_max − f ≤ cap`.
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = LojaMode::Fit)]
    pub mode: LojaMode,
    /// Grid points per axis.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    /// Dimension for bk_lapse_radial.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mass for bk_lapse_radial.
    #[arg(long)]
    pub m: Option<f64>,
    /// Expected exponent for the fit verdict.
    #[arg(long)]
    pub expect_theta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub theta_tol: f64,
    /// Constant c of the identity.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Identity region `x0,x1,y0,y1`.
    #[arg(long, value_delimiter = ',', value_name = "X0,X1,Y0,Y1")]
    pub region: Option<Vec<f64>>,
    /// Identity refinement grids.
    #[arg(long, value_delimiter = ',', default_values_t = [65usize, 129, 257])]
    pub grids: Vec<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub order_tol: f64,
    /// CSV of `(ln(f_max − f), ln|∇f|²)` pairs.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCase {
    Roundtrip,
    Monotonicity,
    Mass,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub case: SweepCase,
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize])]
    pub n: Vec<usize>,
    /// Masses: comma-separated values or `a..b:count` ranges.
    #[arg(long)]
    pub masses: Option<String>,
    /// Maximum-set radii, same syntax as `--masses`.
    #[arg(long)]
    pub rho0: Option<String>,
    /// Monotonicity grid size.
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub mass_tol: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Per-case summary CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a subcommand hands back for reporting.
pub struct Outcome {
    pub result: serde_json::Value,
    pub verdicts: Vec<Verdict>,
}

/// Resolves relative output paths against `KOTTLER_OUT_DIR` when set.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let path = output_path(path);
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(&path, bytes).map_err(io)
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Model(a) => commands::model(a),
        Command::Mass(a) => commands::mass(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Psi(a) => commands::psi(a),
        Command::Verify(VerifyCommand::Gradest(a)) => commands::gradest(a),
        Command::Verify(VerifyCommand::Expansion(a)) => commands::expansion(a),
        Command::Verify(VerifyCommand::Limits(a)) => commands::limits(a),
        Command::Verify(VerifyCommand::Roundtrip(a)) => commands::roundtrip(a),
        Command::Loja(a) => commands::loja(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<(), CliError> {
    let text = report.to_json();
    print!("{text}");
    if let Some(p) = &cli.json {
        write_output(p, text.as_bytes())?;
    }
    Ok(())
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run(argv: Vec<OsString>) -> u8 {
    let argv = match config::splice(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = serde_json::to_value(&cli.command).expect("config serializes");
    let report = match dispatch(&cli) {
        Ok(out) => Report::new(config, out.result, out.verdicts),
        Err(e) if e.is_usage() => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => Report::new(config, serde_json::Value::Null, vec![Verdict::error("run", e.to_string())]),
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: {e}");
        return 2;
    }
    if report.all_pass() {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}
