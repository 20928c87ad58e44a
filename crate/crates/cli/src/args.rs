use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "trotterforge", version, about = "Trotter-step compiler and resource analyzer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit a power-law Hamiltonian spec as JSON.
    Build(BuildArgs),
    /// Emit a decomposition listing as JSON.
    Decompose(DecomposeArgs),
    /// Far-field rank profile as CSV.
    RankProfile(RankProfileArgs),
    /// Compile one Trotter step to circuit text plus a cost sidecar.
    Compile(CompileArgs),
    /// Compare a compiled step against exact evolution.
    Verify(CompileArgs),
    /// Trotter error versus time for several orders, as CSV.
    ErrorSweep(ErrorSweepArgs),
    /// Per-step gate-count scaling table as CSV.
    CostReport(CostReportArgs),
    /// Gate-count lower bounds as JSON.
    Bound(BoundArgs),
    /// Electronic-structure norms and Trotter step counts.
    Chem(ChemArgs),
}

/// Integer flag that also accepts scientific notation such as `1e3`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if x >= 0.0 && x.fract() == 0.0 && x < 1e15 {
        Ok(x as usize)
    } else {
        Err(format!("{s:?} is not a nonnegative integer"))
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Positive,
    Alternating,
    Random,
}

/// Either a spec file or power-law generator parameters.
#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Read the Hamiltonian from a spec JSON file instead of generating one.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub d: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Comma-separated Pauli pairs, e.g. `zz` or `xx,zz`.
    #[arg(long, default_value = "zz")]
    pub pairs: String,
    #[arg(long, value_enum, default_value = "positive")]
    pub sign: SignArg,
    /// On-site X field strength added to every site.
    #[arg(long)]
    pub field_x: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Bisection,
    Lowrank,
    Avgcost,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long, value_parser = parse_count)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "bisection")]
    pub variant: VariantArg,
    /// Leaf size of the low-rank recursion.
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub cutoff: usize,
    /// Subdivision count per side for the average-cost variant.
    #[arg(long, value_parser = parse_count, default_value = "2")]
    pub m: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RankProfileArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub cutoff: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sequential,
    Lowrank,
    Avgcost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Verify,
    CountOnly,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum, default_value = "sequential")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub p: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// SVD truncation tolerance for the low-rank method.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub cutoff: usize,
    /// Subdivision count for the average-cost method.
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub m: usize,
    #[arg(long, value_enum, default_value = "verify")]
    pub mode: ModeArg,
    /// Cost sidecar path; defaults to `<out>.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Fail with a validation error when the verified distance exceeds this.
    #[arg(long)]
    pub max_distance: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ErrorSweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1,2,4")]
    pub orders: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub times: Vec<f64>,
    /// Accuracy used for the reported step count.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CostReportArgs {
    #[arg(long, default_value = "sequential")]
    pub method: String,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub d: usize,
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "64,128,256,512")]
    pub sweep: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    Diag,
    Ham,
    Discrete,
    Coeff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Table,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(value_enum)]
    pub kind: BoundKind,
    #[arg(long, value_parser = parse_count)]
    pub mu: Option<usize>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// Accuracy δ (diagonal variants) or ε (Hamiltonian and oracle variants).
    #[arg(long, alias = "eps")]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub b: Option<usize>,
    /// Finite gate-set size.
    #[arg(long, value_parser = parse_count)]
    pub k: Option<usize>,
    /// Use arbitrary 2-qubit gates with this Clifford+T compilation constant.
    #[arg(long)]
    pub arbitrary_c: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_red: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_poly: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ChemArgs {
    /// System JSON file; overrides `--grid`, `--omega` and `--eta`.
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long, value_parser = parse_count, default_value = "3")]
    pub grid: usize,
    /// Cell volume; defaults to one unit per grid point.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Electron count; defaults to half filling.
    #[arg(long, value_parser = parse_count)]
    pub eta: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long, value_parser = parse_count, default_value = "2")]
    pub p: usize,
    /// Constant multiplying the Trotter error bound expression.
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    /// Emit a norm-scaling CSV over these grid sides instead of a single report.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    #[command(flatten)]
    pub output: OutputArgs,
}
