use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

mod commands;

use commands::Failure;

#[derive(Parser)]
#[command(name = "surfoffset", version, about = "Geodesic curve offsetting on parametric surfaces")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offset curves by one or more geodesic distances.
    Offset(OffsetArgs),
    /// Shortest geodesic between two parameter points.
    Geodesic(GeodesicArgs),
    /// Geodesic Voronoi labelling of the curve sites.
    Voronoi(VoronoiArgs),
    /// Morphological operation on a region bounded by closed loops.
    Morph(MorphArgs),
    /// Accuracy and scaling benchmarks.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct MeshArgs {
    /// Surface JSON file or the name of a shipped surface.
    #[arg(long)]
    pub surface: String,

    /// Vertex samples along u and v.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,

    /// Offset configuration JSON; other flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct CurveArgs {
    /// Curve JSON file or the name of a shipped curve.
    #[arg(long)]
    pub curve: String,

    /// Total curve segments, shared between curves by length.
    #[arg(long)]
    pub segments: Option<usize>,

    /// Distance-field cutoff.
    #[arg(long)]
    pub cutoff: Option<f64>,

    /// Overrides the seed of a random-waypoint field initialisation.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Obj,
    Svg,
    Json,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Output path prefix.
    #[arg(long, default_value = "offset")]
    pub out: PathBuf,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "obj,svg,json")]
    pub formats: Vec<Format>,
}

#[derive(Args)]
pub struct OffsetArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    #[command(flatten)]
    pub output: OutputArgs,

    /// Offset distances, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub distance: Vec<f64>,
}

#[derive(Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub output: OutputArgs,

    #[arg(long, value_parser = parse_point)]
    pub from: (f64, f64),

    #[arg(long, value_parser = parse_point)]
    pub to: (f64, f64),
}

#[derive(Args)]
pub struct VoronoiArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    #[command(flatten)]
    pub output: OutputArgs,

    /// Distance the labelling must cover when no cutoff is given.
    #[arg(long)]
    pub distance: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MorphOp {
    Dilate,
    Erode,
    Opening,
    Closing,
}

#[derive(Args)]
pub struct MorphArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    #[command(flatten)]
    pub output: OutputArgs,

    #[arg(long, value_enum)]
    pub op: MorphOp,

    #[arg(long)]
    pub distance: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Geodesic,
    Accuracy,
    Scaling,
    All,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<SuiteArg>,

    /// Output prefix for the CSV and JSON reports.
    #[arg(long, default_value = "bench")]
    pub out: PathBuf,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Random pairs per subdivision level in the geodesic suite.
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,

    /// Icosphere subdivision levels for the geodesic suite.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub levels: Vec<u32>,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated values, got `{s}`"))?;
    let parse = |x: &str| x.trim().parse::<T>().map_err(|_| format!("invalid number `{x}`"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s)
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn init_logging() {
    let level = match std::env::var("SURFOFFSET_LOG").as_deref() {
        Ok("quiet") => "error".to_string(),
        Ok(v) if !v.is_empty() => v.to_string(),
        _ => "warn".to_string(),
    };
    let filter = EnvFilter::try_new(&level).unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt().json().with_env_filter(filter).with_writer(std::io::stderr).init();
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::from(surfoffset_core::Error::Config(e.to_string())))?;
    }
    match cli.command {
        Command::Offset(a) => commands::offset(&a),
        Command::Geodesic(a) => commands::geodesic(&a),
        Command::Voronoi(a) => commands::voronoi(&a),
        Command::Morph(a) => commands::morph(&a),
        Command::Bench(a) => commands::bench(&a),
    }
}

fn main() -> ExitCode {
    init_logging();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.exit_code())
        }
    }
}
