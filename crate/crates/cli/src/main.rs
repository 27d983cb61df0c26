//! `durateless`: analyze, simulate and design DU-rateless codes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use durateless::analysis::{self, FixedPointOptions};
use durateless::optimize::{self, FrontParams};
use durateless::sim;
use durateless::spec::DEFAULT_K;
use durateless::{CodecError, EnsembleSpec, GaConfig, OptimizeError, Problem, SpecError, FORMAT_VERSION};
use tempfile::NamedTempFile;

const AFTER_HELP: &str = "Exit codes: 0 success, 1 I/O failure, 2 invalid input.";

#[derive(Parser, Debug)]
#[command(name = "durateless", about = "Distributed rateless codes with unequal error protection", after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads for simulation and optimization (default: all cores).
    #[arg(long, global = true, env = "DURATELESS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic error rates of an ensemble over a grid of overheads.
    Analyze(AnalyzeArgs),
    /// Monte Carlo error rates compared against the asymptotic analysis.
    Simulate(SimulateArgs),
    /// Search for Pareto-optimal ensembles with NSGA-II.
    Optimize(OptimizeArgs),
    /// Pick the front point whose BER2/BER1 is closest to a target.
    Design(DesignArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Ensemble spec (JSON).
    spec: PathBuf,
    /// Comma-separated overheads; defaults to the spec's gamma.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Vec<f64>,
    /// Output CSV: gamma,ber1,ber2,iterations,converged.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Ensemble spec (JSON).
    spec: PathBuf,
    /// Block length of source 2; defaults to the spec's k, then 2000.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated overheads; defaults to the spec's gamma.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Vec<f64>,
    /// Output comparison CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.05)]
    gamma: f64,
    /// Maximum degree of Ω.
    #[arg(long = "b1", visible_alias = "B1", default_value_t = 100)]
    b1: usize,
    /// Maximum degree of φ.
    #[arg(long = "b2", visible_alias = "B2", default_value_t = 100)]
    b2: usize,
    /// Block length recorded with each design.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// GA settings (JSON); the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Front CSV: ber1,ber2,eta.
    #[arg(long)]
    out_front: PathBuf,
    /// Front parameters (JSON), input of `design`.
    #[arg(long)]
    out_params: PathBuf,
    /// Per-generation archive size and hypervolume (CSV).
    #[arg(long)]
    out_history: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// Parameters file written by `optimize --out-params`.
    #[arg(long)]
    front: PathBuf,
    /// Target BER2/BER1.
    #[arg(long)]
    eta: f64,
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Invalid(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Writes through a temporary file in the target directory and renames it
/// into place only after `fill` succeeds.
fn write_atomic<E: Into<io::Error>>(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> std::result::Result<(), E>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    fill(&mut tmp).map_err(|e| CliError::io(path, e.into()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn gamma_grid(given: &[f64], spec: &EnsembleSpec) -> Result<Vec<f64>> {
    let grid = if given.is_empty() { vec![spec.gamma] } else { given.to_vec() };
    if let Some(g) = grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(CliError::Invalid(format!("overhead {g} must be positive")));
    }
    Ok(grid)
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let spec = EnsembleSpec::load(&args.spec)?;
    let ensemble = spec.to_ensemble(DEFAULT_K)?;
    let grid = gamma_grid(&args.gamma_grid, &spec)?;
    let rows = analysis::ber_curve(&ensemble, &grid, &FixedPointOptions::default())?;
    write_atomic(&args.out, |w| analysis::write_ber_curve_csv(&rows, w))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let spec = EnsembleSpec::load(&args.spec)?;
    let ensemble = spec.to_ensemble(DEFAULT_K)?;
    let k = args.k.unwrap_or(ensemble.k());
    if args.trials == 0 {
        return Err(CliError::Invalid("--trials must be at least 1".into()));
    }
    let grid = gamma_grid(&args.gamma_grid, &spec)?;
    ensemble.with_k(k)?.check_block_lengths()?;
    let rows: Vec<_> =
        sim::sweep_gamma(&ensemble, k, &grid, args.trials, args.seed)?.iter().map(sim::compare_with_analysis).collect();
    write_atomic(&args.out, |w| sim::write_comparison_csv(&rows, w))
}

fn optimize_cmd(args: &OptimizeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<GaConfig>(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        }
        None => GaConfig::default(),
    };
    if let Some(p) = args.pop {
        config.population = p;
    }
    if let Some(g) = args.gens {
        config.generations = g;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let problem = Problem { rho: args.rho, k: args.k, gamma: args.gamma, b1: args.b1, b2: args.b2 };
    problem.validate()?;
    config.validate()?;

    let run = optimize::evolve(&problem, &config)?;
    let params = FrontParams::from_front(&run.front, &problem)?;
    write_atomic(&args.out_front, |w| optimize::write_front_csv(&run.front, w))?;
    write_atomic(&args.out_params, |w| {
        serde_json::to_writer_pretty(&mut *w, &params)?;
        writeln!(w)
    })?;
    if let Some(path) = &args.out_history {
        write_atomic(path, |w| optimize::write_history_csv(&run.history, w))?;
    }
    let last = run.history.last().expect("history starts with the initial population");
    eprintln!(
        "front: {} points, hypervolume {:.6e} after {} generations",
        run.front.len(),
        last.hypervolume,
        last.generation
    );
    Ok(())
}

fn design(args: &DesignArgs) -> Result<()> {
    let text = fs::read_to_string(&args.front).map_err(|e| CliError::io(&args.front, e))?;
    let params: FrontParams =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", args.front.display())))?;
    if params.format_version != FORMAT_VERSION {
        return Err(CliError::Invalid(format!(
            "{}: format version {} is not supported (expected {FORMAT_VERSION})",
            args.front.display(),
            params.format_version
        )));
    }
    let point = params.select_by_eta(args.eta)?;
    writeln!(io::stdout().lock(), "{}", point.ensemble.to_json_pretty())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("cannot start thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize_cmd(a),
        Command::Design(a) => design(a),
    }
}

fn main() -> ExitCode {
    let version = format!("{} (format {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"));
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
