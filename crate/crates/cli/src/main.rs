use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kleene_consensus::experiment::{
    figure_config, run_sweep_with_threads, ProfileMode, TrajectoryWriter, Variant,
};
use kleene_consensus::{
    emit_results, run, run_sweep, Error, Init, Operator, PayoffProfile, RunConfig, Selection,
    SweepConfig,
};

const OUT_DIR_ENV: &str = "KLEENE_CONSENSUS_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "kleene-consensus",
    version,
    about = "Three-valued consensus simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write aggregate CSV, trajectories and metadata.
    Sweep(SweepArgs),
    /// Run a single simulation and print its trajectory as CSV.
    Run(RunArgs),
    /// Write the canned sweep configurations for figures 1-5.
    FiguresConfig(FiguresArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    init: Option<Init>,
    #[arg(long, value_delimiter = ',')]
    gamma_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Comma-separated operator/selection pairs, e.g. three-valued/payoff.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long)]
    runs_per_cell: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    #[arg(long)]
    profile_mode: Option<ProfileMode>,
    /// Payoff profile file: one weight in [-1, 1] per line.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    trajectory_gammas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    trajectory_variants: Option<Vec<Variant>>,
    #[arg(long)]
    early_stop: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    population_size: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value = "three-valued")]
    operator: Operator,
    #[arg(long, default_value = "uniform")]
    selection: Selection,
    #[arg(long, default_value = "three-valued")]
    init: Init,
    #[arg(long, default_value_t = 50_000)]
    iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    record_every: u64,
    #[arg(long)]
    early_stop: bool,
    /// Trajectory CSV destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FiguresArgs {
    /// Figure number 1-5; all five when omitted.
    #[arg(long)]
    figure: Option<u8>,
    /// Directory for figureN.json files; stdout when omitted with --figure.
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T> Classify<T> for Result<T, Error> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.to_string()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| {
            if e.is_config_error() {
                Failure::Config(e.to_string())
            } else {
                Failure::Runtime(e.to_string())
            }
        })
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load_profile(path: &Option<PathBuf>) -> Result<Option<PayoffProfile>, Failure> {
    path.as_ref()
        .map(PayoffProfile::from_file)
        .transpose()
        .config()
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => SweepConfig::from_file(path).config()?,
        None => SweepConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { config.$field = v; })*
        };
    }
    apply!(
        population_size,
        iterations,
        init,
        gamma_values,
        n_values,
        variants,
        runs_per_cell,
        master_seed,
        record_every,
        profile_mode,
        trajectory_gammas,
        trajectory_variants
    );
    if let Some(p) = load_profile(&args.profile)? {
        config.payoff_profile = Some(p);
    }
    config.early_stop |= args.early_stop;
    config.validate().config()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| io_failure(&args.out_dir, e))?;

    let result = match args.threads {
        Some(t) => run_sweep_with_threads(&config, t),
        None => run_sweep(&config),
    }
    .runtime()?;
    let files = emit_results(&result, &args.out_dir).runtime()?;
    eprintln!(
        "{} cells x {} runs -> {}",
        result.records.len(),
        config.runs_per_cell,
        files.aggregate.display()
    );
    Ok(())
}

fn single_run(args: RunArgs) -> Result<(), Failure> {
    let config = RunConfig {
        population_size: args.population_size,
        n: args.n,
        gamma: args.gamma,
        operator: args.operator,
        selection: args.selection,
        init: args.init,
        iterations: args.iterations,
        seed: args.seed,
        stream: args.stream,
        payoff_profile: load_profile(&args.profile)?,
        record_every: args.record_every,
        early_stop: args.early_stop,
    };
    config.validate().config()?;
    let metrics = run(&config).runtime()?;

    let mut buf = Vec::new();
    let mut w = TrajectoryWriter::new(&mut buf).runtime()?;
    let variant = Variant::new(config.operator, config.selection);
    w.write_run(
        variant,
        config.gamma,
        args.stream as usize,
        &metrics.trajectory,
    )
    .runtime()?;
    w.finish().runtime()?;
    match &args.output {
        Some(path) => fs::write(path, &buf).map_err(|e| io_failure(path, e))?,
        None => io::stdout()
            .write_all(&buf)
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    eprintln!(
        "endpoint: vagueness={} distinct={} payoff_pct={}",
        metrics.endpoint.vagueness, metrics.endpoint.distinct, metrics.endpoint.payoff_pct
    );
    Ok(())
}

fn figures_config(args: FiguresArgs) -> Result<(), Failure> {
    let figures: Vec<u8> = match args.figure {
        Some(f) => vec![f],
        None => (1..=5).collect(),
    };
    let configs = figures
        .iter()
        .map(|&f| figure_config(f).map(|c| (f, c)))
        .collect::<Result<Vec<_>, _>>()
        .config()?;
    match (&args.out_dir, configs.as_slice()) {
        (None, [(_, config)]) => {
            let json = serde_json::to_string_pretty(config).expect("config serializes");
            println!("{json}");
        }
        (None, _) => {
            return Err(Failure::Config(
                "--out-dir is required when writing all figures".into(),
            ))
        }
        (Some(dir), _) => {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            for (f, config) in &configs {
                let path = dir.join(format!("figure{f}.json"));
                let json = serde_json::to_string_pretty(config).expect("config serializes");
                fs::write(&path, json + "\n").map_err(|e| io_failure(&path, e))?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Run(args) => single_run(args),
        Command::FiguresConfig(args) => figures_config(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
