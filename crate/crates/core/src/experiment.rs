//! Parameter sweeps with repeated seeded runs, aggregation across runs and
//! the CSV / JSON result files.
//!
//! Run `r` of every cell uses stream `r` of the master seed, so cells that
//! differ only in γ, operator or selection start from the same initial
//! population and payoff profile.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{InconsistencyThreshold, Operator};
use crate::error::{Error, Result};
use crate::payoff::{sample_profile, PayoffProfile};
use crate::sim::{run, run_rng, Init, RunConfig, Selection, TrajectoryPoint, DEFAULT_RECORD_EVERY};

pub const AGGREGATE_HEADER: &str = "variant,selection,init,n,population,gamma,runs,vagueness_mean,vagueness_std,distinct_mean,distinct_std,payoff_pct_mean,payoff_pct_std";
pub const TRAJECTORY_HEADER: &str = "variant,gamma,run,iteration,distinct,vagueness,payoff_pct";

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Stream reserved for drawing a shared profile in [`ProfileMode::Fixed`].
const FIXED_PROFILE_STREAM: u64 = u64::MAX;

/// An operator paired with a selection policy, written `operator/selection`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variant {
    pub operator: Operator,
    pub selection: Selection,
}

impl Variant {
    pub const fn new(operator: Operator, selection: Selection) -> Self {
        Variant {
            operator,
            selection,
        }
    }

    /// The four operator × selection combinations.
    pub fn all() -> Vec<Variant> {
        vec![
            Variant::new(Operator::ThreeValued, Selection::Payoff),
            Variant::new(Operator::ThreeValued, Selection::Uniform),
            Variant::new(Operator::BooleanStochastic, Selection::Payoff),
            Variant::new(Operator::BooleanStochastic, Selection::Uniform),
        ]
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.operator, self.selection)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (op, sel) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("variant {s:?} is not operator/selection")))?;
        Ok(Variant::new(op.parse()?, sel.parse()?))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

/// Whether every run draws its own payoff profile or all runs share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    Resample,
    Fixed,
}

impl ProfileMode {
    pub fn name(self) -> &'static str {
        match self {
            ProfileMode::Resample => "resample",
            ProfileMode::Fixed => "fixed",
        }
    }
}

impl FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample" => Ok(ProfileMode::Resample),
            "fixed" => Ok(ProfileMode::Fixed),
            _ => Err(Error::Parse(format!("unknown profile mode {s:?}"))),
        }
    }
}

/// γ from 0 to 1 in steps of 0.1. Computed as `k / 10` so each value is the
/// same double as the decimal literal.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub population_size: usize,
    pub iterations: u64,
    pub init: Init,
    pub gamma_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub variants: Vec<Variant>,
    pub runs_per_cell: usize,
    pub master_seed: u64,
    pub record_every: u64,
    pub profile_mode: ProfileMode,
    /// Explicit profile shared by every run; implies [`ProfileMode::Fixed`].
    pub payoff_profile: Option<PayoffProfile>,
    /// Cells at these γ values keep their per-run trajectories.
    pub trajectory_gammas: Vec<f64>,
    /// Restricts trajectory output to these variants; empty means all.
    pub trajectory_variants: Vec<Variant>,
    pub early_stop: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            population_size: 100,
            iterations: 50_000,
            init: Init::ThreeValued,
            gamma_values: default_gamma_grid(),
            n_values: vec![5],
            variants: vec![Variant::new(Operator::ThreeValued, Selection::Uniform)],
            runs_per_cell: 100,
            master_seed: 0,
            record_every: DEFAULT_RECORD_EVERY,
            profile_mode: ProfileMode::Resample,
            payoff_profile: None,
            trajectory_gammas: Vec::new(),
            trajectory_variants: Vec::new(),
            early_stop: false,
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub variant: Variant,
    pub n: usize,
    pub gamma: f64,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("sweep config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SweepConfig::from_json(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn profile_mode(&self) -> ProfileMode {
        if self.payoff_profile.is_some() {
            ProfileMode::Fixed
        } else {
            self.profile_mode
        }
    }

    /// Cells in output order: variant, then n, then γ.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells =
            Vec::with_capacity(self.variants.len() * self.n_values.len() * self.gamma_values.len());
        for &variant in &self.variants {
            for &n in &self.n_values {
                for &gamma in &self.gamma_values {
                    cells.push(Cell { variant, n, gamma });
                }
            }
        }
        cells
    }

    pub fn keeps_trajectory(&self, cell: &Cell) -> bool {
        self.trajectory_gammas.contains(&cell.gamma)
            && (self.trajectory_variants.is_empty()
                || self.trajectory_variants.contains(&cell.variant))
    }

    fn shared_profile(&self, n: usize) -> Result<Option<PayoffProfile>> {
        if let Some(p) = &self.payoff_profile {
            return Ok(Some(p.clone()));
        }
        match self.profile_mode {
            ProfileMode::Resample => Ok(None),
            ProfileMode::Fixed => {
                let mut rng = run_rng(self.master_seed, FIXED_PROFILE_STREAM);
                sample_profile(n, &mut rng).map(Some)
            }
        }
    }

    /// The run configuration for run `run` of `cell`.
    pub fn run_config(&self, cell: &Cell, run: usize) -> Result<RunConfig> {
        Ok(RunConfig {
            population_size: self.population_size,
            n: cell.n,
            gamma: cell.gamma,
            operator: cell.variant.operator,
            selection: cell.variant.selection,
            init: self.init,
            iterations: self.iterations,
            seed: self.master_seed,
            stream: run as u64,
            payoff_profile: self.shared_profile(cell.n)?,
            record_every: self.record_every,
            early_stop: self.early_stop,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_cell == 0 {
            return Err(Error::config("runs_per_cell must be positive"));
        }
        for (name, empty) in [
            ("gamma_values", self.gamma_values.is_empty()),
            ("n_values", self.n_values.is_empty()),
            ("variants", self.variants.is_empty()),
        ] {
            if empty {
                return Err(Error::config(format!("{name} must not be empty")));
            }
        }
        for &g in self.gamma_values.iter().chain(&self.trajectory_gammas) {
            InconsistencyThreshold::new(g)?;
        }
        if let Some(p) = &self.payoff_profile {
            if let Some(n) = self.n_values.iter().find(|&&n| n != p.len()) {
                return Err(Error::config(format!(
                    "payoff profile has {} weights but n_values contains {n}",
                    p.len()
                )));
            }
        }
        for cell in self.cells() {
            self.run_config(&cell, 0)?.validate()?;
        }
        Ok(())
    }
}

/// Endpoint of one run, plus its trajectory when the cell keeps it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub cell: usize,
    pub run: usize,
    pub vagueness: f64,
    pub distinct: usize,
    pub payoff_pct: f64,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub warnings: Vec<String>,
}

/// Mean and standard deviation of each endpoint metric over one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub variant: Operator,
    pub selection: Selection,
    pub init: Init,
    pub n: usize,
    pub population: usize,
    pub gamma: f64,
    pub runs: usize,
    pub vagueness_mean: f64,
    pub vagueness_std: f64,
    pub distinct_mean: f64,
    pub distinct_std: f64,
    pub payoff_pct_mean: f64,
    pub payoff_pct_std: f64,
}

impl AggregateRecord {
    pub fn variant(&self) -> Variant {
        Variant::new(self.variant, self.selection)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<Cell>,
    pub records: Vec<AggregateRecord>,
    /// Ordered by cell, then run.
    pub runs: Vec<RunRecord>,
}

impl SweepResult {
    pub fn record(&self, variant: Variant, n: usize, gamma: f64) -> Option<&AggregateRecord> {
        self.records
            .iter()
            .find(|r| r.variant() == variant && r.n == n && r.gamma == gamma)
    }

    pub fn runs_of(&self, cell: usize) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.cell == cell)
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    (mean, var.sqrt())
}

/// Runs every cell `runs_per_cell` times. Work is spread over the current
/// rayon pool; results are ordered by cell and run index.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells = config.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.runs_per_cell).map(move |r| (c, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cell = &cells[c];
            let metrics = run(&config.run_config(cell, r)?)?;
            Ok(RunRecord {
                cell: c,
                run: r,
                vagueness: metrics.endpoint.vagueness,
                distinct: metrics.endpoint.distinct,
                payoff_pct: metrics.endpoint.payoff_pct,
                trajectory: config.keeps_trajectory(cell).then_some(metrics.trajectory),
                warnings: metrics.warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let records = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            aggregate(
                config,
                cell,
                &runs[c * config.runs_per_cell..(c + 1) * config.runs_per_cell],
            )
        })
        .collect();
    Ok(SweepResult {
        config: config.clone(),
        cells,
        records,
        runs,
    })
}

/// Like [`run_sweep`] but on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(config: &SweepConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

fn aggregate(config: &SweepConfig, cell: &Cell, runs: &[RunRecord]) -> AggregateRecord {
    let collect = |f: fn(&RunRecord) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let (vagueness_mean, vagueness_std) = mean_std(&collect(|r| r.vagueness));
    let (distinct_mean, distinct_std) = mean_std(&collect(|r| r.distinct as f64));
    let (payoff_pct_mean, payoff_pct_std) = mean_std(&collect(|r| r.payoff_pct));
    AggregateRecord {
        variant: cell.variant.operator,
        selection: cell.variant.selection,
        init: config.init,
        n: cell.n,
        population: config.population_size,
        gamma: cell.gamma,
        runs: runs.len(),
        vagueness_mean,
        vagueness_std,
        distinct_mean,
        distinct_std,
        payoff_pct_mean,
        payoff_pct_std,
    }
}

pub fn write_aggregate_csv<W: Write>(out: W, records: &[AggregateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_aggregate_csv<R: std::io::Read>(input: R) -> Result<Vec<AggregateRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

#[derive(Debug, Serialize)]
struct TrajectoryRow<'a> {
    variant: &'a str,
    gamma: f64,
    run: usize,
    iteration: u64,
    distinct: usize,
    vagueness: f64,
    payoff_pct: f64,
}

/// Trajectory CSV for the kept runs of a sweep.
pub fn write_trajectory_csv<W: Write>(out: W, result: &SweepResult) -> Result<()> {
    let mut w = TrajectoryWriter::new(out)?;
    for r in &result.runs {
        if let Some(trajectory) = &r.trajectory {
            let cell = &result.cells[r.cell];
            w.write_run(cell.variant, cell.gamma, r.run, trajectory)?;
        }
    }
    w.finish()
}

/// Streams rows in the trajectory CSV schema.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        inner
            .write_record(TRAJECTORY_HEADER.split(','))
            .map_err(csv_error)?;
        Ok(TrajectoryWriter { inner })
    }

    pub fn write_run(
        &mut self,
        variant: Variant,
        gamma: f64,
        run: usize,
        trajectory: &[TrajectoryPoint],
    ) -> Result<()> {
        let variant = variant.to_string();
        for p in trajectory {
            self.inner
                .serialize(TrajectoryRow {
                    variant: &variant,
                    gamma,
                    run,
                    iteration: p.iteration,
                    distinct: p.distinct,
                    vagueness: p.vagueness,
                    payoff_pct: p.payoff_pct,
                })
                .map_err(csv_error)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Written next to the CSVs so a sweep can be reproduced from its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub software: String,
    pub version: String,
    pub master_seed: u64,
    pub config: SweepConfig,
    pub flags: MetadataFlags,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataFlags {
    pub profile_mode: ProfileMode,
    pub profile_distribution: String,
    pub pair_sampling: String,
    pub threshold_comparison: String,
    pub std_estimator: String,
    pub seed_derivation: String,
}

impl Metadata {
    pub fn for_result(result: &SweepResult) -> Self {
        let config = &result.config;
        let mut warnings: Vec<String> = Vec::new();
        for r in &result.runs {
            for w in &r.warnings {
                let cell = &result.cells[r.cell];
                warnings.push(format!(
                    "{} n={} gamma={} run {}: {w}",
                    cell.variant, cell.n, cell.gamma, r.run
                ));
            }
        }
        Metadata {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            config: config.clone(),
            flags: MetadataFlags {
                profile_mode: config.profile_mode(),
                profile_distribution: "independent uniform(-1, 1) per variable".into(),
                pair_sampling: "payoff: sequential without replacement, renormalised; uniform: distinct unordered pair".into(),
                threshold_comparison: "combine when inconsistency <= gamma".into(),
                std_estimator: "population (divide by runs)".into(),
                seed_derivation: "chacha8 seeded from master_seed, stream = run index".into(),
            },
            warnings,
        }
    }
}

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub aggregate: PathBuf,
    pub trajectories: Option<PathBuf>,
    pub metadata: PathBuf,
}

/// Writes `aggregate.csv`, `metadata.json` and, when any run kept its
/// trajectory, `trajectories.csv` into `dir`.
pub fn emit_results(result: &SweepResult, dir: impl AsRef<Path>) -> Result<OutputFiles> {
    let dir = dir.as_ref();
    if result.records.is_empty() {
        return Err(Error::config("no records to write"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let aggregate = dir.join(AGGREGATE_FILE);
    let mut buf = Vec::new();
    write_aggregate_csv(&mut buf, &result.records)?;
    write_file(&aggregate, &buf)?;

    let trajectories = if result.runs.iter().any(|r| r.trajectory.is_some()) {
        let path = dir.join(TRAJECTORY_FILE);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, result)?;
        write_file(&path, &buf)?;
        Some(path)
    } else {
        None
    };

    let metadata = dir.join(METADATA_FILE);
    let mut json =
        serde_json::to_vec_pretty(&Metadata::for_result(result)).expect("metadata serializes");
    json.push(b'\n');
    write_file(&metadata, &json)?;

    Ok(OutputFiles {
        aggregate,
        trajectories,
        metadata,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Canned sweep configurations for the five figures. Figures 1 and 2 share
/// one sweep, as do 3 and 4.
pub fn figure_config(figure: u8) -> Result<SweepConfig> {
    let base = SweepConfig::default();
    Ok(match figure {
        1 | 2 => SweepConfig {
            init: Init::ThreeValued,
            n_values: vec![5, 10, 50, 100],
            variants: vec![Variant::new(Operator::ThreeValued, Selection::Uniform)],
            ..base
        },
        3 | 4 => SweepConfig {
            init: Init::Boolean,
            n_values: vec![5],
            variants: Variant::all(),
            ..base
        },
        5 => SweepConfig {
            init: Init::Boolean,
            n_values: vec![5],
            variants: Variant::all(),
            gamma_values: vec![0.7],
            trajectory_gammas: vec![0.7],
            ..base
        },
        other => return Err(Error::config(format!("no figure {other}; expected 1-5"))),
    })
}
