//! The agent population and the pairwise interaction loop.
//!
//! A run draws everything from one ChaCha8 stream selected by
//! `(seed, stream)`, in a fixed order: the payoff profile (unless one is
//! supplied), then the initial beliefs agent by agent and variable by
//! variable, then per iteration the pair followed by any coin flips the
//! Boolean operator needs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{gate_and_combine, vagueness, InconsistencyThreshold, Operator};
use crate::error::{Error, Result};
use crate::kleene::{TruthValue, Valuation};
use crate::payoff::{
    max_payoff, sample_profile, selection_weight, valuation_payoff, PayoffProfile,
};

pub type SimRng = ChaCha8Rng;

/// The random stream for one run.
pub fn run_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How interacting pairs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    #[serde(alias = "uniform-random")]
    Uniform,
    #[serde(alias = "payoff-proportionate")]
    Payoff,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Selection::Uniform => "uniform",
            Selection::Payoff => "payoff",
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-random" | "random" => Ok(Selection::Uniform),
            "payoff" | "payoff-proportionate" => Ok(Selection::Payoff),
            _ => Err(Error::Parse(format!("unknown selection policy {s:?}"))),
        }
    }
}

/// How initial beliefs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Each variable true, borderline or false with probability 1/3.
    #[serde(alias = "three-valued-random")]
    ThreeValued,
    /// Each variable true or false with probability 1/2.
    #[serde(alias = "boolean-random")]
    Boolean,
}

impl Init {
    pub fn name(self) -> &'static str {
        match self {
            Init::ThreeValued => "three-valued",
            Init::Boolean => "boolean",
        }
    }
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three-valued" | "three-valued-random" => Ok(Init::ThreeValued),
            "boolean" | "boolean-random" => Ok(Init::Boolean),
            _ => Err(Error::Parse(format!("unknown initialisation {s:?}"))),
        }
    }
}

/// A fixed-size set of agents sharing one variable count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    agents: Vec<Valuation>,
    n: usize,
}

impl Population {
    pub fn new(agents: Vec<Valuation>) -> Result<Self> {
        let n = agents
            .first()
            .ok_or_else(|| Error::config("population is empty"))?
            .len();
        if let Some(bad) = agents.iter().find(|a| a.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Population { agents, n })
    }

    pub fn agents(&self) -> &[Valuation] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Variable count shared by every agent.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean_vagueness(&self) -> f64 {
        self.agents.iter().map(vagueness).sum::<f64>() / self.len() as f64
    }

    pub fn mean_payoff(&self, profile: &PayoffProfile) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.agents {
            total += valuation_payoff(a, profile)?;
        }
        Ok(total / self.len() as f64)
    }

    pub fn distinct_valuations(&self) -> usize {
        distinct_valuations(self)
    }
}

/// Number of different orthopairs held in `pop`.
pub fn distinct_valuations(pop: &Population) -> usize {
    let mut seen: Vec<&Valuation> = pop.agents.iter().collect();
    seen.sort_by(|a, b| {
        a.pos_words()
            .cmp(b.pos_words())
            .then_with(|| a.neg_words().cmp(b.neg_words()))
    });
    seen.dedup();
    seen.len()
}

fn check_sizes(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::config(format!(
            "population size and variable count must be positive (got {m}, {n})"
        )));
    }
    Ok(())
}

pub fn init_three_valued<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Population> {
    check_sizes(m, n)?;
    let agents = (0..m)
        .map(|_| {
            let cells: Vec<TruthValue> = (0..n)
                .map(|_| TruthValue::ALL[rng.random_range(0..3)])
                .collect();
            Valuation::from_truth_values(&cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(agents)
}

pub fn init_boolean<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Population> {
    check_sizes(m, n)?;
    let agents = (0..m)
        .map(|_| {
            let cells: Vec<TruthValue> = (0..n).map(|_| rng.random::<bool>().into()).collect();
            Valuation::from_truth_values(&cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(agents)
}

pub fn initialise<R: Rng + ?Sized>(
    init: Init,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<Population> {
    match init {
        Init::ThreeValued => init_three_valued(m, n, rng),
        Init::Boolean => init_boolean(m, n, rng),
    }
}

fn too_small(m: usize) -> Error {
    Error::config(format!("pair selection needs at least 2 agents, got {m}"))
}

/// Two distinct agents, uniform over unordered pairs.
pub fn select_pair_uniform<R: Rng + ?Sized>(
    pop: &Population,
    rng: &mut R,
) -> Result<(usize, usize)> {
    uniform_pair(pop.len(), rng)
}

fn uniform_pair<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<(usize, usize)> {
    if m < 2 {
        return Err(too_small(m));
    }
    let first = rng.random_range(0..m);
    Ok((first, uniform_other(m, first, rng)))
}

fn uniform_other<R: Rng + ?Sized>(m: usize, first: usize, rng: &mut R) -> usize {
    let j = rng.random_range(0..m - 1);
    if j >= first {
        j + 1
    } else {
        j
    }
}

/// Two distinct agents chosen in proportion to their selection weights.
pub fn select_pair_payoff<R: Rng + ?Sized>(
    pop: &Population,
    profile: &PayoffProfile,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let weights = pop
        .agents()
        .iter()
        .map(|a| selection_weight(a, profile))
        .collect::<Result<Vec<_>>>()?;
    select_pair_weighted(&weights, rng)
}

/// Sequential sampling without replacement: the first index with
/// probability `w_i / Σw`, the second from the remaining agents with the
/// weights renormalised. Falls back to uniform choice whenever the
/// remaining mass is zero.
pub fn select_pair_weighted<R: Rng + ?Sized>(
    weights: &[f64],
    rng: &mut R,
) -> Result<(usize, usize)> {
    let m = weights.len();
    if m < 2 {
        return Err(too_small(m));
    }
    let total = positive_mass(weights, None);
    if total <= 0.0 {
        return uniform_pair(m, rng);
    }
    let first = roulette(weights, total, None, rng);
    let rest = positive_mass(weights, Some(first));
    let second = if rest <= 0.0 {
        uniform_other(m, first, rng)
    } else {
        roulette(weights, rest, Some(first), rng)
    };
    Ok((first, second))
}

fn positive_mass(weights: &[f64], skip: Option<usize>) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|&(i, &w)| Some(i) != skip && w > 0.0)
        .map(|(_, w)| w)
        .sum()
}

// Accumulates in the same order as positive_mass, so the running sum ends
// at exactly `total`.
fn roulette<R: Rng + ?Sized>(
    weights: &[f64],
    total: f64,
    skip: Option<usize>,
    rng: &mut R,
) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if Some(i) == skip || w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return i;
        }
    }
    last.expect("positive mass implies a positive weight")
}

pub const DEFAULT_RECORD_EVERY: u64 = 100;

fn default_record_every() -> u64 {
    DEFAULT_RECORD_EVERY
}

/// Full parameterisation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub population_size: usize,
    pub n: usize,
    pub gamma: f64,
    pub operator: Operator,
    pub selection: Selection,
    pub init: Init,
    pub iterations: u64,
    pub seed: u64,
    /// Stream index within `seed`; sweeps use the run index.
    #[serde(default)]
    pub stream: u64,
    /// When absent a profile is sampled from the run's stream.
    #[serde(default)]
    pub payoff_profile: Option<PayoffProfile>,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Stop once every agent holds the same valuation. The remaining
    /// trajectory samples are filled with the final state, so trajectory
    /// and endpoint are identical to a full run.
    #[serde(default)]
    pub early_stop: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            population_size: 100,
            n: 5,
            gamma: 0.5,
            operator: Operator::ThreeValued,
            selection: Selection::Uniform,
            init: Init::ThreeValued,
            iterations: 50_000,
            seed: 0,
            stream: 0,
            payoff_profile: None,
            record_every: DEFAULT_RECORD_EVERY,
            early_stop: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(too_small(self.population_size));
        }
        if self.n == 0 {
            return Err(Error::config("variable count must be positive"));
        }
        InconsistencyThreshold::new(self.gamma)?;
        if self.record_every == 0 {
            return Err(Error::config("record_every must be positive"));
        }
        if self.operator == Operator::BooleanStochastic && self.init != Init::Boolean {
            return Err(Error::config(
                "the boolean operator requires boolean initialisation",
            ));
        }
        if let Some(p) = &self.payoff_profile {
            if p.len() != self.n {
                return Err(Error::config(format!(
                    "payoff profile has {} weights but n = {}",
                    p.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Population statistics after `iteration` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: u64,
    pub distinct: usize,
    pub vagueness: f64,
    pub payoff_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub vagueness: f64,
    pub distinct: usize,
    pub payoff_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub trajectory: Vec<TrajectoryPoint>,
    pub endpoint: Endpoint,
    /// Iterations in which the pair actually combined.
    pub combinations: u64,
    pub profile: PayoffProfile,
    pub warnings: Vec<String>,
}

impl RunMetrics {
    /// First sampled iteration at which at most `k` distinct valuations
    /// remain. Resolution is the run's `record_every`.
    pub fn first_iteration_with_distinct_at_most(&self, k: usize) -> Option<u64> {
        self.trajectory
            .iter()
            .find(|p| p.distinct <= k)
            .map(|p| p.iteration)
    }
}

/// What a single iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub pair: (usize, usize),
    pub combined: bool,
}

/// A run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    gamma: InconsistencyThreshold,
    rng: SimRng,
    population: Population,
    profile: PayoffProfile,
    max_payoff: f64,
    weights: Vec<f64>,
    counts: HashMap<Valuation, u32>,
    iteration: u64,
    combinations: u64,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = run_rng(config.seed, config.stream);
        let profile = match &config.payoff_profile {
            Some(p) => p.clone(),
            None => sample_profile(config.n, &mut rng)?,
        };
        let population = initialise(config.init, config.population_size, config.n, &mut rng)?;
        Self::assemble(config, rng, population, profile)
    }

    /// Starts from an explicit population instead of drawing one. The
    /// stream is used for the interaction loop only.
    pub fn with_population(
        config: RunConfig,
        population: Population,
        profile: PayoffProfile,
    ) -> Result<Self> {
        let config = RunConfig {
            population_size: population.len(),
            n: population.n(),
            payoff_profile: Some(profile.clone()),
            ..config
        };
        config.validate()?;
        if config.operator == Operator::BooleanStochastic
            && population.agents().iter().any(|a| !a.is_crisp())
        {
            return Err(Error::config(
                "the boolean operator requires a population without borderline values",
            ));
        }
        let rng = run_rng(config.seed, config.stream);
        Self::assemble(config, rng, population, profile)
    }

    fn assemble(
        config: RunConfig,
        rng: SimRng,
        population: Population,
        profile: PayoffProfile,
    ) -> Result<Self> {
        let gamma = InconsistencyThreshold::new(config.gamma)?;
        let weights = match config.selection {
            Selection::Payoff => population
                .agents()
                .iter()
                .map(|a| selection_weight(a, &profile))
                .collect::<Result<Vec<_>>>()?,
            Selection::Uniform => Vec::new(),
        };
        let mut counts = HashMap::new();
        for a in population.agents() {
            *counts.entry(a.clone()).or_insert(0) += 1;
        }
        Ok(Simulation {
            gamma,
            rng,
            max_payoff: max_payoff(&profile),
            profile,
            population,
            weights,
            counts,
            iteration: 0,
            combinations: 0,
            config,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn profile(&self) -> &PayoffProfile {
        &self.profile
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Distinct valuations, maintained incrementally.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn payoff_pct(&self) -> Result<f64> {
        if self.max_payoff == 0.0 {
            return Ok(0.0);
        }
        Ok(100.0 * self.population.mean_payoff(&self.profile)? / self.max_payoff)
    }

    pub fn snapshot(&self) -> Result<TrajectoryPoint> {
        Ok(TrajectoryPoint {
            iteration: self.iteration,
            distinct: self.distinct(),
            vagueness: self.population.mean_vagueness(),
            payoff_pct: self.payoff_pct()?,
        })
    }

    /// Performs one iteration: select a pair, gate, and on success give both
    /// agents the combined valuation.
    pub fn step(&mut self) -> Result<Step> {
        let (i, j) = match self.config.selection {
            Selection::Uniform => uniform_pair(self.population.len(), &mut self.rng)?,
            Selection::Payoff => select_pair_weighted(&self.weights, &mut self.rng)?,
        };
        self.iteration += 1;
        let agents = &self.population.agents;
        let combined = gate_and_combine(
            &agents[i],
            &agents[j],
            self.gamma,
            self.config.operator,
            &mut self.rng,
        )?;
        let Some(merged) = combined else {
            return Ok(Step {
                pair: (i, j),
                combined: false,
            });
        };
        self.combinations += 1;
        self.replace(i, merged.clone())?;
        self.replace(j, merged)?;
        Ok(Step {
            pair: (i, j),
            combined: true,
        })
    }

    fn replace(&mut self, slot: usize, v: Valuation) -> Result<()> {
        if self.population.agents[slot] == v {
            return Ok(());
        }
        if self.config.selection == Selection::Payoff {
            self.weights[slot] = selection_weight(&v, &self.profile)?;
        }
        let old = std::mem::replace(&mut self.population.agents[slot], v.clone());
        if let Some(c) = self.counts.get_mut(&old) {
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&old);
            }
        }
        *self.counts.entry(v).or_insert(0) += 1;
        Ok(())
    }

    /// Runs the remaining iterations and collects the metrics.
    pub fn finish(mut self) -> Result<RunMetrics> {
        let total = self.config.iterations;
        let stride = self.config.record_every;
        let mut trajectory = vec![self.snapshot()?];
        while self.iteration < total {
            if self.config.early_stop && self.distinct() == 1 {
                // absorbing: nothing changes from here on
                let last = self.snapshot()?;
                let mut t = (self.iteration / stride + 1) * stride;
                while t < total {
                    trajectory.push(TrajectoryPoint {
                        iteration: t,
                        ..last
                    });
                    t += stride;
                }
                self.iteration = total;
                trajectory.push(TrajectoryPoint {
                    iteration: total,
                    ..last
                });
                break;
            }
            self.step()?;
            if self.iteration.is_multiple_of(stride) || self.iteration == total {
                trajectory.push(self.snapshot()?);
            }
        }
        let last = *trajectory
            .last()
            .expect("initial sample is always recorded");
        let mut warnings = Vec::new();
        if self.max_payoff == 0.0 {
            let msg = "payoff profile is identically zero; payoff percentage reported as 0";
            log::warn!("{msg}");
            warnings.push(msg.to_string());
        }
        Ok(RunMetrics {
            trajectory,
            endpoint: Endpoint {
                vagueness: last.vagueness,
                distinct: last.distinct,
                payoff_pct: last.payoff_pct,
            },
            combinations: self.combinations,
            profile: self.profile,
            warnings,
        })
    }
}

/// Executes a full run.
pub fn run(config: &RunConfig) -> Result<RunMetrics> {
    Simulation::new(config.clone())?.finish()
}
