//! Consensus formation in a population of agents whose beliefs are Kleene
//! three-valued valuations.
//!
//! * [`kleene`]: truth values, orthopair valuations, sentence evaluation.
//! * [`consensus`]: the consensus operator, the stochastic Boolean
//!   baseline, vagueness and inconsistency.
//! * [`payoff`]: payoff profiles and selection weights.
//! * [`sim`]: populations and the interaction loop.
//! * [`experiment`]: seeded sweeps, aggregation and result files.

pub mod consensus;
pub mod error;
pub mod experiment;
pub mod kleene;
pub mod payoff;
pub mod sim;

pub use consensus::{
    boolean_stochastic_consensus, consensus, gate_and_combine, inconsistency, vagueness,
    InconsistencyThreshold, Operator,
};
pub use error::{Error, Result};
pub use experiment::{
    emit_results, figure_config, run_sweep, AggregateRecord, SweepConfig, SweepResult, Variant,
};
pub use kleene::{Sentence, TruthValue, Valuation};
pub use payoff::{max_payoff, selection_weight, valuation_payoff, PayoffProfile};
pub use sim::{run, Init, Population, RunConfig, RunMetrics, Selection, Simulation};
