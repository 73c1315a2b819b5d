//! Steady-state (mu+1) genetic algorithm on OneMax, together with the
//! diversity Markov chain used to bound its runtime.
//!
//! * [`bitstring`], [`mutation`]: search space and variation operators.
//! * [`ga`]: the algorithm itself with evaluation accounting.
//! * [`chain`], [`absorption`]: the diversity chain and its absorption times.
//! * [`bounds`]: leading constants and optimal mutation rates.
//! * [`experiment`]: Monte Carlo oracles, campaigns and drift estimates.

pub mod absorption;
pub mod bitstring;
pub mod bounds;
pub mod chain;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod mutation;
pub mod rng;

pub use bitstring::{onemax, uniform_crossover, BitVector};
pub use bounds::EvalMode;
pub use chain::{build_chain, ChainSpec, TransitionTable};
pub use error::{Error, Result};
pub use ga::{ga_run, ga_run_mutation_only, GaConfig, RunStats};
pub use mutation::{mutate, FlipProbabilities, MutationSpec};
