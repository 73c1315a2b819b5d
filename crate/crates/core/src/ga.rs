//! The steady-state (mu+1) genetic algorithm on OneMax.
//!
//! Each iteration picks two parents uniformly at random with replacement,
//! applies uniform crossover and then mutation, adds the offspring and
//! removes one of the worst individuals, chosen uniformly among ties (the
//! offspring included). Both evaluation-accounting schemes are tracked in
//! the same run.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitstring::{onemax, uniform_crossover, BitVector};
use crate::bounds::EvalMode;
use crate::error::{Error, Result};
use crate::mutation::{mutate, MutationSpec};
use crate::rng::seeded_rng;

/// Smallest evaluation budget handed out by [`GaConfig::default_budget`].
const MIN_BUDGET: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub n: usize,
    pub mu: usize,
    pub mutation: MutationSpec,
    /// Which counter [`RunStats::evaluations`] reports.
    pub eval_mode: EvalMode,
    /// Budget on the count-all counter, initial population included.
    pub max_evaluations: u64,
    pub seed: u64,
    /// Record the diversity every `k` iterations; `None` disables the trace.
    pub trace_every: Option<u64>,
}

impl GaConfig {
    pub fn new(n: usize, mu: usize, mutation: MutationSpec, seed: u64) -> Self {
        Self {
            n,
            mu,
            mutation,
            eval_mode: EvalMode::AllEvals,
            max_evaluations: Self::default_budget(n),
            seed,
            trace_every: Some(1),
        }
    }

    /// `50 n ln n`, but never below `MIN_BUDGET`.
    pub fn default_budget(n: usize) -> u64 {
        let nf = n as f64;
        ((50.0 * nf * nf.ln()).ceil() as u64).max(MIN_BUDGET)
    }

    pub fn with_eval_mode(mut self, mode: EvalMode) -> Self {
        self.eval_mode = mode;
        self
    }

    pub fn with_budget(mut self, max_evaluations: u64) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    pub fn with_trace(mut self, every: Option<u64>) -> Self {
        self.trace_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu < 3 {
            return Err(Error::InvalidConfig(format!(
                "population size mu = {} must be at least 3",
                self.mu
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "problem size n must be positive".into(),
            ));
        }
        if self.max_evaluations == 0 {
            return Err(Error::InvalidConfig(
                "evaluation budget must be positive".into(),
            ));
        }
        if self.trace_every == Some(0) {
            return Err(Error::InvalidConfig(
                "trace interval must be positive".into(),
            ));
        }
        self.mutation.validate(self.n)
    }
}

/// How offspring are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Uniform crossover of two parents, then mutation.
    Crossover,
    /// Mutation of a single parent.
    MutationOnly,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crossover => "crossover",
            Self::MutationOnly => "mutation-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub genotype: BitVector,
    pub fitness: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Member>,
    target: BitVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub offspring_fitness: usize,
    /// The offspring is identical to one of its parents.
    pub is_clone: bool,
}

impl Population {
    pub fn random<R: Rng + ?Sized>(mu: usize, target: &BitVector, rng: &mut R) -> Self {
        let genotypes = (0..mu)
            .map(|_| BitVector::random(target.len(), rng))
            .collect();
        Self::from_genotypes(genotypes, target).expect("lengths match by construction")
    }

    pub fn from_genotypes(genotypes: Vec<BitVector>, target: &BitVector) -> Result<Self> {
        let members = genotypes
            .into_iter()
            .map(|g| {
                let fitness = onemax(&g, target)?;
                Ok(Member {
                    genotype: g,
                    fitness,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if members.is_empty() {
            return Err(Error::InvalidConfig("population must not be empty".into()));
        }
        Ok(Self {
            members,
            target: target.clone(),
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn target(&self) -> &BitVector {
        &self.target
    }

    pub fn best_fitness(&self) -> usize {
        self.members.iter().map(|m| m.fitness).max().unwrap_or(0)
    }

    pub fn worst_fitness(&self) -> usize {
        self.members.iter().map(|m| m.fitness).min().unwrap_or(0)
    }

    /// One iteration of the algorithm. The mutation operator must already
    /// be validated for the problem size.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        variant: Variant,
        mutation: &MutationSpec,
        rng: &mut R,
    ) -> StepOutcome {
        let mu = self.members.len();
        let (offspring, is_clone) = match variant {
            Variant::Crossover => {
                let x = &self.members[rng.random_range(0..mu)].genotype;
                let y = &self.members[rng.random_range(0..mu)].genotype;
                let child = uniform_crossover(x, y, rng).expect("equal lengths");
                let child = mutate(&child, mutation, rng);
                let is_clone = child == *x || child == *y;
                (child, is_clone)
            }
            Variant::MutationOnly => {
                let x = &self.members[rng.random_range(0..mu)].genotype;
                let child = mutate(x, mutation, rng);
                let is_clone = child == *x;
                (child, is_clone)
            }
        };
        let offspring_fitness = onemax(&offspring, &self.target).expect("equal lengths");
        self.members.push(Member {
            genotype: offspring,
            fitness: offspring_fitness,
        });
        let worst = self.worst_fitness();
        let ties: Vec<usize> = (0..self.members.len())
            .filter(|&i| self.members[i].fitness == worst)
            .collect();
        let victim = ties[rng.random_range(0..ties.len())];
        self.members.swap_remove(victim);
        StepOutcome {
            offspring_fitness,
            is_clone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diversity {
    /// Copies of the majority genotype.
    pub majority_count: usize,
    /// Individuals that are not copies of the majority genotype.
    pub diversity: usize,
}

/// Majority genotype is the most frequent one; among equally frequent
/// genotypes the lexicographically smallest wins.
pub fn diversity_of(pop: &Population) -> Diversity {
    diversity_of_genotypes(pop.members.iter().map(|m| &m.genotype))
}

pub fn diversity_of_genotypes<'a>(genotypes: impl IntoIterator<Item = &'a BitVector>) -> Diversity {
    let mut sorted: Vec<&BitVector> = genotypes.into_iter().collect();
    sorted.sort();
    let total = sorted.len();
    let mut best = 0;
    let mut i = 0;
    while i < total {
        let run = sorted[i..].iter().take_while(|g| **g == sorted[i]).count();
        // strict > keeps the first, lexicographically smallest, maximal run
        if run > best {
            best = run;
        }
        i += run;
    }
    Diversity {
        majority_count: best,
        diversity: total - best,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    /// Best fitness in the population.
    pub level: usize,
    pub diversity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub variant: Variant,
    pub eval_mode: EvalMode,
    pub evaluations_count_all: u64,
    pub evaluations_skip_clones: u64,
    pub iterations: u64,
    /// Level `j` to the first iteration that sampled fitness above `j`;
    /// 0 means the initial population already did.
    pub level_passage: BTreeMap<usize, u64>,
    pub diversity_trace: Vec<TracePoint>,
    pub success: bool,
    pub best_fitness: usize,
}

impl RunStats {
    /// Runtime under the configured accounting scheme.
    pub fn evaluations(&self) -> u64 {
        match self.eval_mode {
            EvalMode::AllEvals => self.evaluations_count_all,
            EvalMode::SkipClones => self.evaluations_skip_clones,
        }
    }
}

/// Runs the algorithm with crossover, seeded from `config.seed`.
pub fn ga_run(config: &GaConfig, target: &BitVector) -> Result<RunStats> {
    run_with_rng(
        config,
        target,
        Variant::Crossover,
        &mut seeded_rng(config.seed),
    )
}

/// Same loop without crossover: each offspring mutates one parent.
pub fn ga_run_mutation_only(config: &GaConfig, target: &BitVector) -> Result<RunStats> {
    run_with_rng(
        config,
        target,
        Variant::MutationOnly,
        &mut seeded_rng(config.seed),
    )
}

/// Runs the algorithm with an externally supplied generator; `config.seed`
/// is ignored.
pub fn run_with_rng<R: Rng + ?Sized>(
    config: &GaConfig,
    target: &BitVector,
    variant: Variant,
    rng: &mut R,
) -> Result<RunStats> {
    config.validate()?;
    if target.len() != config.n {
        return Err(Error::LengthMismatch {
            left: target.len(),
            right: config.n,
        });
    }
    let n = config.n;
    let mut pop = Population::random(config.mu, target, rng);
    let mu = config.mu as u64;
    let mut stats = RunStats {
        variant,
        eval_mode: config.eval_mode,
        evaluations_count_all: mu,
        evaluations_skip_clones: mu,
        iterations: 0,
        level_passage: BTreeMap::new(),
        diversity_trace: Vec::new(),
        success: false,
        best_fitness: pop.best_fitness(),
    };
    for level in 0..stats.best_fitness {
        stats.level_passage.insert(level, 0);
    }
    let trace = |stats: &mut RunStats, pop: &Population| {
        if let Some(every) = config.trace_every {
            if stats.iterations.is_multiple_of(every) {
                stats.diversity_trace.push(TracePoint {
                    iteration: stats.iterations,
                    level: pop.best_fitness(),
                    diversity: diversity_of(pop).diversity,
                });
            }
        }
    };
    trace(&mut stats, &pop);
    stats.success = stats.best_fitness == n;

    while !stats.success && stats.evaluations_count_all < config.max_evaluations {
        let out = pop.step(variant, &config.mutation, rng);
        stats.iterations += 1;
        stats.evaluations_count_all += 1;
        if !out.is_clone {
            stats.evaluations_skip_clones += 1;
        }
        if out.offspring_fitness > stats.best_fitness {
            for level in stats.best_fitness..out.offspring_fitness {
                stats.level_passage.insert(level, stats.iterations);
            }
            stats.best_fitness = out.offspring_fitness;
        }
        trace(&mut stats, &pop);
        stats.success = out.offspring_fitness == n;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn diversity_examples() {
        let (a, b) = (bv("0011"), bv("0101"));
        let all_same: Vec<BitVector> = vec![a.clone(); 5];
        let d = diversity_of_genotypes(&all_same);
        assert_eq!((d.majority_count, d.diversity), (5, 0));

        let mixed = vec![a.clone(), b.clone(), a.clone(), b.clone(), a.clone()];
        assert_eq!(diversity_of_genotypes(&mixed).diversity, 2);

        let tie = vec![b.clone(), a.clone(), b.clone(), a.clone()];
        let d = diversity_of_genotypes(&tie);
        assert_eq!((d.majority_count, d.diversity), (2, 2));
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::new(10, 3, MutationSpec::standard(1.0), 0);
        assert!(ok.validate().is_ok());
        assert!(GaConfig {
            mu: 2,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(GaConfig { n: 0, ..ok.clone() }.validate().is_err());
        assert!(ok.clone().with_budget(0).validate().is_err());
        assert!(ok.clone().with_trace(Some(0)).validate().is_err());
        let bad_mut = GaConfig::new(10, 3, MutationSpec::flips(vec![0.5]), 0);
        assert!(bad_mut.validate().is_err());
        assert_eq!(GaConfig::default_budget(1), MIN_BUDGET);
        assert_eq!(GaConfig::default_budget(1000), 345_388);
    }

    #[test]
    fn target_length_must_match() {
        let cfg = GaConfig::new(10, 3, MutationSpec::standard(1.0), 0);
        assert!(matches!(
            ga_run(&cfg, &BitVector::ones(9)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_bit_problem() {
        for mu in [3, 4, 8] {
            let cfg = GaConfig::new(1, mu, MutationSpec::flips(vec![0.0, 1.0]), 42);
            let s = ga_run(&cfg, &BitVector::ones(1)).unwrap();
            assert!(s.success);
            assert_eq!(s.best_fitness, 1);
            assert!(s.iterations <= 10, "{}", s.iterations);
            let s = ga_run_mutation_only(&cfg, &BitVector::ones(1)).unwrap();
            assert!(s.success && s.iterations <= 10);
        }
    }

    #[test]
    fn step_keeps_size_and_elitism() {
        let mut rng = seeded_rng(6);
        let target = BitVector::ones(60);
        let mut pop = Population::random(7, &target, &mut rng);
        let spec = MutationSpec::standard(2.0);
        let mut best = pop.best_fitness();
        for _ in 0..2000 {
            pop.step(Variant::Crossover, &spec, &mut rng);
            assert_eq!(pop.len(), 7);
            assert!(pop.best_fitness() >= best);
            best = pop.best_fitness();
            for m in pop.members() {
                assert_eq!(m.fitness, onemax(&m.genotype, &target).unwrap());
            }
        }
    }

    #[test]
    fn crossover_of_a_homogeneous_population_only_mutates() {
        let mut rng = seeded_rng(8);
        let target = BitVector::ones(20);
        let x = BitVector::random(20, &mut rng);
        let mut pop = Population::from_genotypes(vec![x.clone(); 5], &target).unwrap();
        let out = pop.step(
            Variant::Crossover,
            &MutationSpec::flips(vec![1.0]),
            &mut rng,
        );
        assert!(out.is_clone);
        assert!(pop.members().iter().all(|m| m.genotype == x));
    }

    #[test]
    fn counters_and_passage_times() {
        let target = BitVector::ones(120);
        let cfg = GaConfig::new(120, 5, MutationSpec::standard(1.0), 7);
        let s = ga_run(&cfg, &target).unwrap();
        assert!(s.success);
        assert!(s.evaluations_skip_clones <= s.evaluations_count_all);
        assert_eq!(s.evaluations_count_all, s.iterations + 5);
        assert_eq!(s.level_passage.len(), 120);
        let times: Vec<u64> = s.level_passage.values().copied().collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(times[119], s.iterations);
        assert_eq!(s.diversity_trace.len() as u64, s.iterations + 1);
        assert!(s.diversity_trace.iter().all(|p| p.diversity < 5));
        let levels: Vec<usize> = s.diversity_trace.iter().map(|p| p.level).collect();
        assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sampled_trace() {
        let target = BitVector::ones(50);
        let cfg = GaConfig::new(50, 4, MutationSpec::standard(1.0), 3).with_trace(Some(10));
        let s = ga_run(&cfg, &target).unwrap();
        assert!(s.diversity_trace.iter().all(|p| p.iteration % 10 == 0));
        assert_eq!(s.diversity_trace.len() as u64, s.iterations / 10 + 1);
        let quiet = ga_run(&cfg.clone().with_trace(None), &target).unwrap();
        assert!(quiet.diversity_trace.is_empty());
        assert_eq!(quiet.evaluations_count_all, s.evaluations_count_all);
    }

    #[test]
    fn budget_exhaustion_is_not_an_error() {
        let target = BitVector::ones(200);
        let cfg = GaConfig::new(200, 5, MutationSpec::standard(1.0), 1).with_budget(50);
        let s = ga_run(&cfg, &target).unwrap();
        assert!(!s.success);
        assert_eq!(s.evaluations_count_all, 50);
    }

    #[test]
    fn eval_mode_selects_the_counter() {
        let target = BitVector::ones(40);
        let cfg = GaConfig::new(40, 5, MutationSpec::standard(1.0), 2)
            .with_eval_mode(EvalMode::SkipClones);
        let s = ga_run(&cfg, &target).unwrap();
        assert_eq!(s.evaluations(), s.evaluations_skip_clones);
    }

    #[test]
    fn arbitrary_targets() {
        let mut rng = seeded_rng(12);
        let target = BitVector::random(64, &mut rng);
        let cfg = GaConfig::new(64, 5, MutationSpec::standard(1.0), 5).with_trace(None);
        let s = ga_run(&cfg, &target).unwrap();
        assert!(s.success);
        assert_eq!(s.best_fitness, 64);
    }

    #[test]
    fn deterministic() {
        let target = BitVector::ones(100);
        let cfg = GaConfig::new(100, 5, MutationSpec::standard(1.0), 99);
        assert_eq!(
            ga_run(&cfg, &target).unwrap(),
            ga_run(&cfg, &target).unwrap()
        );
        assert_eq!(
            ga_run_mutation_only(&cfg, &target).unwrap(),
            ga_run_mutation_only(&cfg, &target).unwrap()
        );
    }
}
