//! Monte Carlo oracles and GA experiment campaigns.
//!
//! Every replicate draws from its own generator derived from the master seed
//! and the replicate index, and results are merged by index, so the output
//! does not depend on the number of worker threads.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::absorption::{analyze, check_monotonicity, AbsorptionResult};
use crate::bitstring::BitVector;
use crate::bounds::{
    leading_constant_general, leading_constant_sbm, optimize_c, per_level_bound, EvalMode,
};
use crate::chain::{build_chain, ChainSpec, TransitionTable};
use crate::error::{Error, Result};
use crate::ga::{diversity_of, run_with_rng, GaConfig, Population, RunStats, Variant};
use crate::mutation::MutationSpec;
use crate::rng::replicate_rng;

/// Per-replicate step cap in chain simulations.
pub const MAX_CHAIN_STEPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replicates)`.
    pub std_error: f64,
    pub replicates: u64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / k).sqrt(),
            replicates: xs.len() as u64,
        }
    }

    /// Exact integer accumulation keeps parallel sums order-independent.
    fn from_integer_sums(sum: u128, sum_sq: u128, replicates: u64) -> Self {
        let k = replicates as f64;
        let mean = sum as f64 / k;
        let var = if replicates > 1 {
            // k * sum_sq - sum^2 is exact in u128 for the step cap in use.
            let kk = replicates as u128;
            (kk * sum_sq - sum * sum) as f64 / (k * (k - 1.0))
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / k).sqrt(),
            replicates,
        }
    }

    /// `|self - value| <= max(rel * |value|, k * std_error)`.
    pub fn agrees_with(&self, value: f64, rel: f64, k: f64) -> bool {
        (self.mean - value).abs() <= (rel * value.abs()).max(k * self.std_error)
    }
}

/// Simulates `M^j` from `start_state` until absorption.
pub fn mc_chain_absorption(
    spec: &ChainSpec,
    start_state: usize,
    replicates: u64,
    seed: u64,
) -> Result<McEstimate> {
    mc_table_absorption(&build_chain(spec)?, start_state, replicates, seed)
}

/// As [`mc_chain_absorption`] for an explicit transition table.
pub fn mc_table_absorption(
    table: &TransitionTable,
    start_state: usize,
    replicates: u64,
    seed: u64,
) -> Result<McEstimate> {
    let m = table.m();
    if start_state >= m {
        return Err(Error::InvalidExperiment(format!(
            "start state {start_state} outside 0..{m}"
        )));
    }
    if replicates == 0 {
        return Err(Error::InvalidExperiment(
            "replicate count must be at least 1".into(),
        ));
    }
    let sampler = ChainSampler::new(table)?;
    let (sum, sum_sq) = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let steps = sampler.absorb(start_state, &mut replicate_rng(seed, r))? as u128;
            Ok((steps, steps * steps))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(McEstimate::from_integer_sums(sum, sum_sq, replicates))
}

/// Jump chain of the table plus geometric holding times, which samples the
/// step count exactly while skipping self-loops.
struct ChainSampler {
    m: usize,
    /// Probability of leaving each transient state.
    leave: Vec<f64>,
    /// `(target, cumulative probability)` over non-self transitions.
    jumps: Vec<Vec<(usize, f64)>>,
    holding: Vec<Option<Geometric>>,
}

impl ChainSampler {
    fn new(table: &TransitionTable) -> Result<Self> {
        let m = table.m();
        let mut leave = Vec::with_capacity(m);
        let mut jumps = Vec::with_capacity(m);
        let mut holding = Vec::with_capacity(m);
        for (i, row) in table.rows().iter().enumerate() {
            let mut acc = 0.0;
            let mut out = Vec::new();
            for (k, &p) in row.iter().enumerate() {
                if k != i && p > 0.0 {
                    acc += p;
                    out.push((k, acc));
                }
            }
            leave.push(acc);
            jumps.push(out);
            holding.push(if acc > 0.0 {
                Some(Geometric::new(acc.min(1.0)).expect("probability in (0, 1]"))
            } else {
                None
            });
        }
        if table.rows().iter().all(|row| row[m] == 0.0) {
            return Err(Error::NonTermination { steps: 0 });
        }
        Ok(Self {
            m,
            leave,
            jumps,
            holding,
        })
    }

    fn absorb<R: Rng + ?Sized>(&self, start: usize, rng: &mut R) -> Result<u64> {
        let mut state = start;
        let mut steps: u64 = 0;
        while state < self.m {
            let Some(hold) = &self.holding[state] else {
                return Err(Error::NonTermination { steps });
            };
            // failures before the first departure, plus the departing step
            steps = steps.saturating_add(hold.sample(rng)).saturating_add(1);
            if steps > MAX_CHAIN_STEPS {
                return Err(Error::NonTermination { steps });
            }
            let u = rng.random::<f64>() * self.leave[state];
            let out = &self.jumps[state];
            state = out
                .iter()
                .find(|(_, cum)| u < *cum)
                .unwrap_or(out.last().expect("non-empty when leave > 0"))
                .0;
        }
        Ok(steps)
    }
}

/// Mutation operator of a campaign cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    /// Standard bit mutation at rate `c/n`.
    Rate(f64),
    /// Standard bit mutation at the all-evaluations optimal rate for `mu`.
    OptimalRate,
    /// Explicit flip-count distribution.
    Flips(Vec<f64>),
}

impl OperatorChoice {
    pub fn resolve(&self, mu: usize) -> Result<MutationSpec> {
        Ok(match self {
            Self::Rate(c) => MutationSpec::standard(*c),
            Self::OptimalRate => MutationSpec::standard(optimize_c(mu, EvalMode::AllEvals)?.c_star),
            Self::Flips(p) => MutationSpec::flips(p.clone()),
        })
    }
}

/// `(all-evals, skip-clones)` constants bounding the operator. Standard bit
/// mutation uses the closed large-`n` form.
pub fn operator_constants(mu: usize, spec: &MutationSpec, n: usize) -> Result<(f64, f64)> {
    match spec {
        MutationSpec::StandardBitMutation { c } => Ok((
            leading_constant_sbm(mu, *c, EvalMode::AllEvals)?,
            leading_constant_sbm(mu, *c, EvalMode::SkipClones)?,
        )),
        MutationSpec::ExplicitFlipDistribution { .. } => {
            let probs = spec.flip_probabilities(n);
            Ok((
                leading_constant_general(mu, probs, EvalMode::AllEvals)?,
                leading_constant_general(mu, probs, EvalMode::SkipClones)?,
            ))
        }
    }
}

fn rate_of(spec: &MutationSpec) -> Option<f64> {
    match spec {
        MutationSpec::StandardBitMutation { c } => Some(*c),
        MutationSpec::ExplicitFlipDistribution { .. } => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ns: Vec<usize>,
    pub mus: Vec<usize>,
    pub operators: Vec<OperatorChoice>,
    pub replicates: u64,
    pub seed: u64,
    pub mutation_only: bool,
    /// Count-all budget per run; `None` uses [`GaConfig::default_budget`].
    pub max_evaluations: Option<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidExperiment(
                "replicate count must be at least 1".into(),
            ));
        }
        if self.ns.is_empty() || self.mus.is_empty() || self.operators.is_empty() {
            return Err(Error::InvalidExperiment("empty parameter grid".into()));
        }
        Ok(())
    }

    fn ga_config(&self, n: usize, mu: usize, mutation: MutationSpec) -> GaConfig {
        let budget = self
            .max_evaluations
            .unwrap_or_else(|| GaConfig::default_budget(n));
        GaConfig::new(n, mu, mutation, self.seed)
            .with_budget(budget)
            .with_trace(None)
    }
}

/// Runs `replicates` independent runs; replicate `r` uses the same stream for
/// every variant and cell, so paired comparisons share randomness sources.
pub fn replicate_runs(
    config: &GaConfig,
    variant: Variant,
    replicates: u64,
    seed: u64,
) -> Result<Vec<RunStats>> {
    config.validate()?;
    let target = BitVector::ones(config.n);
    (0..replicates)
        .into_par_iter()
        .map(|r| run_with_rng(config, &target, variant, &mut replicate_rng(seed, r)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignCell {
    pub n: usize,
    pub mu: usize,
    pub mutation: String,
    /// Rate of standard bit mutation, if that is the operator.
    pub c: Option<f64>,
    pub variant: Variant,
    pub replicates: u64,
    /// Runs that exhausted the budget; excluded from the statistics below.
    pub budget_exhausted: u64,
    pub count_all: Option<McEstimate>,
    pub skip_clones: Option<McEstimate>,
    /// Mean evaluations over `n ln n`.
    pub normalized_count_all: Option<f64>,
    pub normalized_skip_clones: Option<f64>,
    pub gamma_all_evals: f64,
    pub gamma_skip_clones: f64,
    /// Finite-`n` data are never a verification of the asymptotic constants.
    pub asymptotic: bool,
}

pub fn ga_campaign(config: &ExperimentConfig) -> Result<Vec<CampaignCell>> {
    config.validate()?;
    let mut variants = vec![Variant::Crossover];
    if config.mutation_only {
        variants.push(Variant::MutationOnly);
    }
    let mut cells = Vec::new();
    for &n in &config.ns {
        for &mu in &config.mus {
            for op in &config.operators {
                let ga = config.ga_config(n, mu, op.resolve(mu)?);
                for &variant in &variants {
                    let runs = replicate_runs(&ga, variant, config.replicates, config.seed)?;
                    cells.push(summarize(&ga, variant, &runs)?);
                }
            }
        }
    }
    Ok(cells)
}

fn summarize(ga: &GaConfig, variant: Variant, runs: &[RunStats]) -> Result<CampaignCell> {
    let (n, mu) = (ga.n, ga.mu);
    let (gamma_all_evals, gamma_skip_clones) = operator_constants(mu, &ga.mutation, n)?;
    let done: Vec<&RunStats> = runs.iter().filter(|r| r.success).collect();
    let est = |f: fn(&RunStats) -> u64| {
        (!done.is_empty()).then(|| {
            McEstimate::from_samples(&done.iter().map(|r| f(r) as f64).collect::<Vec<_>>())
        })
    };
    let count_all = est(|r| r.evaluations_count_all);
    let skip_clones = est(|r| r.evaluations_skip_clones);
    let scale = n as f64 * (n as f64).ln();
    let normalize = |e: Option<McEstimate>| e.filter(|_| n >= 2).map(|e| e.mean / scale);
    Ok(CampaignCell {
        n,
        mu,
        mutation: ga.mutation.label(),
        c: rate_of(&ga.mutation),
        variant,
        replicates: runs.len() as u64,
        budget_exhausted: (runs.len() - done.len()) as u64,
        normalized_count_all: normalize(count_all),
        normalized_skip_clones: normalize(skip_clones),
        count_all,
        skip_clones,
        gamma_all_evals,
        gamma_skip_clones,
        asymptotic: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub n: usize,
    pub mu: usize,
    pub mutation: String,
    pub pairs: u64,
    pub crossover_mean: f64,
    pub mutation_only_mean: f64,
    /// Pairs where crossover needed strictly fewer evaluations.
    pub crossover_wins: u64,
    pub mutation_only_wins: u64,
    pub ties: u64,
    /// One-sided sign test for "crossover is faster", ties dropped.
    pub p_value: f64,
    pub budget_exhausted: u64,
    /// Skip-clones never exceeded count-all in any of the runs.
    pub counters_consistent: bool,
}

/// Crossover against mutation-only at equal seeds, compared on count-all
/// evaluations. Budget-exhausted runs enter with their budget as a censored
/// value.
pub fn paired_comparison(config: &GaConfig, pairs: u64, seed: u64) -> Result<PairedComparison> {
    if pairs == 0 {
        return Err(Error::InvalidExperiment("need at least one pair".into()));
    }
    let with = replicate_runs(config, Variant::Crossover, pairs, seed)?;
    let without = replicate_runs(config, Variant::MutationOnly, pairs, seed)?;
    let (mut wins, mut losses, mut ties) = (0u64, 0u64, 0u64);
    for (a, b) in with.iter().zip(&without) {
        match a.evaluations_count_all.cmp(&b.evaluations_count_all) {
            std::cmp::Ordering::Less => wins += 1,
            std::cmp::Ordering::Greater => losses += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    let mean = |runs: &[RunStats]| {
        runs.iter()
            .map(|r| r.evaluations_count_all as f64)
            .sum::<f64>()
            / runs.len() as f64
    };
    let all = with.iter().chain(&without);
    Ok(PairedComparison {
        n: config.n,
        mu: config.mu,
        mutation: config.mutation.label(),
        pairs,
        crossover_mean: mean(&with),
        mutation_only_mean: mean(&without),
        crossover_wins: wins,
        mutation_only_wins: losses,
        ties,
        p_value: sign_test_p(wins, losses),
        budget_exhausted: all.clone().filter(|r| !r.success).count() as u64,
        counters_consistent: all
            .into_iter()
            .all(|r| r.evaluations_skip_clones <= r.evaluations_count_all),
    })
}

/// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_p(wins: u64, losses: u64) -> f64 {
    let trials = wins + losses;
    if trials == 0 || wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, trials).expect("valid parameters");
    b.sf(wins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub n: usize,
    pub mu: usize,
    pub j: usize,
    pub mutation: MutationSpec,
    pub samples_per_state: u64,
    /// Fewer usable samples than this marks the state absent.
    pub min_samples: u64,
    pub seed: u64,
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_state == 0 {
            return Err(Error::InvalidExperiment(
                "need at least one sample per state".into(),
            ));
        }
        if self.j >= self.n {
            return Err(Error::LevelOutOfRange {
                j: self.j,
                n: self.n,
            });
        }
        GaConfig::new(self.n, self.mu, self.mutation.clone(), self.seed).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftCell {
    pub j: usize,
    pub state: usize,
    pub potential: f64,
    pub samples: u64,
    /// `None` when the state could not be sampled often enough.
    pub drift: Option<McEstimate>,
}

/// Potential of a level-`j` population: zero once someone exceeds level `j`,
/// otherwise `E[T_D]` with diversities from `m-1` upwards sharing the value
/// of state `m-1`.
pub fn potential(pop: &Population, j: usize, expected_times: &[f64]) -> f64 {
    if pop.best_fitness() > j {
        return 0.0;
    }
    let d = diversity_of(pop).diversity;
    expected_times[d.min(expected_times.len() - 1)]
}

/// `mu - i` copies of a random level-`j` string and `i` copies of the same
/// string with one 1-bit and one 0-bit exchanged.
fn population_in_state<R: Rng + ?Sized>(
    n: usize,
    mu: usize,
    j: usize,
    state: usize,
    rng: &mut R,
) -> Option<Population> {
    if state > 0 && (j == 0 || j == n || 2 * state >= mu) {
        return None;
    }
    let x = BitVector::random_with_ones(n, j, rng);
    let mut y = x.clone();
    if state > 0 {
        let ones: Vec<usize> = (0..n).filter(|&i| x.get(i)).collect();
        let zeros: Vec<usize> = (0..n).filter(|&i| !x.get(i)).collect();
        y.flip(ones[rng.random_range(0..ones.len())]);
        y.flip(zeros[rng.random_range(0..zeros.len())]);
    }
    let mut genotypes = vec![x; mu - state];
    genotypes.extend(std::iter::repeat_n(y, state));
    Population::from_genotypes(genotypes, &BitVector::ones(n)).ok()
}

/// Expected one-step drop of the potential from each diversity state, with
/// the level frozen by restarting every sample from a fresh population.
pub fn estimate_drift(config: &DriftConfig) -> Result<Vec<DriftCell>> {
    config.validate()?;
    let (n, mu, j) = (config.n, config.mu, config.j);
    let spec = ChainSpec::new(mu, j, n, config.mutation.flip_probabilities(n))?;
    let times = analyze(&build_chain(&spec)?)?.expected_times;
    let m = times.len();
    let mut cells = Vec::with_capacity(m);
    for state in 0..m {
        let drops: Vec<Option<f64>> = (0..config.samples_per_state)
            .into_par_iter()
            .map(|k| {
                let mut rng = replicate_rng(config.seed, ((state as u64) << 40) | k);
                let mut pop = population_in_state(n, mu, j, state, &mut rng)?;
                let before = potential(&pop, j, &times);
                pop.step(Variant::Crossover, &config.mutation, &mut rng);
                Some(before - potential(&pop, j, &times))
            })
            .collect();
        let usable: Vec<f64> = drops.into_iter().flatten().collect();
        let samples = usable.len() as u64;
        cells.push(DriftCell {
            j,
            state,
            potential: times[state],
            samples,
            drift: (samples >= config.min_samples.max(1))
                .then(|| McEstimate::from_samples(&usable)),
        });
    }
    Ok(cells)
}

/// One cell of the solver cross-validation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub mu: usize,
    pub c: f64,
    pub j: usize,
    pub n: usize,
    pub n11_relative_gap: f64,
    /// `||(I - Q) t - 1||_inf / ||t||_inf`.
    pub relative_residual: f64,
    pub sdd_ok: bool,
    pub signs_ok: bool,
    pub monotone: bool,
    pub expected_t0: f64,
    pub bound_total: f64,
}

impl SweepCell {
    pub fn bound_holds(&self) -> bool {
        self.bound_total >= self.expected_t0
    }
}

/// Levels `1`, `n/2` and `n-1` for every `(mu, c)` pair.
pub fn solver_sweep(mus: &[usize], rates: &[f64], n: usize) -> Result<Vec<SweepCell>> {
    if n < 2 {
        return Err(Error::InvalidExperiment("sweep needs n >= 2".into()));
    }
    let mut out = Vec::new();
    for &mu in mus {
        for &c in rates {
            for j in [1, n / 2, n - 1] {
                let spec = ChainSpec::with_rate(mu, j, n, c)?;
                let res: AbsorptionResult = analyze(&build_chain(&spec)?)?;
                let tmax = res
                    .expected_times
                    .iter()
                    .fold(0.0f64, |a, &b| a.max(b.abs()));
                out.push(SweepCell {
                    mu,
                    c,
                    j,
                    n,
                    n11_relative_gap: res.diagnostics.n11_relative_gap,
                    relative_residual: res.diagnostics.residual_norm / tmax,
                    sdd_ok: res.diagnostics.sdd_ok,
                    signs_ok: res.diagnostics.signs_ok,
                    monotone: check_monotonicity(&res),
                    expected_t0: res.expected_times[0],
                    bound_total: per_level_bound(&spec)?.total(),
                });
            }
        }
    }
    Ok(out)
}
