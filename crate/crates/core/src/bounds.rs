//! Closed-form runtime bounds assembled from the chain analysis.
//!
//! Every bound has the shape `gamma * n ln n`; the functions here return the
//! leading constant `gamma`. All of them depend on the population size only
//! through `xi_2`, the probability that freshly created diversity is lost
//! before it is exploited, and through `xi*(mu) = (1 - xi_2) mu / (mu + 1)`.

use serde::{Deserialize, Serialize};

use crate::absorption::{assemble_system, xi_recursion};
use crate::chain::{build_chain, ChainSpec};
use crate::error::{Error, Result};
use crate::mutation::FlipProbabilities;

/// Which evaluations count towards the runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Every offspring is evaluated.
    AllEvals,
    /// Offspring identical to a parent are not evaluated.
    SkipClones,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AllEvals => "all-evals",
            Self::SkipClones => "skip-clones",
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_mu(mu: usize) -> Result<()> {
    if mu < 3 {
        return Err(Error::InvalidChain(format!(
            "population size mu = {mu} must be at least 3"
        )));
    }
    Ok(())
}

/// `xi_2` for population size `mu`. Only the level-independent rows of the
/// chain enter, and they all scale with `p0`, so any placeholder level and
/// `p0` give the same value.
pub fn xi2_of_mu(mu: usize) -> Result<f64> {
    xi2_with_p0(mu, 0.5)
}

pub(crate) fn xi2_with_p0(mu: usize, p0: f64) -> Result<f64> {
    check_mu(mu)?;
    let spec = ChainSpec {
        mu,
        j: 0,
        n: 1,
        p0,
        p1: 1.0 - p0,
        p2: 0.0,
    };
    let rec = xi_recursion(&assemble_system(&build_chain(&spec)?))?;
    Ok(rec
        .xi2()
        .expect("mu >= 3 gives at least two transient states"))
}

/// `xi*(mu) = (1 - xi_2) mu / (mu + 1)`.
pub fn xi_star(mu: usize) -> Result<f64> {
    let xi2 = xi2_of_mu(mu)?;
    Ok(xi_star_from(mu, xi2))
}

fn xi_star_from(mu: usize, xi2: f64) -> f64 {
    let muf = mu as f64;
    (1.0 - xi2) * muf / (muf + 1.0)
}

/// Leading constant for an unbiased operator with flip probabilities
/// `p0, p1, p2`: `1 / (p1 + 2 p2 xi*)`, times `1 - p0` when clones are not
/// evaluated.
pub fn leading_constant_general(
    mu: usize,
    probs: FlipProbabilities,
    mode: EvalMode,
) -> Result<f64> {
    let xs = xi_star(mu)?;
    general_from_xi_star(xs, probs, mode)
}

fn general_from_xi_star(xs: f64, probs: FlipProbabilities, mode: EvalMode) -> Result<f64> {
    let FlipProbabilities { p0, p1, p2 } = probs;
    if p1 == 0.0 && p2 == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let all = 1.0 / (p1 + p2 * 2.0 * xs);
    Ok(match mode {
        EvalMode::AllEvals => all,
        EvalMode::SkipClones => (1.0 - p0) * all,
    })
}

/// Limit of the skip-clones constant as `p2 -> 1`:
/// `(mu + 1) / (2 mu (1 - xi_2))`.
pub fn two_flip_limit_constant(mu: usize) -> Result<f64> {
    let xi2 = xi2_of_mu(mu)?;
    let muf = mu as f64;
    Ok((muf + 1.0) / (2.0 * muf * (1.0 - xi2)))
}

/// Leading constant for standard bit mutation at rate `c/n`:
/// `e^c / (c + c^2 xi*)`, times `1 - e^-c` when clones are not evaluated.
pub fn leading_constant_sbm(mu: usize, c: f64, mode: EvalMode) -> Result<f64> {
    let xs = xi_star(mu)?;
    Ok(sbm_from_xi_star(xs, c, mode))
}

fn sbm_from_xi_star(xs: f64, c: f64, mode: EvalMode) -> f64 {
    let all = c.exp() / (c + c * c * xs);
    match mode {
        EvalMode::AllEvals => all,
        EvalMode::SkipClones => -(-c).exp_m1() * all,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalRate {
    pub c_star: f64,
    pub gamma_star: f64,
}

pub const RATE_MIN: f64 = 1e-3;
pub const RATE_MAX: f64 = 8.0;
const RATE_GRID_STEP: f64 = 0.01;
const RATE_TOLERANCE: f64 = 1e-6;

/// Minimises the standard-bit-mutation constant over `c` in
/// `[RATE_MIN, RATE_MAX]`: a coarse grid locates the best cell, then
/// golden-section search refines inside the neighbouring cells.
pub fn optimize_c(mu: usize, mode: EvalMode) -> Result<OptimalRate> {
    let xs = xi_star(mu)?;
    Ok(minimize_on_rates(|c| sbm_from_xi_star(xs, c, mode)))
}

fn minimize_on_rates(f: impl Fn(f64) -> f64) -> OptimalRate {
    let steps = ((RATE_MAX - RATE_MIN) / RATE_GRID_STEP).round() as usize;
    let grid = |k: usize| (RATE_MIN + k as f64 * RATE_GRID_STEP).min(RATE_MAX);
    let best = (0..=steps)
        .min_by(|&a, &b| f(grid(a)).total_cmp(&f(grid(b))))
        .expect("non-empty grid");
    let lo = grid(best.saturating_sub(1));
    let hi = grid((best + 1).min(steps));
    let c = golden_section(&f, lo, hi, RATE_TOLERANCE);
    // the refined point can only improve on the grid point
    let (c_star, gamma_star) = if f(c) <= f(grid(best)) {
        (c, f(c))
    } else {
        (grid(best), f(grid(best)))
    };
    OptimalRate { c_star, gamma_star }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    (a + b) / 2.0
}

/// Bound on the expected absorption time from state 0 at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBound {
    /// `n/(n-j) / (p1 + 2 mu p2/(mu+1) (j/n) (1 - xi_2))`.
    pub main_term: f64,
    /// `sum_{k=1}^{m-1} 1 / p(k, m)`, the lower-order remainder.
    pub tail: f64,
}

impl LevelBound {
    pub fn total(&self) -> f64 {
        self.main_term + self.tail
    }
}

pub fn per_level_bound(spec: &ChainSpec) -> Result<LevelBound> {
    if spec.j >= spec.n {
        return Err(Error::LevelOutOfRange {
            j: spec.j,
            n: spec.n,
        });
    }
    let table = build_chain(spec)?;
    let xi2 = xi_recursion(&assemble_system(&table))?
        .xi2()
        .expect("mu >= 3 gives at least two transient states");
    let tail = (1..table.m()).map(|k| 1.0 / table.exit(k)).sum();
    Ok(LevelBound {
        main_term: level_main_term(spec, xi2),
        tail,
    })
}

fn level_main_term(spec: &ChainSpec, xi2: f64) -> f64 {
    let (muf, jf, nf) = (spec.mu as f64, spec.j as f64, spec.n as f64);
    nf / (nf - jf) / (spec.p1 + 2.0 * muf * spec.p2 / (muf + 1.0) * (jf / nf) * (1.0 - xi2))
}

/// `sum_{j=0}^{n-1}` of the per-level main terms, divided by `n ln n`.
/// Approaches the all-evaluations leading constant from above as `n` grows.
pub fn summed_level_constant(mu: usize, probs: FlipProbabilities, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidChain("n must be at least 2".into()));
    }
    let xi2 = xi2_of_mu(mu)?;
    let mut total = 0.0;
    for j in 0..n {
        let spec = ChainSpec::new(mu, j, n, probs)?;
        total += level_main_term(&spec, xi2);
    }
    Ok(total / (n as f64 * (n as f64).ln()))
}

/// Summary of every constant for one population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mu: usize,
    pub xi2: f64,
    pub xi_star: f64,
    pub gamma_all_evals: Option<f64>,
    pub gamma_skip_clones: Option<f64>,
    pub c: Option<f64>,
    pub gamma_sbm_all: Option<f64>,
    pub gamma_sbm_skip: Option<f64>,
    pub optimal_c: Option<f64>,
}

/// Builds a report; `probs` selects the general constants, `c` the
/// standard-bit-mutation ones, and `optimize` adds the optimal all-evals rate.
pub fn bound_report(
    mu: usize,
    probs: Option<FlipProbabilities>,
    c: Option<f64>,
    optimize: bool,
) -> Result<BoundReport> {
    let xi2 = xi2_of_mu(mu)?;
    let xs = xi_star_from(mu, xi2);
    let general = |mode| probs.map(|p| general_from_xi_star(xs, p, mode)).transpose();
    Ok(BoundReport {
        mu,
        xi2,
        xi_star: xs,
        gamma_all_evals: general(EvalMode::AllEvals)?,
        gamma_skip_clones: general(EvalMode::SkipClones)?,
        c,
        gamma_sbm_all: c.map(|c| sbm_from_xi_star(xs, c, EvalMode::AllEvals)),
        gamma_sbm_skip: c.map(|c| sbm_from_xi_star(xs, c, EvalMode::SkipClones)),
        optimal_c: optimize
            .then(|| minimize_on_rates(|c| sbm_from_xi_star(xs, c, EvalMode::AllEvals)).c_star),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    /// Skip-clones constant in the two-flip limit, `(mu+1)/(2 mu (1-xi_2))`.
    TwoFlipLimit,
    /// All-evals standard-bit-mutation constant at the optimal rate.
    OptimalRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub mu: usize,
    pub constant: f64,
}

pub fn figure_data(mus: impl IntoIterator<Item = usize>, figure: Figure) -> Result<Vec<FigureRow>> {
    mus.into_iter()
        .map(|mu| {
            let constant = match figure {
                Figure::TwoFlipLimit => two_flip_limit_constant(mu)?,
                Figure::OptimalRate => optimize_c(mu, EvalMode::AllEvals)?.gamma_star,
            };
            Ok(FigureRow { mu, constant })
        })
        .collect()
}
