use serde::Serialize;
use serde_json::json;
use steady_ga::absorption::{analyze, check_monotonicity};
use steady_ga::bounds::{
    bound_report, figure_data, optimize_c, per_level_bound, xi_star, EvalMode, Figure,
};
use steady_ga::chain::{build_chain, validate_chain, ChainSpec};
use steady_ga::experiment::{
    estimate_drift, ga_campaign, mc_chain_absorption, paired_comparison, solver_sweep, DriftConfig,
    ExperimentConfig, OperatorChoice,
};
use steady_ga::{FlipProbabilities, GaConfig, MutationSpec};

use crate::output::{cell, opt_cell, Format, Report, Table};
use crate::{
    AnalyzeArgs, ChainArgs, CliError, Command, Common, ConstantsArgs, DriftArgs, FiguresArgs,
    McArgs, OptimizeArgs, SimulateArgs, ValidateArgs,
};

pub const SIMULATE_HELP: &str = "CSV columns: n,mu,mutation,c,variant,replicates,budget_exhausted,\
mean_count_all,se_count_all,mean_skip_clones,se_skip_clones,normalized_count_all,\
normalized_skip_clones,gamma_all_evals,gamma_skip_clones,asymptotic\n\
With --paired: n,mu,mutation,pairs,crossover_mean,mutation_only_mean,crossover_wins,\
mutation_only_wins,ties,p_value,budget_exhausted,counters_consistent\n\
Statistics exclude budget-exhausted runs; normalized = mean / (n ln n).";
pub const MC_HELP: &str = "CSV columns: mu,j,n,start,replicates,mean,std_error,analytic,z_score";
pub const ANALYZE_HELP: &str =
    "CSV columns: state,expected_time,stay_probability,exit_probability\nDefault format: json.";
pub const CONSTANTS_HELP: &str = "CSV columns: mu,xi2,xi_star,gamma_all_evals,gamma_skip_clones,\
c,gamma_sbm_all,gamma_sbm_skip,optimal_c\n\
gamma_all_evals/gamma_skip_clones need --p0/--p1/--p2; the sbm columns need --c.";
pub const OPTIMIZE_HELP: &str = "CSV columns: mu,c_star,gamma_star,mode";
pub const FIGURES_HELP: &str = "CSV columns: mu,constant";
pub const DRIFT_HELP: &str = "CSV columns: j,state,potential,samples,drift,std_error\n\
drift and std_error are empty for states without enough samples.";
pub const VALIDATE_HELP: &str = "CSV columns: check,passed,value,detail\nDefault format: json.";

/// Population sizes, rates and problem size of the solver sweep.
pub const SWEEP_MU: std::ops::RangeInclusive<usize> = 3..=64;
pub const SWEEP_RATES: [f64; 3] = [0.5, 1.0, 2.0];
pub const SWEEP_N: usize = 1000;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Returns whether a check failed.
pub fn execute(cmd: &Command) -> Result<bool, CliError> {
    let (report, common, default) = match cmd {
        Command::SimulateGa(a) => (simulate(a)?, &a.common, Format::Csv),
        Command::McChain(a) => (mc_chain(a)?, &a.common, Format::Csv),
        Command::AnalyzeChain(a) => (analyze_chain(a)?, &a.common, Format::Json),
        Command::LeadingConstants(a) => (constants(a)?, &a.common, Format::Csv),
        Command::OptimizeC(a) => (optimize(a)?, &a.common, Format::Csv),
        Command::Figures(a) => (figures(a)?, &a.common, Format::Csv),
        Command::Drift(a) => (drift(a)?, &a.common, Format::Csv),
        Command::Validate(a) => (validate(a)?, &a.common, Format::Json),
    };
    emit(&report, common, default)?;
    Ok(report.failed)
}

fn emit(report: &Report, common: &Common, default: Format) -> Result<(), CliError> {
    report.emit(common.format.unwrap_or(default), common.out.as_deref())?;
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    if a.replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let operators = match &a.flips {
        Some(p) => vec![OperatorChoice::Flips(p.0.clone())],
        None => a.c.0.clone(),
    };
    if a.paired {
        let [n] = a.n.0[..] else {
            return Err(usage("--paired takes a single --n"));
        };
        let [mu] = a.mu.0[..] else {
            return Err(usage("--paired takes a single --mu"));
        };
        let [op] = &operators[..] else {
            return Err(usage("--paired takes a single operator"));
        };
        let mut ga = GaConfig::new(n, mu, op.resolve(mu)?, a.common.seed).with_trace(None);
        if let Some(b) = a.max_evals {
            ga = ga.with_budget(b);
        }
        let p = paired_comparison(&ga, a.replicates, a.common.seed)?;
        let mut t = Table::new(&[
            "n",
            "mu",
            "mutation",
            "pairs",
            "crossover_mean",
            "mutation_only_mean",
            "crossover_wins",
            "mutation_only_wins",
            "ties",
            "p_value",
            "budget_exhausted",
            "counters_consistent",
        ]);
        t.push(vec![
            cell(p.n),
            cell(p.mu),
            cell(&p.mutation),
            cell(p.pairs),
            cell(p.crossover_mean),
            cell(p.mutation_only_mean),
            cell(p.crossover_wins),
            cell(p.mutation_only_wins),
            cell(p.ties),
            cell(p.p_value),
            cell(p.budget_exhausted),
            cell(p.counters_consistent),
        ]);
        let body = json!({ "seed": a.common.seed, "asymptotic": false, "comparison": p });
        return Ok(Report::new("simulate-ga", t, &body));
    }
    let config = ExperimentConfig {
        ns: a.n.0.clone(),
        mus: a.mu.0.clone(),
        operators,
        replicates: a.replicates,
        seed: a.common.seed,
        mutation_only: a.mutation_only,
        max_evaluations: a.max_evals,
    };
    let cells = ga_campaign(&config)?;
    let mut t = Table::new(&[
        "n",
        "mu",
        "mutation",
        "c",
        "variant",
        "replicates",
        "budget_exhausted",
        "mean_count_all",
        "se_count_all",
        "mean_skip_clones",
        "se_skip_clones",
        "normalized_count_all",
        "normalized_skip_clones",
        "gamma_all_evals",
        "gamma_skip_clones",
        "asymptotic",
    ]);
    for c in &cells {
        t.push(vec![
            cell(c.n),
            cell(c.mu),
            cell(&c.mutation),
            opt_cell(c.c),
            cell(c.variant.as_str()),
            cell(c.replicates),
            cell(c.budget_exhausted),
            opt_cell(c.count_all.map(|e| e.mean)),
            opt_cell(c.count_all.map(|e| e.std_error)),
            opt_cell(c.skip_clones.map(|e| e.mean)),
            opt_cell(c.skip_clones.map(|e| e.std_error)),
            opt_cell(c.normalized_count_all),
            opt_cell(c.normalized_skip_clones),
            cell(c.gamma_all_evals),
            cell(c.gamma_skip_clones),
            cell(c.asymptotic),
        ]);
    }
    Ok(Report::new(
        "simulate-ga",
        t,
        &json!({ "config": config, "cells": cells }),
    ))
}

fn chain_spec(a: &ChainArgs) -> Result<ChainSpec, CliError> {
    let spec = match (a.c, a.p0, a.p1, a.p2) {
        (_, Some(p0), Some(p1), Some(p2)) => {
            ChainSpec::new(a.mu, a.j, a.n, FlipProbabilities::new(p0, p1, p2)?)?
        }
        (c, _, _, _) => {
            let c = c.unwrap_or(1.0);
            if !(c.is_finite() && c > 0.0) {
                return Err(usage(format!("--c must be positive, got {c}")));
            }
            ChainSpec::with_rate(a.mu, a.j, a.n, c)?
        }
    };
    Ok(spec)
}

fn mc_chain(a: &McArgs) -> Result<Report, CliError> {
    if a.replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let spec = chain_spec(&a.chain)?;
    if a.start >= spec.m() {
        return Err(usage(format!("--start must be below m = {}", spec.m())));
    }
    let est = mc_chain_absorption(&spec, a.start, a.replicates, a.common.seed)?;
    let analytic = analyze(&build_chain(&spec)?)?.expected_times[a.start];
    let z = (est.mean - analytic) / est.std_error;
    let mut t = Table::new(&[
        "mu",
        "j",
        "n",
        "start",
        "replicates",
        "mean",
        "std_error",
        "analytic",
        "z_score",
    ]);
    t.push(vec![
        cell(spec.mu),
        cell(spec.j),
        cell(spec.n),
        cell(a.start),
        cell(est.replicates),
        cell(est.mean),
        cell(est.std_error),
        cell(analytic),
        cell(z),
    ]);
    let body = json!({
        "seed": a.common.seed,
        "spec": spec,
        "start": a.start,
        "estimate": est,
        "analytic": analytic,
        "z_score": z,
    });
    Ok(Report::new("mc-chain", t, &body))
}

fn analyze_chain(a: &AnalyzeArgs) -> Result<Report, CliError> {
    let spec = chain_spec(&a.chain)?;
    let table = build_chain(&spec)?;
    let res = analyze(&table)?;
    let mut t = Table::new(&[
        "state",
        "expected_time",
        "stay_probability",
        "exit_probability",
    ]);
    for (i, &e) in res.expected_times.iter().enumerate() {
        t.push(vec![
            cell(i),
            cell(e),
            cell(table.p(i, i)),
            cell(table.exit(i)),
        ]);
    }
    let body = json!({
        "spec": spec,
        "m": spec.m(),
        "chain": table,
        "chain_diagnostics": validate_chain(&table),
        "expected_times": res.expected_times,
        "xi": res.xi,
        "xi2": res.xi2(),
        "n11": res.n11,
        "diagnostics": res.diagnostics,
        "monotone": check_monotonicity(&res),
        "level_bound": per_level_bound(&spec)?,
    });
    let mut r = Report::new("analyze-chain", t, &body);
    r.failed = !validate_chain(&table).is_valid();
    Ok(r)
}

fn constants(a: &ConstantsArgs) -> Result<Report, CliError> {
    let probs = match (a.p0, a.p1, a.p2) {
        (Some(p0), Some(p1), Some(p2)) => Some(FlipProbabilities::new(p0, p1, p2)?),
        _ => None,
    };
    let reports =
        a.mu.0
            .iter()
            .map(|&mu| bound_report(mu, probs, a.c, true))
            .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&[
        "mu",
        "xi2",
        "xi_star",
        "gamma_all_evals",
        "gamma_skip_clones",
        "c",
        "gamma_sbm_all",
        "gamma_sbm_skip",
        "optimal_c",
    ]);
    for r in &reports {
        t.push(vec![
            cell(r.mu),
            cell(r.xi2),
            cell(r.xi_star),
            opt_cell(r.gamma_all_evals),
            opt_cell(r.gamma_skip_clones),
            opt_cell(r.c),
            opt_cell(r.gamma_sbm_all),
            opt_cell(r.gamma_sbm_skip),
            opt_cell(r.optimal_c),
        ]);
    }
    Ok(Report::new(
        "leading-constants",
        t,
        &json!({ "constants": reports }),
    ))
}

fn optimize(a: &OptimizeArgs) -> Result<Report, CliError> {
    let mode = EvalMode::from(a.mode);
    let mut t = Table::new(&["mu", "c_star", "gamma_star", "mode"]);
    let mut rows = Vec::new();
    for &mu in &a.mu.0 {
        let r = optimize_c(mu, mode)?;
        t.push(vec![
            cell(mu),
            cell(r.c_star),
            cell(r.gamma_star),
            cell(mode.as_str()),
        ]);
        rows.push(json!({ "mu": mu, "c_star": r.c_star, "gamma_star": r.gamma_star }));
    }
    Ok(Report::new(
        "optimize-c",
        t,
        &json!({ "mode": mode, "optima": rows }),
    ))
}

fn figures(a: &FiguresArgs) -> Result<Report, CliError> {
    if a.mu_min > a.mu_max {
        return Err(usage("--mu-min must not exceed --mu-max"));
    }
    let figure = if a.figure == 1 {
        Figure::TwoFlipLimit
    } else {
        Figure::OptimalRate
    };
    let rows = figure_data(a.mu_min..=a.mu_max, figure)?;
    let mut t = Table::new(&["mu", "constant"]);
    for r in &rows {
        t.push(vec![cell(r.mu), cell(r.constant)]);
    }
    Ok(Report::new(
        "figures",
        t,
        &json!({ "figure": a.figure, "rows": rows }),
    ))
}

fn drift(a: &DriftArgs) -> Result<Report, CliError> {
    let config = DriftConfig {
        n: a.n,
        mu: a.mu,
        j: a.j.unwrap_or(a.n / 2),
        mutation: MutationSpec::standard(a.c),
        samples_per_state: a.samples,
        min_samples: a.min_samples,
        seed: a.common.seed,
    };
    let cells = estimate_drift(&config)?;
    let mut t = Table::new(&["j", "state", "potential", "samples", "drift", "std_error"]);
    for c in &cells {
        t.push(vec![
            cell(c.j),
            cell(c.state),
            cell(c.potential),
            cell(c.samples),
            opt_cell(c.drift.map(|d| d.mean)),
            opt_cell(c.drift.map(|d| d.std_error)),
        ]);
    }
    Ok(Report::new(
        "drift",
        t,
        &json!({ "config": config, "cells": cells }),
    ))
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            value,
            detail: detail.into(),
        }
    }
}

fn validate(a: &ValidateArgs) -> Result<Report, CliError> {
    if a.replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let mut checks = Vec::new();

    let (x3, x4, x5) = (xi_star(3)?, xi_star(4)?, xi_star(5)?);
    let gap = (x3 - 1.0 / 3.0).abs().max((x4 - 1.0 / 3.0).abs());
    checks.push(Check::new(
        "xi_star_small_mu",
        gap <= 1e-12,
        gap,
        "|xi*(3), xi*(4) - 1/3|",
    ));
    checks.push(Check::new(
        "xi_star_crosses_half",
        x4 <= 0.5 && 0.5 < x5,
        x5,
        format!("xi*(4) = {x4}, xi*(5) = {x5}"),
    ));

    let fig2 = figure_data(5..=50, Figure::OptimalRate)?;
    let worst = fig2.iter().map(|r| r.constant).fold(f64::MIN, f64::max);
    let decreasing = fig2.windows(2).all(|w| w[1].constant < w[0].constant);
    checks.push(Check::new(
        "optimal_constants_below_1_7_and_decreasing",
        worst < 1.7 && decreasing,
        worst,
        format!("max over mu in 5..=50; strictly decreasing: {decreasing}"),
    ));

    let skip_max = (5..=50)
        .map(|mu| optimize_c(mu, EvalMode::SkipClones).map(|r| r.gamma_star))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::MIN, f64::max);
    let small_min = [3, 4]
        .into_iter()
        .map(|mu| optimize_c(mu, EvalMode::SkipClones).map(|r| r.gamma_star))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::MAX, f64::min);
    checks.push(Check::new(
        "skip_clones_constant_below_one",
        skip_max < 1.0,
        skip_max,
        "max over mu in 5..=50 of the optimized skip-clones constant",
    ));
    checks.push(Check::new(
        "skip_clones_constant_small_mu_above_one",
        small_min > 1.0,
        small_min,
        "min over mu in {3,4}",
    ));

    let mus: Vec<usize> = SWEEP_MU.collect();
    let sweep = solver_sweep(&mus, &SWEEP_RATES, SWEEP_N)?;
    let gap = sweep.iter().map(|c| c.n11_relative_gap).fold(0.0, f64::max);
    let resid = sweep
        .iter()
        .map(|c| c.relative_residual)
        .fold(0.0, f64::max);
    let structural = sweep.iter().all(|c| c.sdd_ok && c.signs_ok);
    let non_monotone = sweep.iter().filter(|c| !c.monotone).count();
    let dominated = sweep.iter().filter(|c| !c.bound_holds()).count();
    let cells = sweep.len();
    checks.push(Check::new(
        "solver_n11_agreement",
        gap <= 1e-10,
        gap,
        "max relative gap",
    ));
    checks.push(Check::new(
        "solver_residual",
        resid <= 1e-10,
        resid,
        "max relative residual",
    ));
    checks.push(Check::new(
        "solver_sdd_and_signs",
        structural,
        f64::from(u8::from(structural)),
        format!("{cells} sweep cells"),
    ));
    checks.push(Check::new(
        "expected_times_monotone",
        non_monotone == 0,
        non_monotone as f64,
        format!("non-monotone cells out of {cells}"),
    ));
    checks.push(Check::new(
        "level_bound_dominates",
        dominated == 0,
        dominated as f64,
        format!("violating cells out of {cells}"),
    ));

    let spec = ChainSpec::with_rate(5, 500, 1000, 1.0)?;
    let exact = analyze(&build_chain(&spec)?)?.expected_times[0];
    let est = mc_chain_absorption(&spec, 0, a.replicates, a.common.seed)?;
    checks.push(Check::new(
        "monte_carlo_matches_solver",
        est.agrees_with(exact, 0.01, 3.0),
        est.mean,
        format!("analytic {exact}, std error {}", est.std_error),
    ));

    let ga = GaConfig::new(100, 5, MutationSpec::standard(1.0), a.common.seed).with_trace(None);
    let p = paired_comparison(&ga, 20, a.common.seed)?;
    checks.push(Check::new(
        "skip_clones_counter_at_most_count_all",
        p.counters_consistent,
        f64::from(u8::from(p.counters_consistent)),
        "40 runs, n = 100, mu = 5",
    ));

    let drift = estimate_drift(&DriftConfig {
        n: 1000,
        mu: 5,
        j: 500,
        mutation: MutationSpec::standard(1.0),
        samples_per_state: 10_000,
        min_samples: 100,
        seed: a.common.seed,
    })?;
    let d0 = drift[0].drift.map_or(f64::NAN, |d| d.mean);
    checks.push(Check::new(
        "drift_state_zero",
        d0 >= 0.9,
        d0,
        "n = 1000, j = 500, mu = 5",
    ));

    let mut t = Table::new(&["check", "passed", "value", "detail"]);
    for c in &checks {
        t.push(vec![
            cell(c.name),
            cell(c.passed),
            cell(c.value),
            cell(&c.detail),
        ]);
    }
    let failed = checks.iter().any(|c| !c.passed);
    let mut r = Report::new(
        "validate",
        t,
        &json!({ "seed": a.common.seed, "passed": !failed, "checks": checks }),
    );
    r.failed = failed;
    Ok(r)
}
