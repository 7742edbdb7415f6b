//! Fast self-check suites behind the `verify` command.
//!
//! Each check re-derives a quantity on an independent route (closed
//! form, enumeration oracle, or re-run) and compares. These are
//! runtime-cheap spot checks, not the full test suite.

use crate::beliefs::{ActionHistory, LikelihoodEngine, StrategyProfile};
use crate::equilibrium::oracle::{brute_force_oracle, policy_sets};
use crate::equilibrium::{herding_bound, line_cutoff_recursion, line_limit, maximal_learning_prob};
use crate::netform::{CapacityStructure, NeighborhoodPolicy};
use crate::signals::{SignalStructure, Theta};
use crate::simulate::{learning_curve, CostModel, CutoffSource, ScenarioConfig, Timing};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const SUITES: [&str; 5] = ["signals", "beliefs", "equilibrium", "simulate", "all"];

/// Runs one of the named suites; `None` for an unknown name.
pub fn run_suite(name: &str, seed: u64) -> Option<VerifyReport> {
    let checks = match name {
        "signals" => signals_checks(),
        "beliefs" => beliefs_checks(),
        "equilibrium" => equilibrium_checks(),
        "simulate" => simulate_checks(seed),
        "all" => {
            let mut all = signals_checks();
            all.extend(beliefs_checks());
            all.extend(equilibrium_checks());
            all.extend(simulate_checks(seed));
            all
        }
        _ => return None,
    };
    Some(VerifyReport {
        suite: name.to_string(),
        checks,
    })
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn signals_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let linear = SignalStructure::linear_unbounded();
    let bounded = SignalStructure::bounded_linear(0.5).unwrap();

    for (tag, s) in [("linear", &linear), ("bounded(0.5)", &bounded)] {
        let report = s.validate(1001).unwrap();
        out.push(check(
            &format!("signals/validate/{tag}"),
            report.all_pass(),
            format!("{report:?}"),
        ));
        // quantile identity on both states
        let mut worst = 0.0f64;
        for state in [Theta::Zero, Theta::One] {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = s.sample_signal(state, u);
                worst = worst.max((s.cdf(state, x).unwrap() - u).abs());
            }
        }
        out.push(check(
            &format!("signals/quantile-roundtrip/{tag}"),
            worst <= 1e-10,
            format!("max |cdf(quantile(u)) - u| = {worst:.3e}"),
        ));
    }
    // cutoff closed form s* = 1 - 2c
    let mut worst = 0.0f64;
    for i in 1..10 {
        let c = 0.05 * i as f64;
        if c >= 0.5 {
            break;
        }
        let s_star = linear.classify(c).unwrap().s_star().unwrap();
        worst = worst.max((s_star - (1.0 - 2.0 * c)).abs());
    }
    out.push(check(
        "signals/classify-cutoff-closed-form",
        worst <= 1e-12,
        format!("max |s* - (1-2c)| = {worst:.3e}"),
    ));
    out
}

fn beliefs_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let structure = SignalStructure::linear_unbounded();
    let k = 8u32;
    let profiles = [
        (
            "line",
            StrategyProfile::line(&[0.0, 0.3, 0.35, 0.4, 0.45, 0.5, 0.5, 0.5]).unwrap(),
        ),
        (
            "firstk",
            StrategyProfile::first_k(
                &[0, 1, 2, 2, 3, 3, 3, 4],
                &[0.0, 0.3, 0.4, 0.4, 0.5, 0.5, 0.5, 0.6],
            )
            .unwrap(),
        ),
    ];
    for (tag, profile) in &profiles {
        let engine = LikelihoodEngine::new(profile, &structure).unwrap();
        let mut worst = 0.0f64;
        for theta in [Theta::Zero, Theta::One] {
            let total: f64 = (0..(1u64 << k))
                .map(|bits| {
                    engine
                        .history_likelihood(&ActionHistory::from_bits(k, bits), theta)
                        .unwrap()
                })
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
        out.push(check(
            &format!("beliefs/normalization/{tag}"),
            worst <= 1e-10,
            format!("max |sum - 1| = {worst:.3e} over 2^{k} histories"),
        ));
    }
    // contraction counts against the closed-form rate
    let n = crate::beliefs::contraction_steps(0.5, 0.1, &structure, 0.1).unwrap();
    out.push(check(
        "beliefs/contraction-count",
        n == 16,
        format!("N(0.5, 0.1) = {n}, rate q = 0.9"),
    ));
    out
}

fn equilibrium_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let structure = SignalStructure::linear_unbounded();

    let mut worst = 0.0f64;
    for c in [0.05, 0.1, 0.2] {
        let (s_hat, p_hat) = line_limit(&structure, c).unwrap();
        worst = worst
            .max((s_hat - (1.0 - 4.0 * c)).abs())
            .max((p_hat - (1.0 - c)).abs());
    }
    out.push(check(
        "equilibrium/line-limit-closed-form",
        worst <= 1e-8,
        format!("max deviation from (1-4c, 1-c) = {worst:.3e}"),
    ));

    let maximal = maximal_learning_prob(&structure, 0.1).unwrap();
    out.push(check(
        "equilibrium/maximal-closed-form",
        (maximal - 0.99).abs() <= 1e-10,
        format!("P*(0.1) = {maximal}"),
    ));

    let bound = herding_bound(&SignalStructure::bounded_linear(0.5).unwrap()).unwrap();
    out.push(check(
        "equilibrium/herding-bound",
        (bound - 0.9).abs() <= 1e-12,
        format!("bound = {bound}"),
    ));

    // oracle equivalence at small scale
    let mut worst = 0.0f64;
    for c in [0.0, 0.1] {
        let eq = line_cutoff_recursion(&structure, c, 8).unwrap();
        let sets = policy_sets(
            NeighborhoodPolicy::ImmediatePredecessor,
            &CapacityStructure::ImmediateOne,
            8,
            None,
        )
        .unwrap();
        let oracle = brute_force_oracle(&structure, c, &sets, 1024).unwrap();
        for i in 0..8 {
            worst = worst.max((eq.correctness[i] - oracle.correctness[i]).abs());
        }
    }
    out.push(check(
        "equilibrium/oracle-equivalence",
        worst <= 1e-6,
        format!("max |recursion - oracle| = {worst:.3e} for n <= 8"),
    ));
    out
}

fn simulate_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let config = ScenarioConfig {
        structure: SignalStructure::linear_unbounded(),
        cost: CostModel::Flat(0.1),
        capacity: CapacityStructure::ImmediateOne,
        policy: NeighborhoodPolicy::ImmediatePredecessor,
        timing: Timing::SignalFirst,
        diffusion: false,
        stochastic_block: None,
        horizon: 40,
        trials: 2000,
        seed,
        cutoff_source: CutoffSource::Equilibrium,
    };
    let run = |threads: usize| -> String {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| learning_curve(&config).unwrap().to_csv())
    };
    let one = run(1);
    let eight = run(8);
    out.push(check(
        "simulate/reproducibility-worker-count",
        one == eight,
        "csv(1 thread) == csv(8 threads)".into(),
    ));
    let again = run(8);
    out.push(check(
        "simulate/reproducibility-rerun",
        eight == again,
        "csv(run 1) == csv(run 2)".into(),
    ));

    let y1 = crate::simulate::y_of_m(&config.structure, 1).unwrap();
    out.push(check(
        "simulate/y-of-one",
        (y1 - 0.8125).abs() <= 1e-10,
        format!("Y(1) = {y1}"),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for suite in SUITES {
            let report = run_suite(suite, 0).unwrap();
            assert!(
                report.all_pass(),
                "suite {suite} failed: {:?}",
                report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
            );
        }
        assert!(run_suite("bogus", 0).is_none());
    }
}
