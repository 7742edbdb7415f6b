//! Reproducible parallel Monte Carlo over sequential-learning scenarios.
//!
//! Trials are independent and keyed by counter-based random streams
//! (seed, trial index), so a learning curve is bit-identical for a
//! given config at any worker count. Aggregation sums exact integer
//! counters.

mod compile;
pub mod config;
pub mod curve;
mod engine;
mod pipeline;

pub use config::{CostModel, CutoffSource, ScenarioConfig, StochasticBlock, Timing};
pub use curve::{wilson_interval, CurveRow, LearningCurve};
pub use engine::{AgentRecord, TrialTrace};

use rayon::prelude::*;
use thiserror::Error;

use crate::beliefs::BeliefError;
use crate::equilibrium::{self, EquilibriumError};
use crate::grid::GridError;
use crate::signals::{SignalError, SignalStructure, Theta};

use engine::{step_trial, threshold_from_llr, Compiled, Tally, TraceCapture, PHASE_MAIN};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("unsupported scenario: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A compiled scenario ready to run. Compilation solves the cutoff
/// tables (exact recursion on chains, self-consistent estimation on
/// prefix policies), which can dominate the cost for prefix scenarios;
/// prepare once and reuse.
pub struct Simulation {
    config: ScenarioConfig,
    compiled: Compiled,
}

impl Simulation {
    pub fn prepare(config: ScenarioConfig) -> Result<Simulation, SimError> {
        let compiled = compile::compile(&config)?;
        Ok(Simulation { config, compiled })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Outermost observation boundary per agent (the solved cutoff
    /// s*_n for single-band scenarios).
    pub fn cutoff_table(&self) -> Vec<f64> {
        self.compiled.agents.iter().map(|a| a.base.outer()).collect()
    }

    /// Runs one trial by its index and returns the full trace.
    pub fn run_trial(&self, trial: u64) -> TrialTrace {
        let mut cap = TraceCapture::new(&self.compiled);
        step_trial(&self.compiled, PHASE_MAIN, 0, trial, &mut cap);
        cap.trace
    }

    /// Estimates the learning curve over the configured trial count,
    /// in parallel, with Wilson 95% intervals.
    pub fn learning_curve(&self) -> LearningCurve {
        let horizon = self.config.horizon as usize;
        let tally = (0..self.config.trials)
            .into_par_iter()
            .fold(
                || Tally::new(horizon),
                |mut tally, trial| {
                    tally.trials += 1;
                    step_trial(&self.compiled, PHASE_MAIN, 0, trial, &mut tally);
                    tally
                },
            )
            .reduce(|| Tally::new(horizon), Tally::merge);

        let trials = tally.trials;
        let rows = (0..horizon)
            .map(|i| {
                let (lo, hi) = wilson_interval(tally.correct[i], trials);
                CurveRow {
                    n: (i + 1) as u32,
                    estimate: tally.correct[i] as f64 / trials as f64,
                    lo,
                    hi,
                    cond_estimate: (tally.observed[i] > 0)
                        .then(|| tally.observed_correct[i] as f64 / tally.observed[i] as f64),
                    obs_freq: tally.observed[i] as f64 / trials as f64,
                }
            })
            .collect();
        LearningCurve {
            rows,
            trials,
            seed: self.config.seed,
        }
    }
}

/// One-shot convenience: compile and run.
pub fn learning_curve(config: &ScenarioConfig) -> Result<LearningCurve, SimError> {
    Ok(Simulation::prepare(config.clone())?.learning_curve())
}

/// Y(m): the probability of acting correctly after observing m agents
/// who act on their signals alone, plus one's own signal. Sums over the
/// binomial count of matching actions.
pub fn y_of_m(structure: &SignalStructure, m: u32) -> Result<f64, SimError> {
    if !structure.is_symmetric() {
        return Err(SimError::Unsupported("Y(m) assumes a symmetric structure".into()));
    }
    let f = |state: Theta, s: f64| structure.cdf_unchecked(state, s);
    // a signal-only action is 1 with probability q under state 1
    let q = 1.0 - f(Theta::One, 0.0);
    if m == 0 {
        return Ok(f(Theta::Zero, 0.0));
    }
    let unit_llr = (q / (1.0 - q)).ln();
    // binomial pmfs under each state, built iteratively
    let mut pmf0 = vec![0.0f64; (m + 1) as usize];
    let mut pmf1 = vec![0.0f64; (m + 1) as usize];
    pmf0[0] = q.powi(m as i32); // j ones is rare under state 0
    pmf1[0] = (1.0 - q).powi(m as i32);
    for j in 0..m as usize {
        let step = (m as usize - j) as f64 / (j + 1) as f64;
        pmf0[j + 1] = pmf0[j] * step * (1.0 - q) / q;
        pmf1[j + 1] = pmf1[j] * step * q / (1.0 - q);
    }
    let mut total = 0.0;
    for j in 0..=m as usize {
        let llr = (2.0 * j as f64 - m as f64) * unit_llr;
        let t = threshold_from_llr(structure, llr);
        total += 0.5 * pmf0[j] * f(Theta::Zero, t) + 0.5 * pmf1[j] * (1.0 - f(Theta::One, t));
    }
    Ok(total)
}

/// Smallest agent index able to start observation-first information
/// aggregation: the first n with Y(K(n)) - F0(0) >= c, skipping agents
/// without capacity. `None` when nobody can initiate within the
/// horizon.
pub fn observation_first_feasible(config: &ScenarioConfig) -> Result<Option<u32>, SimError> {
    if config.timing != Timing::ObservationFirst {
        return Err(SimError::Config(
            "feasibility is an observation-first question".into(),
        ));
    }
    let cost = config.cost.first_cost();
    let base = config.structure.cdf_unchecked(Theta::Zero, 0.0);
    let mut cache: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
    for n in 1..=config.horizon {
        let k = config.capacity.capacity(n);
        if k == 0 {
            continue;
        }
        let y = match cache.get(&k) {
            Some(&y) => y,
            None => {
                let y = y_of_m(&config.structure, k)?;
                cache.insert(k, y);
                y
            }
        };
        if y - base >= cost {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Outcome of the epsilon-maximal learning check.
#[derive(Debug, Clone)]
pub struct EpsilonMaximalOutcome {
    pub passed: bool,
    /// (1 - epsilon) P*(c).
    pub target: f64,
    pub curve: LearningCurve,
}

/// Runs the stochastic-block scenario and checks the last decile of the
/// curve against (1 - epsilon) P*(c), allowing each point its own
/// confidence half-width.
pub fn epsilon_maximal_check(
    config: &ScenarioConfig,
    epsilon: f64,
) -> Result<EpsilonMaximalOutcome, SimError> {
    if config.stochastic_block.is_none() {
        return Err(SimError::Config(
            "epsilon-maximal check needs the stochastic block configured".into(),
        ));
    }
    let p_star = equilibrium::maximal_learning_prob(&config.structure, config.cost.first_cost())?;
    let target = (1.0 - epsilon) * p_star;
    let curve = learning_curve(config)?;
    let passed = curve
        .last_decile_rows()
        .iter()
        .all(|row| row.estimate >= target - row.half_width());
    Ok(EpsilonMaximalOutcome { passed, target, curve })
}
