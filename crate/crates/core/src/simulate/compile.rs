//! Scenario compilation: from a config to frozen per-agent behaviors.
//!
//! Chain scenarios (immediate predecessor, or most-informative at unit
//! capacity) solve exactly by forward recursion. Prefix scenarios
//! (first-k, full history) go through the self-consistent estimation
//! pipeline in `pipeline.rs`.

use crate::equilibrium;
use crate::netform::NeighborhoodPolicy;
use crate::signals::Theta;

use super::config::{CutoffSource, ScenarioConfig, Timing};
use super::engine::{threshold_from_llr, Behavior, Compiled, CompiledAgent, Topology};
use super::pipeline;
use super::SimError;

pub(crate) fn compile(config: &ScenarioConfig) -> Result<Compiled, SimError> {
    config.validate()?;
    let topology = match config.policy {
        NeighborhoodPolicy::ImmediatePredecessor => Topology::Chain,
        NeighborhoodPolicy::MostInformative => {
            let max_cap = (1..=config.horizon)
                .map(|n| config.capacity.capacity(n))
                .max()
                .unwrap_or(0);
            if max_cap > 1 {
                return Err(SimError::Unsupported(
                    "most-informative selection is only simulated at capacity 1, where it \
                     reduces to the immediate predecessor"
                        .into(),
                ));
            }
            Topology::Chain
        }
        NeighborhoodPolicy::FirstK | NeighborhoodPolicy::FullSet => Topology::Prefix,
    };

    if topology == Topology::Chain && config.stochastic_block.is_some() {
        return Err(SimError::Unsupported(
            "the stochastic block needs a prefix policy (firstk or fullset)".into(),
        ));
    }
    if config.diffusion && config.policy == NeighborhoodPolicy::MostInformative {
        return Err(SimError::Unsupported(
            "diffusion is not defined for most-informative selections".into(),
        ));
    }

    match topology {
        Topology::Chain => compile_chain(config),
        Topology::Prefix => pipeline::compile_prefix(config),
    }
}

/// Chain compilation: cutoffs from the line recursion (or the flat s*
/// benchmark), then forward action marginals and per-action thresholds.
fn compile_chain(config: &ScenarioConfig) -> Result<Compiled, SimError> {
    let structure = &config.structure;
    let cost = config.cost.first_cost();
    let horizon = config.horizon as usize;

    let cutoffs: Vec<f64> = match (config.timing, config.cutoff_source) {
        (Timing::SignalFirst, CutoffSource::Benchmark) => {
            equilibrium::benchmark_cutoff_table(structure, cost, horizon)?
                .into_iter()
                .enumerate()
                .map(|(i, c)| if config.capacity.capacity(i as u32 + 1) == 0 { 0.0 } else { c })
                .collect()
        }
        (Timing::SignalFirst, CutoffSource::Equilibrium) => chain_recursion_cutoffs(config)?,
        (Timing::ObservationFirst, _) => chain_observation_first_flags(config)?,
    };

    let mut agents: Vec<CompiledAgent> = Vec::with_capacity(horizon);
    let f = |state: Theta, s: f64| config.structure.cdf_unchecked(state, s);
    for (idx, &cutoff) in cutoffs.iter().enumerate() {
        let behavior = Behavior::single(cutoff, 1);
        let (chain_thresholds, marginal) = if idx == 0 || !behavior.observes() {
            (None, [1.0 - f(Theta::Zero, 0.0), 1.0 - f(Theta::One, 0.0)])
        } else {
            let prev = agents[idx - 1].marginal;
            let mut thresholds = [0.0f64; 2];
            let mut marginal = [0.0f64; 2];
            for a in [0u8, 1u8] {
                let w = [
                    if a == 1 { prev[0] } else { 1.0 - prev[0] },
                    if a == 1 { prev[1] } else { 1.0 - prev[1] },
                ];
                let t = threshold_from_llr(structure, w[1].ln() - w[0].ln());
                thresholds[a as usize] = t;
                let tc = t.clamp(-cutoff, cutoff);
                marginal[0] += w[0] * (1.0 - f(Theta::Zero, tc));
                marginal[1] += w[1] * (1.0 - f(Theta::One, tc));
            }
            (Some(thresholds), marginal)
        };
        agents.push(CompiledAgent {
            base: behavior.clone(),
            restricted: behavior,
            chain_thresholds,
            marginal,
        });
    }

    Ok(Compiled {
        structure: config.structure.clone(),
        topology: Topology::Chain,
        agents,
        cost: config.cost.clone(),
        epsilon: 0.0,
        diffusion: config.diffusion,
        seed: config.seed,
    })
}

/// The line cutoff recursion, with zero-capacity agents forced to act
/// on their signal alone. Coincides with the equilibrium-module
/// recursion whenever every agent past the first can observe.
fn chain_recursion_cutoffs(config: &ScenarioConfig) -> Result<Vec<f64>, SimError> {
    let structure = &config.structure;
    let cost = config.cost.first_cost();
    if !structure.is_symmetric() {
        return Err(SimError::Unsupported(
            "chain cutoff recursion requires a symmetric structure".into(),
        ));
    }
    structure.classify(cost).map_err(|e| SimError::Config(e.to_string()))?;
    let f0 = |s: f64| structure.cdf_unchecked(Theta::Zero, s);
    let mut cutoffs = Vec::with_capacity(config.horizon as usize);
    let mut prev_p = f0(0.0);
    for n in 1..=config.horizon {
        let cutoff = if n == 1 || config.capacity.capacity(n) == 0 || prev_p - 0.5 <= cost {
            0.0
        } else {
            structure.invert_belief(prev_p - cost).value().min(1.0)
        };
        let p = if cutoff == 0.0 {
            f0(0.0)
        } else {
            f0(-cutoff) + (f0(cutoff) - f0(-cutoff)) * prev_p
        };
        cutoffs.push(cutoff);
        prev_p = p;
    }
    Ok(cutoffs)
}

/// Observation-first chains: the observe/skip decision precedes the
/// signal, so it compares the ex-ante value of seeing the predecessor
/// against the cost. Observing agents watch for every signal.
fn chain_observation_first_flags(config: &ScenarioConfig) -> Result<Vec<f64>, SimError> {
    let structure = &config.structure;
    let cost = config.cost.first_cost();
    structure.classify(cost).map_err(|e| SimError::Config(e.to_string()))?;
    let f = |state: Theta, s: f64| structure.cdf_unchecked(state, s);
    let signal_only_value = 0.5 * (f(Theta::Zero, 0.0) + 1.0 - f(Theta::One, 0.0));

    let mut cutoffs = Vec::with_capacity(config.horizon as usize);
    let mut prev = [1.0 - f(Theta::Zero, 0.0), 1.0 - f(Theta::One, 0.0)];
    for n in 1..=config.horizon {
        let can_observe = n >= 2 && config.capacity.capacity(n) >= 1;
        let mut observe = false;
        if can_observe {
            let mut value = 0.0;
            for a in [0u8, 1u8] {
                let w = [
                    if a == 1 { prev[0] } else { 1.0 - prev[0] },
                    if a == 1 { prev[1] } else { 1.0 - prev[1] },
                ];
                let t = threshold_from_llr(structure, w[1].ln() - w[0].ln());
                value += 0.5 * w[0] * f(Theta::Zero, t) + 0.5 * w[1] * (1.0 - f(Theta::One, t));
            }
            observe = value - signal_only_value >= cost;
        }
        let cutoff = if observe { 1.0 } else { 0.0 };
        // forward marginal under the decided behavior
        let mut marginal = [0.0f64; 2];
        if observe {
            for a in [0u8, 1u8] {
                let w = [
                    if a == 1 { prev[0] } else { 1.0 - prev[0] },
                    if a == 1 { prev[1] } else { 1.0 - prev[1] },
                ];
                let t = threshold_from_llr(structure, w[1].ln() - w[0].ln());
                marginal[0] += w[0] * (1.0 - f(Theta::Zero, t));
                marginal[1] += w[1] * (1.0 - f(Theta::One, t));
            }
        } else {
            marginal = [1.0 - f(Theta::Zero, 0.0), 1.0 - f(Theta::One, 0.0)];
        }
        cutoffs.push(cutoff);
        prev = marginal;
    }
    Ok(cutoffs)
}
