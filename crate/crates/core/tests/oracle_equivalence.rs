//! Cross-checks between the analytic solvers, the Monte Carlo harness,
//! and the brute-force enumeration oracle on small instances.

use seqlearn_core::equilibrium::oracle::{brute_force_oracle, policy_sets};
use seqlearn_core::equilibrium::{line_cutoff_recursion, prefix_exact, public_belief_dynamics};
use seqlearn_core::grid::GridSpec;
use seqlearn_core::netform::{CapacityStructure, NeighborhoodPolicy};
use seqlearn_core::signals::SignalStructure;
use seqlearn_core::simulate::{learning_curve, CostModel, CutoffSource, ScenarioConfig, Timing};

const COSTS: [f64; 4] = [0.0, 0.05, 0.1, 0.2];
const AGENTS: usize = 8;
const PANELS: usize = 2048;

fn sqrt_prefix_lengths(agents: usize) -> Vec<u32> {
    (1..=agents as u32)
        .map(|n| CapacityStructure::SqrtGrowth.capacity(n))
        .collect()
}

#[test]
fn line_recursion_matches_oracle() {
    let structure = SignalStructure::linear_unbounded();
    for cost in COSTS {
        let eq = line_cutoff_recursion(&structure, cost, AGENTS).unwrap();
        let sets = policy_sets(
            NeighborhoodPolicy::ImmediatePredecessor,
            &CapacityStructure::ImmediateOne,
            AGENTS,
            None,
        )
        .unwrap();
        let oracle = brute_force_oracle(&structure, cost, &sets, PANELS).unwrap();
        for n in 0..AGENTS {
            let diff = (eq.correctness[n] - oracle.correctness[n]).abs();
            assert!(
                diff <= 1e-6,
                "c = {cost}, agent {}: recursion {} vs oracle {}",
                n + 1,
                eq.correctness[n],
                oracle.correctness[n]
            );
        }
    }
}

#[test]
fn prefix_solver_matches_oracle() {
    let structure = SignalStructure::linear_unbounded();
    let ks = sqrt_prefix_lengths(AGENTS);
    for cost in COSTS {
        let exact = prefix_exact(&structure, cost, &ks).unwrap();
        let sets = policy_sets(
            NeighborhoodPolicy::FirstK,
            &CapacityStructure::SqrtGrowth,
            AGENTS,
            None,
        )
        .unwrap();
        let oracle = brute_force_oracle(&structure, cost, &sets, PANELS).unwrap();
        for n in 0..AGENTS {
            let diff = (exact.correctness[n] - oracle.correctness[n]).abs();
            assert!(
                diff <= 1e-6,
                "c = {cost}, agent {}: exact {} vs oracle {}",
                n + 1,
                exact.correctness[n],
                oracle.correctness[n]
            );
        }
    }
}

#[test]
fn full_history_dynamics_match_oracle() {
    let structure = SignalStructure::linear_unbounded();
    let grid = GridSpec {
        half_width: 10.0,
        bins: 80_001,
    };
    for cost in [0.0, 0.1] {
        let dynamics = public_belief_dynamics(&structure, cost, AGENTS, grid).unwrap();
        let sets = policy_sets(
            NeighborhoodPolicy::FullSet,
            &CapacityStructure::FullHistory,
            AGENTS,
            None,
        )
        .unwrap();
        let oracle = brute_force_oracle(&structure, cost, &sets, PANELS).unwrap();
        for n in 0..AGENTS {
            let diff = (dynamics.correctness[n] - oracle.correctness[n]).abs();
            assert!(
                diff <= 1e-6,
                "c = {cost}, agent {}: dynamics {} vs oracle {}",
                n + 1,
                dynamics.correctness[n],
                oracle.correctness[n]
            );
        }
    }
}

/// Monte Carlo estimates land within 4 standard errors of the oracle.
#[test]
fn monte_carlo_agrees_with_oracle() {
    let trials: u64 = 1_000_000;
    for policy in [NeighborhoodPolicy::ImmediatePredecessor, NeighborhoodPolicy::FirstK] {
        let capacity = match policy {
            NeighborhoodPolicy::ImmediatePredecessor => CapacityStructure::ImmediateOne,
            _ => CapacityStructure::SqrtGrowth,
        };
        for cost in [0.0, 0.1] {
            let config = ScenarioConfig {
                structure: SignalStructure::linear_unbounded(),
                cost: CostModel::Flat(cost),
                capacity: capacity.clone(),
                policy,
                timing: Timing::SignalFirst,
                diffusion: false,
                stochastic_block: None,
                horizon: AGENTS as u32,
                trials,
                seed: 0,
                cutoff_source: CutoffSource::Equilibrium,
            };
            let curve = learning_curve(&config).unwrap();
            let sets = policy_sets(policy, &capacity, AGENTS, None).unwrap();
            let oracle =
                brute_force_oracle(&SignalStructure::linear_unbounded(), cost, &sets, PANELS).unwrap();
            for n in 0..AGENTS {
                let p = oracle.correctness[n];
                let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-6);
                let diff = (curve.rows[n].estimate - p).abs();
                assert!(
                    diff <= 4.0 * se + 2e-3,
                    "{policy:?} c = {cost}, agent {}: sim {} vs oracle {} (se {se})",
                    n + 1,
                    curve.rows[n].estimate,
                    p,
                );
            }
        }
    }
}
