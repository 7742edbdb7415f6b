//! Brute-force small-instance oracle.
//!
//! Enumerates every action history outright and integrates signal
//! regions with composite Simpson quadrature on the densities. Shares
//! nothing with the likelihood engine beyond density evaluation: no
//! closed-form CDFs, no factor recursions, no marginal caches. Used to
//! cross-check the analytic solvers and the Monte Carlo harness.

use super::EquilibriumError;
use crate::beliefs::ObservedSet;
use crate::netform::{select_neighborhood, CapacityStructure, NeighborhoodPolicy};
use crate::signals::{SignalStructure, Theta};

/// Hard cap keeping 2^(n-1) enumeration at desk scale.
pub const MAX_AGENTS: usize = 12;
/// Cap on Simpson panels per integral.
pub const MAX_PANELS: usize = 4096;

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Exact P(a_n = theta) per agent.
    pub correctness: Vec<f64>,
    /// The observation cutoffs the oracle solved on its own route.
    pub cutoffs: Vec<f64>,
}

/// Observation sets for the canonical policies, ready for the oracle.
pub fn policy_sets(
    policy: NeighborhoodPolicy,
    capacity: &CapacityStructure,
    agents: usize,
    estimates: Option<&[f64]>,
) -> Result<Vec<ObservedSet>, EquilibriumError> {
    let mut sets = Vec::with_capacity(agents);
    for n in 1..=agents as u32 {
        let k = capacity.capacity(n);
        let chosen = select_neighborhood(policy, n, k, estimates)
            .map_err(|e| EquilibriumError::InvalidArgument(e.to_string()))?;
        let set = if chosen.is_empty() {
            ObservedSet::Empty
        } else {
            match policy {
                NeighborhoodPolicy::ImmediatePredecessor => ObservedSet::Single(chosen[0]),
                NeighborhoodPolicy::FirstK | NeighborhoodPolicy::FullSet => {
                    ObservedSet::Prefix(chosen.len() as u32)
                }
                NeighborhoodPolicy::MostInformative => {
                    if chosen.len() == 1 {
                        ObservedSet::Single(chosen[0])
                    } else {
                        return Err(EquilibriumError::InvalidArgument(
                            "oracle supports most-informative selection only at capacity 1".into(),
                        ));
                    }
                }
            }
        };
        sets.push(set);
    }
    Ok(sets)
}

/// Composite Simpson rule; exact for the piecewise-linear densities in
/// this crate whenever panel boundaries avoid straddling kinks badly.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(2) & !1; // even
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Exact per-agent correctness probabilities by enumerating all
/// 2^(n-1) prefix histories. The oracle solves its own thresholds and
/// cutoffs from the enumerated sums with bisection on the densities.
#[allow(clippy::needless_range_loop)] // loop variables double as history bitmasks
pub fn brute_force_oracle(
    structure: &SignalStructure,
    cost: f64,
    sets: &[ObservedSet],
    panels: usize,
) -> Result<OracleResult, EquilibriumError> {
    let agents = sets.len();
    if agents == 0 || agents > MAX_AGENTS {
        return Err(EquilibriumError::Size(format!(
            "oracle handles 1..={MAX_AGENTS} agents, got {agents}"
        )));
    }
    if panels > MAX_PANELS {
        return Err(EquilibriumError::Size(format!(
            "oracle handles at most {MAX_PANELS} quadrature panels, got {panels}"
        )));
    }
    structure.classify(cost)?;
    for (i, set) in sets.iter().enumerate() {
        let n = i + 1;
        let ok = match *set {
            ObservedSet::Empty => true,
            ObservedSet::Prefix(k) => (k as usize) < n,
            ObservedSet::Single(m) => m >= 1 && (m as usize) < n,
        };
        if !ok {
            return Err(EquilibriumError::InvalidArgument(format!(
                "agent {n} has an infeasible observation set {set:?}"
            )));
        }
    }

    let f = |theta: Theta, s: f64| structure.pdf_unchecked(theta, s);
    let lo = -1.0 + 1e-13;
    let hi = 1.0 - 1e-13;

    // probs[k][theta][bits]: joint probability of the first k actions
    let mut probs: Vec<[Vec<f64>; 2]> = Vec::with_capacity(agents + 1);
    probs.push([vec![1.0], vec![1.0]]);

    let mut correctness = Vec::with_capacity(agents);
    let mut cutoffs = Vec::with_capacity(agents);

    for (idx, set) in sets.iter().enumerate() {
        let n = idx + 1;
        let prefix_len = n - 1;
        let prev = &probs[prefix_len];

        // observable configurations and their likelihoods
        let configs: Vec<[f64; 2]> = match *set {
            ObservedSet::Empty => vec![[1.0, 1.0]],
            ObservedSet::Single(m) => {
                let bit = (m - 1) as usize;
                let mut l = [[0.0f64; 2]; 2];
                for h in 0..prev[0].len() {
                    let a = (h >> bit) & 1;
                    l[a][0] += prev[0][h];
                    l[a][1] += prev[1][h];
                }
                vec![l[0], l[1]]
            }
            ObservedSet::Prefix(k) => {
                let span = &probs[k as usize];
                (0..span[0].len()).map(|v| [span[0][v], span[1][v]]).collect()
            }
        };

        // posterior-threshold signal per configuration: the root of
        // f1(t) L1 = f0(t) L0, found on the density ratio directly
        let thresholds: Vec<f64> = configs
            .iter()
            .map(|l| {
                if l[0] == 0.0 && l[1] == 0.0 {
                    return 0.0; // unreachable configuration
                }
                if l[1] == 0.0 {
                    return 1.0;
                }
                if l[0] == 0.0 {
                    return -1.0;
                }
                let g = |t: f64| f(Theta::One, t).ln() - f(Theta::Zero, t).ln() + l[1].ln() - l[0].ln();
                if g(lo) >= 0.0 {
                    -1.0
                } else if g(hi) <= 0.0 {
                    1.0
                } else {
                    crate::signals::bisect(lo, hi, g)
                }
            })
            .collect();

        // the oracle's own cutoff: gain against cost, bisection
        let cutoff = if matches!(set, ObservedSet::Empty) {
            0.0
        } else {
            let gain = |s: f64| {
                let f0 = f(Theta::Zero, s);
                let f1 = f(Theta::One, s);
                let mut flip = 0.0;
                for (l, &t) in configs.iter().zip(&thresholds) {
                    if t >= s {
                        flip += f0 * l[0] - f1 * l[1];
                    }
                }
                flip / (f0 + f1)
            };
            if gain(0.0) < cost {
                0.0
            } else if gain(hi) >= cost {
                1.0
            } else {
                crate::signals::bisect(0.0, hi, |s| gain(s) - cost)
            }
        };

        // extend the enumeration by this agent's action
        let config_of = |h: usize| -> usize {
            match *set {
                ObservedSet::Empty => 0,
                ObservedSet::Single(m) => (h >> (m - 1)) & 1,
                ObservedSet::Prefix(k) => h & ((1usize << k) - 1),
            }
        };
        let mut next = [vec![0.0; 1 << n], vec![0.0; 1 << n]];
        let mut p_correct = 0.0;
        for h in 0..prev[0].len() {
            let t = thresholds[config_of(h)].clamp(-cutoff, cutoff);
            for theta in [Theta::Zero, Theta::One] {
                let ti = theta.bit() as usize;
                if prev[ti][h] == 0.0 {
                    continue;
                }
                let p_zero = simpson(|s| f(theta, s), -1.0, t, panels);
                let p_one = simpson(|s| f(theta, s), t, 1.0, panels);
                next[ti][h] = prev[ti][h] * p_zero;
                next[ti][h | (1 << prefix_len)] = prev[ti][h] * p_one;
                let correct = if theta == Theta::Zero { p_zero } else { p_one };
                p_correct += 0.5 * prev[ti][h] * correct;
            }
        }
        probs.push(next);
        correctness.push(p_correct);
        cutoffs.push(cutoff);
    }

    Ok(OracleResult { correctness, cutoffs })
}
