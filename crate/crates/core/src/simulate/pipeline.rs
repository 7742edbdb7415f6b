//! Self-consistent cutoff estimation for prefix-observation scenarios.
//!
//! Equilibrium cutoffs over growing observed prefixes have no closed
//! form, so the pipeline alternates between
//! (a) estimating the distribution of the prefix log-odds by simulating
//! under the current behaviors and (b) recomputing every agent's
//! observation bands from the estimated observation gains, until the
//! band boundaries stop moving (1e-4) or 20 rounds elapse.
//!
//! Every round re-simulates the same counter-based streams (common
//! random numbers), which turns the update into a deterministic
//! self-map: the convergence check is meaningful and the result is
//! bit-reproducible at any worker count. Histograms use integer
//! nearest-bin counts so merges stay exact.

use rayon::prelude::*;

use crate::grid::GridSpec;
use crate::signals::{SignalStructure, Theta};

use super::config::{CostModel, CutoffSource, ScenarioConfig, Timing};
use super::engine::{
    step_trial, threshold_from_llr, Band, Behavior, Compiled, CompiledAgent, Topology,
    TrialCapture, PHASE_ESTIMATE,
};
use super::SimError;

const EST_TRIALS: u64 = 20_000;
const MAX_ROUNDS: usize = 20;
const BAND_TOL: f64 = 1e-4;
/// Signal grid used to locate band switch points before refinement.
const SCAN_POINTS: usize = 1025;

pub(crate) fn compile_prefix(config: &ScenarioConfig) -> Result<Compiled, SimError> {
    let structure = &config.structure;
    let horizon = config.horizon as usize;
    let block = config.stochastic_block;
    let epsilon = block.map(|b| b.epsilon).unwrap_or(0.0);

    let caps: Vec<u32> = (1..=config.horizon)
        .map(|n| config.capacity.capacity(n))
        .collect();
    let base_candidates: Vec<Vec<u32>> =
        caps.iter().map(|&k| config.cost.candidate_counts(k)).collect();
    let res_candidates: Vec<Vec<u32>> = caps
        .iter()
        .map(|&k| {
            let capped = block.map(|b| k.min(b.prefix)).unwrap_or(k);
            config.cost.candidate_counts(capped)
        })
        .collect();
    if base_candidates.iter().any(|c| c.len() > 12) {
        return Err(SimError::Unsupported(
            "cost schedules with more than a handful of marginal steps are not supported".into(),
        ));
    }

    // prefix lengths whose log-odds distribution the gains need
    let mut needed: Vec<u32> = base_candidates
        .iter()
        .chain(res_candidates.iter())
        .flatten()
        .copied()
        .filter(|&k| k > 0)
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let mut slot_of = vec![None; horizon + 1];
    for (slot, &k) in needed.iter().enumerate() {
        slot_of[k as usize] = Some(slot);
    }

    // initial bands: observe at full capacity below the strong-belief
    // bound (below 1 when beliefs are weak or cost is zero)
    let regime = structure
        .classify(config.cost.first_cost())
        .map_err(|e| SimError::Config(e.to_string()))?;
    let s_init = regime.s_star().unwrap_or(1.0);
    let initial = |cands: &[u32]| -> Behavior {
        let top = *cands.last().unwrap_or(&0);
        Behavior::single(s_init, top)
    };

    let mut compiled = Compiled {
        structure: config.structure.clone(),
        topology: Topology::Prefix,
        agents: (0..horizon)
            .map(|i| CompiledAgent {
                base: initial(&base_candidates[i]),
                restricted: if block.is_some() {
                    initial(&res_candidates[i])
                } else {
                    initial(&base_candidates[i])
                },
                chain_thresholds: None,
                marginal: [0.0; 2],
            })
            .collect(),
        cost: config.cost.clone(),
        epsilon,
        diffusion: config.diffusion,
        seed: config.seed,
    };

    if config.cutoff_source == CutoffSource::Benchmark {
        return Ok(compiled);
    }

    let spec = GridSpec::default();
    let bin_thresholds = bin_thresholds(structure, spec);

    for _round in 0..MAX_ROUNDS {
        let hists = estimate_histograms(&compiled, &slot_of, needed.len(), spec);
        let tables: Vec<GainTable> = hists
            .slots
            .iter()
            .map(|h| GainTable::new(h, &hists.theta_trials, spec))
            .collect();
        let gain = |k: u32, s: f64| -> f64 {
            let slot = slot_of[k as usize].expect("needed prefix length");
            tables[slot].gain(structure, &bin_thresholds, s)
        };

        let mut max_change = 0.0f64;
        for i in 0..horizon {
            let new_base = solve_bands(config, structure, &base_candidates[i], &gain, &tables, &slot_of);
            let new_res = if block.is_some() {
                solve_bands(config, structure, &res_candidates[i], &gain, &tables, &slot_of)
            } else {
                new_base.clone()
            };
            max_change = max_change
                .max(band_distance(&compiled.agents[i].base, &new_base))
                .max(band_distance(&compiled.agents[i].restricted, &new_res));
            compiled.agents[i].base = new_base;
            compiled.agents[i].restricted = new_res;
        }
        if max_change < BAND_TOL {
            break;
        }
    }
    Ok(compiled)
}

/// Posterior-threshold signal per log-odds bin; descending over bins.
fn bin_thresholds(structure: &SignalStructure, spec: GridSpec) -> Vec<f64> {
    let step = 2.0 * spec.half_width / (spec.bins - 1) as f64;
    (0..spec.bins)
        .map(|b| {
            let lam = -spec.half_width + step * b as f64;
            threshold_from_llr(structure, lam)
        })
        .collect()
}

/// Integer histograms of the prefix log-odds at the needed lengths.
struct Histograms {
    /// slots[slot][theta][bin]
    slots: Vec<[Vec<u64>; 2]>,
    theta_trials: [u64; 2],
}

impl Histograms {
    fn new(slots: usize, bins: usize) -> Histograms {
        Histograms {
            slots: (0..slots).map(|_| [vec![0; bins], vec![0; bins]]).collect(),
            theta_trials: [0; 2],
        }
    }

    fn merge(mut self, other: Histograms) -> Histograms {
        self.theta_trials[0] += other.theta_trials[0];
        self.theta_trials[1] += other.theta_trials[1];
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            for t in 0..2 {
                for (x, y) in a[t].iter_mut().zip(&b[t]) {
                    *x += y;
                }
            }
        }
        self
    }
}

struct HistCapture<'a> {
    slot_of: &'a [Option<usize>],
    hists: Histograms,
    spec: GridSpec,
    theta: Theta,
}

impl TrialCapture for HistCapture<'_> {
    fn theta(&mut self, theta: Theta) {
        self.theta = theta;
        self.hists.theta_trials[theta.bit() as usize] += 1;
    }

    fn lambda(&mut self, k: u32, lambda: f64, theta: Theta) {
        if let Some(slot) = self.slot_of[k as usize] {
            let step = 2.0 * self.spec.half_width / (self.spec.bins - 1) as f64;
            let pos = (lambda + self.spec.half_width) / step;
            let bin = (pos.round().max(0.0) as usize).min(self.spec.bins - 1);
            self.hists.slots[slot][theta.bit() as usize][bin] += 1;
        }
    }
}

fn estimate_histograms(
    compiled: &Compiled,
    slot_of: &[Option<usize>],
    slots: usize,
    spec: GridSpec,
) -> Histograms {
    (0..EST_TRIALS)
        .into_par_iter()
        .fold(
            || HistCapture {
                slot_of,
                hists: Histograms::new(slots, spec.bins),
                spec,
                theta: Theta::Zero,
            },
            |mut cap, trial| {
                // the same streams every round: common random numbers
                // make the band update a deterministic self-map
                step_trial(compiled, PHASE_ESTIMATE, 0, trial, &mut cap);
                cap
            },
        )
        .map(|cap| cap.hists)
        .reduce(|| Histograms::new(slots, spec.bins), Histograms::merge)
}

/// Normalized per-state masses with cumulative sums in ascending
/// log-odds order (which is descending threshold order).
struct GainTable {
    cum0: Vec<f64>,
    cum1: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
}

impl GainTable {
    fn new(hist: &[Vec<u64>; 2], theta_trials: &[u64; 2], spec: GridSpec) -> GainTable {
        let n0 = theta_trials[0].max(1) as f64;
        let n1 = theta_trials[1].max(1) as f64;
        let w0: Vec<f64> = hist[0].iter().map(|&c| c as f64 / n0).collect();
        let w1: Vec<f64> = hist[1].iter().map(|&c| c as f64 / n1).collect();
        let mut cum0 = vec![0.0; spec.bins + 1];
        let mut cum1 = vec![0.0; spec.bins + 1];
        for b in 0..spec.bins {
            cum0[b + 1] = cum0[b] + w0[b];
            cum1[b + 1] = cum1[b] + w1[b];
        }
        GainTable { cum0, cum1, w0, w1 }
    }

    /// Expected gain from observing this prefix at signal s >= 0.
    fn gain(&self, structure: &SignalStructure, thresholds: &[f64], s: f64) -> f64 {
        let f0 = structure.pdf_unchecked(Theta::Zero, s);
        let f1 = structure.pdf_unchecked(Theta::One, s);
        let idx = thresholds.partition_point(|&t| t >= s);
        (f0 * self.cum0[idx] - f1 * self.cum1[idx]) / (f0 + f1)
    }

    /// Ex-ante probability of acting correctly after observing this
    /// prefix (observation-first timing).
    fn observation_value(&self, structure: &SignalStructure, thresholds: &[f64]) -> f64 {
        let mut v = 0.0;
        for ((&w0, &w1), &t) in self.w0.iter().zip(&self.w1).zip(thresholds) {
            if w0 == 0.0 && w1 == 0.0 {
                continue;
            }
            v += 0.5 * w0 * structure.cdf_unchecked(Theta::Zero, t)
                + 0.5 * w1 * (1.0 - structure.cdf_unchecked(Theta::One, t));
        }
        v
    }
}

fn solve_bands(
    config: &ScenarioConfig,
    structure: &SignalStructure,
    candidates: &[u32],
    gain: &dyn Fn(u32, f64) -> f64,
    tables: &[GainTable],
    slot_of: &[Option<usize>],
) -> Behavior {
    if candidates.len() <= 1 {
        return Behavior::never();
    }
    match config.timing {
        Timing::SignalFirst => signal_first_bands(&config.cost, candidates, gain),
        Timing::ObservationFirst => {
            // decided before the signal: pick the count with the best
            // ex-ante value net of cost, observe iff it beats acting on
            // the signal alone
            let spec = GridSpec::default();
            let thresholds = bin_thresholds(structure, spec);
            let signal_only = structure.cdf_unchecked(Theta::Zero, 0.0);
            let mut best: Option<(f64, u32)> = None;
            for &m in candidates.iter().filter(|&&m| m > 0) {
                let slot = slot_of[m as usize].expect("needed prefix length");
                let v = tables[slot].observation_value(structure, &thresholds) - config.cost.cost(m);
                if best.map(|(bv, _)| v >= bv).unwrap_or(true) {
                    best = Some((v, m));
                }
            }
            match best {
                Some((v, m)) if v >= signal_only => Behavior::single(1.0, m),
                _ => Behavior::never(),
            }
        }
    }
}

/// Bands from the per-count value functions v_m(s) = gain_m(s) - c(m):
/// scan a signal grid for the argmax (ties resolve to more
/// observation), force monotonicity, then refine each switch point by
/// bisection on the pairwise difference.
fn signal_first_bands(
    cost: &CostModel,
    candidates: &[u32],
    gain: &dyn Fn(u32, f64) -> f64,
) -> Behavior {
    let value = |m: u32, s: f64| -> f64 {
        if m == 0 {
            0.0
        } else {
            gain(m, s) - cost.cost(m)
        }
    };
    let hi = 1.0 - 1e-13;
    let pts: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| hi * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let best_at = |s: f64| -> u32 {
        let mut best = 0u32;
        let mut best_v = 0.0f64;
        for &m in candidates {
            let v = value(m, s);
            if v >= best_v {
                best_v = v;
                best = m;
            }
        }
        best
    };
    let mut choice: Vec<u32> = pts.iter().map(|&s| best_at(s)).collect();
    // optimal observation counts shrink with signal strength; clip
    // estimation wiggles to keep the bands nested
    for i in 1..choice.len() {
        choice[i] = choice[i].min(choice[i - 1]);
    }

    let mut bands = Vec::new();
    let mut i = 0;
    while i < choice.len() {
        let m = choice[i];
        let mut j = i;
        while j + 1 < choice.len() && choice[j + 1] == m {
            j += 1;
        }
        if m > 0 {
            let upto = if j + 1 == choice.len() {
                1.0
            } else {
                // refine between the last s preferring m and the first
                // preferring the next (smaller) count
                let m_next = choice[j + 1];
                let d = |s: f64| value(m, s) - value(m_next, s);
                crate::signals::bisect(pts[j], pts[j + 1], d)
            };
            bands.push(Band { upto, count: m });
        }
        i = j + 1;
    }
    // pushed in ascending-s order: ascending upto, descending count
    Behavior { bands }
}

fn band_distance(a: &Behavior, b: &Behavior) -> f64 {
    let boundary = |behavior: &Behavior, count: u32| -> f64 {
        behavior
            .bands
            .iter()
            .find(|band| band.count == count)
            .map(|band| band.upto)
            .unwrap_or(0.0)
    };
    let mut counts: Vec<u32> = a.bands.iter().chain(&b.bands).map(|band| band.count).collect();
    counts.sort_unstable();
    counts.dedup();
    counts
        .into_iter()
        .map(|c| (boundary(a, c) - boundary(b, c)).abs())
        .fold(0.0, f64::max)
}
