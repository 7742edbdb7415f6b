//! Compiled scenarios and the per-trial stepping core.
//!
//! A scenario compiles into per-agent behaviors: nested bands over |s|
//! giving the number of actions observed at each signal strength, plus
//! whatever the Bayes factors of downstream observers need (predecessor
//! marginals for chains, running prefix log-likelihoods for first-k and
//! full-history policies). Stepping is allocation-free per agent and
//! draws a fixed number of uniforms per trial, so one counter-based
//! stream per trial reproduces bit-identically at any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signals::{SignalStructure, Theta};

use super::config::CostModel;

/// Observation bands over |s|, innermost first (ascending `upto`,
/// descending `count`). Empty means the agent never observes.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Behavior {
    pub bands: Vec<Band>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Band {
    pub upto: f64,
    pub count: u32,
}

impl Behavior {
    pub fn never() -> Behavior {
        Behavior { bands: Vec::new() }
    }

    pub fn single(upto: f64, count: u32) -> Behavior {
        if upto <= 0.0 || count == 0 {
            Behavior::never()
        } else {
            Behavior {
                bands: vec![Band { upto, count }],
            }
        }
    }

    /// Number of actions observed at this signal strength.
    pub fn decide(&self, abs_s: f64) -> u32 {
        for band in &self.bands {
            if abs_s < band.upto {
                return band.count;
            }
        }
        0
    }

    /// Outermost observation boundary.
    pub fn outer(&self) -> f64 {
        self.bands.last().map(|b| b.upto).unwrap_or(0.0)
    }

    pub fn observes(&self) -> bool {
        !self.bands.is_empty()
    }
}

/// P(a = 1 | theta) for a banded agent whose per-band posterior
/// thresholds are already known. Outside the outermost band the sign
/// rule applies.
pub(crate) fn banded_action_one_prob(
    structure: &SignalStructure,
    state: Theta,
    behavior: &Behavior,
    thresholds: &[f64],
) -> f64 {
    debug_assert_eq!(behavior.bands.len(), thresholds.len());
    let cdf = |s: f64| structure.cdf_unchecked(state, s);
    let mut p = 0.0;
    // intervals ascending: [-1, -outer) sign rule, mirrored bands, then
    // [outer, 1] sign rule; each contributes F(y) - F(clamp(t, x, y))
    let mut add = |x: f64, y: f64, t: f64| {
        if y > x {
            p += cdf(y) - cdf(t.clamp(x, y));
        }
    };
    let outer = behavior.outer();
    add(-1.0, -outer, 0.0);
    let mut lo = 0.0;
    for (band, &t) in behavior.bands.iter().zip(thresholds) {
        add(-band.upto, -lo, t);
        add(lo, band.upto, t);
        lo = band.upto;
    }
    add(outer, 1.0, 0.0);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Topology {
    /// Each observer watches one predecessor (line or star-free chain).
    Chain,
    /// Each observer watches a prefix 1..=k of the sequence.
    Prefix,
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledAgent {
    pub base: Behavior,
    pub restricted: Behavior,
    /// Chain topology: posterior-threshold signal after seeing the
    /// predecessor play 0 resp. 1, from her marginal.
    pub chain_thresholds: Option<[f64; 2]>,
    /// P(a_n = 1 | theta) under the compiled profile (chains).
    pub marginal: [f64; 2],
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub structure: SignalStructure,
    pub topology: Topology,
    pub agents: Vec<CompiledAgent>,
    pub cost: CostModel,
    /// Stochastic-block probability; 0 disables the block draw.
    pub epsilon: f64,
    pub diffusion: bool,
    pub seed: u64,
}

/// Phase tags partitioning the per-trial stream space.
pub(crate) const PHASE_MAIN: u64 = 0;
pub(crate) const PHASE_ESTIMATE: u64 = 1;

pub(crate) fn stream_id(phase: u64, round: u32, trial: u64) -> u64 {
    debug_assert!(trial < (1 << 40));
    (phase << 56) | ((round as u64) << 40) | trial
}

/// Observer of a single trial. Implementations aggregate counters,
/// build traces, or capture prefix log-odds for cutoff estimation.
pub(crate) trait TrialCapture {
    fn theta(&mut self, _theta: Theta) {}
    #[allow(clippy::too_many_arguments)]
    fn agent(
        &mut self,
        _n: u32,
        _signal: f64,
        _observed: u32,
        _action: u8,
        _correct: bool,
        _paid: f64,
        _restricted: bool,
    ) {
    }
    /// Prefix log-odds after agent k acted (prefix topology only).
    fn lambda(&mut self, _k: u32, _lambda: f64, _theta: Theta) {}
}

/// Runs one trial with the stream `(phase, round, trial)` keyed on the
/// scenario seed, reporting every step to the capture.
pub(crate) fn step_trial<C: TrialCapture>(
    c: &Compiled,
    phase: u64,
    round: u32,
    trial: u64,
    cap: &mut C,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    rng.set_stream(stream_id(phase, round, trial));
    let theta = if rng.gen::<f64>() < 0.5 { Theta::Zero } else { Theta::One };
    cap.theta(theta);

    match c.topology {
        Topology::Chain => step_chain(c, theta, &mut rng, cap),
        Topology::Prefix => step_prefix(c, theta, &mut rng, cap),
    }
}

fn step_chain<C: TrialCapture>(c: &Compiled, theta: Theta, rng: &mut ChaCha8Rng, cap: &mut C) {
    let structure = &c.structure;
    let mut prev_action = 0u8;
    // log-odds of the revealed chain under diffusion
    let mut chain_llr = 0.0f64;
    for (idx, agent) in c.agents.iter().enumerate() {
        let n = (idx + 1) as u32;
        let u = rng.gen::<f64>();
        let s = structure.sample_signal(theta, u);
        let m = agent.base.decide(s.abs());
        let threshold = if m == 0 {
            0.0
        } else if c.diffusion {
            threshold_from_llr(structure, chain_llr)
        } else {
            agent.chain_thresholds.expect("chain agent has thresholds")[prev_action as usize]
        };
        let action = u8::from(s > threshold);
        let paid = c.cost.cost(m);
        cap.agent(n, s, m, action, action == theta.bit(), paid, false);

        if c.diffusion {
            let sigma = agent.base.outer();
            let branch = |state: Theta| -> f64 {
                let cdf = |x: f64| structure.cdf_unchecked(state, x);
                if m == 0 {
                    // action reveals a signal beyond the cutoff
                    if action == 1 {
                        1.0 - cdf(sigma)
                    } else {
                        cdf(-sigma)
                    }
                } else {
                    let t = threshold.clamp(-sigma, sigma);
                    if action == 1 {
                        cdf(sigma) - cdf(t)
                    } else {
                        cdf(t) - cdf(-sigma)
                    }
                }
            };
            let inc = branch(Theta::One).ln() - branch(Theta::Zero).ln();
            chain_llr = if m == 0 { inc } else { chain_llr + inc };
        }
        prev_action = action;
    }
}

fn step_prefix<C: TrialCapture>(c: &Compiled, theta: Theta, rng: &mut ChaCha8Rng, cap: &mut C) {
    let structure = &c.structure;
    let horizon = c.agents.len();
    // running joint log-likelihood of the realized actions and the
    // log-odds snapshot after each agent
    let mut ell = [0.0f64; 2];
    let mut lambda_at = vec![0.0f64; horizon + 1];
    // per-agent scratch for band thresholds
    let mut base_thresholds: Vec<f64> = Vec::with_capacity(4);
    let mut res_thresholds: Vec<f64> = Vec::with_capacity(4);

    for (idx, agent) in c.agents.iter().enumerate() {
        let n = (idx + 1) as u32;
        let restricted = if c.epsilon > 0.0 {
            rng.gen::<f64>() < c.epsilon
        } else {
            false
        };
        let u = rng.gen::<f64>();
        let s = structure.sample_signal(theta, u);

        base_thresholds.clear();
        for band in &agent.base.bands {
            base_thresholds.push(threshold_from_llr(structure, lambda_at[band.count as usize]));
        }
        res_thresholds.clear();
        if c.epsilon > 0.0 {
            for band in &agent.restricted.bands {
                res_thresholds.push(threshold_from_llr(structure, lambda_at[band.count as usize]));
            }
        }

        let behavior = if restricted { &agent.restricted } else { &agent.base };
        let thresholds = if restricted { &res_thresholds } else { &base_thresholds };
        let m = behavior.decide(s.abs());
        let threshold = if m == 0 {
            0.0
        } else {
            let band = behavior.bands.iter().position(|b| s.abs() < b.upto).unwrap();
            thresholds[band]
        };
        let action = u8::from(s > threshold);
        let paid = c.cost.cost(m);
        cap.agent(n, s, m, action, action == theta.bit(), paid, restricted);

        // observers marginalize over her private branch
        for state in [Theta::Zero, Theta::One] {
            let mut p1 = banded_action_one_prob(structure, state, &agent.base, &base_thresholds);
            if c.epsilon > 0.0 {
                let p1r = banded_action_one_prob(structure, state, &agent.restricted, &res_thresholds);
                p1 = (1.0 - c.epsilon) * p1 + c.epsilon * p1r;
            }
            let factor = if action == 1 { p1 } else { 1.0 - p1 };
            ell[state.bit() as usize] += factor.ln();
        }
        lambda_at[n as usize] = ell[1] - ell[0];
        cap.lambda(n, lambda_at[n as usize], theta);
    }
}

/// The posterior-threshold signal for an observed set whose log
/// likelihood ratio is `llr`, as a plain signal value (cascades clamp
/// to the support edge).
pub(crate) fn threshold_from_llr(structure: &SignalStructure, llr: f64) -> f64 {
    if llr == 0.0 {
        0.0
    } else if llr == f64::INFINITY {
        -1.0
    } else if llr == f64::NEG_INFINITY {
        1.0
    } else {
        structure.invert_llr(-llr).value()
    }
}

/// Per-agent success counters; the exact integer sums make reduction
/// order irrelevant.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    pub trials: u64,
    pub correct: Vec<u64>,
    pub observed: Vec<u64>,
    pub observed_correct: Vec<u64>,
}

impl Tally {
    pub fn new(horizon: usize) -> Tally {
        Tally {
            trials: 0,
            correct: vec![0; horizon],
            observed: vec![0; horizon],
            observed_correct: vec![0; horizon],
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        for (a, b) in self.correct.iter_mut().zip(&other.correct) {
            *a += b;
        }
        for (a, b) in self.observed.iter_mut().zip(&other.observed) {
            *a += b;
        }
        for (a, b) in self.observed_correct.iter_mut().zip(&other.observed_correct) {
            *a += b;
        }
        self
    }
}

impl TrialCapture for Tally {
    fn agent(
        &mut self,
        n: u32,
        _signal: f64,
        observed: u32,
        _action: u8,
        correct: bool,
        _paid: f64,
        _restricted: bool,
    ) {
        let i = (n - 1) as usize;
        if correct {
            self.correct[i] += 1;
        }
        if observed > 0 {
            self.observed[i] += 1;
            if correct {
                self.observed_correct[i] += 1;
            }
        }
    }
}

/// Full record of one simulated trial.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub theta: Theta,
    pub agents: Vec<AgentRecord>,
}

#[derive(Debug, Clone)]
pub struct AgentRecord {
    pub signal: f64,
    /// Indices the agent directly observed (diffusion extends this with
    /// the transitively revealed chain).
    pub observed: Vec<u32>,
    pub observed_actions: Vec<u8>,
    pub action: u8,
    pub paid: f64,
    pub restricted: bool,
}

pub(crate) struct TraceCapture<'a> {
    compiled: &'a Compiled,
    pub trace: TrialTrace,
    counts: Vec<u32>,
}

impl<'a> TraceCapture<'a> {
    pub fn new(compiled: &'a Compiled) -> TraceCapture<'a> {
        TraceCapture {
            compiled,
            trace: TrialTrace {
                theta: Theta::Zero,
                agents: Vec::with_capacity(compiled.agents.len()),
            },
            counts: Vec::with_capacity(compiled.agents.len()),
        }
    }

    fn observed_set(&self, n: u32, count: u32) -> Vec<u32> {
        if count == 0 {
            return Vec::new();
        }
        match self.compiled.topology {
            Topology::Prefix => (1..=count).collect(),
            Topology::Chain => {
                let mut set = vec![n - 1];
                if self.compiled.diffusion {
                    // walk the revealed chain back to the last non-observer
                    let mut m = n - 1;
                    while m >= 2 && self.counts[(m - 1) as usize] > 0 {
                        m -= 1;
                        set.push(m);
                    }
                    set.reverse();
                }
                set
            }
        }
    }
}

impl TrialCapture for TraceCapture<'_> {
    fn theta(&mut self, theta: Theta) {
        self.trace.theta = theta;
    }

    fn agent(
        &mut self,
        n: u32,
        signal: f64,
        observed: u32,
        action: u8,
        _correct: bool,
        paid: f64,
        restricted: bool,
    ) {
        let set = self.observed_set(n, observed);
        let actions = set
            .iter()
            .map(|&m| self.trace.agents[(m - 1) as usize].action)
            .collect();
        self.counts.push(observed);
        self.trace.agents.push(AgentRecord {
            signal,
            observed: set,
            observed_actions: actions,
            action,
            paid,
            restricted,
        });
    }
}
