//! Exact Bayesian machinery over cutoff strategy profiles.
//!
//! An agent's strategy is summarized by an observation cutoff (observe
//! iff |s| < cutoff) and the set she observes when she does. Histories
//! whose agents observe nested (prefix-closed) sets admit an exact
//! likelihood factorization: the probability of an action sequence given
//! the state is a product of per-agent action probabilities, each
//! obtained by integrating the agent's signal density over the regions
//! cut out by her cutoff and her posterior-threshold signal.
//!
//! Products of many factors are carried in log space throughout, so
//! histories with hundreds of agents do not underflow.

use crate::signals::{SignalError, SignalStructure, Theta, ThresholdSignal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("history is not covered by nested observation sets: {0}")]
    NonNested(String),
    #[error("unsupported strategy topology: {0}")]
    UnsupportedPolicy(String),
    #[error("history has zero likelihood under both states")]
    ImpossibleHistory,
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("operation requires strong private beliefs")]
    Regime,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// What an agent observes when she pays the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservedSet {
    /// Observes nobody (zero capacity).
    Empty,
    /// Observes agents 1..=k.
    Prefix(u32),
    /// Observes the single agent with this index.
    Single(u32),
}

/// One agent's strategy: signal cutoff plus observation target.
/// A cutoff of 0 means she never observes.
#[derive(Debug, Clone, Copy)]
pub struct AgentStrategy {
    pub cutoff: f64,
    pub observed: ObservedSet,
}

/// Frozen strategy profile for agents 1..=N. All likelihood evaluation
/// conditions on this object; it never changes after construction.
#[derive(Debug, Clone)]
pub struct StrategyProfile {
    agents: Vec<AgentStrategy>,
}

impl StrategyProfile {
    pub fn new(agents: Vec<AgentStrategy>) -> Result<StrategyProfile, BeliefError> {
        for (i, a) in agents.iter().enumerate() {
            let n = (i + 1) as u32;
            if !(0.0..=1.0).contains(&a.cutoff) {
                return Err(BeliefError::InvalidArgument(format!(
                    "agent {n} cutoff {} outside [0,1]",
                    a.cutoff
                )));
            }
            match a.observed {
                ObservedSet::Empty => {}
                ObservedSet::Prefix(k) => {
                    if k >= n {
                        return Err(BeliefError::InvalidArgument(format!(
                            "agent {n} cannot observe prefix of length {k}"
                        )));
                    }
                }
                ObservedSet::Single(m) => {
                    if m == 0 || m >= n {
                        return Err(BeliefError::InvalidArgument(format!(
                            "agent {n} cannot observe agent {m}"
                        )));
                    }
                }
            }
        }
        Ok(StrategyProfile { agents })
    }

    /// Line profile: agent n >= 2 observes her immediate predecessor.
    pub fn line(cutoffs: &[f64]) -> Result<StrategyProfile, BeliefError> {
        let agents = cutoffs
            .iter()
            .enumerate()
            .map(|(i, &cutoff)| AgentStrategy {
                cutoff: if i == 0 { 0.0 } else { cutoff },
                observed: if i == 0 {
                    ObservedSet::Empty
                } else {
                    ObservedSet::Single(i as u32)
                },
            })
            .collect();
        StrategyProfile::new(agents)
    }

    /// First-k profile: agent n observes agents 1..=k_n.
    pub fn first_k(ks: &[u32], cutoffs: &[f64]) -> Result<StrategyProfile, BeliefError> {
        if ks.len() != cutoffs.len() {
            return Err(BeliefError::InvalidArgument(
                "prefix lengths and cutoffs must align".into(),
            ));
        }
        let agents = ks
            .iter()
            .zip(cutoffs)
            .map(|(&k, &cutoff)| AgentStrategy {
                cutoff: if k == 0 { 0.0 } else { cutoff },
                observed: if k == 0 {
                    ObservedSet::Empty
                } else {
                    ObservedSet::Prefix(k)
                },
            })
            .collect();
        StrategyProfile::new(agents)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Strategy of agent n (1-based).
    pub fn agent(&self, n: u32) -> &AgentStrategy {
        &self.agents[(n - 1) as usize]
    }
}

/// Ordered action sequence, one entry per agent, indices strictly
/// increasing.
#[derive(Debug, Clone, Default)]
pub struct ActionHistory {
    entries: Vec<(u32, u8)>,
}

impl ActionHistory {
    pub fn new(entries: Vec<(u32, u8)>) -> Result<ActionHistory, BeliefError> {
        let mut prev = 0u32;
        for &(n, a) in &entries {
            if n == 0 || n <= prev {
                return Err(BeliefError::InvalidHistory(format!(
                    "agent indices must be strictly increasing, saw {n} after {prev}"
                )));
            }
            if a > 1 {
                return Err(BeliefError::InvalidHistory(format!("action {a} is not binary")));
            }
            prev = n;
        }
        Ok(ActionHistory { entries })
    }

    pub fn empty() -> ActionHistory {
        ActionHistory { entries: Vec::new() }
    }

    /// Full prefix of agents 1..=k from a bit pattern (bit i = action of
    /// agent i+1). Handy for enumeration.
    pub fn from_bits(k: u32, bits: u64) -> ActionHistory {
        ActionHistory {
            entries: (1..=k).map(|n| (n, ((bits >> (n - 1)) & 1) as u8)).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, u8)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-agent action probability given the threshold the agent applies
/// inside her observation band: P(a = 1 | theta) with the band
/// [-cutoff, cutoff] acting on the posterior threshold `t` and the sign
/// rule outside the band. Collapses to 1 - F_theta(clamp(t)).
pub(crate) fn action_one_prob(
    structure: &SignalStructure,
    state: Theta,
    cutoff: f64,
    t: f64,
) -> f64 {
    let clamped = t.clamp(-cutoff, cutoff);
    1.0 - structure.cdf_unchecked(state, clamped)
}

/// Engine caching forward marginals for a frozen profile. Pure reads
/// after construction; share freely across threads.
pub struct LikelihoodEngine<'a> {
    profile: &'a StrategyProfile,
    structure: &'a SignalStructure,
    /// marginals[n-1][theta] = P(a_n = 1 | theta), present for agents on
    /// Empty/Single chains (the ones whose marginals other agents need).
    marginals: Vec<Option<[f64; 2]>>,
}

/// Cap on prefix length for marginal computation by enumeration.
const MARGINAL_ENUM_CAP: u32 = 16;

impl<'a> LikelihoodEngine<'a> {
    pub fn new(
        profile: &'a StrategyProfile,
        structure: &'a SignalStructure,
    ) -> Result<LikelihoodEngine<'a>, BeliefError> {
        let mut engine = LikelihoodEngine {
            profile,
            structure,
            marginals: vec![None; profile.len()],
        };
        // marginals are needed for every agent some chain link points
        // at; Empty/Single marginals are cheap and always kept, prefix
        // marginals are enumerated only on demand
        let targeted: Vec<bool> = {
            let mut t = vec![false; profile.len()];
            for a in &profile.agents {
                if let ObservedSet::Single(m) = a.observed {
                    t[(m - 1) as usize] = true;
                }
            }
            t
        };
        for n in 1..=profile.len() as u32 {
            engine.compute_marginal(n, targeted[(n - 1) as usize])?;
        }
        Ok(engine)
    }

    fn compute_marginal(&mut self, n: u32, targeted: bool) -> Result<(), BeliefError> {
        let strat = self.profile.agent(n);
        let m = match strat.observed {
            ObservedSet::Empty => {
                let q = |theta| 1.0 - self.structure.cdf_unchecked(theta, 0.0);
                [q(Theta::Zero), q(Theta::One)]
            }
            ObservedSet::Single(target) => {
                let tm = self.marginals[(target - 1) as usize].ok_or_else(|| {
                    BeliefError::UnsupportedPolicy(format!(
                        "agent {n} observes agent {target} whose marginal is unavailable"
                    ))
                })?;
                let mut q = [0.0; 2];
                for a in [0u8, 1u8] {
                    let w = [
                        if a == 1 { tm[0] } else { 1.0 - tm[0] },
                        if a == 1 { tm[1] } else { 1.0 - tm[1] },
                    ];
                    let t = self.structure.invert_llr(-(w[1] / w[0]).ln()).value();
                    q[0] += w[0] * action_one_prob(self.structure, Theta::Zero, strat.cutoff, t);
                    q[1] += w[1] * action_one_prob(self.structure, Theta::One, strat.cutoff, t);
                }
                q
            }
            ObservedSet::Prefix(k) => {
                if !targeted {
                    return Ok(());
                }
                if k > MARGINAL_ENUM_CAP {
                    return Err(BeliefError::UnsupportedPolicy(format!(
                        "marginal of agent {n} requires enumerating 2^{k} prefixes"
                    )));
                }
                let mut q = [0.0; 2];
                for bits in 0..(1u64 << k) {
                    let h = ActionHistory::from_bits(k, bits);
                    let ll = self.history_log_likelihoods(&h)?;
                    let t = self.threshold_signal_from_llr(ll[1] - ll[0]).value();
                    q[0] += ll[0].exp() * action_one_prob(self.structure, Theta::Zero, strat.cutoff, t);
                    q[1] += ll[1].exp() * action_one_prob(self.structure, Theta::One, strat.cutoff, t);
                }
                q
            }
        };
        self.marginals[(n - 1) as usize] = Some(m);
        Ok(())
    }

    /// P(a_n = 1 | theta = 0), P(a_n = 1 | theta = 1).
    pub fn action_marginal(&self, n: u32) -> Option<[f64; 2]> {
        self.marginals[(n - 1) as usize]
    }

    /// Log likelihoods [ln P(h|0), ln P(h|1)] for a history whose agents
    /// observe sets nested inside the listed prefix.
    pub fn history_log_likelihoods(&self, history: &ActionHistory) -> Result<[f64; 2], BeliefError> {
        let entries = history.entries();
        let mut log_lik = [0.0f64; 2];
        // running log likelihood of the listed prefix after each entry,
        // for Prefix observers further down the list
        let mut partials: Vec<[f64; 2]> = Vec::with_capacity(entries.len());
        for (pos, &(n, action)) in entries.iter().enumerate() {
            let strat = self.profile.agent(n);
            let t = match strat.observed {
                ObservedSet::Empty => 0.0,
                ObservedSet::Single(target) => {
                    let target_pos = entries[..pos].iter().position(|&(m, _)| m == target);
                    let Some(tp) = target_pos else {
                        return Err(BeliefError::NonNested(format!(
                            "agent {n} observes agent {target}, absent from the preceding history"
                        )));
                    };
                    let a_t = entries[tp].1;
                    let tm = self.marginals[(target - 1) as usize].ok_or_else(|| {
                        BeliefError::UnsupportedPolicy(format!(
                            "no marginal available for observed agent {target}"
                        ))
                    })?;
                    let w = [
                        if a_t == 1 { tm[0] } else { 1.0 - tm[0] },
                        if a_t == 1 { tm[1] } else { 1.0 - tm[1] },
                    ];
                    self.threshold_signal_from_llr(w[1].ln() - w[0].ln()).value()
                }
                ObservedSet::Prefix(k) => {
                    // the first k listed entries must be exactly agents 1..=k
                    if pos < k as usize
                        || entries[..k as usize]
                            .iter()
                            .enumerate()
                            .any(|(i, &(m, _))| m != (i + 1) as u32)
                    {
                        return Err(BeliefError::NonNested(format!(
                            "agent {n} observes the prefix 1..={k}, which the history does not list first"
                        )));
                    }
                    let ll = if k == 0 { [0.0; 2] } else { partials[(k - 1) as usize] };
                    self.threshold_signal_from_llr(ll[1] - ll[0]).value()
                }
            };
            for (theta, ll) in [Theta::Zero, Theta::One].into_iter().zip(log_lik.iter_mut()) {
                let p1 = action_one_prob(self.structure, theta, strat.cutoff, t);
                let factor = if action == 1 { p1 } else { 1.0 - p1 };
                *ll += factor.ln();
            }
            partials.push(log_lik);
        }
        Ok(log_lik)
    }

    /// P(history | state), the product of per-agent action probabilities.
    pub fn history_likelihood(&self, history: &ActionHistory, state: Theta) -> Result<f64, BeliefError> {
        let ll = self.history_log_likelihoods(history)?;
        Ok(ll[state.bit() as usize].exp())
    }

    /// Posterior probability of state 1 given a private signal and an
    /// observed history. Empty history reduces to the private belief.
    pub fn posterior(&self, s: f64, history: &ActionHistory) -> Result<f64, BeliefError> {
        let ll = self.history_log_likelihoods(history)?;
        if ll[0] == f64::NEG_INFINITY && ll[1] == f64::NEG_INFINITY {
            return Err(BeliefError::ImpossibleHistory);
        }
        let signal_llr = self.structure.signal_llr(s)?;
        let total = (ll[1] - ll[0]) + signal_llr;
        Ok(1.0 / (1.0 + (-total).exp()))
    }

    /// The signal at which the posterior equals 1/2 given the history,
    /// or a boundary marker when the history overwhelms every signal.
    pub fn threshold_signal(&self, history: &ActionHistory) -> Result<ThresholdSignal, BeliefError> {
        let ll = self.history_log_likelihoods(history)?;
        Ok(self.threshold_signal_from_llr(ll[1] - ll[0]))
    }

    fn threshold_signal_from_llr(&self, history_llr: f64) -> ThresholdSignal {
        if history_llr == 0.0 {
            return ThresholdSignal::Interior(0.0);
        }
        if history_llr == f64::INFINITY {
            return ThresholdSignal::Boundary(-1.0);
        }
        if history_llr == f64::NEG_INFINITY {
            return ThresholdSignal::Boundary(1.0);
        }
        self.structure.invert_llr(-history_llr)
    }
}

/// A distribution over observable histories: per atom the probability
/// under each state and the posterior-threshold signal the history
/// induces.
#[derive(Debug, Clone)]
pub struct HistoryAtom {
    pub w0: f64,
    pub w1: f64,
    pub threshold: ThresholdSignal,
}

#[derive(Debug, Clone)]
pub struct HistoryDistribution {
    pub atoms: Vec<HistoryAtom>,
}

impl HistoryDistribution {
    /// One observed predecessor whose action is correct with
    /// probability `p` in either state (symmetric structures).
    pub fn single_predecessor(structure: &SignalStructure, p: f64) -> HistoryDistribution {
        let atom = |w0: f64, w1: f64| HistoryAtom {
            w0,
            w1,
            threshold: structure.invert_llr((w0 / w1).ln()),
        };
        HistoryDistribution {
            // action 0: right when theta = 0; action 1: mirrored
            atoms: vec![atom(p, 1.0 - p), atom(1.0 - p, p)],
        }
    }

    /// Enumerates the 2^k histories of the profile's first k agents.
    pub fn enumerate_prefix(engine: &LikelihoodEngine, k: u32) -> Result<HistoryDistribution, BeliefError> {
        if k > MARGINAL_ENUM_CAP {
            return Err(BeliefError::InvalidArgument(format!(
                "prefix enumeration capped at 2^{MARGINAL_ENUM_CAP}, requested {k}"
            )));
        }
        let mut atoms = Vec::with_capacity(1 << k);
        for bits in 0..(1u64 << k) {
            let h = ActionHistory::from_bits(k, bits);
            let ll = engine.history_log_likelihoods(&h)?;
            atoms.push(HistoryAtom {
                w0: ll[0].exp(),
                w1: ll[1].exp(),
                threshold: engine.threshold_signal(&h)?,
            });
        }
        Ok(HistoryDistribution { atoms })
    }
}

impl HistoryAtom {
    fn flips_to_zero(&self, s: f64) -> bool {
        // action 0 after observing iff s <= t; tie at the threshold
        // resolves to action 0
        self.threshold.value() >= s
    }
}

/// Expected gain, at signal s >= 0, from observing a neighborhood with
/// the given history distribution instead of following the signal:
/// sum over histories that overturn the signal's action of
/// (f0(s) w0 - f1(s) w1) / (f0(s) + f1(s)). Non-negative under MLRP and
/// weakly decreasing in s. Negative s reflects by symmetry.
pub fn observation_gain(
    structure: &SignalStructure,
    s: f64,
    dist: &HistoryDistribution,
) -> Result<f64, BeliefError> {
    if !(0.0..1.0).contains(&s) {
        return Err(BeliefError::InvalidArgument(format!(
            "gain is evaluated on non-negative signals, got {s}"
        )));
    }
    let f0 = structure.pdf(Theta::Zero, s)?;
    let f1 = structure.pdf(Theta::One, s)?;
    let mut flip = 0.0;
    for atom in &dist.atoms {
        if atom.flips_to_zero(s) {
            flip += f0 * atom.w0 - f1 * atom.w1;
        }
    }
    Ok(flip / (f0 + f1))
}

/// Number of consecutive contrary observations guaranteed to drag a
/// realized belief r below r_hat: the smallest m with r * q^m <= r_hat
/// where q = 1 / (r + (1-r) F0(s*)/F1(s*)). Requires strong beliefs.
pub fn contraction_steps(
    r: f64,
    r_hat: f64,
    structure: &SignalStructure,
    cost: f64,
) -> Result<u32, BeliefError> {
    if !(0.0 < r_hat && r_hat < r && r < 1.0) {
        return Err(BeliefError::InvalidArgument(format!(
            "need 0 < r_hat < r < 1, got r = {r}, r_hat = {r_hat}"
        )));
    }
    let regime = structure.classify(cost)?;
    let Some(s_star) = regime.s_star() else {
        return Err(BeliefError::Regime);
    };
    let ratio = structure.cdf_unchecked(Theta::Zero, s_star) / structure.cdf_unchecked(Theta::One, s_star);
    let q = 1.0 / (r + (1.0 - r) * ratio);
    debug_assert!(q < 1.0);
    let mut value = r;
    let mut steps = 0u32;
    while value > r_hat {
        value *= q;
        steps += 1;
        if steps > 100_000_000 {
            return Err(BeliefError::InvalidArgument(
                "contraction did not reach the target".into(),
            ));
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SignalStructure;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    fn lone_agent() -> StrategyProfile {
        StrategyProfile::line(&[0.0]).unwrap()
    }

    #[test]
    fn single_agent_history_likelihood() {
        let structure = SignalStructure::linear_unbounded();
        let profile = lone_agent();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let h = ActionHistory::new(vec![(1, 0)]).unwrap();
        close(engine.history_likelihood(&h, Theta::Zero).unwrap(), 0.75, 1e-14);
        close(engine.history_likelihood(&h, Theta::One).unwrap(), 0.25, 1e-14);
    }

    #[test]
    fn two_agent_line_likelihood_factorizes() {
        let structure = SignalStructure::linear_unbounded();
        let profile = StrategyProfile::line(&[0.0, 0.3]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let h = ActionHistory::new(vec![(1, 0), (2, 0)]).unwrap();
        // agent 2 follows the observed 0 inside her band, so the second
        // factor is F0(-0.3) + (F0(0.3) - F0(-0.3)) given theta = 0
        let f0 = |s: f64| structure.cdf_unchecked(Theta::Zero, s);
        let expected = f0(0.0) * (f0(-0.3) + (f0(0.3) - f0(-0.3)) * 1.0);
        close(engine.history_likelihood(&h, Theta::Zero).unwrap(), expected, 1e-14);
    }

    #[test]
    fn likelihoods_normalize_over_all_histories() {
        let structure = SignalStructure::linear_unbounded();
        for profile in [
            StrategyProfile::line(&[0.0, 0.3, 0.35, 0.4, 0.42, 0.45, 0.46, 0.47, 0.5, 0.5]).unwrap(),
            StrategyProfile::first_k(
                &[0, 1, 2, 2, 3, 3, 3, 4, 4, 5],
                &[0.0, 0.3, 0.4, 0.4, 0.5, 0.5, 0.5, 0.6, 0.6, 0.6],
            )
            .unwrap(),
        ] {
            let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
            for theta in [Theta::Zero, Theta::One] {
                let total: f64 = (0..(1u64 << 10))
                    .map(|bits| {
                        engine
                            .history_likelihood(&ActionHistory::from_bits(10, bits), theta)
                            .unwrap()
                    })
                    .sum();
                close(total, 1.0, 1e-10);
            }
        }
    }

    #[test]
    fn posterior_examples() {
        let structure = SignalStructure::linear_unbounded();
        let profile = lone_agent();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        close(engine.posterior(0.0, &ActionHistory::empty()).unwrap(), 0.5, 1e-14);
        let h = ActionHistory::new(vec![(1, 1)]).unwrap();
        close(engine.posterior(0.0, &h).unwrap(), 0.75, 1e-14);
        // private belief 0.9 at s = 0.8; odds multiply to 27:1
        close(engine.posterior(0.8, &h).unwrap(), 27.0 / 28.0, 1e-14);
    }

    #[test]
    fn threshold_examples() {
        let structure = SignalStructure::linear_unbounded();
        let profile = lone_agent();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        assert_eq!(
            engine.threshold_signal(&ActionHistory::empty()).unwrap(),
            ThresholdSignal::Interior(0.0)
        );
        // one agent playing 1 has likelihood ratio 3
        let h = ActionHistory::new(vec![(1, 1)]).unwrap();
        match engine.threshold_signal(&h).unwrap() {
            ThresholdSignal::Interior(t) => close(t, -0.5, 1e-12),
            other => panic!("expected interior threshold, got {other:?}"),
        }
        // verify the defining property: posterior at t is 1/2
        close(engine.posterior(-0.5, &h).unwrap(), 0.5, 1e-12);
    }

    #[test]
    fn threshold_cascades_on_bounded_beliefs() {
        let structure = SignalStructure::bounded_linear(0.2).unwrap();
        let profile = StrategyProfile::line(&[0.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        // enough aligned actions push the ratio beyond 3/2, the edge of
        // the signal likelihood-ratio range
        let h = ActionHistory::new(vec![(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]).unwrap();
        let ll = engine.history_log_likelihoods(&h).unwrap();
        assert!((ll[1] - ll[0]).exp() > 1.5);
        assert_eq!(engine.threshold_signal(&h).unwrap(), ThresholdSignal::Boundary(-1.0));
    }

    #[test]
    fn non_nested_history_rejected() {
        let structure = SignalStructure::linear_unbounded();
        let profile = StrategyProfile::line(&[0.0, 0.3, 0.3]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        // agent 3 observes agent 2, who is missing from the history
        let h = ActionHistory::new(vec![(1, 0), (3, 0)]).unwrap();
        assert!(matches!(
            engine.history_likelihood(&h, Theta::Zero),
            Err(BeliefError::NonNested(_))
        ));
    }

    #[test]
    fn observation_gain_follows_predecessor_identity() {
        let structure = SignalStructure::linear_unbounded();
        let dist = HistoryDistribution::single_predecessor(&structure, 0.75);
        close(observation_gain(&structure, 0.0, &dist).unwrap(), 0.25, 1e-14);
        // private belief 0.65 at s = 0.3: gain is p - belief
        close(observation_gain(&structure, 0.3, &dist).unwrap(), 0.10, 1e-14);
        // gain vanishes as the signal overwhelms the observation
        let near_edge = observation_gain(&structure, 0.999, &dist).unwrap();
        assert!(near_edge.abs() < 1e-3);
        assert!(observation_gain(&structure, -0.2, &dist).is_err());
    }

    #[test]
    fn observation_gain_decreasing_in_signal() {
        let structure = SignalStructure::linear_unbounded();
        let profile = StrategyProfile::line(&[0.0, 0.3, 0.35]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let dist = HistoryDistribution::enumerate_prefix(&engine, 3).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let s = i as f64 / 100.0;
            let g = observation_gain(&structure, s, &dist).unwrap();
            assert!(g <= prev + 1e-12, "gain rose at s = {s}");
            assert!(g >= -1e-12);
            prev = g;
        }
    }

    #[test]
    fn correct_probability_increasing_in_signal_given_observation() {
        // monotone learning probability on the observing side
        let structure = SignalStructure::linear_unbounded();
        let profile = StrategyProfile::line(&[0.0, 0.3, 0.35, 0.4]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let dist = HistoryDistribution::enumerate_prefix(&engine, 4).unwrap();
        let mut prev = 0.0;
        for i in 0..=100 {
            let s = i as f64 / 101.0;
            let f0 = structure.pdf_unchecked(Theta::Zero, s);
            let f1 = structure.pdf_unchecked(Theta::One, s);
            let mut correct = 0.0;
            for atom in &dist.atoms {
                if atom.flips_to_zero(s) {
                    correct += f0 * atom.w0;
                } else {
                    correct += f1 * atom.w1;
                }
            }
            let p = correct / (f0 + f1);
            assert!(p >= prev - 1e-12, "correctness dipped at s = {s}");
            prev = p;
        }
    }

    #[test]
    fn contraction_step_counts() {
        let structure = SignalStructure::linear_unbounded();
        assert_eq!(contraction_steps(0.5, 0.1, &structure, 0.1).unwrap(), 16);
        assert_eq!(contraction_steps(0.5, 0.46, &structure, 0.1).unwrap(), 1);
        // exact geometric rate q = 45/46 gives 100 steps from 0.9 to 0.1
        assert_eq!(contraction_steps(0.9, 0.1, &structure, 0.1).unwrap(), 100);
        assert!(contraction_steps(0.1, 0.5, &structure, 0.1).is_err());
        // weak regime refuses
        let weak = SignalStructure::bounded_linear(0.1).unwrap();
        assert!(matches!(
            contraction_steps(0.5, 0.1, &weak, 0.4),
            Err(BeliefError::Regime)
        ));
    }

    #[test]
    fn contraction_single_step_bound_on_enumerated_histories() {
        // appending one contrary action satisfies the per-step ratio bound
        let structure = SignalStructure::linear_unbounded();
        let cutoffs = [0.0, 0.3, 0.35, 0.4, 0.45];
        let profile = StrategyProfile::line(&cutoffs).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let s = 0.25;
        for k in 1..4u32 {
            for bits in 0..(1u64 << k) {
                let h = ActionHistory::from_bits(k, bits);
                let r = engine.posterior(s, &h).unwrap();
                let mut extended: Vec<(u32, u8)> = h.entries().to_vec();
                extended.push((k + 1, 0));
                let h1 = ActionHistory::new(extended).unwrap();
                let r1 = engine.posterior(s, &h1).unwrap();
                let cutoff = cutoffs[k as usize];
                let bound = r + (1.0 - r) * structure.cdf_unchecked(Theta::Zero, cutoff)
                    / structure.cdf_unchecked(Theta::One, cutoff);
                assert!(
                    r / r1 >= bound - 1e-10,
                    "ratio {} below bound {} at k = {k}, bits = {bits}",
                    r / r1,
                    bound
                );
            }
        }
    }

    #[test]
    fn posterior_martingale_under_prior() {
        // E[posterior] over signal and history equals the prior 1/2;
        // quadrature over the signal, enumeration over histories
        let structure = SignalStructure::linear_unbounded();
        let profile = StrategyProfile::line(&[0.0, 0.3, 0.35]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let panels = 2048usize;
        let mut expectation = 0.0;
        for bits in 0..(1u64 << 3) {
            let h = ActionHistory::from_bits(3, bits);
            let ll = engine.history_log_likelihoods(&h).unwrap();
            for theta in [Theta::Zero, Theta::One] {
                let w = 0.5 * ll[theta.bit() as usize].exp();
                let mut integral = 0.0;
                for i in 0..panels {
                    let a = -1.0 + 2.0 * i as f64 / panels as f64;
                    let b = a + 2.0 / panels as f64;
                    let mid = 0.5 * (a + b);
                    let val = |s: f64| {
                        engine.posterior(s, &h).unwrap() * structure.pdf_unchecked(theta, s)
                    };
                    integral += (b - a) / 6.0
                        * (val(a + 1e-12) + 4.0 * val(mid) + val(b - 1e-12));
                }
                expectation += w * integral;
            }
        }
        close(expectation, 0.5, 1e-6);
    }

    #[test]
    fn wrong_state_confidence_mass_shrinks_with_prefix_length() {
        // mass of near-certain wrong beliefs under theta = 0, fixed signal
        let structure = SignalStructure::linear_unbounded();
        let cost = 0.1;
        let n = 12usize;
        let mut cutoffs = vec![0.0];
        // plausible interior cutoffs below s* = 0.8
        for i in 1..n {
            cutoffs.push(0.3 + 0.3 * (i as f64 / n as f64));
        }
        let ks: Vec<u32> = (0..n as u32).collect();
        let profile = StrategyProfile::first_k(&ks, &cutoffs).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let regime = structure.classify(cost).unwrap();
        let s = 0.2;
        assert!(s < regime.s_star().unwrap());
        let eps = 0.05;
        let mass = |k: u32| -> f64 {
            (0..(1u64 << k))
                .filter_map(|bits| {
                    let h = ActionHistory::from_bits(k, bits);
                    let r = engine.posterior(s, &h).unwrap();
                    (r > 1.0 - eps)
                        .then(|| engine.history_likelihood(&h, Theta::Zero).unwrap())
                })
                .sum()
        };
        let masses: Vec<f64> = (1..=n as u32).map(mass).collect();
        // the trend falls after the peak (pairwise-max smoothing absorbs
        // single-step wiggles) and the tail lands well below the peak
        let peak = masses.iter().cloned().fold(0.0, f64::max);
        let peak_at = masses.iter().position(|&m| m == peak).unwrap();
        let smoothed: Vec<f64> = masses[peak_at..]
            .windows(2)
            .map(|w| w[0].max(w[1]))
            .collect();
        for w in smoothed.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trend rose after the peak: {masses:?}");
        }
        assert!(masses[n - 1] <= 0.5 * peak.max(1e-12), "no contraction: {masses:?}");
    }
}
