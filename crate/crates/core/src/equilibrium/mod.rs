//! Equilibrium cutoff sequences and limit learning benchmarks.
//!
//! Solvers for the canonical network shapes: the line (each observer
//! watches her immediate predecessor), growing observed prefixes, and
//! full-history networks via discretized public-belief dynamics. Limit
//! quantities (maximal-learning probability, herding bound) come with
//! closed forms where the signal family admits them.
//!
//! Existence of equilibrium does not pin uniqueness; every output here
//! is the equilibrium selected by the declared policy and tie-break
//! rules, not "the" equilibrium.

pub mod oracle;

use crate::beliefs::{
    observation_gain, BeliefError, HistoryDistribution, LikelihoodEngine, StrategyProfile,
};
use crate::grid::{GridError, GridSpec, LogOddsDistribution};
use crate::signals::{bisect, Boundedness, SignalError, SignalStructure, Theta, ThresholdSignal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("operation requires a symmetric signal structure")]
    NotSymmetric,
    #[error("operation requires {0} private beliefs")]
    Regime(&'static str),
    #[error("instance too large: {0}")]
    Size(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Convergence declaration threshold for fixed-point detection.
const FIXED_POINT_TOL: f64 = 1e-12;

/// Solved line equilibrium: per-agent cutoffs and correctness plus the
/// limit pair.
#[derive(Debug, Clone)]
pub struct LineEquilibrium {
    /// s*_n; index 0 is agent 1 (cutoff 0, nobody to observe).
    pub cutoffs: Vec<f64>,
    /// p_n = P(a_n = theta).
    pub correctness: Vec<f64>,
    pub limit_cutoff: f64,
    pub limit_probability: f64,
    /// First n with |p_{n+1} - p_n| below 1e-12, if reached.
    pub converged_at: Option<usize>,
}

/// Correctness benchmarks for a (structure, cost) pair.
#[derive(Debug, Clone, Copy)]
pub struct LearningBenchmarks {
    /// Asymptotic-learning target; always 1.
    pub asymptotic: f64,
    /// Maximal-learning target P*(c).
    pub maximal: f64,
    /// Herding ceiling for bounded beliefs on full-history networks.
    pub herding: Option<f64>,
}

/// P*(c): probability of the correct action for the hypothetical agent
/// who pays c to learn the state whenever her signal is not extreme.
/// Equals 1 at zero cost or under weak beliefs; F0(s*) for symmetric
/// strong-belief structures.
pub fn maximal_learning_prob(structure: &SignalStructure, cost: f64) -> Result<f64, EquilibriumError> {
    let regime = structure.classify(cost)?;
    match regime.strength {
        Some(crate::signals::Strength::Strong { s_star, s_lower_star }) => {
            let f0 = structure.cdf_unchecked(Theta::Zero, s_star);
            let f1 = structure.cdf_unchecked(Theta::One, s_lower_star);
            Ok(0.5 * f0 + 0.5 * (1.0 - f1))
        }
        _ => Ok(1.0),
    }
}

pub fn benchmarks(structure: &SignalStructure, cost: f64) -> Result<LearningBenchmarks, EquilibriumError> {
    Ok(LearningBenchmarks {
        asymptotic: 1.0,
        maximal: maximal_learning_prob(structure, cost)?,
        herding: herding_bound(structure).ok(),
    })
}

/// Herding ceiling max{Delta, 1 - Delta} for bounded private beliefs,
/// with Delta = lo(1-hi) / (-lo + hi + 2 lo (1-hi)) in the belief
/// bounds (lo, hi).
pub fn herding_bound(structure: &SignalStructure) -> Result<f64, EquilibriumError> {
    let Boundedness::Bounded { lower, upper } = structure.classify(0.0)?.boundedness else {
        return Err(EquilibriumError::Regime("bounded"));
    };
    let delta = lower * (1.0 - upper) / (-lower + upper + 2.0 * lower * (1.0 - upper));
    Ok(delta.max(1.0 - delta))
}

/// The hypothetical benchmark profile behind P*(c): every agent with a
/// predecessor observes iff |s| < s*. Bounds every equilibrium cutoff
/// from above.
pub fn benchmark_cutoff_table(
    structure: &SignalStructure,
    cost: f64,
    horizon: usize,
) -> Result<Vec<f64>, EquilibriumError> {
    let regime = structure.classify(cost)?;
    let cutoff = match regime.strength {
        Some(crate::signals::Strength::Strong { s_star, .. }) => s_star,
        _ => 1.0,
    };
    let mut table = vec![cutoff; horizon];
    if let Some(first) = table.first_mut() {
        *first = 0.0;
    }
    Ok(table)
}

/// Agent-by-agent cutoff recursion on the line. Agent n's cutoff makes
/// her indifferent between observing her predecessor (correct with
/// probability p_{n-1}) and following her signal; her correctness then
/// decomposes over the no-observation tails and the observation band.
pub fn line_cutoff_recursion(
    structure: &SignalStructure,
    cost: f64,
    horizon: usize,
) -> Result<LineEquilibrium, EquilibriumError> {
    if !structure.is_symmetric() {
        return Err(EquilibriumError::NotSymmetric);
    }
    if horizon == 0 {
        return Err(EquilibriumError::InvalidArgument("horizon must be positive".into()));
    }
    structure.classify(cost)?;

    let f0 = |s: f64| structure.cdf_unchecked(Theta::Zero, s);
    let mut cutoffs = Vec::with_capacity(horizon);
    let mut correctness = Vec::with_capacity(horizon);
    let mut converged_at = None;
    cutoffs.push(0.0);
    correctness.push(f0(0.0));

    for n in 2..=horizon {
        let prev = correctness[n - 2];
        // gain from following the predecessor is p_{n-1} - belief(s)
        let cutoff = if prev - 0.5 <= cost {
            0.0
        } else {
            structure.invert_belief(prev - cost).value().min(1.0)
        };
        let p = f0(-cutoff) + (f0(cutoff) - f0(-cutoff)) * prev;
        if converged_at.is_none() && (p - prev).abs() < FIXED_POINT_TOL {
            converged_at = Some(n - 1);
        }
        cutoffs.push(cutoff);
        correctness.push(p);
    }

    let (limit_cutoff, limit_probability) = line_limit(structure, cost)?;
    Ok(LineEquilibrium {
        cutoffs,
        correctness,
        limit_cutoff,
        limit_probability,
        converged_at,
    })
}

/// Limit pair (s-hat, P-hat) of the line equilibrium, solving the
/// simultaneous fixed point P = F0(-s) + (F0(s) - F0(-s)) P with the
/// indifference P - belief(s) = c by bisection on s. Returns the
/// no-observation regime (0, F0(0)) when no interior solution exists,
/// and the full-learning limit when the gain stays above cost on the
/// whole support.
pub fn line_limit(structure: &SignalStructure, cost: f64) -> Result<(f64, f64), EquilibriumError> {
    if !structure.is_symmetric() {
        return Err(EquilibriumError::NotSymmetric);
    }
    structure.classify(cost)?;
    let f0 = |s: f64| structure.cdf_unchecked(Theta::Zero, s);
    let f1 = |s: f64| structure.cdf_unchecked(Theta::One, s);
    // fixed-point correctness at cutoff s: F0(-s) / (F0(-s) + F1(-s))
    let p_hat = |s: f64| {
        let a = f0(-s);
        let b = f1(-s);
        if a + b == 0.0 {
            // both tails vanish only in the unbounded limit s -> 1
            1.0
        } else {
            a / (a + b)
        }
    };
    let gap = |s: f64| p_hat(s) - structure.private_belief_unchecked(s) - cost;

    if gap(0.0) <= 0.0 {
        return Ok((0.0, f0(0.0)));
    }
    let hi = 1.0 - 1e-13;
    if gap(hi) > 0.0 {
        // observation pays for every signal; the limit saturates the
        // belief ceiling (1 for unbounded structures)
        let ceiling = match structure.classify(0.0)?.boundedness {
            Boundedness::Unbounded => 1.0,
            Boundedness::Bounded { upper, .. } => upper,
        };
        return Ok((1.0, ceiling));
    }
    let s_hat = bisect(0.0, hi, gap);
    Ok((s_hat, p_hat(s_hat)))
}

/// Exact cutoff/correctness forward solve when agent n observes the
/// prefix 1..=k_n, by full enumeration of prefix histories through the
/// likelihood engine. Desk-scale: prefix lengths are capped at 16.
#[derive(Debug, Clone)]
pub struct PrefixEquilibrium {
    pub cutoffs: Vec<f64>,
    pub correctness: Vec<f64>,
}

pub fn prefix_exact(
    structure: &SignalStructure,
    cost: f64,
    ks: &[u32],
) -> Result<PrefixEquilibrium, EquilibriumError> {
    if ks.iter().any(|&k| k > 16) {
        return Err(EquilibriumError::Size(format!(
            "prefix enumeration capped at 2^16 histories, requested {:?}",
            ks.iter().max()
        )));
    }
    for (i, &k) in ks.iter().enumerate() {
        if k as usize > i {
            return Err(EquilibriumError::InvalidArgument(format!(
                "agent {} cannot observe a prefix of length {k}",
                i + 1
            )));
        }
    }
    let mut cutoffs: Vec<f64> = Vec::with_capacity(ks.len());
    let mut correctness = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let n = i + 1;
        if k == 0 {
            cutoffs.push(0.0);
            correctness.push(structure.cdf_unchecked(Theta::Zero, 0.0));
            continue;
        }
        // profile over the already-solved agents suffices: the prefix
        // only involves agents <= k < n
        let profile = StrategyProfile::first_k(&ks[..n - 1], &cutoffs)?;
        let engine = LikelihoodEngine::new(&profile, structure)?;
        let dist = HistoryDistribution::enumerate_prefix(&engine, k)?;
        let cutoff = solve_cutoff(structure, cost, |s| {
            observation_gain(structure, s, &dist).expect("gain on [0,1)")
        });
        let mut p = 0.0;
        for atom in &dist.atoms {
            let t = atom.threshold.value().clamp(-cutoff, cutoff);
            p += 0.5 * atom.w0 * structure.cdf_unchecked(Theta::Zero, t);
            p += 0.5 * atom.w1 * (1.0 - structure.cdf_unchecked(Theta::One, t));
        }
        cutoffs.push(cutoff);
        correctness.push(p);
    }
    Ok(PrefixEquilibrium { cutoffs, correctness })
}

/// Observation cutoff from a weakly decreasing, continuous gain
/// function: the signal where gain meets cost, with the tie at
/// indifference resolving toward observation.
pub(crate) fn solve_cutoff<F: Fn(f64) -> f64>(
    _structure: &SignalStructure,
    cost: f64,
    gain: F,
) -> f64 {
    let hi = 1.0 - 1e-13;
    if gain(0.0) < cost {
        return 0.0;
    }
    if gain(hi) >= cost {
        return 1.0;
    }
    bisect(0.0, hi, |s| gain(s) - cost)
}

/// Forward dynamics of the public log-odds distribution on a
/// full-history network. Exact up to the bin width; per-agent cutoffs
/// come from the expected observation gain against the current
/// distribution.
#[derive(Debug, Clone)]
pub struct PublicBeliefDynamics {
    pub cutoffs: Vec<f64>,
    pub correctness: Vec<f64>,
    /// Probability mass sitting on cascade histories (threshold at the
    /// support boundary) when each agent moves.
    pub cascade_mass: Vec<f64>,
    pub grid: GridSpec,
}

pub fn public_belief_dynamics(
    structure: &SignalStructure,
    cost: f64,
    horizon: usize,
    grid: GridSpec,
) -> Result<PublicBeliefDynamics, EquilibriumError> {
    grid.validate()?;
    structure.classify(cost)?;
    let mut dist = [
        LogOddsDistribution::point(grid, 0.0, 1.0)?,
        LogOddsDistribution::point(grid, 0.0, 1.0)?,
    ];
    // bin thresholds depend only on the grid
    let thresholds: Vec<ThresholdSignal> = (0..grid.bins)
        .map(|b| {
            let center = dist[0].center(b);
            if center == 0.0 {
                ThresholdSignal::Interior(0.0)
            } else {
                structure.invert_llr(-center)
            }
        })
        .collect();

    let mut out = PublicBeliefDynamics {
        cutoffs: Vec::with_capacity(horizon),
        correctness: Vec::with_capacity(horizon),
        cascade_mass: Vec::with_capacity(horizon),
        grid,
    };

    for _n in 1..=horizon {
        // cumulative masses over bins in ascending log-odds, which is
        // descending threshold order: bins with t >= s are a prefix
        let m0 = dist[0].masses();
        let m1 = dist[1].masses();
        let mut cum0 = vec![0.0; grid.bins + 1];
        let mut cum1 = vec![0.0; grid.bins + 1];
        for b in 0..grid.bins {
            cum0[b + 1] = cum0[b] + m0[b];
            cum1[b + 1] = cum1[b] + m1[b];
        }
        let gain = |s: f64| {
            let f0 = structure.pdf_unchecked(Theta::Zero, s);
            let f1 = structure.pdf_unchecked(Theta::One, s);
            // include bins whose threshold is >= s
            let idx = thresholds.partition_point(|t| t.value() >= s);
            (f0 * cum0[idx] - f1 * cum1[idx]) / (f0 + f1)
        };
        let cutoff = solve_cutoff(structure, cost, gain);

        let mut correct = 0.0;
        let mut cascade = 0.0;
        let mut next = [
            LogOddsDistribution::zeros(grid)?,
            LogOddsDistribution::zeros(grid)?,
        ];
        for b in 0..grid.bins {
            let mass = [m0[b], m1[b]];
            if mass[0] == 0.0 && mass[1] == 0.0 {
                continue;
            }
            let t = thresholds[b];
            let tc = t.value().clamp(-cutoff, cutoff);
            let p1 = [
                1.0 - structure.cdf_unchecked(Theta::Zero, tc),
                1.0 - structure.cdf_unchecked(Theta::One, tc),
            ];
            correct += 0.5 * mass[0] * (1.0 - p1[0]) + 0.5 * mass[1] * p1[1];
            if t.is_boundary() {
                cascade += 0.5 * (mass[0] + mass[1]);
            }
            let lam = dist[0].center(b);
            for a in [0u8, 1u8] {
                let pa = [
                    if a == 1 { p1[0] } else { 1.0 - p1[0] },
                    if a == 1 { p1[1] } else { 1.0 - p1[1] },
                ];
                if pa[0] == 0.0 && pa[1] == 0.0 {
                    continue;
                }
                let shifted = lam + pa[1].ln() - pa[0].ln();
                next[0].deposit(shifted, mass[0] * pa[0]);
                next[1].deposit(shifted, mass[1] * pa[1]);
            }
        }
        next[0].check_overflow(1e-6)?;
        next[1].check_overflow(1e-6)?;
        dist = next;
        out.cutoffs.push(cutoff);
        out.correctness.push(correct.clamp(0.0, 1.0));
        out.cascade_mass.push(cascade.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Comparison of two strong-belief structures under a shared cost on
/// infinite-observation networks, where the limit correctness is
/// F0(s*). Flags cases where the stronger signal (larger mass of
/// non-observing extremes) learns less in the limit.
#[derive(Debug, Clone, Copy)]
pub struct WelfareReport {
    pub strength_a: f64,
    pub strength_b: f64,
    pub limit_a: f64,
    pub limit_b: f64,
    pub inversion: bool,
}

pub fn welfare_compare(
    a: &SignalStructure,
    b: &SignalStructure,
    cost: f64,
) -> Result<WelfareReport, EquilibriumError> {
    let strength_and_limit = |s: &SignalStructure| -> Result<(f64, f64), EquilibriumError> {
        let regime = s.classify(cost)?;
        let Some(s_star) = regime.s_star() else {
            return Err(EquilibriumError::Regime("strong"));
        };
        let f0 = |x: f64| s.cdf_unchecked(Theta::Zero, x);
        Ok((f0(-s_star) + 1.0 - f0(s_star), f0(s_star)))
    };
    let (strength_a, limit_a) = strength_and_limit(a)?;
    let (strength_b, limit_b) = strength_and_limit(b)?;
    let inversion = (strength_a - strength_b) * (limit_a - limit_b) < 0.0;
    Ok(WelfareReport {
        strength_a,
        strength_b,
        limit_a,
        limit_b,
        inversion,
    })
}
