//! Capacity structures and neighborhood-selection policies.
//!
//! A capacity structure assigns each agent the maximum number of
//! predecessors she may pay to observe; a neighborhood policy picks the
//! concrete set. Both are deterministic given their inputs.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetformError {
    #[error("custom capacity structure has no declared limit behavior")]
    UndeclaredLimit,
    #[error("invalid capacity structure: {0}")]
    Invalid(String),
    #[error("cannot parse capacity '{0}'")]
    Parse(String),
    #[error("policy requires correctness estimates for all predecessors of agent {0}")]
    MissingEstimates(u32),
}

/// Families of capacity structures K(n).
#[derive(Debug, Clone, PartialEq)]
pub enum CapacityStructure {
    /// K(n) = n - 1: the entire previous decision history.
    FullHistory,
    /// K(n) = min(k, n - 1) for a fixed k >= 1.
    Constant(u32),
    /// K(n) = min(1, n - 1).
    ImmediateOne,
    /// K(n) = min(n - 1, ceil(sqrt(n))).
    SqrtGrowth,
    /// K(n) = 0 for n <= zeros, the inner structure afterwards.
    ZeroPrefix { zeros: u32, inner: Box<CapacityStructure> },
    /// Explicit table; the last value repeats beyond the table. The
    /// limit behavior must be declared for classification.
    Custom { caps: Vec<u32>, infinite: Option<bool> },
}

impl CapacityStructure {
    /// Capacity of agent n (1-based), clamped to the number of
    /// predecessors.
    pub fn capacity(&self, n: u32) -> u32 {
        assert!(n >= 1, "agents are numbered from 1");
        let raw = match self {
            CapacityStructure::FullHistory => n - 1,
            CapacityStructure::Constant(k) => *k,
            CapacityStructure::ImmediateOne => 1,
            CapacityStructure::SqrtGrowth => (n as f64).sqrt().ceil() as u32,
            CapacityStructure::ZeroPrefix { zeros, inner } => {
                if n <= *zeros {
                    0
                } else {
                    inner.capacity(n)
                }
            }
            CapacityStructure::Custom { caps, .. } => {
                if caps.is_empty() {
                    0
                } else {
                    caps[((n - 1) as usize).min(caps.len() - 1)]
                }
            }
        };
        raw.min(n - 1)
    }

    /// Whether K(n) -> infinity (Definition of infinite observations).
    pub fn has_infinite_observations(&self) -> Result<bool, NetformError> {
        match self {
            CapacityStructure::FullHistory | CapacityStructure::SqrtGrowth => Ok(true),
            CapacityStructure::Constant(_) | CapacityStructure::ImmediateOne => Ok(false),
            CapacityStructure::ZeroPrefix { inner, .. } => inner.has_infinite_observations(),
            CapacityStructure::Custom { infinite, .. } => infinite.ok_or(NetformError::UndeclaredLimit),
        }
    }

    /// Parses the config forms `full`, `const:7`, `one`, `sqrt`,
    /// `zeroprefix:5,sqrt`.
    pub fn parse(text: &str) -> Result<CapacityStructure, NetformError> {
        let text = text.trim();
        match text {
            "full" => return Ok(CapacityStructure::FullHistory),
            "one" => return Ok(CapacityStructure::ImmediateOne),
            "sqrt" => return Ok(CapacityStructure::SqrtGrowth),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("const:") {
            let k: u32 = rest.parse().map_err(|_| NetformError::Parse(text.into()))?;
            if k == 0 {
                return Err(NetformError::Invalid(
                    "constant capacity must be positive (only finitely many agents may have zero capacity)".into(),
                ));
            }
            return Ok(CapacityStructure::Constant(k));
        }
        if let Some(rest) = text.strip_prefix("zeroprefix:") {
            let (zeros, inner) = rest
                .split_once(',')
                .ok_or_else(|| NetformError::Parse(text.into()))?;
            let zeros: u32 = zeros.trim().parse().map_err(|_| NetformError::Parse(text.into()))?;
            let inner = CapacityStructure::parse(inner)?;
            return Ok(CapacityStructure::ZeroPrefix {
                zeros,
                inner: Box::new(inner),
            });
        }
        Err(NetformError::Parse(text.into()))
    }
}

impl std::fmt::Display for CapacityStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CapacityStructure::FullHistory => write!(f, "full"),
            CapacityStructure::Constant(k) => write!(f, "const:{k}"),
            CapacityStructure::ImmediateOne => write!(f, "one"),
            CapacityStructure::SqrtGrowth => write!(f, "sqrt"),
            CapacityStructure::ZeroPrefix { zeros, inner } => write!(f, "zeroprefix:{zeros},{inner}"),
            CapacityStructure::Custom { .. } => write!(f, "custom"),
        }
    }
}

/// How an observing agent fills her capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodPolicy {
    /// The single immediately preceding agent.
    ImmediatePredecessor,
    /// Agents 1..=K(n).
    FirstK,
    /// All predecessors (first min(K, n-1) when capacity binds).
    FullSet,
    /// Top-K predecessors by estimated correctness, ties to the larger
    /// index (later movers are weakly better informed).
    MostInformative,
}

impl NeighborhoodPolicy {
    pub fn parse(text: &str) -> Option<NeighborhoodPolicy> {
        match text.trim() {
            "line" | "predecessor" => Some(NeighborhoodPolicy::ImmediatePredecessor),
            "firstk" => Some(NeighborhoodPolicy::FirstK),
            "fullset" => Some(NeighborhoodPolicy::FullSet),
            "mostinformative" => Some(NeighborhoodPolicy::MostInformative),
            _ => None,
        }
    }
}

impl std::fmt::Display for NeighborhoodPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            NeighborhoodPolicy::ImmediatePredecessor => "line",
            NeighborhoodPolicy::FirstK => "firstk",
            NeighborhoodPolicy::FullSet => "fullset",
            NeighborhoodPolicy::MostInformative => "mostinformative",
        };
        write!(f, "{name}")
    }
}

/// The agents observed by agent n with capacity k under the policy.
/// `MostInformative` returns the chosen set in rank order; the others in
/// index order.
pub fn select_neighborhood(
    policy: NeighborhoodPolicy,
    n: u32,
    k: u32,
    estimates: Option<&[f64]>,
) -> Result<Vec<u32>, NetformError> {
    let m = k.min(n.saturating_sub(1));
    if m == 0 {
        return Ok(Vec::new());
    }
    Ok(match policy {
        NeighborhoodPolicy::ImmediatePredecessor => vec![n - 1],
        NeighborhoodPolicy::FirstK | NeighborhoodPolicy::FullSet => (1..=m).collect(),
        NeighborhoodPolicy::MostInformative => {
            let est = estimates.ok_or(NetformError::MissingEstimates(n))?;
            if est.len() < (n - 1) as usize {
                return Err(NetformError::MissingEstimates(n));
            }
            let mut candidates: Vec<u32> = (1..n).collect();
            candidates.sort_by(|&a, &b| {
                let ea = est[(a - 1) as usize];
                let eb = est[(b - 1) as usize];
                eb.partial_cmp(&ea).unwrap().then(b.cmp(&a))
            });
            candidates.truncate(m as usize);
            candidates
        }
    })
}

/// Empirical frequency, per agent, of the event "the largest observed
/// index is below `m_index`" among trials where the agent observed at
/// all. `None` where no trial had her observing.
pub fn expanding_observations_stat(trials: &[Vec<Vec<u32>>], m_index: u32) -> Vec<Option<f64>> {
    let horizon = trials.iter().map(Vec::len).max().unwrap_or(0);
    let mut below = vec![0u64; horizon];
    let mut observing = vec![0u64; horizon];
    for trial in trials {
        for (i, neighborhood) in trial.iter().enumerate() {
            if let Some(&max) = neighborhood.iter().max() {
                observing[i] += 1;
                if max < m_index {
                    below[i] += 1;
                }
            }
        }
    }
    below
        .into_iter()
        .zip(observing)
        .map(|(b, o)| (o > 0).then(|| b as f64 / o as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_families() {
        assert_eq!(CapacityStructure::FullHistory.capacity(5), 4);
        assert_eq!(CapacityStructure::ImmediateOne.capacity(1), 0);
        assert_eq!(CapacityStructure::ImmediateOne.capacity(10), 1);
        assert_eq!(CapacityStructure::SqrtGrowth.capacity(100), 10);
        assert_eq!(CapacityStructure::SqrtGrowth.capacity(2), 1);
        assert_eq!(CapacityStructure::Constant(7).capacity(4), 3);
        let zp = CapacityStructure::ZeroPrefix {
            zeros: 5,
            inner: Box::new(CapacityStructure::SqrtGrowth),
        };
        assert_eq!(zp.capacity(5), 0);
        assert_eq!(zp.capacity(9), 3);
    }

    #[test]
    fn capacity_never_exceeds_predecessors() {
        let families = [
            CapacityStructure::FullHistory,
            CapacityStructure::Constant(7),
            CapacityStructure::ImmediateOne,
            CapacityStructure::SqrtGrowth,
            CapacityStructure::Custom {
                caps: vec![3, 9, 2],
                infinite: Some(false),
            },
        ];
        for family in &families {
            for n in 1..200 {
                assert!(family.capacity(n) <= n - 1);
            }
        }
    }

    #[test]
    fn infinite_observation_classification() {
        assert!(CapacityStructure::FullHistory.has_infinite_observations().unwrap());
        assert!(!CapacityStructure::Constant(7).has_infinite_observations().unwrap());
        assert!(CapacityStructure::SqrtGrowth.has_infinite_observations().unwrap());
        let zp = CapacityStructure::parse("zeroprefix:5,sqrt").unwrap();
        assert!(zp.has_infinite_observations().unwrap());
        let undeclared = CapacityStructure::Custom {
            caps: vec![1, 2, 3],
            infinite: None,
        };
        assert!(matches!(
            undeclared.has_infinite_observations(),
            Err(NetformError::UndeclaredLimit)
        ));
    }

    #[test]
    fn parse_roundtrip() {
        for text in ["full", "const:7", "one", "sqrt", "zeroprefix:5,sqrt"] {
            let parsed = CapacityStructure::parse(text).unwrap();
            assert_eq!(parsed.to_string(), text);
        }
        assert!(CapacityStructure::parse("const:0").is_err());
        assert!(CapacityStructure::parse("bogus").is_err());
    }

    #[test]
    fn neighborhood_selection() {
        assert_eq!(
            select_neighborhood(NeighborhoodPolicy::ImmediatePredecessor, 10, 1, None).unwrap(),
            vec![9]
        );
        assert_eq!(
            select_neighborhood(NeighborhoodPolicy::FirstK, 10, 3, None).unwrap(),
            vec![1, 2, 3]
        );
        let est = [0.75, 0.8, 0.8];
        assert_eq!(
            select_neighborhood(NeighborhoodPolicy::MostInformative, 4, 2, Some(&est)).unwrap(),
            vec![3, 2]
        );
        assert!(select_neighborhood(NeighborhoodPolicy::MostInformative, 4, 2, None).is_err());
        // deterministic repeat
        assert_eq!(
            select_neighborhood(NeighborhoodPolicy::MostInformative, 4, 2, Some(&est)).unwrap(),
            select_neighborhood(NeighborhoodPolicy::MostInformative, 4, 2, Some(&est)).unwrap()
        );
        assert!(select_neighborhood(NeighborhoodPolicy::FirstK, 1, 5, None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn expanding_stat_extremes() {
        // line: agent 100 observes agent 99, never below 50
        let line_trial: Vec<Vec<u32>> = (1..=100).map(|n| if n == 1 { vec![] } else { vec![n - 1] }).collect();
        let stat = expanding_observations_stat(&[line_trial.clone(), line_trial], 50);
        assert_eq!(stat[99], Some(0.0));
        // first-3: max observed index is 3 < 50
        let firstk_trial: Vec<Vec<u32>> = (1..=100)
            .map(|n: u32| (1..=3.min(n.saturating_sub(1))).collect())
            .collect();
        let stat = expanding_observations_stat(&[firstk_trial], 50);
        assert_eq!(stat[99], Some(1.0));
        assert_eq!(stat[0], None);
    }
}
