//! Scenario configuration: a flat `key = value` text format plus the
//! strongly typed form used by the engine.

use crate::netform::{CapacityStructure, NeighborhoodPolicy};
use crate::signals::SignalStructure;

use super::SimError;

/// Cost of observing m actions.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    /// One fixed cost for any non-empty observation.
    Flat(f64),
    /// c(m) for m = 1..; the last entry repeats. c(0) = 0 and the
    /// schedule must be non-decreasing.
    Schedule(Vec<f64>),
}

impl CostModel {
    pub fn cost(&self, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        match self {
            CostModel::Flat(c) => *c,
            CostModel::Schedule(steps) => steps[((m - 1) as usize).min(steps.len() - 1)],
        }
    }

    /// The single cost relevant for belief-regime classification: c(1).
    pub fn first_cost(&self) -> f64 {
        self.cost(1)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        match self {
            CostModel::Flat(c) => {
                if !(0.0..0.5).contains(c) {
                    return bad(format!("cost must lie in [0, 1/2), got {c}"));
                }
            }
            CostModel::Schedule(steps) => {
                if steps.is_empty() {
                    return bad("cost schedule needs at least one step".into());
                }
                if steps.windows(2).any(|w| w[1] < w[0]) {
                    return bad("cost schedule must be non-decreasing".into());
                }
                if !(0.0..0.5).contains(&steps[0]) {
                    return bad("the first observation cost must lie in [0, 1/2)".into());
                }
                if steps.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return bad("scheduled costs must be finite and non-negative".into());
                }
            }
        }
        Ok(())
    }

    /// Observation counts worth considering: 0, each m where the
    /// marginal cost steps up afterwards, and the capacity itself.
    /// Everything else is dominated (same cost, weakly less information
    /// than the next frontier point). Counts priced at 1/2 or more are
    /// dropped outright: no observation gain can exceed the value of
    /// learning the state under a uniform prior.
    pub fn candidate_counts(&self, capacity: u32) -> Vec<u32> {
        let mut out = vec![0u32];
        if capacity == 0 {
            return out;
        }
        if let CostModel::Schedule(steps) = self {
            for m in 1..capacity {
                let here = self.cost(m);
                let next = self.cost(m + 1);
                if next > here && (m as usize) <= steps.len() && here < 0.5 {
                    out.push(m);
                }
            }
        }
        if self.cost(capacity) < 0.5 {
            out.push(capacity);
        }
        out.dedup();
        out
    }
}

/// Whether the signal or the observation decision comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    SignalFirst,
    ObservationFirst,
}

/// Stochastic restriction of the choice set: with probability epsilon
/// the agent can only observe inside the prefix {1..M}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticBlock {
    pub epsilon: f64,
    pub prefix: u32,
}

/// Where the simulated observation cutoffs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffSource {
    /// Solved equilibrium cutoffs (line recursion or the self-consistent
    /// estimation pipeline).
    Equilibrium,
    /// The flat s* benchmark profile (every equilibrium cutoff is below
    /// it; exposes the mistake floor under finite observations).
    Benchmark,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub structure: SignalStructure,
    pub cost: CostModel,
    pub capacity: CapacityStructure,
    pub policy: NeighborhoodPolicy,
    pub timing: Timing,
    pub diffusion: bool,
    pub stochastic_block: Option<StochasticBlock>,
    pub horizon: u32,
    pub trials: u64,
    pub seed: u64,
    pub cutoff_source: CutoffSource,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.cost.validate()?;
        if self.horizon == 0 {
            return Err(SimError::Config("N must be positive".into()));
        }
        if self.trials == 0 {
            return Err(SimError::Config("T must be positive".into()));
        }
        if let Some(block) = &self.stochastic_block {
            if !(block.epsilon > 0.0 && block.epsilon < 1.0) {
                return Err(SimError::Config(format!(
                    "epsilon must lie in (0, 1), got {}",
                    block.epsilon
                )));
            }
            if block.prefix == 0 {
                return Err(SimError::Config("stochastic block prefix M must be positive".into()));
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. `#` starts a comment.
    /// `base_dir` anchors relative tabulated-structure paths.
    pub fn parse_str(text: &str, base_dir: Option<&std::path::Path>) -> Result<ScenarioConfig, SimError> {
        let mut structure = None;
        let mut cost = None;
        let mut capacity = None;
        let mut policy = None;
        let mut timing = Timing::SignalFirst;
        let mut diffusion = false;
        let mut epsilon = None;
        let mut prefix = None;
        let mut horizon = None;
        let mut trials = None;
        let mut seed = 0u64;
        let mut cutoff_source = CutoffSource::Equilibrium;

        let err = |msg: String| SimError::Config(msg);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "structure" => structure = Some(parse_structure(value, base_dir)?),
                "cost" => cost = Some(parse_cost(value)?),
                "capacity" => {
                    capacity = Some(
                        CapacityStructure::parse(value).map_err(|e| err(e.to_string()))?,
                    )
                }
                "policy" => {
                    policy = Some(
                        NeighborhoodPolicy::parse(value)
                            .ok_or_else(|| err(format!("unknown policy '{value}'")))?,
                    )
                }
                "timing" => {
                    timing = match value {
                        "signalfirst" => Timing::SignalFirst,
                        "observationfirst" => Timing::ObservationFirst,
                        other => return Err(err(format!("unknown timing '{other}'"))),
                    }
                }
                "diffusion" => {
                    diffusion = value
                        .parse::<bool>()
                        .map_err(|_| err(format!("diffusion must be true/false, got '{value}'")))?
                }
                "epsilon" => {
                    epsilon = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| err(format!("bad epsilon '{value}'")))?,
                    )
                }
                "M" => {
                    prefix = Some(
                        value
                            .parse::<u32>()
                            .map_err(|_| err(format!("bad M '{value}'")))?,
                    )
                }
                "N" => {
                    horizon = Some(
                        value
                            .parse::<u32>()
                            .map_err(|_| err(format!("bad N '{value}'")))?,
                    )
                }
                "T" => {
                    trials = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| err(format!("bad T '{value}'")))?,
                    )
                }
                "seed" => {
                    seed = value
                        .parse::<u64>()
                        .map_err(|_| err(format!("bad seed '{value}'")))?
                }
                "cutoffs" => {
                    cutoff_source = match value {
                        "equilibrium" => CutoffSource::Equilibrium,
                        "benchmark" => CutoffSource::Benchmark,
                        other => return Err(err(format!("unknown cutoff source '{other}'"))),
                    }
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }

        let stochastic_block = match (epsilon, prefix) {
            (Some(epsilon), Some(prefix)) => Some(StochasticBlock { epsilon, prefix }),
            (None, None) => None,
            _ => {
                return Err(err(
                    "epsilon and M must be given together for the stochastic block".into(),
                ))
            }
        };
        let config = ScenarioConfig {
            structure: structure.ok_or_else(|| err("missing key 'structure'".into()))?,
            cost: cost.ok_or_else(|| err("missing key 'cost'".into()))?,
            capacity: capacity.ok_or_else(|| err("missing key 'capacity'".into()))?,
            policy: policy.ok_or_else(|| err("missing key 'policy'".into()))?,
            timing,
            diffusion,
            stochastic_block,
            horizon: horizon.ok_or_else(|| err("missing key 'N'".into()))?,
            trials: trials.ok_or_else(|| err("missing key 'T'".into()))?,
            seed,
            cutoff_source,
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_structure(value: &str, base_dir: Option<&std::path::Path>) -> Result<SignalStructure, SimError> {
    if value == "linear" {
        return Ok(SignalStructure::linear_unbounded());
    }
    if let Some(lambda) = value.strip_prefix("bounded:") {
        let lambda: f64 = lambda
            .parse()
            .map_err(|_| SimError::Config(format!("bad slope '{lambda}'")))?;
        return SignalStructure::bounded_linear(lambda).map_err(|e| SimError::Config(e.to_string()));
    }
    if let Some(path) = value.strip_prefix("tabulated:") {
        let mut full = std::path::PathBuf::new();
        if let Some(dir) = base_dir {
            full.push(dir);
        }
        full.push(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", full.display())))?;
        return SignalStructure::from_config_block(&text).map_err(|e| SimError::Config(e.to_string()));
    }
    Err(SimError::Config(format!("unknown structure '{value}'")))
}

fn parse_cost(value: &str) -> Result<CostModel, SimError> {
    if let Some(list) = value.strip_prefix("schedule:") {
        let steps: Result<Vec<f64>, _> = list.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let steps = steps.map_err(|_| SimError::Config(format!("bad schedule '{list}'")))?;
        let model = CostModel::Schedule(steps);
        model.validate()?;
        return Ok(model);
    }
    let c: f64 = value
        .parse()
        .map_err(|_| SimError::Config(format!("bad cost '{value}'")))?;
    let model = CostModel::Flat(c);
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# growing-prefix scenario
structure = linear
cost = 0.1
capacity = sqrt
policy = firstk
N = 400
T = 50000
seed = 7
";
        let config = ScenarioConfig::parse_str(text, None).unwrap();
        assert_eq!(config.policy, NeighborhoodPolicy::FirstK);
        assert_eq!(config.capacity, CapacityStructure::SqrtGrowth);
        assert_eq!(config.cost, CostModel::Flat(0.1));
        assert_eq!(config.seed, 7);
        assert_eq!(config.timing, Timing::SignalFirst);
        assert!(!config.diffusion);
        assert_eq!(config.cutoff_source, CutoffSource::Equilibrium);

        let with_benchmark = format!("{text}cutoffs = benchmark\n");
        let config = ScenarioConfig::parse_str(&with_benchmark, None).unwrap();
        assert_eq!(config.cutoff_source, CutoffSource::Benchmark);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "structure = linear\ncost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 5\n";
        assert!(ScenarioConfig::parse_str(base, None).is_ok());
        for broken in [
            "structure = linear\ncost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 0\n",
            "structure = linear\ncost = 0.7\ncapacity = one\npolicy = line\nN = 10\nT = 5\n",
            "structure = linear\ncost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 5\nepsilon = 0.1\n",
            "structure = linear\ncost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 5\nbogus = 1\n",
            "cost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 5\n",
        ] {
            assert!(ScenarioConfig::parse_str(broken, None).is_err(), "{broken}");
        }
    }

    #[test]
    fn schedule_candidates() {
        let flat_after_first = CostModel::Schedule(vec![0.1]);
        assert_eq!(flat_after_first.candidate_counts(20), vec![0, 20]);
        let stepped = CostModel::Schedule(vec![0.1, 0.15]);
        assert_eq!(stepped.candidate_counts(20), vec![0, 1, 20]);
        assert_eq!(stepped.cost(0), 0.0);
        assert_eq!(stepped.cost(1), 0.1);
        assert_eq!(stepped.cost(7), 0.15);
        assert!(CostModel::Schedule(vec![0.2, 0.1]).validate().is_err());
    }
}
