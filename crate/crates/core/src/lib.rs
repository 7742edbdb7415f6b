//! Sequential Bayesian social learning with costly, strategically chosen
//! observation.
//!
//! Agents move in order; each receives a private signal about a binary
//! state, may pay to observe a neighborhood of predecessors' actions,
//! and then acts. The crate provides:
//!
//! * [`signals`] — signal structures on (-1, 1), belief-regime
//!   classification (bounded/unbounded, strong/weak relative to cost);
//! * [`beliefs`] — exact history likelihoods, posteriors, threshold
//!   signals, observation gains, and the belief-contraction counter;
//! * [`netform`] — capacity structures and neighborhood policies;
//! * [`equilibrium`] — cutoff-sequence solvers for line networks,
//!   limit benchmarks (maximal learning, herding bound), discretized
//!   public-belief dynamics for full-history networks, and a brute-force
//!   small-instance oracle;
//! * [`simulate`] — a reproducible parallel Monte Carlo harness over
//!   every scenario variant, emitting learning curves with Wilson
//!   intervals;
//! * [`verify`] — fast self-check suites used by the command line.

pub mod beliefs;
pub mod equilibrium;
pub mod grid;
pub mod netform;
pub mod signals;
pub mod simulate;
pub mod verify;
