//! Private-signal structures on the open support (-1, 1).
//!
//! A signal structure is a pair of state-conditional distributions
//! (F0, F1) with positive continuous densities, the monotone likelihood
//! ratio property, and (for the built-in families) symmetry
//! f1(s) = f0(-s). Two parametric families are provided plus a tabulated
//! piecewise-linear form:
//!
//! * `LinearUnbounded`: f0(s) = (1-s)/2, f1(s) = (1+s)/2. Private
//!   beliefs are unbounded.
//! * `BoundedLinear(lambda)`: f0(s) = (1-lambda*s)/2,
//!   f1(s) = (1+lambda*s)/2 with lambda in (0,1). Private beliefs are
//!   confined to ((1-lambda)/2, (1+lambda)/2).
//! * `Tabulated`: densities given on a grid, linearly interpolated,
//!   normalized at construction, extended constant beyond the grid edges.

use thiserror::Error;

/// Bisection tolerance for all scalar root finding in this crate.
pub const ROOT_TOL: f64 = 1e-12;
/// Iteration cap for bisection.
pub const MAX_ROOT_ITERS: usize = 200;

/// The binary state of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theta {
    Zero,
    One,
}

impl Theta {
    pub fn from_bit(b: u8) -> Theta {
        if b == 0 {
            Theta::Zero
        } else {
            Theta::One
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Theta::Zero => 0,
            Theta::One => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("signal {0} outside the support")]
    OutOfSupport(f64),
    #[error("cost {0} outside [0, 1/2)")]
    InvalidCost(f64),
    #[error("invalid family parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid tabulated structure: {0}")]
    InvalidTable(String),
    #[error("cannot parse signal structure: {0}")]
    Parse(String),
}

/// Signal family plus any precomputed tables.
#[derive(Debug, Clone)]
pub enum SignalFamily {
    LinearUnbounded,
    BoundedLinear { lambda: f64 },
    Tabulated(TabulatedDensities),
}

/// Piecewise-linear densities on a shared grid. The user grid is
/// extended to the support endpoints by continuing the edge segments
/// (clamped at zero), and both densities are normalized to unit mass at
/// construction. The stored grid therefore spans [-1, 1].
#[derive(Debug, Clone)]
pub struct TabulatedDensities {
    grid: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    /// CDF values at the grid points (trapezoid, exact for the
    /// piecewise-linear interpolant).
    cdf0: Vec<f64>,
    cdf1: Vec<f64>,
    symmetric: bool,
    /// Number of synthetic endpoint nodes prefixed/suffixed (for config
    /// round-trips).
    user_range: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SignalStructure {
    family: SignalFamily,
}

/// Whether private beliefs stay away from {0, 1} over the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundedness {
    Unbounded,
    Bounded { lower: f64, upper: f64 },
}

/// Strength of private beliefs relative to the observation cost. Defined
/// only for positive cost; `BeliefRegime::strength` is `None` at c = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Strong { s_star: f64, s_lower_star: f64 },
    Weak,
}

/// Classification of a signal structure relative to an observation cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefRegime {
    pub boundedness: Boundedness,
    pub strength: Option<Strength>,
    pub cost: f64,
}

impl BeliefRegime {
    pub fn is_strong(&self) -> bool {
        matches!(self.strength, Some(Strength::Strong { .. }))
    }

    /// Upper cutoff s* when beliefs are strong under this cost.
    pub fn s_star(&self) -> Option<f64> {
        match self.strength {
            Some(Strength::Strong { s_star, .. }) => Some(s_star),
            _ => None,
        }
    }
}

/// Which validation check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationCheck {
    Positivity,
    Mlrp,
    Symmetry,
}

/// Outcome of [`SignalStructure::validate`]. Failures are reported, not
/// raised.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub positivity: bool,
    pub mlrp: bool,
    pub symmetry: bool,
    /// First failing check together with the grid point where it failed.
    pub first_violation: Option<(ValidationCheck, f64)>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.positivity && self.mlrp && self.symmetry
    }
}

/// Signal at which the posterior would cross 1/2, or a boundary marker
/// when the required likelihood ratio is outside the signal range (a
/// cascade: no signal overturns the history).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSignal {
    Interior(f64),
    /// `Boundary(-1.0)`: every signal acts 1. `Boundary(1.0)`: every
    /// signal acts 0.
    Boundary(f64),
}

impl ThresholdSignal {
    /// The threshold as a plain signal value, boundaries included.
    pub fn value(self) -> f64 {
        match self {
            ThresholdSignal::Interior(t) => t,
            ThresholdSignal::Boundary(t) => t,
        }
    }

    pub fn is_boundary(self) -> bool {
        matches!(self, ThresholdSignal::Boundary(_))
    }
}

impl SignalStructure {
    pub fn linear_unbounded() -> SignalStructure {
        SignalStructure {
            family: SignalFamily::LinearUnbounded,
        }
    }

    pub fn bounded_linear(lambda: f64) -> Result<SignalStructure, SignalError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(SignalError::InvalidParameter(format!(
                "bounded-linear slope must lie in (0,1), got {lambda}"
            )));
        }
        Ok(SignalStructure {
            family: SignalFamily::BoundedLinear { lambda },
        })
    }

    /// Piecewise-linear densities on `grid`. Values must be strictly
    /// positive; the grid strictly increasing inside (-1, 1). Densities
    /// are rescaled to integrate to one.
    pub fn tabulated(grid: Vec<f64>, f0: Vec<f64>, f1: Vec<f64>) -> Result<SignalStructure, SignalError> {
        let tab = TabulatedDensities::build(grid, f0, f1)?;
        Ok(SignalStructure {
            family: SignalFamily::Tabulated(tab),
        })
    }

    pub fn family(&self) -> &SignalFamily {
        &self.family
    }

    /// True when f1(s) = f0(-s) holds by construction (parametric
    /// families) or held on the grid at build time (tabulated).
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            SignalFamily::LinearUnbounded => true,
            SignalFamily::BoundedLinear { .. } => true,
            SignalFamily::Tabulated(t) => t.symmetric,
        }
    }

    fn check_open_support(s: f64) -> Result<(), SignalError> {
        if s > -1.0 && s < 1.0 {
            Ok(())
        } else {
            Err(SignalError::OutOfSupport(s))
        }
    }

    /// Density of the signal under the given state.
    pub fn pdf(&self, state: Theta, s: f64) -> Result<f64, SignalError> {
        Self::check_open_support(s)?;
        Ok(self.pdf_unchecked(state, s))
    }

    pub(crate) fn pdf_unchecked(&self, state: Theta, s: f64) -> f64 {
        match &self.family {
            SignalFamily::LinearUnbounded => match state {
                Theta::Zero => (1.0 - s) / 2.0,
                Theta::One => (1.0 + s) / 2.0,
            },
            SignalFamily::BoundedLinear { lambda } => match state {
                Theta::Zero => (1.0 - lambda * s) / 2.0,
                Theta::One => (1.0 + lambda * s) / 2.0,
            },
            SignalFamily::Tabulated(t) => t.pdf(state, s),
        }
    }

    /// Distribution function of the signal under the given state.
    /// Closed form for the parametric families; trapezoid quadrature on
    /// the grid for tabulated densities.
    pub fn cdf(&self, state: Theta, s: f64) -> Result<f64, SignalError> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(SignalError::OutOfSupport(s));
        }
        Ok(self.cdf_unchecked(state, s))
    }

    pub(crate) fn cdf_unchecked(&self, state: Theta, s: f64) -> f64 {
        match &self.family {
            SignalFamily::LinearUnbounded => match state {
                // integral of (1 -/+ t)/2 from -1 to s
                Theta::Zero => (s + 1.0) * (3.0 - s) / 4.0,
                Theta::One => (s + 1.0) * (s + 1.0) / 4.0,
            },
            SignalFamily::BoundedLinear { lambda } => {
                let base = (s + 1.0) / 2.0;
                let quad = lambda * (s * s - 1.0) / 4.0;
                match state {
                    Theta::Zero => base - quad,
                    Theta::One => base + quad,
                }
            }
            SignalFamily::Tabulated(t) => t.cdf(state, s),
        }
    }

    /// Posterior probability of state 1 given only the signal,
    /// f1(s) / (f0(s) + f1(s)).
    pub fn private_belief(&self, s: f64) -> Result<f64, SignalError> {
        Self::check_open_support(s)?;
        Ok(self.private_belief_unchecked(s))
    }

    pub(crate) fn private_belief_unchecked(&self, s: f64) -> f64 {
        let f0 = self.pdf_unchecked(Theta::Zero, s);
        let f1 = self.pdf_unchecked(Theta::One, s);
        f1 / (f0 + f1)
    }

    /// Log likelihood ratio ln(f1(s)/f0(s)); strictly increasing in s.
    pub fn signal_llr(&self, s: f64) -> Result<f64, SignalError> {
        Self::check_open_support(s)?;
        Ok(self.signal_llr_unchecked(s))
    }

    pub(crate) fn signal_llr_unchecked(&self, s: f64) -> f64 {
        let f0 = self.pdf_unchecked(Theta::Zero, s);
        let f1 = self.pdf_unchecked(Theta::One, s);
        (f1 / f0).ln()
    }

    /// Limits of the private belief at the edges of the support.
    pub fn belief_limits(&self) -> (f64, f64) {
        match &self.family {
            SignalFamily::LinearUnbounded => (0.0, 1.0),
            SignalFamily::BoundedLinear { lambda } => ((1.0 - lambda) / 2.0, (1.0 + lambda) / 2.0),
            SignalFamily::Tabulated(t) => t.belief_limits(),
        }
    }

    /// Inverse-CDF sampling: returns the signal with `cdf(state, s) = u`.
    /// Closed-form quantiles for the parametric families; per-panel
    /// quadratic inversion for tabulated densities. `u` is expected in
    /// (0, 1) and is clamped to it.
    pub fn sample_signal(&self, state: Theta, u: f64) -> f64 {
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
        match &self.family {
            SignalFamily::LinearUnbounded => match state {
                Theta::Zero => 1.0 - 2.0 * (1.0 - u).sqrt(),
                Theta::One => 2.0 * u.sqrt() - 1.0,
            },
            SignalFamily::BoundedLinear { lambda } => match state {
                // F1(s) = u  =>  s = (2*sqrt(((1-l)/2)^2 + l*u) - 1) / l
                Theta::One => {
                    let half = (1.0 - lambda) / 2.0;
                    (2.0 * (half * half + lambda * u).sqrt() - 1.0) / lambda
                }
                // mirror: F0^{-1}(u) = -F1^{-1}(1-u)
                Theta::Zero => {
                    let half = (1.0 - lambda) / 2.0;
                    -(2.0 * (half * half + lambda * (1.0 - u)).sqrt() - 1.0) / lambda
                }
            },
            SignalFamily::Tabulated(t) => t.quantile(state, u),
        }
    }

    /// Inverts the signal log likelihood ratio: the signal `t` with
    /// ln(f1(t)/f0(t)) = `target`, or a boundary marker when `target`
    /// falls outside the attainable ratio range (bounded beliefs).
    pub fn invert_llr(&self, target: f64) -> ThresholdSignal {
        match &self.family {
            SignalFamily::LinearUnbounded | SignalFamily::BoundedLinear { .. } => {
                let lambda = match &self.family {
                    SignalFamily::BoundedLinear { lambda } => *lambda,
                    _ => 1.0,
                };
                // (1 + l t)/(1 - l t) = e^target  =>  l t = tanh(target/2)
                let t = (target / 2.0).tanh() / lambda;
                if t >= 1.0 {
                    ThresholdSignal::Boundary(1.0)
                } else if t <= -1.0 {
                    ThresholdSignal::Boundary(-1.0)
                } else {
                    ThresholdSignal::Interior(t)
                }
            }
            SignalFamily::Tabulated(_) => {
                let lo = -1.0 + 1e-14;
                let hi = 1.0 - 1e-14;
                let g = |s: f64| self.signal_llr_unchecked(s) - target;
                if g(lo) >= 0.0 {
                    return ThresholdSignal::Boundary(-1.0);
                }
                if g(hi) <= 0.0 {
                    return ThresholdSignal::Boundary(1.0);
                }
                ThresholdSignal::Interior(bisect(lo, hi, g))
            }
        }
    }

    /// Signal with the given private belief, when attainable.
    pub fn invert_belief(&self, belief: f64) -> ThresholdSignal {
        // belief b corresponds to llr ln(b/(1-b))
        self.invert_llr((belief / (1.0 - belief)).ln())
    }

    /// Classifies boundedness and strength of private beliefs relative
    /// to the observation cost. Strength is undefined at c = 0.
    pub fn classify(&self, cost: f64) -> Result<BeliefRegime, SignalError> {
        if !(0.0..0.5).contains(&cost) {
            return Err(SignalError::InvalidCost(cost));
        }
        let (lower, upper) = self.belief_limits();
        let boundedness = if lower <= 0.0 && upper >= 1.0 {
            Boundedness::Unbounded
        } else {
            Boundedness::Bounded { lower, upper }
        };
        let strength = if cost == 0.0 {
            None
        } else if 1.0 - cost >= upper {
            Some(Strength::Weak)
        } else {
            let s_star = match &self.family {
                SignalFamily::LinearUnbounded => 1.0 - 2.0 * cost,
                SignalFamily::BoundedLinear { lambda } => (1.0 - 2.0 * cost) / lambda,
                SignalFamily::Tabulated(_) => match self.invert_belief(1.0 - cost) {
                    ThresholdSignal::Interior(t) => t,
                    ThresholdSignal::Boundary(b) => b,
                },
            };
            let s_lower_star = if self.is_symmetric() {
                -s_star
            } else {
                // private belief on state 0 equals 1-c, i.e. belief(s) = c
                match self.invert_belief(cost) {
                    ThresholdSignal::Interior(t) => t,
                    ThresholdSignal::Boundary(b) => b,
                }
            };
            Some(Strength::Strong { s_star, s_lower_star })
        };
        Ok(BeliefRegime {
            boundedness,
            strength,
            cost,
        })
    }

    /// Checks positivity, MLRP, and symmetry on an interior grid of the
    /// given size. Failures go into the report, not into an error.
    pub fn validate(&self, grid_size: usize) -> Result<ValidationReport, SignalError> {
        if grid_size < 3 {
            return Err(SignalError::InvalidParameter(format!(
                "validation grid needs at least 3 points, got {grid_size}"
            )));
        }
        let pts: Vec<f64> = (0..grid_size)
            .map(|i| -1.0 + 2.0 * (i as f64 + 1.0) / (grid_size as f64 + 1.0))
            .collect();

        let mut report = ValidationReport {
            positivity: true,
            mlrp: true,
            symmetry: true,
            first_violation: None,
        };
        let record = |report: &mut ValidationReport, check: ValidationCheck, at: f64| {
            if report.first_violation.is_none() {
                report.first_violation = Some((check, at));
            }
        };

        for &s in &pts {
            let f0 = self.pdf_unchecked(Theta::Zero, s);
            let f1 = self.pdf_unchecked(Theta::One, s);
            if !(f0 > 0.0 && f1 > 0.0) {
                report.positivity = false;
                record(&mut report, ValidationCheck::Positivity, s);
                break;
            }
        }
        if report.positivity {
            let mut prev = f64::NEG_INFINITY;
            for &s in &pts {
                let ratio = self.pdf_unchecked(Theta::One, s) / self.pdf_unchecked(Theta::Zero, s);
                if ratio <= prev {
                    report.mlrp = false;
                    record(&mut report, ValidationCheck::Mlrp, s);
                    break;
                }
                prev = ratio;
            }
            for &s in &pts {
                let f1 = self.pdf_unchecked(Theta::One, s);
                let f0m = self.pdf_unchecked(Theta::Zero, -s);
                if (f1 - f0m).abs() > 1e-12 {
                    report.symmetry = false;
                    record(&mut report, ValidationCheck::Symmetry, s);
                    break;
                }
            }
        }
        Ok(report)
    }

    /// Plain-text block: family name and parameters, or one grid row per
    /// line for tabulated densities.
    pub fn to_config_block(&self) -> String {
        match &self.family {
            SignalFamily::LinearUnbounded => "linear\n".to_string(),
            SignalFamily::BoundedLinear { lambda } => format!("bounded {lambda}\n"),
            SignalFamily::Tabulated(t) => {
                let mut out = String::from("tabulated\n");
                for i in t.user_range.0..t.user_range.1 {
                    out.push_str(&format!("{} {} {}\n", t.grid[i], t.f0[i], t.f1[i]));
                }
                out
            }
        }
    }

    pub fn from_config_block(text: &str) -> Result<SignalStructure, SignalError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head = lines.next().ok_or_else(|| SignalError::Parse("empty block".into()))?;
        let mut head_parts = head.split_whitespace();
        match head_parts.next() {
            Some("linear") => Ok(SignalStructure::linear_unbounded()),
            Some("bounded") => {
                let lambda: f64 = head_parts
                    .next()
                    .ok_or_else(|| SignalError::Parse("bounded needs a slope parameter".into()))?
                    .parse()
                    .map_err(|e| SignalError::Parse(format!("bad slope: {e}")))?;
                SignalStructure::bounded_linear(lambda)
            }
            Some("tabulated") => {
                let mut grid = Vec::new();
                let mut f0 = Vec::new();
                let mut f1 = Vec::new();
                for line in lines {
                    let cols: Vec<&str> = line.split_whitespace().collect();
                    if cols.len() != 3 {
                        return Err(SignalError::Parse(format!("expected 's f0 f1', got '{line}'")));
                    }
                    let parse = |c: &str| {
                        c.parse::<f64>()
                            .map_err(|e| SignalError::Parse(format!("bad number '{c}': {e}")))
                    };
                    grid.push(parse(cols[0])?);
                    f0.push(parse(cols[1])?);
                    f1.push(parse(cols[2])?);
                }
                SignalStructure::tabulated(grid, f0, f1)
            }
            other => Err(SignalError::Parse(format!("unknown family {other:?}"))),
        }
    }
}

impl TabulatedDensities {
    fn build(mut grid: Vec<f64>, mut f0: Vec<f64>, mut f1: Vec<f64>) -> Result<TabulatedDensities, SignalError> {
        if grid.len() < 2 || grid.len() != f0.len() || grid.len() != f1.len() {
            return Err(SignalError::InvalidTable(
                "grid and density arrays must share a length of at least 2".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SignalError::InvalidTable("grid must be strictly increasing".into()));
        }
        if grid[0] < -1.0 || *grid.last().unwrap() > 1.0 {
            return Err(SignalError::InvalidTable("grid must lie inside [-1, 1]".into()));
        }
        if f0.iter().chain(f1.iter()).any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(SignalError::InvalidTable("densities must be strictly positive".into()));
        }

        // extend the edge segments linearly to the support endpoints,
        // clamped at zero (a vanishing endpoint density is legitimate:
        // it is how unbounded beliefs look)
        let mut lead = 0usize;
        if grid[0] > -1.0 {
            let extrap = |f: &[f64]| -> f64 {
                let slope = (f[1] - f[0]) / (grid[1] - grid[0]);
                (f[0] + slope * (-1.0 - grid[0])).max(0.0)
            };
            let e0 = extrap(&f0);
            let e1 = extrap(&f1);
            grid.insert(0, -1.0);
            f0.insert(0, e0);
            f1.insert(0, e1);
            lead = 1;
        }
        let mut trail = 0usize;
        if *grid.last().unwrap() < 1.0 {
            let k = grid.len();
            let extrap = |f: &[f64]| -> f64 {
                let slope = (f[k - 1] - f[k - 2]) / (grid[k - 1] - grid[k - 2]);
                (f[k - 1] + slope * (1.0 - grid[k - 1])).max(0.0)
            };
            let e0 = extrap(&f0);
            let e1 = extrap(&f1);
            grid.push(1.0);
            f0.push(e0);
            f1.push(e1);
            trail = 1;
        }
        let user_range = (lead, grid.len() - trail);

        let mass = |grid: &[f64], f: &[f64]| -> f64 {
            grid.windows(2)
                .zip(f.windows(2))
                .map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0)
                .sum()
        };
        let m0 = mass(&grid, &f0);
        let m1 = mass(&grid, &f1);
        f0.iter_mut().for_each(|v| *v /= m0);
        f1.iter_mut().for_each(|v| *v /= m1);

        let prefix = |grid: &[f64], f: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(grid.len());
            out.push(0.0);
            let mut acc = 0.0;
            for i in 0..grid.len() - 1 {
                acc += (grid[i + 1] - grid[i]) * (f[i] + f[i + 1]) / 2.0;
                out.push(acc);
            }
            out
        };
        let cdf0 = prefix(&grid, &f0);
        let cdf1 = prefix(&grid, &f1);

        // grid-level symmetry check: f1(s) == f0(-s) within 1e-12
        let symmetric = {
            let probe = TabulatedDensities {
                grid: grid.clone(),
                f0: f0.clone(),
                f1: f1.clone(),
                cdf0: cdf0.clone(),
                cdf1: cdf1.clone(),
                symmetric: false,
                user_range,
            };
            grid.iter()
                .all(|&s| (probe.pdf(Theta::One, s) - probe.pdf(Theta::Zero, -s)).abs() <= 1e-12)
        };

        Ok(TabulatedDensities {
            grid,
            f0,
            f1,
            cdf0,
            cdf1,
            symmetric,
            user_range,
        })
    }

    fn values(&self, state: Theta) -> &[f64] {
        match state {
            Theta::Zero => &self.f0,
            Theta::One => &self.f1,
        }
    }

    fn cdf_table(&self, state: Theta) -> &[f64] {
        match state {
            Theta::Zero => &self.cdf0,
            Theta::One => &self.cdf1,
        }
    }

    fn pdf(&self, state: Theta, s: f64) -> f64 {
        let f = self.values(state);
        let k = self.grid.len();
        if s <= self.grid[0] {
            return f[0];
        }
        if s >= self.grid[k - 1] {
            return f[k - 1];
        }
        let i = match self.grid.binary_search_by(|g| g.partial_cmp(&s).unwrap()) {
            Ok(i) => return f[i],
            Err(i) => i - 1,
        };
        let w = (s - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        f[i] + w * (f[i + 1] - f[i])
    }

    fn cdf(&self, state: Theta, s: f64) -> f64 {
        let f = self.values(state);
        let table = self.cdf_table(state);
        let k = self.grid.len();
        if s <= self.grid[0] {
            return 0.0;
        }
        if s >= self.grid[k - 1] {
            return 1.0;
        }
        let i = match self.grid.binary_search_by(|g| g.partial_cmp(&s).unwrap()) {
            Ok(i) => return table[i],
            Err(i) => i - 1,
        };
        // trapezoid from grid[i] to s, exact for a linear density
        let fs = self.pdf(state, s);
        table[i] + (s - self.grid[i]) * (f[i] + fs) / 2.0
    }

    fn quantile(&self, state: Theta, u: f64) -> f64 {
        let f = self.values(state);
        let table = self.cdf_table(state);
        let k = self.grid.len();
        // find the panel [grid[lo], grid[lo+1]] containing mass u
        let mut lo = 0usize;
        let mut hi = k - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if table[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x0 = self.grid[lo];
        let x1 = self.grid[lo + 1];
        let fa = f[lo];
        let fb = f[lo + 1];
        let rem = u - table[lo];
        let h = x1 - x0;
        let slope = (fb - fa) / h;
        // solve fa*d + slope*d^2/2 = rem for d in [0, h]
        let d = if slope.abs() < 1e-14 {
            if fa > 0.0 {
                rem / fa
            } else {
                0.0
            }
        } else {
            let disc = (fa * fa + 2.0 * slope * rem).max(0.0);
            (disc.sqrt() - fa) / slope
        };
        (x0 + d.clamp(0.0, h)).clamp(-1.0 + 1e-15, 1.0 - 1e-15)
    }

    fn belief_limits(&self) -> (f64, f64) {
        let k = self.grid.len();
        let lower = self.f1[0] / (self.f0[0] + self.f1[0]);
        let upper = self.f1[k - 1] / (self.f0[k - 1] + self.f1[k - 1]);
        (lower, upper)
    }
}

/// Bisection for a continuous function with a sign change on [lo, hi].
/// Tolerance [`ROOT_TOL`] on the interval width, capped at
/// [`MAX_ROOT_ITERS`] iterations.
pub fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let rising = flo < 0.0;
    for _ in 0..MAX_ROOT_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo < ROOT_TOL {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
