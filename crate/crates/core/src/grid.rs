//! Discretized distributions over public log-odds.
//!
//! Bins are uniform over [-half_width, +half_width] with mass deposited
//! by linear splitting between the two nearest bin centers, which
//! preserves total mass and the first moment exactly. Mass that would
//! land outside the grid is clamped to the edge bin and tracked so
//! callers can fail loudly instead of silently distorting tails.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("log-odds grid needs at least 2 bins, got {0}")]
    Degenerate(usize),
    #[error("grid half-width must be positive, got {0}")]
    BadWidth(f64),
    #[error(
        "mass {lost:.3e} fell outside +/-{half_width} log-odds; widen the grid (suggested half-width {suggested})"
    )]
    Overflow { lost: f64, half_width: f64, suggested: f64 },
}

/// Shape of a log-odds grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub bins: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: 30.0,
            bins: 2001,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.bins < 2 {
            return Err(GridError::Degenerate(self.bins));
        }
        if !self.half_width.is_finite() || self.half_width <= 0.0 {
            return Err(GridError::BadWidth(self.half_width));
        }
        Ok(())
    }
}

/// One distribution over log-odds bins.
#[derive(Debug, Clone)]
pub struct LogOddsDistribution {
    spec: GridSpec,
    mass: Vec<f64>,
    clamped: f64,
}

impl LogOddsDistribution {
    pub fn zeros(spec: GridSpec) -> Result<LogOddsDistribution, GridError> {
        spec.validate()?;
        Ok(LogOddsDistribution {
            spec,
            mass: vec![0.0; spec.bins],
            clamped: 0.0,
        })
    }

    /// Point mass at the given log-odds.
    pub fn point(spec: GridSpec, at: f64, mass: f64) -> Result<LogOddsDistribution, GridError> {
        let mut dist = LogOddsDistribution::zeros(spec)?;
        dist.deposit(at, mass);
        Ok(dist)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn center(&self, bin: usize) -> f64 {
        let step = 2.0 * self.spec.half_width / (self.spec.bins - 1) as f64;
        -self.spec.half_width + step * bin as f64
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass clamped onto the edge bins so far.
    pub fn clamped_mass(&self) -> f64 {
        self.clamped
    }

    /// Splits `mass` linearly between the two bin centers bracketing
    /// `at`. Out-of-range positions are clamped onto the edge bin.
    pub fn deposit(&mut self, at: f64, mass: f64) {
        if mass == 0.0 {
            return;
        }
        let step = 2.0 * self.spec.half_width / (self.spec.bins - 1) as f64;
        let pos = (at + self.spec.half_width) / step;
        if pos <= 0.0 {
            if pos < 0.0 {
                self.clamped += mass;
            }
            self.mass[0] += mass;
            return;
        }
        let last = self.spec.bins - 1;
        if pos >= last as f64 {
            if pos > last as f64 {
                self.clamped += mass;
            }
            self.mass[last] += mass;
            return;
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        self.mass[lo] += mass * (1.0 - frac);
        self.mass[lo + 1] += mass * frac;
    }

    /// Fails when more than `tolerance` of total mass was clamped.
    pub fn check_overflow(&self, tolerance: f64) -> Result<(), GridError> {
        if self.clamped > tolerance {
            Err(GridError::Overflow {
                lost: self.clamped,
                half_width: self.spec.half_width,
                suggested: self.spec.half_width * 2.0,
            })
        } else {
            Ok(())
        }
    }

    /// Non-empty bins as (log-odds center, mass).
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, &m)| (self.center(i), m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec { half_width: 30.0, bins: 1 }.validate().is_err());
        assert!(GridSpec { half_width: 0.0, bins: 100 }.validate().is_err());
        GridSpec::default().validate().unwrap();
    }

    #[test]
    fn deposit_preserves_mass_and_mean() {
        let spec = GridSpec { half_width: 10.0, bins: 401 };
        let mut dist = LogOddsDistribution::zeros(spec).unwrap();
        let points = [(-3.21, 0.25), (0.0, 0.5), (4.567, 0.25)];
        for (at, mass) in points {
            dist.deposit(at, mass);
        }
        let total = dist.total();
        assert!((total - 1.0).abs() < 1e-15);
        let mean: f64 = dist.atoms().map(|(x, m)| x * m).sum();
        let want: f64 = points.iter().map(|(x, m)| x * m).sum();
        assert!((mean - want).abs() < 1e-12);
        assert_eq!(dist.clamped_mass(), 0.0);
    }

    #[test]
    fn overflow_is_tracked() {
        let spec = GridSpec { half_width: 1.0, bins: 11 };
        let mut dist = LogOddsDistribution::zeros(spec).unwrap();
        dist.deposit(5.0, 0.1);
        assert!(dist.check_overflow(1e-6).is_err());
        assert!((dist.total() - 0.1).abs() < 1e-15);
    }
}
