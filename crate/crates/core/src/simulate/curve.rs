//! Learning curves: per-agent correctness estimates with Wilson
//! intervals, plus the canonical CSV rendering.

/// z for two-sided 95% coverage.
const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // rounding must not push the estimate outside its own interval
    (
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub n: u32,
    /// Estimated P(a_n = theta).
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Correctness among trials where the agent observed, when any.
    pub cond_estimate: Option<f64>,
    /// Fraction of trials where the agent observed.
    pub obs_freq: f64,
}

impl CurveRow {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
    pub trials: u64,
    pub seed: u64,
}

impl LearningCurve {
    pub fn row(&self, n: u32) -> &CurveRow {
        &self.rows[(n - 1) as usize]
    }

    /// Mean estimate over the last tenth of the horizon.
    pub fn last_decile_mean(&self) -> f64 {
        let len = self.rows.len();
        let start = len - (len / 10).max(1);
        let tail = &self.rows[start..];
        tail.iter().map(|r| r.estimate).sum::<f64>() / tail.len() as f64
    }

    pub fn last_decile_rows(&self) -> &[CurveRow] {
        let len = self.rows.len();
        &self.rows[len - (len / 10).max(1)..]
    }

    /// CSV with the seed echoed in a comment line: '.' decimals, LF
    /// endings, header row always present.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 48 + 64);
        out.push_str(&format!("# seed={} trials={}\n", self.seed, self.trials));
        out.push_str("n,estimate,lo,hi,cond_estimate,obs_freq\n");
        for row in &self.rows {
            let cond = row.cond_estimate.map(|c| c.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.n, row.estimate, row.lo, row.hi, cond, row.obs_freq
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0u64, 10u64), (5, 10), (10, 10), (9999, 10000), (1, 3)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi, "({k},{n}) p={p} not in [{lo},{hi}]");
            assert!(lo >= 0.0 && hi <= 1.0);
            assert!(hi - lo > 0.0, "interval must not degenerate");
        }
    }

    #[test]
    fn csv_shape() {
        let curve = LearningCurve {
            rows: vec![
                CurveRow {
                    n: 1,
                    estimate: 0.75,
                    lo: 0.7,
                    hi: 0.8,
                    cond_estimate: None,
                    obs_freq: 0.0,
                },
                CurveRow {
                    n: 2,
                    estimate: 0.8,
                    lo: 0.75,
                    hi: 0.85,
                    cond_estimate: Some(0.9),
                    obs_freq: 0.3,
                },
            ],
            trials: 100,
            seed: 42,
        };
        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# seed=42 trials=100");
        assert_eq!(lines[1], "n,estimate,lo,hi,cond_estimate,obs_freq");
        assert_eq!(lines[2], "1,0.75,0.7,0.8,,0");
        assert_eq!(lines[3], "2,0.8,0.75,0.85,0.9,0.3");
        assert!(!csv.contains('\r'));
    }
}
