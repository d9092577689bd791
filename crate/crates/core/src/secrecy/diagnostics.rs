//! Factor-by-factor comparison of the analytical route against sampled marginals.
//!
//! When analytical and Monte-Carlo intercept probabilities disagree, each
//! factor of the integrand is checked on its own: the direct far-user CDF
//! against the empirical CDF of `snr_f1`, the relayed CDF against that of
//! `snr_rf2`, and the eavesdropper distribution against that of `Y`. If every
//! factor agrees, the remaining gap is the dependence the factorization
//! ignores (both `snr_rf2` and `snr_re2` scale with the source-to-relay gain).

use std::fmt;

use crate::error::Result;
use crate::model::{PowerAllocation, PowerSplit, SinrSet, SystemParams};

use super::analytical::{AnalyticalOptions, Ctx};
use super::sample_sinrs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `F1`, the direct far-user SINR CDF.
    DirectFar,
    /// `F2`, the relayed far-user SNR CDF.
    Relay,
    /// `f_Y`, checked through its CDF.
    Eavesdropper,
    /// All factors agree; the product form itself is off.
    Dependence,
}

impl Factor {
    pub fn label(&self) -> &'static str {
        match self {
            Factor::DirectFar => "F1",
            Factor::Relay => "F2",
            Factor::Eavesdropper => "f_Y",
            Factor::Dependence => "X-Y dependence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorCheck {
    pub factor: Factor,
    /// Largest |formula - empirical CDF| over the grid.
    pub max_abs_dev: f64,
    /// Abscissa of the largest deviation.
    pub at: f64,
    pub divergent: bool,
}

/// Maximum tolerated CDF deviation before a factor is flagged.
pub const FACTOR_TOLERANCE: f64 = 0.01;

const GRID: usize = 60;

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

fn sorted_by<F: Fn(&SinrSet) -> f64>(draws: &[SinrSet], f: F) -> Vec<f64> {
    let mut v: Vec<f64> = draws.iter().map(f).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn worst<F: FnMut(f64) -> Result<f64>>(
    factor: Factor,
    grid: impl Iterator<Item = f64>,
    sorted: &[f64],
    mut formula: F,
    threshold: f64,
) -> Result<FactorCheck> {
    let mut check = FactorCheck {
        factor,
        max_abs_dev: 0.0,
        at: 0.0,
        divergent: false,
    };
    for x in grid {
        let d = (formula(x)? - ecdf(sorted, x)).abs();
        if d > check.max_abs_dev {
            check.max_abs_dev = d;
            check.at = x;
        }
    }
    check.divergent = check.max_abs_dev > threshold;
    Ok(check)
}

/// Checks F1, F2 and f_Y against `n_samples` Monte-Carlo draws.
pub fn check_factors(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    opts: &AnalyticalOptions,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<FactorCheck>> {
    let ctx = Ctx::new(params, alloc, split, opts);
    let draws = sample_sinrs(params, alloc, split, n_samples, seed);
    let threshold = FACTOR_TOLERANCE + 4.0 * (0.25 / n_samples as f64).sqrt();
    let b = alloc.sinr_ceiling();
    let x_grid = || (1..GRID).map(move |i| b * i as f64 / GRID as f64);
    let y_grid = (1..=2 * GRID).map(|i| b * i as f64 / GRID as f64);

    let f1 = worst(
        Factor::DirectFar,
        x_grid(),
        &sorted_by(&draws, |d| d.snr_f1),
        |x| ctx.cdf_far(x),
        threshold,
    )?;
    let f2 = worst(
        Factor::Relay,
        x_grid(),
        &sorted_by(&draws, |d| d.snr_rf2),
        |x| ctx.relay_cdf(x).map(|r| r.0),
        threshold,
    )?;
    let fy = worst(
        Factor::Eavesdropper,
        y_grid,
        &sorted_by(&draws, |d| d.eavesdropper()),
        |y| ctx.cdf_y(y),
        threshold,
    )?;
    Ok(vec![f1, f2, fy])
}

/// Analytical vs Monte-Carlo at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointComparison {
    pub label: String,
    pub analytical: std::result::Result<f64, String>,
    pub monte_carlo: f64,
    pub mc_std_error: f64,
}

impl PointComparison {
    pub fn abs_diff(&self) -> Option<f64> {
        self.analytical.as_ref().ok().map(|a| (a - self.monte_carlo).abs())
    }

    pub fn agrees(&self, tolerance: f64) -> bool {
        self.abs_diff().is_some_and(|d| d <= tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub tolerance: f64,
    pub points: Vec<PointComparison>,
    /// Index into `points` of the first disagreeing point.
    pub first_failure: Option<usize>,
    /// Factor checks at the first disagreeing point.
    pub checks: Vec<FactorCheck>,
    pub first_divergent: Option<Factor>,
}

impl DiscrepancyReport {
    pub fn all_agree(&self) -> bool {
        self.first_failure.is_none()
    }

    /// Builds the report; factor checks run only when some point disagrees,
    /// using the parameters of the first such point.
    pub fn build<F>(
        tolerance: f64,
        points: Vec<PointComparison>,
        mut setup_of: F,
        opts: &AnalyticalOptions,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self>
    where
        F: FnMut(usize) -> (SystemParams, PowerAllocation, PowerSplit),
    {
        let first_failure = points.iter().position(|p| !p.agrees(tolerance));
        let (checks, first_divergent) = match first_failure {
            None => (Vec::new(), None),
            Some(i) => {
                let (p, a, s) = setup_of(i);
                let checks = check_factors(&p, &a, &s, opts, n_samples, seed)?;
                let first = checks
                    .iter()
                    .find(|c| c.divergent)
                    .map(|c| c.factor)
                    .unwrap_or(Factor::Dependence);
                (checks, Some(first))
            }
        };
        Ok(Self {
            tolerance,
            points,
            first_failure,
            checks,
            first_divergent,
        })
    }
}

impl fmt::Display for DiscrepancyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "analytical vs monte-carlo (tolerance {})", self.tolerance)?;
        for p in &self.points {
            match &p.analytical {
                Ok(a) => writeln!(
                    f,
                    "  {:>12}  analytical {:.5}  mc {:.5} +/- {:.5}  |diff| {:.5}  {}",
                    p.label,
                    a,
                    p.monte_carlo,
                    p.mc_std_error,
                    (a - p.monte_carlo).abs(),
                    if p.agrees(self.tolerance) { "ok" } else { "DIVERGES" }
                )?,
                Err(e) => writeln!(f, "  {:>12}  analytical failed ({e})  mc {:.5}", p.label, p.monte_carlo)?,
            }
        }
        if let Some(i) = self.first_failure {
            writeln!(f, "factor checks at {}:", self.points[i].label)?;
            for c in &self.checks {
                writeln!(
                    f,
                    "  {:<14} max |dev| {:.5} at {:.4}  {}",
                    c.factor.label(),
                    c.max_abs_dev,
                    c.at,
                    if c.divergent { "DIVERGENT" } else { "ok" }
                )?;
            }
            if let Some(d) = self.first_divergent {
                writeln!(f, "first divergent factor: {}", d.label())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::db_to_linear;

    #[test]
    fn direct_far_factor_agrees_with_samples() {
        let p = SystemParams::uniform(10.0, 1.0, 0.7, 1.0, db_to_linear(5.0)).unwrap();
        let a = PowerAllocation::from_far(0.8).unwrap();
        let s = PowerSplit::uniform(0.3).unwrap();
        let checks = check_factors(&p, &a, &s, &AnalyticalOptions::exact(), 200_000, 5).unwrap();
        assert_eq!(checks[0].factor, Factor::DirectFar);
        assert!(!checks[0].divergent, "{:?}", checks[0]);
        // the exact eavesdropper form must agree as well
        assert!(!checks[2].divergent, "{:?}", checks[2]);
    }

    #[test]
    fn agreeing_points_skip_factor_checks() {
        let pts = vec![PointComparison {
            label: "x".into(),
            analytical: Ok(0.5),
            monte_carlo: 0.505,
            mc_std_error: 0.001,
        }];
        let r = DiscrepancyReport::build(
            0.02,
            pts,
            |_| unreachable!(),
            &AnalyticalOptions::default(),
            1000,
            1,
        )
        .unwrap();
        assert!(r.all_agree());
        assert!(r.first_divergent.is_none());
    }

    #[test]
    fn failed_analytical_point_counts_as_disagreement() {
        let p = PointComparison {
            label: "x".into(),
            analytical: Err("boom".into()),
            monte_carlo: 0.5,
            mc_std_error: 0.0,
        };
        assert!(!p.agrees(1.0));
    }
}
