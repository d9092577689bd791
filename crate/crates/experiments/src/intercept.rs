//! Intercept-probability sweeps over transmit SNR and over the splitting factor.

use noma_secrecy::error::Error;
use noma_secrecy::model::{PowerAllocation, PowerSplit, SystemParams};
use noma_secrecy::secrecy::{intercept_probability_analytical_with, intercept_probability_mc, InterceptEstimate};
use noma_secrecy::units::db_to_linear;

use crate::config::{Scenario, Sweep};
use crate::table::{Cell, Table};
use crate::RunError;

pub const SNR_COLUMNS: [&str; 7] = [
    "snr_db",
    "eta",
    "alpha_f",
    "p_int_mc",
    "p_int_mc_stderr",
    "p_int_analytical",
    "analytical_status",
];

pub const RHO_COLUMNS: [&str; 8] = [
    "rho",
    "eta",
    "alpha_f",
    "p_int_mc",
    "p_int_mc_stderr",
    "p_int_analytical",
    "analytical_status",
    "gap_mc",
];

/// Short code for why an analytical value is missing.
pub fn reason_code(e: &Error) -> &'static str {
    match e {
        Error::Quadrature { .. } => "quadrature_budget",
        Error::NoConvergence { .. } => "specfun_no_convergence",
        Error::Domain { .. } => "specfun_domain",
        Error::Analytical { .. } => "analytical_failure",
        Error::Unsupported(_) => "unsupported",
        _ => "error",
    }
}

struct Point {
    mc: InterceptEstimate,
    analytical: Result<f64, &'static str>,
}

fn evaluate(
    sc: &Scenario,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
) -> Result<Point, RunError> {
    // every point shares the master seed: common random numbers across series
    let mc = intercept_probability_mc(params, alloc, split, sc.mc_trials, sc.seed)
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let analytical = if sc.analysis.analytical {
        intercept_probability_analytical_with(params, alloc, split, &sc.analytical_options())
            .map(|e| e.value)
            .map_err(|e| reason_code(&e))
    } else {
        Err("disabled")
    };
    Ok(Point { mc, analytical })
}

fn point_cells(p: &Point) -> [Cell; 4] {
    [
        p.mc.value.into(),
        p.mc.std_error.into(),
        p.analytical.ok().into(),
        p.analytical.err().unwrap_or("ok").into(),
    ]
}

fn alloc_of(a: f64) -> Result<PowerAllocation, RunError> {
    PowerAllocation::from_far(a).map_err(|e| RunError::Validation(format!("series.alpha_f: {e}")))
}

fn params_at(base: &SystemParams, snr_db: f64, eta: f64) -> Result<SystemParams, RunError> {
    (*base)
        .with_snr(db_to_linear(snr_db))
        .and_then(|p| p.with_eta(eta))
        .map_err(|e| RunError::Validation(format!("params: {e}")))
}

pub fn intercept_vs_snr(sc: &Scenario) -> Result<Table, RunError> {
    let sweep = sc.sweep_or(Sweep::snr_default())?;
    let base = sc.system_params()?;
    let split = sc.power_split()?;
    let mut t = Table::new("intercept-vs-snr", &SNR_COLUMNS);
    for &eta in &sc.series.eta {
        for &a in &sc.series.alpha_f {
            let alloc = alloc_of(a)?;
            for snr_db in sweep.values() {
                let params = params_at(&base, snr_db, eta)?;
                let p = evaluate(sc, &params, &alloc, &split)?;
                let mut row = vec![snr_db.into(), eta.into(), a.into()];
                row.extend(point_cells(&p));
                t.push(row);
            }
        }
    }
    t.meta.push(("mc_trials".into(), sc.mc_trials.to_string()));
    Ok(t)
}

/// Sweeps rho with every node's splitting factor set to it, at the
/// configured transmit SNR.
pub fn intercept_vs_rho(sc: &Scenario) -> Result<Table, RunError> {
    let sweep = sc.sweep_or(Sweep::rho_default())?;
    let base = sc.system_params()?;
    let rhos = sweep.values();
    let (a_lo, a_hi) = sc
        .series
        .alpha_f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let mut t = Table::new("intercept-vs-rho", &RHO_COLUMNS);
    for &eta in &sc.series.eta {
        let params = params_at(&base, sc.params.snr_db, eta)?;
        let mut block = Vec::new();
        for &a in &sc.series.alpha_f {
            let alloc = alloc_of(a)?;
            for &rho in &rhos {
                let split = sc.split_with_rho(rho, false)?;
                block.push((rho, a, evaluate(sc, &params, &alloc, &split)?));
            }
        }
        let mc_at = |rho: f64, a: f64| {
            block
                .iter()
                .find(|(r, al, _)| *r == rho && *al == a)
                .map(|(_, _, p)| p.mc.value)
        };
        for (rho, a, p) in &block {
            let gap = if a_hi > a_lo {
                mc_at(*rho, a_hi).zip(mc_at(*rho, a_lo)).map(|(h, l)| h - l)
            } else {
                None
            };
            let mut row = vec![(*rho).into(), eta.into(), (*a).into()];
            row.extend(point_cells(p));
            row.push(gap.into());
            t.push(row);
        }
    }
    t.meta.push(("mc_trials".into(), sc.mc_trials.to_string()));
    t.meta.push(("snr_db".into(), sc.params.snr_db.to_string()));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        Scenario {
            mc_trials: 5_000,
            ..Scenario::default()
        }
    }

    #[test]
    fn snr_grid_row_count() {
        let t = intercept_vs_snr(&small()).unwrap();
        assert_eq!(t.rows.len(), 28);
        assert_eq!(t.columns, SNR_COLUMNS);
        for r in &t.rows {
            let v = r[3].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn rho_grid_and_gap() {
        let mut sc = small();
        sc.series.eta = vec![0.7];
        let t = intercept_vs_rho(&sc).unwrap();
        assert_eq!(t.rows.len(), 18);
        let mc = t.values("p_int_mc");
        let gap = t.values("gap_mc");
        // rows 0..9 are alpha 0.6, 9..18 alpha 0.9, same rho order
        for i in 0..9 {
            let expect = mc[9 + i].unwrap() - mc[i].unwrap();
            assert_eq!(gap[i], Some(expect));
            assert_eq!(gap[9 + i], Some(expect));
        }
    }

    #[test]
    fn disabled_analytical_is_marked() {
        let mut sc = small();
        sc.analysis.analytical = false;
        sc.series.eta = vec![0.7];
        sc.series.alpha_f = vec![0.8];
        let t = intercept_vs_snr(&sc).unwrap();
        assert!(t.values("p_int_analytical").iter().all(Option::is_none));
        let j = t.column("analytical_status").unwrap();
        assert!(t.rows.iter().all(|r| r[j] == Cell::from("disabled")));
    }
}
