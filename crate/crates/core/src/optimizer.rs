//! Per-realization choice of the far-user power share.
//!
//! The far-user rate `log2(1 + snr_f1)` is strictly increasing in `alpha_f`,
//! so without a constraint the optimum sits on the grid's upper edge. A
//! near-user rate floor caps `alpha_f` from above and makes the optimum depend
//! on the near user's channel.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::model::{interference_limited, ChannelRealization, PowerAllocation, PowerSplit, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    /// Exclusive lower bound of the search range.
    pub alpha_min: f64,
    /// Exclusive upper bound of the search range.
    pub alpha_max: f64,
    pub grid_step: f64,
    /// Near-user rate floor in bits/s/Hz; 0 disables it.
    pub qos_min_rate_near: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            alpha_min: 0.5,
            alpha_max: 1.0,
            grid_step: 1e-3,
            qos_min_rate_near: 0.5,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_min >= 0.5 && self.alpha_min < self.alpha_max && self.alpha_max <= 1.0) {
            return Err(invalid(
                "alpha_min/alpha_max",
                format!("need 0.5 <= {} < {} <= 1", self.alpha_min, self.alpha_max),
            ));
        }
        if !(self.grid_step > 0.0 && self.grid_step < self.alpha_max - self.alpha_min) {
            return Err(invalid("grid_step", format!("{} does not fit the range", self.grid_step)));
        }
        if !(self.qos_min_rate_near >= 0.0) {
            return Err(invalid("qos_min_rate_near", "must be nonnegative"));
        }
        Ok(())
    }

    /// Grid points `alpha_min + k * step` strictly inside the range.
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let limit = self.alpha_max - 1e-12;
        (1..)
            .map(move |k| self.alpha_min + k as f64 * self.grid_step)
            .take_while(move |&a| a < limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    pub alpha_f_star: f64,
    pub objective_value: f64,
    pub feasible: bool,
}

fn check_alpha(alpha_f: f64) -> Result<PowerAllocation> {
    PowerAllocation::from_far(alpha_f)
}

/// `log2(1 + snr_f1)` at the given far-user share.
pub fn far_rate_objective(
    alpha_f: f64,
    ch: &ChannelRealization,
    params: &SystemParams,
    split: &PowerSplit,
) -> Result<f64> {
    let alloc = check_alpha(alpha_f)?;
    Ok(far_rate_unchecked(&alloc, ch, params, split))
}

fn far_rate_unchecked(
    alloc: &PowerAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
    split: &PowerSplit,
) -> f64 {
    let rx = (1.0 - split.rho_f1) * ch.g_su_f * params.p_tx;
    (1.0 + interference_limited(rx, alloc, params.n0)).log2()
}

/// Near user's own-symbol rate `0.5 log2(1 + snr_n2)`.
pub fn near_rate(
    alpha_f: f64,
    ch: &ChannelRealization,
    params: &SystemParams,
    split: &PowerSplit,
) -> Result<f64> {
    let alloc = check_alpha(alpha_f)?;
    Ok(near_rate_unchecked(&alloc, ch, params, split))
}

fn near_rate_unchecked(
    alloc: &PowerAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
    split: &PowerSplit,
) -> f64 {
    let snr = (1.0 - split.rho_n1) * ch.g_su_n * alloc.alpha_n() * params.p_tx / params.n0;
    0.5 * (1.0 + snr).log2()
}

/// Exhaustive grid scan for the feasible share with the best far-user rate.
pub fn oracle_search(
    ch: &ChannelRealization,
    params: &SystemParams,
    split: &PowerSplit,
    cfg: &ObjectiveConfig,
) -> OptResult {
    let mut best: Option<(f64, f64)> = None;
    for a in cfg.grid() {
        let alloc = match PowerAllocation::from_far(a) {
            Ok(al) => al,
            Err(_) => continue,
        };
        if near_rate_unchecked(&alloc, ch, params, split) < cfg.qos_min_rate_near {
            continue;
        }
        let v = far_rate_unchecked(&alloc, ch, params, split);
        // strict improvement only: ties stay at the smaller share
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((a, v));
        }
    }
    match best {
        Some((a, v)) => OptResult {
            alpha_f_star: a,
            objective_value: v,
            feasible: true,
        },
        None => {
            let a = cfg.alpha_min + cfg.grid_step;
            let v = PowerAllocation::from_far(a)
                .map(|al| far_rate_unchecked(&al, ch, params, split))
                .unwrap_or(0.0);
            OptResult {
                alpha_f_star: a,
                objective_value: v,
                feasible: false,
            }
        }
    }
}

/// Uniform draw on the open interval `(0.5, 1)`.
pub fn random_allocation<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let a = rng.gen_range(0.5..1.0);
        if a > 0.5 {
            return a;
        }
    }
}
