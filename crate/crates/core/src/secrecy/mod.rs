//! Secrecy rate, intercept events and the intercept probability.
//!
//! Monte-Carlo estimation is the ground truth. The analytical route in
//! [`analytical`] integrates the legitimate bottleneck CDF against the
//! eavesdropper density, and [`diagnostics`] checks each of its factors against
//! sampled marginals when the two routes disagree.

pub mod analytical;
pub mod diagnostics;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{
    compute_sinrs, ChannelRealization, ChannelSampler, FadingSampler, PowerAllocation,
    PowerSplit, SinrSet, SystemParams,
};
use crate::rng::{chunks, stream};

pub use analytical::{
    cdf_x, intercept_probability_analytical, intercept_probability_analytical_with,
    integrand_terms, pdf_y, AnalyticalOptions, IntegrandTerms, UneCdfForm,
};

/// Smallest trial count accepted by the Monte-Carlo estimator.
pub const MIN_TRIALS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MonteCarlo,
    Analytical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_trials: usize,
    pub method: Method,
}

impl InterceptEstimate {
    pub fn from_counts(events: usize, n_trials: usize) -> Self {
        let value = events as f64 / n_trials as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / n_trials as f64).sqrt(),
            n_trials,
            method: Method::MonteCarlo,
        }
    }

    pub fn analytical(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            std_error: 0.0,
            n_trials: 0,
            method: Method::Analytical,
        }
    }
}

fn half_log2(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

/// `[C_s - C_e]^+` for the two-phase DF link, bits/s/Hz.
pub fn secrecy_rate_df(s: &SinrSet) -> f64 {
    (half_log2(s.legitimate()) - half_log2(s.eavesdropper())).max(0.0)
}

/// The eavesdropper's best SNR strictly exceeds the legitimate bottleneck.
pub fn intercept_event(s: &SinrSet) -> bool {
    s.legitimate() < s.eavesdropper()
}

/// Counts intercept events over `n_trials` draws from `sampler`.
///
/// Trials are cut into fixed chunks, each with its own stream derived from
/// `seed`; the count is the same for any thread count.
pub fn count_intercepts<S: ChannelSampler>(
    sampler: &S,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    n_trials: usize,
    seed: u64,
) -> usize {
    chunks(n_trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, len)| {
            let mut rng = stream(seed, idx);
            (0..len)
                .filter(|_| {
                    let ch = sampler.sample(&mut rng);
                    intercept_event(&compute_sinrs(params, alloc, split, &ch))
                })
                .count()
        })
        .sum()
}

pub fn intercept_probability_mc_with<S: ChannelSampler>(
    sampler: &S,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    n_trials: usize,
    seed: u64,
) -> Result<InterceptEstimate> {
    if n_trials < MIN_TRIALS {
        return Err(invalid(
            "n_trials",
            format!("{n_trials} is below the minimum of {MIN_TRIALS}"),
        ));
    }
    let events = count_intercepts(sampler, params, alloc, split, n_trials, seed);
    Ok(InterceptEstimate::from_counts(events, n_trials))
}

/// Monte-Carlo intercept probability under the configured fading.
pub fn intercept_probability_mc(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    n_trials: usize,
    seed: u64,
) -> Result<InterceptEstimate> {
    intercept_probability_mc_with(&FadingSampler::new(params), params, alloc, split, n_trials, seed)
}

/// Draws `n` SINR sets with the same chunked streams as the estimator.
pub fn sample_sinrs(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    n: usize,
    seed: u64,
) -> Vec<SinrSet> {
    let sampler = FadingSampler::new(params);
    chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(idx, len)| {
            let mut rng = stream(seed, idx);
            let sampler = &sampler;
            (0..len)
                .map(move |_| compute_sinrs(params, alloc, split, &sampler.sample(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Every gain drawn independently and uniformly from a small set of levels.
/// Small enough to enumerate, so it checks the estimator exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSampler {
    pub levels: Vec<f64>,
}

impl ChannelSampler for DiscreteSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let mut g = [0.0; 5];
        for gi in g.iter_mut() {
            *gi = self.levels[rng.gen_range(0..self.levels.len())];
        }
        ChannelRealization::from_array(g)
    }
}

impl DiscreteSampler {
    /// Exact intercept probability over all `levels^5` outcomes.
    pub fn enumerate(&self, params: &SystemParams, alloc: &PowerAllocation, split: &PowerSplit) -> Result<f64> {
        let k = self.levels.len();
        if k == 0 || k > 16 {
            return Err(invalid("levels", "need between 1 and 16 levels"));
        }
        let total = k.pow(5);
        let mut hits = 0usize;
        for code in 0..total {
            let mut g = [0.0; 5];
            let mut c = code;
            for gi in g.iter_mut() {
                *gi = self.levels[c % k];
                c /= k;
            }
            let ch = ChannelRealization::from_array(g);
            hits += intercept_event(&compute_sinrs(params, alloc, split, &ch)) as usize;
        }
        Ok(hits as f64 / total as f64)
    }
}
