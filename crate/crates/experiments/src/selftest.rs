//! Built-in verification run: special-function identities, the Monte-Carlo
//! estimator against exhaustive enumeration, and a backprop gradient check.

use std::fmt;

use ndarray::{Array1, Array2};
use noma_secrecy::model::{PowerAllocation, PowerSplit, SystemParams};
use noma_secrecy::nn::{gradient_check, Mlp};
use noma_secrecy::secrecy::{intercept_probability_mc_with, DiscreteSampler};
use noma_secrecy::specfun::{exp_integral_ei_with, regularized_gamma_q_with, SpecFunConfig};
use noma_secrecy::units::db_to_linear;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Special-function settings under test. Loosening them is the negative
    /// control.
    pub specfun: SpecFunConfig,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            specfun: SpecFunConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub name: &'static str,
    /// Measured error, or `None` if the computation itself failed.
    pub error: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
}

impl Item {
    pub fn passed(&self) -> bool {
        self.error.is_some_and(|e| e <= self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub seed: u64,
    pub items: Vec<Item>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(Item::passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.items.iter().filter(|i| !i.passed()).map(|i| i.name).collect()
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "noma-sec {} selftest (noma-secrecy {}, model record v{}), seed {}",
            env!("CARGO_PKG_VERSION"),
            noma_secrecy::VERSION,
            noma_secrecy::persist::FORMAT_VERSION,
            self.seed
        )?;
        for i in &self.items {
            let err = i.error.map_or("failed".to_string(), |e| format!("{e:.3e}"));
            writeln!(
                f,
                "{} {:<22} error {:>9}  tolerance {:.1e}  {}",
                if i.passed() { "PASS" } else { "FAIL" },
                i.name,
                err,
                i.tolerance,
                i.detail
            )?;
        }
        let failed = self.failures();
        if failed.is_empty() {
            writeln!(f, "all {} items passed", self.items.len())
        } else {
            writeln!(f, "{} of {} items failed: {}", failed.len(), self.items.len(), failed.join(", "))
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `Ei(x) = gamma + ln|x| + sum x^k / (k k!)`, summed until terms vanish.
pub fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

fn gamma_q_one(cfg: &SpecFunConfig) -> Item {
    let mut worst: Option<f64> = Some(0.0);
    let mut detail = String::from("Q(1,x) = exp(-x), x in [0.01, 30]");
    for k in 0..60 {
        let x = 0.01 + 0.5 * k as f64;
        match regularized_gamma_q_with(1.0, x, cfg) {
            Ok(r) => worst = worst.map(|w| w.max(rel(r.value, (-x).exp()))),
            Err(e) => {
                worst = None;
                detail = format!("x = {x}: {e}");
                break;
            }
        }
    }
    Item {
        name: "gamma_q_shape_1",
        error: worst,
        tolerance: 1e-10,
        detail,
    }
}

fn gamma_q_three(cfg: &SpecFunConfig) -> Item {
    let expect = 8.5 * (-3.0f64).exp();
    let (error, detail) = match regularized_gamma_q_with(3.0, 3.0, cfg) {
        Ok(r) => (Some((r.value - expect).abs()), "Q(3,3) = 8.5 exp(-3)".to_string()),
        Err(e) => (None, e.to_string()),
    };
    Item {
        name: "gamma_q_finite_sum",
        error,
        tolerance: 1e-10,
        detail,
    }
}

fn ei_values(cfg: &SpecFunConfig) -> Item {
    let mut worst: Option<f64> = Some(0.0);
    let mut detail = String::from("Ei(x) vs series, x in [-5, -0.1]");
    for x in [-0.1, -0.5, -1.0, -2.0, -3.5, -5.0] {
        match exp_integral_ei_with(x, cfg) {
            Ok(r) => worst = worst.map(|w| w.max(rel(r.value, ei_series(x)))),
            Err(e) => {
                worst = None;
                detail = format!("x = {x}: {e}");
                break;
            }
        }
    }
    Item {
        name: "ei_series_oracle",
        error: worst,
        tolerance: 1e-9,
        detail,
    }
}

/// MC over a 3-level stub channel against all 243 outcomes; error in
/// standard errors.
pub fn mc_enumeration(seed: u64) -> Item {
    let run = || -> noma_secrecy::Result<(f64, f64, f64)> {
        let p = SystemParams::uniform(10.0, 1.0, 0.7, 1.0, db_to_linear(5.0))?;
        let a = PowerAllocation::from_far(0.8)?;
        let s = PowerSplit::uniform(0.3)?;
        let sampler = DiscreteSampler {
            levels: vec![0.2, 1.0, 3.0],
        };
        let exact = sampler.enumerate(&p, &a, &s)?;
        let n = 100_000;
        let est = intercept_probability_mc_with(&sampler, &p, &a, &s, n, seed)?;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        Ok((est.value, exact, se))
    };
    match run() {
        Ok((mc, exact, se)) => Item {
            name: "mc_vs_enumeration",
            error: Some((mc - exact).abs() / se),
            tolerance: 3.0,
            detail: format!("mc {mc:.5} exact {exact:.5} (error in standard errors)"),
        },
        Err(e) => Item {
            name: "mc_vs_enumeration",
            error: None,
            tolerance: 3.0,
            detail: e.to_string(),
        },
    }
}

/// Max relative backprop error on `hidden` with a random batch. Biases are
/// randomized so no pre-activation sits exactly on the ReLU kink.
pub fn gradient_item(name: &'static str, hidden: &[usize], batch: usize, probes: Option<usize>, seed: u64) -> Item {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((batch, 6), |_| rng.gen_range(-1.5..1.5));
    let y = Array1::from_shape_fn(batch, |_| rng.gen_range(0.55..0.95));
    let result = Mlp::new(6, hidden, seed).and_then(|mut net| {
        for l in &mut net.layers {
            l.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        }
        gradient_check(&net, x.view(), y.view(), probes, seed)
    });
    let (error, detail) = match result {
        Ok(e) => (Some(e), format!("layers {hidden:?}, batch {batch}")),
        Err(e) => (None, e.to_string()),
    };
    Item {
        name,
        error,
        tolerance: 1e-5,
        detail,
    }
}

/// The incomplete-gamma identities and the Ei series comparison.
pub fn specfun_items(cfg: &SpecFunConfig) -> Vec<Item> {
    vec![gamma_q_one(cfg), gamma_q_three(cfg), ei_values(cfg)]
}

pub fn run(opts: &SelftestOptions) -> SelftestReport {
    let mut items = specfun_items(&opts.specfun);
    items.extend([
        mc_enumeration(opts.seed),
        gradient_item("gradient_small", &[5, 4], 8, None, opts.seed),
        gradient_item("gradient_200_100", &[200, 100], 16, Some(400), opts.seed),
    ]);
    SelftestReport { seed: opts.seed, items }
}
