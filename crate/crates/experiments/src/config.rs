//! Scenario files.
//!
//! A scenario is a TOML document; every field has a default, so an empty
//! file is the nominal setup (all splitting factors 0.3, mean gains 5 dB,
//! eta 0.7, Rayleigh fading, transmit SNR 10 dB). CSV outputs embed the
//! resolved scenario in their header, and a CSV file is itself accepted as a
//! scenario file.

use noma_secrecy::model::{PowerAllocation, PowerSplit, SystemParams};
use noma_secrecy::nn::TrainConfig;
use noma_secrecy::optimizer::ObjectiveConfig;
use noma_secrecy::secrecy::{AnalyticalOptions, UneCdfForm};
use noma_secrecy::units::db_to_linear;
use serde::{Deserialize, Serialize};

use crate::table::CsvHeader;
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    pub mc_trials: usize,
    pub params: ParamsSection,
    pub split: SplitSection,
    pub alloc: AllocSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub series: SeriesSection,
    pub analysis: AnalysisSection,
    pub objective: ObjectiveSection,
    pub train: TrainSection,
    pub compare: CompareSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            mc_trials: 1_000_000,
            params: ParamsSection::default(),
            split: SplitSection::default(),
            alloc: AllocSection::default(),
            sweep: None,
            series: SeriesSection::default(),
            analysis: AnalysisSection::default(),
            objective: ObjectiveSection::default(),
            train: TrainSection::default(),
            compare: CompareSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    /// Transmit SNR `P/N0`.
    pub snr_db: f64,
    pub n0: f64,
    pub eta: f64,
    pub m: f64,
    /// Mean power gain of every link unless overridden below.
    pub omega_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_su_n_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_su_f_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_se_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_un_e_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_un_uf_db: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            snr_db: 10.0,
            n0: 1.0,
            eta: 0.7,
            m: 1.0,
            omega_db: 5.0,
            omega_su_n_db: None,
            omega_su_f_db: None,
            omega_se_db: None,
            omega_un_e_db: None,
            omega_un_uf_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    /// Shared splitting factor; per-node values below override it.
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_n1: Option<f64>,
    /// Accepted for completeness; the near user harvests nothing in phase 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_n2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_e1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_f2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_e2: Option<f64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            rho: 0.3,
            rho_n1: None,
            rho_n2: None,
            rho_f1: None,
            rho_e1: None,
            rho_f2: None,
            rho_e2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocSection {
    pub alpha_f: f64,
}

impl Default for AllocSection {
    fn default() -> Self {
        Self { alpha_f: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    Rho,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Rho => "rho",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Db,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Unit of `start`/`stop`/`step`. For `snr_db`, `linear` means `P/N0`
    /// ratios; `rho` is always linear.
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_scale() -> Scale {
    Scale::Linear
}

impl Sweep {
    pub fn snr_default() -> Self {
        Self {
            variable: SweepVariable::SnrDb,
            start: 0.0,
            stop: 30.0,
            step: 5.0,
            scale: Scale::Db,
        }
    }

    pub fn rho_default() -> Self {
        Self {
            variable: SweepVariable::Rho,
            start: 0.1,
            stop: 0.9,
            step: 0.1,
            scale: Scale::Linear,
        }
    }

    /// Grid points in the sweep's own unit, cleaned of accumulated rounding.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| round12(self.start + k as f64 * self.step)).collect()
    }

    /// Points converted to the variable's natural unit: dB for SNR, linear
    /// for rho.
    pub fn values(&self) -> Vec<f64> {
        match (self.variable, self.scale) {
            (SweepVariable::SnrDb, Scale::Linear) => self.points().into_iter().map(|v| 10.0 * v.log10()).collect(),
            _ => self.points(),
        }
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSection {
    pub eta: Vec<f64>,
    pub alpha_f: Vec<f64>,
}

impl Default for SeriesSection {
    fn default() -> Self {
        Self {
            eta: vec![0.5, 0.9],
            alpha_f: vec![0.6, 0.9],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UneForm {
    Exact,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Also evaluate the analytical intercept probability.
    pub analytical: bool,
    pub une_form: UneForm,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            analytical: true,
            une_form: UneForm::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub grid_step: f64,
    pub qos_min_rate_near: f64,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        let d = ObjectiveConfig::default();
        Self {
            alpha_min: d.alpha_min,
            alpha_max: d.alpha_max,
            grid_step: d.grid_step,
            qos_min_rate_near: d.qos_min_rate_near,
        }
    }
}

fn rho_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub validation_fraction: f64,
    /// Splitting factors drawn per training sample.
    pub rho_grid: Vec<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            hidden: vec![200, 100],
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            decay_rate: d.decay_rate,
            train_samples: noma_secrecy::dataset::DEFAULT_TRAIN_SAMPLES,
            test_samples: noma_secrecy::dataset::DEFAULT_TEST_SAMPLES,
            validation_fraction: 0.1,
            rho_grid: rho_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub rho: Vec<f64>,
    pub timing_repeats: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            rho: rho_grid(),
            timing_repeats: 5,
        }
    }
}

fn field_err(field: impl Into<String>, reason: impl Into<String>) -> RunError {
    RunError::Validation(format!("{}: {}", field.into(), reason.into()))
}

fn check_open_unit(field: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("{v} must lie in (0, 1)")))
    }
}

fn check_finite(field: &str, v: f64) -> Result<(), RunError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("{v} is not a finite number")))
    }
}

impl Scenario {
    /// Parses a TOML scenario, or the scenario embedded in a CSV header.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let toml_text = if text.starts_with(crate::table::HEADER_TAG) {
            CsvHeader::parse(text)?.config
        } else {
            text.to_string()
        };
        let s: Scenario = toml::from_str(&toml_text).map_err(|e| RunError::Validation(format!("config: {}", e)))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.mc_trials < noma_secrecy::secrecy::MIN_TRIALS {
            return Err(field_err(
                "mc_trials",
                format!("{} is below the minimum of {}", self.mc_trials, noma_secrecy::secrecy::MIN_TRIALS),
            ));
        }
        let p = &self.params;
        check_finite("params.snr_db", p.snr_db)?;
        if !(p.n0 > 0.0 && p.n0.is_finite()) {
            return Err(field_err("params.n0", format!("{} must be positive", p.n0)));
        }
        if !(p.eta > 0.0 && p.eta <= 1.0) {
            return Err(field_err("params.eta", format!("{} must lie in (0, 1]", p.eta)));
        }
        if !(p.m >= 0.5 && p.m.is_finite()) {
            return Err(field_err("params.m", format!("{} must be at least 0.5", p.m)));
        }
        check_finite("params.omega_db", p.omega_db)?;
        for (name, v) in [
            ("params.omega_su_n_db", p.omega_su_n_db),
            ("params.omega_su_f_db", p.omega_su_f_db),
            ("params.omega_se_db", p.omega_se_db),
            ("params.omega_un_e_db", p.omega_un_e_db),
            ("params.omega_un_uf_db", p.omega_un_uf_db),
        ] {
            if let Some(v) = v {
                check_finite(name, v)?;
            }
        }
        let s = &self.split;
        check_open_unit("split.rho", s.rho)?;
        for (name, v) in [
            ("split.rho_n1", s.rho_n1),
            ("split.rho_n2", s.rho_n2),
            ("split.rho_f1", s.rho_f1),
            ("split.rho_e1", s.rho_e1),
            ("split.rho_f2", s.rho_f2),
            ("split.rho_e2", s.rho_e2),
        ] {
            if let Some(v) = v {
                check_open_unit(name, v)?;
            }
        }
        if !(self.alloc.alpha_f > 0.5 && self.alloc.alpha_f < 1.0) {
            return Err(field_err("alloc.alpha_f", format!("{} must lie in (0.5, 1)", self.alloc.alpha_f)));
        }
        if let Some(sw) = &self.sweep {
            for (name, v) in [("sweep.start", sw.start), ("sweep.stop", sw.stop), ("sweep.step", sw.step)] {
                check_finite(name, v)?;
            }
            if !(sw.step > 0.0) {
                return Err(field_err("sweep.step", format!("{} must be positive", sw.step)));
            }
            if sw.stop < sw.start {
                return Err(field_err("sweep.stop", "must not be below sweep.start"));
            }
            if (sw.stop - sw.start) / sw.step > 10_000.0 {
                return Err(field_err("sweep.step", "sweep has more than 10000 points"));
            }
            match (sw.variable, sw.scale) {
                (SweepVariable::Rho, Scale::Db) => return Err(field_err("sweep.scale", "rho sweeps are linear")),
                (SweepVariable::Rho, _) => {
                    for v in sw.points() {
                        check_open_unit("sweep", v)?;
                    }
                }
                (SweepVariable::SnrDb, Scale::Linear) if sw.start <= 0.0 => {
                    return Err(field_err("sweep.start", "linear SNR must be positive"))
                }
                _ => {}
            }
        }
        if self.series.eta.is_empty() {
            return Err(field_err("series.eta", "needs at least one value"));
        }
        for &e in &self.series.eta {
            if !(e > 0.0 && e <= 1.0) {
                return Err(field_err("series.eta", format!("{e} must lie in (0, 1]")));
            }
        }
        if self.series.alpha_f.is_empty() {
            return Err(field_err("series.alpha_f", "needs at least one value"));
        }
        for &a in &self.series.alpha_f {
            if !(a > 0.5 && a < 1.0) {
                return Err(field_err("series.alpha_f", format!("{a} must lie in (0.5, 1)")));
            }
        }
        self.objective_config()
            .validate()
            .map_err(|e| field_err("objective", e.to_string()))?;
        let t = &self.train;
        if t.hidden.is_empty() || t.hidden.contains(&0) {
            return Err(field_err("train.hidden", "needs one or more positive layer widths"));
        }
        if t.epochs == 0 {
            return Err(field_err("train.epochs", "must be positive"));
        }
        if t.batch_size == 0 {
            return Err(field_err("train.batch_size", "must be positive"));
        }
        if !(t.learning_rate >= 0.0 && t.learning_rate.is_finite()) {
            return Err(field_err("train.learning_rate", "must be a nonnegative number"));
        }
        if !(t.decay_rate > 0.0 && t.decay_rate <= 1.0) {
            return Err(field_err("train.decay_rate", format!("{} must lie in (0, 1]", t.decay_rate)));
        }
        if t.train_samples == 0 {
            return Err(field_err("train.train_samples", "must be positive"));
        }
        if t.test_samples == 0 {
            return Err(field_err("train.test_samples", "must be positive"));
        }
        if !(0.0..1.0).contains(&t.validation_fraction) {
            return Err(field_err("train.validation_fraction", "must lie in [0, 1)"));
        }
        if t.rho_grid.is_empty() {
            return Err(field_err("train.rho_grid", "needs at least one value"));
        }
        for &r in &t.rho_grid {
            check_open_unit("train.rho_grid", r)?;
        }
        if self.compare.rho.is_empty() {
            return Err(field_err("compare.rho", "needs at least one value"));
        }
        for &r in &self.compare.rho {
            check_open_unit("compare.rho", r)?;
        }
        if self.compare.timing_repeats == 0 {
            return Err(field_err("compare.timing_repeats", "must be positive"));
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams, RunError> {
        let p = &self.params;
        let o = |v: Option<f64>| db_to_linear(v.unwrap_or(p.omega_db));
        let snr = db_to_linear(p.snr_db);
        SystemParams::new(
            snr * p.n0,
            p.n0,
            p.eta,
            p.m,
            [
                o(p.omega_su_n_db),
                o(p.omega_su_f_db),
                o(p.omega_se_db),
                o(p.omega_un_e_db),
                o(p.omega_un_uf_db),
            ],
        )
        .map_err(|e| field_err("params", e.to_string()))
    }

    /// Splitting factors with per-node overrides applied on top of `rho`.
    pub fn power_split(&self) -> Result<PowerSplit, RunError> {
        self.split_with_rho(self.split.rho, true)
    }

    /// Every node at `rho`, or `rho` under the per-node overrides.
    pub fn split_with_rho(&self, rho: f64, overrides: bool) -> Result<PowerSplit, RunError> {
        let s = &self.split;
        let pick = |v: Option<f64>| if overrides { v.unwrap_or(rho) } else { rho };
        PowerSplit::new(pick(s.rho_n1), pick(s.rho_f1), pick(s.rho_e1), pick(s.rho_f2), pick(s.rho_e2))
            .map_err(|e| field_err("split", e.to_string()))
    }

    pub fn allocation(&self) -> Result<PowerAllocation, RunError> {
        PowerAllocation::from_far(self.alloc.alpha_f).map_err(|e| field_err("alloc.alpha_f", e.to_string()))
    }

    pub fn objective_config(&self) -> ObjectiveConfig {
        let o = &self.objective;
        ObjectiveConfig {
            alpha_min: o.alpha_min,
            alpha_max: o.alpha_max,
            grid_step: o.grid_step,
            qos_min_rate_near: o.qos_min_rate_near,
        }
    }

    pub fn analytical_options(&self) -> AnalyticalOptions {
        AnalyticalOptions {
            une_form: match self.analysis.une_form {
                UneForm::Exact => UneCdfForm::Exact,
                UneForm::Printed => UneCdfForm::Printed,
            },
            ..AnalyticalOptions::default()
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            decay_rate: t.decay_rate,
            seed,
        }
    }

    /// The configured sweep, or `fallback` when none is given. Fails if the
    /// configured sweep is over a different variable.
    pub fn sweep_or(&self, fallback: Sweep) -> Result<Sweep, RunError> {
        match &self.sweep {
            None => Ok(fallback),
            Some(s) if s.variable == fallback.variable => Ok(s.clone()),
            Some(s) => Err(field_err(
                "sweep.variable",
                format!("this command sweeps `{}`, config sweeps `{}`", fallback.variable.name(), s.variable.name()),
            )),
        }
    }
}
