//! Training the allocation network and benchmarking it against the oracle.

use std::hint::black_box;
use std::time::Instant;

use ndarray::Array2;
use noma_secrecy::dataset::{generate_dataset, generate_samples, raw_matrix, Sample, SplitSource, FEATURE_DIM};
use noma_secrecy::error::Error;
use noma_secrecy::model::SystemParams;
use noma_secrecy::nn::{mse_loss, train, Mlp};
use noma_secrecy::optimizer::{far_rate_objective, near_rate, oracle_search, random_allocation, ObjectiveConfig};
use noma_secrecy::persist::Model;
use noma_secrecy::rng::stream;

use crate::config::Scenario;
use crate::table::Table;
use crate::{sub_seed, RunError, SeedTag};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Mean training loss per epoch.
    pub history: Vec<f64>,
    pub train_mse: f64,
    /// `None` when no validation rows were held out.
    pub val_mse: Option<f64>,
    pub n_train: usize,
    pub n_val: usize,
    /// Draws dropped because no allocation met the near-user floor.
    pub excluded: usize,
}

impl TrainOutcome {
    pub fn history_table(&self) -> Table {
        let mut t = Table::new("train", &["epoch", "loss"]);
        for (i, l) in self.history.iter().enumerate() {
            t.push(vec![(i + 1).into(), (*l).into()]);
        }
        t.meta.push(("model_digest".into(), self.model.digest()));
        t
    }

    pub fn report(&self) -> String {
        let val = self.val_mse.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        format!(
            "layers {:?}, {} training / {} validation samples ({} infeasible draws excluded)\n\
             final train mse {:.6e}, validation mse {val}\nmodel digest {}\n",
            self.model.net.hidden_sizes(),
            self.n_train,
            self.n_val,
            self.excluded,
            self.train_mse,
            self.model.digest()
        )
    }
}

fn numerical(e: Error) -> RunError {
    match e {
        Error::InvalidParam { .. } | Error::Dimension { .. } => RunError::Validation(e.to_string()),
        other => RunError::Numerical(other.to_string()),
    }
}

fn mse_of(model: &Model, features: &Array2<f64>, labels: &[f64]) -> Result<f64, RunError> {
    let pred = model.net.forward_batch(features.view()).map_err(numerical)?;
    mse_loss(pred.as_slice().expect("contiguous"), labels).map_err(numerical)
}

/// Generates the training set (splitting factor drawn per sample from
/// `train.rho_grid`), holds out the validation fraction and trains.
pub fn train_model(sc: &Scenario) -> Result<TrainOutcome, RunError> {
    let params = sc.system_params()?;
    let t = &sc.train;
    let data = generate_dataset(
        &params,
        &SplitSource::EqualFromGrid(t.rho_grid.clone()),
        &sc.objective_config(),
        t.train_samples,
        sub_seed(sc.seed, SeedTag::TrainData),
        None,
    )
    .map_err(numerical)?;
    let excluded = data.excluded;
    let (tr, val) = data.split_validation(t.validation_fraction).map_err(numerical)?;
    if t.batch_size > tr.len() {
        return Err(RunError::Validation(format!(
            "train.batch_size: {} exceeds the {} training rows",
            t.batch_size,
            tr.len()
        )));
    }
    let mut net = Mlp::new(FEATURE_DIM, &t.hidden, sub_seed(sc.seed, SeedTag::Init)).map_err(numerical)?;
    let cfg = sc.train_config(sub_seed(sc.seed, SeedTag::Shuffle));
    let history = train(&mut net, tr.features.view(), tr.labels.view(), &cfg).map_err(numerical)?;
    let model = Model::new(net, tr.norm.clone()).map_err(numerical)?;
    let train_mse = mse_of(&model, &tr.features, tr.labels.as_slice().expect("contiguous"))?;
    let val_mse = if val.is_empty() {
        None
    } else {
        Some(mse_of(&model, &val.features, val.labels.as_slice().expect("contiguous"))?)
    };
    Ok(TrainOutcome {
        model,
        history,
        train_mse,
        val_mse,
        n_train: tr.len(),
        n_val: val.len(),
        excluded,
    })
}

pub const COMPARE_COLUMNS: [&str; 9] = [
    "rho",
    "rate_oracle",
    "rate_dl",
    "rate_random",
    "time_oracle_s",
    "time_dl_s",
    "qos_violation_dl",
    "n_test",
    "n_excluded",
];

/// Wall-clock columns, excluded from reproducibility comparisons.
pub const TIMING_COLUMNS: [&str; 2] = ["time_oracle_s", "time_dl_s"];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median over `repeats` runs of the wall-clock seconds taken by `f`.
pub fn median_seconds<T>(repeats: usize, mut f: impl FnMut() -> T) -> f64 {
    let times = (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            black_box(f());
            t.elapsed().as_secs_f64()
        })
        .collect();
    median(times)
}

/// Median seconds for one batch inference over `raw` feature rows.
pub fn time_inference(model: &Model, raw: &Array2<f64>, repeats: usize) -> Result<f64, RunError> {
    model.predict(raw).map_err(numerical)?;
    Ok(median_seconds(repeats, || model.predict(raw)))
}

/// Median seconds for one oracle search per sample.
pub fn time_oracle(samples: &[Sample], params: &SystemParams, cfg: &ObjectiveConfig, repeats: usize) -> f64 {
    median_seconds(repeats, || {
        samples
            .iter()
            .map(|s| oracle_search(&s.channel, params, &s.split, cfg).alpha_f_star)
            .sum::<f64>()
    })
}

/// Test draws at one splitting factor, shared by every rho (common random
/// numbers).
pub fn test_samples(sc: &Scenario, params: &SystemParams, rho: f64) -> Result<(Vec<Sample>, usize), RunError> {
    let split = sc.split_with_rho(rho, false)?;
    generate_samples(
        params,
        &SplitSource::Fixed(split),
        &sc.objective_config(),
        sc.train.test_samples,
        sub_seed(sc.seed, SeedTag::TestData),
    )
    .map_err(numerical)
}

pub fn compare(sc: &Scenario, model: &Model) -> Result<Table, RunError> {
    if model.net.input_dim() != FEATURE_DIM {
        return Err(RunError::Validation(format!(
            "model: expects {} features, scenario provides {FEATURE_DIM}",
            model.net.input_dim()
        )));
    }
    let params = sc.system_params()?;
    let cfg = sc.objective_config();
    let repeats = sc.compare.timing_repeats;
    let mut t = Table::new("compare", &COMPARE_COLUMNS);
    for &rho in &sc.compare.rho {
        let (samples, excluded) = test_samples(sc, &params, rho)?;
        if samples.is_empty() {
            return Err(RunError::Numerical(format!("every test draw at rho = {rho} is infeasible")));
        }
        let n = samples.len() as f64;
        let raw = raw_matrix(&samples);
        let predicted = model.predict(&raw).map_err(numerical)?;
        let mut rng = stream(sub_seed(sc.seed, SeedTag::Random), 0);
        let (mut oracle, mut dl, mut random, mut violations) = (0.0, 0.0, 0.0, 0usize);
        for (s, &a) in samples.iter().zip(&predicted) {
            oracle += far_rate_objective(s.label, &s.channel, &params, &s.split).map_err(numerical)?;
            dl += far_rate_objective(a, &s.channel, &params, &s.split).map_err(numerical)?;
            if near_rate(a, &s.channel, &params, &s.split).map_err(numerical)? < cfg.qos_min_rate_near {
                violations += 1;
            }
            random += far_rate_objective(random_allocation(&mut rng), &s.channel, &params, &s.split).map_err(numerical)?;
        }
        let time_oracle = time_oracle(&samples, &params, &cfg, repeats);
        let time_dl = time_inference(model, &raw, repeats)?;
        t.push(vec![
            rho.into(),
            (oracle / n).into(),
            (dl / n).into(),
            (random / n).into(),
            time_oracle.into(),
            time_dl.into(),
            (violations as f64 / n).into(),
            samples.len().into(),
            excluded.into(),
        ]);
    }
    t.meta.push(("model_digest".into(), model.digest()));
    t.meta.push(("model_layers".into(), format!("{:?}", model.net.hidden_sizes())));
    t.meta.push(("timing".into(), format!("median of {repeats} runs")));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        let mut sc = Scenario::default();
        sc.train.hidden = vec![8, 4];
        sc.train.epochs = 3;
        sc.train.train_samples = 600;
        sc.train.test_samples = 300;
        sc.compare.rho = vec![0.2, 0.6];
        sc.compare.timing_repeats = 1;
        sc
    }

    #[test]
    fn training_is_reproducible() {
        let a = train_model(&tiny()).unwrap();
        let b = train_model(&tiny()).unwrap();
        assert_eq!(a.model.digest(), b.model.digest());
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 3);
        assert_eq!(a.n_train + a.n_val + a.excluded, 600);
    }

    #[test]
    fn compare_rows_and_dimension_check() {
        let sc = tiny();
        let out = train_model(&sc).unwrap();
        let t = compare(&sc, &out.model).unwrap();
        assert_eq!(t.rows.len(), 2);
        for v in t.values("rate_oracle") {
            assert!(v.unwrap() > 0.0);
        }
        let other = Model::new(Mlp::new(4, &[3], 1).unwrap(), noma_secrecy::dataset::Normalization::identity(4)).unwrap();
        assert!(matches!(compare(&sc, &other), Err(RunError::Validation(_))));
    }

    #[test]
    fn oversized_batch_is_a_validation_error() {
        let mut sc = tiny();
        sc.train.batch_size = 10_000;
        assert!(matches!(train_model(&sc), Err(RunError::Validation(m)) if m.starts_with("train.batch_size")));
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
