//! Dense feed-forward regressor: ReLU hidden layers, a linear output squashed
//! into the valid power-share range, mean-squared-error loss and mini-batch
//! gradient descent with per-epoch learning-rate decay.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::rng::stream;

pub fn relu(y: f64) -> f64 {
    y.max(0.0)
}

/// Scaled logistic mapping the raw output into `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squash {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Squash {
    fn default() -> Self {
        Self { lo: 0.5, hi: 1.0 }
    }
}

impl Squash {
    pub fn apply(&self, z: f64) -> f64 {
        self.lo + (self.hi - self.lo) * logistic(z)
    }

    fn derivative(&self, z: f64) -> f64 {
        let s = logistic(z);
        (self.hi - self.lo) * s * (1.0 - s)
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `[out x in]`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub squash: Squash,
}

impl Mlp {
    /// He-initialized network `input -> hidden... -> 1`, zero biases.
    pub fn new(input: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if input == 0 || hidden.contains(&0) {
            return Err(invalid("layers", "every layer needs at least one neuron"));
        }
        let mut rng = stream(seed, u64::MAX);
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, out) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                Layer {
                    weights: Array2::from_shape_fn((out, fan_in), |_| normal.sample(&mut rng)),
                    bias: Array1::zeros(out),
                }
            })
            .collect();
        Ok(Self {
            layers,
            squash: Squash::default(),
        })
    }

    /// Builds a network from explicit layers, checking the dimension chain.
    pub fn from_layers(layers: Vec<Layer>, squash: Squash) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("layers", "network has no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::Dimension {
                    expected: l.outputs(),
                    got: l.bias.len(),
                });
            }
            if i + 1 < layers.len() && layers[i + 1].inputs() != l.outputs() {
                return Err(Error::Dimension {
                    expected: l.outputs(),
                    got: layers[i + 1].inputs(),
                });
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(invalid("layers", format!("layer {i} has non-finite parameters")));
            }
        }
        let last = layers.last().expect("nonempty");
        if last.outputs() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: last.outputs(),
            });
        }
        Ok(Self { layers, squash })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::outputs)
            .collect()
    }

    /// Multiply-accumulates per inference.
    pub fn macs(&self) -> usize {
        self.layers.iter().map(|l| l.inputs() * l.outputs()).sum()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Pre-activations of every layer for a batch `[n x input]`.
    fn pre_activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let z = a.dot(&l.weights.t()) + &l.bias;
            if i + 1 < self.layers.len() {
                a = z.mapv(relu);
            }
            zs.push(z);
        }
        zs
    }

    /// Outputs for a batch `[n x input]`.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t());
            z += &l.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a.column(0).mapv(|z| self.squash.apply(z)))
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<f64> {
        let row = x.insert_axis(Axis(0));
        Ok(self.forward_batch(row)?[0])
    }

    /// MSE of the batch and its exact gradients.
    pub fn backward(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<(f64, Gradients)> {
        let n = x.nrows();
        if n == 0 {
            return Err(invalid("batch", "empty batch"));
        }
        if y.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: y.len(),
            });
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let zs = self.pre_activations(x);
        for (i, z) in zs.iter().enumerate() {
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: i });
            }
        }
        let z_out = zs.last().expect("nonempty").column(0);
        let pred = z_out.mapv(|z| self.squash.apply(z));
        let diff = &pred - &y;
        let loss = diff.mapv(|d| d * d).sum() / n as f64;

        // dL/dz at the output
        let mut delta: Array2<f64> = Array2::from_shape_fn((n, 1), |(r, _)| {
            2.0 * diff[r] / n as f64 * self.squash.derivative(z_out[r])
        });
        let mut grads = vec![
            LayerGrad {
                weights: Array2::zeros((0, 0)),
                bias: Array1::zeros(0),
            };
            self.layers.len()
        ];
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 {
                x.to_owned()
            } else {
                zs[i - 1].mapv(relu)
            };
            grads[i] = LayerGrad {
                weights: delta.t().dot(&input),
                bias: delta.sum_axis(Axis(0)),
            };
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights);
                // ReLU subgradient at exactly 0 is 0
                back.zip_mut_with(&zs[i - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        Ok((loss, Gradients { layers: grads }))
    }

    fn apply(&mut self, grads: &Gradients, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.scaled_add(-lr, &g.weights);
            l.bias.scaled_add(-lr, &g.bias);
        }
    }
}

/// Largest relative error between backprop and central finite differences
/// (step `1e-6`) over `probes` randomly chosen parameters, or all of them.
pub fn gradient_check(
    net: &Mlp,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    probes: Option<usize>,
    seed: u64,
) -> Result<f64> {
    const STEP: f64 = 1e-6;
    let (_, grads) = net.backward(x, y)?;
    let mut probe = net.clone();
    let mut coords: Vec<(usize, usize, Option<usize>)> = Vec::new();
    for (l, layer) in net.layers.iter().enumerate() {
        for i in 0..layer.outputs() {
            coords.extend((0..layer.inputs()).map(|j| (l, i, Some(j))));
            coords.push((l, i, None));
        }
    }
    if let Some(k) = probes {
        let mut rng = stream(seed, 0);
        coords = (0..k).map(|_| coords[rng.gen_range(0..coords.len())]).collect();
    }
    let loss = |net: &Mlp| -> Result<f64> {
        let p = net.forward_batch(x)?;
        Ok((&p - &y).mapv(|d| d * d).mean().unwrap_or(0.0))
    };
    // central differences cannot resolve gradients below ~eps * loss / step;
    // the denominator is floored where a 1e-5 relative error is still visible
    let floor = 1e5 * f64::EPSILON * loss(net)?.abs() / STEP;
    let mut worst: f64 = 0.0;
    for (l, i, j) in coords {
        let analytic = match j {
            Some(j) => grads.layers[l].weights[[i, j]],
            None => grads.layers[l].bias[i],
        };
        let set = |net: &mut Mlp, v: f64| match j {
            Some(j) => net.layers[l].weights[[i, j]] = v,
            None => net.layers[l].bias[i] = v,
        };
        let orig = match j {
            Some(j) => net.layers[l].weights[[i, j]],
            None => net.layers[l].bias[i],
        };
        set(&mut probe, orig + STEP);
        let up = loss(&probe)?;
        set(&mut probe, orig - STEP);
        let down = loss(&probe)?;
        set(&mut probe, orig);
        let numeric = (up - down) / (2.0 * STEP);
        let scale = analytic.abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()))
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Dimension {
            expected: pred.len(),
            got: target.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplies the learning rate after every epoch.
    pub decay_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.3,
            decay_rate: 0.9,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be positive"));
        }
        if self.batch_size == 0 || self.batch_size > n_samples {
            return Err(invalid(
                "batch_size",
                format!("{} must be in 1..={n_samples}", self.batch_size),
            ));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid("learning_rate", "must be a nonnegative number"));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return Err(invalid("decay_rate", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Mini-batch gradient descent. Returns the mean batch loss of every epoch.
pub fn train(
    net: &mut Mlp,
    features: ArrayView2<f64>,
    labels: ArrayView1<f64>,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: labels.len(),
        });
    }
    cfg.validate(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut lr = cfg.learning_rate;
    let mut history = Vec::with_capacity(cfg.epochs);
    let d = features.ncols();
    let mut xb = Array2::<f64>::zeros((cfg.batch_size, d));
    let mut yb = Array1::<f64>::zeros(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream(cfg.seed, epoch as u64));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let m = batch.len();
            for (r, &i) in batch.iter().enumerate() {
                xb.row_mut(r).assign(&features.row(i));
                yb[r] = labels[i];
            }
            let (loss, grads) = net
                .backward(xb.slice(s![..m, ..]), yb.slice(s![..m]))
                .map_err(|e| match e {
                    Error::NonFinite { .. } => Error::Divergence { epoch },
                    other => other,
                })?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += loss * m as f64;
            net.apply(&grads, lr);
        }
        history.push(total / n as f64);
        lr *= cfg.decay_rate;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn relu_cases() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
    }

    fn zeroed(input: usize, hidden: &[usize]) -> Mlp {
        let mut net = Mlp::new(input, hidden, 0).unwrap();
        for l in &mut net.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        net
    }

    #[test]
    fn zero_network_outputs_midpoint() {
        let net = zeroed(3, &[4, 2]);
        for x in [array![1.0, -2.0, 3.0], array![0.0, 0.0, 0.0]] {
            assert_eq!(net.forward(x.view()).unwrap(), 0.75);
        }
    }

    #[test]
    fn hand_traced_single_neuron() {
        let mut net = zeroed(1, &[1]);
        net.layers[0].weights[[0, 0]] = 1.0;
        net.layers[1].weights[[0, 0]] = 1.0;
        let out = net.forward(array![2.0].view()).unwrap();
        // relu(2) = 2, squash(2) = 0.5 + 0.5 / (1 + e^-2)
        assert_eq!(out, 0.5 + 0.5 / (1.0 + (-2.0f64).exp()));
        assert_eq!(out, net.forward(array![2.0].view()).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::new(3, &[4], 1).unwrap();
        assert!(matches!(
            net.forward(array![1.0, 2.0].view()),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn mse_cases() {
        assert_eq!(mse_loss(&[0.6, 0.7], &[0.6, 0.7]).unwrap(), 0.0);
        let p = [0.6, 0.7, 0.8, 0.9];
        let t: Vec<f64> = p.iter().map(|v| v - 0.1).collect();
        assert!((mse_loss(&p, &t).unwrap() - 0.01).abs() < 1e-15);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..17).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..17).map(|_| rng.gen()).collect();
        let mut acc = 0.0;
        for i in 0..17 {
            acc += (a[i] - b[i]).powi(2);
        }
        assert!((mse_loss(&a, &b).unwrap() - acc / 17.0).abs() < 1e-15);
    }

    fn random_batch(n: usize, d: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (
            Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0)),
            Array1::from_shape_fn(n, |_| rng.gen_range(0.55..0.95)),
        )
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let net = Mlp::new(4, &[6, 3], 5).unwrap();
        let (x, _) = random_batch(8, 4, 6);
        let y = net.forward_batch(x.view()).unwrap();
        let (loss, g) = net.backward(x.view(), y.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn positive_region_matches_linear_network() {
        // positive weights and inputs keep every pre-activation positive, so the
        // gradient must equal that of the same network with identity activations
        let mut net = Mlp::new(2, &[3], 7).unwrap();
        for l in &mut net.layers {
            l.weights.mapv_inplace(f64::abs);
            l.bias.fill(0.1);
        }
        let x = array![[0.5, 1.0], [1.5, 0.2]];
        let y = array![0.6, 0.9];
        let (_, g) = net.backward(x.view(), y.view()).unwrap();
        let (w1, b1, w2, b2) = (
            &net.layers[0].weights,
            &net.layers[0].bias,
            &net.layers[1].weights,
            &net.layers[1].bias,
        );
        let h = x.dot(&w1.t()) + b1;
        let z = h.dot(&w2.t()) + b2;
        let mut gw2 = Array2::<f64>::zeros((1, 3));
        let mut gw1 = Array2::<f64>::zeros((3, 2));
        for r in 0..2 {
            let zr = z[[r, 0]];
            let dz = 2.0 * (net.squash.apply(zr) - y[r]) / 2.0 * net.squash.derivative(zr);
            for j in 0..3 {
                gw2[[0, j]] += dz * h[[r, j]];
                for k in 0..2 {
                    gw1[[j, k]] += dz * w2[[0, j]] * x[[r, k]];
                }
            }
        }
        assert!((&g.layers[1].weights - &gw2).iter().all(|d| d.abs() < 1e-14));
        assert!((&g.layers[0].weights - &gw1).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn checker_agrees_on_small_net() {
        let net = Mlp::new(3, &[5, 4], 21).unwrap();
        let (x, y) = random_batch(6, 3, 22);
        assert!(gradient_check(&net, x.view(), y.view(), None, 0).unwrap() <= 1e-5);
    }

    #[test]
    fn dead_hidden_layer_has_zero_gradient() {
        let mut net = Mlp::new(2, &[3], 23).unwrap();
        let (x, y) = random_batch(4, 2, 24);
        net.layers[0].weights.fill(0.0);
        net.layers[0].bias.fill(-1.0);
        let (_, g) = net.backward(x.view(), y.view()).unwrap();
        assert_eq!(g.layers[0].weights.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert_eq!(g.layers[1].weights.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert!(gradient_check(&net, x.view(), y.view(), None, 0).unwrap() <= 1e-5);
    }

    #[test]
    fn zero_learning_rate_leaves_weights() {
        let mut net = Mlp::new(3, &[5], 3).unwrap();
        let before = net.clone();
        let (x, y) = random_batch(40, 3, 4);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 8,
            learning_rate: 0.0,
            ..Default::default()
        };
        train(&mut net, x.view(), y.view(), &cfg).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn training_is_reproducible() {
        let (x, y) = random_batch(200, 3, 8);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            ..Default::default()
        };
        let mut a = Mlp::new(3, &[8, 4], 9).unwrap();
        let mut b = Mlp::new(3, &[8, 4], 9).unwrap();
        let ha = train(&mut a, x.view(), y.view(), &cfg).unwrap();
        let hb = train(&mut b, x.view(), y.view(), &cfg).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert_eq!(ha.len(), 5);
    }

    #[test]
    fn realizable_target_is_learned() {
        // label = clamp of an affine function of the features
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let n = 4000;
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let label = |r: ArrayView1<f64>| (0.75 + 0.08 * r[0] - 0.05 * r[1] + 0.03 * r[2]).clamp(0.52, 0.98);
        let y: Array1<f64> = x.rows().into_iter().map(label).collect();
        let mut net = Mlp::new(3, &[32, 16], 11).unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.1,
            decay_rate: 0.97,
            seed: 12,
        };
        train(&mut net, x.view(), y.view(), &cfg).unwrap();
        let xt = Array2::from_shape_fn((1000, 3), |_| rng.gen_range(-1.0..1.0));
        let yt: Vec<f64> = xt.rows().into_iter().map(label).collect();
        let pred = net.forward_batch(xt.view()).unwrap();
        let mse = mse_loss(pred.as_slice().unwrap(), &yt).unwrap();
        assert!(mse <= 1e-3, "test mse {mse}");
    }

    #[test]
    fn divergence_is_reported() {
        let (x, _) = random_batch(64, 3, 13);
        let y = Array1::from_elem(64, f64::NAN);
        let mut net = Mlp::new(3, &[4], 14).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 16,
            ..Default::default()
        };
        assert!(matches!(
            train(&mut net, x.view(), y.view(), &cfg),
            Err(Error::Divergence { epoch: 0 })
        ));
    }

    #[test]
    fn output_always_in_range() {
        let net = Mlp::new(2, &[4], 3).unwrap();
        let x = array![[1e6, -1e6], [-1e6, 1e6], [0.0, 0.0]];
        for v in net.forward_batch(x.view()).unwrap() {
            assert!(v >= 0.5 && v <= 1.0);
        }
    }

    #[test]
    fn macs_grow_with_neurons() {
        let two = Mlp::new(6, &[200, 100], 1).unwrap();
        let five = Mlp::new(6, &[200, 100, 50, 30, 10], 1).unwrap();
        assert_eq!(two.macs(), 6 * 200 + 200 * 100 + 100);
        assert!(five.macs() > two.macs());
    }
}
