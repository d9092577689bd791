use ndarray::{Array1, Array2};
use noma_secrecy::nn::Mlp;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;
const MAX_REL_ERR: f64 = 1e-5;

fn loss(net: &Mlp, x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let p = net.forward_batch(x.view()).unwrap();
    (&p - y).mapv(|d| d * d).mean().unwrap()
}

fn param(net: &mut Mlp, layer: usize, idx: Option<(usize, usize)>, bias: usize) -> &mut f64 {
    match idx {
        Some(ij) => &mut net.layers[layer].weights[ij],
        None => &mut net.layers[layer].bias[bias],
    }
}

fn numeric(net: &mut Mlp, x: &Array2<f64>, y: &Array1<f64>, layer: usize, idx: Option<(usize, usize)>, bias: usize) -> f64 {
    let orig = *param(net, layer, idx, bias);
    *param(net, layer, idx, bias) = orig + STEP;
    let up = loss(net, x, y);
    *param(net, layer, idx, bias) = orig - STEP;
    let down = loss(net, x, y);
    *param(net, layer, idx, bias) = orig;
    (up - down) / (2.0 * STEP)
}

/// Relative error with the denominator floored at the finite-difference
/// resolution `eps * loss / STEP`, scaled so a 1e-5 error stays visible.
fn rel_err(a: f64, n: f64, loss: f64) -> f64 {
    let floor = 1e5 * f64::EPSILON * loss / STEP;
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Worst relative error over `probes` random parameters (all if `None`).
fn check(net: &mut Mlp, x: &Array2<f64>, y: &Array1<f64>, probes: Option<usize>, seed: u64) -> f64 {
    let (l0, g) = net.backward(x.view(), y.view()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut coords = Vec::new();
    for (l, layer) in net.layers.iter().enumerate() {
        for i in 0..layer.outputs() {
            for j in 0..layer.inputs() {
                coords.push((l, Some((i, j)), 0));
            }
            coords.push((l, None, i));
        }
    }
    if let Some(k) = probes {
        coords = (0..k).map(|_| coords[rng.gen_range(0..coords.len())]).collect();
    }
    for (l, idx, b) in coords {
        let a = match idx {
            Some(ij) => g.layers[l].weights[ij],
            None => g.layers[l].bias[b],
        };
        let n = numeric(net, x, y, l, idx, b);
        worst = worst.max(rel_err(a, n, l0));
    }
    worst
}

fn batch(n: usize, d: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array1<f64>) {
    (
        Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.5..1.5)),
        Array1::from_shape_fn(n, |_| rng.gen_range(0.55..0.95)),
    )
}

#[test]
fn wide_two_layer_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, y) = batch(16, 6, &mut rng);
    let mut net = Mlp::new(6, &[200, 100], 2).unwrap();
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    }
    let worst = check(&mut net, &x, &y, Some(400), 3);
    assert!(worst <= MAX_REL_ERR, "worst relative error {worst:e}");
}

#[test]
fn five_layer_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, y) = batch(16, 6, &mut rng);
    let mut net = Mlp::new(6, &[200, 100, 50, 30, 10], 5).unwrap();
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    }
    let worst = check(&mut net, &x, &y, Some(400), 6);
    assert!(worst <= MAX_REL_ERR, "worst relative error {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_networks(seed in 0u64..1_000_000, d in 1usize..5, h1 in 1usize..6, h2 in 1usize..5, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = batch(n, d, &mut rng);
        let mut net = Mlp::new(d, &[h1, h2], seed ^ 0x5eed).unwrap();
        for l in &mut net.layers {
            l.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        }
        let worst = check(&mut net, &x, &y, None, seed);
        prop_assert!(worst <= MAX_REL_ERR, "worst relative error {:e}", worst);
    }
}
