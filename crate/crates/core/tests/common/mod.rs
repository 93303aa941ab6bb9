//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use nilnet::network::{Activation, InputFeature, LayerSpec, Network, NetworkSpec};
use nilnet::SquashingParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-6;

pub fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let mut features = vec![InputFeature::Raw(0), InputFeature::Raw(1)];
    if rng.random_bool(0.5) {
        features.push(InputFeature::Squared(rng.random_range(0..2)));
    }
    let depth = rng.random_range(1..=3);
    let mut width_in = features.len();
    let mut layers = Vec::new();
    for l in 0..depth {
        let width = if l + 1 == depth { 1 } else { rng.random_range(1..=8) };
        let act = Activation::squash(SquashingParams {
            a: rng.random_range(0.2..0.8),
            lambda: rng.random_range(0.5..2.0),
            beta: rng.random_range(1.0..50.0),
        });
        let weights = (0..width)
            .map(|_| (0..width_in).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bias = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut layer = LayerSpec::new(weights, bias, act);
        if l > 0 && rng.random_bool(0.5) {
            layer = layer.frozen("frozen");
        }
        layers.push(layer);
        width_in = width;
    }
    let mut spec = NetworkSpec::new(features, layers);
    spec.input_scale = rng.random_range(1.0..4.0);
    Network::assemble(spec).unwrap()
}

pub fn loss_at(spec: &NetworkSpec, x: &[f64], t: f64) -> f64 {
    let net = Network::assemble(spec.clone()).unwrap();
    let y = net.evaluate(x).unwrap()[0];
    (y - t) * (y - t)
}

pub fn agrees(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()).max(1e-5)
}

/// Checks every learnable parameter of 60 random networks against central
/// differences. Returns the number of parameters checked, or a description
/// of the first mismatch.
pub fn gradient_check(seed: u64) -> Result<usize, String> {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut checked = 0;
    for _ in 0..60 {
        let net = random_network(&mut rng);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = f64::from(rng.random_range(0..2));
        let (grads, loss) = net.backward(&net.forward(&x).unwrap(), t).unwrap();
        if (loss - loss_at(net.spec(), &x, t)).abs() > 1e-15 {
            return Err(format!("reported loss {loss} differs from a fresh forward pass"));
        }
        for (l, layer) in net.layers().iter().enumerate() {
            if grads.get(l).is_some() == layer.frozen {
                return Err(format!("gradient entry presence wrong for layer {l}"));
            }
            let Some(g) = grads.get(l) else { continue };
            for i in 0..layer.out_dim() {
                for j in 0..=layer.in_dim() {
                    let mut plus = net.spec().clone();
                    let mut minus = net.spec().clone();
                    let (analytic, p, m) = if j == layer.in_dim() {
                        (g.bias[i], &mut plus.layers[l].bias[i], &mut minus.layers[l].bias[i])
                    } else {
                        (
                            g.weights[i][j],
                            &mut plus.layers[l].weights[i][j],
                            &mut minus.layers[l].weights[i][j],
                        )
                    };
                    *p += H;
                    *m -= H;
                    let numeric = (loss_at(&plus, &x, t) - loss_at(&minus, &x, t)) / (2.0 * H);
                    if !agrees(analytic, numeric) {
                        return Err(format!(
                            "layer {l} unit {i} input {j}: analytic {analytic}, numeric {numeric}"
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}
