mod common;

use nilnet::compiler::{compile_with, parse_expression, CompileOptions, XOR_EXPRESSION};
use nilnet::network::{Activation, LayerSpec, Network};
use nilnet::SquashingParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_networks_pass_finite_difference_checks() {
    let checked = common::gradient_check(11).unwrap();
    assert!(checked > 200, "only {checked} parameters checked");
}

fn frozen_bits(net: &Network) -> Vec<u64> {
    net.layers()
        .iter()
        .filter(|l| l.frozen)
        .flat_map(|l| l.weights.iter().flatten().chain(&l.bias).map(|v| v.to_bits()))
        .collect()
}

fn xor_network() -> Network {
    let spec = compile_with(&parse_expression(XOR_EXPRESSION).unwrap(), &CompileOptions::default()).unwrap();
    Network::assemble(spec).unwrap()
}

#[test]
fn frozen_parameters_survive_a_thousand_steps() {
    let mut net = xor_network();
    net.randomize_learnable(&mut ChaCha8Rng::seed_from_u64(3));
    let before = frozen_bits(&net);
    let learnable_before = net.layers()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = if x[0] * x[1] > 0.0 { 1.0 } else { 0.0 };
        let (g, _) = net.backward(&net.forward(&x).unwrap(), t).unwrap();
        net.sgd_step(&g, 0.1).unwrap();
    }
    assert_eq!(frozen_bits(&net), before);
    assert_ne!(net.layers()[0], learnable_before);
}

#[test]
fn soft_and_hard_agree_away_from_boundaries() {
    let expr = parse_expression(XOR_EXPRESSION).unwrap();
    let soft = Network::assemble(
        compile_with(
            &expr,
            &CompileOptions {
                activation: Activation::squash(SquashingParams {
                    beta: 1e4,
                    ..SquashingParams::default()
                }),
                ..CompileOptions::default()
            },
        )
        .unwrap(),
    )
    .unwrap();
    let hard = Network::assemble(compile_with(&expr, &CompileOptions::hard()).unwrap()).unwrap();
    let cut_points = [0.0, 1.0];
    let mut compared = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    'points: for _ in 0..2000 {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let trace = hard.forward(&x).unwrap();
        for z in &trace.pre[0] {
            if cut_points.iter().any(|c| (z - c).abs() < 0.01) {
                continue 'points;
            }
        }
        let (s, h) = (soft.evaluate(&x).unwrap()[0], hard.evaluate(&x).unwrap()[0]);
        assert!((s - h).abs() <= 2e-3, "at {x:?}: soft {s}, hard {h}");
        compared += 1;
    }
    assert!(compared > 1000);
}

#[test]
fn xor_forward_examples() {
    let net = xor_network();
    assert!(net.evaluate(&[0.9, 0.9]).unwrap()[0] > 0.9);
    assert!(net.evaluate(&[0.9, -0.9]).unwrap()[0] < 0.1);
    assert!(net.evaluate(&[-0.9, -0.9]).unwrap()[0] > 0.9);
}

#[test]
fn xor_shape() {
    let net = xor_network();
    let dims: Vec<usize> = net.layers().iter().map(LayerSpec::out_dim).collect();
    assert_eq!(dims, vec![2, 2, 1]);
    assert!(!net.layers()[0].frozen);
    assert!(net.layers()[1..].iter().all(|l| l.frozen));
}
