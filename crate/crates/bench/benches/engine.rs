use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nilnet::compiler::{compile_preset, CompileOptions, XOR_EXPRESSION};
use nilnet::data::{generate_dataset, split, DatasetConfig, DatasetKind};
use nilnet::{compile_with, evaluate_grid, parse_expression, Network, SquashingParams, TrainConfig, TrainingSession};

fn squash(c: &mut Criterion) {
    let p = SquashingParams::default();
    let xs: Vec<f64> = (0..1000).map(|i| -1.0 + 3.0 * i as f64 / 999.0).collect();
    c.bench_function("squash_eval_1000", |b| {
        b.iter(|| xs.iter().map(|&x| p.eval(black_box(x))).sum::<f64>())
    });
    c.bench_function("squash_partials_1000", |b| {
        b.iter(|| xs.iter().map(|&x| p.partials(black_box(x)).dx).sum::<f64>())
    });
}

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_backward");
    for kind in [DatasetKind::XorQuadrants, DatasetKind::Triangle, DatasetKind::Concave] {
        let net = Network::assemble(compile_preset(kind, &CompileOptions::default())).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(kind.name()), &net, |b, net| {
            b.iter(|| {
                let trace = net.forward(black_box(&[0.3, -0.2])).unwrap();
                net.backward(&trace, 1.0).unwrap().1
            })
        });
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let net = Network::assemble(compile_preset(DatasetKind::Concave, &CompileOptions::default())).unwrap();
    let mut group = c.benchmark_group("grid");
    for res in [51usize, 101] {
        group.bench_with_input(BenchmarkId::from_parameter(res), &res, |b, &res| {
            b.iter(|| evaluate_grid(&net, res).unwrap())
        });
    }
    group.finish();
}

fn compile(c: &mut Criterion) {
    c.bench_function("parse_and_compile_xor", |b| {
        b.iter(|| {
            let expr = parse_expression(black_box(XOR_EXPRESSION)).unwrap();
            compile_with(&expr, &CompileOptions::default()).unwrap()
        })
    });
}

fn training_epoch(c: &mut Criterion) {
    let points = generate_dataset(&DatasetConfig::new(DatasetKind::XorQuadrants, 500, 0.05, 0)).unwrap();
    let (train, test) = split(&points, 0.5, 0).unwrap();
    let net = Network::assemble(compile_preset(DatasetKind::XorQuadrants, &CompileOptions::default())).unwrap();
    let config = TrainConfig::default();
    c.bench_function("xor_epoch_25_steps", |b| {
        b.iter_batched(
            || TrainingSession::new(net.clone(), train.clone(), test.clone(), config).unwrap(),
            |mut s| s.step(25).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, squash, forward_backward, grid, compile, training_epoch);
criterion_main!(benches);
