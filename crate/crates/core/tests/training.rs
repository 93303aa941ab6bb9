use nilnet::compiler::{compile_preset, CompileOptions};
use nilnet::data::{generate_dataset, split, DatasetConfig, DatasetKind};
use nilnet::network::Network;
use nilnet::trainer::{loss_and_accuracy, run_training, SessionStatus, TrainConfig, TrainingSession};
use nilnet::TrainError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn session(kind: DatasetKind, seed: u64, config: TrainConfig) -> TrainingSession {
    let mut net = Network::assemble(compile_preset(kind, &CompileOptions::default())).unwrap();
    net.randomize_learnable(&mut ChaCha8Rng::seed_from_u64(seed));
    let data = generate_dataset(&DatasetConfig::new(kind, 300, 0.05, seed)).unwrap();
    let (train, test) = split(&data, 0.5, seed).unwrap();
    TrainingSession::new(net, train, test, config).unwrap()
}

#[test]
fn final_loss_does_not_exceed_initial_loss() {
    for kind in [
        DatasetKind::XorQuadrants,
        DatasetKind::Preference,
        DatasetKind::Triangle,
    ] {
        for seed in 0..3 {
            let mut s = session(
                kind,
                seed,
                TrainConfig {
                    seed,
                    ..TrainConfig::default()
                },
            );
            let (initial, _) = loss_and_accuracy(s.network(), s.train_data()).unwrap();
            run_training(&mut s).unwrap();
            let last = s.history().last().unwrap().train_loss;
            assert!(last <= initial, "{} seed {seed}: {initial} -> {last}", kind.name());
        }
    }
}

#[test]
fn identical_configs_reproduce_exactly() {
    let config = TrainConfig {
        epochs: 20,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut a = session(DatasetKind::Preference, 5, config);
    let mut b = session(DatasetKind::Preference, 5, config);
    run_training(&mut a).unwrap();
    run_training(&mut b).unwrap();
    assert_eq!(a.network().spec(), b.network().spec());
    assert_eq!(a.history(), b.history());
}

#[test]
fn stepping_in_pieces_matches_one_run() {
    let config = TrainConfig {
        epochs: 5,
        seed: 2,
        ..TrainConfig::default()
    };
    let mut whole = session(DatasetKind::XorQuadrants, 2, config);
    run_training(&mut whole).unwrap();
    let mut pieces = session(DatasetKind::XorQuadrants, 2, config);
    while pieces.status() != SessionStatus::Done {
        pieces.step(7).unwrap();
    }
    assert_eq!(whole.network().spec(), pieces.network().spec());
    assert_eq!(whole.history(), pieces.history());
}

#[test]
fn reset_restores_the_initial_state() {
    let config = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let mut s = session(DatasetKind::XorQuadrants, 1, config);
    let before = s.network().spec().clone();
    s.step(12).unwrap();
    assert_ne!(s.network().spec(), &before);
    s.reset();
    assert_eq!(s.network().spec(), &before);
    assert_eq!(s.step_count(), 0);
    assert!(s.history().is_empty());
    assert_eq!(s.status(), SessionStatus::Idle);
}

#[test]
fn all_frozen_network_keeps_its_metrics() {
    let net = Network::assemble(compile_preset(
        DatasetKind::XorQuadrants,
        &CompileOptions::default().frozen(),
    ))
    .unwrap();
    let data = generate_dataset(&DatasetConfig::new(DatasetKind::XorQuadrants, 100, 0.0, 3)).unwrap();
    let (train, test) = split(&data, 0.5, 3).unwrap();
    let mut s = TrainingSession::new(
        net.clone(),
        train,
        test,
        TrainConfig {
            epochs: 4,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    run_training(&mut s).unwrap();
    assert_eq!(s.history().len(), 4);
    assert!(s.history().windows(2).all(|w| w[0].train_loss == w[1].train_loss));
    assert_eq!(s.network().spec().layers[0].weights, net.spec().layers[0].weights);
}

#[test]
fn invalid_transitions_are_reported() {
    let mut s = session(
        DatasetKind::XorQuadrants,
        0,
        TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        },
    );
    assert!(matches!(s.pause(), Err(TrainError::InvalidTransition { .. })));
    s.start().unwrap();
    assert!(matches!(s.step(1), Err(TrainError::InvalidTransition { .. })));
    assert!(matches!(s.start(), Err(TrainError::InvalidTransition { .. })));
    s.pause().unwrap();
    s.step(1000).unwrap();
    assert_eq!(s.status(), SessionStatus::Done);
    assert_eq!(s.step_count(), s.total_steps());
}
