use std::collections::BTreeMap;

use sadsp::data::{generate_synthetic, Dataset, Split, SyntheticConfig, WorldConfig};
use sadsp::model::{encode_checkpoint, infer, ModelDims, ModelParams, ParamGroup, Phase, Subnet};
use sadsp::trainer::{batch_matrix, phase_step, train, Optimizers, Regime, TrainConfig};
use sadsp::Error;

fn small() -> Dataset {
    let cfg = SyntheticConfig {
        num_states: 4,
        num_objects: 5,
        feature_dim: 12,
        seen_ratio: 0.5,
        train_per_pair: 6,
        test_per_seen_pair: 2,
        test_per_unseen_pair: 2,
        seed: 4,
    };
    let world = WorldConfig {
        prototype_dim: 4,
        feasible_ratio: 0.8,
        ..WorldConfig::default()
    };
    generate_synthetic(&cfg, &world).unwrap().1
}

fn dims_of(ds: &Dataset, hidden: usize) -> ModelDims {
    ModelDims {
        num_states: ds.spec.num_states,
        num_objects: ds.spec.num_objects,
        feature_dim: ds.spec.feature_dim,
        hidden,
    }
}

fn snapshot(p: &ModelParams) -> BTreeMap<String, Vec<f64>> {
    p.named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.values().to_vec()))
        .collect()
}

fn group_of(name: &str) -> ParamGroup {
    let net = name.split('.').next().unwrap();
    Subnet::ALL.iter().find(|s| s.name() == net).unwrap().group()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 8,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_return_the_initialization() {
    let ds = small();
    let init = ModelParams::init(dims_of(&ds, 8), 1);
    let (trained, log) = train(init.clone(), &ds, &quick(0)).unwrap();
    assert_eq!(encode_checkpoint(&trained), encode_checkpoint(&init));
    assert!(log.epochs.is_empty());
}

#[test]
fn fixed_trunk_never_moves() {
    let ds = small();
    let init = ModelParams::init(dims_of(&ds, 8), 1);
    let cfg = TrainConfig {
        regime: Regime::FixedTrunk,
        ..quick(2)
    };
    let (trained, _) = train(init.clone(), &ds, &cfg).unwrap();
    let (before, after) = (snapshot(&init), snapshot(&trained));
    let mut others_moved = false;
    for (name, v) in &before {
        match group_of(name) {
            ParamGroup::Trunk => assert_eq!(v, &after[name], "{name}"),
            _ => others_moved |= v != &after[name],
        }
    }
    assert!(others_moved);
}

#[test]
fn each_phase_only_updates_its_own_groups() {
    let ds = small();
    let mut params = ModelParams::init(dims_of(&ds, 8), 3);
    let mut opt = Optimizers::new(&TrainConfig::default());
    let train_samples = ds.train();
    let batch = batch_matrix(&train_samples, &[0, 1, 2, 3, 4, 5], ds.spec.feature_dim).unwrap();

    let before = snapshot(&params);
    phase_step(&mut params, &mut opt, Phase::Adversary, false, &batch).unwrap();
    let mid = snapshot(&params);
    for (name, v) in &before {
        let changed = v != &mid[name];
        if group_of(name) == ParamGroup::Adversary {
            assert!(changed, "{name} should move in the adversary phase");
        } else {
            assert!(!changed, "{name} moved in the adversary phase");
        }
    }

    phase_step(&mut params, &mut opt, Phase::Generator, false, &batch).unwrap();
    let after = snapshot(&params);
    for (name, v) in &mid {
        if group_of(name) == ParamGroup::Adversary {
            assert_eq!(v, &after[name], "{name} moved in the generator phase");
        }
    }
    assert!(mid.iter().any(|(n, v)| group_of(n) == ParamGroup::Trunk && v != &after[n]));
}

#[test]
fn same_seed_gives_identical_runs() {
    let ds = small();
    let init = ModelParams::init(dims_of(&ds, 8), 5);
    let cfg = TrainConfig { seed: 9, ..quick(2) };
    let (a, la) = train(init.clone(), &ds, &cfg).unwrap();
    let (b, lb) = train(init, &ds, &cfg).unwrap();
    assert_eq!(encode_checkpoint(&a), encode_checkpoint(&b));
    assert_eq!(la.to_csv(false), lb.to_csv(false));
}

#[test]
fn different_shuffle_seeds_diverge() {
    let ds = small();
    let init = ModelParams::init(dims_of(&ds, 8), 5);
    let (a, _) = train(init.clone(), &ds, &TrainConfig { seed: 1, ..quick(1) }).unwrap();
    let (b, _) = train(init, &ds, &TrainConfig { seed: 2, ..quick(1) }).unwrap();
    assert_ne!(encode_checkpoint(&a), encode_checkpoint(&b));
}

#[test]
fn clean_separable_data_lowers_the_primitive_loss_every_epoch() {
    let world = WorldConfig {
        interaction: 0.0,
        noise_sigma: 0.0,
        ..WorldConfig::default()
    };
    let (_, ds) = generate_synthetic(&SyntheticConfig::default(), &world).unwrap();
    let init = ModelParams::init(dims_of(&ds, 64), 0);
    let (_, log) = train(init, &ds, &TrainConfig { epochs: 4, ..TrainConfig::default() }).unwrap();
    let sp: Vec<f64> = log.epochs.iter().map(|e| e.generator.l_sp).collect();
    assert!(sp.windows(2).all(|w| w[1] < w[0]), "{sp:?}");
}

#[test]
fn non_finite_features_abort_with_divergence() {
    let mut ds = small();
    ds.samples.iter_mut().find(|s| s.split == Split::Train).unwrap().features[0] = f32::NAN;
    let init = ModelParams::init(dims_of(&ds, 8), 1);
    let cfg = TrainConfig {
        batch_size: 1000,
        ..quick(1)
    };
    match train(init, &ds, &cfg) {
        Err(Error::Divergence { epoch: 0, batch: 0, .. }) => {}
        other => panic!("expected divergence, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let ds = small();
    let mut dims = dims_of(&ds, 8);
    dims.num_states += 1;
    assert!(matches!(
        train(ModelParams::init(dims, 0), &ds, &quick(1)),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn snapshots_are_written_on_schedule() {
    let ds = small();
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        checkpoint_every: 2,
        checkpoint_dir: Some(dir.path().to_path_buf()),
        ..quick(5)
    };
    let (_, log) = train(ModelParams::init(dims_of(&ds, 8), 0), &ds, &cfg).unwrap();
    let names: Vec<String> = log
        .checkpoint_paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["checkpoint_epoch002.bin", "checkpoint_epoch004.bin"]);
    assert!(log.checkpoint_paths.iter().all(|p| p.exists()));
}

/// Default dataset, default config: train accuracy above five times chance
/// for both primitives.
#[test]
fn default_run_fits_the_training_split() {
    let (_, ds) = generate_synthetic(&SyntheticConfig::default(), &WorldConfig::default()).unwrap();
    let (params, _) = train(ModelParams::init(dims_of(&ds, 64), 0), &ds, &TrainConfig::default()).unwrap();
    let samples = ds.train();
    let out = infer(&params, samples.iter().map(|s| s.features.as_slice())).unwrap();
    let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let n = samples.len() as f64;
    let state_acc = samples.iter().zip(&out.p_s).filter(|(s, p)| argmax(p) == s.state).count() as f64 / n;
    let object_acc = samples.iter().zip(&out.p_o).filter(|(s, p)| argmax(p) == s.object).count() as f64 / n;
    println!("train accuracy: state {state_acc:.3}, object {object_acc:.3}");
    assert!(state_acc > 5.0 / ds.spec.num_states as f64, "state {state_acc}");
    assert!(object_acc > 5.0 / ds.spec.num_objects as f64, "object {object_acc}");
}
