//! End-to-end behaviour of the training loop.

use osa_nn::train::{evaluate, make_batch, predict, train, write_history_csv, Example};
use osa_nn::{checkpoint, Model, ModelConfig, NnError, Precision, Tensor};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(seed: u64) -> ModelConfig {
    ModelConfig {
        conv_units: vec![8, 8, 6],
        conv_kernel: vec![5, 3, 3],
        conv_stride: vec![2, 1, 1],
        lstm_units: vec![8, 8, 6],
        dense_units: vec![8, 4],
        batch_size: 4,
        max_epochs: 5,
        patience: 3,
        seed,
        ..ModelConfig::default()
    }
}

/// Noisy sinusoids whose frequency depends on the class.
fn windows(n: usize, len: usize, seed: u64) -> Vec<(Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let freq = if label == 0 { 0.05 } else { 0.15 };
            let phase: f64 = rng.random_range(0.0..6.0);
            let x = (0..len).map(|t| (freq * t as f64 + phase).sin() + 0.3 * rng.random_range(-1.0..1.0)).collect();
            (x, label)
        })
        .collect()
}

fn examples(data: &[(Vec<f64>, usize)]) -> Vec<Example<'_>> {
    data.iter().map(|(x, l)| Example { input: x, label: *l }).collect()
}

#[test]
fn same_seed_gives_bitwise_identical_history() {
    let tr = windows(12, 96, 1);
    let va = windows(6, 96, 2);
    let a = train::<f64>(&small_config(9), &examples(&tr), &examples(&va)).unwrap();
    let b = train::<f64>(&small_config(9), &examples(&tr), &examples(&va)).unwrap();
    let bits = |h: &[osa_nn::EpochRecord]| h.iter().map(|r| (r.train_loss.to_bits(), r.val_loss.to_bits())).collect::<Vec<_>>();
    assert_eq!(bits(&a.history), bits(&b.history));
    assert_eq!(checkpoint::encode(&a.model), checkpoint::encode(&b.model));

    let c = train::<f64>(&small_config(10), &examples(&tr), &examples(&va)).unwrap();
    assert_ne!(bits(&a.history), bits(&c.history));
}

#[test]
fn train_and_infer_agree_without_dropout() {
    let cfg = ModelConfig { recurrent_dropout: 0.0, inter_lstm_dropout: 0.0, bn_momentum: 0.0, ..small_config(4) };
    let mut model: Model<f64> = Model::new(&cfg).unwrap();
    let data = windows(5, 80, 3);
    let inputs: Vec<&[f64]> = data.iter().map(|(x, _)| x.as_slice()).collect();
    let x = make_batch::<f64>(&inputs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (train_logits, _) = model.forward_train(&x, &mut rng).unwrap();
    // momentum 0 leaves the running statistics equal to this batch's
    let infer_logits = model.forward_infer(&x).unwrap();
    for (a, b) in train_logits.data().iter().zip(infer_logits.data()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn overfits_eight_windows() {
    let cfg = ModelConfig {
        conv_units: vec![16, 16, 8],
        conv_kernel: vec![8, 4, 3],
        conv_stride: vec![4, 2, 1],
        lstm_units: vec![16, 16, 8],
        dense_units: vec![16, 8, 4],
        batch_size: 8,
        max_epochs: 500,
        patience: 500,
        recurrent_dropout: 0.0,
        inter_lstm_dropout: 0.0,
        learning_rate: 3e-3,
        seed: 2,
        ..ModelConfig::default()
    };
    let data = windows(8, 512, 5);
    let ex = examples(&data);
    let out = train::<f64>(&cfg, &ex, &ex).unwrap();
    let acc = evaluate(&out.model, &ex, 8).unwrap().accuracy;
    println!("best epoch {}, accuracy {acc}", out.best_epoch);
    assert_eq!(acc, 1.0);
}

#[test]
fn probabilities_are_distributions() {
    let model: Model<f32> = Model::new(&ModelConfig { precision: Precision::F32, ..small_config(1) }).unwrap();
    let data = windows(7, 64, 8);
    let inputs: Vec<&[f64]> = data.iter().map(|(x, _)| x.as_slice()).collect();
    for row in predict(&model, &inputs, 3).unwrap() {
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn non_finite_input_aborts_with_diagnostics() {
    let mut data = windows(6, 64, 3);
    data[2].0[10] = f64::NAN;
    let err = train::<f64>(&small_config(0), &examples(&data), &[]).err().unwrap();
    assert!(matches!(err, NnError::NonFiniteLoss { epoch: 1, .. }), "{err}");
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let tr = windows(8, 64, 1);
    let out = train::<f64>(&ModelConfig { max_epochs: 2, ..small_config(3) }, &examples(&tr), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    checkpoint::save(&out.model, &path).unwrap();
    assert!(path.with_extension("json").exists());
    let loaded: Model<f64> = checkpoint::load(&path).unwrap();
    assert_eq!(loaded.config(), out.model.config());
    let x = make_batch::<f64>(&tr.iter().map(|(x, _)| x.as_slice()).collect::<Vec<_>>()).unwrap();
    assert_eq!(loaded.forward_infer(&x).unwrap(), out.model.forward_infer(&x).unwrap());
    assert_eq!(checkpoint::encode(&loaded), checkpoint::encode(&out.model));
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let cfg = small_config(0);
    let model: Model<f64> = Model::new(&cfg).unwrap();
    let bytes = checkpoint::encode(&model);
    assert!(checkpoint::decode::<f64>(&cfg, &bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(checkpoint::decode::<f64>(&cfg, &bad).is_err());
    let other = ModelConfig { lstm_units: vec![8, 8, 5], ..cfg.clone() };
    assert!(checkpoint::decode::<f64>(&other, &bytes).is_err());
    let mut long = bytes;
    long.push(0);
    assert!(checkpoint::decode::<f64>(&cfg, &long).is_err());
}

#[test]
fn history_csv_has_header_and_one_row_per_epoch() {
    let tr = windows(8, 64, 1);
    let va = windows(4, 64, 2);
    let out = train::<f64>(&ModelConfig { max_epochs: 3, patience: 10, ..small_config(3) }, &examples(&tr), &examples(&va)).unwrap();
    let mut buf = Vec::new();
    write_history_csv(&out.history, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,val_loss,val_acc");
    assert_eq!(lines.len(), 4);
    assert!(out.history.iter().all(|r| r.train_loss >= 0.0 && r.val_loss >= 0.0));
}

#[test]
fn early_stopping_returns_best_validation_epoch() {
    let tr = windows(8, 64, 1);
    let va = windows(4, 64, 2);
    let out = train::<f64>(&ModelConfig { max_epochs: 30, patience: 2, ..small_config(5) }, &examples(&tr), &examples(&va)).unwrap();
    let best = out.history.iter().min_by(|a, b| a.val_loss.total_cmp(&b.val_loss)).unwrap();
    assert_eq!(best.epoch, out.best_epoch);
    let after = out.history.len() - out.best_epoch;
    assert!(out.history.len() == 30 || after == 2, "stopped {after} epochs after the best");
    let e = evaluate(&out.model, &examples(&va), 4).unwrap();
    assert!((e.loss - best.val_loss).abs() < 1e-12);
}

#[test]
fn tensor_shape_mismatch_is_reported() {
    assert!(Tensor::<f64>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    assert!(make_batch::<f64>(&[&[0.0; 4], &[0.0; 5]]).is_err());
}
