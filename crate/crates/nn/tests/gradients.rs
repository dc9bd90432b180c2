//! Analytic gradients against central finite differences (f64, h = 1e-3).
//! Each layer is reduced to a scalar with a random projection `sum(r * y)`,
//! so the upstream gradient is `r`.

use osa_nn::gradcheck::{max_relative_error, numeric_gradient};
use osa_nn::layers::*;
use osa_nn::{Model, ModelConfig, Precision, Tensor};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;
/// Gradient scale below which errors are measured absolutely.
const FLOOR: f64 = 1e-8;

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn project(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn with(t: &Tensor<f64>, v: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(t.shape(), v.to_vec()).unwrap()
}

/// Max relative error between `analytic` and the numeric gradient of `f`
/// with respect to `at`.
fn check(at: &Tensor<f64>, analytic: &Tensor<f64>, f: impl FnMut(&[f64]) -> f64) -> f64 {
    let numeric = numeric_gradient(at.data(), H, f);
    max_relative_error(analytic.data(), &numeric, FLOOR)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conv1d_gradients(seed in any::<u64>(), batch in 1usize..3, k in 1usize..4, stride in 1usize..3,
                        cin in 1usize..3, cout in 1usize..3, extra in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let time = k + extra;
        let x = random(&mut rng, &[batch, time, cin]);
        let w = random(&mut rng, &[k, cin, cout]);
        let b = random(&mut rng, &[cout]);
        let y = conv1d(&x, &w, &b, stride).unwrap();
        let r = random(&mut rng, y.shape());
        let g = conv1d_backward(&x, &w, &b, stride, &r).unwrap();
        let ew = check(&w, &g.dw, |v| project(&conv1d(&x, &with(&w, v), &b, stride).unwrap(), &r));
        let ex = check(&x, &g.dx, |v| project(&conv1d(&with(&x, v), &w, &b, stride).unwrap(), &r));
        let eb = check(&b, &g.db, |v| project(&conv1d(&x, &w, &with(&b, v), stride).unwrap(), &r));
        prop_assert!(ew < 1e-4 && ex < 1e-4 && eb < 1e-4, "{ew} {ex} {eb}");
    }

    // At least four rows per channel: with two, normalisation is close to a
    // sign function and the difference quotient itself is the inaccurate side.
    #[test]
    fn batch_norm_gradients(seed in any::<u64>(), batch in 2usize..4, time in 2usize..5, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&mut rng, &[batch, time, c]);
        let gamma = random(&mut rng, &[c]);
        let beta = random(&mut rng, &[c]);
        let eps = 1e-3;
        let fwd = |x: &Tensor<f64>, g: &Tensor<f64>, b: &Tensor<f64>| batch_norm_train(x, g, b, eps).unwrap().0;
        let (y, cache, _) = batch_norm_train(&x, &gamma, &beta, eps).unwrap();
        let r = random(&mut rng, y.shape());
        let (dx, dg, db) = batch_norm_backward(&r, &gamma, &cache).unwrap();
        let ex = check(&x, &dx, |v| project(&fwd(&with(&x, v), &gamma, &beta), &r));
        let eg = check(&gamma, &dg, |v| project(&fwd(&x, &with(&gamma, v), &beta), &r));
        let eb = check(&beta, &db, |v| project(&fwd(&x, &gamma, &with(&beta, v)), &r));
        prop_assert!(ex < 1e-4 && eg < 1e-4 && eb < 1e-4, "{ex} {eg} {eb}");
    }

    #[test]
    fn dense_gradients(seed in any::<u64>(), batch in 1usize..4, inp in 1usize..5, out in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&mut rng, &[batch, inp]);
        let w = random(&mut rng, &[inp, out]);
        let b = random(&mut rng, &[out]);
        let r = random(&mut rng, &[batch, out]);
        let (dx, dw, db) = dense_backward(&x, &w, &b, &r).unwrap();
        let ex = check(&x, &dx, |v| project(&dense(&with(&x, v), &w, &b).unwrap(), &r));
        let ew = check(&w, &dw, |v| project(&dense(&x, &with(&w, v), &b).unwrap(), &r));
        let eb = check(&b, &db, |v| project(&dense(&x, &w, &with(&b, v)).unwrap(), &r));
        prop_assert!(ex < 1e-6 && ew < 1e-6 && eb < 1e-6, "{ex} {ew} {eb}");
    }

    #[test]
    fn activation_gradients(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // keep clear of the ReLU kink
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(0.05..2.0);
                if rng.random::<bool>() { v } else { -v }
            })
            .collect();
        let x = Tensor::from_vec(&[n], vals).unwrap();
        let r = random(&mut rng, &[n]);
        let er = check(&x, &relu_backward(&x, &r).unwrap(), |v| project(&relu(&with(&x, v)), &r));
        let et = check(&x, &tanh_backward(&tanh_act(&x), &r).unwrap(), |v| project(&tanh_act(&with(&x, v)), &r));
        prop_assert!(er < 1e-4 && et < 1e-4, "{er} {et}");
    }

    #[test]
    fn lstm_gradients(seed in any::<u64>(), batch in 1usize..3, time in 1usize..4, inp in 1usize..3, units in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&mut rng, &[batch, time, inp]);
        let p = LstmParams {
            w: random(&mut rng, &[inp, 4 * units]),
            u: random(&mut rng, &[units, 4 * units]),
            b: random(&mut rng, &[4 * units]),
        };
        let (y, cache) = lstm_forward(&x, &p, None).unwrap();
        let r = random(&mut rng, y.shape());
        let (dx, g) = lstm_backward(&p, &cache, &r).unwrap();
        let run = |x: &Tensor<f64>, p: &LstmParams<f64>| project(&lstm_forward(x, p, None).unwrap().0, &r);
        let ex = check(&x, &dx, |v| run(&with(&x, v), &p));
        let ew = check(&p.w, &g.dw, |v| run(&x, &LstmParams { w: with(&p.w, v), ..p.clone() }));
        let eu = check(&p.u, &g.du, |v| run(&x, &LstmParams { u: with(&p.u, v), ..p.clone() }));
        let eb = check(&p.b, &g.db, |v| run(&x, &LstmParams { b: with(&p.b, v), ..p.clone() }));
        prop_assert!(ex < 1e-4 && ew < 1e-4 && eu < 1e-4 && eb < 1e-4, "{ex} {ew} {eu} {eb}");
    }
}

#[test]
fn lstm_two_step_three_unit_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random(&mut rng, &[1, 2, 2]);
    let p = LstmParams { w: random(&mut rng, &[2, 12]), u: random(&mut rng, &[3, 12]), b: random(&mut rng, &[12]) };
    let (y, cache) = lstm_forward(&x, &p, None).unwrap();
    let r = random(&mut rng, y.shape());
    let (_, g) = lstm_backward(&p, &cache, &r).unwrap();
    let e = check(&p.u, &g.du, |v| project(&lstm_forward(&x, &LstmParams { u: with(&p.u, v), ..p.clone() }, None).unwrap().0, &r));
    assert!(e < 1e-4, "{e}");
}

#[test]
fn lstm_gradients_with_recurrent_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random(&mut rng, &[2, 3, 2]);
    let p = LstmParams { w: random(&mut rng, &[2, 12]), u: random(&mut rng, &[3, 12]), b: random(&mut rng, &[12]) };
    let mask = vec![2.0, 0.0, 2.0, 0.0, 2.0, 2.0];
    let (y, cache) = lstm_forward(&x, &p, Some(mask.clone())).unwrap();
    let r = random(&mut rng, y.shape());
    let (dx, g) = lstm_backward(&p, &cache, &r).unwrap();
    let run = |x: &Tensor<f64>, p: &LstmParams<f64>| project(&lstm_forward(x, p, Some(mask.clone())).unwrap().0, &r);
    assert!(check(&x, &dx, |v| run(&with(&x, v), &p)) < 1e-4);
    assert!(check(&p.u, &g.du, |v| run(&x, &LstmParams { u: with(&p.u, v), ..p.clone() })) < 1e-4);
}

#[test]
fn max_pool_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // distinct values spaced well beyond the step
    let mut vals: Vec<f64> = (0..24).map(|i| i as f64 * 0.1).collect();
    use rand::seq::SliceRandom;
    vals.shuffle(&mut rng);
    let x = Tensor::from_vec(&[2, 6, 2], vals).unwrap();
    let (y, idx) = max_pool1d(&x, 2).unwrap();
    let r = random(&mut rng, y.shape());
    let dx = max_pool1d_backward(&r, &idx).unwrap();
    let e = check(&x, &dx, |v| project(&max_pool1d(&with(&x, v), 2).unwrap().0, &r));
    assert!(e < 1e-4, "{e}");
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let logits = random(&mut rng, &[4, 2]);
    let labels = [0, 1, 1, 0];
    let (_, d) = softmax_cross_entropy(&logits, &labels).unwrap();
    let e = check(&logits, &d, |v| softmax_cross_entropy(&with(&logits, v), &labels).unwrap().0);
    assert!(e < 1e-6, "{e}");
}

fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        conv_units: vec![4, 3, 2],
        conv_kernel: vec![3, 3, 2],
        conv_stride: vec![1, 1, 1],
        lstm_units: vec![3, 3, 2],
        dense_units: vec![4, 2],
        batch_size: 4,
        seed,
        precision: Precision::F64,
        ..ModelConfig::default()
    }
}

/// Whole network, train mode with dropout active. The dropout RNG is
/// re-seeded for every evaluation so all passes share the same masks.
/// Perturbations that flip a ReLU or change a max-pool winner cross a kink
/// of the piecewise-smooth network and are skipped.
#[test]
fn whole_model_gradients_match_finite_differences() {
    let mut skipped = 0usize;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let cfg = tiny_config(seed);
        let mut model: Model<f64> = Model::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x = random(&mut rng, &[4, 64, 1]);
        let labels = [0, 1, 0, 1];

        let loss_and_sig = |m: &mut Model<f64>| {
            let mut drop_rng = ChaCha8Rng::seed_from_u64(seed);
            let (logits, cache) = m.forward_train(&x, &mut drop_rng).unwrap();
            let (loss, d) = softmax_cross_entropy(&logits, &labels).unwrap();
            (loss, d, cache)
        };
        let (_, dlogits, cache) = loss_and_sig(&mut model);
        let grads = model.backward(&cache, &dlogits).unwrap();
        let base_sig = cache.routing_signature();

        let n_params = model.parameters().len();
        for pi in 0..n_params {
            let len = grads[pi].len();
            let (mut an, mut nu) = (Vec::new(), Vec::new());
            for j in 0..len {
                let orig = model.parameters()[pi].data()[j];
                let mut eval = |delta: f64| {
                    model.parameters_mut()[pi].data_mut()[j] = orig + delta;
                    let (l, _, c) = loss_and_sig(&mut model);
                    (l, c.routing_signature() == base_sig)
                };
                let (up, ok_up) = eval(H);
                let (down, ok_down) = eval(-H);
                model.parameters_mut()[pi].data_mut()[j] = orig;
                if !(ok_up && ok_down) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                an.push(grads[pi].data()[j]);
                nu.push((up - down) / (2.0 * H));
            }
            // skipped probes still contribute their analytic value to the scale
            let floor = grads[pi].data().iter().fold(FLOOR, |m, v| m.max(v.abs()));
            worst = worst.max(max_relative_error(&an, &nu, floor));
        }
    }
    let skipped_frac = skipped as f64 / (skipped + checked) as f64;
    println!("checked {checked}, skipped {skipped} ({skipped_frac:.4}), worst relative error {worst:.3e}");
    assert!(skipped_frac < 0.05, "too many kink crossings: {skipped_frac}");
    assert!(worst < 1e-3, "worst relative error {worst}");
}
