//! The documented conv/pool length formula against runtime shapes.

use osa_nn::layers::{conv1d, max_pool1d};
use osa_nn::{ModelConfig, Tensor};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_runtime(len in 8usize..400, k in 1usize..9, stride in 1usize..5) {
        let cfg = ModelConfig {
            conv_units: vec![3, 2, 2],
            conv_kernel: vec![k; 3],
            conv_stride: vec![stride; 3],
            ..ModelConfig::default()
        };
        let predicted = cfg.conv_stack_output_len(len);

        let mut x = Tensor::<f64>::zeros(&[1, len, 1]);
        let mut cin = 1;
        let mut runtime = Some(len);
        for &units in &cfg.conv_units {
            let w = Tensor::zeros(&[k, cin, units]);
            let b = Tensor::zeros(&[units]);
            let Ok(y) = conv1d(&x, &w, &b, stride) else { runtime = None; break };
            let Ok((p, _)) = max_pool1d(&y, cfg.pool) else { runtime = None; break };
            x = p;
            cin = units;
            runtime = Some(x.shape()[1]);
        }
        prop_assert_eq!(predicted, runtime);
        if let Some(t) = predicted {
            prop_assert_eq!(x.shape(), &[1, t, 2][..]);
        }
    }
}

#[test]
fn default_stack_on_fifteen_seconds_at_512_hz() {
    assert_eq!(ModelConfig::default().conv_stack_output_len(7680), Some(13));
}
