//! Mean-field CD-1.
//!
//! Biases are ignored throughout: the hidden pass is `h̃_j = σ(xᵀW_{·j})`,
//! the visible pass is `x̃_i = σ(W_{i·} h̃)`, and the CD-1 estimate of the
//! log-partition replaces the enumeration over visibles with the single
//! reconstruction `x̃`, giving `Σ_j ln(1 + exp(x̃ᵀW_{·j}))`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{ensure_len, ensure_limit, Error, Result};
use crate::rbm::{check_binary, mean_exact_log_likelihood, BinaryDataset, RbmParams};
use crate::numerics::{log1p_exp, sigmoid};
use crate::stream_rng;

/// Audit uses the exact likelihood, so the visible layer must stay small.
pub const MAX_AUDIT_VISIBLE: usize = 12;
pub const MINIBATCH_SIZE: usize = 32;

/// Hidden and visible mean-field activations for one source sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub h_tilde: Array1<f64>,
    pub x_tilde: Array1<f64>,
    pub source_x: Vec<u8>,
}

impl MeanFieldState {
    pub fn new(params: &RbmParams, x: &[u8]) -> Result<Self> {
        let h_tilde = meanfield_hidden(params, x)?;
        let x_tilde = visible_activation(params.weights().view(), h_tilde.view());
        Ok(Self {
            h_tilde,
            x_tilde,
            source_x: x.to_vec(),
        })
    }
}

/// One training-audit record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingTrace {
    pub epoch: usize,
    pub mean_exact_loglik: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

/// `σ(xᵀW_{·j})` for every column, with `x` allowed to be real-valued.
pub(crate) fn hidden_activation(weights: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> Array1<f64> {
    x.dot(&weights).mapv(sigmoid)
}

/// `σ(W_{i·} h)` for every row.
pub(crate) fn visible_activation(weights: ArrayView2<'_, f64>, h: ArrayView1<'_, f64>) -> Array1<f64> {
    weights.dot(&h).mapv(sigmoid)
}

/// `Σ_j ln(1 + exp(x̃ᵀW_{·j}))` given the full pipeline input `x`.
pub(crate) fn cd1_log_partition_real(weights: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> f64 {
    let h = hidden_activation(weights, x);
    let x_tilde = visible_activation(weights, h.view());
    x_tilde.dot(&weights).iter().map(|&g| log1p_exp(g)).sum()
}

fn binary_as_f64(x: &[u8]) -> Array1<f64> {
    x.iter().map(|&b| f64::from(b)).collect()
}

pub fn meanfield_hidden(params: &RbmParams, x: &[u8]) -> Result<Array1<f64>> {
    check_binary("visible state", params.visible(), x)?;
    Ok(hidden_activation(params.weights().view(), binary_as_f64(x).view()))
}

pub fn meanfield_visible(params: &RbmParams, h_tilde: &[f64]) -> Result<Array1<f64>> {
    ensure_len("mean-field hidden vector", params.hidden(), h_tilde.len())?;
    if let Some(v) = h_tilde.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "mean-field hidden entries must lie in (0, 1), found {v}"
        )));
    }
    Ok(visible_activation(
        params.weights().view(),
        ArrayView1::from(h_tilde),
    ))
}

/// Mean-field CD-1 approximation of `ln Z` seen from sample `x`.
pub fn cd1_log_partition(params: &RbmParams, x: &[u8]) -> Result<f64> {
    check_binary("visible state", params.visible(), x)?;
    Ok(cd1_log_partition_real(
        params.weights().view(),
        binary_as_f64(x).view(),
    ))
}

/// Bias-free part 1 minus the CD-1 log-partition.
pub fn cd1_approx_log_likelihood(params: &RbmParams, x: &[u8]) -> Result<f64> {
    let log_z = cd1_log_partition(params, x)?;
    let part1: f64 = binary_as_f64(x)
        .dot(params.weights())
        .iter()
        .map(|&g| log1p_exp(g))
        .sum();
    Ok(part1 - log_z)
}

/// One mean-field CD-1 update of `W`; biases are carried through unchanged.
///
/// `ΔW = η · mean_batch(x h̃ᵀ − x̃ h̃'ᵀ)` with `h̃' = σ(x̃ᵀW)` computed from the
/// real-valued reconstruction. The step draws no randomness.
pub fn cd1_gradient_step(params: &RbmParams, minibatch: &BinaryDataset, learning_rate: f64) -> Result<RbmParams> {
    ensure_len("minibatch width", params.visible(), minibatch.dim())?;
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and >= 0, got {learning_rate}"
        )));
    }
    if minibatch.is_empty() {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    let weights = params.weights();
    let (k, m) = weights.dim();
    let mut delta = Array2::<f64>::zeros((k, m));
    for row in minibatch.samples().axis_iter(Axis(0)) {
        let x = row.mapv(f64::from);
        let h = hidden_activation(weights.view(), x.view());
        let x_tilde = visible_activation(weights.view(), h.view());
        let h_neg = hidden_activation(weights.view(), x_tilde.view());
        for i in 0..k {
            for j in 0..m {
                delta[[i, j]] += x[i] * h[j] - x_tilde[i] * h_neg[j];
            }
        }
    }
    let scale = learning_rate / minibatch.len() as f64;
    let new_weights = weights + &(delta * scale);
    RbmParams::new(
        new_weights,
        params.visible_bias().clone(),
        params.hidden_bias().clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub audit_every: usize,
}

/// Mean-field CD-1 over shuffled minibatches of `min(n, 32)` samples.
///
/// The audit at epoch 0 records the initial parameters; later audits happen
/// every `audit_every` epochs and always at the final epoch. Each epoch's
/// shuffle comes from its own stream of the master seed.
pub fn train_cd1(init: &RbmParams, data: &BinaryDataset, settings: TrainSettings) -> Result<Vec<TrainingTrace>> {
    Ok(train_cd1_with_params(init, data, settings)?.0)
}

/// As [`train_cd1`], also returning the trained parameters.
pub fn train_cd1_with_params(
    init: &RbmParams,
    data: &BinaryDataset,
    settings: TrainSettings,
) -> Result<(Vec<TrainingTrace>, RbmParams)> {
    ensure_limit("k", init.visible(), MAX_AUDIT_VISIBLE)?;
    ensure_len("dataset width", init.visible(), data.dim())?;
    if settings.audit_every == 0 {
        return Err(Error::InvalidArgument("audit_every must be >= 1".into()));
    }
    if !(settings.learning_rate >= 0.0 && settings.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be finite and >= 0".into()));
    }
    let audit = |params: &RbmParams, epoch: usize| -> Result<TrainingTrace> {
        Ok(TrainingTrace {
            epoch,
            mean_exact_loglik: mean_exact_log_likelihood(params, data)?,
            learning_rate: settings.learning_rate,
            seed: settings.seed,
        })
    };

    let mut params = init.clone();
    let mut trace = vec![audit(&params, 0)?];
    let batch = data.len().min(MINIBATCH_SIZE);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=settings.epochs {
        let mut rng = stream_rng(settings.seed, epoch as u64);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let minibatch = data.select(chunk)?;
            params = cd1_gradient_step(&params, &minibatch, settings.learning_rate)?;
        }
        if epoch % settings.audit_every == 0 || epoch == settings.epochs {
            trace.push(audit(&params, epoch)?);
        }
    }
    Ok((trace, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::{config_from_index, exact_log_likelihood, sample_dataset};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn random_weights(k: usize, m: usize, seed: u64) -> RbmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-2.0..2.0));
        RbmParams::from_weights(w).unwrap()
    }

    #[test]
    fn hidden_pass_examples() {
        let p = RbmParams::zeros(3, 2).unwrap();
        assert_eq!(meanfield_hidden(&p, &[1, 0, 1]).unwrap(), array![0.5, 0.5]);

        let p = RbmParams::from_weights(array![[1.0, -3.0], [1.0, 0.25]]).unwrap();
        let h = meanfield_hidden(&p, &[1, 1]).unwrap();
        assert!((h[0] - 0.880_797_077_977_882_4).abs() < 1e-15);

        let p = random_weights(4, 3, 1);
        assert_eq!(meanfield_hidden(&p, &[0, 0, 0, 0]).unwrap(), Array1::from_elem(3, 0.5));
    }

    #[test]
    fn visible_pass_examples() {
        let p = RbmParams::zeros(2, 3).unwrap();
        assert_eq!(meanfield_visible(&p, &[0.1, 0.7, 0.3]).unwrap(), array![0.5, 0.5]);

        let p = RbmParams::from_weights(array![[1.0, 1.0]]).unwrap();
        let x = meanfield_visible(&p, &[0.5, 0.5]).unwrap();
        assert!((x[0] - 0.731_058_578_630_004_9).abs() < 1e-15);

        let p = RbmParams::from_weights(array![[1.5, -1.5]]).unwrap();
        assert!((meanfield_visible(&p, &[0.5, 0.5]).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn visible_pass_rejects_out_of_range_input() {
        let p = RbmParams::zeros(1, 2).unwrap();
        assert!(meanfield_visible(&p, &[0.0, 0.5]).is_err());
        assert!(meanfield_visible(&p, &[0.5, 1.0]).is_err());
        assert!(meanfield_visible(&p, &[0.5]).is_err());
    }

    #[test]
    fn state_matches_the_two_passes() {
        let p = random_weights(5, 3, 2);
        let x = [1, 0, 1, 1, 0];
        let state = MeanFieldState::new(&p, &x).unwrap();
        assert_eq!(state.h_tilde, meanfield_hidden(&p, &x).unwrap());
        assert_eq!(
            state.x_tilde,
            meanfield_visible(&p, state.h_tilde.as_slice().unwrap()).unwrap()
        );
        assert!(state.h_tilde.iter().chain(state.x_tilde.iter()).all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn cd1_log_partition_at_zero_weights() {
        let p = RbmParams::zeros(4, 3).unwrap();
        assert!((cd1_log_partition(&p, &[1, 1, 0, 1]).unwrap() - 3.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn cd1_log_partition_scalar_closed_form() {
        for &w in &[-3.0, -0.4, 0.0, 0.9, 2.5] {
            let p = RbmParams::from_weights(array![[w]]).unwrap();
            for x in [0u8, 1] {
                let xf = f64::from(x);
                let expected = (1.0 + (w * sigmoid(w * sigmoid(xf * w))).exp()).ln();
                let got = cd1_log_partition(&p, &[x]).unwrap();
                assert!((got - expected).abs() < 1e-14, "w={w} x={x}");
            }
        }
    }

    #[test]
    fn cd1_log_partition_is_the_three_stage_composition() {
        for seed in 0..20 {
            let p = random_weights(1 + seed as usize % 6, 1 + seed as usize % 4, seed);
            let k = p.visible();
            let x = config_from_index(seed as usize * 7 % (1 << k), k);
            let h = meanfield_hidden(&p, &x).unwrap();
            let xt = meanfield_visible(&p, h.as_slice().unwrap()).unwrap();
            let composed: f64 = (0..p.hidden())
                .map(|j| log1p_exp(xt.dot(&p.weights().column(j))))
                .sum();
            assert!((cd1_log_partition(&p, &x).unwrap() - composed).abs() <= 1e-12);
        }
    }

    #[test]
    fn approx_log_likelihood_examples() {
        let p = RbmParams::zeros(3, 2).unwrap();
        assert!(cd1_approx_log_likelihood(&p, &[1, 0, 1]).unwrap().abs() < 1e-15);

        let p = random_weights(3, 2, 5);
        let expected = 2.0 * LN_2 - cd1_log_partition(&p, &[0, 0, 0]).unwrap();
        assert!((cd1_approx_log_likelihood(&p, &[0, 0, 0]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn approx_log_likelihood_gap_is_finite() {
        // The gap to the exact value is measured, not bounded.
        let p = random_weights(5, 3, 11);
        for idx in 0..32 {
            let x = config_from_index(idx, 5);
            let gap = cd1_approx_log_likelihood(&p, &x).unwrap() - exact_log_likelihood(&p, &x).unwrap();
            assert!(gap.is_finite());
        }
    }

    #[test]
    fn gradient_step_examples() {
        let p = random_weights(3, 2, 3);
        let data = BinaryDataset::from_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(cd1_gradient_step(&p, &data, 0.0).unwrap(), p);
        assert_eq!(
            cd1_gradient_step(&p, &data, 0.1).unwrap(),
            cd1_gradient_step(&p, &data, 0.1).unwrap()
        );

        // At W = 0 each entry moves by η (mean(x_i)·0.5 − 0.25).
        let zero = RbmParams::zeros(3, 2).unwrap();
        let data = BinaryDataset::from_rows(&[vec![1, 0, 1], vec![1, 0, 0]]).unwrap();
        let next = cd1_gradient_step(&zero, &data, 1.0).unwrap();
        let expected = [0.25, -0.25, 0.0];
        for i in 0..3 {
            for j in 0..2 {
                assert!((next.weights()[[i, j]] - expected[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_weights_are_a_fixed_point_for_balanced_data() {
        let zero = RbmParams::zeros(2, 3).unwrap();
        let data = BinaryDataset::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![0, 0]]).unwrap();
        assert_eq!(cd1_gradient_step(&zero, &data, 0.5).unwrap(), zero);
    }

    #[test]
    fn gradient_step_errors() {
        let p = RbmParams::zeros(2, 1).unwrap();
        let data = BinaryDataset::from_rows(&[vec![1, 0]]).unwrap();
        assert!(cd1_gradient_step(&p, &data, -0.1).is_err());
        let wide = BinaryDataset::from_rows(&[vec![1, 0, 1]]).unwrap();
        assert!(cd1_gradient_step(&p, &wide, 0.1).is_err());
    }

    #[test]
    fn zero_epochs_is_a_single_audit() {
        let p = random_weights(3, 2, 8);
        let data = sample_dataset(&p, 20, 1).unwrap();
        let settings = TrainSettings {
            epochs: 0,
            learning_rate: 0.05,
            seed: 4,
            audit_every: 5,
        };
        let trace = train_cd1(&p, &data, settings).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].epoch, 0);
    }

    #[test]
    fn training_is_deterministic_and_audits_in_order() {
        let truth = random_weights(4, 2, 9);
        let data = sample_dataset(&truth, 100, 2).unwrap();
        let init = random_weights(4, 2, 10);
        let settings = TrainSettings {
            epochs: 12,
            learning_rate: 0.05,
            seed: 3,
            audit_every: 5,
        };
        let a = train_cd1(&init, &data, settings).unwrap();
        let b = train_cd1(&init, &data, settings).unwrap();
        assert_eq!(a, b);
        let epochs: Vec<usize> = a.iter().map(|t| t.epoch).collect();
        assert_eq!(epochs, vec![0, 5, 10, 12]);
    }

    #[test]
    fn single_all_ones_sample_does_not_lose_likelihood() {
        let data = BinaryDataset::from_rows(&[vec![1, 1]]).unwrap();
        let init = RbmParams::from_weights(array![[0.05, -0.02], [0.01, 0.03]]).unwrap();
        let settings = TrainSettings {
            epochs: 50,
            learning_rate: 0.05,
            seed: 1,
            audit_every: 10,
        };
        let trace = train_cd1(&init, &data, settings).unwrap();
        let first = trace.first().unwrap().mean_exact_loglik;
        let last = trace.last().unwrap().mean_exact_loglik;
        assert!(last >= first, "{first} -> {last}");
    }

    #[test]
    fn training_guards() {
        let p = RbmParams::zeros(13, 1).unwrap();
        let data = BinaryDataset::new(Array2::zeros((2, 13))).unwrap();
        let settings = TrainSettings {
            epochs: 1,
            learning_rate: 0.1,
            seed: 0,
            audit_every: 1,
        };
        assert!(matches!(
            train_cd1(&p, &data, settings),
            Err(Error::EnumerationLimit { .. })
        ));
        let p = RbmParams::zeros(2, 1).unwrap();
        let data = BinaryDataset::new(Array2::zeros((2, 2))).unwrap();
        assert!(train_cd1(&p, &data, TrainSettings { audit_every: 0, ..settings }).is_err());
    }
}
