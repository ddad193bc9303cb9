//! Gradient-based per-channel importance.
//!
//! The weight of channel `k` is the absolute value of the summed gradient of
//! the reference-class probability over that channel's positions, evaluated
//! at the dequantized full-mask feature. The absolute value keeps the
//! weights non-negative: a signed sum can go negative, which would break the
//! STII normalization and the monotone premise of the binary search.
//!
//! The reference class is the ground-truth label when one is available
//! (curve fitting over labeled data) and the clean argmax prediction at
//! runtime, where the transmitter has no label.

use crate::error::Result;
use crate::feature::{ChannelMask, ImportanceVector, SemanticFeature, SortedImportance};
use crate::task::{dequantize, TaskModel};

/// Per-channel importance of `x` for the reference class.
pub fn importance_weights(
    model: &TaskModel,
    x: &SemanticFeature,
    reference_class: usize,
) -> Result<ImportanceVector> {
    let shape = x.shape();
    let full = ChannelMask::full(shape.channels);
    let feature = dequantize(x, &full)?;
    let gradient = model.gradient_wrt_feature(&feature, reference_class)?;
    let weights = (0..shape.channels)
        .map(|k| {
            gradient[k * shape.length..(k + 1) * shape.length]
                .iter()
                .sum::<f64>()
                .abs()
        })
        .collect();
    ImportanceVector::new(weights)
}

/// Stable descending sort of the weights (merge-sort semantics: equal
/// weights keep their original channel order).
pub fn sort_importance(w: &ImportanceVector) -> SortedImportance {
    SortedImportance::from_weights(w)
}

/// First-order-approximation diagnostic for channel `k`:
/// `| [y*(x) - y*(x with channel k zeroed)] - g_k |` where
/// `g_k = sum_i d y*/d x_i^k * x_i^k`. Zero for a linear decoder.
pub fn linear_approximation_error(
    model: &TaskModel,
    x: &SemanticFeature,
    reference_class: usize,
    k: usize,
) -> Result<f64> {
    let shape = x.shape();
    if k >= shape.channels {
        return Err(crate::error::Error::InvalidArgument(format!(
            "channel {k} out of range 0..{}",
            shape.channels
        )));
    }
    let full = ChannelMask::full(shape.channels);
    let feature = dequantize(x, &full)?;

    let baseline = model.decode(&feature, Some(reference_class))?.target_prob;
    let mut zeroed = feature.clone();
    zeroed[k * shape.length..(k + 1) * shape.length].fill(0.0);
    let without_k = model.decode(&zeroed, Some(reference_class))?.target_prob;

    let gradient = model.gradient_wrt_feature(&feature, reference_class)?;
    let first_order_drop: f64 = (k * shape.length..(k + 1) * shape.length)
        .map(|e| gradient[e] * feature[e])
        .sum();

    Ok(((baseline - without_k) - first_order_drop).abs())
}

/// Weight table as CSV: `channel,weight,rank` (rank 0 = most important).
pub fn importance_to_csv(w: &ImportanceVector, sorted: &SortedImportance) -> String {
    let mut rank_of = vec![0usize; w.len()];
    for (rank, &channel) in sorted.permutation().iter().enumerate() {
        rank_of[channel] = rank;
    }
    let mut out = String::from("channel,weight,rank\n");
    for (channel, weight) in w.weights().iter().enumerate() {
        out.push_str(&format!("{channel},{weight},{}\n", rank_of[channel]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::feature::FeatureShape;
    use crate::seed;
    use crate::task::{generate_dataset, quantize, random_model, TaskModelConfig};
    use rand::Rng;

    fn config(seed: u64) -> TaskModelConfig {
        TaskModelConfig {
            input_dim: 8,
            num_classes: 4,
            hidden_dim: 16,
            shape: FeatureShape {
                length: 4,
                channels: 6,
                bits_per_element: 1,
            },
            learning_rate: 0.1,
            epochs: 8,
            batch_size: 16,
            train_bitflip_prob: 0.1,
            train_mask_drop_prob: 0.2,
            seed,
        }
    }

    fn random_feature(cfg: &TaskModelConfig, seed: u64) -> SemanticFeature {
        let mut rng = seed::rng_from(seed, &[0xFEA]);
        let f = cfg.shape.length * cfg.shape.channels;
        let a: Vec<f64> = (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect();
        quantize(&a, cfg.shape).unwrap()
    }

    #[test]
    fn weights_are_nonnegative_and_sized() {
        let cfg = config(4);
        let model = random_model(&cfg).unwrap();
        let x = random_feature(&cfg, 9);
        let w = importance_weights(&model, &x, 0).unwrap();
        assert_eq!(w.len(), cfg.shape.channels);
        assert!(w.weights().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dead_channel_has_zero_weight() {
        let cfg = config(4);
        let mut model = random_model(&cfg).unwrap();
        // Zero every decoder first-layer weight reading channel 2.
        let length = cfg.shape.length;
        let f = length * cfg.shape.channels;
        for r in 0..cfg.hidden_dim {
            for e in 2 * length..3 * length {
                model.dec_w1[r * f + e] = 0.0;
            }
        }
        let x = random_feature(&cfg, 10);
        let w = importance_weights(&model, &x, 1).unwrap();
        assert_eq!(w.weights()[2], 0.0);
        let err = linear_approximation_error(&model, &x, 1, 2).unwrap();
        assert!(
            err < 1e-12,
            "dead channel diagnostic should vanish, got {err}"
        );
    }

    #[test]
    fn weights_match_finite_difference_column_sums() {
        let cfg = config(6);
        let data = generate_dataset(200, &cfg, 3).unwrap();
        let model = crate::task::train(&cfg, &data).unwrap();
        let x = random_feature(&cfg, 11);
        let reference = 2;
        let w = importance_weights(&model, &x, reference).unwrap();

        let full = ChannelMask::full(cfg.shape.channels);
        let feature = dequantize(&x, &full).unwrap();
        let step = 1e-4;
        for k in 0..cfg.shape.channels {
            let mut fd_sum = 0.0;
            for i in 0..cfg.shape.length {
                let e = k * cfg.shape.length + i;
                let mut plus = feature.clone();
                plus[e] += step;
                let mut minus = feature.clone();
                minus[e] -= step;
                fd_sum += (model.decode(&plus, Some(reference)).unwrap().target_prob
                    - model.decode(&minus, Some(reference)).unwrap().target_prob)
                    / (2.0 * step);
            }
            let want = fd_sum.abs();
            let got = w.weights()[k];
            let denom = want.max(got).max(1e-6);
            assert!(
                ((got - want) / denom).abs() < 1e-4,
                "channel {k}: analytic {got} vs finite-difference {want}"
            );
        }
    }

    #[test]
    fn sort_example_and_stability() {
        let w = ImportanceVector::new(vec![0.1, 0.5, 0.3]).unwrap();
        let sw = sort_importance(&w);
        assert_eq!(sw.sorted(), &[0.5, 0.3, 0.1]);
        assert_eq!(sw.permutation(), &[1, 2, 0]);

        let equal = ImportanceVector::new(vec![0.7; 5]).unwrap();
        assert_eq!(sort_importance(&equal).permutation(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn sort_agrees_with_reference_sort() {
        let mut rng = seed::rng_from(88, &[1]);
        for _ in 0..1000 {
            let n = rng.gen_range(1..20);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let w = ImportanceVector::new(weights.clone()).unwrap();
            let sw = sort_importance(&w);
            let mut reference = weights;
            reference.sort_by(|a, b| b.total_cmp(a));
            assert_eq!(sw.sorted(), reference.as_slice());
        }
    }

    #[test]
    fn argsort_invariant_under_positive_scaling() {
        let w = ImportanceVector::new(vec![0.3, 0.9, 0.1, 0.5]).unwrap();
        let scaled = ImportanceVector::new(w.weights().iter().map(|v| v * 17.5).collect()).unwrap();
        assert_eq!(
            sort_importance(&w).permutation(),
            sort_importance(&scaled).permutation()
        );
    }

    #[test]
    fn first_order_error_vanishes_with_curvature() {
        // The decode path is tanh + softmax, so it is never exactly linear;
        // in the small-weight limit its curvature vanishes and the
        // first-order diagnostic must follow it to zero.
        let cfg = config(14);
        let base = random_model(&cfg).unwrap();
        let x = random_feature(&cfg, 21);

        let scaled_error = |s: f64| {
            let mut m = base.clone();
            m.dec_w1.iter_mut().for_each(|w| *w *= s);
            m.dec_b1.iter_mut().for_each(|w| *w *= s);
            m.dec_w2.iter_mut().for_each(|w| *w *= s);
            m.dec_b2.iter_mut().for_each(|w| *w *= s);
            linear_approximation_error(&m, &x, 1, 3).unwrap()
        };
        let full = scaled_error(1.0);
        let small = scaled_error(1e-3);
        assert!(
            small < 1e-9,
            "near-linear decoder should have tiny error, got {small}"
        );
        assert!(small < full || full == 0.0);
    }

    #[test]
    fn trained_model_median_diagnostic_is_finite() {
        // Diagnostic only: report the median linearization error across
        // channels on a trained model, no hard bound asserted.
        let cfg = config(15);
        let data = generate_dataset(200, &cfg, 8).unwrap();
        let model = crate::task::train(&cfg, &data).unwrap();
        let x = random_feature(&cfg, 30);
        let mut errors: Vec<f64> = (0..cfg.shape.channels)
            .map(|k| linear_approximation_error(&model, &x, 0, k).unwrap())
            .collect();
        errors.sort_by(f64::total_cmp);
        let median = errors[errors.len() / 2];
        assert!(median.is_finite());
        println!("median linear-approximation error over channels: {median:.6}");
    }

    #[test]
    fn out_of_range_channel_is_an_error() {
        let cfg = config(4);
        let model = random_model(&cfg).unwrap();
        let x = random_feature(&cfg, 12);
        assert!(matches!(
            linear_approximation_error(&model, &x, 0, cfg.shape.channels),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_dump_lists_every_channel() {
        let w = ImportanceVector::new(vec![0.1, 0.5, 0.3]).unwrap();
        let sw = sort_importance(&w);
        let csv = importance_to_csv(&w, &sw);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "channel,weight,rank");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "1,0.5,0");
    }
}
