//! Fixed-point quantization of trained models.
//!
//! Every weighted sum gets its own symmetric scale `s = (2^(c-1) - 1) /
//! max|w|` (1 if all weights are zero); weights become `round(w * s)` clipped
//! into the symmetric range, and the intercept is quantized at the
//! accumulator scale `s * input_scale`. Hidden MLP activations are requantized
//! into `h` bits by one per-layer right shift (the smallest shift that brings
//! the layer's largest attainable accumulator magnitude into range), with
//! saturation at `2^h - 1`. Because each hidden neuron then carries its own
//! activation scale, the second-layer weights are divided by those scales
//! before their own quantization ("scale folding"), which keeps every output
//! sum a faithful fixed-point image of the real pre-activation.

use crate::error::Result;
use crate::model::{
    Activation, FixedPointSpec, ModelKind, QuantizedClassifier, QuantizedLayer, QuantizedModel,
    QuantizedSum, RealModel,
};
use crate::util::{ceil_log2, round_half_away};

/// Signed accumulator width for a weighted sum of `n` inputs of `in_bits`
/// unsigned bits against `coeff_bits`-bit signed coefficients, with room for
/// the intercept: in_bits + coeff_bits + ceil(log2 n) + 1.
pub fn acc_width(n: usize, in_bits: u32, coeff_bits: u32) -> u32 {
    in_bits + coeff_bits + ceil_log2(n.max(1)) + 1
}

/// Largest accumulator magnitude the sum can attain over `in_max`-bounded
/// unsigned inputs.
pub fn max_abs_acc(sum: &QuantizedSum, in_max: i64) -> i64 {
    let w: i64 = sum.weights.iter().map(|w| w.abs() * in_max).sum();
    w + sum.intercept.abs()
}

/// Quantize one weighted sum. `input_scale` maps the sum's real inputs to the
/// integers it will actually consume; the result's `scale` maps the real
/// pre-activation value to the integer accumulator.
fn quantize_sum(
    weights: &[f64],
    intercept: f64,
    input_scale: f64,
    in_bits: u32,
    spec: &FixedPointSpec,
) -> QuantizedSum {
    let cmax = spec.coeff_max();
    let max_w = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let s_w = if max_w == 0.0 { 1.0 } else { cmax as f64 / max_w };
    let q: Vec<i64> = weights
        .iter()
        .map(|&w| round_half_away(w * s_w).clamp(-cmax, cmax))
        .collect();
    let width = acc_width(weights.len(), in_bits, spec.coeff_bits);
    let in_max = (1i64 << in_bits) - 1;
    let wsum: i64 = q.iter().map(|w| w.abs() * in_max).sum();
    let budget = ((1i64 << (width - 1)) - 1) - wsum;
    let scale = s_w * input_scale;
    let b = round_half_away(intercept * scale).clamp(-budget, budget);
    QuantizedSum {
        weights: q,
        intercept: b,
        scale,
    }
}

/// Smallest right shift that brings `max_acc` into `h` unsigned bits.
fn requant_shift(max_acc: i64, h: u32) -> u32 {
    let hmax = (1i64 << h) - 1;
    let mut t = 0;
    while (max_acc >> t) > hmax {
        t += 1;
    }
    t
}

pub fn quantize_model(m: &RealModel, spec: &FixedPointSpec) -> Result<QuantizedModel> {
    m.validate()?;
    spec.validate()?;
    let u_scale = spec.input_max() as f64;

    let mut q = QuantizedModel {
        kind: m.kind,
        n_features: m.n_features,
        n_classes: m.n_classes,
        spec: *spec,
        layers: Vec::new(),
        classifiers: Vec::new(),
        output_scale: None,
        approx: None,
    };

    if m.kind.is_mlp() {
        let mut in_bits = spec.input_bits;
        // Per-input scale folding: real input i of the current layer is
        // integer_input_i / in_scales[i].
        let mut in_scales: Vec<f64> = vec![u_scale; m.n_features];
        for layer in &m.layers {
            let folded: Vec<Vec<f64>> = layer
                .weights
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&in_scales)
                        .map(|(&w, &s)| w / s * u_scale)
                        .collect()
                })
                .collect();
            // After dividing by per-input scales the natural input scale of
            // the folded weights is 1; keeping a common u_scale factor out
            // front is equivalent and avoids tiny weight magnitudes on the
            // first layer (where all in_scales are u_scale anyway).
            let sums: Vec<QuantizedSum> = folded
                .iter()
                .zip(&layer.intercepts)
                .map(|(row, &b)| quantize_sum(row, b, u_scale, in_bits, spec))
                .collect();
            let width = acc_width(folded[0].len(), in_bits, spec.coeff_bits);
            let shift = match layer.activation {
                Activation::Relu => {
                    let max_acc = sums
                        .iter()
                        .map(|s| max_abs_acc(s, (1i64 << in_bits) - 1))
                        .max()
                        .unwrap_or(0);
                    requant_shift(max_acc, spec.hidden_bits)
                }
                Activation::Linear => 0,
            };
            in_scales = sums
                .iter()
                .map(|s| s.scale / (1i64 << shift) as f64)
                .collect();
            q.layers.push(QuantizedLayer {
                sums,
                activation: layer.activation,
                in_bits,
                acc_width: width,
                shift,
            });
            in_bits = spec.hidden_bits;
        }
        if m.kind == ModelKind::MlpRegressor {
            q.output_scale = Some(q.layers.last().unwrap().sums[0].scale);
        }
    } else {
        for c in &m.classifiers {
            let sum = quantize_sum(&c.weights, c.intercept, u_scale, spec.input_bits, spec);
            q.classifiers.push(QuantizedClassifier {
                sum,
                class_pair: c.class_pair,
            });
        }
        if m.kind == ModelKind::SvmRegressor {
            q.output_scale = Some(q.classifiers[0].sum.scale);
        }
    }
    q.validate()?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{tiny_mlp_classifier, tiny_svm_classifier};
    use crate::model::RealLayer;

    fn spec448() -> FixedPointSpec {
        FixedPointSpec::default()
    }

    #[test]
    fn scale_matches_brute_force_search() {
        // s = 254 is the largest scale keeping round(|w|*s) within 127
        let q = quantize_sum(&[0.5, -0.25], 0.0, 1.0, 4, &spec448());
        assert_eq!(q.weights, vec![127, -64]);
        assert_eq!(q.scale, 254.0);
        let mut best = 0;
        for s in 1..=4000 {
            if round_half_away(0.5 * s as f64).abs() <= 127
                && round_half_away(-0.25 * s as f64).abs() <= 127
            {
                best = s;
            }
        }
        assert_eq!(best, 254);
    }

    #[test]
    fn all_zero_weights_quantize_to_zero_scale_one() {
        let q = quantize_sum(&[0.0, 0.0, 0.0], 0.5, 15.0, 4, &spec448());
        assert_eq!(q.weights, vec![0, 0, 0]);
        assert_eq!(q.scale, 15.0); // s_w = 1 times input scale
        assert_eq!(q.intercept, 8); // round(0.5 * 15) = 7.5 away from zero
    }

    #[test]
    fn negative_extreme_clips_to_symmetric_range() {
        let q = quantize_sum(&[-0.5, 0.25], 0.0, 1.0, 4, &spec448());
        assert_eq!(q.weights[0], -127);
    }

    #[test]
    fn intercept_lands_at_accumulator_scale() {
        let q = quantize_sum(&[1.0], 0.5, 15.0, 4, &spec448());
        assert_eq!(q.scale, 127.0 * 15.0);
        assert_eq!(q.intercept, round_half_away(0.5 * 127.0 * 15.0));
    }

    #[test]
    fn oversized_intercept_clamps_to_width_budget() {
        // width 13 (N=1) caps the accumulator at 4095; the weight term uses
        // 127 * 15 = 1905, leaving 2190 for the intercept
        let q = quantize_sum(&[1.0], 2.0, 15.0, 4, &spec448());
        assert_eq!(q.intercept, 2190);
        let q = quantize_sum(&[1.0], -2.0, 15.0, 4, &spec448());
        assert_eq!(q.intercept, -2190);
    }

    #[test]
    fn layer_shift_is_smallest_that_fits() {
        // one neuron, weight 1.0, no intercept: max acc = 127 * 15 = 1905,
        // and 1905 >> 3 = 238 <= 255 while 1905 >> 2 = 476 does not fit
        assert_eq!(requant_shift(1905, 8), 3);
        assert_eq!(requant_shift(255, 8), 0);
        assert_eq!(requant_shift(0, 8), 0);
    }

    #[test]
    fn accumulator_width_bounds_every_sum() {
        let m = tiny_mlp_classifier();
        let q = quantize_model(&m, &spec448()).unwrap();
        for layer in &q.layers {
            let in_max = (1i64 << layer.in_bits) - 1;
            let cap = (1i64 << (layer.acc_width - 1)) - 1;
            for s in &layer.sums {
                assert!(max_abs_acc(s, in_max) <= cap);
            }
        }
    }

    #[test]
    fn quantized_mlp_tracks_real_inference() {
        // dequantized circuit-domain outputs must approximate the real ones
        let m = tiny_mlp_classifier();
        let spec = FixedPointSpec {
            input_bits: 8,
            coeff_bits: 12,
            hidden_bits: 12,
        };
        let q = quantize_model(&m, &spec).unwrap();
        let umax = spec.input_max();
        for probe in 0..50u64 {
            let mut rng = crate::util::SplitMix64::new(probe);
            let xq: Vec<u32> = (0..2).map(|_| (rng.next_u64() % (umax as u64 + 1)) as u32).collect();
            let xr: Vec<f64> = xq.iter().map(|&v| v as f64 / umax as f64).collect();
            // real forward pass
            let mut vals = xr.clone();
            for layer in &m.layers {
                vals = layer
                    .weights
                    .iter()
                    .zip(&layer.intercepts)
                    .map(|(row, &b)| {
                        let a: f64 = row.iter().zip(&vals).map(|(w, v)| w * v).sum::<f64>() + b;
                        match layer.activation {
                            Activation::Relu => a.max(0.0),
                            Activation::Linear => a,
                        }
                    })
                    .collect();
            }
            let inf = crate::model::golden::golden_infer(&q, &xq).unwrap();
            for (o, (&raw, sum)) in inf
                .raw
                .iter()
                .zip(&q.layers.last().unwrap().sums)
                .enumerate()
            {
                let deq = raw as f64 / sum.scale;
                assert!(
                    (deq - vals[o]).abs() < 0.05,
                    "output {o}: dequantized {deq} vs real {}",
                    vals[o]
                );
            }
        }
    }

    #[test]
    fn quantization_is_deterministic() {
        let m = tiny_svm_classifier();
        let a = quantize_model(&m, &spec448()).unwrap();
        let b = quantize_model(&m, &spec448()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn single_layer_regressor_has_output_scale() {
        let m = crate::model::RealModel {
            kind: ModelKind::MlpRegressor,
            n_features: 3,
            n_classes: 0,
            layers: vec![RealLayer {
                weights: vec![vec![0.2, -0.4, 0.6]],
                intercepts: vec![0.1],
                activation: Activation::Linear,
            }],
            classifiers: vec![],
        };
        let q = quantize_model(&m, &spec448()).unwrap();
        assert_eq!(q.layers.len(), 1);
        assert_eq!(q.layers[0].shift, 0);
        let s = q.output_scale.unwrap();
        assert!(s > 0.0);
        assert_eq!(s, q.layers[0].sums[0].scale);
    }
}
