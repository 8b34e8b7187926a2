//! Bit-exact integer reference evaluation of quantized models.
//!
//! This is the behavioral contract for generated circuits: synthesis is
//! verified against [`golden_infer`] sample by sample. Everything here is
//! plain integer arithmetic — no floating point touches the datapath.

use crate::error::{Error, Result};
use crate::model::{Activation, ModelKind, QuantizedModel, QuantizedSum};
use crate::util::round_half_away;

/// Final verdict of one inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Classifier output: a class index.
    Class(u32),
    /// Regressor output: the raw integer sum (divide by `output_scale` to
    /// recover the real-valued prediction).
    Raw(i64),
}

/// Raw integer outputs plus the decision derived from them. For MLPs `raw`
/// holds the output-layer accumulators, for SVM classifiers the per-class
/// vote counts, for regressors the single final sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    pub raw: Vec<i64>,
    pub decision: Decision,
}

/// Index of the maximum, ties broken toward the lowest index.
pub fn argmax_i64(xs: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Integer weighted sum: sum(w_i * x_i) + intercept.
pub fn eval_sum(sum: &QuantizedSum, x: &[i64]) -> i64 {
    debug_assert_eq!(sum.weights.len(), x.len());
    sum.weights
        .iter()
        .zip(x)
        .map(|(&w, &v)| w * v)
        .sum::<i64>()
        + sum.intercept
}

fn check_inputs(q: &QuantizedModel, x: &[u32]) -> Result<()> {
    if x.len() != q.n_features {
        return Err(Error::Dimension(format!(
            "input has {} features, model expects {}",
            x.len(),
            q.n_features
        )));
    }
    let umax = q.spec.input_max();
    if let Some(v) = x.iter().find(|&&v| v as i64 > umax) {
        return Err(Error::Dimension(format!(
            "input value {v} does not fit {} bits",
            q.spec.input_bits
        )));
    }
    Ok(())
}

pub fn golden_infer(q: &QuantizedModel, x: &[u32]) -> Result<Inference> {
    check_inputs(q, x)?;
    let hmax = q.spec.hidden_max();
    match q.kind {
        ModelKind::MlpClassifier | ModelKind::MlpRegressor => {
            let mut vals: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            for layer in &q.layers {
                vals = layer
                    .sums
                    .iter()
                    .map(|s| {
                        let acc = eval_sum(s, &vals);
                        match layer.activation {
                            Activation::Relu => (acc.max(0) >> layer.shift).min(hmax),
                            Activation::Linear => acc,
                        }
                    })
                    .collect();
            }
            let decision = if q.kind == ModelKind::MlpClassifier {
                Decision::Class(argmax_i64(&vals) as u32)
            } else {
                Decision::Raw(vals[0])
            };
            Ok(Inference {
                raw: vals,
                decision,
            })
        }
        ModelKind::SvmClassifier => {
            let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            let mut votes = vec![0i64; q.n_classes as usize];
            for c in &q.classifiers {
                let (i, j) = c.class_pair.expect("validated one-vs-one pair");
                let s = eval_sum(&c.sum, &xi);
                if s >= 0 {
                    votes[i as usize] += 1;
                } else {
                    votes[j as usize] += 1;
                }
            }
            let decision = Decision::Class(argmax_i64(&votes) as u32);
            Ok(Inference {
                raw: votes,
                decision,
            })
        }
        ModelKind::SvmRegressor => {
            let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            let s = eval_sum(&q.classifiers[0].sum, &xi);
            Ok(Inference {
                raw: vec![s],
                decision: Decision::Raw(s),
            })
        }
    }
}

/// Fraction of samples classified (or, for regressors, predicted after
/// dequantization and rounding) exactly as labeled.
pub fn eval_accuracy(q: &QuantizedModel, inputs: &[Vec<u32>], labels: &[f64]) -> Result<f64> {
    if inputs.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} inputs vs {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let mut hits = 0usize;
    for (x, &label) in inputs.iter().zip(labels) {
        let inf = golden_infer(q, x)?;
        let predicted = match inf.decision {
            Decision::Class(c) => c as f64,
            Decision::Raw(raw) => {
                let scale = q.output_scale.expect("regressor carries output_scale");
                round_half_away(raw as f64 / scale) as f64
            }
        };
        if predicted == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / inputs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::quantize::quantize_model;
    use crate::model::{
        FixedPointSpec, QuantizedClassifier, QuantizedLayer, RealClassifier, RealLayer, RealModel,
    };

    fn intercept_only_mlp(intercepts: Vec<f64>) -> QuantizedModel {
        let n = intercepts.len();
        let m = RealModel {
            kind: ModelKind::MlpClassifier,
            n_features: 2,
            n_classes: n as u32,
            layers: vec![RealLayer {
                weights: vec![vec![0.0, 0.0]; n],
                intercepts,
                activation: Activation::Linear,
            }],
            classifiers: vec![],
        };
        quantize_model(&m, &FixedPointSpec::default()).unwrap()
    }

    #[test]
    fn intercept_only_argmax_picks_largest_intercept() {
        let q = intercept_only_mlp(vec![3.0, 1.0]);
        for a in 0..16u32 {
            for b in 0..16u32 {
                let inf = golden_infer(&q, &[a, b]).unwrap();
                assert_eq!(inf.decision, Decision::Class(0));
            }
        }
    }

    #[test]
    fn equal_outputs_tie_to_class_zero() {
        let q = intercept_only_mlp(vec![2.0, 2.0, 2.0]);
        let inf = golden_infer(&q, &[5, 9]).unwrap();
        assert_eq!(inf.raw[0], inf.raw[1]);
        assert_eq!(inf.decision, Decision::Class(0));
    }

    #[test]
    fn argmax_ties_break_low_and_shift_invariance() {
        assert_eq!(argmax_i64(&[1, 3, 3]), 1);
        assert_eq!(argmax_i64(&[-5]), 0);
        let mut rng = crate::util::SplitMix64::new(11);
        for _ in 0..200 {
            let xs: Vec<i64> = (0..6).map(|_| (rng.next_u64() % 1000) as i64 - 500).collect();
            let base = argmax_i64(&xs);
            for delta in [-7i64, 1, 100] {
                let shifted: Vec<i64> = xs.iter().map(|v| v + delta).collect();
                assert_eq!(argmax_i64(&shifted), base);
            }
        }
    }

    fn vote_fixture(signs: [f64; 3]) -> QuantizedModel {
        // three intercept-only one-vs-one functions over 3 classes
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let m = RealModel {
            kind: ModelKind::SvmClassifier,
            n_features: 2,
            n_classes: 3,
            layers: vec![],
            classifiers: pairs
                .iter()
                .zip(signs)
                .map(|(&(i, j), s)| RealClassifier {
                    weights: vec![0.0, 0.0],
                    intercept: s,
                    class_pair: Some((i, j)),
                })
                .collect(),
        };
        quantize_model(&m, &FixedPointSpec::default()).unwrap()
    }

    #[test]
    fn svm_voting_counts_and_ties() {
        // all non-negative: every pair votes its low class -> votes [2,1,0]
        let q = vote_fixture([1.0, 1.0, 1.0]);
        let inf = golden_infer(&q, &[0, 0]).unwrap();
        assert_eq!(inf.raw, vec![2, 1, 0]);
        assert_eq!(inf.decision, Decision::Class(0));

        // (0,1) negative: votes [1,2,0] -> class 1
        let q = vote_fixture([-1.0, 1.0, 1.0]);
        let inf = golden_infer(&q, &[0, 0]).unwrap();
        assert_eq!(inf.raw, vec![1, 2, 0]);
        assert_eq!(inf.decision, Decision::Class(1));

        // zero sum votes the low class (>= 0 rule); one vote each -> class 0
        let q = vote_fixture([0.0, -1.0, 1.0]);
        let inf = golden_infer(&q, &[0, 0]).unwrap();
        assert_eq!(inf.raw, vec![1, 1, 1]);
        assert_eq!(inf.decision, Decision::Class(0));
    }

    #[test]
    fn relu_shift_saturation_behaves() {
        // hand-built quantized model: one hidden neuron, weight 64, shift 2,
        // h=4 -> saturation at 15
        let q = QuantizedModel {
            kind: ModelKind::MlpRegressor,
            n_features: 1,
            n_classes: 0,
            spec: FixedPointSpec {
                input_bits: 4,
                coeff_bits: 8,
                hidden_bits: 4,
            },
            layers: vec![
                QuantizedLayer {
                    sums: vec![QuantizedSum {
                        weights: vec![64],
                        intercept: -128,
                        scale: 64.0,
                    }],
                    activation: Activation::Relu,
                    in_bits: 4,
                    acc_width: 13,
                    shift: 2,
                },
                QuantizedLayer {
                    sums: vec![QuantizedSum {
                        weights: vec![1],
                        intercept: 0,
                        scale: 1.0,
                    }],
                    activation: Activation::Linear,
                    in_bits: 4,
                    acc_width: 13,
                    shift: 0,
                },
            ],
            classifiers: vec![],
            output_scale: Some(1.0),
            approx: None,
        };
        // x=1: acc=-64, relu -> 0
        assert_eq!(golden_infer(&q, &[1]).unwrap().raw, vec![0]);
        // x=3: acc=64, >>2 = 16 saturates to 15
        assert_eq!(golden_infer(&q, &[3]).unwrap().raw, vec![15]);
        // x=2: acc=0 -> 0
        assert_eq!(golden_infer(&q, &[2]).unwrap().raw, vec![0]);
    }

    #[test]
    fn arity_and_range_are_checked() {
        let q = intercept_only_mlp(vec![1.0, 0.0]);
        assert!(golden_infer(&q, &[1]).is_err());
        assert!(golden_infer(&q, &[1, 16]).is_err());
        assert!(golden_infer(&q, &[1, 15]).is_ok());
    }

    #[test]
    fn regressor_accuracy_rounds_dequantized_prediction() {
        let q = QuantizedModel {
            kind: ModelKind::SvmRegressor,
            n_features: 1,
            n_classes: 0,
            spec: FixedPointSpec::default(),
            layers: vec![],
            classifiers: vec![QuantizedClassifier {
                sum: QuantizedSum {
                    weights: vec![10],
                    intercept: 0,
                    scale: 30.0,
                },
                class_pair: None,
            }],
            output_scale: Some(30.0),
            approx: None,
        };
        // x=3 -> raw 30 -> 1.0; x=5 -> raw 50/30 = 1.67 -> 2
        let acc = eval_accuracy(&q, &[vec![3], vec![5]], &[1.0, 2.0]).unwrap();
        assert_eq!(acc, 1.0);
        let acc = eval_accuracy(&q, &[vec![3], vec![5]], &[1.0, 1.0]).unwrap();
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn matches_wide_integer_reevaluation() {
        // same arithmetic re-done in i128 must agree exactly
        let m = crate::model::tests::tiny_mlp_classifier();
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        let hmax = q.spec.hidden_max() as i128;
        for a in 0..16u32 {
            for b in 0..16u32 {
                let inf = golden_infer(&q, &[a, b]).unwrap();
                let mut vals: Vec<i128> = vec![a as i128, b as i128];
                for layer in &q.layers {
                    vals = layer
                        .sums
                        .iter()
                        .map(|s| {
                            let acc = s
                                .weights
                                .iter()
                                .zip(&vals)
                                .map(|(&w, &v)| w as i128 * v)
                                .sum::<i128>()
                                + s.intercept as i128;
                            match layer.activation {
                                Activation::Relu => (acc.max(0) >> layer.shift).min(hmax),
                                Activation::Linear => acc,
                            }
                        })
                        .collect();
                }
                let wide: Vec<i64> = vals.iter().map(|&v| v as i64).collect();
                assert_eq!(inf.raw, wide);
            }
        }
    }
}
