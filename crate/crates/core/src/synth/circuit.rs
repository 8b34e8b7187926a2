//! Full model datapaths: quantized model in, optimized netlist out.
//!
//! The generated circuit is behaviorally identical to
//! [`crate::model::golden::golden_infer`] on every input — that equivalence
//! is the verification contract for everything downstream.
//!
//! Structure per model kind:
//! - MLP: one weighted-sum block per neuron; hidden activations pass through
//!   ReLU (AND-mask against the inverted sign bit), an arithmetic right shift
//!   by the layer's requantization shift, and saturation into `h` bits when
//!   the layer's worst-case positive accumulator can overflow the slice.
//! - MLP classifier: output accumulators feed an argmax tree; the circuit
//!   output is the class index. The accumulator words are recorded as
//!   tracked buses `o0..o{k-1}` (the argmax inputs).
//! - SVM classifier: one weighted sum per one-vs-one decision function; each
//!   sign bit votes for one class of its pair; per-class popcount trees
//!   produce the vote counts (tracked as `o0..o{k-1}`), which feed argmax.
//! - Regressors: the single accumulator is the primary output `out`, also
//!   tracked as `o0` so pruning can reason about its bit significance.

use crate::error::{Error, Result};
use crate::model::{Activation, ModelKind, QuantizedLayer, QuantizedModel, QuantizedSum};
use crate::netlist::{optimize, Builder, CellLibrary, NetId, Netlist, CONST0};
use crate::synth::arith::{extend, inv, ripple_add};
use crate::synth::wsum::{weighted_sum_into, WeightedSumSpec};
use crate::util::ceil_log2;

fn sum_spec(sum: &QuantizedSum, in_bits: u32, coeff_bits: u32) -> WeightedSumSpec {
    WeightedSumSpec {
        weights: sum.weights.clone(),
        intercept: sum.intercept,
        in_bits,
        coeff_bits,
    }
}

/// OR-reduce; empty input is constant 0.
fn or_tree(b: &mut Builder, bits: &[NetId]) -> NetId {
    match bits {
        [] => CONST0,
        [x] => *x,
        _ => {
            let mid = bits.len() / 2;
            let l = or_tree(b, &bits[..mid]);
            let r = or_tree(b, &bits[mid..]);
            b.add_gate("OR2", &[l, r])
        }
    }
}

/// ReLU, right shift, and saturation into `h` bits.
///
/// The shift is a wiring slice `[shift, shift+h)` of the masked accumulator.
/// Saturation logic (OR against the overflow bits above the slice) is only
/// emitted when the sum's largest attainable positive value overflows the
/// slice — never the case straight out of quantization, but possible after
/// coefficient approximation, which may grow weight magnitudes.
fn relu_requant(
    b: &mut Builder,
    acc: &[NetId],
    layer: &QuantizedLayer,
    sum: &QuantizedSum,
    h: u32,
) -> Vec<NetId> {
    let f = acc.len();
    let sign = acc[f - 1];
    let keep = inv(b, sign);
    let relu: Vec<NetId> = acc[..f - 1]
        .iter()
        .map(|&bit| b.add_gate("AND2", &[bit, keep]))
        .collect();
    let t = layer.shift as usize;
    let h = h as usize;
    let mut y: Vec<NetId> = (0..h)
        .map(|i| relu.get(t + i).copied().unwrap_or(CONST0))
        .collect();

    let in_max = (1i64 << layer.in_bits) - 1;
    let pos_max = sum
        .weights
        .iter()
        .map(|&w| w.max(0) * in_max)
        .sum::<i64>()
        + sum.intercept;
    let hmax = (1i64 << h) - 1;
    if (pos_max.max(0) >> t) > hmax {
        let top = relu[(t + h).min(relu.len())..].to_vec();
        let ov = or_tree(b, &top);
        y = y
            .into_iter()
            .map(|bit| b.add_gate("OR2", &[bit, ov]))
            .collect();
    }
    y
}

/// Balanced unsigned popcount of 1-bit nets, widened to `out_width`.
fn popcount(b: &mut Builder, bits: &[NetId], out_width: usize) -> Vec<NetId> {
    if bits.is_empty() {
        return vec![CONST0; out_width];
    }
    let mut terms: Vec<Vec<NetId>> = bits.iter().map(|&x| vec![x]).collect();
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut pairs = terms.chunks_exact(2);
        for pair in pairs.by_ref() {
            let w = pair[0].len().max(pair[1].len()) + 1;
            let a = extend(&pair[0], w, false);
            let x = extend(&pair[1], w, false);
            next.push(ripple_add(b, &a, &x, CONST0));
        }
        next.extend(pairs.remainder().iter().cloned());
        terms = next;
    }
    let count = terms.pop().expect("non-empty");
    assert!(count.len() <= out_width, "vote count wider than its bus");
    extend(&count, out_width, false)
}

pub fn gen_model_circuit(q: &QuantizedModel, lib: &CellLibrary) -> Result<Netlist> {
    q.validate()?;
    let spec = q.spec;
    let mut b = Builder::new();
    let xs: Vec<Vec<NetId>> = (0..q.n_features)
        .map(|i| b.add_input_bus(&format!("x{i}"), spec.input_bits as usize))
        .collect();

    match q.kind {
        ModelKind::MlpClassifier | ModelKind::MlpRegressor => {
            let mut bufs = xs;
            let mut accs: Vec<Vec<NetId>> = Vec::new();
            for layer in &q.layers {
                let refs: Vec<&[NetId]> = bufs.iter().map(|v| v.as_slice()).collect();
                accs = layer
                    .sums
                    .iter()
                    .map(|s| weighted_sum_into(&mut b, &refs, &sum_spec(s, layer.in_bits, spec.coeff_bits)))
                    .collect();
                if layer.activation == Activation::Relu {
                    bufs = accs
                        .iter()
                        .zip(&layer.sums)
                        .map(|(acc, s)| relu_requant(&mut b, acc, layer, s, spec.hidden_bits))
                        .collect();
                }
            }
            if q.kind == ModelKind::MlpClassifier {
                for (m, acc) in accs.iter().enumerate() {
                    b.track_bus(&format!("o{m}"), acc.clone());
                }
                let idx = crate::synth::argmax::argmax_into(&mut b, &accs, true);
                b.set_output("class", idx, false);
            } else {
                b.track_bus("o0", accs[0].clone());
                b.set_output("out", accs[0].clone(), true);
            }
        }
        ModelKind::SvmClassifier => {
            let k = q.n_classes as usize;
            let refs: Vec<&[NetId]> = xs.iter().map(|v| v.as_slice()).collect();
            let mut class_bits: Vec<Vec<NetId>> = vec![Vec::new(); k];
            for c in &q.classifiers {
                let acc =
                    weighted_sum_into(&mut b, &refs, &sum_spec(&c.sum, spec.input_bits, spec.coeff_bits));
                let sign = *acc.last().expect("non-empty accumulator");
                let (i, j) = c
                    .class_pair
                    .ok_or_else(|| Error::InvalidModel("one-vs-one pair missing".into()))?;
                // sum >= 0 (sign clear) votes class i, otherwise class j
                let vote_i = inv(&mut b, sign);
                class_bits[i as usize].push(vote_i);
                class_bits[j as usize].push(sign);
            }
            let vote_width = (ceil_log2(k) + 1) as usize;
            let votes: Vec<Vec<NetId>> = class_bits
                .iter()
                .map(|bits| popcount(&mut b, bits, vote_width))
                .collect();
            for (m, v) in votes.iter().enumerate() {
                b.track_bus(&format!("o{m}"), v.clone());
            }
            let idx = crate::synth::argmax::argmax_into(&mut b, &votes, false);
            b.set_output("class", idx, false);
        }
        ModelKind::SvmRegressor => {
            let refs: Vec<&[NetId]> = xs.iter().map(|v| v.as_slice()).collect();
            let acc = weighted_sum_into(
                &mut b,
                &refs,
                &sum_spec(&q.classifiers[0].sum, spec.input_bits, spec.coeff_bits),
            );
            b.track_bus("o0", acc.clone());
            b.set_output("out", acc, true);
        }
    }
    optimize(&b.finish(), lib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::golden::{golden_infer, Decision};
    use crate::model::quantize::quantize_model;
    use crate::model::{FixedPointSpec, RealClassifier, RealLayer, RealModel};
    use crate::sim::Simulator;
    use crate::util::SplitMix64;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    /// Simulate the circuit on one input and return (decision, tracked raw words).
    fn run(n: &Netlist, q: &QuantizedModel, x: &[u32]) -> (i64, Vec<i64>) {
        let l = lib();
        let sim = Simulator::new(n, &l).unwrap();
        let mut values = Vec::new();
        let inputs: Vec<u64> = x.iter().map(|&v| v as u64).collect();
        sim.run(&inputs, &mut values).unwrap();
        let decision = sim.decode(&values, 0);
        // vote counts are unsigned; accumulator words are signed
        let signed = q.kind != ModelKind::SvmClassifier;
        let raw = (0..n.tracked.len())
            .map(|i| sim.decode_tracked(&values, i, signed))
            .collect();
        (decision, raw)
    }

    fn assert_matches_golden(q: &QuantizedModel, inputs: &[Vec<u32>]) {
        let n = gen_model_circuit(q, &lib()).unwrap();
        for x in inputs {
            let inf = golden_infer(q, x).unwrap();
            let (dec, raw) = run(&n, q, x);
            assert_eq!(raw, inf.raw, "raw words differ on {x:?}");
            match inf.decision {
                Decision::Class(c) => assert_eq!(dec, c as i64, "class differs on {x:?}"),
                Decision::Raw(r) => assert_eq!(dec, r, "raw output differs on {x:?}"),
            }
        }
    }

    fn random_inputs(n_features: usize, umax: u64, count: usize, seed: u64) -> Vec<Vec<u32>> {
        let mut rng = SplitMix64::new(seed);
        (0..count)
            .map(|_| {
                (0..n_features)
                    .map(|_| (rng.next_u64() % (umax + 1)) as u32)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn mlp_classifier_matches_golden_exhaustively() {
        let m = crate::model::tests::tiny_mlp_classifier();
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        let all: Vec<Vec<u32>> = (0..16)
            .flat_map(|a| (0..16).map(move |b| vec![a, b]))
            .collect();
        assert_matches_golden(&q, &all);
    }

    #[test]
    fn svm_classifier_matches_golden_exhaustively() {
        let m = crate::model::tests::tiny_svm_classifier();
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        let all: Vec<Vec<u32>> = (0..16)
            .flat_map(|a| (0..16).map(move |b| vec![a, b]))
            .collect();
        assert_matches_golden(&q, &all);
    }

    #[test]
    fn two_class_svm_degenerates_to_sign_routing() {
        let m = RealModel {
            kind: ModelKind::SvmClassifier,
            n_features: 2,
            n_classes: 2,
            layers: vec![],
            classifiers: vec![RealClassifier {
                weights: vec![0.6, -0.8],
                intercept: 0.05,
                class_pair: Some((0, 1)),
            }],
        };
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        let all: Vec<Vec<u32>> = (0..16)
            .flat_map(|a| (0..16).map(move |b| vec![a, b]))
            .collect();
        assert_matches_golden(&q, &all);
    }

    #[test]
    fn all_zero_hidden_weights_give_constant_decision() {
        let m = RealModel {
            kind: ModelKind::MlpClassifier,
            n_features: 2,
            n_classes: 3,
            layers: vec![
                RealLayer {
                    weights: vec![vec![0.0, 0.0]; 2],
                    intercepts: vec![0.5, 0.25],
                    activation: Activation::Relu,
                },
                RealLayer {
                    weights: vec![vec![0.3, -0.2], vec![0.8, 0.1], vec![-0.4, 0.6]],
                    intercepts: vec![0.0, 0.1, -0.1],
                    activation: Activation::Linear,
                },
            ],
            classifiers: vec![],
        };
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        let n = gen_model_circuit(&q, &lib()).unwrap();
        let want = match golden_infer(&q, &[0, 0]).unwrap().decision {
            Decision::Class(c) => c as i64,
            _ => unreachable!(),
        };
        let all: Vec<Vec<u32>> = (0..16)
            .flat_map(|a| (0..16).map(move |b| vec![a, b]))
            .collect();
        for x in &all {
            let (dec, _) = run(&n, &q, x);
            assert_eq!(dec, want, "decision must not depend on the input");
        }
    }

    #[test]
    fn mlp_regressor_matches_golden() {
        let m = RealModel {
            kind: ModelKind::MlpRegressor,
            n_features: 3,
            n_classes: 0,
            layers: vec![
                RealLayer {
                    weights: vec![vec![0.5, -0.3, 0.2], vec![-0.1, 0.4, 0.9]],
                    intercepts: vec![0.1, -0.2],
                    activation: Activation::Relu,
                },
                RealLayer {
                    weights: vec![vec![1.2, -0.7]],
                    intercepts: vec![0.3],
                    activation: Activation::Linear,
                },
            ],
            classifiers: vec![],
        };
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        assert_matches_golden(&q, &random_inputs(3, 15, 200, 5));
    }

    #[test]
    fn svm_regressor_matches_golden() {
        let m = RealModel {
            kind: ModelKind::SvmRegressor,
            n_features: 4,
            n_classes: 0,
            layers: vec![],
            classifiers: vec![RealClassifier {
                weights: vec![0.25, -0.5, 0.75, -1.0],
                intercept: 0.6,
                class_pair: None,
            }],
        };
        let q = quantize_model(&m, &FixedPointSpec::default()).unwrap();
        assert_matches_golden(&q, &random_inputs(4, 15, 200, 6));
    }

    #[test]
    fn saturation_clamps_overflowing_hidden_values() {
        // weight 7 at shift 2 can reach 7*15 >> 2 = 26, past the 4-bit cap of
        // 15 — the situation coefficient approximation can create. Without
        // the saturation OR-tree the circuit would emit 26 mod 16 = 10.
        use crate::model::{QuantizedLayer, QuantizedSum};
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
                        weights: vec![7],
                        intercept: 0,
                        scale: 1.0,
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
        let all: Vec<Vec<u32>> = (0..16).map(|a| vec![a]).collect();
        // golden saturates (x=15 -> min(26, 15) = 15); the circuit must too
        assert_eq!(
            golden_infer(&q, &[15]).unwrap().raw,
            vec![15],
            "sanity: golden saturates"
        );
        assert_matches_golden(&q, &all);
    }
}
