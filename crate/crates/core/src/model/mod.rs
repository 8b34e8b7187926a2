//! Trained-model representations.
//!
//! [`RealModel`] is the floating-point model as exported by a training
//! framework (MLPs as dense layers, linear SVMs as one-vs-one or single
//! decision functions). [`QuantizedModel`] is its fixed-point counterpart:
//! integer weights and intercepts plus the scales needed to interpret raw
//! circuit outputs. Quantization lives in [`quantize`], the bit-exact integer
//! reference evaluator in [`golden`].

pub mod dataset;
pub mod golden;
pub mod quantize;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point bit widths: `u` input bits, `c` coefficient bits, `h` hidden
/// activation bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointSpec {
    pub input_bits: u32,
    pub coeff_bits: u32,
    pub hidden_bits: u32,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        FixedPointSpec {
            input_bits: 4,
            coeff_bits: 8,
            hidden_bits: 8,
        }
    }
}

impl FixedPointSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = (1..=8).contains(&self.input_bits)
            && (2..=16).contains(&self.coeff_bits)
            && (1..=16).contains(&self.hidden_bits);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "bit widths out of range: u={} (1..=8), c={} (2..=16), h={} (1..=16)",
                self.input_bits, self.coeff_bits, self.hidden_bits
            )))
        }
    }

    /// Largest representable coefficient magnitude, 2^(c-1) - 1.
    pub fn coeff_max(&self) -> i64 {
        (1i64 << (self.coeff_bits - 1)) - 1
    }

    /// Largest quantized input value, 2^u - 1.
    pub fn input_max(&self) -> i64 {
        (1i64 << self.input_bits) - 1
    }

    /// Largest hidden activation value, 2^h - 1.
    pub fn hidden_max(&self) -> i64 {
        (1i64 << self.hidden_bits) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "mlp-classifier")]
    MlpClassifier,
    #[serde(rename = "mlp-regressor")]
    MlpRegressor,
    #[serde(rename = "svm-classifier")]
    SvmClassifier,
    #[serde(rename = "svm-regressor")]
    SvmRegressor,
}

impl ModelKind {
    pub fn is_classifier(&self) -> bool {
        matches!(self, ModelKind::MlpClassifier | ModelKind::SvmClassifier)
    }

    pub fn is_mlp(&self) -> bool {
        matches!(self, ModelKind::MlpClassifier | ModelKind::MlpRegressor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "linear")]
    Linear,
}

/// One dense layer: `weights[j][i]` multiplies input `i` of neuron `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealLayer {
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub activation: Activation,
}

/// One linear decision function. For one-vs-one classifiers `class_pair`
/// is `(i, j)` with `i < j`; a non-negative decision votes for class `i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealClassifier {
    pub weights: Vec<f64>,
    pub intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_pair: Option<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealModel {
    pub kind: ModelKind,
    pub n_features: usize,
    pub n_classes: u32,
    /// MLP layers, in forward order. Empty for SVMs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<RealLayer>,
    /// SVM decision functions. Empty for MLPs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classifiers: Vec<RealClassifier>,
}

fn all_finite<'a>(vals: impl IntoIterator<Item = &'a f64>) -> bool {
    vals.into_iter().all(|v| v.is_finite())
}

impl RealModel {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidModel(msg));
        if self.n_features == 0 {
            return fail("model has no input features".into());
        }
        match self.kind {
            ModelKind::MlpClassifier | ModelKind::MlpRegressor => {
                if !self.classifiers.is_empty() {
                    return fail("MLP model must not carry SVM decision functions".into());
                }
                if self.layers.is_empty() || self.layers.len() > 2 {
                    return fail(format!(
                        "MLP must have 1 or 2 layers, found {}",
                        self.layers.len()
                    ));
                }
                let mut in_width = self.n_features;
                for (li, layer) in self.layers.iter().enumerate() {
                    if layer.weights.is_empty() {
                        return fail(format!("layer {li} has no neurons"));
                    }
                    if layer.weights.len() != layer.intercepts.len() {
                        return fail(format!(
                            "layer {li}: {} weight rows but {} intercepts",
                            layer.weights.len(),
                            layer.intercepts.len()
                        ));
                    }
                    for (j, row) in layer.weights.iter().enumerate() {
                        if row.len() != in_width {
                            return fail(format!(
                                "layer {li} neuron {j}: {} weights, expected {in_width}",
                                row.len()
                            ));
                        }
                        if !all_finite(row) {
                            return fail(format!("layer {li} neuron {j}: non-finite weight"));
                        }
                    }
                    if !all_finite(&layer.intercepts) {
                        return fail(format!("layer {li}: non-finite intercept"));
                    }
                    let last = li + 1 == self.layers.len();
                    match (last, layer.activation) {
                        (true, Activation::Relu) => {
                            return fail("output layer must be linear".into())
                        }
                        (false, Activation::Linear) => {
                            return fail("hidden layer must use relu".into())
                        }
                        _ => {}
                    }
                    in_width = layer.weights.len();
                }
                let outputs = self.layers.last().unwrap().weights.len();
                match self.kind {
                    ModelKind::MlpClassifier => {
                        if self.n_classes < 2 {
                            return fail("classifier needs at least 2 classes".into());
                        }
                        if outputs != self.n_classes as usize {
                            return fail(format!(
                                "output layer has {outputs} neurons for {} classes",
                                self.n_classes
                            ));
                        }
                    }
                    _ => {
                        if outputs != 1 {
                            return fail(format!("regressor must have 1 output, found {outputs}"));
                        }
                    }
                }
            }
            ModelKind::SvmClassifier | ModelKind::SvmRegressor => {
                if !self.layers.is_empty() {
                    return fail("SVM model must not carry MLP layers".into());
                }
                for (ci, c) in self.classifiers.iter().enumerate() {
                    if c.weights.len() != self.n_features {
                        return fail(format!(
                            "decision function {ci}: {} weights, expected {}",
                            c.weights.len(),
                            self.n_features
                        ));
                    }
                    if !all_finite(&c.weights) || !c.intercept.is_finite() {
                        return fail(format!("decision function {ci}: non-finite coefficient"));
                    }
                }
                if self.kind == ModelKind::SvmRegressor {
                    if self.classifiers.len() != 1 {
                        return fail(format!(
                            "SVM regressor needs exactly 1 decision function, found {}",
                            self.classifiers.len()
                        ));
                    }
                    if self.classifiers[0].class_pair.is_some() {
                        return fail("SVM regressor must not have a class pair".into());
                    }
                } else {
                    let k = self.n_classes;
                    if k < 2 {
                        return fail("classifier needs at least 2 classes".into());
                    }
                    let want = (k as usize) * (k as usize - 1) / 2;
                    if self.classifiers.len() != want {
                        return fail(format!(
                            "one-vs-one SVM with {k} classes needs {want} decision functions, found {}",
                            self.classifiers.len()
                        ));
                    }
                    let mut seen = std::collections::BTreeSet::new();
                    for c in &self.classifiers {
                        match c.class_pair {
                            Some((i, j)) if i < j && j < k => {
                                if !seen.insert((i, j)) {
                                    return fail(format!("duplicate class pair ({i},{j})"));
                                }
                            }
                            other => {
                                return fail(format!(
                                    "bad class pair {other:?} for {k} classes"
                                ))
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// One fixed-point weighted sum: integer weights, an intercept already
/// expressed at accumulator scale, and the scale mapping real inputs of this
/// sum into the integer domain (`int_value ~= real_value * scale`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedSum {
    pub weights: Vec<i64>,
    pub intercept: i64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedLayer {
    pub sums: Vec<QuantizedSum>,
    pub activation: Activation,
    /// Bits per input of this layer (u for the first layer, h after).
    pub in_bits: u32,
    /// Signed accumulator width for every sum in the layer.
    pub acc_width: u32,
    /// Right shift applied after ReLU to fit activations into `hidden_bits`
    /// (0 for the output layer).
    pub shift: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedClassifier {
    pub sum: QuantizedSum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_pair: Option<(u32, u32)>,
}

/// Record of one coefficient-replacement run, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxInfo {
    /// Maximum per-coefficient perturbation that was allowed.
    pub e: i64,
    /// Signed sum of applied perturbations per weighted sum, keyed by sum name.
    pub error_sums: Vec<(String, i64)>,
    /// Coefficients actually changed.
    pub changed: usize,
    /// Estimated multiplier area before and after replacement.
    pub mult_area_before: f64,
    pub mult_area_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub kind: ModelKind,
    pub n_features: usize,
    pub n_classes: u32,
    pub spec: FixedPointSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<QuantizedLayer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classifiers: Vec<QuantizedClassifier>,
    /// For regressors: raw integer output / output_scale ~= real prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxInfo>,
}

impl QuantizedModel {
    /// All weighted sums with stable names, for reporting and approximation:
    /// `l{layer}.s{j}` for MLP sums, `d{i}` for SVM decision functions.
    pub fn sum_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            for j in 0..layer.sums.len() {
                names.push(format!("l{li}.s{j}"));
            }
        }
        for ci in 0..self.classifiers.len() {
            names.push(format!("d{ci}"));
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let fail = |msg: String| Err(Error::InvalidModel(msg));
        let cmax = self.spec.coeff_max();
        let cmin = -(1i64 << (self.spec.coeff_bits - 1));
        let check_sum = |name: &str, s: &QuantizedSum, width: usize, acc_width: u32| {
            if s.weights.len() != width {
                return Err(Error::InvalidModel(format!(
                    "{name}: {} weights, expected {width}",
                    s.weights.len()
                )));
            }
            if let Some(w) = s.weights.iter().find(|&&w| w < cmin || w > cmax) {
                return Err(Error::InvalidModel(format!(
                    "{name}: weight {w} outside [{cmin}, {cmax}]"
                )));
            }
            let imax = (1i64 << (acc_width - 1)) - 1;
            if s.intercept.abs() > imax {
                return Err(Error::InvalidModel(format!(
                    "{name}: intercept {} exceeds accumulator range +/-{imax}",
                    s.intercept
                )));
            }
            if !(s.scale.is_finite() && s.scale > 0.0) {
                return Err(Error::InvalidModel(format!("{name}: bad scale {}", s.scale)));
            }
            Ok(())
        };
        if self.kind.is_mlp() {
            if self.layers.is_empty() || !self.classifiers.is_empty() {
                return fail("quantized MLP must have layers and no decision functions".into());
            }
            let mut in_width = self.n_features;
            for (li, layer) in self.layers.iter().enumerate() {
                for (j, s) in layer.sums.iter().enumerate() {
                    check_sum(&format!("l{li}.s{j}"), s, in_width, layer.acc_width)?;
                }
                in_width = layer.sums.len();
            }
        } else {
            if !self.layers.is_empty() || self.classifiers.is_empty() {
                return fail("quantized SVM must have decision functions and no layers".into());
            }
            for (ci, c) in self.classifiers.iter().enumerate() {
                check_sum(
                    &format!("d{ci}"),
                    &c.sum,
                    self.n_features,
                    self.svm_acc_width(),
                )?;
            }
        }
        if self.kind.is_classifier() == self.output_scale.is_some() {
            return fail("output_scale must be present exactly for regressors".into());
        }
        Ok(())
    }

    /// Accumulator width shared by all SVM decision functions.
    pub fn svm_acc_width(&self) -> u32 {
        quantize::acc_width(
            self.n_features,
            self.spec.input_bits,
            self.spec.coeff_bits,
        )
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedReal {
    format_version: u32,
    #[serde(rename = "type")]
    kind_tag: String,
    #[serde(flatten)]
    model: RealModel,
}

#[derive(Serialize, Deserialize)]
struct VersionedQuantized {
    format_version: u32,
    #[serde(rename = "type")]
    kind_tag: String,
    #[serde(flatten)]
    model: QuantizedModel,
}

#[derive(Deserialize)]
struct Envelope {
    format_version: u32,
    #[serde(rename = "type")]
    kind_tag: String,
}

/// Check version and document-type tag before attempting the full parse so
/// that a mismatched file produces a readable error.
fn check_envelope(text: &str, path: &str, want_tag: &str) -> Result<()> {
    let schema_err = |msg: String| Error::Schema {
        path: path.to_string(),
        msg,
    };
    let env: Envelope = serde_json::from_str(text).map_err(|e| schema_err(e.to_string()))?;
    if env.format_version != MODEL_FORMAT_VERSION {
        return Err(schema_err(format!(
            "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
            env.format_version
        )));
    }
    if env.kind_tag != want_tag {
        return Err(schema_err(format!(
            "document type is `{}`, expected `{want_tag}`",
            env.kind_tag
        )));
    }
    Ok(())
}

pub fn real_model_from_json(text: &str, path: &str) -> Result<RealModel> {
    check_envelope(text, path, "real-model")?;
    let v: VersionedReal = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: path.to_string(),
        msg: e.to_string(),
    })?;
    v.model.validate()?;
    Ok(v.model)
}

pub fn load_real_model(path: impl AsRef<Path>) -> Result<RealModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    real_model_from_json(&text, &path.display().to_string())
}

pub fn save_real_model(model: &RealModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let v = VersionedReal {
        format_version: MODEL_FORMAT_VERSION,
        kind_tag: "real-model".into(),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&v).expect("model serialization cannot fail");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn quantized_model_from_json(text: &str, path: &str) -> Result<QuantizedModel> {
    check_envelope(text, path, "quantized-model")?;
    let v: VersionedQuantized = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: path.to_string(),
        msg: e.to_string(),
    })?;
    v.model.validate()?;
    Ok(v.model)
}

pub fn load_quantized_model(path: impl AsRef<Path>) -> Result<QuantizedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    quantized_model_from_json(&text, &path.display().to_string())
}

pub fn save_quantized_model(model: &QuantizedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let v = VersionedQuantized {
        format_version: MODEL_FORMAT_VERSION,
        kind_tag: "quantized-model".into(),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&v).expect("model serialization cannot fail");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny_mlp_classifier() -> RealModel {
        RealModel {
            kind: ModelKind::MlpClassifier,
            n_features: 2,
            n_classes: 2,
            layers: vec![
                RealLayer {
                    weights: vec![vec![0.5, -0.25], vec![0.1, 0.9]],
                    intercepts: vec![0.0, -0.3],
                    activation: Activation::Relu,
                },
                RealLayer {
                    weights: vec![vec![1.0, -1.0], vec![-0.5, 0.5]],
                    intercepts: vec![0.2, 0.0],
                    activation: Activation::Linear,
                },
            ],
            classifiers: vec![],
        }
    }

    pub(crate) fn tiny_svm_classifier() -> RealModel {
        RealModel {
            kind: ModelKind::SvmClassifier,
            n_features: 2,
            n_classes: 3,
            layers: vec![],
            classifiers: vec![
                RealClassifier {
                    weights: vec![0.5, -0.5],
                    intercept: 0.1,
                    class_pair: Some((0, 1)),
                },
                RealClassifier {
                    weights: vec![-0.25, 0.75],
                    intercept: 0.0,
                    class_pair: Some((0, 2)),
                },
                RealClassifier {
                    weights: vec![1.0, 0.0],
                    intercept: -0.2,
                    class_pair: Some((1, 2)),
                },
            ],
        }
    }

    #[test]
    fn validates_good_models() {
        tiny_mlp_classifier().validate().unwrap();
        tiny_svm_classifier().validate().unwrap();
    }

    #[test]
    fn rejects_hidden_linear_activation() {
        let mut m = tiny_mlp_classifier();
        m.layers[0].activation = Activation::Linear;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_relu_output_layer() {
        let mut m = tiny_mlp_classifier();
        m.layers[1].activation = Activation::Relu;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_ragged_weight_row() {
        let mut m = tiny_mlp_classifier();
        m.layers[0].weights[1] = vec![0.1];
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_missing_class_pair() {
        let mut m = tiny_svm_classifier();
        m.classifiers.pop();
        assert!(m.validate().is_err());
        let mut m = tiny_svm_classifier();
        m.classifiers[2].class_pair = Some((0, 1));
        assert!(m.validate().is_err(), "duplicate pair must be rejected");
    }

    #[test]
    fn real_model_json_round_trip() {
        let m = tiny_svm_classifier();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_real_model(&m, &path).unwrap();
        let back = load_real_model(&path).unwrap();
        assert_eq!(back.n_classes, 3);
        assert_eq!(back.classifiers[1].weights, m.classifiers[1].weights);
    }

    #[test]
    fn wrong_document_type_is_rejected() {
        let m = tiny_mlp_classifier();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_real_model(&m, &path).unwrap();
        let err = load_quantized_model(&path).unwrap_err();
        assert!(err.to_string().contains("real-model"), "{err}");
    }

    #[test]
    fn spec_bounds_are_enforced() {
        FixedPointSpec::default().validate().unwrap();
        let bad = FixedPointSpec {
            input_bits: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
