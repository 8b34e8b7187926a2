//! Shared plumbing for integration tests: fixture locations, metadata
//! parsing, and the standard dataset pipeline.
//!
//! Compiled into several test targets; not every target touches every field.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;

use bespoke::model::dataset::{load_dataset, split_normalize, ColumnRef, DataSchema, Split};
use bespoke::model::{load_real_model, FixedPointSpec, RealModel};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Deserialize)]
pub struct Meta {
    pub split_seed: u64,
    pub split_ratio: f64,
    pub spec: SpecMeta,
    pub dataset: String,
    pub label_column: String,
    pub n_classes: u32,
    pub models: BTreeMap<String, ModelMeta>,
}

#[derive(Debug, Deserialize)]
pub struct SpecMeta {
    pub input_bits: u32,
    pub coeff_bits: u32,
    pub hidden_bits: u32,
}

#[derive(Debug, Deserialize)]
pub struct ModelMeta {
    pub file: String,
    pub kind: String,
    pub ref_train_accuracy: f64,
    pub ref_test_accuracy: f64,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Deserialize)]
pub struct Probe {
    pub input: Vec<u32>,
    pub raw: Vec<i64>,
    pub decision: ProbeDecision,
}

#[derive(Debug, Deserialize)]
pub struct ProbeDecision {
    #[serde(default)]
    pub class: Option<u32>,
    #[serde(default)]
    pub raw: Option<i64>,
}

pub fn load_meta() -> Meta {
    let path = fixtures_dir().join("meta.json");
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    serde_json::from_str(&text).expect("parse fixture metadata")
}

pub fn fixed_point_spec(meta: &Meta) -> FixedPointSpec {
    FixedPointSpec {
        input_bits: meta.spec.input_bits,
        coeff_bits: meta.spec.coeff_bits,
        hidden_bits: meta.spec.hidden_bits,
    }
}

/// Load the fixture dataset and reproduce the canonical train/test split.
pub fn load_split(meta: &Meta) -> Split {
    let schema = DataSchema {
        label: ColumnRef::Name(meta.label_column.clone()),
        ..DataSchema::default()
    };
    let d = load_dataset(fixtures_dir().join(&meta.dataset), &schema).expect("load dataset");
    split_normalize(&d, meta.split_ratio, meta.split_seed).expect("split dataset")
}

pub fn load_model(meta: &ModelMeta) -> RealModel {
    load_real_model(fixtures_dir().join(&meta.file)).expect("load fixture model")
}
