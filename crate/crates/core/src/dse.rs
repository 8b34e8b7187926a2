//! Design-space exploration over pruning thresholds, optionally on top of a
//! coefficient-approximated model.
//!
//! For one model and one coefficient threshold `e` the explored space is:
//! the exact bespoke circuit (the normalization baseline), the
//! coefficient-approximated circuit (when `e > 0`), and — for every τc in the
//! grid and every φc in Φ_τ (the unique φ values among that τc's candidate
//! gates) — the pruned derivative. Configurations that would tie the same
//! gate set are collapsed before evaluation. Every point is scored by full
//! netlist simulation of the test split; nothing is estimated behaviorally.
//!
//! Points are independent work items mapped over a rayon pool; results are
//! collected in configuration order, so reports are byte-identical no matter
//! how many workers run.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::approximate_model;
use crate::error::{Error, Result};
use crate::model::dataset::{quantize_inputs, Split};
use crate::model::QuantizedModel;
use crate::netlist::{CellLibrary, Netlist};
use crate::prune::{candidates, prune, Phi};
use crate::sim::{power, profile, Simulator};
use crate::synth::{gen_model_circuit, AreaCache};
use crate::util::round_half_away;

/// Which approximation pipeline produced a design point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Exact,
    CoeffOnly,
    PruneOnly,
    Cross,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Exact => "exact",
            Stage::CoeffOnly => "coeff_only",
            Stage::PruneOnly => "prune_only",
            Stage::Cross => "cross",
        };
        f.write_str(s)
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub stage: Stage,
    pub e: Option<i64>,
    pub tau_c: Option<f64>,
    pub phi_c: Option<i32>,
    /// Fraction of test samples classified (or, for regressors, rounded)
    /// correctly, in [0, 1].
    pub accuracy: f64,
    /// Library units.
    pub area: f64,
    /// Fraction of the exact baseline's area.
    pub normalized_area: f64,
    pub power: f64,
    pub normalized_power: f64,
    pub gates: usize,
    /// Relative path of the saved netlist, filled in by [`report`] for
    /// Pareto-front members.
    pub netlist_path: Option<String>,
}

impl DesignPoint {
    /// Lexicographic configuration key used for deterministic tie-breaks.
    fn config_key(&self) -> (Stage, i64, u64, i64) {
        (
            self.stage,
            self.e.unwrap_or(-1),
            self.tau_c.unwrap_or(-1.0).to_bits(),
            self.phi_c.map(|p| p as i64).unwrap_or(i64::MIN),
        )
    }
}

/// How to turn a raw netlist output into a prediction.
#[derive(Debug, Clone, Copy)]
pub struct AccuracyMeta {
    pub classifier: bool,
    /// Raw regressor outputs are divided by this before rounding.
    pub output_scale: f64,
}

impl AccuracyMeta {
    pub fn of(q: &QuantizedModel) -> Self {
        AccuracyMeta {
            classifier: q.kind.is_classifier(),
            output_scale: q.output_scale.unwrap_or(1.0),
        }
    }
}

/// Quantized train/test splits ready for both the golden evaluator and the
/// gate-level simulator.
#[derive(Debug, Clone)]
pub struct EvalData {
    pub train_inputs: Vec<Vec<u32>>,
    pub train_labels: Vec<f64>,
    pub test_inputs: Vec<Vec<u32>>,
    pub test_labels: Vec<f64>,
}

impl EvalData {
    pub fn from_split(split: &Split, input_bits: u32) -> Self {
        EvalData {
            train_inputs: quantize_inputs(&split.train, input_bits),
            train_labels: split.train.labels.clone(),
            test_inputs: quantize_inputs(&split.test, input_bits),
            test_labels: split.test.labels.clone(),
        }
    }
}

/// Widen quantized rows into simulator input vectors (one word per feature).
pub fn sim_vectors(rows: &[Vec<u32>]) -> Vec<Vec<u64>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| v as u64).collect())
        .collect()
}

/// Fraction of test vectors on which the netlist's decision matches the
/// label, by full simulation.
pub fn netlist_accuracy(
    n: &Netlist,
    lib: &CellLibrary,
    meta: &AccuracyMeta,
    inputs: &[Vec<u32>],
    labels: &[f64],
) -> Result<f64> {
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
    let sim = Simulator::new(n, lib)?;
    let mut values = Vec::new();
    let mut vector = Vec::new();
    let mut hits = 0usize;
    for (row, &label) in inputs.iter().zip(labels) {
        vector.clear();
        vector.extend(row.iter().map(|&v| v as u64));
        sim.run(&vector, &mut values)?;
        let raw = sim.decode(&values, 0);
        let predicted = if meta.classifier {
            raw as f64
        } else {
            round_half_away(raw as f64 / meta.output_scale) as f64
        };
        if predicted == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / inputs.len() as f64)
}

/// Absolute metrics of the exact circuit, used to normalize every other
/// point.
#[derive(Debug, Clone, Copy)]
pub struct Baseline {
    pub area: f64,
    pub power: f64,
}

/// accuracy, area, power, gate count — the per-point measurements.
fn eval_metrics(
    n: &Netlist,
    lib: &CellLibrary,
    meta: &AccuracyMeta,
    data: &EvalData,
) -> Result<(f64, f64, f64, usize)> {
    let accuracy = netlist_accuracy(n, lib, meta, &data.test_inputs, &data.test_labels)?;
    let area = n.area(lib)?.total_area;
    let test_vectors = sim_vectors(&data.test_inputs);
    let prof = profile(n, lib, &test_vectors)?;
    let pw = power(n, lib, &prof)?.total;
    Ok((accuracy, area, pw, n.gates.len()))
}

/// The default τc grid: every integer percent in [80 %, 99 %].
pub fn default_tau_grid() -> Vec<f64> {
    (80..=99).map(|p| p as f64 / 100.0).collect()
}

/// All evaluated points plus the netlists that realized them, in the same
/// order.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub points: Vec<DesignPoint>,
    pub netlists: Vec<Netlist>,
}

/// Sweep (τc, φc) over an already-optimized base circuit.
///
/// The candidate set is computed once from an activity profile of the train
/// split; Φ_τ is rebuilt per τc from the unique φ values of that τc's
/// eligible gates. Configurations tying identical gate sets are evaluated
/// once, under the first (lowest τc, then lowest φc) configuration that
/// produced the set.
#[allow(clippy::too_many_arguments)]
pub fn explore_prune(
    base: &Netlist,
    lib: &CellLibrary,
    meta: &AccuracyMeta,
    data: &EvalData,
    tau_grid: &[f64],
    stage: Stage,
    e: Option<i64>,
    baseline: Baseline,
) -> Result<Exploration> {
    let train_vectors = sim_vectors(&data.train_inputs);
    let prof = profile(base, lib, &train_vectors)?;
    let cands = candidates(base, &prof)?;

    let mut configs: Vec<(f64, i32)> = Vec::new();
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    for &tau_c in tau_grid {
        let mut phis: Vec<i32> = cands
            .iter()
            .filter(|c| c.tau >= tau_c)
            .filter_map(|c| match c.phi {
                Phi::Reach(v) => Some(v),
                Phi::Never => None,
            })
            .collect();
        phis.sort_unstable();
        phis.dedup();
        for &phi_c in &phis {
            let tied: Vec<u32> = cands
                .iter()
                .filter(|c| c.tau >= tau_c && c.phi <= Phi::Reach(phi_c))
                .map(|c| c.gate.0)
                .collect();
            if seen.insert(tied) {
                configs.push((tau_c, phi_c));
            }
        }
    }

    let results: Result<Vec<(DesignPoint, Netlist)>> = configs
        .par_iter()
        .map(|&(tau_c, phi_c)| {
            let pruned = prune(base, &cands, tau_c, phi_c, lib)?;
            let (accuracy, area, pw, gates) = eval_metrics(&pruned, lib, meta, data)?;
            let point = DesignPoint {
                stage,
                e,
                tau_c: Some(tau_c),
                phi_c: Some(phi_c),
                accuracy,
                area,
                normalized_area: area / baseline.area,
                power: pw,
                normalized_power: pw / baseline.power,
                gates,
                netlist_path: None,
            };
            Ok((point, pruned))
        })
        .collect();
    let (points, netlists) = results?.into_iter().unzip();
    Ok(Exploration { points, netlists })
}

/// The full cross-layer sweep for one model and one threshold `e`.
///
/// Emits the exact baseline point, the coefficient-only point when `e > 0`,
/// and one point per unique pruning configuration. `e = 0` degenerates to a
/// plain pruning exploration of the exact circuit.
pub fn explore(
    q: &QuantizedModel,
    e: i64,
    data: &EvalData,
    tau_grid: &[f64],
    lib: &CellLibrary,
    cache: Option<&AreaCache>,
) -> Result<Exploration> {
    let meta = AccuracyMeta::of(q);
    let exact = gen_model_circuit(q, lib)?;
    let (accuracy, area, pw, gates) = eval_metrics(&exact, lib, &meta, data)?;
    let baseline = Baseline { area, power: pw };
    let exact_point = DesignPoint {
        stage: Stage::Exact,
        e: None,
        tau_c: None,
        phi_c: None,
        accuracy,
        area,
        normalized_area: 1.0,
        power: pw,
        normalized_power: 1.0,
        gates,
        netlist_path: None,
    };

    let mut points = vec![exact_point];
    let mut netlists = vec![exact.clone()];
    if e == 0 {
        let sweep = explore_prune(
            &exact,
            lib,
            &meta,
            data,
            tau_grid,
            Stage::PruneOnly,
            None,
            baseline,
        )?;
        points.extend(sweep.points);
        netlists.extend(sweep.netlists);
    } else {
        let approx = approximate_model(q, e, lib, cache)?;
        let coeff_circuit = gen_model_circuit(&approx, lib)?;
        let (accuracy, area, pw, gates) = eval_metrics(&coeff_circuit, lib, &meta, data)?;
        points.push(DesignPoint {
            stage: Stage::CoeffOnly,
            e: Some(e),
            tau_c: None,
            phi_c: None,
            accuracy,
            area,
            normalized_area: area / baseline.area,
            power: pw,
            normalized_power: pw / baseline.power,
            gates,
            netlist_path: None,
        });
        netlists.push(coeff_circuit.clone());
        let sweep = explore_prune(
            &coeff_circuit,
            lib,
            &meta,
            data,
            tau_grid,
            Stage::Cross,
            Some(e),
            baseline,
        )?;
        points.extend(sweep.points);
        netlists.extend(sweep.netlists);
    }
    Ok(Exploration { points, netlists })
}

/// Non-dominated points, accuracy strictly descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<DesignPoint>,
}

fn dominates(a: &DesignPoint, b: &DesignPoint) -> bool {
    a.accuracy >= b.accuracy
        && a.normalized_area <= b.normalized_area
        && (a.accuracy > b.accuracy || a.normalized_area < b.normalized_area)
}

/// Extract the Pareto front: maximize accuracy, minimize normalized area.
/// Points tied on both axes collapse to the lexicographically smallest
/// configuration.
pub fn pareto(points: &[DesignPoint]) -> ParetoFront {
    let mut survivors: Vec<&DesignPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .collect();
    survivors.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.normalized_area.total_cmp(&b.normalized_area))
            .then(a.config_key().cmp(&b.config_key()))
    });
    survivors.dedup_by(|a, b| a.accuracy == b.accuracy && a.normalized_area == b.normalized_area);
    ParetoFront {
        points: survivors.into_iter().cloned().collect(),
    }
}

impl ParetoFront {
    /// Quadratic self-check: no member dominated by any candidate point, and
    /// accuracy strictly descending along the front.
    pub fn verify(&self, all: &[DesignPoint]) -> Result<()> {
        for p in &self.points {
            if let Some(d) = all.iter().find(|q| dominates(q, p)) {
                return Err(Error::Verification(format!(
                    "front member {:?} is dominated by {:?}",
                    (p.stage, p.tau_c, p.phi_c),
                    (d.stage, d.tau_c, d.phi_c)
                )));
            }
        }
        for w in self.points.windows(2) {
            if w[0].accuracy <= w[1].accuracy {
                return Err(Error::Verification(
                    "front accuracies are not strictly descending".into(),
                ));
            }
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// File name for a saved design-point netlist, unique per configuration.
fn point_file_name(p: &DesignPoint) -> String {
    let mut name = p.stage.to_string();
    if let Some(e) = p.e {
        name.push_str(&format!("_e{e}"));
    }
    if let Some(t) = p.tau_c {
        name.push_str(&format!("_tau{}", fmt_f64(t).replace('.', "p")));
    }
    if let Some(ph) = p.phi_c {
        name.push_str(&format!("_phi{ph}"));
    }
    name.push_str(".json");
    name
}

pub const REPORT_CSV_HEADER: &str =
    "stage,e,tau_c,phi_c,accuracy,area,normalized_area,power,normalized_power,gates,netlist_path";

/// Everything [`report`] wrote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: PathBuf,
    pub netlists: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    points: Vec<DesignPoint>,
    front: Vec<DesignPoint>,
}

/// Write `report.csv` (one row per point, stable column order),
/// `report.json` (full provenance), `plot.csv` ((stage, normalized_area,
/// accuracy) triples), and the netlist of every Pareto-front member under
/// `netlists/`. Returns the written paths.
pub fn report(explored: &Exploration, front: &ParetoFront, dir: &Path) -> Result<ReportPaths> {
    let io = |e: std::io::Error| Error::io(dir.display().to_string(), e);
    std::fs::create_dir_all(dir).map_err(io)?;

    // save front netlists and fill in their relative paths
    let mut points = explored.points.clone();
    let mut front_points = front.points.clone();
    let mut saved = Vec::new();
    if !front_points.is_empty() {
        let nets_dir = dir.join("netlists");
        std::fs::create_dir_all(&nets_dir).map_err(io)?;
        for fp in front_points.iter_mut() {
            let idx = explored
                .points
                .iter()
                .position(|p| p.config_key() == fp.config_key())
                .ok_or_else(|| {
                    Error::InvalidArgument("front member not among explored points".into())
                })?;
            let rel = format!("netlists/{}", point_file_name(fp));
            crate::netlist::json::save(&explored.netlists[idx], dir.join(&rel))?;
            saved.push(dir.join(&rel));
            fp.netlist_path = Some(rel.clone());
            points[idx].netlist_path = Some(rel);
        }
    }

    let csv_path = dir.join("report.csv");
    let mut csv = String::from(REPORT_CSV_HEADER);
    csv.push('\n');
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.stage,
            fmt_opt(&p.e),
            fmt_opt(&p.tau_c),
            fmt_opt(&p.phi_c),
            fmt_f64(p.accuracy),
            fmt_f64(p.area),
            fmt_f64(p.normalized_area),
            fmt_f64(p.power),
            fmt_f64(p.normalized_power),
            p.gates,
            fmt_opt(&p.netlist_path),
        ));
    }
    std::fs::write(&csv_path, csv).map_err(io)?;

    let json_path = dir.join("report.json");
    let doc = ReportDoc {
        points: points.clone(),
        front: front_points,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialization");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(io)?;

    let plot_path = dir.join("plot.csv");
    let mut plot = String::from("stage,normalized_area,accuracy\n");
    for p in &points {
        plot.push_str(&format!(
            "{},{},{}\n",
            p.stage,
            fmt_f64(p.normalized_area),
            fmt_f64(p.accuracy)
        ));
    }
    std::fs::write(&plot_path, plot).map_err(io)?;

    Ok(ReportPaths {
        csv: csv_path,
        json: json_path,
        plot: plot_path,
        netlists: saved,
    })
}
