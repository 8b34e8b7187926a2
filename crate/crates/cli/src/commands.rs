//! The subcommand implementations. Each command loads the run configuration,
//! does its work, prints a human summary to stdout, writes machine-readable
//! artifacts plus a replayable run manifest into the output directory, and
//! maps failures onto the documented exit codes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use bespoke::coeff::{approximate_model, area_of};
use bespoke::dse::{
    self, default_tau_grid, netlist_accuracy, pareto, sim_vectors, AccuracyMeta, DesignPoint,
    EvalData, ParetoFront,
};
use bespoke::model::dataset::{load_dataset, quantize_inputs, split_normalize, Split};
use bespoke::model::golden::{eval_accuracy, golden_infer, Decision};
use bespoke::model::quantize::quantize_model;
use bespoke::model::{load_real_model, save_quantized_model, ModelKind, QuantizedModel};
use bespoke::netlist::CellLibrary;
use bespoke::netlist::{json as netlist_json, Netlist};
use bespoke::prune::{candidates, prune};
use bespoke::sim::{profile, Simulator};
use bespoke::synth::circuit::gen_model_circuit;
use bespoke::synth::mult::AreaCache;

use crate::config::{write_manifest, RunConfig, StimulusSource};
use crate::{CliError, CliResult};

/// Dataset split + quantized model, the common front of every pipeline.
struct Prepared {
    split: Split,
    q: QuantizedModel,
    train_q: Vec<Vec<u32>>,
    test_q: Vec<Vec<u32>>,
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let dcfg = cfg.dataset.as_ref().expect("validated");
    let d = load_dataset(&dcfg.path, &dcfg.schema())?;
    let split = split_normalize(&d, cfg.ratio, cfg.seed)?;
    let m = load_real_model(cfg.model.as_ref().expect("validated"))?;
    let q = quantize_model(&m, &cfg.spec)?;
    let train_q = quantize_inputs(&split.train, cfg.spec.input_bits);
    let test_q = quantize_inputs(&split.test, cfg.spec.input_bits);
    Ok(Prepared {
        split,
        q,
        train_q,
        test_q,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("create {}: {e}", parent.display())))?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("encode {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("create {}: {e}", dir.display())))
}

fn open_cache(cfg: &RunConfig, lib: &CellLibrary) -> CliResult<AreaCache> {
    ensure_dir(&cfg.output)?;
    Ok(AreaCache::open(cfg.output.join("area-cache.json"), lib)?)
}

fn stimulus_rows<'a>(cfg: &RunConfig, p: &'a Prepared) -> &'a [Vec<u32>] {
    match cfg.stimulus {
        StimulusSource::Train => &p.train_q,
        StimulusSource::Test => &p.test_q,
    }
}

// ---------------------------------------------------------------- synth ----

/// Compare the netlist against the integer reference on every given row:
/// the decision output and all tracked accumulator words must agree.
fn verify_netlist(
    n: &Netlist,
    lib: &CellLibrary,
    q: &QuantizedModel,
    rows: &[Vec<u32>],
) -> CliResult<usize> {
    let sim = Simulator::new(n, lib)?;
    let tracked_signed = q.kind != ModelKind::SvmClassifier;
    let mut values = Vec::new();
    let mut mismatches = 0usize;
    for (ri, row) in rows.iter().enumerate() {
        let vector: Vec<u64> = row.iter().map(|&v| v as u64).collect();
        sim.run(&vector, &mut values)?;
        let inf = golden_infer(q, row)?;
        let mut bad = Vec::new();
        for (i, &want) in inf.raw.iter().enumerate() {
            let got = sim.decode_tracked(&values, i, tracked_signed);
            if got != want {
                bad.push(format!("word o{i}: circuit {got}, reference {want}"));
            }
        }
        let decided = sim.decode(&values, 0);
        let want_decision = match inf.decision {
            Decision::Class(c) => c as i64,
            Decision::Raw(r) => r,
        };
        if decided != want_decision {
            bad.push(format!("decision: circuit {decided}, reference {want_decision}"));
        }
        if !bad.is_empty() {
            mismatches += 1;
            if mismatches <= 5 {
                eprintln!("mismatch on sample {ri}: {}", bad.join("; "));
            }
        }
    }
    Ok(mismatches)
}

pub fn cmd_synth(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(true, true)?;
    let lib = cfg.load_library()?;
    let p = prepare(cfg)?;

    let n = gen_model_circuit(&p.q, &lib)?;
    let area = n.area(&lib)?;

    let mut mismatches = verify_netlist(&n, &lib, &p.q, &p.train_q)?;
    mismatches += verify_netlist(&n, &lib, &p.q, &p.test_q)?;
    let total = p.train_q.len() + p.test_q.len();

    let out = &cfg.output;
    ensure_dir(out)?;
    netlist_json::save(&n, out.join("netlist.json"))?;
    let hdl = bespoke::netlist::hdl::export_hdl(&n)?;
    std::fs::write(out.join("netlist.v"), hdl)
        .map_err(|e| CliError::Data(format!("write netlist.v: {e}")))?;
    write_json(&out.join("area.json"), &area)?;
    write_manifest("synth", cfg, &lib, out)?;

    println!(
        "synthesized {:?}: {} gates, area {}",
        p.q.kind,
        n.gates.len(),
        area.total_area
    );
    println!(
        "verified against the integer reference on {total} samples ({} train + {} test): {mismatches} mismatches",
        p.train_q.len(),
        p.test_q.len()
    );
    println!("wrote {}", out.join("netlist.json").display());
    if mismatches > 0 {
        return Err(CliError::Verify(format!(
            "netlist disagrees with the integer reference on {mismatches}/{total} samples"
        )));
    }
    Ok(())
}

// ----------------------------------------------------------------- eval ----

pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(true, true)?;
    let lib = cfg.load_library()?;
    let p = prepare(cfg)?;

    let train_acc = eval_accuracy(&p.q, &p.train_q, &p.split.train.labels)?;
    let test_acc = eval_accuracy(&p.q, &p.test_q, &p.split.test.labels)?;

    println!("model {:?}  spec u={} c={} h={}", p.q.kind, cfg.spec.input_bits, cfg.spec.coeff_bits, cfg.spec.hidden_bits);
    println!("train accuracy {:.4} ({} samples)", train_acc, p.train_q.len());
    println!("test  accuracy {:.4} ({} samples)", test_acc, p.test_q.len());

    let out = &cfg.output;
    write_json(
        &out.join("eval.json"),
        &json!({
            "kind": p.q.kind,
            "n_train": p.train_q.len(),
            "n_test": p.test_q.len(),
            "train_accuracy": train_acc,
            "test_accuracy": test_acc,
            "output_scale": p.q.output_scale,
        }),
    )?;
    write_manifest("eval", cfg, &lib, out)?;
    Ok(())
}

// --------------------------------------------------------- coeff-approx ----

pub fn cmd_coeff_approx(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(true, true)?;
    let lib = cfg.load_library()?;
    let p = prepare(cfg)?;
    let cache = open_cache(cfg, &lib)?;

    let approx = approximate_model(&p.q, cfg.e, &lib, Some(&cache))?;
    cache.flush()?;
    let info = approx.approx.clone().expect("approximation provenance");

    let exact_acc = eval_accuracy(&p.q, &p.test_q, &p.split.test.labels)?;
    let approx_acc = eval_accuracy(&approx, &p.test_q, &p.split.test.labels)?;
    let saved = if info.mult_area_before > 0.0 {
        100.0 * (info.mult_area_before - info.mult_area_after) / info.mult_area_before
    } else {
        0.0
    };

    println!(
        "coefficient approximation at e={}: {} coefficients changed",
        cfg.e, info.changed
    );
    println!(
        "multiplier area estimate {} -> {} ({saved:.1}% saved)",
        info.mult_area_before, info.mult_area_after
    );
    println!("test accuracy {exact_acc:.4} -> {approx_acc:.4}");

    let out = &cfg.output;
    save_quantized_model(&approx, out.join("approx-model.json"))?;
    write_json(
        &out.join("approx.json"),
        &json!({
            "info": info,
            "exact_test_accuracy": exact_acc,
            "approx_test_accuracy": approx_acc,
            "mult_area_saved_pct": saved,
        }),
    )?;
    write_manifest("coeff-approx", cfg, &lib, out)?;
    println!("wrote {}", out.join("approx-model.json").display());
    Ok(())
}

// ---------------------------------------------------------------- prune ----

pub fn cmd_prune(cfg: &RunConfig, tau_c: f64, phi_c: i32) -> CliResult<()> {
    cfg.validate(true, true)?;
    let lib = cfg.load_library()?;
    let p = prepare(cfg)?;

    let n = gen_model_circuit(&p.q, &lib)?;
    let stim = sim_vectors(stimulus_rows(cfg, &p));
    let prof = profile(&n, &lib, &stim)?;
    let cands = candidates(&n, &prof)?;
    let pruned = prune(&n, &cands, tau_c, phi_c, &lib)?;

    let meta = AccuracyMeta::of(&p.q);
    let acc_before = netlist_accuracy(&n, &lib, &meta, &p.test_q, &p.split.test.labels)?;
    let acc_after = netlist_accuracy(&pruned, &lib, &meta, &p.test_q, &p.split.test.labels)?;
    let area_before = n.area(&lib)?.total_area;
    let area_after = pruned.area(&lib)?.total_area;
    let info = pruned.prune_info.clone().expect("pruning provenance");

    println!(
        "pruned at tau_c={tau_c} phi_c={phi_c}: {} of {} gates tied to constants",
        info.pruned_gates.len(),
        n.gates.len()
    );
    println!("gates {} -> {}", n.gates.len(), pruned.gates.len());
    println!("area  {} -> {}", area_before, area_after);
    println!("test accuracy {acc_before:.4} -> {acc_after:.4}");

    let out = &cfg.output;
    ensure_dir(out)?;
    netlist_json::save(&pruned, out.join("pruned.json"))?;
    write_json(
        &out.join("prune.json"),
        &json!({
            "tau_c": tau_c,
            "phi_c": phi_c,
            "stimulus": cfg.stimulus,
            "pruned_gate_count": info.pruned_gates.len(),
            "gates_before": n.gates.len(),
            "gates_after": pruned.gates.len(),
            "area_before": area_before,
            "area_after": area_after,
            "test_accuracy_before": acc_before,
            "test_accuracy_after": acc_after,
        }),
    )?;
    write_manifest("prune", cfg, &lib, out)?;
    println!("wrote {}", out.join("pruned.json").display());
    Ok(())
}

// -------------------------------------------------------------- explore ----

fn front_table(front: &[DesignPoint]) -> String {
    let mut s = String::from("  stage       e  tau_c  phi_c  accuracy  norm_area\n");
    for pt in front {
        let e = pt.e.map_or("-".to_string(), |v| v.to_string());
        let t = pt.tau_c.map_or("-".to_string(), |v| format!("{v:.2}"));
        let f = pt.phi_c.map_or("-".to_string(), |v| v.to_string());
        s.push_str(&format!(
            "  {:<10} {:>2} {:>6} {:>6}  {:>8.4}  {:>9.4}\n",
            pt.stage.to_string(),
            e,
            t,
            f,
            pt.accuracy,
            pt.normalized_area
        ));
    }
    s
}

/// Cheapest front member whose accuracy stays within `budget` (absolute
/// accuracy-loss fraction) of the exact baseline.
fn best_under_budget(
    front: &[DesignPoint],
    exact_accuracy: f64,
    budget: f64,
) -> Option<&DesignPoint> {
    front
        .iter()
        .filter(|p| p.accuracy >= exact_accuracy - budget)
        .min_by(|a, b| {
            a.normalized_area
                .partial_cmp(&b.normalized_area)
                .expect("finite areas")
        })
}

fn print_best(front: &ParetoFront, points: &[DesignPoint], budget: f64) -> CliResult<()> {
    let exact = points
        .iter()
        .find(|p| p.stage == dse::Stage::Exact)
        .ok_or_else(|| CliError::Data("report has no exact baseline point".into()))?;
    match best_under_budget(&front.points, exact.accuracy, budget) {
        Some(best) => {
            let cfgs = match best.stage {
                dse::Stage::Exact => "exact".to_string(),
                dse::Stage::CoeffOnly => format!("e={}", best.e.unwrap_or_default()),
                dse::Stage::PruneOnly => format!(
                    "tau_c={:.2} phi_c={}",
                    best.tau_c.unwrap_or_default(),
                    best.phi_c.unwrap_or_default()
                ),
                dse::Stage::Cross => format!(
                    "e={} tau_c={:.2} phi_c={}",
                    best.e.unwrap_or_default(),
                    best.tau_c.unwrap_or_default(),
                    best.phi_c.unwrap_or_default()
                ),
            };
            println!(
                "best within {:.2}% accuracy loss: {} ({cfgs}) — accuracy {:.4} ({:+.2}%), area {:.4} of baseline ({:.1}% saved)",
                100.0 * budget,
                best.stage,
                best.accuracy,
                100.0 * (best.accuracy - exact.accuracy),
                best.normalized_area,
                100.0 * (1.0 - best.normalized_area),
            );
        }
        None => println!(
            "no design point within {:.2}% accuracy loss of the baseline",
            100.0 * budget
        ),
    }
    Ok(())
}

pub fn cmd_explore(cfg: &RunConfig, budget: f64) -> CliResult<()> {
    cfg.validate(true, true)?;
    if !(0.0..=1.0).contains(&budget) {
        return Err(CliError::Usage(format!(
            "accuracy-loss budget {budget} outside [0, 1]"
        )));
    }
    let lib = cfg.load_library()?;
    let p = prepare(cfg)?;
    let cache = open_cache(cfg, &lib)?;

    let mut data = EvalData::from_split(&p.split, cfg.spec.input_bits);
    // Exploration profiles gate activity on the `train` rows of its input;
    // pointing them at the test rows switches the profiling stimulus without
    // touching the accuracy evaluation (always the test split).
    if cfg.stimulus == StimulusSource::Test {
        data.train_inputs = data.test_inputs.clone();
        data.train_labels = data.test_labels.clone();
    }
    let grid = cfg.tau_grid.clone().unwrap_or_else(default_tau_grid);

    println!(
        "exploring {:?} at e={} over {} tau thresholds...",
        p.q.kind,
        cfg.e,
        grid.len()
    );
    let explored = dse::explore(&p.q, cfg.e, &data, &grid, &lib, Some(&cache))?;
    cache.flush()?;
    let front = pareto(&explored.points);
    front
        .verify(&explored.points)
        .map_err(|e| CliError::Verify(e.to_string()))?;

    let paths = dse::report(&explored, &front, &cfg.output)?;
    write_manifest("explore", cfg, &lib, &cfg.output)?;

    println!(
        "explored {} design points; Pareto front has {}:",
        explored.points.len(),
        front.points.len()
    );
    print!("{}", front_table(&front.points));
    print_best(&front, &explored.points, budget)?;
    println!(
        "wrote {}, {}, {} and {} netlists",
        paths.csv.display(),
        paths.json.display(),
        paths.plot.display(),
        paths.netlists.len()
    );
    Ok(())
}

// --------------------------------------------------------------- pareto ----

#[derive(Deserialize)]
struct ReportDoc {
    points: Vec<DesignPoint>,
    front: Vec<DesignPoint>,
}

pub fn cmd_pareto(cfg: &RunConfig, report: Option<PathBuf>, budget: f64) -> CliResult<()> {
    let path = report.unwrap_or_else(|| cfg.output.join("report.json"));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
    let doc: ReportDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let front = pareto(&doc.points);
    front
        .verify(&doc.points)
        .map_err(|e| CliError::Verify(e.to_string()))?;
    // The stored front must be the one the points induce (netlist paths are
    // filled in by the report writer, so compare configurations and metrics).
    let key = |p: &DesignPoint| {
        (
            p.stage,
            p.e,
            p.tau_c.map(f64::to_bits),
            p.phi_c,
            p.accuracy.to_bits(),
            p.area.to_bits(),
        )
    };
    let stored: Vec<_> = doc.front.iter().map(key).collect();
    let derived: Vec<_> = front.points.iter().map(key).collect();
    if stored != derived {
        return Err(CliError::Verify(format!(
            "stored front ({} points) does not match the front derived from the report's points ({} points)",
            stored.len(),
            derived.len()
        )));
    }

    println!(
        "report {}: {} points, Pareto front verified ({} members):",
        path.display(),
        doc.points.len(),
        front.points.len()
    );
    print!("{}", front_table(&front.points));
    print_best(&front, &doc.points, budget)?;
    Ok(())
}

// ----------------------------------------------------------- area-table ----

pub fn cmd_area_table(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(false, false)?;
    let lib = cfg.load_library()?;
    let u = cfg.spec.input_bits;
    let c = cfg.spec.coeff_bits;
    let lo = -(1i64 << (c - 1));
    let hi = (1i64 << (c - 1)) - 1;
    println!("w,area");
    for w in lo..=hi {
        let a = area_of(w, u, c, &lib, None)?;
        println!("{w},{a}");
    }
    Ok(())
}
