//! Run configuration: a JSON file of documented keys, overridable by flags,
//! re-emitted as part of every run manifest so runs can be replayed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bespoke::model::dataset::{ColumnRef, DataSchema};
use bespoke::model::FixedPointSpec;
use bespoke::netlist::CellLibrary;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Label column, by name (requires a header) or 0-based index.
    #[serde(default = "default_label")]
    pub label: ColumnRef,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_label() -> ColumnRef {
    ColumnRef::Name("target".to_string())
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

impl DatasetConfig {
    pub fn schema(&self) -> DataSchema {
        DataSchema {
            label: self.label.clone(),
            delimiter: self.delimiter,
            has_header: self.has_header,
        }
    }
}

/// Which split drives activity profiling (pruning statistics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StimulusSource {
    Train,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<DatasetConfig>,
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub spec: FixedPointSpec,
    /// Cell library JSON; omitted = the built-in default library.
    pub library: Option<PathBuf>,
    /// Coefficient perturbation threshold.
    #[serde(default = "default_e")]
    pub e: i64,
    /// Constancy thresholds to sweep; omitted = 0.80..=0.99 step 0.01.
    pub tau_grid: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_stimulus")]
    pub stimulus: StimulusSource,
}

fn default_e() -> i64 {
    4
}

fn default_seed() -> u64 {
    7
}

fn default_ratio() -> f64 {
    0.8
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_stimulus() -> StimulusSource {
    StimulusSource::Train
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            model: None,
            spec: FixedPointSpec::default(),
            library: None,
            e: default_e(),
            tau_grid: None,
            seed: default_seed(),
            ratio: default_ratio(),
            output: default_output(),
            stimulus: default_stimulus(),
        }
    }
}

impl RunConfig {
    /// Parse a config file. A run manifest written by a previous invocation
    /// (which nests the config under a `config` key) is accepted too, so any
    /// emitted manifest replays directly.
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, need_dataset: bool, need_model: bool) -> CliResult<()> {
        if need_dataset {
            let d = self
                .dataset
                .as_ref()
                .ok_or_else(|| CliError::Usage("no dataset configured (use --dataset or a config file)".into()))?;
            exists(&d.path)?;
        }
        if need_model {
            let m = self
                .model
                .as_ref()
                .ok_or_else(|| CliError::Usage("no model configured (use --model or a config file)".into()))?;
            exists(m)?;
        }
        if let Some(lib) = &self.library {
            exists(lib)?;
        }
        self.spec
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.e < 0 {
            return Err(CliError::Usage(format!("e must be >= 0, got {}", self.e)));
        }
        if let Some(grid) = &self.tau_grid {
            if grid.is_empty() {
                return Err(CliError::Usage("tau grid is empty".into()));
            }
            for &t in grid {
                if !(0.5..=1.0).contains(&t) {
                    return Err(CliError::Usage(format!("tau threshold {t} outside [0.5, 1.0]")));
                }
            }
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(CliError::Usage(format!("split ratio {} not in (0, 1)", self.ratio)));
        }
        Ok(())
    }

    pub fn load_library(&self) -> CliResult<CellLibrary> {
        Ok(match &self.library {
            Some(path) => CellLibrary::load(path)?,
            None => CellLibrary::default_library(),
        })
    }
}

fn exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Data(format!("path does not exist: {}", path.display())))
    }
}

/// Everything needed to replay a run: the resolved configuration plus the
/// hash of the library actually used.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub library_hash: String,
    pub config: &'a RunConfig,
}

pub fn write_manifest(cmd: &str, cfg: &RunConfig, lib: &CellLibrary, dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("create {}: {e}", dir.display())))?;
    let manifest = RunManifest {
        command: cmd,
        version: env!("CARGO_PKG_VERSION"),
        library_hash: lib.content_hash(),
        config: cfg,
    };
    let path = dir.join("run-manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Data(format!("encode manifest: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|e| CliError::Data(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

/// Parse `--label`: a decimal integer is a column index, anything else a name.
pub fn parse_label(s: &str) -> ColumnRef {
    match s.parse::<usize>() {
        Ok(i) => ColumnRef::Index(i),
        Err(_) => ColumnRef::Name(s.to_string()),
    }
}

/// Parse `--tau-grid`: either a comma list (`0.8,0.9,0.95`) or a range
/// (`start:end:step`, inclusive of both ends up to rounding).
pub fn parse_tau_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = |msg: &str| CliError::Usage(format!("tau grid `{s}`: {msg}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is start:end:step"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("range bounds must be numbers"))?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(start.is_finite() && end.is_finite() && step.is_finite()) {
            return Err(bad("range bounds must be finite"));
        }
        if step <= 0.0 || end < start {
            return Err(bad("need end >= start and step > 0"));
        }
        let mut grid = Vec::new();
        let mut k = 0u32;
        loop {
            let t = start + step * k as f64;
            if t > end + step * 1e-9 {
                break;
            }
            grid.push(t.min(end));
            k += 1;
        }
        Ok(grid)
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("entries must be numbers")))
            .collect()
    }
}
