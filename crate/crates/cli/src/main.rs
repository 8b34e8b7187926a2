//! Command-line front end for the bespoke circuit toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/IO error, 3 verification
//! failure (a generated artifact disagrees with its reference).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_label, parse_tau_grid, DatasetConfig, RunConfig, StimulusSource};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Verify(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<bespoke::Error> for CliError {
    fn from(e: bespoke::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "bespoke",
    version,
    about = "Generate, approximate, and explore coefficient-hardwired circuits for small trained models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Options shared by every subcommand. Values from `--config` (or the
/// defaults) are overridden by any flag given here.
#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration (a run-manifest.json from a previous run works too)
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Dataset file (delimiter-separated numeric columns)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Label column: a name (needs a header) or a 0-based index
    #[arg(long)]
    label: Option<String>,
    /// Dataset field delimiter
    #[arg(long)]
    delimiter: Option<char>,
    /// Dataset has no header row
    #[arg(long)]
    no_header: bool,
    /// Pre-trained model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Input bits per feature
    #[arg(short = 'u', long)]
    input_bits: Option<u32>,
    /// Coefficient bits
    #[arg(long)]
    coeff_bits: Option<u32>,
    /// Hidden-activation bits
    #[arg(long)]
    hidden_bits: Option<u32>,
    /// Cell library JSON (omitted = built-in library)
    #[arg(long)]
    library: Option<PathBuf>,
    /// Coefficient perturbation threshold
    #[arg(short, long)]
    e: Option<i64>,
    /// Constancy thresholds: comma list (0.8,0.9) or range (0.8:0.99:0.01)
    #[arg(long)]
    tau_grid: Option<String>,
    /// Split shuffle seed
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction of the split
    #[arg(long)]
    ratio: Option<f64>,
    /// Output directory
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Split used as activity-profiling stimulus
    #[arg(long, value_enum)]
    stimulus: Option<StimulusSource>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the exact netlist, verify it against the integer reference, report area
    Synth(Common),
    /// Report fixed-point model accuracy on the train/test split
    Eval(Common),
    /// Replace coefficients within the error threshold and report the impact
    CoeffApprox(Common),
    /// Prune the exact netlist at explicit thresholds
    Prune {
        #[command(flatten)]
        common: Common,
        /// Constancy threshold in [0.5, 1]
        #[arg(long)]
        tau_c: f64,
        /// Highest output-bit significance a pruned gate may reach (-1 = dead gates only)
        #[arg(long)]
        phi_c: i32,
    },
    /// Sweep the combined approximation space, write reports, print the Pareto front
    Explore {
        #[command(flatten)]
        common: Common,
        /// Accuracy-loss budget for the highlighted design point
        #[arg(long, default_value_t = 0.01)]
        budget: f64,
    },
    /// Re-derive and verify the Pareto front of an existing report
    Pareto {
        #[command(flatten)]
        common: Common,
        /// report.json to check (default: <output>/report.json)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Accuracy-loss budget for the highlighted design point
        #[arg(long, default_value_t = 0.01)]
        budget: f64,
    },
    /// Print the constant-multiplier area table for the configured widths
    AreaTable(Common),
}

/// defaults <- config file <- flags.
fn resolve(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &common.dataset {
        match cfg.dataset.as_mut() {
            Some(d) => d.path = path.clone(),
            None => {
                cfg.dataset = Some(DatasetConfig {
                    path: path.clone(),
                    label: config::parse_label("target"),
                    delimiter: ',',
                    has_header: true,
                })
            }
        }
    }
    if common.label.is_some() || common.delimiter.is_some() || common.no_header {
        let d = cfg.dataset.as_mut().ok_or_else(|| {
            CliError::Usage("dataset flags given but no dataset configured (use --dataset)".into())
        })?;
        if let Some(l) = &common.label {
            d.label = parse_label(l);
        }
        if let Some(c) = common.delimiter {
            d.delimiter = c;
        }
        if common.no_header {
            d.has_header = false;
        }
    }
    if let Some(m) = &common.model {
        cfg.model = Some(m.clone());
    }
    if let Some(u) = common.input_bits {
        cfg.spec.input_bits = u;
    }
    if let Some(c) = common.coeff_bits {
        cfg.spec.coeff_bits = c;
    }
    if let Some(h) = common.hidden_bits {
        cfg.spec.hidden_bits = h;
    }
    if let Some(l) = &common.library {
        cfg.library = Some(l.clone());
    }
    if let Some(e) = common.e {
        cfg.e = Some(e).filter(|&v| v >= 0).ok_or_else(|| {
            CliError::Usage(format!("e must be >= 0, got {e}"))
        })?;
    }
    if let Some(g) = &common.tau_grid {
        cfg.tau_grid = Some(parse_tau_grid(g)?);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.ratio {
        cfg.ratio = r;
    }
    if let Some(o) = &common.output {
        cfg.output = o.clone();
    }
    if let Some(s) = common.stimulus {
        cfg.stimulus = s;
    }
    Ok(cfg)
}

fn setup(common: &Common) -> CliResult<RunConfig> {
    if let Some(w) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Data(format!("worker pool: {e}")))?;
    }
    resolve(common)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Synth(c) => commands::cmd_synth(&setup(&c)?),
        Cmd::Eval(c) => commands::cmd_eval(&setup(&c)?),
        Cmd::CoeffApprox(c) => commands::cmd_coeff_approx(&setup(&c)?),
        Cmd::Prune { common, tau_c, phi_c } => commands::cmd_prune(&setup(&common)?, tau_c, phi_c),
        Cmd::Explore { common, budget } => commands::cmd_explore(&setup(&common)?, budget),
        Cmd::Pareto { common, report, budget } => {
            commands::cmd_pareto(&setup(&common)?, report, budget)
        }
        Cmd::AreaTable(c) => commands::cmd_area_table(&setup(&c)?),
    }
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. `bespoke area-table | head`)
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, msg) = match e {
                CliError::Usage(m) => (1, m),
                CliError::Data(m) => (2, m),
                CliError::Verify(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
