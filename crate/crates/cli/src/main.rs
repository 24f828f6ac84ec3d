//! `eprop`: command-line runner for the eligibility-trace experiments.
//!
//! Subcommands:
//!
//! - `two-neuron`: one synapse between two randomly driven cells; writes the
//!   per-step membrane, spike, eligibility, and cumulative-gradient series.
//! - `spike-timing`: trains a recurrent network to report the age of its most
//!   recent input spike; writes the per-epoch loss and firing-rate curve.
//! - `gradcheck`: compares the factorized gradient against backpropagation
//!   through time on a random network and prints the worst relative error.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! divergence or I/O failure. `--config FILE` supplies JSON defaults; explicit
//! flags win over the file, and the `EPROP_OUT_DIR` environment variable
//! supplies the output directory when neither the file nor `--out` names one.

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use rand::Rng;

use eprop_core::bptt::{bptt_gradient, compare_gradients};
use eprop_core::experiments::two_neuron::{demo_lif_config, demo_lif_params};
use eprop_core::experiments::{
    run_spike_timing, run_two_neuron, SpikeTimingConfig, TwoNeuronConfig,
};
use eprop_core::learning::{episode_gradient, LearningSignalMode};
use eprop_core::model::{Izhikevich, Lif, Model, StdpLif};
use eprop_core::network::Network;
use eprop_core::neuron::{IzhParams, LifParams};
use eprop_core::rng::{stream, StreamKind};
use eprop_core::{run_episode, SimError};

use config::{GradcheckConfig, RunConfigFile, FORMAT_VERSION};
use output::{ensure_dir, write_epoch_csv, write_sidecar, write_two_neuron_csv, Sidecar};

/// Relative-error bound for a passing `gradcheck`.
const GRADCHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, or invalid parameter values. Exit 1.
    Config(String),
    /// Simulation blow-up or a failed gradient check. Exit 2.
    Numeric(String),
    /// Filesystem trouble while writing artifacts. Exit 2.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NumericalDivergence(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "eprop",
    version,
    about = "Spiking-network experiments with eligibility traces"
)]
struct Cli {
    /// JSON file with defaults for any subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-cell, one-synapse demonstration and write its series.
    TwoNeuron {
        #[arg(long, value_enum)]
        model: DemoModel,
        #[arg(long)]
        seed: Option<u64>,
        /// Episode length in steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Train networks on the spike-timing task and write the loss curve.
    SpikeTiming {
        #[arg(long, value_enum)]
        model: TaskModel,
        #[arg(long)]
        epochs: Option<u32>,
        /// Episodes per gradient step.
        #[arg(long)]
        batch: Option<u32>,
        /// Independently seeded repetitions to average over.
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Compare the factorized gradient against the unrolled reference.
    Gradcheck {
        #[arg(long, value_enum)]
        model: DemoModel,
        /// Hidden-layer size of the randomly wired check network.
        #[arg(long)]
        neurons: Option<usize>,
        /// Episode length in steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoModel {
    Izhikevich,
    StdpLif,
    Lif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskModel {
    Lif,
    StdpLif,
}

impl DemoModel {
    fn name(self) -> &'static str {
        match self {
            DemoModel::Izhikevich => "izhikevich",
            DemoModel::StdpLif => "stdp-lif",
            DemoModel::Lif => "lif",
        }
    }
}

impl TaskModel {
    fn name(self) -> &'static str {
        match self {
            TaskModel::Lif => "lif",
            TaskModel::StdpLif => "stdp-lif",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    match cli.command {
        Command::TwoNeuron {
            model,
            seed,
            steps,
            out,
        } => two_neuron(&file, model, seed, steps, out),
        Command::SpikeTiming {
            model,
            epochs,
            batch,
            runs,
            seed,
            out,
        } => spike_timing(&file, model, epochs, batch, runs, seed, out),
        Command::Gradcheck {
            model,
            neurons,
            steps,
            seed,
        } => gradcheck(&file, model, neurons, steps, seed),
    }
}

/// Output directory precedence: flag, config file, `EPROP_OUT_DIR`, then cwd.
fn resolve_out_dir(flag: Option<PathBuf>, file: &RunConfigFile) -> PathBuf {
    flag.or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os("EPROP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn two_neuron(
    file: &RunConfigFile,
    model: DemoModel,
    seed: Option<u64>,
    steps: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let base = match model {
        DemoModel::Izhikevich => TwoNeuronConfig::default(),
        DemoModel::StdpLif | DemoModel::Lif => demo_lif_config(),
    };
    let mut cfg: TwoNeuronConfig =
        config::resolve_section(&base, file.two_neuron.as_ref(), "two_neuron")?;
    if let Some(s) = file.seed {
        cfg.seed = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = steps {
        cfg.steps = t;
    }

    let dir = ensure_dir(&resolve_out_dir(out, file))?;
    let (series, sidecar_path) = match model {
        DemoModel::Izhikevich => {
            let params = IzhParams::default();
            let m = Izhikevich {
                params: params.clone(),
            };
            let series = run_two_neuron(&m, &cfg, 0)?;
            let path = write_sidecar(&dir, "two_neuron", &sidecar(model.name(), &cfg, &params))?;
            (series, path)
        }
        DemoModel::StdpLif => {
            let params = demo_lif_params();
            let m = StdpLif {
                params: params.clone(),
            };
            let series = run_two_neuron(&m, &cfg, 0)?;
            let path = write_sidecar(&dir, "two_neuron", &sidecar(model.name(), &cfg, &params))?;
            (series, path)
        }
        DemoModel::Lif => {
            let params = demo_lif_params();
            let m = Lif {
                params: params.clone(),
            };
            let series = run_two_neuron(&m, &cfg, 0)?;
            let path = write_sidecar(&dir, "two_neuron", &sidecar(model.name(), &cfg, &params))?;
            (series, path)
        }
    };
    let csv_path = write_two_neuron_csv(&dir, &series)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", sidecar_path.display());
    Ok(())
}

fn sidecar<P: serde::Serialize + Clone>(
    model: &str,
    cfg: &TwoNeuronConfig,
    params: &P,
) -> Sidecar<TwoNeuronConfig, P> {
    Sidecar {
        format_version: FORMAT_VERSION,
        command: "two-neuron",
        model: model.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        neuron_params: params.clone(),
    }
}

fn spike_timing(
    file: &RunConfigFile,
    model: TaskModel,
    epochs: Option<u32>,
    batch: Option<u32>,
    runs: Option<u32>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg: SpikeTimingConfig = config::resolve_section(
        &SpikeTimingConfig::default(),
        file.spike_timing.as_ref(),
        "spike_timing",
    )?;
    if let Some(s) = file.seed {
        cfg.seed = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = batch {
        cfg.train.batch_size = b;
    }
    if let Some(r) = runs {
        cfg.n_runs = r;
    }

    let params = cfg.lif_params();
    let summary = match model {
        TaskModel::Lif => run_spike_timing(
            &Lif {
                params: params.clone(),
            },
            &cfg,
        )?,
        TaskModel::StdpLif => run_spike_timing(
            &StdpLif {
                params: params.clone(),
            },
            &cfg,
        )?,
    };

    let dir = ensure_dir(&resolve_out_dir(out, file))?;
    let csv_path = write_epoch_csv(&dir, &summary.aggregate)?;
    let sidecar_path = write_sidecar(
        &dir,
        "spike_timing",
        &Sidecar {
            format_version: FORMAT_VERSION,
            command: "spike-timing",
            model: model.name().to_string(),
            seed: cfg.seed,
            config: cfg.clone(),
            neuron_params: params,
        },
    )?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", sidecar_path.display());
    Ok(())
}

fn gradcheck(
    file: &RunConfigFile,
    model: DemoModel,
    neurons: Option<usize>,
    steps: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut cfg: GradcheckConfig = config::resolve_section(
        &GradcheckConfig::default(),
        file.gradcheck.as_ref(),
        "gradcheck",
    )?;
    if let Some(s) = file.seed {
        cfg.seed = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = neurons {
        cfg.neurons = n;
    }
    if let Some(t) = steps {
        cfg.steps = t;
    }
    if cfg.neurons == 0 || cfg.steps == 0 {
        return Err(CliError::Config(
            "gradcheck needs at least one neuron and one step".into(),
        ));
    }

    let max_rel = match model {
        DemoModel::Izhikevich => gradcheck_once(
            Izhikevich {
                params: IzhParams::default(),
            },
            60.0,
            &cfg,
        )?,
        DemoModel::StdpLif => gradcheck_once(
            StdpLif {
                params: LifParams::default(),
            },
            1.0,
            &cfg,
        )?,
        DemoModel::Lif => gradcheck_once(
            Lif {
                params: LifParams::default(),
            },
            1.0,
            &cfg,
        )?,
    };
    println!("max relative error {max_rel:.3e} (tolerance {GRADCHECK_TOLERANCE:.0e})");
    if max_rel <= GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "factorized gradient disagrees with the unrolled reference by {max_rel:.3e}"
        )))
    }
}

/// One random network, one random episode, both gradient routes.
fn gradcheck_once<M: Model>(
    model: M,
    input_scale: f64,
    cfg: &GradcheckConfig,
) -> Result<f64, CliError> {
    let (n_in, n_out) = (2, 1);
    let mut rng = stream(cfg.seed, StreamKind::GradCheck, 0, 0, 0);
    let net = Network::random(model, n_in, cfg.neurons, n_out, 0.9, input_scale, &mut rng);
    let mut inputs = Array2::zeros((cfg.steps, n_in));
    for x in inputs.iter_mut() {
        *x = rng.gen_bool(0.3) as u8 as f64;
    }
    let mut targets = Array2::zeros((cfg.steps, n_out));
    for v in targets.iter_mut() {
        *v = 2.0 * rng.gen::<f64>() - 1.0;
    }
    let mut rec = run_episode(&net, &inputs, true)?;
    let grads = episode_gradient(&net, &mut rec, &targets, LearningSignalMode::Exact)?;
    let oracle = bptt_gradient(&net, &inputs, &targets)?;
    Ok(compare_gradients(&grads, &oracle, 1e-12).max_rel)
}
