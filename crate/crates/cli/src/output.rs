//! Plot-ready artifacts: CSV series plus a JSON sidecar per run.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reruns
//! with the same configuration produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use eprop_core::experiments::{AggregateRow, TwoNeuronSeries};

use crate::config::FORMAT_VERSION;
use crate::CliError;

/// Provenance record written next to every CSV: the fully resolved
/// configuration, the neuron parameters in effect, and the format version.
#[derive(Debug, Serialize)]
pub struct Sidecar<C: Serialize, P: Serialize> {
    pub format_version: u32,
    pub command: &'static str,
    pub model: String,
    pub seed: u64,
    pub config: C,
    pub neuron_params: P,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Create the output directory and return it, for chaining.
pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

/// Per-step series of a two-neuron run. The `eps_u` column is left empty for
/// models without a recovery variable.
pub fn write_two_neuron_csv(dir: &Path, series: &TwoNeuronSeries) -> Result<PathBuf, CliError> {
    let path = dir.join("two_neuron.csv");
    let mut w = create(&path)?;
    let io_err = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    writeln!(w, "t,v_pre,v_post,z_pre,z_post,eps_v,eps_u,trace,grad_cum").map_err(io_err)?;
    for t in 0..series.n_steps() {
        let eps_u = series
            .eps_u
            .as_ref()
            .map_or(String::new(), |u| u[t].to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            t,
            series.v_pre[t],
            series.v_post[t],
            series.z_pre[t],
            series.z_post[t],
            series.eps_v[t],
            eps_u,
            series.trace[t],
            series.grad_cum[t],
        )
        .map_err(io_err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

/// Per-epoch aggregate curve of a training experiment.
pub fn write_epoch_csv(dir: &Path, rows: &[AggregateRow]) -> Result<PathBuf, CliError> {
    let path = dir.join("spike_timing.csv");
    let mut w = create(&path)?;
    let io_err = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    writeln!(w, "epoch,mse_mean,mse_std,rate_mean,rate_std").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.epoch, r.mse_mean, r.mse_std, r.rate_mean, r.rate_std
        )
        .map_err(io_err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

pub fn write_sidecar<C: Serialize, P: Serialize>(
    dir: &Path,
    stem: &str,
    sidecar: &Sidecar<C, P>,
) -> Result<PathBuf, CliError> {
    debug_assert_eq!(sidecar.format_version, FORMAT_VERSION);
    let path = dir.join(format!("{stem}.json"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, sidecar)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    writeln!(w).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    finish(w, &path)?;
    Ok(path)
}
