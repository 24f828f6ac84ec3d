//! Spike-timing regression: a recurrent network with one Poisson input must
//! output `1 / (1 + t - t_in)`, the hyperbolically decaying age of the most
//! recent input spike. Solving it with few spikes requires the hidden layer to
//! encode *when* the input fired, not just how often.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::learning::LearningSignalMode;
use crate::model::Model;
use crate::network::Network;
use crate::neuron::LifParams;
use crate::rng::{stream, StreamKind};
use crate::train::{mean_std, train, EpochStats, TrainConfig};

/// Parameters of the spike-timing task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpikeTimingConfig {
    pub rate_hz: f64,
    pub steps: usize,
    pub dt_ms: f64,
    pub n_hidden: usize,
    pub v_thr: f64,
    pub kappa: f64,
    pub init_scale: f64,
    pub train: TrainConfig,
    pub n_runs: u32,
    pub seed: u64,
}

impl Default for SpikeTimingConfig {
    fn default() -> Self {
        Self {
            rate_hz: 25.0,
            steps: 400,
            dt_ms: 1.0,
            n_hidden: 16,
            v_thr: 0.5,
            kappa: 0.9,
            init_scale: 1.0,
            train: TrainConfig::default(),
            n_runs: 100,
            seed: 0,
        }
    }
}

impl SpikeTimingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.n_hidden == 0 || self.n_runs == 0 {
            return Err(SimError::InvalidConfig(
                "steps, hidden size and run count must be positive".into(),
            ));
        }
        if !(self.rate_hz >= 0.0 && self.rate_hz.is_finite())
            || !(self.dt_ms > 0.0 && self.dt_ms.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "rate must be non-negative and the step length positive".into(),
            ));
        }
        if self.rate_hz * self.dt_ms * 1e-3 > 1.0 {
            return Err(SimError::InvalidRate(format!(
                "{} Hz at {} ms per step exceeds one spike per step",
                self.rate_hz, self.dt_ms
            )));
        }
        if !(self.v_thr > 0.0 && self.v_thr.is_finite())
            || !(self.init_scale > 0.0 && self.init_scale.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "threshold and init scale must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(SimError::InvalidConfig(
                "readout decay must lie in [0, 1)".into(),
            ));
        }
        self.train.validate()
    }

    /// Neuron parameters with this task's spike threshold.
    pub fn lif_params(&self) -> LifParams {
        LifParams {
            v_thr: self.v_thr,
            ..LifParams::default()
        }
    }
}

/// Bernoulli spike train with per-step probability `rate_hz * dt` (dt in
/// seconds).
pub fn poisson_input<R: Rng + ?Sized>(
    rate_hz: f64,
    steps: usize,
    dt_ms: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let p = rate_hz * dt_ms * 1e-3;
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidRate(format!(
            "per-step spike probability {p} outside [0, 1]"
        )));
    }
    Ok((0..steps)
        .map(|_| (p > 0.0 && rng.gen_bool(p)) as u8 as f64)
        .collect())
}

/// Target output at step `t` given the most recent input spike time (0 before
/// the first spike).
pub fn spike_timing_target(t: usize, t_in: Option<usize>) -> f64 {
    match t_in {
        Some(ti) => 1.0 / (1.0 + (t - ti) as f64),
        None => 0.0,
    }
}

/// Target series for a whole input spike train, tracking the most recent
/// spike at or before each step.
pub fn targets_from_inputs(inputs: &[f64]) -> Vec<f64> {
    let mut t_in = None;
    inputs
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            if x != 0.0 {
                t_in = Some(t);
            }
            spike_timing_target(t, t_in)
        })
        .collect()
}

/// One epoch of the aggregate curve: batch means averaged over runs, spread
/// taken across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: u32,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub rate_mean: f64,
    pub rate_std: f64,
}

/// Curves of a full multi-run training experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTimingSummary {
    pub per_run: Vec<Vec<EpochStats>>,
    pub aggregate: Vec<AggregateRow>,
}

fn episode(
    cfg: &SpikeTimingConfig,
    run: u32,
    epoch: u32,
    index: u32,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut rng = stream(cfg.seed, StreamKind::Episode, run, epoch, index);
    let spikes = poisson_input(cfg.rate_hz, cfg.steps, cfg.dt_ms, &mut rng)?;
    let targets = targets_from_inputs(&spikes);
    let inputs = Array2::from_shape_vec((cfg.steps, 1), spikes)
        .expect("spike train length matches step count");
    let targets =
        Array2::from_shape_vec((cfg.steps, 1), targets).expect("target length matches step count");
    Ok((inputs, targets))
}

/// Train `n_runs` independent networks and aggregate their curves.
///
/// Both the weight initialization and the episode streams are keyed only by
/// `(seed, run, epoch, index)`, never by the model, so two model variants run
/// with the same config see identical initial weights and identical episodes:
/// their curves are paired sample by sample.
pub fn run_spike_timing<M: Model>(
    model: &M,
    cfg: &SpikeTimingConfig,
) -> Result<SpikeTimingSummary> {
    cfg.validate()?;
    let mut per_run = Vec::with_capacity(cfg.n_runs as usize);
    for run in 0..cfg.n_runs {
        let mut rng = stream(cfg.seed, StreamKind::WeightInit, run, 0, 0);
        let mut net = Network::random(
            model.clone(),
            1,
            cfg.n_hidden,
            1,
            cfg.kappa,
            cfg.init_scale,
            &mut rng,
        );
        let curve = train(
            &mut net,
            &cfg.train,
            LearningSignalMode::Exact,
            cfg.dt_ms,
            |epoch, index| episode(cfg, run, epoch, index),
        )?;
        per_run.push(curve);
    }

    let rows = per_run[0].len();
    let mut aggregate = Vec::with_capacity(rows);
    for e in 0..rows {
        let mses: Vec<f64> = per_run.iter().map(|c| c[e].mse_mean).collect();
        let rates: Vec<f64> = per_run.iter().map(|c| c[e].rate_mean).collect();
        let (mse_mean, mse_std) = mean_std(&mses);
        let (rate_mean, rate_std) = mean_std(&rates);
        aggregate.push(AggregateRow {
            epoch: per_run[0][e].epoch,
            mse_mean,
            mse_std,
            rate_mean,
            rate_std,
        });
    }
    Ok(SpikeTimingSummary { per_run, aggregate })
}
