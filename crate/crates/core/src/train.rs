//! Batched training of a network on generated episodes.
//!
//! One epoch simulates a batch of episodes with the current weights, averages
//! their factorized gradients, and applies a single Adam update. Row `e` of
//! the returned curve therefore describes the batch *before* update `e` was
//! applied; with `epochs = 0` the loop degenerates to a single evaluation row
//! and the weights are never touched.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::engine::{episode_mse, firing_rate_hz, run_episode};
use crate::error::{Result, SimError};
use crate::learning::{episode_gradient, LearningSignalMode};
use crate::model::Model;
use crate::network::{Gradients, Network};
use crate::optim::{lr_schedule, AdamParams, AdamState};

/// Hyperparameters of the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: u32,
    pub lr: f64,
    /// Learning-rate multiplier applied every `lr_interval` epochs.
    pub lr_decay: f64,
    pub lr_interval: u32,
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 16,
            lr: 0.003,
            lr_decay: 0.7,
            lr_interval: 100,
            adam: AdamParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(SimError::InvalidConfig(
                "batch size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite())
            || !(self.lr_decay > 0.0 && self.lr_decay.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "learning rate and decay must be positive".into(),
            ));
        }
        if self.lr_interval == 0 {
            return Err(SimError::InvalidConfig(
                "learning rate decay interval must be positive".into(),
            ));
        }
        self.adam.validate()
    }
}

/// Batch statistics of one epoch, taken before that epoch's weight update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u32,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub rate_mean: f64,
    pub rate_std: f64,
    pub lr: f64,
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Train `net` in place. `episodes(epoch, index)` must hand out the input and
/// target arrays for one episode; `dt_ms` is the physical step length used for
/// firing rates.
pub fn train<M, F>(
    net: &mut Network<M>,
    cfg: &TrainConfig,
    mode: LearningSignalMode,
    dt_ms: f64,
    mut episodes: F,
) -> Result<Vec<EpochStats>>
where
    M: Model,
    F: FnMut(u32, u32) -> Result<(Array2<f64>, Array2<f64>)>,
{
    cfg.validate()?;
    net.validate()?;
    let training = cfg.epochs > 0;
    let rows = cfg.epochs.max(1);
    let mut opt = AdamState::new(net, cfg.adam);
    let mut curve = Vec::with_capacity(rows as usize);

    for epoch in 0..rows {
        let mut grads = Gradients::zeros_like(net);
        let mut mses = Vec::with_capacity(cfg.batch_size as usize);
        let mut rates = Vec::with_capacity(cfg.batch_size as usize);

        for b in 0..cfg.batch_size {
            let (inputs, targets) = episodes(epoch, b)?;
            let mut rec = run_episode(net, &inputs, training)?;
            mses.push(episode_mse(&rec.readout, &targets)?);
            rates.push(firing_rate_hz(&rec, dt_ms));
            if training {
                let g = episode_gradient(net, &mut rec, &targets, mode)?;
                grads.scaled_add(1.0, &g);
            }
        }

        let lr = lr_schedule(cfg.lr, cfg.lr_decay, cfg.lr_interval, epoch);
        let (mse_mean, mse_std) = mean_std(&mses);
        let (rate_mean, rate_std) = mean_std(&rates);
        curve.push(EpochStats {
            epoch,
            mse_mean,
            mse_std,
            rate_mean,
            rate_std,
            lr,
        });

        if training {
            grads.scale(1.0 / cfg.batch_size as f64);
            opt.step(net, &grads, lr);
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lif;
    use crate::neuron::LifParams;
    use crate::rng::{stream, StreamKind};

    fn fixed_episode(steps: usize) -> (Array2<f64>, Array2<f64>) {
        let mut inputs = Array2::zeros((steps, 1));
        for t in (0..steps).step_by(4) {
            inputs[[t, 0]] = 1.0;
        }
        let targets = Array2::from_elem((steps, 1), 0.3);
        (inputs, targets)
    }

    fn random_net(seed: u64) -> Network<Lif> {
        let mut rng = stream(seed, StreamKind::WeightInit, 0, 0, 0);
        Network::random(
            Lif {
                params: LifParams::default(),
            },
            1,
            4,
            1,
            0.9,
            1.0,
            &mut rng,
        )
    }

    #[test]
    fn zero_epochs_evaluates_once_without_touching_weights() {
        let mut net = random_net(5);
        let before = net.w_in.clone();
        let cfg = TrainConfig {
            epochs: 0,
            batch_size: 3,
            ..Default::default()
        };
        let curve = train(&mut net, &cfg, LearningSignalMode::Exact, 1.0, |_, _| {
            Ok(fixed_episode(30))
        })
        .unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].epoch, 0);
        assert_eq!(net.w_in, before);
    }

    #[test]
    fn training_lowers_the_loss_on_a_fixed_task() {
        let mut net = random_net(2);
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 2,
            lr: 0.01,
            ..Default::default()
        };
        let curve = train(&mut net, &cfg, LearningSignalMode::Exact, 1.0, |_, _| {
            Ok(fixed_episode(40))
        })
        .unwrap();
        assert_eq!(curve.len(), 60);
        assert!(
            curve[59].mse_mean < 0.5 * curve[0].mse_mean,
            "mse went {} -> {}",
            curve[0].mse_mean,
            curve[59].mse_mean
        );
    }

    #[test]
    fn identical_configurations_produce_identical_curves() {
        let run = || {
            let mut net = random_net(8);
            let cfg = TrainConfig {
                epochs: 5,
                batch_size: 2,
                ..Default::default()
            };
            train(&mut net, &cfg, LearningSignalMode::Exact, 1.0, |e, b| {
                let mut rng = stream(8, StreamKind::Episode, 0, e, b);
                let mut inputs = Array2::zeros((30, 1));
                for t in 0..30 {
                    inputs[[t, 0]] = rand::Rng::gen_bool(&mut rng, 0.1) as u8 as f64;
                }
                Ok((inputs, Array2::from_elem((30, 1), 0.2)))
            })
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn lr_column_follows_the_schedule() {
        let mut net = random_net(1);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 1,
            lr: 0.003,
            lr_decay: 0.5,
            lr_interval: 2,
            ..Default::default()
        };
        let curve = train(
            &mut net,
            &cfg,
            LearningSignalMode::Constant(0.0),
            1.0,
            |_, _| Ok(fixed_episode(10)),
        )
        .unwrap();
        assert_eq!(curve[0].lr, 0.003);
        assert_eq!(curve[1].lr, 0.003);
        assert_eq!(curve[2].lr, 0.0015);
    }

    #[test]
    fn invalid_configs_are_rejected_up_front() {
        let mut net = random_net(0);
        let cfg = TrainConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(matches!(
            train(&mut net, &cfg, LearningSignalMode::Exact, 1.0, |_, _| Ok(
                fixed_episode(5)
            )),
            Err(SimError::InvalidConfig(_))
        ));
    }
}
