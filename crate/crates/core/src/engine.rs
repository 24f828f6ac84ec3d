//! Forward simulation of one episode.
//!
//! Step convention inside an episode of length `T`, for `t = 0 .. T-1`:
//!
//! ```text
//! z^t  = spike(s^t)                         hidden spikes
//! I^t  = w_in' x^t + w_rec' z^t             input currents
//! y^t  = kappa y^{t-1} + w_out' z^t         leaky readout  (y^{-1} = 0)
//! e^t  = h^t * eps^t                        eligibility traces
//! eps^{t+1} = jacobian-transport(eps^t) + injection(pre spike at t)
//! s^{t+1}   = step(s^t, z^t, I^t)
//! ```
//!
//! so recorded row `t` holds the state the spike was read from, the spike
//! itself, and the readout after absorbing that spike. Losses compare `y^t`
//! against `target^t` over the same range.

use ndarray::{Array2, Array3};

use crate::error::{Result, SimError};
use crate::model::{Model, StepView};
use crate::network::{readout_step, Network};

/// Full time series of one simulated episode.
///
/// The per-synapse tensors are indexed `[t, pre, post]` where `pre` runs over
/// inputs first and hidden neurons after (`pre = n_in + j` for hidden `j`).
/// They are only present when the episode was run with recording enabled.
#[derive(Debug, Clone)]
pub struct EpisodeRecording {
    pub inputs: Array2<f64>,
    /// Membrane potential before each update.
    pub v: Array2<f64>,
    /// Recovery variable, for models that have one.
    pub u: Option<Array2<f64>>,
    pub z: Array2<f64>,
    /// Pseudo-derivative at each step.
    pub h: Array2<f64>,
    pub currents: Array2<f64>,
    pub readout: Array2<f64>,
    pub traces: Option<Array3<f64>>,
    pub elig_v: Option<Array3<f64>>,
    pub elig_u: Option<Array3<f64>>,
    /// Filled in once a learning signal has been evaluated for this episode.
    pub learning_signals: Option<Array2<f64>>,
}

impl EpisodeRecording {
    pub fn n_steps(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.z.ncols()
    }

    pub fn spike_count(&self) -> usize {
        self.z.iter().filter(|&&z| z != 0.0).count()
    }

    /// Whether per-synapse tensors were recorded.
    pub fn full(&self) -> bool {
        self.traces.is_some()
    }

    /// Recorded quantities of neuron `j` at step `t`, with the delayed spike
    /// slot resolved from the spike history (spikes before the episode are 0).
    pub fn step_view(&self, t: usize, j: usize, z_ref_delay: Option<u32>) -> StepView {
        let z_ref = match z_ref_delay {
            None => 0.0,
            Some(d) => {
                let d = d as usize;
                if d == 0 {
                    self.z[[t, j]]
                } else if t >= d {
                    self.z[[t - d, j]]
                } else {
                    0.0
                }
            }
        };
        StepView {
            v: self.v[[t, j]],
            u: self.u.as_ref().map_or(0.0, |u| u[[t, j]]),
            z: self.z[[t, j]],
            z_ref,
        }
    }
}

/// Simulate one episode driven by `inputs` (`[t, i]`, binary spike trains).
///
/// With `record` set, per-synapse eligibility vectors and traces are kept for
/// every step; otherwise only the per-neuron series are stored. The run is a
/// pure function of the network and inputs.
pub fn run_episode<M: Model>(
    net: &Network<M>,
    inputs: &Array2<f64>,
    record: bool,
) -> Result<EpisodeRecording> {
    net.validate()?;
    if inputs.ncols() != net.n_in {
        return Err(SimError::ContractViolation(format!(
            "inputs have {} columns, network expects {}",
            inputs.ncols(),
            net.n_in
        )));
    }
    let steps = inputs.nrows();
    let (n_in, n_h, n_out) = (net.n_in, net.n_hidden, net.n_out);
    let n_pre = n_in + n_h;
    let has_u = net.model.recovery(&net.model.initial_state()).is_some();

    let mut states: Vec<M::State> = (0..n_h).map(|_| net.model.initial_state()).collect();
    let mut elig: Vec<M::Elig> = vec![M::Elig::default(); n_pre * n_h];
    let mut y = vec![0.0; n_out];

    let mut rec = EpisodeRecording {
        inputs: inputs.clone(),
        v: Array2::zeros((steps, n_h)),
        u: has_u.then(|| Array2::zeros((steps, n_h))),
        z: Array2::zeros((steps, n_h)),
        h: Array2::zeros((steps, n_h)),
        currents: Array2::zeros((steps, n_h)),
        readout: Array2::zeros((steps, n_out)),
        traces: record.then(|| Array3::zeros((steps, n_pre, n_h))),
        elig_v: record.then(|| Array3::zeros((steps, n_pre, n_h))),
        elig_u: (record && has_u).then(|| Array3::zeros((steps, n_pre, n_h))),
        learning_signals: None,
    };

    let mut z = vec![0.0; n_h];
    let mut h = vec![0.0; n_h];
    for t in 0..steps {
        for j in 0..n_h {
            z[j] = net.model.spike(&states[j]);
            h[j] = net.model.pseudo_derivative(&states[j]);
            rec.v[[t, j]] = net.model.membrane(&states[j]);
            if let Some(u) = rec.u.as_mut() {
                u[[t, j]] = net.model.recovery(&states[j]).unwrap_or(0.0);
            }
            rec.z[[t, j]] = z[j];
            rec.h[[t, j]] = h[j];
        }

        readout_step(&mut y, &z, &net.w_out, net.kappa);
        for (k, &yk) in y.iter().enumerate() {
            rec.readout[[t, k]] = yk;
        }

        for j in 0..n_h {
            let mut current = 0.0;
            for i in 0..n_in {
                let x = inputs[[t, i]];
                if x != 0.0 {
                    current += net.w_in[[i, j]] * x;
                }
            }
            for (i, &zi) in z.iter().enumerate() {
                if zi != 0.0 {
                    current += net.w_rec[[i, j]] * zi;
                }
            }
            rec.currents[[t, j]] = current;
        }

        for p in 0..n_pre {
            let z_pre = if p < n_in {
                inputs[[t, p]]
            } else {
                z[p - n_in]
            };
            for j in 0..n_h {
                let ev = elig[p * n_h + j];
                if record {
                    let eps_v = net.model.elig_v(ev);
                    rec.elig_v.as_mut().unwrap()[[t, p, j]] = eps_v;
                    if let Some(eu) = rec.elig_u.as_mut() {
                        eu[[t, p, j]] = net.model.elig_u(ev).unwrap_or(0.0);
                    }
                    rec.traces.as_mut().unwrap()[[t, p, j]] = h[j] * eps_v;
                }
                let next = net.model.elig_step(ev, &states[j], z[j], z_pre);
                if !net.model.elig_v(next).is_finite() {
                    return Err(SimError::NumericalDivergence(format!(
                        "eligibility vector of synapse ({p} -> {j}) at step {t}"
                    )));
                }
                elig[p * n_h + j] = next;
            }
        }

        for j in 0..n_h {
            states[j] = net.model.step(&states[j], z[j], rec.currents[[t, j]])?;
        }
    }

    Ok(rec)
}

/// Quadratic episode loss `E = 1/2 sum_t sum_k (y - target)^2`.
pub fn episode_loss(readout: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    if readout.dim() != targets.dim() {
        return Err(SimError::ContractViolation(format!(
            "readout shape {:?} does not match target shape {:?}",
            readout.dim(),
            targets.dim()
        )));
    }
    Ok(readout
        .iter()
        .zip(targets.iter())
        .map(|(y, t)| (y - t) * (y - t))
        .sum::<f64>()
        * 0.5)
}

/// Mean squared readout error over all steps and outputs.
pub fn episode_mse(readout: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    let n = readout.len().max(1) as f64;
    Ok(2.0 * episode_loss(readout, targets)? / n)
}

/// Mean hidden firing rate in Hz: total spikes / (neurons * duration), with
/// step length `dt_ms`.
pub fn firing_rate_hz(rec: &EpisodeRecording, dt_ms: f64) -> f64 {
    let steps = rec.n_steps();
    let n = rec.n_hidden();
    if steps == 0 || n == 0 {
        return 0.0;
    }
    rec.spike_count() as f64 / (n as f64 * steps as f64 * dt_ms * 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Izhikevich, Lif, StdpLif};
    use crate::neuron::{IzhParams, LifParams};
    use approx::assert_relative_eq;

    fn lif_net(n_in: usize, n_h: usize, n_out: usize) -> Network<Lif> {
        Network::zeros(
            Lif {
                params: LifParams::default(),
            },
            n_in,
            n_h,
            n_out,
            0.9,
        )
    }

    #[test]
    fn dead_network_stays_silent() {
        let net = lif_net(2, 3, 1);
        let inputs = Array2::zeros((50, 2));
        let rec = run_episode(&net, &inputs, true).unwrap();
        assert_eq!(rec.spike_count(), 0);
        assert!(rec.readout.iter().all(|&y| y == 0.0));
        assert!(rec.traces.unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn single_input_spike_drives_one_hidden_spike_next_step() {
        let mut net = lif_net(1, 1, 1);
        net.w_in[[0, 0]] = 1.0;
        net.w_out[[0, 0]] = 2.0;
        let mut inputs = Array2::zeros((6, 1));
        inputs[[0, 0]] = 1.0;
        let rec = run_episode(&net, &inputs, true).unwrap();
        // Current arrives at t = 0, so the membrane crosses threshold at t = 1.
        assert_eq!(rec.z[[0, 0]], 0.0);
        assert_eq!(rec.z[[1, 0]], 1.0);
        assert_relative_eq!(rec.v[[1, 0]], 1.0);
        // Readout absorbs the spike in the same row and decays afterwards.
        assert_relative_eq!(rec.readout[[1, 0]], 2.0);
        assert_relative_eq!(rec.readout[[2, 0]], 1.8, max_relative = 1e-12);
        // Eligibility vector of the input synapse carries the input spike.
        let ev = rec.elig_v.unwrap();
        assert_eq!(ev[[0, 0, 0]], 0.0);
        assert_relative_eq!(ev[[1, 0, 0]], 1.0);
        assert_relative_eq!(ev[[2, 0, 0]], 0.9, max_relative = 1e-12);
    }

    #[test]
    fn identical_inputs_are_bit_reproducible() {
        use crate::rng::{stream, StreamKind};
        let mut rng = stream(11, StreamKind::WeightInit, 0, 0, 0);
        let net = Network::random(
            StdpLif {
                params: LifParams::default(),
            },
            2,
            4,
            1,
            0.9,
            1.0,
            &mut rng,
        );
        let mut inputs = Array2::zeros((40, 2));
        for t in 0..40 {
            inputs[[t, t % 2]] = ((t * 7) % 3 == 0) as u8 as f64;
        }
        let a = run_episode(&net, &inputs, true).unwrap();
        let b = run_episode(&net, &inputs, true).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(a.z, b.z);
        assert_eq!(a.readout, b.readout);
        assert_eq!(a.traces.unwrap(), b.traces.unwrap());
    }

    #[test]
    fn izhikevich_network_records_recovery() {
        let net = Network::zeros(
            Izhikevich {
                params: IzhParams::default(),
            },
            1,
            2,
            1,
            0.9,
        );
        let inputs = Array2::zeros((10, 1));
        let rec = run_episode(&net, &inputs, false).unwrap();
        let u = rec.u.as_ref().unwrap();
        assert_relative_eq!(u[[0, 0]], -14.0);
        assert_relative_eq!(rec.v[[9, 1]], -70.0, epsilon = 1e-9);
        assert!(!rec.full());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = lif_net(2, 3, 1);
        let inputs = Array2::zeros((10, 3));
        assert!(matches!(
            run_episode(&net, &inputs, false),
            Err(SimError::ContractViolation(_))
        ));
    }

    #[test]
    fn loss_and_mse_agree_on_scaling() {
        let y = Array2::from_shape_vec((4, 1), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let t = Array2::zeros((4, 1));
        assert_relative_eq!(episode_loss(&y, &t).unwrap(), 0.5);
        assert_relative_eq!(episode_mse(&y, &t).unwrap(), 0.25);
        assert!(episode_loss(&y, &Array2::zeros((3, 1))).is_err());
    }

    #[test]
    fn firing_rate_is_spikes_per_neuron_second() {
        let mut net = lif_net(1, 2, 1);
        net.w_in[[0, 0]] = 1.0;
        let mut inputs = Array2::zeros((100, 1));
        inputs[[0, 0]] = 1.0;
        let rec = run_episode(&net, &inputs, false).unwrap();
        assert_eq!(rec.spike_count(), 1);
        // 1 spike / (2 neurons * 0.1 s) = 5 Hz.
        assert_relative_eq!(firing_rate_hz(&rec, 1.0), 5.0);
    }
}
