//! Learning signals and the gradient assembly of e-prop.
//!
//! The weight gradient factorizes into a per-neuron learning signal and a
//! per-synapse eligibility trace:
//!
//! ```text
//! dE/dw_ij = sum_t  L[j][t] * e[i][j][t]
//! ```
//!
//! With the exact learning signal `L[j][t] = dE/dz_j^t` (the total derivative
//! through the readout, the recurrent currents, and every reset pathway) this
//! is an identity with backpropagation through time; the cheaper modes replace
//! `L` with a constant or with feedback-weighted instantaneous errors while the
//! trace machinery stays untouched.

use ndarray::Array2;

use crate::engine::EpisodeRecording;
use crate::error::{Result, SimError};
use crate::model::Model;
use crate::network::{Gradients, Network};

/// How the per-neuron learning signal is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningSignalMode {
    /// `L[j][t] = c` for every neuron and step.
    Constant(f64),
    /// Total derivative `dE/dz_j^t`, computed by a backward sweep over the
    /// recorded episode. Makes the factorized gradient equal to BPTT.
    Exact,
    /// Online approximation: readout errors fed back through the readout
    /// weights, `L[j][t] = sum_k w_out[j][k] * f_k^t`, where `f` is the
    /// kappa-filtered instantaneous error.
    SymmetricFeedback,
}

fn check_targets(rec: &EpisodeRecording, targets: &Array2<f64>) -> Result<()> {
    if targets.dim() != rec.readout.dim() {
        return Err(SimError::ContractViolation(format!(
            "targets shape {:?} does not match readout shape {:?}",
            targets.dim(),
            rec.readout.dim()
        )));
    }
    Ok(())
}

/// Per-neuron, per-step learning signal `[t, j]` for a recorded episode.
pub fn learning_signal<M: Model>(
    net: &Network<M>,
    rec: &EpisodeRecording,
    targets: &Array2<f64>,
    mode: LearningSignalMode,
) -> Result<Array2<f64>> {
    let steps = rec.n_steps();
    let n_h = rec.n_hidden();
    match mode {
        LearningSignalMode::Constant(c) => Ok(Array2::from_elem((steps, n_h), c)),
        LearningSignalMode::SymmetricFeedback => {
            check_targets(rec, targets)?;
            let mut ls = Array2::zeros((steps, n_h));
            let mut filtered = vec![0.0; net.n_out];
            for t in 0..steps {
                for (k, f) in filtered.iter_mut().enumerate() {
                    *f = net.kappa * *f + (rec.readout[[t, k]] - targets[[t, k]]);
                }
                for j in 0..n_h {
                    let mut acc = 0.0;
                    for (k, &f) in filtered.iter().enumerate() {
                        acc += net.w_out[[j, k]] * f;
                    }
                    ls[[t, j]] = acc;
                }
            }
            Ok(ls)
        }
        LearningSignalMode::Exact => {
            if !rec.full() {
                return Err(SimError::ModeUnavailable(
                    "exact learning signal needs an episode recorded with per-synapse traces"
                        .into(),
                ));
            }
            check_targets(rec, targets)?;
            Ok(exact_learning_signal(net, rec, targets))
        }
    }
}

/// Backward sweep computing `L[j][t] = dE/dz_j^t`.
///
/// `c[t][j]` is the adjoint of the neuron state. The spike adjoint collects
/// four pathways: the readout (with its future decays), the recurrent currents
/// into every other neuron at the next step, the neuron's own reset at the
/// next step, and, for models with a refractory-end reset, the delayed reset
/// `z_ref_delay` steps later.
fn exact_learning_signal<M: Model>(
    net: &Network<M>,
    rec: &EpisodeRecording,
    targets: &Array2<f64>,
) -> Array2<f64> {
    let steps = rec.n_steps();
    let n_h = rec.n_hidden();
    let gain = net.model.input_gain();
    let delay = net.model.z_ref_delay();

    // dE/dy_k^t = err^t + kappa * dE/dy_k^{t+1}
    let mut yhat = Array2::zeros((steps, net.n_out));
    for k in 0..net.n_out {
        let mut acc = 0.0;
        for t in (0..steps).rev() {
            acc = net.kappa * acc + (rec.readout[[t, k]] - targets[[t, k]]);
            yhat[[t, k]] = acc;
        }
    }

    // State adjoints for t = 0 ..= steps; row `steps` stays zero (nothing
    // downstream of the final state).
    let mut c = vec![[0.0f64; 2]; (steps + 1) * n_h];
    let mut ls = Array2::zeros((steps, n_h));

    for t in (0..steps).rev() {
        for j in 0..n_h {
            let view = rec.step_view(t, j, delay);

            let mut a = 0.0;
            for k in 0..net.n_out {
                a += net.w_out[[j, k]] * yhat[[t, k]];
            }
            for i in 0..n_h {
                a += net.w_rec[[j, i]] * gain * c[(t + 1) * n_h + i][0];
            }
            let dz = net.model.dstep_dz(&view);
            let cn = c[(t + 1) * n_h + j];
            a += dz[0] * cn[0] + dz[1] * cn[1];
            if let Some(d) = delay {
                let td = t + d as usize;
                if d > 0 && td < steps {
                    let view_ref = rec.step_view(td, j, delay);
                    let dzr = net.model.dstep_dz_ref(&view_ref);
                    let cr = c[(td + 1) * n_h + j];
                    a += dzr[0] * cr[0] + dzr[1] * cr[1];
                } else if d == 0 {
                    let dzr = net.model.dstep_dz_ref(&view);
                    a += dzr[0] * cn[0] + dzr[1] * cn[1];
                }
            }
            ls[[t, j]] = a;

            let jac = net.model.state_jacobian(&view);
            let h = rec.h[[t, j]];
            c[t * n_h + j] = [
                jac[0][0] * cn[0] + jac[1][0] * cn[1] + a * h,
                jac[0][1] * cn[0] + jac[1][1] * cn[1],
            ];
        }
    }
    ls
}

/// Add `sum_t L[j][t] * e[i][j][t]` into the input and recurrent gradient
/// accumulators. Readout weights have no eligibility trace and are handled by
/// [`readout_gradient`]. The recurrent diagonal is skipped: those synapses do
/// not exist.
pub fn accumulate_gradient<M: Model>(
    net: &Network<M>,
    rec: &EpisodeRecording,
    ls: &Array2<f64>,
    acc: &mut Gradients,
) -> Result<()> {
    let traces = rec.traces.as_ref().ok_or_else(|| {
        SimError::ModeUnavailable("gradient accumulation needs recorded traces".into())
    })?;
    let steps = rec.n_steps();
    let n_h = rec.n_hidden();
    let n_in = net.n_in;
    if ls.dim() != (steps, n_h) {
        return Err(SimError::ContractViolation(format!(
            "learning signal shape {:?} does not match episode ({steps}, {n_h})",
            ls.dim()
        )));
    }
    for t in 0..steps {
        for i in 0..n_in {
            for j in 0..n_h {
                acc.w_in[[i, j]] += ls[[t, j]] * traces[[t, i, j]];
            }
        }
        for i in 0..n_h {
            for j in 0..n_h {
                if i != j {
                    acc.w_rec[[i, j]] += ls[[t, j]] * traces[[t, n_in + i, j]];
                }
            }
        }
    }
    Ok(())
}

/// Readout weight gradient `dE/dw_out[j][k] = sum_t err_k^t * F_j^t`, where
/// `F` is the kappa-filtered hidden spike train.
pub fn readout_gradient<M: Model>(
    net: &Network<M>,
    rec: &EpisodeRecording,
    targets: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_targets(rec, targets)?;
    let steps = rec.n_steps();
    let n_h = rec.n_hidden();
    let mut grad = Array2::zeros((n_h, net.n_out));
    let mut filtered = vec![0.0; n_h];
    for t in 0..steps {
        for (j, f) in filtered.iter_mut().enumerate() {
            *f = net.kappa * *f + rec.z[[t, j]];
        }
        for k in 0..net.n_out {
            let err = rec.readout[[t, k]] - targets[[t, k]];
            for (j, &f) in filtered.iter().enumerate() {
                grad[[j, k]] += err * f;
            }
        }
    }
    Ok(grad)
}

/// Full e-prop gradient of one recorded episode: factorized hidden-weight
/// gradients plus the readout gradient. Stores the learning signal on the
/// recording for inspection.
pub fn episode_gradient<M: Model>(
    net: &Network<M>,
    rec: &mut EpisodeRecording,
    targets: &Array2<f64>,
    mode: LearningSignalMode,
) -> Result<Gradients> {
    let ls = learning_signal(net, rec, targets, mode)?;
    let mut grads = Gradients::zeros_like(net);
    accumulate_gradient(net, rec, &ls, &mut grads)?;
    grads.w_out = readout_gradient(net, rec, targets)?;
    rec.learning_signals = Some(ls);
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_episode;
    use crate::model::Lif;
    use crate::neuron::LifParams;
    use ndarray::Array3;

    fn small_net() -> Network<Lif> {
        let mut net = Network::zeros(
            Lif {
                params: LifParams::default(),
            },
            1,
            2,
            1,
            0.9,
        );
        net.w_in[[0, 0]] = 1.0;
        net.w_rec[[0, 1]] = 0.8;
        net.w_out[[0, 0]] = 0.5;
        net.w_out[[1, 0]] = -0.25;
        net
    }

    fn pulse_inputs(steps: usize) -> Array2<f64> {
        let mut x = Array2::zeros((steps, 1));
        for t in (0..steps).step_by(7) {
            x[[t, 0]] = 1.0;
        }
        x
    }

    #[test]
    fn constant_mode_fills_the_matrix() {
        let net = small_net();
        let rec = run_episode(&net, &pulse_inputs(12), false).unwrap();
        let ls = learning_signal(
            &net,
            &rec,
            &Array2::zeros((12, 1)),
            LearningSignalMode::Constant(1.0),
        )
        .unwrap();
        assert!(ls.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn exact_mode_requires_full_recording() {
        let net = small_net();
        let rec = run_episode(&net, &pulse_inputs(12), false).unwrap();
        let err = learning_signal(
            &net,
            &rec,
            &Array2::zeros((12, 1)),
            LearningSignalMode::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::ModeUnavailable(_)));
    }

    #[test]
    fn exact_mode_is_zero_when_readout_matches_targets() {
        let net = small_net();
        let rec = run_episode(&net, &pulse_inputs(12), true).unwrap();
        let targets = rec.readout.clone();
        let ls = learning_signal(&net, &rec, &targets, LearningSignalMode::Exact).unwrap();
        assert!(ls.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn symmetric_feedback_is_zero_with_zero_readout_weights() {
        let mut net = small_net();
        net.w_out.fill(0.0);
        let rec = run_episode(&net, &pulse_inputs(12), true).unwrap();
        let targets = Array2::from_elem((12, 1), 0.3);
        let ls =
            learning_signal(&net, &rec, &targets, LearningSignalMode::SymmetricFeedback).unwrap();
        assert!(ls.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn accumulation_is_the_plain_weighted_sum() {
        let net = small_net();
        let mut rec = run_episode(&net, &pulse_inputs(3), true).unwrap();
        // Overwrite traces with hand values to pin the arithmetic.
        let mut traces = Array3::zeros((3, 3, 2));
        traces[[0, 0, 0]] = 0.2;
        traces[[1, 0, 0]] = -0.5;
        traces[[2, 0, 0]] = 0.3;
        rec.traces = Some(traces);
        let ls = Array2::from_elem((3, 2), 1.0);
        let mut acc = Gradients::zeros_like(&net);
        accumulate_gradient(&net, &rec, &ls, &mut acc).unwrap();
        assert!((acc.w_in[[0, 0]] - 0.0).abs() < 1e-15);
        assert_eq!(acc.w_rec[[0, 1]], 0.0);
    }

    #[test]
    fn missing_traces_block_accumulation() {
        let net = small_net();
        let rec = run_episode(&net, &pulse_inputs(3), false).unwrap();
        let ls = Array2::zeros((3, 2));
        let mut acc = Gradients::zeros_like(&net);
        assert!(matches!(
            accumulate_gradient(&net, &rec, &ls, &mut acc),
            Err(SimError::ModeUnavailable(_))
        ));
    }

    #[test]
    fn episode_gradient_attaches_learning_signals() {
        let net = small_net();
        let mut rec = run_episode(&net, &pulse_inputs(12), true).unwrap();
        let targets = Array2::from_elem((12, 1), 0.1);
        let grads = episode_gradient(&net, &mut rec, &targets, LearningSignalMode::Exact).unwrap();
        assert!(rec.learning_signals.is_some());
        assert!(grads.max_abs() > 0.0);
        // Diagonal of the recurrent gradient must stay structurally zero.
        assert_eq!(grads.w_rec[[0, 0]], 0.0);
        assert_eq!(grads.w_rec[[1, 1]], 0.0);
    }
}
