//! Reference gradients by backpropagation through time, plus finite
//! differences.
//!
//! This module deliberately shares no code with the eligibility machinery: it
//! unrolls the forward pass with its own loop and walks the adjoints backward
//! through the recorded tape. Agreement between [`bptt_gradient`] and the
//! factorized learning-signal/trace gradient is therefore a meaningful check
//! of both implementations.
//!
//! The adjoint of the two-component neuron state obeys
//!
//! ```text
//! c^t = J^t' c^{t+1} + (dE/dz^t) * h^t * [1, 0]
//! ```
//!
//! where `J` holds spikes constant and `dE/dz` collects the readout path, the
//! recurrent currents one step later, the neuron's own reset, and any delayed
//! refractory-end reset. Weight gradients then read off the membrane adjoint:
//! `dE/dw_ij = sum_t c_j^{t+1}[0] * gain * pre_i^t`.

use ndarray::Array2;

use crate::error::{Result, SimError};
use crate::model::{Model, StepView};
use crate::network::{Gradients, Network};

/// The forward pass unrolled into plain arrays, recomputed here independently
/// of the simulation engine.
#[derive(Debug, Clone)]
pub struct UnrolledTape {
    pub inputs: Array2<f64>,
    pub v: Array2<f64>,
    pub u: Array2<f64>,
    pub z: Array2<f64>,
    pub h: Array2<f64>,
    pub readout: Array2<f64>,
}

impl UnrolledTape {
    pub fn n_steps(&self) -> usize {
        self.z.nrows()
    }

    fn step_view(&self, t: usize, j: usize, z_ref_delay: Option<u32>) -> StepView {
        let z_ref = match z_ref_delay {
            None => 0.0,
            Some(0) => self.z[[t, j]],
            Some(d) if t >= d as usize => self.z[[t - d as usize, j]],
            Some(_) => 0.0,
        };
        StepView {
            v: self.v[[t, j]],
            u: self.u[[t, j]],
            z: self.z[[t, j]],
            z_ref,
        }
    }
}

/// Unroll an episode without any eligibility bookkeeping.
pub fn unroll<M: Model>(net: &Network<M>, inputs: &Array2<f64>) -> Result<UnrolledTape> {
    net.validate()?;
    if inputs.ncols() != net.n_in {
        return Err(SimError::ContractViolation(format!(
            "inputs have {} columns, network expects {}",
            inputs.ncols(),
            net.n_in
        )));
    }
    let steps = inputs.nrows();
    let n_h = net.n_hidden;
    let mut tape = UnrolledTape {
        inputs: inputs.clone(),
        v: Array2::zeros((steps, n_h)),
        u: Array2::zeros((steps, n_h)),
        z: Array2::zeros((steps, n_h)),
        h: Array2::zeros((steps, n_h)),
        readout: Array2::zeros((steps, net.n_out)),
    };
    let mut states: Vec<M::State> = (0..n_h).map(|_| net.model.initial_state()).collect();
    let mut y = vec![0.0; net.n_out];
    for t in 0..steps {
        for (j, s) in states.iter().enumerate() {
            tape.v[[t, j]] = net.model.membrane(s);
            tape.u[[t, j]] = net.model.recovery(s).unwrap_or(0.0);
            tape.z[[t, j]] = net.model.spike(s);
            tape.h[[t, j]] = net.model.pseudo_derivative(s);
        }
        for (k, yk) in y.iter_mut().enumerate() {
            let mut drive = 0.0;
            for j in 0..n_h {
                drive += net.w_out[[j, k]] * tape.z[[t, j]];
            }
            *yk = net.kappa * *yk + drive;
            tape.readout[[t, k]] = *yk;
        }
        for (j, s) in states.iter_mut().enumerate() {
            let mut current = 0.0;
            for i in 0..net.n_in {
                current += net.w_in[[i, j]] * inputs[[t, i]];
            }
            for i in 0..n_h {
                current += net.w_rec[[i, j]] * tape.z[[t, i]];
            }
            *s = net.model.step(s, tape.z[[t, j]], current)?;
        }
    }
    Ok(tape)
}

/// Exact gradient of the quadratic readout loss by backpropagation through
/// the unrolled episode.
pub fn bptt_gradient<M: Model>(
    net: &Network<M>,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
) -> Result<Gradients> {
    let tape = unroll(net, inputs)?;
    if targets.dim() != tape.readout.dim() {
        return Err(SimError::ContractViolation(format!(
            "targets shape {:?} does not match readout shape {:?}",
            targets.dim(),
            tape.readout.dim()
        )));
    }
    let steps = tape.n_steps();
    let n_h = net.n_hidden;
    let gain = net.model.input_gain();
    let delay = net.model.z_ref_delay();

    let mut yhat = Array2::zeros((steps, net.n_out));
    for k in 0..net.n_out {
        let mut acc = 0.0;
        for t in (0..steps).rev() {
            acc = net.kappa * acc + (tape.readout[[t, k]] - targets[[t, k]]);
            yhat[[t, k]] = acc;
        }
    }

    let mut grads = Gradients::zeros_like(net);
    let mut c = vec![[0.0f64; 2]; (steps + 1) * n_h];

    for t in (0..steps).rev() {
        for j in 0..n_h {
            for k in 0..net.n_out {
                grads.w_out[[j, k]] += yhat[[t, k]] * tape.z[[t, j]];
            }

            let view = tape.step_view(t, j, delay);
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
                    let view_ref = tape.step_view(td, j, delay);
                    let dzr = net.model.dstep_dz_ref(&view_ref);
                    let cr = c[(td + 1) * n_h + j];
                    a += dzr[0] * cr[0] + dzr[1] * cr[1];
                } else if d == 0 {
                    let dzr = net.model.dstep_dz_ref(&view);
                    a += dzr[0] * cn[0] + dzr[1] * cn[1];
                }
            }

            let jac = net.model.state_jacobian(&view);
            c[t * n_h + j] = [
                jac[0][0] * cn[0] + jac[1][0] * cn[1] + a * tape.h[[t, j]],
                jac[0][1] * cn[0] + jac[1][1] * cn[1],
            ];

            // Weight gradients: the current at step t lands in the state at
            // t + 1, whose membrane adjoint is already final.
            let cm = cn[0] * gain;
            if cm != 0.0 {
                for i in 0..net.n_in {
                    grads.w_in[[i, j]] += cm * inputs[[t, i]];
                }
                for i in 0..n_h {
                    if i != j {
                        grads.w_rec[[i, j]] += cm * tape.z[[t, i]];
                    }
                }
            }
        }
    }
    Ok(grads)
}

/// One weight coordinate in a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRef {
    In(usize, usize),
    Rec(usize, usize),
    Out(usize, usize),
}

fn perturbed<M: Model>(net: &Network<M>, wref: WeightRef, delta: f64) -> Network<M> {
    let mut n = net.clone();
    match wref {
        WeightRef::In(i, j) => n.w_in[[i, j]] += delta,
        WeightRef::Rec(i, j) => n.w_rec[[i, j]] += delta,
        WeightRef::Out(j, k) => n.w_out[[j, k]] += delta,
    }
    n
}

/// Result of a central finite difference through the full simulation.
#[derive(Debug, Clone, Copy)]
pub struct FdResult {
    pub value: f64,
    /// Whether the perturbation changed any spike, which makes the difference
    /// quotient meaningless for the smooth part of the dynamics.
    pub spike_flip: bool,
}

/// Central finite difference of the episode loss w.r.t. one weight.
pub fn finite_difference_loss<M: Model>(
    net: &Network<M>,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    wref: WeightRef,
    delta: f64,
) -> Result<FdResult> {
    if delta == 0.0 {
        return Err(SimError::ContractViolation(
            "finite difference step must be nonzero".into(),
        ));
    }
    let plus = unroll(&perturbed(net, wref, delta), inputs)?;
    let minus = unroll(&perturbed(net, wref, -delta), inputs)?;
    let loss = |tape: &UnrolledTape| -> f64 {
        tape.readout
            .iter()
            .zip(targets.iter())
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>()
            * 0.5
    };
    Ok(FdResult {
        value: (loss(&plus) - loss(&minus)) / (2.0 * delta),
        spike_flip: plus.z != minus.z,
    })
}

/// Central finite difference of every membrane trajectory w.r.t. one weight.
///
/// When the perturbation flips no spike, column `j` of the result is the true
/// sensitivity of neuron `j`'s membrane to that weight, and all other columns
/// are exactly zero; this is what the forward eligibility vectors claim to
/// track for subthreshold dynamics.
pub fn finite_difference_membrane<M: Model>(
    net: &Network<M>,
    inputs: &Array2<f64>,
    wref: WeightRef,
    delta: f64,
) -> Result<FdResult2> {
    if delta == 0.0 {
        return Err(SimError::ContractViolation(
            "finite difference step must be nonzero".into(),
        ));
    }
    let plus = unroll(&perturbed(net, wref, delta), inputs)?;
    let minus = unroll(&perturbed(net, wref, -delta), inputs)?;
    let dv = (&plus.v - &minus.v) / (2.0 * delta);
    Ok(FdResult2 {
        dv,
        spike_flip: plus.z != minus.z,
    })
}

/// Membrane sensitivities for every step and neuron.
#[derive(Debug, Clone)]
pub struct FdResult2 {
    pub dv: Array2<f64>,
    pub spike_flip: bool,
}

/// Worst relative disagreement between a gradient and its oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradComparison {
    /// Max of |g - o| / |o| over entries with |o| above the floor.
    pub max_rel: f64,
    /// Max of |g - o| over the remaining (near-zero oracle) entries.
    pub max_abs_small: f64,
}

pub fn compare_gradients(got: &Gradients, oracle: &Gradients, floor: f64) -> GradComparison {
    let mut cmp = GradComparison::default();
    let pairs = got
        .w_in
        .iter()
        .zip(oracle.w_in.iter())
        .chain(got.w_rec.iter().zip(oracle.w_rec.iter()))
        .chain(got.w_out.iter().zip(oracle.w_out.iter()));
    for (&g, &o) in pairs {
        if o.abs() > floor {
            cmp.max_rel = cmp.max_rel.max((g - o).abs() / o.abs());
        } else {
            cmp.max_abs_small = cmp.max_abs_small.max((g - o).abs());
        }
    }
    cmp
}
