//! Adam optimizer over the three weight matrices, plus the step-decay
//! learning-rate schedule used by the training experiments.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::Model;
use crate::network::{Gradients, Network};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(SimError::InvalidConfig(
                "adam betas must lie in [0, 1)".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SimError::InvalidConfig(
                "adam epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// First and second moment estimates for one weight matrix.
#[derive(Debug, Clone)]
struct Moments {
    m: Array2<f64>,
    v: Array2<f64>,
}

impl Moments {
    fn zeros(dim: (usize, usize)) -> Self {
        Self {
            m: Array2::zeros(dim),
            v: Array2::zeros(dim),
        }
    }

    fn apply(&mut self, w: &mut Array2<f64>, g: &Array2<f64>, p: &AdamParams, lr: f64, t: i32) {
        let bc1 = 1.0 - p.beta1.powi(t);
        let bc2 = 1.0 - p.beta2.powi(t);
        for ((m, v), (w, &g)) in self
            .m
            .iter_mut()
            .zip(self.v.iter_mut())
            .zip(w.iter_mut().zip(g.iter()))
        {
            *m = p.beta1 * *m + (1.0 - p.beta1) * g;
            *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + p.epsilon);
        }
    }
}

/// Optimizer state for a whole network.
#[derive(Debug, Clone)]
pub struct AdamState {
    params: AdamParams,
    w_in: Moments,
    w_rec: Moments,
    w_out: Moments,
    step_count: i32,
}

impl AdamState {
    pub fn new<M: Model>(net: &Network<M>, params: AdamParams) -> Self {
        Self {
            params,
            w_in: Moments::zeros(net.w_in.dim()),
            w_rec: Moments::zeros(net.w_rec.dim()),
            w_out: Moments::zeros(net.w_out.dim()),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> i32 {
        self.step_count
    }

    /// One Adam update of all three matrices. The recurrent diagonal is
    /// re-zeroed afterwards so rounding can never resurrect self-synapses.
    pub fn step<M: Model>(&mut self, net: &mut Network<M>, grads: &Gradients, lr: f64) {
        self.step_count += 1;
        let t = self.step_count;
        self.w_in
            .apply(&mut net.w_in, &grads.w_in, &self.params, lr, t);
        self.w_rec
            .apply(&mut net.w_rec, &grads.w_rec, &self.params, lr, t);
        self.w_out
            .apply(&mut net.w_out, &grads.w_out, &self.params, lr, t);
        net.clear_diagonal();
    }
}

/// Step-decay schedule: base rate multiplied by `decay` every `interval`
/// epochs.
pub fn lr_schedule(base: f64, decay: f64, interval: u32, epoch: u32) -> f64 {
    base * decay.powi((epoch / interval.max(1)) as i32)
}
