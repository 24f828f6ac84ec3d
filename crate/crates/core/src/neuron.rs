//! Discrete-time neuron models.
//!
//! Three models share one step convention: at step `t` the spike `z^t` is read
//! from the current state, then the state advances to `t+1` using `z^t` and the
//! input current `I^t`.
//!
//! Leaky integrate-and-fire (soft reset), with an absolute refractory period:
//!
//! ```text
//! z^t     = 0 if refractory, else H(v^t - v_thr)          (H(0) = 1)
//! v^{t+1} = alpha * v^t + I^t - z^t * v_thr
//! ```
//!
//! STDP-LIF: same spike rule, but the membrane is hard-reset both at the spike
//! itself and again when the refractory period ends (z_ref = z from `dt_ref`
//! steps ago):
//!
//! ```text
//! v^{t+1} = alpha * (1 - z^t - z_ref^t) * v^t + I^t       (factor clamped at 0)
//! ```
//!
//! Izhikevich (regular spiking, forward Euler with built-in reset):
//!
//! ```text
//! z^t  = H(v^t - 30)
//! v~   = v^t - (v^t + 65) * z^t,     u~ = u^t + 2 * z^t
//! v^{t+1} = v~ + dt * (0.04 v~^2 + 5 v~ + 140 - u~ + I^t)
//! u^{t+1} = u~ + dt * (0.004 v~ - 0.02 u~)
//! ```
//!
//! Each model has a pseudo-derivative h that stands in for dz/dv when a
//! gradient needs to pass through the spike function. For STDP-LIF, h is -gamma
//! during the refractory period; this is what gives its eligibility traces
//! their negative, spike-timing-sensitive part.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Parameters shared by the LIF and STDP-LIF models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifParams {
    /// Membrane decay per step, `0 <= alpha < 1`.
    pub alpha: f64,
    /// Spike threshold, `> 0`.
    pub v_thr: f64,
    /// Refractory period in steps.
    pub dt_ref: u32,
    /// Pseudo-derivative amplitude, `> 0`.
    pub gamma: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            alpha: 0.9,
            v_thr: 0.5,
            dt_ref: 3,
            gamma: 0.3,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "alpha must be in [0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.v_thr > 0.0 && self.v_thr.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "v_thr must be positive and finite, got {}",
                self.v_thr
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Parameters of the Izhikevich model.
///
/// `v_spike`, `v_reset` and `u_jump` are the published regular-spiking
/// constants; nothing in the config surface changes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IzhParams {
    /// Euler step in ms, `> 0`.
    pub dt: f64,
    /// Spike detection threshold in mV.
    pub v_spike: f64,
    /// Post-spike membrane reset in mV.
    pub v_reset: f64,
    /// Post-spike recovery increment.
    pub u_jump: f64,
    /// Pseudo-derivative amplitude, `> 0`.
    pub gamma: f64,
}

impl Default for IzhParams {
    fn default() -> Self {
        IzhParams {
            dt: 1.0,
            v_spike: 30.0,
            v_reset: -65.0,
            u_jump: 2.0,
            gamma: 0.3,
        }
    }
}

impl IzhParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// State of a LIF or STDP-LIF neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct LifState {
    /// Membrane potential.
    pub v: f64,
    /// Steps since the most recent spike (saturating). Starts at `dt_ref`, so
    /// a fresh neuron is not refractory.
    pub last_spike_age: u32,
    // Ring of the last dt_ref + 1 spike outputs, most recent first.
    history: VecDeque<u8>,
}

impl LifState {
    pub fn new(params: &LifParams) -> Self {
        LifState {
            v: 0.0,
            last_spike_age: params.dt_ref,
            history: std::iter::repeat_n(0, params.dt_ref as usize + 1).collect(),
        }
    }

    /// True while the neuron is still inside its refractory period.
    pub fn refractory(&self, params: &LifParams) -> bool {
        self.last_spike_age < params.dt_ref
    }

    /// The spike emitted `dt_ref` steps before the current one. `z_now` is the
    /// spike of the current step, returned verbatim when `dt_ref == 0`.
    pub fn z_ref(&self, params: &LifParams, z_now: f64) -> f64 {
        if params.dt_ref == 0 {
            z_now
        } else {
            self.history
                .get(params.dt_ref as usize - 1)
                .map_or(0.0, |&z| z as f64)
        }
    }

    fn advance(&mut self, z: f64) {
        let len = self.history.len();
        self.history.push_front(if z > 0.0 { 1 } else { 0 });
        self.history.truncate(len);
        self.last_spike_age = if z > 0.0 {
            0
        } else {
            self.last_spike_age.saturating_add(1)
        };
    }
}

/// State of an Izhikevich neuron. Starts at the resting fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IzhState {
    pub v: f64,
    pub u: f64,
}

impl Default for IzhState {
    fn default() -> Self {
        IzhState { v: -70.0, u: -14.0 }
    }
}

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SimError::NumericalDivergence(format!("{what} = {v}")))
    }
}

/// Spike output of a (STDP-)LIF neuron: 0 while refractory, else `H(v - v_thr)`
/// with `H(0) = 1`.
pub fn lif_spike(state: &LifState, params: &LifParams) -> f64 {
    if state.refractory(params) {
        0.0
    } else if state.v >= params.v_thr {
        1.0
    } else {
        0.0
    }
}

/// One LIF membrane update (soft reset by threshold subtraction).
pub fn lif_step(state: &LifState, z: f64, input: f64, params: &LifParams) -> Result<LifState> {
    let v = params.alpha * state.v + input - z * params.v_thr;
    let mut next = state.clone();
    next.v = check_finite(v, "lif membrane")?;
    next.advance(z);
    Ok(next)
}

/// One STDP-LIF membrane update: hard reset at the spike and again at the end
/// of the refractory period. The decay factor is clamped at zero so two
/// overlapping resets cannot flip the sign of the membrane.
pub fn stdp_lif_step(state: &LifState, z: f64, input: f64, params: &LifParams) -> Result<LifState> {
    let z_ref = state.z_ref(params, z);
    let keep = (1.0 - z - z_ref).max(0.0);
    let v = params.alpha * keep * state.v + input;
    let mut next = state.clone();
    next.v = check_finite(v, "stdp-lif membrane")?;
    next.advance(z);
    Ok(next)
}

/// Spike output of an Izhikevich neuron: `H(v - v_spike)`, no refractory gate.
pub fn izh_spike(state: &IzhState, params: &IzhParams) -> f64 {
    if state.v >= params.v_spike {
        1.0
    } else {
        0.0
    }
}

/// One forward-Euler Izhikevich update with the reset folded in before the
/// integration step.
pub fn izh_step(state: &IzhState, z: f64, input: f64, params: &IzhParams) -> Result<IzhState> {
    let vt = state.v - (state.v - params.v_reset) * z;
    let ut = state.u + params.u_jump * z;
    let dt = params.dt;
    let v = vt + dt * (0.04 * vt * vt + 5.0 * vt + 140.0 - ut + input);
    let u = ut + dt * (0.004 * vt - 0.02 * ut);
    Ok(IzhState {
        v: check_finite(v, "izhikevich membrane")?,
        u: check_finite(u, "izhikevich recovery")?,
    })
}

/// LIF pseudo-derivative: 0 while refractory, else a triangle of height `gamma`
/// centred on the threshold.
pub fn lif_pseudo_derivative(state: &LifState, params: &LifParams) -> f64 {
    if state.refractory(params) {
        0.0
    } else {
        params.gamma * (1.0 - ((state.v - params.v_thr) / params.v_thr).abs()).max(0.0)
    }
}

/// STDP-LIF pseudo-derivative: `-gamma` while refractory (this is the sign that
/// lets recent-post / late-pre pairings weaken a synapse), else the LIF triangle.
pub fn stdp_lif_pseudo_derivative(state: &LifState, params: &LifParams) -> f64 {
    if state.refractory(params) {
        -params.gamma
    } else {
        params.gamma * (1.0 - ((state.v - params.v_thr) / params.v_thr).abs()).max(0.0)
    }
}

/// Izhikevich pseudo-derivative: `gamma * exp((min(v, v_spike) - v_spike) / v_spike)`,
/// strictly positive and clamped at `gamma` above threshold.
pub fn izh_pseudo_derivative(state: &IzhState, params: &IzhParams) -> f64 {
    params.gamma * ((state.v.min(params.v_spike) - params.v_spike) / params.v_spike).exp()
}
