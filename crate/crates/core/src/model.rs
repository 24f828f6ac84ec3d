//! A common interface over the three neuron models.
//!
//! The simulation engine and the gradient sweeps only ever talk to this trait.
//! Backward passes work off a recorded tape, so the Jacobian-side methods take
//! a [`StepView`] of plain recorded quantities instead of a live state. All
//! Jacobians hold the spike constant; the spike pathway itself is handled
//! separately through the pseudo-derivative and the `dstep_dz*` partials.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eligibility::{
    izh_elig_step, lif_elig_step, stdp_lif_elig_step, EligVecIzh, EligVecLif,
};
use crate::error::{Result, SimError};
use crate::neuron::{
    izh_pseudo_derivative, izh_spike, izh_step, lif_pseudo_derivative, lif_spike, lif_step,
    stdp_lif_pseudo_derivative, stdp_lif_step, IzhParams, IzhState, LifParams, LifState,
};

/// Which neuron model a network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lif,
    StdpLif,
    Izhikevich,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Lif => "lif",
            ModelKind::StdpLif => "stdp-lif",
            ModelKind::Izhikevich => "izhikevich",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lif" => Ok(ModelKind::Lif),
            "stdp-lif" => Ok(ModelKind::StdpLif),
            "izhikevich" => Ok(ModelKind::Izhikevich),
            other => Err(SimError::InvalidConfig(format!(
                "unknown model '{other}' (expected lif, stdp-lif or izhikevich)"
            ))),
        }
    }
}

/// Recorded per-neuron quantities of one step, as seen by backward sweeps.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepView {
    /// Membrane before the update.
    pub v: f64,
    /// Recovery variable before the update (0 for LIF-family models).
    pub u: f64,
    /// Spike emitted this step.
    pub z: f64,
    /// Spike emitted `dt_ref` steps earlier (0 for models without that slot).
    pub z_ref: f64,
}

pub trait Model: Clone + Send + Sync {
    type State: Clone + fmt::Debug + Send;
    type Elig: Clone + Copy + Default + fmt::Debug + Send;

    fn kind(&self) -> ModelKind;
    fn initial_state(&self) -> Self::State;
    fn spike(&self, s: &Self::State) -> f64;
    fn step(&self, s: &Self::State, z: f64, input: f64) -> Result<Self::State>;
    fn pseudo_derivative(&self, s: &Self::State) -> f64;
    /// One forward step of a synapse's eligibility vector; `s` is the
    /// postsynaptic state before the update.
    fn elig_step(&self, ev: Self::Elig, s: &Self::State, z_post: f64, z_pre: f64) -> Self::Elig;
    fn elig_v(&self, ev: Self::Elig) -> f64;
    fn elig_u(&self, ev: Self::Elig) -> Option<f64>;
    fn membrane(&self, s: &Self::State) -> f64;
    fn recovery(&self, s: &Self::State) -> Option<f64>;
    /// Spike from `dt_ref` steps ago as stored in the live state, for models
    /// that reset at refractory end.
    fn z_ref_of(&self, s: &Self::State, z_now: f64) -> f64;

    /// Coefficient of the input current in the membrane row of the update.
    fn input_gain(&self) -> f64;
    /// State-to-state Jacobian of the update, spike held constant.
    /// Layout: `[[dv'/dv, dv'/du], [du'/dv, du'/du]]`.
    fn state_jacobian(&self, view: &StepView) -> [[f64; 2]; 2];
    /// Partial of the next state w.r.t. this step's own spike.
    fn dstep_dz(&self, view: &StepView) -> [f64; 2];
    /// Steps between a spike and the reset it triggers at refractory end, for
    /// models that have that second reset slot.
    fn z_ref_delay(&self) -> Option<u32>;
    /// Partial of the next state w.r.t. the delayed spike slot, evaluated at
    /// the step where that reset applies.
    fn dstep_dz_ref(&self, view: &StepView) -> [f64; 2];
}

/// Leaky integrate-and-fire with soft reset.
#[derive(Debug, Clone)]
pub struct Lif {
    pub params: LifParams,
}

/// LIF variant with hard resets at the spike and at refractory end, and a
/// negative pseudo-derivative during the refractory period.
#[derive(Debug, Clone)]
pub struct StdpLif {
    pub params: LifParams,
}

/// Izhikevich regular-spiking neuron, forward Euler.
#[derive(Debug, Clone)]
pub struct Izhikevich {
    pub params: IzhParams,
}

impl Model for Lif {
    type State = LifState;
    type Elig = EligVecLif;

    fn kind(&self) -> ModelKind {
        ModelKind::Lif
    }

    fn initial_state(&self) -> LifState {
        LifState::new(&self.params)
    }

    fn spike(&self, s: &LifState) -> f64 {
        lif_spike(s, &self.params)
    }

    fn step(&self, s: &LifState, z: f64, input: f64) -> Result<LifState> {
        lif_step(s, z, input, &self.params)
    }

    fn pseudo_derivative(&self, s: &LifState) -> f64 {
        lif_pseudo_derivative(s, &self.params)
    }

    fn elig_step(&self, ev: EligVecLif, _s: &LifState, _z_post: f64, z_pre: f64) -> EligVecLif {
        lif_elig_step(ev, z_pre, &self.params)
    }

    fn elig_v(&self, ev: EligVecLif) -> f64 {
        ev.eps
    }

    fn elig_u(&self, _ev: EligVecLif) -> Option<f64> {
        None
    }

    fn membrane(&self, s: &LifState) -> f64 {
        s.v
    }

    fn recovery(&self, _s: &LifState) -> Option<f64> {
        None
    }

    fn z_ref_of(&self, _s: &LifState, _z_now: f64) -> f64 {
        0.0
    }

    fn input_gain(&self) -> f64 {
        1.0
    }

    fn state_jacobian(&self, _view: &StepView) -> [[f64; 2]; 2] {
        [[self.params.alpha, 0.0], [0.0, 0.0]]
    }

    fn dstep_dz(&self, _view: &StepView) -> [f64; 2] {
        [-self.params.v_thr, 0.0]
    }

    fn z_ref_delay(&self) -> Option<u32> {
        None
    }

    fn dstep_dz_ref(&self, _view: &StepView) -> [f64; 2] {
        [0.0, 0.0]
    }
}

impl Model for StdpLif {
    type State = LifState;
    type Elig = EligVecLif;

    fn kind(&self) -> ModelKind {
        ModelKind::StdpLif
    }

    fn initial_state(&self) -> LifState {
        LifState::new(&self.params)
    }

    fn spike(&self, s: &LifState) -> f64 {
        lif_spike(s, &self.params)
    }

    fn step(&self, s: &LifState, z: f64, input: f64) -> Result<LifState> {
        stdp_lif_step(s, z, input, &self.params)
    }

    fn pseudo_derivative(&self, s: &LifState) -> f64 {
        stdp_lif_pseudo_derivative(s, &self.params)
    }

    fn elig_step(&self, ev: EligVecLif, s: &LifState, z_post: f64, z_pre: f64) -> EligVecLif {
        let z_ref = s.z_ref(&self.params, z_post);
        stdp_lif_elig_step(ev, z_post, z_ref, z_pre, &self.params)
    }

    fn elig_v(&self, ev: EligVecLif) -> f64 {
        ev.eps
    }

    fn elig_u(&self, _ev: EligVecLif) -> Option<f64> {
        None
    }

    fn membrane(&self, s: &LifState) -> f64 {
        s.v
    }

    fn recovery(&self, _s: &LifState) -> Option<f64> {
        None
    }

    fn z_ref_of(&self, s: &LifState, z_now: f64) -> f64 {
        s.z_ref(&self.params, z_now)
    }

    fn input_gain(&self) -> f64 {
        1.0
    }

    fn state_jacobian(&self, view: &StepView) -> [[f64; 2]; 2] {
        let keep = (1.0 - view.z - view.z_ref).max(0.0);
        [[self.params.alpha * keep, 0.0], [0.0, 0.0]]
    }

    fn dstep_dz(&self, view: &StepView) -> [f64; 2] {
        [-self.params.alpha * view.v, 0.0]
    }

    fn z_ref_delay(&self) -> Option<u32> {
        Some(self.params.dt_ref)
    }

    fn dstep_dz_ref(&self, view: &StepView) -> [f64; 2] {
        [-self.params.alpha * view.v, 0.0]
    }
}

impl Model for Izhikevich {
    type State = IzhState;
    type Elig = EligVecIzh;

    fn kind(&self) -> ModelKind {
        ModelKind::Izhikevich
    }

    fn initial_state(&self) -> IzhState {
        IzhState::default()
    }

    fn spike(&self, s: &IzhState) -> f64 {
        izh_spike(s, &self.params)
    }

    fn step(&self, s: &IzhState, z: f64, input: f64) -> Result<IzhState> {
        izh_step(s, z, input, &self.params)
    }

    fn pseudo_derivative(&self, s: &IzhState) -> f64 {
        izh_pseudo_derivative(s, &self.params)
    }

    fn elig_step(&self, ev: EligVecIzh, s: &IzhState, z_post: f64, z_pre: f64) -> EligVecIzh {
        izh_elig_step(ev, s.v, z_post, z_pre, &self.params)
    }

    fn elig_v(&self, ev: EligVecIzh) -> f64 {
        ev.eps_v
    }

    fn elig_u(&self, ev: EligVecIzh) -> Option<f64> {
        Some(ev.eps_u)
    }

    fn membrane(&self, s: &IzhState) -> f64 {
        s.v
    }

    fn recovery(&self, s: &IzhState) -> Option<f64> {
        Some(s.u)
    }

    fn z_ref_of(&self, _s: &IzhState, _z_now: f64) -> f64 {
        0.0
    }

    fn input_gain(&self) -> f64 {
        self.params.dt
    }

    fn state_jacobian(&self, view: &StepView) -> [[f64; 2]; 2] {
        let dt = self.params.dt;
        let keep = 1.0 - view.z;
        [
            [keep * (1.0 + (0.08 * view.v + 5.0) * dt), -dt],
            [0.004 * dt * keep, 1.0 - 0.02 * dt],
        ]
    }

    fn dstep_dz(&self, view: &StepView) -> [f64; 2] {
        let p = &self.params;
        let dt = p.dt;
        let dv = view.v - p.v_reset;
        let vt = view.v - dv * view.z;
        [
            (1.0 + (0.08 * vt + 5.0) * dt) * -dv - dt * p.u_jump,
            0.004 * dt * -dv + (1.0 - 0.02 * dt) * p.u_jump,
        ]
    }

    fn z_ref_delay(&self) -> Option<u32> {
        None
    }

    fn dstep_dz_ref(&self, _view: &StepView) -> [f64; 2] {
        [0.0, 0.0]
    }
}
