//! Two neurons, one synapse: a minimal demonstration that the eligibility
//! trace of a single synapse mirrors spike-timing-dependent plasticity.
//!
//! Random input currents drive both cells. During the first phase the
//! presynaptic cell gets the stronger drive and the postsynaptic drive ramps
//! up after each presynaptic spike, so the post cell tends to fire shortly
//! *after* the pre cell (pre-before-post pairings). After the phase split the
//! roles are mirrored and the pre cell is coaxed into firing shortly after the
//! post cell. With a constant positive learning signal the cumulative gradient
//! of the synapse then rises during the first phase and falls during the
//! second.
//!
//! Current schedule, evaluated every step with `t_zi`/`t_zo` the latest pre-
//! and postsynaptic spike times ("never" counts as older than any time):
//!
//! ```text
//! t < split*T:  I_i ~ U(1, 15)
//!               I_o ~ U(1, 5),   but U(0, 1) * (t - t_zi)  if t_zi > t_zo
//! otherwise:    I_i ~ U(1, 5),   but U(0, 1) * (t - t_zo)  if t_zo > t_zi
//!               I_o ~ U(1, 15)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::Model;
use crate::neuron::LifParams;
use crate::rng::{stream, StreamKind};

/// Parameters of the two-neuron protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoNeuronConfig {
    pub steps: usize,
    /// Fraction of the episode spent in the strengthening phase.
    pub phase_split: f64,
    /// Weight of the single pre -> post synapse.
    pub synapse_weight: f64,
    /// Current range of the strongly driven cell.
    pub drive_range: (f64, f64),
    /// Baseline current range of the other cell.
    pub baseline_range: (f64, f64),
    pub seed: u64,
}

impl Default for TwoNeuronConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            phase_split: 0.45,
            synapse_weight: 0.1,
            drive_range: (1.0, 15.0),
            baseline_range: (1.0, 5.0),
            seed: 0,
        }
    }
}

impl TwoNeuronConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phase_split > 0.0 && self.phase_split < 1.0) {
            return Err(SimError::InvalidConfig(
                "phase split must lie strictly between 0 and 1".into(),
            ));
        }
        if self.steps < 10 {
            return Err(SimError::InvalidConfig(
                "two-neuron runs need at least 10 steps".into(),
            ));
        }
        for (lo, hi) in [self.drive_range, self.baseline_range] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(SimError::InvalidConfig(
                    "current ranges must be finite with lo < hi".into(),
                ));
            }
        }
        Ok(())
    }

    /// First step of the weakening phase.
    pub fn phase2_start(&self) -> usize {
        (self.phase_split * self.steps as f64).ceil() as usize
    }
}

/// LIF-family parameters scaled to the current ranges of this protocol. The
/// drive currents are of order 10, so the threshold sits far above the unit
/// threshold used for synaptically driven networks; the baseline range U(1, 5)
/// saturates a leaky membrane well below it, so the weakly driven cell can
/// only cross threshold with the synapse's help. The long refractory period
/// gives late presynaptic spikes a wide window to land in.
pub fn demo_lif_params() -> LifParams {
    LifParams {
        v_thr: 45.0,
        dt_ref: 16,
        ..LifParams::default()
    }
}

/// Protocol settings for the LIF-family run of this demonstration, paired with
/// [`demo_lif_params`]. The synapse weight exceeds the threshold, so a
/// presynaptic spike drives the partner cell over threshold on the next step
/// whenever it is excitable. During the strengthening phase that yields clean
/// pre-before-post pairings one step apart, and because the spike wipes the
/// eligibility carried into it, no weakening trace can appear there. During
/// the weakening phase the strongly driven post cell spends much of its time
/// refractory; the relay is blocked and ramp-driven presynaptic spikes land
/// inside the refractory window instead, which is exactly the pairing that
/// produces negative traces. Runs are longer than the default so both phases
/// collect many pairing events.
pub fn demo_lif_config() -> TwoNeuronConfig {
    TwoNeuronConfig {
        steps: 4000,
        synapse_weight: 46.0,
        ..TwoNeuronConfig::default()
    }
}

/// Draw the external currents `(I_i, I_o)` for step `t`.
///
/// `t_zi` and `t_zo` are the most recent pre-/postsynaptic spike times, `None`
/// while a cell has not spiked yet; `None` never compares greater. Exactly two
/// uniform draws are consumed per call, whichever branch is taken.
pub fn alg2_input_schedule<R: Rng + ?Sized>(
    cfg: &TwoNeuronConfig,
    t: usize,
    t_zi: Option<usize>,
    t_zo: Option<usize>,
    rng: &mut R,
) -> (f64, f64) {
    let (d_lo, d_hi) = cfg.drive_range;
    let (b_lo, b_hi) = cfg.baseline_range;
    if (t as f64) < cfg.phase_split * cfg.steps as f64 {
        let i_i = rng.gen_range(d_lo..d_hi);
        let i_o = if t_zi > t_zo {
            rng.gen_range(0.0..1.0) * (t - t_zi.unwrap()) as f64
        } else {
            rng.gen_range(b_lo..b_hi)
        };
        (i_i, i_o)
    } else {
        let i_i = if t_zo > t_zi {
            rng.gen_range(0.0..1.0) * (t - t_zo.unwrap()) as f64
        } else {
            rng.gen_range(b_lo..b_hi)
        };
        let i_o = rng.gen_range(d_lo..d_hi);
        (i_i, i_o)
    }
}

/// Per-step series of one two-neuron run. `eps_u` is only present for models
/// with a recovery variable.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoNeuronSeries {
    pub v_pre: Vec<f64>,
    pub v_post: Vec<f64>,
    pub z_pre: Vec<f64>,
    pub z_post: Vec<f64>,
    pub eps_v: Vec<f64>,
    pub eps_u: Option<Vec<f64>>,
    pub trace: Vec<f64>,
    /// Running sum of the traces: the gradient under a constant learning
    /// signal of +1.
    pub grad_cum: Vec<f64>,
}

impl TwoNeuronSeries {
    pub fn n_steps(&self) -> usize {
        self.trace.len()
    }
}

/// Simulate the protocol with the given neuron model; `run` selects an
/// independent random stream under the config seed.
pub fn run_two_neuron<M: Model>(
    model: &M,
    cfg: &TwoNeuronConfig,
    run: u32,
) -> Result<TwoNeuronSeries> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, StreamKind::TwoNeuron, run, 0, 0);
    let mut s_pre = model.initial_state();
    let mut s_post = model.initial_state();
    let mut ev = M::Elig::default();
    let has_u = model.recovery(&s_post).is_some();
    let mut t_zi: Option<usize> = None;
    let mut t_zo: Option<usize> = None;

    let mut out = TwoNeuronSeries {
        v_pre: Vec::with_capacity(cfg.steps),
        v_post: Vec::with_capacity(cfg.steps),
        z_pre: Vec::with_capacity(cfg.steps),
        z_post: Vec::with_capacity(cfg.steps),
        eps_v: Vec::with_capacity(cfg.steps),
        eps_u: has_u.then(|| Vec::with_capacity(cfg.steps)),
        trace: Vec::with_capacity(cfg.steps),
        grad_cum: Vec::with_capacity(cfg.steps),
    };

    let mut cum = 0.0;
    for t in 0..cfg.steps {
        let z_i = model.spike(&s_pre);
        let z_o = model.spike(&s_post);
        if z_i != 0.0 {
            t_zi = Some(t);
        }
        if z_o != 0.0 {
            t_zo = Some(t);
        }
        let (i_i, mut i_o) = alg2_input_schedule(cfg, t, t_zi, t_zo, &mut rng);
        i_o += cfg.synapse_weight * z_i;

        let h_post = model.pseudo_derivative(&s_post);
        let eps_v = model.elig_v(ev);
        out.v_pre.push(model.membrane(&s_pre));
        out.v_post.push(model.membrane(&s_post));
        out.z_pre.push(z_i);
        out.z_post.push(z_o);
        out.eps_v.push(eps_v);
        if let Some(eu) = out.eps_u.as_mut() {
            eu.push(model.elig_u(ev).unwrap_or(0.0));
        }
        let e = h_post * eps_v;
        cum += e;
        out.trace.push(e);
        out.grad_cum.push(cum);

        ev = model.elig_step(ev, &s_post, z_o, z_i);
        if !model.elig_v(ev).is_finite() {
            return Err(SimError::NumericalDivergence(format!(
                "two-neuron eligibility vector at step {t}"
            )));
        }
        s_pre = model.step(&s_pre, z_i, i_i)?;
        s_post = model.step(&s_post, z_o, i_o)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Izhikevich, Lif, StdpLif};
    use crate::neuron::IzhParams;

    fn cfg() -> TwoNeuronConfig {
        TwoNeuronConfig::default()
    }

    #[test]
    fn schedule_draws_from_the_plain_ranges_before_any_spike() {
        let c = cfg();
        let mut rng = stream(1, StreamKind::TwoNeuron, 0, 0, 0);
        for _ in 0..500 {
            let (i_i, i_o) = alg2_input_schedule(&c, 100, None, None, &mut rng);
            assert!((1.0..15.0).contains(&i_i));
            assert!((1.0..5.0).contains(&i_o));
        }
    }

    #[test]
    fn recent_pre_spike_turns_the_post_drive_into_a_ramp() {
        let c = cfg();
        let mut rng = stream(2, StreamKind::TwoNeuron, 0, 0, 0);
        let mut seen_above_baseline_floor = false;
        for _ in 0..500 {
            // Pre spiked at 10, post never: elapsed factor is t - 10 = 3.
            let (_, i_o) = alg2_input_schedule(&c, 13, Some(10), None, &mut rng);
            assert!((0.0..3.0).contains(&i_o));
            seen_above_baseline_floor |= i_o > 1.0;
        }
        assert!(seen_above_baseline_floor, "ramp should exceed 1 sometimes");
        // At the spike step itself the ramp is exactly zero.
        let (_, i_o) = alg2_input_schedule(&c, 10, Some(10), None, &mut rng);
        assert_eq!(i_o, 0.0);
    }

    #[test]
    fn phase_boundary_belongs_to_the_second_phase() {
        let c = cfg();
        assert_eq!(c.phase2_start(), 450);
        let mut rng = stream(3, StreamKind::TwoNeuron, 0, 0, 0);
        let mut above = 0;
        for _ in 0..500 {
            // In phase 2 the post cell takes the strong drive U(1, 15).
            let (_, i_o) = alg2_input_schedule(&c, 450, None, None, &mut rng);
            assert!((1.0..15.0).contains(&i_o));
            above += (i_o >= 5.0) as u32;
        }
        assert!(above > 0, "drive range must exceed the baseline range");
        for _ in 0..500 {
            let (_, i_o) = alg2_input_schedule(&c, 449, None, None, &mut rng);
            assert!((1.0..5.0).contains(&i_o));
        }
    }

    #[test]
    fn mirrored_phase_ramps_the_pre_cell_after_a_post_spike() {
        let c = cfg();
        let mut rng = stream(4, StreamKind::TwoNeuron, 0, 0, 0);
        for _ in 0..200 {
            let (i_i, i_o) = alg2_input_schedule(&c, 500, Some(480), Some(495), &mut rng);
            assert!((0.0..5.0).contains(&i_i), "U(0,1) * 5 ramp, got {i_i}");
            assert!((1.0..15.0).contains(&i_o));
        }
    }

    #[test]
    fn runs_are_deterministic_per_seed_and_run_index() {
        let model = Izhikevich {
            params: IzhParams::default(),
        };
        let c = TwoNeuronConfig {
            steps: 300,
            ..cfg()
        };
        let a = run_two_neuron(&model, &c, 3).unwrap();
        let b = run_two_neuron(&model, &c, 3).unwrap();
        assert_eq!(a, b);
        let other = run_two_neuron(&model, &c, 4).unwrap();
        assert_ne!(a.v_pre, other.v_pre);
    }

    #[test]
    fn izhikevich_cells_actually_fire_in_both_phases() {
        let model = Izhikevich {
            params: IzhParams::default(),
        };
        let c = cfg();
        let s = run_two_neuron(&model, &c, 0).unwrap();
        let split = c.phase2_start();
        let pre_phase1: f64 = s.z_pre[..split].iter().sum();
        let post_phase2: f64 = s.z_post[split..].iter().sum();
        assert!(pre_phase1 > 0.0, "pre cell silent in phase 1");
        assert!(post_phase2 > 0.0, "post cell silent in phase 2");
        assert_eq!(s.n_steps(), c.steps);
    }

    #[test]
    fn plain_lif_substitution_gives_a_non_decreasing_gradient() {
        let model = Lif {
            params: demo_lif_params(),
        };
        for run in 0..5 {
            let s = run_two_neuron(&model, &demo_lif_config(), run).unwrap();
            assert!(s.trace.iter().all(|&e| e >= 0.0));
            assert!(s.grad_cum.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn stdp_lif_traces_weaken_only_in_the_weakening_phase() {
        let model = StdpLif {
            params: demo_lif_params(),
        };
        let c = demo_lif_config();
        let split = c.phase2_start();
        for run in 0..5 {
            let s = run_two_neuron(&model, &c, run).unwrap();
            assert!(
                s.trace[..split].iter().all(|&e| e >= 0.0),
                "run {run}: weakening trace before the phase split"
            );
            assert!(
                s.trace[split..].iter().any(|&e| e < 0.0),
                "run {run}: expected at least one pre-after-post pairing in phase 2"
            );
        }
    }

    #[test]
    fn stdp_lif_synapse_relays_presynaptic_spikes_when_excitable() {
        let model = StdpLif {
            params: demo_lif_params(),
        };
        let c = demo_lif_config();
        let s = run_two_neuron(&model, &c, 0).unwrap();
        let split = c.phase2_start();
        let mut relayed = 0;
        let mut pre_spikes = 0;
        for t in 0..split - 1 {
            if s.z_pre[t] == 1.0 {
                pre_spikes += 1;
                relayed += (s.z_post[t + 1] == 1.0) as u32;
            }
        }
        assert!(pre_spikes > 50, "drive too weak, {pre_spikes} pre spikes");
        assert_eq!(
            relayed, pre_spikes,
            "every phase-1 presynaptic spike should fire the partner"
        );
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let model = Lif {
            params: demo_lif_params(),
        };
        let bad = TwoNeuronConfig {
            phase_split: 1.0,
            ..cfg()
        };
        assert!(run_two_neuron(&model, &bad, 0).is_err());
        let bad = TwoNeuronConfig { steps: 5, ..cfg() };
        assert!(run_two_neuron(&model, &bad, 0).is_err());
        let bad = TwoNeuronConfig {
            drive_range: (3.0, 3.0),
            ..cfg()
        };
        assert!(run_two_neuron(&model, &bad, 0).is_err());
    }
}
