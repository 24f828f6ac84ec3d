//! Per-synapse eligibility vectors and traces.
//!
//! An eligibility vector carries the forward sensitivity of the postsynaptic
//! state to one synaptic weight. It evolves with the (spike-held-constant)
//! state Jacobian of the postsynaptic neuron and picks up the presynaptic
//! spike as an injection term:
//!
//! ```text
//! LIF:       eps'   = alpha * eps + z_pre
//! STDP-LIF:  eps'   = alpha * (1 - z_post - z_ref) * eps + z_pre   (factor >= 0)
//! Izhikevich:
//!   eps_v'  = (1 - z_post) * (1 + (0.08 v_post + 5) dt) * eps_v - dt * eps_u + dt * z_pre
//!   eps_u'  = 0.004 dt * (1 - z_post) * eps_v + (1 - 0.02 dt) * eps_u
//! ```
//!
//! The eligibility trace contracts the vector with the pseudo-derivative of
//! the postsynaptic neuron: `e = h * eps_v`. The recovery component of the
//! Izhikevich vector never appears in the trace because the spike function
//! reads only the membrane.

use crate::neuron::{IzhParams, LifParams};

/// Eligibility vector of a synapse onto a LIF or STDP-LIF neuron.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EligVecLif {
    pub eps: f64,
}

/// Eligibility vector of a synapse onto an Izhikevich neuron.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EligVecIzh {
    pub eps_v: f64,
    pub eps_u: f64,
}

/// One forward step of a LIF eligibility vector.
///
/// The reset term of the LIF membrane has no membrane derivative (the spike is
/// held constant there), so the vector only decays and integrates presynaptic
/// spikes; it can never become negative.
pub fn lif_elig_step(ev: EligVecLif, z_pre: f64, params: &LifParams) -> EligVecLif {
    EligVecLif {
        eps: params.alpha * ev.eps + z_pre,
    }
}

/// One forward step of an STDP-LIF eligibility vector. Both hard resets zero
/// the inherited sensitivity, exactly as they zero the membrane.
pub fn stdp_lif_elig_step(
    ev: EligVecLif,
    z_post: f64,
    z_post_ref: f64,
    z_pre: f64,
    params: &LifParams,
) -> EligVecLif {
    let keep = (1.0 - z_post - z_post_ref).max(0.0);
    EligVecLif {
        eps: params.alpha * keep * ev.eps + z_pre,
    }
}

/// One forward step of an Izhikevich eligibility vector. `v_post` is the
/// membrane before the update. A postsynaptic spike wipes the membrane
/// component down to `-dt * eps_u`: the recovery eligibility survives the
/// reset and re-enters with negative sign.
pub fn izh_elig_step(
    ev: EligVecIzh,
    v_post: f64,
    z_post: f64,
    z_pre: f64,
    params: &IzhParams,
) -> EligVecIzh {
    let dt = params.dt;
    let keep = 1.0 - z_post;
    let eps_v = keep * (1.0 + (0.08 * v_post + 5.0) * dt) * ev.eps_v - dt * ev.eps_u + dt * z_pre;
    let eps_u = 0.004 * dt * keep * ev.eps_v + (1.0 - 0.02 * dt) * ev.eps_u;
    EligVecIzh { eps_v, eps_u }
}

/// Eligibility trace: pseudo-derivative times the membrane component of the
/// eligibility vector.
pub fn trace(h: f64, eps_v: f64) -> f64 {
    h * eps_v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lif_elig_examples() {
        let p = LifParams::default();
        let ev = lif_elig_step(EligVecLif { eps: 0.0 }, 1.0, &p);
        assert_eq!(ev.eps, 1.0);
        let ev = lif_elig_step(EligVecLif { eps: 1.0 }, 0.0, &p);
        assert_relative_eq!(ev.eps, 0.9, max_relative = 1e-12);
        let ev = lif_elig_step(EligVecLif { eps: 0.5 }, 1.0, &p);
        assert_relative_eq!(ev.eps, 1.45, max_relative = 1e-12);
    }

    #[test]
    fn stdp_lif_elig_examples() {
        let p = LifParams::default();
        // Postsynaptic spike wipes the vector.
        let ev = stdp_lif_elig_step(EligVecLif { eps: 0.7 }, 1.0, 0.0, 0.0, &p);
        assert_eq!(ev.eps, 0.0);
        // Refractory-end reset wipes it too, but a simultaneous presynaptic
        // spike still injects.
        let ev = stdp_lif_elig_step(EligVecLif { eps: 0.7 }, 0.0, 1.0, 1.0, &p);
        assert_eq!(ev.eps, 1.0);
        // Plain decay.
        let ev = stdp_lif_elig_step(EligVecLif { eps: 0.5 }, 0.0, 0.0, 0.0, &p);
        assert_relative_eq!(ev.eps, 0.45, max_relative = 1e-12);
    }

    #[test]
    fn izh_elig_examples() {
        let p = IzhParams::default();
        // Postsynaptic spike: membrane component flips to -dt * eps_u.
        let ev = izh_elig_step(
            EligVecIzh {
                eps_v: 0.4,
                eps_u: 0.1,
            },
            35.0,
            1.0,
            0.0,
            &p,
        );
        assert_relative_eq!(ev.eps_v, -0.1, max_relative = 1e-12);
        assert_relative_eq!(ev.eps_u, 0.098, max_relative = 1e-12);

        // No activity at rest: pure Jacobian transport.
        let ev = izh_elig_step(
            EligVecIzh {
                eps_v: 1.0,
                eps_u: 0.0,
            },
            -70.0,
            0.0,
            0.0,
            &p,
        );
        assert_relative_eq!(ev.eps_v, 0.4, max_relative = 1e-12);
        assert_relative_eq!(ev.eps_u, 0.004, max_relative = 1e-12);

        // Presynaptic spike injects dt into the membrane component.
        let ev = izh_elig_step(EligVecIzh::default(), -70.0, 0.0, 1.0, &p);
        assert_relative_eq!(ev.eps_v, 1.0, max_relative = 1e-12);
        assert_eq!(ev.eps_u, 0.0);
    }

    #[test]
    fn trace_examples() {
        assert_relative_eq!(trace(0.3, 1.0), 0.3);
        assert_relative_eq!(trace(-0.3, 1.0), -0.3);
        assert_eq!(trace(0.0, 5.0), 0.0);
    }

    proptest! {
        /// A LIF eligibility vector (and hence trace, since h >= 0) stays
        /// non-negative for any spike sequence.
        #[test]
        fn lif_elig_never_negative(pre in prop::collection::vec(prop::bool::ANY, 0..200)) {
            let p = LifParams::default();
            let mut ev = EligVecLif::default();
            for z in pre {
                ev = lif_elig_step(ev, if z { 1.0 } else { 0.0 }, &p);
                prop_assert!(ev.eps >= 0.0);
            }
        }

        /// Same for STDP-LIF: the clamp keeps the decay factor in {0, 1} so the
        /// vector itself never goes negative; only the trace can (through h).
        #[test]
        fn stdp_elig_never_negative(
            events in prop::collection::vec((prop::bool::ANY, prop::bool::ANY, prop::bool::ANY), 0..200)
        ) {
            let p = LifParams::default();
            let mut ev = EligVecLif::default();
            for (z_post, z_ref, z_pre) in events {
                ev = stdp_lif_elig_step(
                    ev,
                    if z_post { 1.0 } else { 0.0 },
                    if z_ref { 1.0 } else { 0.0 },
                    if z_pre { 1.0 } else { 0.0 },
                    &p,
                );
                prop_assert!(ev.eps >= 0.0);
            }
        }
    }

    #[test]
    fn izh_elig_decays_to_zero_without_activity() {
        // Near rest the membrane eligibility relaxes fast; the recovery
        // component follows on its slower time constant.
        let p = IzhParams::default();
        let mut ev = EligVecIzh {
            eps_v: 1.0,
            eps_u: 0.5,
        };
        for _ in 0..2000 {
            ev = izh_elig_step(ev, -70.0, 0.0, 0.0, &p);
        }
        assert!(ev.eps_v.abs() < 1e-8);
        assert!(ev.eps_u.abs() < 1e-8);
    }
}
