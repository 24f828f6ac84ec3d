//! Spiking neural networks trained with eligibility traces.
//!
//! The crate simulates recurrent networks of leaky integrate-and-fire and
//! Izhikevich neurons and trains them with a factorized gradient: per-synapse
//! eligibility traces propagated forward in time, combined with a per-neuron
//! learning signal. With the exact learning signal the factorization
//! reproduces backpropagation through time; [`bptt`] provides that reference
//! implementation along with finite differences for independent checking.
//!
//! Modules, bottom up:
//!
//! - [`neuron`]: single-cell dynamics, spikes, pseudo-derivatives.
//! - [`eligibility`]: forward recursions of the per-synapse vectors.
//! - [`model`]: one trait unifying the three cell types.
//! - [`network`]: weights, initialization, readout.
//! - [`engine`]: episode simulation and recording.
//! - [`learning`]: learning signals and gradient assembly.
//! - [`bptt`]: reference gradients and finite differences.
//! - [`optim`], [`train`]: Adam and the batched training loop.
//! - [`experiments`]: the two-neuron STDP demos and the spike-timing task.

pub mod bptt;
pub mod eligibility;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod learning;
pub mod model;
pub mod network;
pub mod neuron;
pub mod optim;
pub mod rng;
pub mod train;

pub use engine::{episode_loss, episode_mse, firing_rate_hz, run_episode, EpisodeRecording};
pub use error::{Result, SimError};
pub use learning::{episode_gradient, LearningSignalMode};
pub use model::{Izhikevich, Lif, Model, ModelKind, StdpLif};
pub use network::{Gradients, Network};
pub use neuron::{IzhParams, LifParams};
