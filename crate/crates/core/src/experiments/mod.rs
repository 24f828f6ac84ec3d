//! Ready-made experiment protocols built on the simulation engine: the
//! two-neuron STDP demonstrations and the spike-timing regression task.

pub mod spike_timing;
pub mod two_neuron;

pub use spike_timing::{
    poisson_input, run_spike_timing, spike_timing_target, targets_from_inputs, AggregateRow,
    SpikeTimingConfig, SpikeTimingSummary,
};
pub use two_neuron::{
    alg2_input_schedule, demo_lif_config, demo_lif_params, run_two_neuron, TwoNeuronConfig,
    TwoNeuronSeries,
};
