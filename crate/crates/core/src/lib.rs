//! Deterministic simulator of a two-input opto-magnetic perceptron.
//!
//! Synaptic weights live in Co/Pt spots whose net magnetization is nudged up or
//! down by circularly polarized pulse packets ([`device`]). A polarizing
//! microscope turns the stored magnetization into a transmitted intensity, so
//! the readout performs the input-weight multiplication ([`readout`]). The
//! global-feedback trainer in [`learning`] cycles the four binary patterns and
//! applies the perceptron rule through the device model, and [`apparatus`]
//! compiles every step into the stage/waveplate/shutter/laser actions that a
//! bench setup would execute, keeping an energy and time ledger.

pub mod apparatus;
pub mod device;
pub mod error;
pub mod learning;
pub mod noise;
pub mod readout;

pub use apparatus::{
    compile_step, pulse_energy, replay_actions, ultimate_learning_rate, ApparatusConfig,
    CostLedger, HardwareAction,
};
pub use device::{DeviceCalibration, Helicity, MagneticSynapse};
pub use error::{Error, Result};
pub use learning::{
    compare_runs, ideal_reference_train, learning_step, GateTask, RunComparison, StepRecord,
    TrainRun, Trainer,
};
pub use noise::NoiseSource;
pub use readout::{evaluate_output, measure_pattern, Measurement, MeasurementConfig, PatternInput};
