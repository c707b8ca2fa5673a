//! Global-feedback perceptron training on the device model, plus the purely
//! arithmetic reference trainer it is compared against.
//!
//! Each learning step evaluates one pattern, cycling μ = 1, 2, 3, 4. The error
//! `E = sign(desired − output)` is broadcast to both synapses and only the ones
//! whose shutter is open receive pulse packets. Training has converged at the
//! first step that closes a window of four consecutive error-free steps.

use serde::{Deserialize, Serialize};

use crate::apparatus::{compile_step, ApparatusConfig, CostLedger};
use crate::device::{DeviceCalibration, Helicity, MagneticSynapse};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::readout::{measure_pattern, MeasurementConfig, PatternInput};

pub const PATTERNS: usize = 4;
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Desired outputs for the four input patterns, indexed by μ − 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTask {
    pub name: String,
    pub desired: [i8; 4],
}

impl GateTask {
    pub fn custom(name: impl Into<String>, desired: [i8; 4]) -> Result<Self> {
        if let Some(bad) = desired.iter().find(|d| d.abs() != 1) {
            return Err(Error::Config(format!(
                "desired outputs must be ±1, got {bad}"
            )));
        }
        Ok(Self {
            name: name.into(),
            desired,
        })
    }

    pub fn and() -> Self {
        Self::fixed("and", [-1, -1, -1, 1])
    }

    pub fn or() -> Self {
        Self::fixed("or", [-1, 1, 1, 1])
    }

    pub fn constant_false() -> Self {
        Self::fixed("false", [-1, -1, -1, -1])
    }

    /// Copies the first input.
    pub fn x1() -> Self {
        Self::fixed("x1", [-1, 1, -1, 1])
    }

    pub fn x2() -> Self {
        Self::fixed("x2", [-1, -1, 1, 1])
    }

    pub fn nand() -> Self {
        Self::fixed("nand", [1, 1, 1, -1])
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "and" => Ok(Self::and()),
            "or" => Ok(Self::or()),
            "false" => Ok(Self::constant_false()),
            "x1" => Ok(Self::x1()),
            "x2" => Ok(Self::x2()),
            "nand" => Ok(Self::nand()),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }

    fn fixed(name: &str, desired: [i8; 4]) -> Self {
        Self {
            name: name.into(),
            desired,
        }
    }

    pub fn desired_for(&self, p: PatternInput) -> i8 {
        self.desired[p.index()]
    }
}

/// Everything observed and done during one learning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based.
    pub step_index: usize,
    pub pattern_id: u8,
    pub x1: u8,
    pub x2: u8,
    pub y1_meas: f64,
    pub y2_meas: f64,
    pub sum: f64,
    pub output: i8,
    pub desired: i8,
    pub error: i8,
    pub packets_sent: [u32; 2],
    pub helicity_used: Option<Helicity>,
    pub w1_before: f64,
    pub w2_before: f64,
    pub w1_after: f64,
    pub w2_after: f64,
}

impl StepRecord {
    pub fn inputs(&self) -> [u8; 2] {
        [self.x1, self.x2]
    }

    pub fn weights_before(&self) -> [f64; 2] {
        [self.w1_before, self.w2_before]
    }

    pub fn weights_after(&self) -> [f64; 2] {
        [self.w1_after, self.w2_after]
    }

    pub fn measured(&self) -> [f64; 2] {
        [self.y1_meas, self.y2_meas]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRun {
    pub task: GateTask,
    pub records: Vec<StepRecord>,
    pub converged_step: Option<usize>,
    pub final_weights: (f64, f64),
    pub ledger: CostLedger,
    pub seed: u64,
}

impl TrainRun {
    pub fn converged(&self) -> bool {
        self.converged_step.is_some()
    }

    /// Measured values of weight `i` (0-based) at the steps where its
    /// shutter is open, in chronological order.
    pub fn measured_trace(&self, i: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter(|r| r.inputs()[i] == 1)
            .map(|r| (r.step_index, r.measured()[i]))
            .collect()
    }

    /// Stored value of weight `i` at the same steps as [`Self::measured_trace`].
    pub fn stored_trace(&self, i: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter(|r| r.inputs()[i] == 1)
            .map(|r| (r.step_index, r.weights_before()[i]))
            .collect()
    }
}

fn error_signal(desired: i8, output: i8) -> i8 {
    (desired - output).signum()
}

/// One pattern evaluation and, if the output is wrong, one weight update.
///
/// Each open synapse receives `packets` packets of `packet_size` pulses, one
/// device call per packet.
pub fn learning_step(
    synapses: [MagneticSynapse; 2],
    p: PatternInput,
    task: &GateTask,
    cfg: &MeasurementConfig,
    packets: u32,
    step_index: usize,
    mut noise: Option<&mut NoiseSource>,
) -> Result<([MagneticSynapse; 2], StepRecord)> {
    if packets == 0 {
        return Err(Error::Config(
            "learning rate must be at least one packet".into(),
        ));
    }
    let before = synapses.map(|s| s.read_weight());
    let m = measure_pattern(
        before[0],
        before[1],
        p,
        cfg,
        noise.as_deref_mut().map(|n| n.measurement()),
    )?;
    let desired = task.desired_for(p);
    let error = error_signal(desired, m.output);
    let helicity = Helicity::from_error(error);

    let mut after = synapses;
    let mut packets_sent = [0u32; 2];
    if let Some(h) = helicity {
        for (i, x) in p.inputs().into_iter().enumerate() {
            if x == 0 {
                continue;
            }
            for _ in 0..packets {
                let packet_size = after[i].calibration().packet_size;
                after[i] = after[i].apply_pulses(
                    packet_size,
                    h,
                    noise.as_deref_mut().map(|n| n.device()),
                )?;
            }
            packets_sent[i] = packets;
        }
    }

    let record = StepRecord {
        step_index,
        pattern_id: p.pattern_id,
        x1: p.x1,
        x2: p.x2,
        y1_meas: m.y1,
        y2_meas: m.y2,
        sum: m.sum,
        output: m.output,
        desired,
        error,
        packets_sent,
        helicity_used: helicity,
        w1_before: before[0],
        w2_before: before[1],
        w1_after: after[0].read_weight(),
        w2_after: after[1].read_weight(),
    };
    Ok((after, record))
}

/// Tracks the sliding window of error-free steps.
#[derive(Default)]
struct ConvergenceWindow {
    clean: usize,
}

impl ConvergenceWindow {
    fn push(&mut self, error: i8) -> bool {
        if error == 0 {
            self.clean += 1;
        } else {
            self.clean = 0;
        }
        self.clean >= PATTERNS
    }
}

/// Device-backed trainer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    pub calibration: DeviceCalibration,
    pub measurement: MeasurementConfig,
    pub apparatus: ApparatusConfig,
    /// Learning rate in pulse packets per update.
    pub packets_per_update: u32,
    pub max_steps: usize,
}

impl Trainer {
    pub fn new(calibration: DeviceCalibration, measurement: MeasurementConfig) -> Self {
        let apparatus = ApparatusConfig {
            packet_size: calibration.packet_size,
            ..ApparatusConfig::default()
        };
        Self {
            calibration,
            measurement,
            apparatus,
            packets_per_update: 1,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Weight change of one noise-free update.
    pub fn effective_eta(&self) -> f64 {
        (self.packets_per_update * self.calibration.packet_size) as f64
            * self.calibration.delta_per_pulse
    }

    fn validate(&self) -> Result<()> {
        self.calibration.validate()?;
        self.measurement.validate()?;
        self.apparatus.validate()?;
        if self.max_steps < PATTERNS {
            return Err(Error::Config(format!(
                "max_steps must be at least {PATTERNS}, got {}",
                self.max_steps
            )));
        }
        if self.apparatus.packet_size != self.calibration.packet_size {
            return Err(Error::Config(format!(
                "apparatus packet_size {} differs from device packet_size {}",
                self.apparatus.packet_size, self.calibration.packet_size
            )));
        }
        Ok(())
    }

    pub fn train(&self, task: &GateTask, init: (f64, f64), seed: u64) -> Result<TrainRun> {
        self.validate()?;
        let mut synapses = [
            MagneticSynapse::new(init.0, self.calibration)?,
            MagneticSynapse::new(init.1, self.calibration)?,
        ];
        let mut noise = NoiseSource::new(seed);
        let mut ledger = CostLedger::new(&self.apparatus);
        let mut window = ConvergenceWindow::default();
        let mut records = Vec::new();
        let mut converged_step = None;

        for step in 1..=self.max_steps {
            let (next, record) = learning_step(
                synapses,
                PatternInput::for_step(step),
                task,
                &self.measurement,
                self.packets_per_update,
                step,
                Some(&mut noise),
            )?;
            let (_, delta) = compile_step(&record, &self.apparatus)?;
            ledger.merge(&delta);
            synapses = next;
            let done = window.push(record.error);
            records.push(record);
            if done {
                converged_step = Some(step);
                break;
            }
        }

        Ok(TrainRun {
            task: task.clone(),
            records,
            converged_step,
            final_weights: (synapses[0].read_weight(), synapses[1].read_weight()),
            ledger,
            seed,
        })
    }
}

/// Textbook perceptron with fixed threshold: `wᵢ += η·xᵢ·E`, no bounds, no
/// noise, no offsets. The returned ledger is empty.
pub fn ideal_reference_train(
    task: &GateTask,
    init: (f64, f64),
    threshold_b: f64,
    eta: f64,
    max_steps: usize,
) -> TrainRun {
    let mut w = [init.0, init.1];
    let mut window = ConvergenceWindow::default();
    let mut records = Vec::new();
    let mut converged_step = None;

    for step in 1..=max_steps {
        let p = PatternInput::for_step(step);
        let x = p.inputs().map(f64::from);
        let y = [x[0] * w[0], x[1] * w[1]];
        let sum = y[0] + y[1] - threshold_b;
        let output = if sum > 0.0 { 1 } else { -1 };
        let desired = task.desired_for(p);
        let error = error_signal(desired, output);
        let before = w;
        let mut packets_sent = [0u32; 2];
        if error != 0 {
            for i in 0..2 {
                if p.inputs()[i] == 1 {
                    w[i] += eta * x[i] * f64::from(error);
                    packets_sent[i] = 1;
                }
            }
        }
        records.push(StepRecord {
            step_index: step,
            pattern_id: p.pattern_id,
            x1: p.x1,
            x2: p.x2,
            y1_meas: y[0],
            y2_meas: y[1],
            sum,
            output,
            desired,
            error,
            packets_sent,
            helicity_used: Helicity::from_error(error),
            w1_before: before[0],
            w2_before: before[1],
            w1_after: w[0],
            w2_after: w[1],
        });
        if window.push(error) {
            converged_step = Some(step);
            break;
        }
    }

    TrainRun {
        task: task.clone(),
        records,
        converged_step,
        final_weights: (w[0], w[1]),
        ledger: CostLedger::new(&ApparatusConfig::default()),
        seed: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDelta {
    pub step: usize,
    /// `a − b` of the stored weights after the step.
    pub stored: [f64; 2],
    /// `a − b` of the measured channel values.
    pub measured: [f64; 2],
}

impl StepDelta {
    pub fn max_abs_stored(&self) -> f64 {
        self.stored[0].abs().max(self.stored[1].abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunComparison {
    /// Aligned steps common to both runs.
    pub steps: Vec<StepDelta>,
    pub max_abs_stored_delta: f64,
    pub first_measured_divergence: Option<usize>,
    /// `a.converged_step − b.converged_step` when both converged.
    pub convergence_delta: Option<i64>,
    pub len_a: usize,
    pub len_b: usize,
}

pub fn compare_runs(a: &TrainRun, b: &TrainRun) -> Result<RunComparison> {
    if a.task.desired != b.task.desired {
        return Err(Error::Usage(format!(
            "cannot compare runs of different tasks `{}` and `{}`",
            a.task.name, b.task.name
        )));
    }
    let steps: Vec<StepDelta> = a
        .records
        .iter()
        .zip(&b.records)
        .map(|(ra, rb)| StepDelta {
            step: ra.step_index,
            stored: [ra.w1_after - rb.w1_after, ra.w2_after - rb.w2_after],
            measured: [ra.y1_meas - rb.y1_meas, ra.y2_meas - rb.y2_meas],
        })
        .collect();
    let max_abs_stored_delta = steps
        .iter()
        .map(StepDelta::max_abs_stored)
        .fold(0.0, f64::max);
    let first_measured_divergence = steps
        .iter()
        .find(|d| d.measured != [0.0, 0.0])
        .map(|d| d.step);
    let convergence_delta = match (a.converged_step, b.converged_step) {
        (Some(x), Some(y)) => Some(x as i64 - y as i64),
        _ => None,
    };
    Ok(RunComparison {
        steps,
        max_abs_stored_delta,
        first_measured_divergence,
        convergence_delta,
        len_a: a.records.len(),
        len_b: b.records.len(),
    })
}
