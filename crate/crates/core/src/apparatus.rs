//! Virtual bench: turns learning steps into hardware actions and keeps the
//! energy, time and pulse ledger.
//!
//! The action vocabulary follows the optical setup: a translation stage picks
//! the weight spot, the quarter wave plate sets the pump helicity, the shutter
//! in front of the camera encodes the binary inputs and the amplifier emits
//! pulse packets.

use std::f64::consts::PI;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::device::{Helicity, MagneticSynapse};
use crate::error::{Error, Result};
use crate::learning::{StepRecord, TrainRun};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    pub fluence_mj_per_cm2: f64,
    /// Diameter of one synaptic-weight spot.
    pub spot_diameter_um: f64,
    pub pulse_duration_ps: f64,
    pub packet_size: u32,
    pub intra_packet_spacing_ms: f64,
    pub rep_rate_khz: f64,
    /// Distance between the two weight spots along the stage axis.
    pub weight_separation_um: f64,
    pub stage_step_time_s: f64,
    pub waveplate_latency_s: f64,
}

impl Default for ApparatusConfig {
    fn default() -> Self {
        Self {
            fluence_mj_per_cm2: 1.3,
            spot_diameter_um: 1.125,
            pulse_duration_ps: 4.0,
            packet_size: 5,
            intra_packet_spacing_ms: 1.0,
            rep_rate_khz: 1.0,
            weight_separation_um: 136.0,
            stage_step_time_s: 1.0,
            waveplate_latency_s: 0.0,
        }
    }
}

impl ApparatusConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("fluence_mj_per_cm2", self.fluence_mj_per_cm2),
            ("spot_diameter_um", self.spot_diameter_um),
            ("waveplate_latency_s", self.waveplate_latency_s),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let positive = [
            ("pulse_duration_ps", self.pulse_duration_ps),
            ("intra_packet_spacing_ms", self.intra_packet_spacing_ms),
            ("rep_rate_khz", self.rep_rate_khz),
            ("weight_separation_um", self.weight_separation_um),
            ("stage_step_time_s", self.stage_step_time_s),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.packet_size == 0 {
            return Err(Error::Config("packet_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Stage coordinate of weight `index` (0-based).
    pub fn weight_position_um(&self, index: usize) -> f64 {
        index as f64 * self.weight_separation_um
    }

    fn weight_at(&self, position_um: f64) -> Result<usize> {
        (0..2)
            .find(|&i| self.weight_position_um(i) == position_um)
            .ok_or_else(|| Error::Validation(format!("no weight spot at {position_um} um")))
    }

    /// Time to pick `packet_size` pulses from the amplifier train.
    pub fn packet_emission_time_s(&self) -> f64 {
        self.packet_size as f64 / (self.rep_rate_khz * 1e3)
    }
}

/// Energy of one pump pulse in pJ, for a flat-top disc of the spot diameter.
pub fn pulse_energy(cfg: &ApparatusConfig) -> f64 {
    let radius_cm = cfg.spot_diameter_um * 1e-4 / 2.0;
    let fluence_j_per_cm2 = cfg.fluence_mj_per_cm2 * 1e-3;
    fluence_j_per_cm2 * PI * radius_cm * radius_cm * 1e12
}

/// Learning-step rate in GHz if the pulses of a packet were back to back.
pub fn ultimate_learning_rate(cfg: &ApparatusConfig) -> f64 {
    1e3 / (cfg.packet_size as f64 * cfg.pulse_duration_ps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters")]
pub enum HardwareAction {
    MoveStage {
        target_um: f64,
    },
    RotateWaveplate {
        helicity: Helicity,
    },
    SetShutter {
        x1: u8,
        x2: u8,
    },
    EmitPacket {
        pulses: u32,
    },
    #[serde(rename = "IntegrateCCD")]
    IntegrateCcd,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub move_stage: u64,
    pub rotate_waveplate: u64,
    pub set_shutter: u64,
    pub emit_packet: u64,
    pub integrate_ccd: u64,
}

impl ActionCounts {
    fn add(&mut self, other: &ActionCounts) {
        self.move_stage += other.move_stage;
        self.rotate_waveplate += other.rotate_waveplate;
        self.set_shutter += other.set_shutter;
        self.emit_packet += other.emit_packet;
        self.integrate_ccd += other.integrate_ccd;
    }
}

/// Accumulated cost of a sequence of hardware actions.
///
/// Energy is always `total_pulses × pulse_energy_pj`; it is recomputed from
/// the pulse count rather than summed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    total_pulses: u64,
    energy_pj: f64,
    wall_time_s: f64,
    actions: ActionCounts,
    pulse_energy_pj: f64,
}

impl CostLedger {
    pub fn new(cfg: &ApparatusConfig) -> Self {
        Self {
            total_pulses: 0,
            energy_pj: 0.0,
            wall_time_s: 0.0,
            actions: ActionCounts::default(),
            pulse_energy_pj: pulse_energy(cfg),
        }
    }

    pub fn total_pulses(&self) -> u64 {
        self.total_pulses
    }

    pub fn energy_pj(&self) -> f64 {
        self.energy_pj
    }

    pub fn wall_time_s(&self) -> f64 {
        self.wall_time_s
    }

    pub fn actions(&self) -> &ActionCounts {
        &self.actions
    }

    pub fn pulse_energy_pj(&self) -> f64 {
        self.pulse_energy_pj
    }

    /// Account for one executed action.
    pub fn record(&mut self, action: &HardwareAction, cfg: &ApparatusConfig) {
        match action {
            HardwareAction::MoveStage { .. } => {
                self.actions.move_stage += 1;
                self.wall_time_s += cfg.stage_step_time_s;
            }
            HardwareAction::RotateWaveplate { .. } => {
                self.actions.rotate_waveplate += 1;
                self.wall_time_s += cfg.waveplate_latency_s;
            }
            HardwareAction::SetShutter { .. } => self.actions.set_shutter += 1,
            HardwareAction::EmitPacket { pulses } => {
                self.actions.emit_packet += 1;
                self.total_pulses += u64::from(*pulses);
                self.wall_time_s += *pulses as f64 / (cfg.rep_rate_khz * 1e3);
            }
            HardwareAction::IntegrateCcd => self.actions.integrate_ccd += 1,
        }
        self.energy_pj = self.total_pulses as f64 * self.pulse_energy_pj;
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.total_pulses += other.total_pulses;
        self.wall_time_s += other.wall_time_s;
        self.actions.add(&other.actions);
        self.energy_pj = self.total_pulses as f64 * self.pulse_energy_pj;
    }
}

fn check_record(record: &StepRecord) -> Result<()> {
    let fail = |msg: String| {
        Err(Error::Validation(format!(
            "step {}: {msg}",
            record.step_index
        )))
    };
    if record.error != (record.desired - record.output).signum() {
        return fail(format!(
            "error {} inconsistent with desired {} and output {}",
            record.error, record.desired, record.output
        ));
    }
    if record.error == 0 && record.packets_sent.iter().any(|&p| p > 0) {
        return fail("packets sent although the error is zero".into());
    }
    let inputs = [record.x1, record.x2];
    for (i, (&x, &packets)) in inputs.iter().zip(&record.packets_sent).enumerate() {
        if x == 0 && packets > 0 {
            return fail(format!("packets sent to blocked weight {}", i + 1));
        }
    }
    if record.helicity_used != Helicity::from_error(record.error) {
        return fail("helicity does not match the error sign".into());
    }
    Ok(())
}

/// Hardware sequence and cost of one learning step.
pub fn compile_step(
    record: &StepRecord,
    cfg: &ApparatusConfig,
) -> Result<(Vec<HardwareAction>, CostLedger)> {
    cfg.validate()?;
    check_record(record)?;
    let mut actions = vec![
        HardwareAction::SetShutter {
            x1: record.x1,
            x2: record.x2,
        },
        HardwareAction::IntegrateCcd,
    ];
    if let Some(helicity) = record.helicity_used {
        actions.push(HardwareAction::RotateWaveplate { helicity });
        for (i, x) in [record.x1, record.x2].into_iter().enumerate() {
            if x == 0 {
                continue;
            }
            actions.push(HardwareAction::MoveStage {
                target_um: cfg.weight_position_um(i),
            });
            for _ in 0..record.packets_sent[i] {
                actions.push(HardwareAction::EmitPacket {
                    pulses: cfg.packet_size,
                });
            }
        }
    }
    let mut ledger = CostLedger::new(cfg);
    for action in &actions {
        ledger.record(action, cfg);
    }
    Ok((actions, ledger))
}

/// One line of an action trace: the action, its step and the ledger after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionTraceLine {
    pub step: usize,
    #[serde(flatten)]
    pub action: HardwareAction,
    pub ledger: CostLedger,
}

/// Compile every step of a run into a flat, cumulatively costed trace.
pub fn action_trace(run: &TrainRun, cfg: &ApparatusConfig) -> Result<Vec<ActionTraceLine>> {
    let mut ledger = CostLedger::new(cfg);
    let mut lines = Vec::new();
    for record in &run.records {
        let (actions, _) = compile_step(record, cfg)?;
        for action in actions {
            ledger.record(&action, cfg);
            lines.push(ActionTraceLine {
                step: record.step_index,
                action,
                ledger,
            });
        }
    }
    Ok(lines)
}

/// Reference interpreter: executes actions against the device model.
///
/// `SetShutter` opens a new step; an `EmitPacket` is only accepted once the
/// step has rotated the wave plate and moved the stage. With a device noise
/// stream seeded like the training run, the replay consumes the same draws in
/// the same order.
pub fn replay_actions(
    actions: &[HardwareAction],
    mut synapses: [MagneticSynapse; 2],
    cfg: &ApparatusConfig,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<[MagneticSynapse; 2]> {
    let mut helicity: Option<Helicity> = None;
    let mut target: Option<usize> = None;
    for action in actions {
        match *action {
            HardwareAction::SetShutter { .. } => {
                helicity = None;
                target = None;
            }
            HardwareAction::RotateWaveplate { helicity: h } => helicity = Some(h),
            HardwareAction::MoveStage { target_um } => target = Some(cfg.weight_at(target_um)?),
            HardwareAction::EmitPacket { pulses } => {
                let (Some(h), Some(i)) = (helicity, target) else {
                    return Err(Error::Validation(
                        "EmitPacket before RotateWaveplate and MoveStage".into(),
                    ));
                };
                let draw: Option<&mut dyn RngCore> = match rng {
                    Some(ref mut r) => Some(&mut **r),
                    None => None,
                };
                synapses[i] = synapses[i].apply_pulses(pulses, h, draw)?;
            }
            HardwareAction::IntegrateCcd => {}
        }
    }
    Ok(synapses)
}
