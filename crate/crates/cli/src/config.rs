//! JSON run configuration with strict keys, and its resolution into core types.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use optomag_core::readout::C4_OFFSET;
use optomag_core::{ApparatusConfig, DeviceCalibration, GateTask, MeasurementConfig, Trainer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    And,
    Or,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTask {
    pub name: String,
    pub desired: [i8; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub preset: String,
    pub delta_per_pulse: Option<f64>,
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub polarization_noise_frac: Option<f64>,
    pub packet_size: Option<u32>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            preset: "learning".into(),
            delta_per_pulse: None,
            w_min: None,
            w_max: None,
            polarization_noise_frac: None,
            packet_size: None,
        }
    }
}

impl CalibrationSection {
    pub fn resolve(&self) -> Result<DeviceCalibration> {
        let mut cal = DeviceCalibration::preset(&self.preset)?;
        if let Some(v) = self.delta_per_pulse {
            cal.delta_per_pulse = v;
        }
        if let Some(v) = self.w_min {
            cal.w_min = v;
        }
        if let Some(v) = self.w_max {
            cal.w_max = v;
        }
        if let Some(v) = self.polarization_noise_frac {
            cal.polarization_noise_frac = v;
        }
        if let Some(v) = self.packet_size {
            cal.packet_size = v;
        }
        cal.validate()?;
        Ok(cal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScatterProfile {
    None,
    C4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub scatter_profile: ScatterProfile,
    /// Explicit per-pattern offsets; mutually exclusive with a non-`none` profile.
    pub scatter_offset: Option<[f64; 4]>,
    pub background_sigma: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            scatter_profile: ScatterProfile::None,
            scatter_offset: None,
            background_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApparatusSection {
    pub fluence_mj_per_cm2: Option<f64>,
    pub spot_diameter_um: Option<f64>,
    pub pulse_duration_ps: Option<f64>,
    pub packet_size: Option<u32>,
    pub intra_packet_spacing_ms: Option<f64>,
    pub rep_rate_khz: Option<f64>,
    pub weight_separation_um: Option<f64>,
    pub stage_step_time_s: Option<f64>,
    pub waveplate_latency_s: Option<f64>,
}

impl ApparatusSection {
    /// Defaults, with `packet_size` following the device unless set here.
    pub fn resolve(&self, device_packet_size: u32) -> Result<ApparatusConfig> {
        let d = ApparatusConfig::default();
        let cfg = ApparatusConfig {
            fluence_mj_per_cm2: self.fluence_mj_per_cm2.unwrap_or(d.fluence_mj_per_cm2),
            spot_diameter_um: self.spot_diameter_um.unwrap_or(d.spot_diameter_um),
            pulse_duration_ps: self.pulse_duration_ps.unwrap_or(d.pulse_duration_ps),
            packet_size: self.packet_size.unwrap_or(device_packet_size),
            intra_packet_spacing_ms: self
                .intra_packet_spacing_ms
                .unwrap_or(d.intra_packet_spacing_ms),
            rep_rate_khz: self.rep_rate_khz.unwrap_or(d.rep_rate_khz),
            weight_separation_um: self.weight_separation_um.unwrap_or(d.weight_separation_um),
            stage_step_time_s: self.stage_step_time_s.unwrap_or(d.stage_step_time_s),
            waveplate_latency_s: self.waveplate_latency_s.unwrap_or(d.waveplate_latency_s),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub preset: String,
    pub polarization_noise_frac: f64,
    pub initial_weight: f64,
    pub pulses_per_direction: u32,
    /// Pulses per sample.
    pub increment: u32,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            preset: "fig2".into(),
            polarization_noise_frac: 0.0,
            initial_weight: 0.0,
            pulses_per_direction: 600,
            increment: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: TaskKind,
    pub custom_task: Option<CustomTask>,
    pub task_file: Option<PathBuf>,
    pub init_weights: [f64; 2],
    pub threshold_b: f64,
    /// Learning rate in pulse packets per update.
    pub packets_per_update: u32,
    pub calibration: CalibrationSection,
    pub measurement: MeasurementSection,
    pub apparatus: ApparatusSection,
    pub sweep: SweepSection,
    /// Step count used by the `cost` wall-time projection.
    pub cost_steps: u64,
    pub seed: u64,
    pub max_steps: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::And,
            custom_task: None,
            task_file: None,
            init_weights: [0.0027, 0.27],
            threshold_b: 0.66,
            packets_per_update: 1,
            calibration: CalibrationSection::default(),
            measurement: MeasurementSection::default(),
            apparatus: ApparatusSection::default(),
            sweep: SweepSection::default(),
            cost_steps: 16,
            seed: 0,
            max_steps: optomag_core::learning::DEFAULT_MAX_STEPS,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Parse strict JSON, reporting the full path of an offending key.
pub fn parse_strict<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("invalid {what}: key `{path}`: {}", e.inner())
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        parse_strict(&text, &format!("config {}", path.display()))
    }

    pub fn gate_task(&self) -> Result<GateTask> {
        Ok(match self.task {
            TaskKind::And => GateTask::and(),
            TaskKind::Or => GateTask::or(),
            TaskKind::Custom => {
                let custom = match (&self.task_file, &self.custom_task) {
                    (Some(path), _) => {
                        let text = fs::read_to_string(path)
                            .with_context(|| format!("reading task file {}", path.display()))?;
                        parse_strict::<CustomTask>(&text, &format!("task file {}", path.display()))?
                    }
                    (None, Some(c)) => c.clone(),
                    (None, None) => {
                        bail!("task `custom` needs `custom_task` or `task_file`")
                    }
                };
                GateTask::custom(custom.name, custom.desired)?
            }
        })
    }

    pub fn measurement_config(&self) -> Result<MeasurementConfig> {
        let m = &self.measurement;
        let offsets = match (m.scatter_profile, m.scatter_offset) {
            (ScatterProfile::None, None) => [0.0; 4],
            (ScatterProfile::C4, None) => [0.0, 0.0, 0.0, C4_OFFSET],
            (ScatterProfile::None, Some(o)) => o,
            (ScatterProfile::C4, Some(_)) => {
                bail!("key `measurement.scatter_offset` conflicts with scatter_profile `c4`")
            }
        };
        let cfg = MeasurementConfig {
            scatter_offset: offsets,
            background_sigma: m.background_sigma,
            threshold_b: self.threshold_b,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trainer(&self) -> Result<Trainer> {
        let calibration = self.calibration.resolve()?;
        let apparatus = self.apparatus.resolve(calibration.packet_size)?;
        if self.packets_per_update == 0 {
            bail!("key `packets_per_update` must be at least 1");
        }
        if self.max_steps < optomag_core::learning::PATTERNS {
            bail!("key `max_steps` must be at least 4, got {}", self.max_steps);
        }
        let mut trainer = Trainer::new(calibration, self.measurement_config()?);
        trainer.apparatus = apparatus;
        trainer.packets_per_update = self.packets_per_update;
        trainer.max_steps = self.max_steps;
        Ok(trainer)
    }

    pub fn init(&self) -> (f64, f64) {
        (self.init_weights[0], self.init_weights[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_and_experiment() {
        let cfg = RunConfig::default();
        let trainer = cfg.trainer().unwrap();
        assert_eq!(cfg.gate_task().unwrap(), GateTask::and());
        assert_eq!(trainer.effective_eta(), 0.0665);
        assert_eq!(trainer.measurement.threshold_b, 0.66);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_strict::<RunConfig>(r#"{"calibration": {"delta": 1}}"#, "config")
            .unwrap_err()
            .to_string();
        assert!(err.contains("calibration.delta"), "{err}");
        let err = parse_strict::<RunConfig>(r#"{"thresold_b": 0.5}"#, "config")
            .unwrap_err()
            .to_string();
        assert!(err.contains("thresold_b"), "{err}");
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: RunConfig = parse_strict(
            r#"{"task": "or", "threshold_b": 0.58, "seed": 3}"#,
            "config",
        )
        .unwrap();
        assert_eq!(cfg.task, TaskKind::Or);
        assert_eq!(cfg.init_weights, [0.0027, 0.27]);
        assert_eq!(cfg.calibration.preset, "learning");
    }

    #[test]
    fn c4_profile_and_conflicts() {
        let mut cfg = RunConfig::default();
        cfg.measurement.scatter_profile = ScatterProfile::C4;
        assert_eq!(cfg.measurement_config().unwrap().scatter_offset[3], -0.027);
        cfg.measurement.scatter_offset = Some([0.0; 4]);
        assert!(cfg.measurement_config().is_err());
    }

    #[test]
    fn custom_task_requires_definition() {
        let cfg = RunConfig {
            task: TaskKind::Custom,
            ..Default::default()
        };
        assert!(cfg.gate_task().is_err());
        let cfg = RunConfig {
            task: TaskKind::Custom,
            custom_task: Some(CustomTask {
                name: "nand".into(),
                desired: [1, 1, 1, -1],
            }),
            ..Default::default()
        };
        assert_eq!(cfg.gate_task().unwrap().desired, [1, 1, 1, -1]);
    }

    #[test]
    fn apparatus_packet_size_follows_device() {
        let mut cfg = RunConfig::default();
        cfg.calibration.packet_size = Some(1);
        let trainer = cfg.trainer().unwrap();
        assert_eq!(trainer.apparatus.packet_size, 1);
        cfg.apparatus.packet_size = Some(3);
        assert!(cfg
            .trainer()
            .unwrap()
            .train(&GateTask::and(), cfg.init(), 0)
            .is_err());
    }
}
