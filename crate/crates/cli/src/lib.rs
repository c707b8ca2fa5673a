//! Experiment front end for the opto-magnetic perceptron simulator.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use config::{RunConfig, ScatterProfile, TaskKind};

pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "optomag",
    version,
    about = "Opto-magnetic perceptron experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a gate on the device model and write trace, summary, actions and plot.
    Train(CommonArgs),
    /// Sweep a synapse up and down with right/left helicity pulses.
    PulseSweep(CommonArgs),
    /// Overlay device readout against the ideal perceptron.
    Compare(CommonArgs),
    /// Print energy and timing estimates as JSON.
    Cost(CommonArgs),
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file (unknown keys are rejected).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<TaskKind>,
    /// JSON file `{"name": .., "desired": [4 x ±1]}` for `--task custom`.
    #[arg(long)]
    pub task_file: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Initial weights.
    #[arg(long, num_args = 2, value_names = ["W1", "W2"])]
    pub init: Option<Vec<f64>>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Learning rate in pulse packets per update.
    #[arg(long)]
    pub packets: Option<u32>,
    /// Calibration preset (`learning` or `fig2`); for pulse-sweep, the sweep preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// Polarization noise fraction per device call.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub background_sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub offset_profile: Option<ScatterProfile>,
    #[arg(long)]
    pub packet_size: Option<u32>,
    #[arg(long)]
    pub fluence: Option<f64>,
    #[arg(long)]
    pub spot_diameter: Option<f64>,
    /// Pulses per pulse-sweep sample.
    #[arg(long)]
    pub increment: Option<u32>,
    /// Step count for the cost wall-time projection.
    #[arg(long)]
    pub steps: Option<u64>,
}

impl CommonArgs {
    pub fn resolve(&self, sweep: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.task {
            cfg.task = v;
        }
        if let Some(v) = &self.task_file {
            cfg.task_file = Some(v.clone());
        }
        if let Some(v) = self.threshold {
            cfg.threshold_b = v;
        }
        if let Some(v) = &self.init {
            cfg.init_weights = [v[0], v[1]];
        }
        if let Some(v) = self.max_steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.packets {
            cfg.packets_per_update = v;
        }
        if let Some(v) = &self.preset {
            if sweep {
                cfg.sweep.preset = v.clone();
            } else {
                cfg.calibration.preset = v.clone();
            }
        }
        if let Some(v) = self.noise {
            if sweep {
                cfg.sweep.polarization_noise_frac = v;
            } else {
                cfg.calibration.polarization_noise_frac = Some(v);
            }
        }
        if let Some(v) = self.background_sigma {
            cfg.measurement.background_sigma = v;
        }
        if let Some(v) = self.offset_profile {
            cfg.measurement.scatter_profile = v;
        }
        if let Some(v) = self.packet_size {
            cfg.calibration.packet_size = Some(v);
            cfg.apparatus.packet_size = Some(v);
        }
        if let Some(v) = self.fluence {
            cfg.apparatus.fluence_mj_per_cm2 = Some(v);
        }
        if let Some(v) = self.spot_diameter {
            cfg.apparatus.spot_diameter_um = Some(v);
        }
        if let Some(v) = self.increment {
            cfg.sweep.increment = v;
        }
        if let Some(v) = self.steps {
            cfg.cost_steps = v;
        }
        Ok(cfg)
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Train(args) => commands::cmd_train(&args.resolve(false)?),
        Command::PulseSweep(args) => commands::cmd_pulse_sweep(&args.resolve(true)?),
        Command::Compare(args) => commands::cmd_compare(&args.resolve(false)?),
        Command::Cost(args) => commands::cmd_cost(&args.resolve(false)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "optomag",
            "train",
            "--task",
            "or",
            "--threshold",
            "0.58",
            "--init",
            "0.1",
            "0.2",
            "--seed",
            "9",
        ])
        .unwrap();
        let Command::Train(args) = &cli.command else {
            panic!("expected train");
        };
        let cfg = args.resolve(false).unwrap();
        assert_eq!(cfg.task, TaskKind::Or);
        assert_eq!(cfg.threshold_b, 0.58);
        assert_eq!(cfg.init_weights, [0.1, 0.2]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn preset_flag_targets_sweep() {
        let args = CommonArgs {
            preset: Some("learning".into()),
            noise: Some(0.05),
            ..Default::default()
        };
        let cfg = args.resolve(true).unwrap();
        assert_eq!(cfg.sweep.preset, "learning");
        assert_eq!(cfg.sweep.polarization_noise_frac, 0.05);
        assert_eq!(cfg.calibration.preset, "learning");
        assert_eq!(cfg.calibration.polarization_noise_frac, None);
    }
}
