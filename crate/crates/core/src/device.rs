//! Co/Pt magnetic synapse driven by circularly polarized pulse packets.
//!
//! The stored weight is the normalized magneto-optical transmission of one
//! laser-written spot (the product of the Faraday constant and the net moment).
//! Right-handed light grows the switched domain area, left-handed light shrinks
//! it, and the magnetization saturates at the calibration bounds.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulses needed to sweep the full weight range in the `fig2` preset.
pub const SATURATION_PULSES: u32 = 600;
/// Weight change per pulse in the learning experiments; a 5-pulse packet
/// moves the weight by 0.0665.
pub const LEARNING_DELTA_PER_PULSE: f64 = 0.0133;
pub const DEFAULT_PACKET_SIZE: u32 = 5;
pub const DEFAULT_POLARIZATION_NOISE: f64 = 0.05;

/// Handedness of the pump light, selected by the quarter wave plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Helicity {
    RightCircular,
    LeftCircular,
}

impl Helicity {
    pub fn sign(self) -> f64 {
        match self {
            Helicity::RightCircular => 1.0,
            Helicity::LeftCircular => -1.0,
        }
    }

    /// Helicity that moves a weight in the direction of a non-zero error.
    pub fn from_error(error: i8) -> Option<Self> {
        match error.signum() {
            1 => Some(Helicity::RightCircular),
            -1 => Some(Helicity::LeftCircular),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Helicity::RightCircular => "right",
            Helicity::LeftCircular => "left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceCalibration {
    /// Weight change per pump pulse, in normalized intensity units.
    pub delta_per_pulse: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Half-width of the uniform per-call polarization deviation.
    pub polarization_noise_frac: f64,
    pub packet_size: u32,
}

impl DeviceCalibration {
    /// 600 pulses span `[0, 1]`.
    pub fn fig2() -> Self {
        Self {
            delta_per_pulse: 1.0 / SATURATION_PULSES as f64,
            w_min: 0.0,
            w_max: 1.0,
            polarization_noise_frac: 0.0,
            packet_size: DEFAULT_PACKET_SIZE,
        }
    }

    /// One 5-pulse packet moves the weight by 0.0665.
    pub fn learning() -> Self {
        Self {
            delta_per_pulse: LEARNING_DELTA_PER_PULSE,
            w_min: 0.0,
            w_max: 1.0,
            polarization_noise_frac: 0.0,
            packet_size: DEFAULT_PACKET_SIZE,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig2" => Ok(Self::fig2()),
            "learning" => Ok(Self::learning()),
            other => Err(Error::Config(format!(
                "unknown calibration preset `{other}` (expected `fig2` or `learning`)"
            ))),
        }
    }

    pub fn with_noise(mut self, frac: f64) -> Self {
        self.polarization_noise_frac = frac;
        self
    }

    /// Weight change produced by one packet with no polarization error.
    pub fn packet_delta(&self) -> f64 {
        self.packet_size as f64 * self.delta_per_pulse
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_per_pulse.is_finite() || self.delta_per_pulse <= 0.0 {
            return Err(Error::Config(format!(
                "delta_per_pulse must be finite and positive, got {}",
                self.delta_per_pulse
            )));
        }
        if !self.w_min.is_finite() || !self.w_max.is_finite() || self.w_min >= self.w_max {
            return Err(Error::Config(format!(
                "weight bounds must satisfy w_min < w_max, got [{}, {}]",
                self.w_min, self.w_max
            )));
        }
        if !(0.0..1.0).contains(&self.polarization_noise_frac) {
            return Err(Error::Config(format!(
                "polarization_noise_frac must lie in [0, 1), got {}",
                self.polarization_noise_frac
            )));
        }
        if self.packet_size == 0 {
            return Err(Error::Config("packet_size must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for DeviceCalibration {
    fn default() -> Self {
        Self::learning()
    }
}

/// One non-volatile synaptic weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticSynapse {
    weight: f64,
    calibration: DeviceCalibration,
}

impl MagneticSynapse {
    pub fn new(weight: f64, calibration: DeviceCalibration) -> Result<Self> {
        calibration.validate()?;
        if !weight.is_finite() || weight < calibration.w_min || weight > calibration.w_max {
            return Err(Error::Config(format!(
                "initial weight {weight} outside [{}, {}]",
                calibration.w_min, calibration.w_max
            )));
        }
        Ok(Self {
            weight,
            calibration,
        })
    }

    pub fn read_weight(&self) -> f64 {
        self.weight
    }

    pub fn calibration(&self) -> &DeviceCalibration {
        &self.calibration
    }

    /// Expose the spot to `n` pulses of helicity `h`.
    ///
    /// The change `sign(h)·n·δ·(1+ε)` is clamped to the saturation bounds. With
    /// a noise source and a non-zero noise fraction, ε is one uniform draw in
    /// `[-frac, +frac]` for the whole call; otherwise ε = 0.
    pub fn apply_pulses(&self, n: u32, h: Helicity, rng: Option<&mut dyn RngCore>) -> Result<Self> {
        let cal = &self.calibration;
        cal.validate()?;
        if n == 0 {
            return Ok(*self);
        }
        let frac = cal.polarization_noise_frac;
        let epsilon = match rng {
            Some(rng) if frac > 0.0 => rng.random_range(-frac..=frac),
            _ => 0.0,
        };
        let change = h.sign() * (n as f64 * cal.delta_per_pulse) * (1.0 + epsilon);
        Ok(Self {
            weight: (self.weight + change).clamp(cal.w_min, cal.w_max),
            calibration: *cal,
        })
    }
}
