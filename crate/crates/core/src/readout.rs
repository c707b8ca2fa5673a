//! Magneto-optical readout: shutter-gated inputs, Faraday multiplication,
//! the stored threshold and the sign nonlinearity.

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-weight offset measured at the both-open pattern, caused by light
/// scattered from the shutter edge.
pub const C4_OFFSET: f64 = -0.027;

/// One of the four shutter settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternInput {
    pub x1: u8,
    pub x2: u8,
    pub pattern_id: u8,
}

impl PatternInput {
    /// μ = 1:(0,0), 2:(1,0), 3:(0,1), 4:(1,1).
    pub const ALL: [PatternInput; 4] = [
        PatternInput {
            x1: 0,
            x2: 0,
            pattern_id: 1,
        },
        PatternInput {
            x1: 1,
            x2: 0,
            pattern_id: 2,
        },
        PatternInput {
            x1: 0,
            x2: 1,
            pattern_id: 3,
        },
        PatternInput {
            x1: 1,
            x2: 1,
            pattern_id: 4,
        },
    ];

    pub fn from_id(pattern_id: u8) -> Result<Self> {
        match pattern_id {
            1..=4 => Ok(Self::ALL[pattern_id as usize - 1]),
            _ => Err(Error::Usage(format!(
                "pattern id {pattern_id} outside 1..=4"
            ))),
        }
    }

    /// Pattern evaluated at 1-based learning step `step`.
    pub fn for_step(step: usize) -> Self {
        Self::ALL[(step.max(1) - 1) % 4]
    }

    pub fn inputs(&self) -> [u8; 2] {
        [self.x1, self.x2]
    }

    pub(crate) fn index(&self) -> usize {
        self.pattern_id as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Offset added to each open channel's weight, indexed by μ − 1.
    pub scatter_offset: [f64; 4],
    pub background_sigma: f64,
    pub threshold_b: f64,
}

impl MeasurementConfig {
    pub fn ideal(threshold_b: f64) -> Self {
        Self {
            scatter_offset: [0.0; 4],
            background_sigma: 0.0,
            threshold_b,
        }
    }

    /// Offset of [`C4_OFFSET`] per weight at μ = 4 only.
    pub fn with_c4_profile(mut self) -> Self {
        self.scatter_offset = [0.0, 0.0, 0.0, C4_OFFSET];
        self
    }

    pub fn with_background_sigma(mut self, sigma: f64) -> Self {
        self.background_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold_b.is_finite() || self.threshold_b <= 0.0 {
            return Err(Error::Config(format!(
                "threshold_b must be finite and positive, got {}",
                self.threshold_b
            )));
        }
        if let Some(bad) = self.scatter_offset.iter().find(|o| !o.is_finite()) {
            return Err(Error::Config(format!("scatter offset {bad} is not finite")));
        }
        if !self.background_sigma.is_finite() || self.background_sigma < 0.0 {
            return Err(Error::Config(format!(
                "background_sigma must be finite and non-negative, got {}",
                self.background_sigma
            )));
        }
        Ok(())
    }
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self::ideal(0.66)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub y1: f64,
    pub y2: f64,
    /// `y1 + y2 − b`.
    pub sum: f64,
    pub output: i8,
}

/// +1 when the neuron fires (`sum > 0`), −1 otherwise, including at zero.
pub fn evaluate_output(sum: f64) -> Result<i8> {
    if !sum.is_finite() {
        return Err(Error::Numeric(format!("weighted sum {sum} is not finite")));
    }
    Ok(if sum > 0.0 { 1 } else { -1 })
}

/// Read the two weight spots through the shutter for pattern `p`.
///
/// Each channel transmits `xᵢ·(wᵢ + offset[μ])` plus Gaussian background when
/// `background_sigma > 0` and a noise source is given. The two background
/// draws are taken for every call with noise, blocked channels included.
pub fn measure_pattern(
    w1: f64,
    w2: f64,
    p: PatternInput,
    cfg: &MeasurementConfig,
    rng: Option<&mut dyn RngCore>,
) -> Result<Measurement> {
    cfg.validate()?;
    if !w1.is_finite() || !w2.is_finite() {
        return Err(Error::Numeric(format!(
            "weights ({w1}, {w2}) are not finite"
        )));
    }
    let offset = cfg.scatter_offset[p.index()];
    let mut y1 = f64::from(p.x1) * (w1 + offset);
    let mut y2 = f64::from(p.x2) * (w2 + offset);
    if let Some(rng) = rng {
        if cfg.background_sigma > 0.0 {
            let normal = Normal::new(0.0, cfg.background_sigma)
                .map_err(|e| Error::Config(format!("background noise: {e}")))?;
            y1 += normal.sample(rng);
            y2 += normal.sample(rng);
        }
    }
    let sum = y1 + y2 - cfg.threshold_b;
    Ok(Measurement {
        y1,
        y2,
        sum,
        output: evaluate_output(sum)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSource;

    #[test]
    fn pattern_table() {
        let inputs: Vec<_> = PatternInput::ALL.iter().map(|p| p.inputs()).collect();
        assert_eq!(inputs, vec![[0, 0], [1, 0], [0, 1], [1, 1]]);
        assert_eq!(PatternInput::from_id(3).unwrap().inputs(), [0, 1]);
        assert!(PatternInput::from_id(0).is_err());
        assert!(PatternInput::from_id(5).is_err());
        assert_eq!(PatternInput::for_step(5).pattern_id, 1);
        assert_eq!(PatternInput::for_step(16).pattern_id, 4);
    }

    #[test]
    fn pre_learning_and_sum_is_negative() {
        let m = measure_pattern(
            0.0027,
            0.27,
            PatternInput::ALL[3],
            &MeasurementConfig::ideal(0.66),
            None,
        )
        .unwrap();
        assert!((m.sum - -0.3873).abs() < 1e-12);
        assert_eq!(m.output, -1);
    }

    #[test]
    fn blocked_inputs_read_zero() {
        let cfg = MeasurementConfig::ideal(0.5).with_c4_profile();
        let m = measure_pattern(0.9, 0.8, PatternInput::ALL[0], &cfg, None).unwrap();
        assert_eq!((m.y1, m.y2), (0.0, 0.0));
        assert_eq!(m.sum, -0.5);
        assert_eq!(m.output, -1);
    }

    #[test]
    fn c4_offset_is_per_weight() {
        let cfg = MeasurementConfig::ideal(0.58).with_c4_profile();
        let m = measure_pattern(0.3, 0.4, PatternInput::ALL[3], &cfg, None).unwrap();
        assert!((m.sum - 0.066).abs() < 1e-12);
        assert_eq!(m.output, 1);
        let m2 = measure_pattern(0.3, 0.4, PatternInput::ALL[1], &cfg, None).unwrap();
        assert_eq!(m2.y1, 0.3);
    }

    #[test]
    fn sign_rule() {
        assert_eq!(evaluate_output(0.0917).unwrap(), 1);
        assert_eq!(evaluate_output(0.0).unwrap(), -1);
        assert_eq!(evaluate_output(-0.0).unwrap(), -1);
        assert_eq!(evaluate_output(-0.3873).unwrap(), -1);
        assert!(matches!(evaluate_output(f64::NAN), Err(Error::Numeric(_))));
        assert!(evaluate_output(f64::INFINITY).is_err());
    }

    #[test]
    fn background_noise_reaches_blocked_channels() {
        let cfg = MeasurementConfig::ideal(0.66).with_background_sigma(0.01);
        let mut noise = NoiseSource::new(9);
        let m = measure_pattern(
            0.2,
            0.2,
            PatternInput::ALL[0],
            &cfg,
            Some(noise.measurement()),
        )
        .unwrap();
        assert!(m.y1 != 0.0 && m.y2 != 0.0);
        assert!(m.y1.abs() < 0.1);
    }

    #[test]
    fn invalid_config() {
        let bad = MeasurementConfig::ideal(0.0);
        assert!(measure_pattern(0.1, 0.1, PatternInput::ALL[1], &bad, None).is_err());
        let mut bad = MeasurementConfig::ideal(0.5);
        bad.scatter_offset[3] = f64::NAN;
        assert!(bad.validate().is_err());
    }
}
