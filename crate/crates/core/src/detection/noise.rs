use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::revealed::Dataset;

/// Distribution of the additive measurement noise on each action entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    /// Zero-mean normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Uniform on `[0, kappa]`.
    Uniform { kappa: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            NoiseModel::Gaussian { sigma } => ("sigma", sigma),
            NoiseModel::Uniform { kappa } => ("kappa", kappa),
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::input(format!("noise parameter {} must be finite and >= 0, got {}", name, v)))
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            NoiseModel::Gaussian { sigma } => sigma == 0.0,
            NoiseModel::Uniform { kappa } => kappa == 0.0,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
                }
            }
            NoiseModel::Uniform { kappa } => kappa * rng.random::<f64>(),
        }
    }

    /// Same family with the parameter multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        match *self {
            NoiseModel::Gaussian { sigma } => NoiseModel::Gaussian { sigma: sigma * c },
            NoiseModel::Uniform { kappa } => NoiseModel::Uniform { kappa: kappa * c },
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian:{}", sigma),
            NoiseModel::Uniform { kappa } => write!(f, "uniform:{}", kappa),
        }
    }
}

/// Parses `gaussian:SIGMA` or `uniform:KAPPA`.
impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::input(format!("noise model '{}' is not of the form kind:value", s)))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("noise parameter '{}' is not a number", value)))?;
        let model = match kind.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => NoiseModel::Gaussian { sigma: v },
            "uniform" => NoiseModel::Uniform { kappa: v },
            other => return Err(Error::input(format!("unknown noise model '{}'", other))),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Probes with noisy action observations `y_t^i = x_t^i + w_t^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    observed: Dataset<f64>,
    noise: NoiseModel,
}

impl NoisyDataset {
    /// Wraps observations whose noise follows `noise`.
    pub fn from_observed(observed: Dataset<f64>, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Self { observed, noise })
    }

    /// Adds one noise draw per action entry of `clean`.
    pub fn observe<R: Rng + ?Sized>(clean: &Dataset<f64>, noise: NoiseModel, rng: &mut R) -> Result<Self> {
        noise.validate()?;
        let actions = clean.actions_flat().iter().map(|&x| x + noise.sample(rng)).collect();
        Ok(Self {
            observed: clean.with_actions(actions)?,
            noise,
        })
    }

    pub fn observed(&self) -> &Dataset<f64> {
        &self.observed
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["gaussian:0.25", "uniform:0.1"] {
            let m: NoiseModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("uniform:-1".parse::<NoiseModel>().is_err());
        assert!("laplace:1".parse::<NoiseModel>().is_err());
        assert!("uniform".parse::<NoiseModel>().is_err());
    }

    #[test]
    fn uniform_draws_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = NoiseModel::Uniform { kappa: 0.1 };
        for _ in 0..1000 {
            let w = m.sample(&mut rng);
            assert!((0.0..=0.1).contains(&w));
        }
        assert_eq!(NoiseModel::Gaussian { sigma: 0.0 }.sample(&mut rng), 0.0);
    }

    #[test]
    fn observation_adds_noise_to_actions_only() {
        let clean = Dataset::new(vec![vec![1.0, 2.0]], vec![vec![vec![3.0, 4.0]]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noisy = NoisyDataset::observe(&clean, NoiseModel::Uniform { kappa: 0.5 }, &mut rng).unwrap();
        assert_eq!(noisy.observed().probe(0), clean.probe(0));
        for (y, x) in noisy.observed().actions_flat().iter().zip(clean.actions_flat()) {
            assert!(*y >= *x && *y <= x + 0.5);
        }
    }
}
