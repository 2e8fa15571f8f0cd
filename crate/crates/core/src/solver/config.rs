use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobustLoss {
    None,
    Huber { delta: f64 },
}

/// Per-pixel Levenberg-Marquardt settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_down: f64,
    pub damping_up: f64,
    /// Give up (unconverged) once damping exceeds this.
    pub max_damping: f64,
    pub relative_tolerance: f64,
    pub step_tolerance: f64,
    pub robust: RobustLoss,
    pub roughness_prior_weight: f64,
    pub roughness_prior_target: f64,
    pub fd_step: f64,
    /// Observations with luminance below this are treated as shadowed.
    pub shadow_threshold: f64,
    /// Observations with any channel at or above this are treated as
    /// clipped. `None` disables the check.
    pub saturation_level: Option<f64>,
    /// Photometric-stereo pixels with a worse light-matrix condition number
    /// are marked invalid.
    pub max_condition: f64,
    pub roughness_init: f64,
    pub metallic_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            initial_damping: 1e-3,
            damping_down: 0.5,
            damping_up: 4.0,
            max_damping: 1e8,
            relative_tolerance: 1e-8,
            step_tolerance: 1e-10,
            robust: RobustLoss::None,
            roughness_prior_weight: 1e-3,
            roughness_prior_target: 0.5,
            fd_step: 1e-4,
            shadow_threshold: 1e-4,
            saturation_level: None,
            max_condition: 1e6,
            roughness_init: 0.5,
            metallic_init: 0.1,
        }
    }
}

pub const DEFAULT_HUBER_DELTA: f64 = 0.1;

impl SolverConfig {
    pub fn huber() -> Self {
        Self {
            robust: RobustLoss::Huber {
                delta: DEFAULT_HUBER_DELTA,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_damping", self.initial_damping),
            ("damping_down", self.damping_down),
            ("damping_up", self.damping_up),
            ("max_damping", self.max_damping),
            ("relative_tolerance", self.relative_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("fd_step", self.fd_step),
            ("max_condition", self.max_condition),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if let RobustLoss::Huber { delta } = self.robust {
            if !(delta > 0.0) {
                return Err(Error::InvalidArgument("huber delta must be > 0".into()));
            }
        }
        if self.roughness_prior_weight < 0.0 {
            return Err(Error::InvalidArgument("roughness_prior_weight must be >= 0".into()));
        }
        Ok(())
    }

    /// Applies `key = value` overrides (keys use `_` or `-`).
    pub fn apply_overrides(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in kv {
            let bad = || Error::InvalidArgument(format!("bad value {value:?} for {key}"));
            let f = || value.parse::<f64>().map_err(|_| bad());
            match key.replace('-', "_").as_str() {
                "max_iterations" => self.max_iterations = value.parse().map_err(|_| bad())?,
                "initial_damping" => self.initial_damping = f()?,
                "damping_down" => self.damping_down = f()?,
                "damping_up" => self.damping_up = f()?,
                "max_damping" => self.max_damping = f()?,
                "relative_tolerance" => self.relative_tolerance = f()?,
                "step_tolerance" => self.step_tolerance = f()?,
                "roughness_prior_weight" => self.roughness_prior_weight = f()?,
                "fd_step" => self.fd_step = f()?,
                "shadow_threshold" => self.shadow_threshold = f()?,
                "saturation_level" => self.saturation_level = Some(f()?),
                "huber_delta" => {
                    self.robust = RobustLoss::Huber { delta: f()? };
                }
                "robust" => {
                    self.robust = match value.as_str() {
                        "none" => RobustLoss::None,
                        "huber" => RobustLoss::Huber {
                            delta: match self.robust {
                                RobustLoss::Huber { delta } => delta,
                                RobustLoss::None => DEFAULT_HUBER_DELTA,
                            },
                        },
                        _ => return Err(bad()),
                    }
                }
                _ => return Err(Error::InvalidArgument(format!("unknown solver key {key:?}"))),
            }
        }
        self.validate()
    }
}
