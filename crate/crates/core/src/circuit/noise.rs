use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depolarizing noise applied after every gate. The channel acts with rate
/// `min(scale * p, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub scale: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange { value: p, lo: 0.0, hi: 1.0 });
        }
        Ok(Self { p, scale: 1.0 })
    }

    pub fn scaled(self, scale: f64) -> Self {
        Self { scale, ..self }
    }

    pub fn effective_rate(&self) -> f64 {
        (self.scale * self.p).clamp(0.0, 1.0)
    }
}
