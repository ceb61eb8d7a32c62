//! Bath spectral functions obeying the KMS condition `γ(−ω)/γ(ω) = e^{−βω}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BathShape {
    /// `γ(ω) = γ0 ω / (1 − e^{−βω})`.
    Ohmic,
    /// `γ(ω) = γ0 / (1 + e^{−βω})`, so that `γ(ω) + γ(−ω) = γ0`.
    FlatKMS,
}

impl Default for BathShape {
    fn default() -> Self {
        BathShape::Ohmic
    }
}

/// Default overall rate scale, in model energy units.
pub const DEFAULT_GAMMA0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    shape: BathShape,
    gamma0: f64,
    beta: f64,
}

impl SpectralFunction {
    /// `beta = 0` (infinite temperature) is accepted only for `FlatKMS`:
    /// the Ohmic rate diverges there.
    pub fn new(shape: BathShape, gamma0: f64, beta: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidBath(format!("gamma0 must be positive and finite, got {gamma0}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidBath(format!("beta must be non-negative and finite, got {beta}")));
        }
        if beta == 0.0 && shape == BathShape::Ohmic {
            return Err(Error::InvalidBath("the Ohmic rate diverges at infinite temperature".into()));
        }
        Ok(SpectralFunction { shape, gamma0, beta })
    }

    pub fn from_temperature(shape: BathShape, gamma0: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) || temperature.is_nan() {
            return Err(Error::InvalidBath(format!("temperature must be positive, got {temperature}")));
        }
        Self::new(shape, gamma0, 1.0 / temperature)
    }

    pub fn shape(&self) -> BathShape {
        self.shape
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_shape(&self, shape: BathShape) -> Result<Self> {
        Self::new(shape, self.gamma0, self.beta)
    }

    pub fn gamma(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::NonFinite("bath frequency".into()));
        }
        if omega.abs() < 1e-14 * self.gamma0.max(1.0) {
            return Err(Error::ZeroFrequency);
        }
        let x = self.beta * omega;
        Ok(match self.shape {
            BathShape::Ohmic => self.gamma0 * omega / -(-x).exp_m1(),
            BathShape::FlatKMS => {
                if x >= 0.0 {
                    self.gamma0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    self.gamma0 * e / (1.0 + e)
                }
            }
        })
    }
}
