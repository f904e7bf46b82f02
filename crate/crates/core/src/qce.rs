//! The quantized constant-envelope alphabet.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// The discrete per-antenna signal set `{η e^{j(2ℓ-1)π/L}, ℓ = 1..L}` in real form.
#[derive(Debug, Clone, PartialEq)]
pub struct QceSet {
    eta: f64,
    levels: usize,
    vertices: Vec<[f64; 2]>,
}

impl QceSet {
    /// Builds the alphabet for `levels` phases and total per-slot power `power` over `n_antennas`.
    pub fn new(levels: usize, power: f64, n_antennas: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Config("quantization levels must be at least 2"));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::Config("power must be positive and finite"));
        }
        if n_antennas == 0 {
            return Err(Error::Config("antenna count must be positive"));
        }
        let eta = libm::sqrt(power / n_antennas as f64);
        Ok(Self::with_amplitude(levels, eta))
    }

    /// Builds the alphabet directly from the amplitude `eta`.
    pub fn with_amplitude(levels: usize, eta: f64) -> Self {
        let vertices = (0..levels)
            .map(|l| {
                let phi = Self::phase_of(levels, l);
                [eta * libm::cos(phi), eta * libm::sin(phi)]
            })
            .collect();
        Self {
            eta,
            levels,
            vertices,
        }
    }

    fn phase_of(levels: usize, index: usize) -> f64 {
        (2 * index + 1) as f64 * PI / levels as f64
    }

    /// Constant amplitude `η`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of quantization levels `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Vertices in order of increasing phase; index `i` is `ℓ = i + 1`.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Phase of vertex `index` (0-based) in radians.
    pub fn phase(&self, index: usize) -> f64 {
        Self::phase_of(self.levels, index)
    }
}
