//! Fronthaul quantizer model.
//!
//! Each AP forwards its MRC output for UE `k` through a uniform scalar
//! quantizer with `b` bits. Under the additive quantization noise model the
//! quantizer acts as a gain `1 - rho(b)` plus uncorrelated noise of variance
//! `rho(1 - rho)` times the input power, where `rho(b)` is the normalized MSE
//! of the MSE-optimal `2^b`-level uniform quantizer for a Gaussian input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distortion for 1..=5 bits, as tabulated by Max (1960).
pub const MAX_TABLE: [f64; 5] = [0.3634, 0.1188, 0.03744, 0.01154, 0.003490];

/// Distortion for 6..=12 bits: minimum over the step size of the normalized
/// MSE of a `2^b`-level midrise uniform quantizer for unit-variance Gaussian
/// input. Regenerated by the step-size search in the test suite.
pub const EXTENDED_TABLE: [f64; 7] = [
    1.040_045_408_791_933e-3,
    3.043_327_708_240_368e-4,
    8.768_618_578_409_376e-5,
    2.491_902_964_627_853e-5,
    6.997_005_197_134_939e-6,
    1.944_413_128_951_275e-6,
    5.355_365_368_440_045e-7,
];

pub const DEFAULT_MAX_BITS: u32 = 12;

/// Where a table entry comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoSource {
    /// Zero-rate link: the CPU receives nothing.
    ZeroRate,
    /// Max's published uniform-quantizer table.
    MaxTable,
    /// Numerically optimized uniform quantizer.
    NumericExtension,
}

impl RhoSource {
    pub fn describe(self) -> &'static str {
        match self {
            RhoSource::ZeroRate => "convention: unallocated link, gain 0",
            RhoSource::MaxTable => "Max (1960) uniform quantizer table",
            RhoSource::NumericExtension => "step-size-optimized uniform quantizer, Gaussian input",
        }
    }
}

/// Bits-to-distortion lookup with an inclusive per-link bit cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationProfile {
    rho_table: Vec<f64>,
    max_bits: u32,
}

impl Default for QuantizationProfile {
    fn default() -> Self {
        Self::with_max_bits(DEFAULT_MAX_BITS).expect("default cap is within the table")
    }
}

impl QuantizationProfile {
    /// Profile covering `0..=max_bits` bits from the shipped tables.
    pub fn with_max_bits(max_bits: u32) -> Result<Self> {
        let available = (MAX_TABLE.len() + EXTENDED_TABLE.len()) as u32;
        if max_bits > available {
            return Err(Error::Domain(format!(
                "max_bits {max_bits} exceeds tabulated range 0..={available}"
            )));
        }
        let rho_table = std::iter::once(1.0)
            .chain(MAX_TABLE.iter().copied())
            .chain(EXTENDED_TABLE.iter().copied())
            .take(max_bits as usize + 1)
            .collect();
        Ok(Self {
            rho_table,
            max_bits,
        })
    }

    /// Profile from an explicit table indexed by bits (entry 0 must be 1).
    pub fn from_table(rho_table: Vec<f64>) -> Result<Self> {
        if rho_table.first() != Some(&1.0) {
            return Err(Error::Domain("rho(0) must equal 1".into()));
        }
        for w in rho_table.windows(2) {
            if !(w[1] < w[0] && w[1] > 0.0) {
                return Err(Error::Domain(format!(
                    "rho must be strictly decreasing in (0, 1): {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let max_bits = (rho_table.len() - 1) as u32;
        Ok(Self {
            rho_table,
            max_bits,
        })
    }

    pub fn max_bits(&self) -> u32 {
        self.max_bits
    }

    /// Quantization distortion for `bits`; `rho(0) = 1`.
    pub fn rho_of_bits(&self, bits: u32) -> Result<f64> {
        self.rho_table
            .get(bits as usize)
            .copied()
            .ok_or_else(|| Error::Domain(format!("{bits} bits exceeds max_bits {}", self.max_bits)))
    }

    /// AQNM gain `1 - rho(bits)`.
    pub fn gain(&self, bits: u32) -> Result<f64> {
        self.rho_of_bits(bits).map(|r| 1.0 - r)
    }

    pub fn source(&self, bits: u32) -> RhoSource {
        match bits {
            0 => RhoSource::ZeroRate,
            1..=5 => RhoSource::MaxTable,
            _ => RhoSource::NumericExtension,
        }
    }

    /// Diagonal of `Omega_k = diag(1 - rho(b_mk))` for one UE's bit column.
    pub fn omega_matrix(&self, bits_for_ue: &[u32]) -> Result<Vec<f64>> {
        bits_for_ue.iter().map(|&b| self.gain(b)).collect()
    }

    /// `(bits, rho, 1 - rho, source)` rows for display.
    pub fn rows(&self) -> impl Iterator<Item = (u32, f64, f64, RhoSource)> + '_ {
        self.rho_table
            .iter()
            .enumerate()
            .map(|(b, &r)| (b as u32, r, 1.0 - r, self.source(b as u32)))
    }
}
