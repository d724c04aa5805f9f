//! Long-term channel statistics from scenario geometry.
//!
//! Only large-scale quantities live here: the large-scale gain `beta` of each
//! AP–UE pair and the per-element variance `gamma` of its LMMSE channel
//! estimate. All powers are linear watts; decibels appear only in the
//! constructors that accept physical parameters.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant (J/K), as used for the thermal noise floor.
pub const BOLTZMANN: f64 = 1.381e-23;

/// AP–UE distances are floored here before entering the pathloss model.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Thermal noise power `BW · k_B · T0 · NF` in watts.
pub fn thermal_noise_power(bandwidth_hz: f64, temperature_k: f64, noise_figure_db: f64) -> f64 {
    bandwidth_hz * BOLTZMANN * temperature_k * db_to_linear(noise_figure_db)
}

/// System-level parameters shared by every AP–UE pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_ues: usize,
    pub antennas_per_ap: usize,
    /// Total fronthaul bits across all links.
    pub bit_budget: u32,
    /// Pilot transmit power (W).
    pub pilot_power: f64,
    /// Uplink data transmit power (W).
    pub uplink_power: f64,
    /// Receiver noise power (W).
    pub noise_power: f64,
    pub pilot_length: usize,
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub noise_figure_db: f64,
    pub noise_temperature_k: f64,
    pub shadowing_std_db: f64,
}

impl SystemConfig {
    /// Urban-micro defaults: 4 APs × 64 antennas, 8 UEs, 64 fronthaul bits,
    /// 15 dBm UEs, 2.1 GHz carrier, 20 MHz, 9 dB noise figure, 4 dB shadowing.
    pub fn table3() -> Self {
        let bandwidth_hz = 20e6;
        let noise_figure_db = 9.0;
        let noise_temperature_k = 290.0;
        Self {
            num_aps: 4,
            num_ues: 8,
            antennas_per_ap: 64,
            bit_budget: 64,
            pilot_power: dbm_to_watts(15.0),
            uplink_power: dbm_to_watts(15.0),
            noise_power: thermal_noise_power(bandwidth_hz, noise_temperature_k, noise_figure_db),
            pilot_length: 8,
            bandwidth_hz,
            carrier_freq_hz: 2.1e9,
            noise_figure_db,
            noise_temperature_k,
            shadowing_std_db: 4.0,
        }
    }

    /// Copy with a different UE count; the pilot length tracks K so pilots stay orthogonal.
    pub fn with_num_ues(&self, num_ues: usize) -> Self {
        Self {
            num_ues,
            pilot_length: self.pilot_length.max(num_ues),
            ..self.clone()
        }
    }

    pub fn carrier_ghz(&self) -> f64 {
        self.carrier_freq_hz / 1e9
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_aps == 0 {
            return bad("num_aps must be >= 1".into());
        }
        if self.num_ues == 0 {
            return bad("num_ues must be >= 1".into());
        }
        if self.antennas_per_ap == 0 {
            return bad("antennas_per_ap must be >= 1".into());
        }
        if self.pilot_length < self.num_ues {
            return bad(format!(
                "pilot_length ({}) must be >= num_ues ({}) for orthogonal pilots",
                self.pilot_length, self.num_ues
            ));
        }
        for (name, v) in [
            ("pilot_power", self.pilot_power),
            ("uplink_power", self.uplink_power),
            ("noise_power", self.noise_power),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return bad(format!(
                "shadowing_std_db must be >= 0, got {}",
                self.shadowing_std_db
            ));
        }
        Ok(())
    }
}

/// Planar AP and UE coordinates in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
}

impl Geometry {
    pub fn new(ap_positions: Vec<[f64; 2]>, ue_positions: Vec<[f64; 2]>) -> Self {
        Self {
            ap_positions,
            ue_positions,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// AP–UE distance with the [`MIN_DISTANCE_M`] floor applied.
    pub fn distance(&self, m: usize, k: usize) -> f64 {
        let [ax, ay] = self.ap_positions[m];
        let [ux, uy] = self.ue_positions[k];
        (ax - ux).hypot(ay - uy).max(MIN_DISTANCE_M)
    }
}

/// APs at the cell centers of a `g × g` grid covering a square of side
/// `side` centered at the origin, `g = ceil(sqrt(M))`, filled row by row
/// from the bottom. Four APs in a 1 km square land at (±250 m, ±250 m).
pub fn grid_ap_positions(num_aps: usize, side: f64) -> Vec<[f64; 2]> {
    let g = (num_aps as f64).sqrt().ceil().max(1.0) as usize;
    let cell = side / g as f64;
    (0..num_aps)
        .map(|i| {
            let (row, col) = (i / g, i % g);
            [
                -side / 2.0 + (col as f64 + 0.5) * cell,
                -side / 2.0 + (row as f64 + 0.5) * cell,
            ]
        })
        .collect()
}

/// Axis-aligned square region for UE drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeArea {
    pub side: f64,
    pub center: [f64; 2],
}

impl UeArea {
    pub fn centered(side: f64) -> Self {
        Self {
            side,
            center: [0.0, 0.0],
        }
    }

    /// Region displaced from the origin by `distance` along `direction`
    /// (normalized here, so any non-zero vector works).
    pub fn displaced(side: f64, direction: [f64; 2], distance: f64) -> Self {
        let norm = direction[0].hypot(direction[1]);
        let unit = if norm > 0.0 {
            [direction[0] / norm, direction[1] / norm]
        } else {
            [0.0, 0.0]
        };
        Self {
            side,
            center: [unit[0] * distance, unit[1] * distance],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, num_ues: usize, rng: &mut R) -> Vec<[f64; 2]> {
        let h = self.side / 2.0;
        (0..num_ues)
            .map(|_| {
                [
                    self.center[0] + rng.random_range(-h..=h),
                    self.center[1] + rng.random_range(-h..=h),
                ]
            })
            .collect()
    }
}

/// Urban-micro pathloss in dB: `36.7 log10(d) + 22.7 + 26 log10(f_c) + shadow`,
/// with `d` in meters and `f_c` in GHz.
pub fn pathloss_db(distance_m: f64, carrier_ghz: f64, shadow_db: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::Domain(format!(
            "pathloss distance must be > 0, got {distance_m}"
        )));
    }
    if carrier_ghz.is_nan() || carrier_ghz <= 0.0 {
        return Err(Error::Domain(format!(
            "carrier frequency must be > 0, got {carrier_ghz} GHz"
        )));
    }
    Ok(36.7 * distance_m.log10() + 22.7 + 26.0 * carrier_ghz.log10() + shadow_db)
}

/// Large-scale gains `beta[m][k] = 10^(-PL/10)`, one shadowing draw per pair
/// in AP-major order.
pub fn beta_from_geometry<R: Rng + ?Sized>(
    geometry: &Geometry,
    config: &SystemConfig,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (m_count, k_count) = (geometry.num_aps(), geometry.num_ues());
    let shadow = Normal::new(0.0, config.shadowing_std_db)
        .map_err(|e| Error::InvalidConfig(format!("shadowing std: {e}")))?;
    let mut beta = DMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        for k in 0..k_count {
            let delta = shadow.sample(rng);
            let pl = pathloss_db(geometry.distance(m, k), config.carrier_ghz(), delta)?;
            beta[(m, k)] = db_to_linear(-pl);
        }
    }
    Ok(beta)
}

/// Per-element variance of the LMMSE estimate:
/// `tau_p p_p beta² / (sigma² + tau_p p_p beta)`.
pub fn gamma_from_beta(beta: f64, config: &SystemConfig) -> f64 {
    let snr = config.pilot_length as f64 * config.pilot_power;
    snr * beta * beta / (config.noise_power + snr * beta)
}

/// LMMSE scaling `c = sqrt(tau_p p_p) beta / (sigma² + tau_p p_p beta)`.
pub fn lmmse_coefficient(beta: f64, config: &SystemConfig) -> f64 {
    let snr = config.pilot_length as f64 * config.pilot_power;
    snr.sqrt() * beta / (config.noise_power + snr * beta)
}

/// The channel knowledge available to the allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStatistics {
    beta: DMatrix<f64>,
    gamma: DMatrix<f64>,
    /// Row sums `sum_k' beta[m][k']`, cached for the SINR engine.
    beta_row_sums: Vec<f64>,
}

impl ChannelStatistics {
    pub fn new(beta: DMatrix<f64>, gamma: DMatrix<f64>) -> Result<Self> {
        if beta.shape() != gamma.shape() {
            return Err(Error::InvalidConfig(format!(
                "beta {:?} and gamma {:?} shapes differ",
                beta.shape(),
                gamma.shape()
            )));
        }
        for (b, g) in beta.iter().zip(gamma.iter()) {
            if !(b.is_finite() && *b > 0.0 && *g > 0.0 && g < b) {
                return Err(Error::InvalidConfig(format!(
                    "require 0 < gamma < beta, got gamma={g}, beta={b}"
                )));
            }
        }
        let beta_row_sums = beta.row_iter().map(|r| r.sum()).collect();
        Ok(Self {
            beta,
            gamma,
            beta_row_sums,
        })
    }

    /// Derive `gamma` from `beta` under `config`'s pilot parameters.
    pub fn from_beta(beta: DMatrix<f64>, config: &SystemConfig) -> Result<Self> {
        let gamma = beta.map(|b| gamma_from_beta(b, config));
        Self::new(beta, gamma)
    }

    /// Pathloss, shadowing and LMMSE statistics for a geometry.
    pub fn from_geometry<R: Rng + ?Sized>(
        geometry: &Geometry,
        config: &SystemConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let beta = beta_from_geometry(geometry, config, rng)?;
        Self::from_beta(beta, config)
    }

    pub fn num_aps(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_ues(&self) -> usize {
        self.beta.ncols()
    }

    pub fn beta(&self, m: usize, k: usize) -> f64 {
        self.beta[(m, k)]
    }

    pub fn gamma(&self, m: usize, k: usize) -> f64 {
        self.gamma[(m, k)]
    }

    pub fn beta_matrix(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn beta_row_sum(&self, m: usize) -> f64 {
        self.beta_row_sums[m]
    }
}
