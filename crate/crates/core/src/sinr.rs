//! Closed-form uplink SINR under fronthaul quantization.
//!
//! The CPU combines the quantized MRC outputs of all APs for UE `k` with a
//! unit-norm filter `u_k`. Using only channel statistics, the received power
//! splits into five terms: desired signal, beamforming uncertainty,
//! inter-user interference, thermal noise and quantization noise. The
//! componentwise sum is the reference path; [`sinr_compact`] evaluates the
//! same ratio as a pair of Hermitian forms and is kept for cross-checking.
//!
//! All matrices involved are diagonal except the rank-one numerator
//! `A_k = a aᴴ`, `a = sqrt(N) Ω_k γ_k`, so the optimal filter is
//! `u ∝ B_k⁻¹ a` and costs `O(M)` per UE.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{BitAllocation, Objective};
use crate::channel::{ChannelStatistics, SystemConfig};
use crate::error::{Error, Result};
use crate::quantization::QuantizationProfile;

const UNIT_NORM_TOL: f64 = 1e-9;

/// Per-UE diagonal factors of the SINR expression.
#[derive(Debug, Clone, PartialEq)]
pub struct UeMatrices {
    pub ue: usize,
    /// `γ_k = [γ_1k, …, γ_Mk]`; also the diagonal of `Γ_k`.
    pub gamma: Vec<f64>,
    /// Diagonal of `Ω_k`, entries `1 - ρ(b_mk)`.
    pub omega: Vec<f64>,
    /// `ρ(b_mk)` per AP.
    pub rho: Vec<f64>,
    /// `d[k'][m] = γ_mk β_mk'`, the diagonals of `D_kk'`.
    pub d: Vec<Vec<f64>>,
}

impl UeMatrices {
    pub fn num_aps(&self) -> usize {
        self.gamma.len()
    }

    /// True when every link of this UE carries zero bits.
    pub fn is_degenerate(&self) -> bool {
        self.omega.iter().all(|&w| w == 0.0)
    }

    /// `Σ_k' D_kk'` diagonal.
    pub fn d_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.num_aps()];
        for dk in &self.d {
            for (acc, v) in s.iter_mut().zip(dk) {
                *acc += v;
            }
        }
        s
    }
}

/// Assemble `γ_k`, `Γ_k`, `Ω_k` and the `D_kk'` family for UE `k`.
pub fn build_ue_matrices(
    k: usize,
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    profile: &QuantizationProfile,
) -> Result<UeMatrices> {
    let (m_count, k_count) = (stats.num_aps(), stats.num_ues());
    if k >= k_count {
        return Err(Error::IndexOutOfRange {
            what: "UE",
            index: k,
            len: k_count,
        });
    }
    if bits.num_aps() != m_count || bits.num_ues() != k_count {
        return Err(Error::Infeasible(format!(
            "allocation is {}x{}, statistics are {m_count}x{k_count}",
            bits.num_aps(),
            bits.num_ues()
        )));
    }
    let gamma: Vec<f64> = (0..m_count).map(|m| stats.gamma(m, k)).collect();
    let rho = (0..m_count)
        .map(|m| profile.rho_of_bits(bits.get(m, k)))
        .collect::<Result<Vec<f64>>>()?;
    let omega = rho.iter().map(|r| 1.0 - r).collect();
    let d = (0..k_count)
        .map(|kp| (0..m_count).map(|m| gamma[m] * stats.beta(m, kp)).collect())
        .collect();
    Ok(UeMatrices {
        ue: k,
        gamma,
        omega,
        rho,
        d,
    })
}

/// The generalized Rayleigh quotient pair for one UE, normalized by `p_u N`.
///
/// `A = a aᴴ` with `a = sqrt(N) Ω γ`, and
/// `B = (N (I - Ω) Γ² + Σ_k' D_kk' + (σ²/p_u) Γ) Ω`, diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxMatrices {
    pub a: DVector<Complex64>,
    pub b_diag: Vec<f64>,
}

impl AuxMatrices {
    pub fn a_matrix(&self) -> DMatrix<Complex64> {
        &self.a * self.a.adjoint()
    }

    pub fn b_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.b_diag.len(),
            self.b_diag.iter().map(|&b| Complex64::new(b, 0.0)),
        ))
    }

    /// Coordinates where `B` is positive (the support of `Ω`).
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.b_diag
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > 0.0)
            .map(|(m, _)| m)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a.iter().all(|z| z.norm_sqr() == 0.0)
    }
}

pub fn aux_matrices(mats: &UeMatrices, config: &SystemConfig) -> AuxMatrices {
    let n = config.antennas_per_ap as f64;
    let noise_ratio = config.noise_power / config.uplink_power;
    let d_sum = mats.d_sum();
    let a = DVector::from_iterator(
        mats.num_aps(),
        mats.omega
            .iter()
            .zip(&mats.gamma)
            .map(|(w, g)| Complex64::new(n.sqrt() * w * g, 0.0)),
    );
    let b_diag = (0..mats.num_aps())
        .map(|m| {
            let g = mats.gamma[m];
            let w = mats.omega[m];
            (n * (1.0 - w) * g * g + d_sum[m] + noise_ratio * g) * w
        })
        .collect();
    AuxMatrices { a, b_diag }
}

/// Unit-norm CPU combining vector for one UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverFilter(Vec<Complex64>);

impl ReceiverFilter {
    /// Normalize `v`; fails on the zero vector.
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        let norm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero filter".into()));
        }
        Ok(Self(v.into_iter().map(|z| z / norm).collect()))
    }

    pub fn uniform(num_aps: usize) -> Self {
        let c = Complex64::new(1.0 / (num_aps as f64).sqrt(), 0.0);
        Self(vec![c; num_aps])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }
}

/// Result of the filter design: the filter and whether the UE is degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDesign {
    pub filter: ReceiverFilter,
    pub degenerate: bool,
}

/// Maximize `uᴴ A u / uᴴ B u` over unit vectors via the rank-one closed form
/// `u ∝ B⁻¹ a`, restricted to the support of `B`.
pub fn optimal_filter(aux: &AuxMatrices) -> FilterDesign {
    let m_count = aux.b_diag.len();
    if aux.is_degenerate() {
        return FilterDesign {
            filter: ReceiverFilter::uniform(m_count),
            degenerate: true,
        };
    }
    let v: Vec<Complex64> = aux
        .a
        .iter()
        .zip(&aux.b_diag)
        .map(|(a, &b)| if b > 0.0 { a / b } else { Complex64::new(0.0, 0.0) })
        .collect();
    match ReceiverFilter::new(v) {
        Ok(filter) => FilterDesign {
            filter,
            degenerate: false,
        },
        Err(_) => FilterDesign {
            filter: ReceiverFilter::uniform(m_count),
            degenerate: true,
        },
    }
}

/// Expected powers of the five received-signal terms for one UE and filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrComponents {
    /// `|r_k^D|²`
    pub desired: f64,
    /// `E|r_k^B|²`
    pub beamforming_uncertainty: f64,
    /// `Σ_{k'≠k} E|r_kk'^I|²`
    pub interference: f64,
    /// `E|r_k^N|²`
    pub noise: f64,
    /// `E|r_k^Q|²`
    pub quantization: f64,
}

impl SinrComponents {
    pub fn denominator(&self) -> f64 {
        self.beamforming_uncertainty + self.interference + self.noise + self.quantization
    }

    pub fn sinr(&self) -> f64 {
        let den = self.denominator();
        if self.desired == 0.0 || den <= 0.0 {
            0.0
        } else {
            self.desired / den
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.desired,
            self.beamforming_uncertainty,
            self.interference,
            self.noise,
            self.quantization,
        ]
    }

    pub const NAMES: [&'static str; 5] = [
        "desired",
        "beamforming_uncertainty",
        "interference",
        "noise",
        "quantization",
    ];
}

fn check_filter(filter: &ReceiverFilter, m_count: usize) -> Result<()> {
    if filter.coefficients().len() != m_count {
        return Err(Error::Domain(format!(
            "filter has {} taps, system has {m_count} APs",
            filter.coefficients().len()
        )));
    }
    if (filter.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Domain(format!(
            "filter norm {} is not 1",
            filter.norm()
        )));
    }
    Ok(())
}

/// The five closed-form terms for prebuilt per-UE matrices.
pub fn components_from_matrices(
    mats: &UeMatrices,
    filter: &ReceiverFilter,
    config: &SystemConfig,
) -> Result<SinrComponents> {
    let m_count = mats.num_aps();
    check_filter(filter, m_count)?;
    let n = config.antennas_per_ap as f64;
    let pu = config.uplink_power;
    let s2 = config.noise_power;
    let u = filter.coefficients();
    let k = mats.ue;

    let coherent: Complex64 = (0..m_count)
        .map(|m| u[m] * (mats.omega[m] * mats.gamma[m]))
        .sum();
    let desired = pu * n * n * coherent.norm_sqr();

    // |ũ_m|² = |u_m|² ω_m²
    let w2: Vec<f64> = (0..m_count)
        .map(|m| u[m].norm_sqr() * mats.omega[m] * mats.omega[m])
        .collect();
    let beamforming_uncertainty =
        pu * n * (0..m_count).map(|m| w2[m] * mats.d[k][m]).sum::<f64>();
    let interference = pu
        * n
        * mats
            .d
            .iter()
            .enumerate()
            .filter(|(kp, _)| *kp != k)
            .map(|(_, dk)| (0..m_count).map(|m| w2[m] * dk[m]).sum::<f64>())
            .sum::<f64>();
    let noise = s2 * n * (0..m_count).map(|m| w2[m] * mats.gamma[m]).sum::<f64>();

    // Quantizer input power per AP: p_u N² γ² + p_u N Σ_k' γ β_k' + σ² N γ.
    let d_sum = mats.d_sum();
    let quantization = (0..m_count)
        .map(|m| {
            let g = mats.gamma[m];
            let input = pu * n * n * g * g + pu * n * d_sum[m] + s2 * n * g;
            u[m].norm_sqr() * mats.rho[m] * mats.omega[m] * input
        })
        .sum();

    Ok(SinrComponents {
        desired,
        beamforming_uncertainty,
        interference,
        noise,
        quantization,
    })
}

/// The five closed-form terms of UE `k`'s SINR under `filter`.
pub fn sinr_components(
    k: usize,
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    filter: &ReceiverFilter,
    config: &SystemConfig,
    profile: &QuantizationProfile,
) -> Result<SinrComponents> {
    let mats = build_ue_matrices(k, stats, bits, profile)?;
    components_from_matrices(&mats, filter, config)
}

/// SINR of UE `k` under `filter`; 0 when the UE has no bits anywhere.
pub fn sinr_of_ue(
    k: usize,
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    filter: &ReceiverFilter,
    config: &SystemConfig,
    profile: &QuantizationProfile,
) -> Result<f64> {
    let mats = build_ue_matrices(k, stats, bits, profile)?;
    if mats.is_degenerate() {
        check_filter(filter, mats.num_aps())?;
        return Ok(0.0);
    }
    Ok(components_from_matrices(&mats, filter, config)?.sinr())
}

fn diag(v: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}

fn hermitian_form(u: &DVector<Complex64>, x: &DMatrix<Complex64>) -> f64 {
    (u.adjoint() * x * u)[(0, 0)].re
}

/// SINR as the ratio of two Hermitian forms in `u`, assembled from dense
/// matrices:
///
/// ```text
///            p_u N² uᴴ (Ωᴴ γ γᴴ Ω) u
/// ───────────────────────────────────────────────────────────────────────
/// uᴴ (p_u N² Γ² + Σ_k' p_u N D_kk' + σ² N Γ) Ω u − uᴴ Ωᴴ (p_u N² Γ²) Ω u
/// ```
pub fn sinr_compact(mats: &UeMatrices, filter: &ReceiverFilter, config: &SystemConfig) -> Result<f64> {
    let m_count = mats.num_aps();
    check_filter(filter, m_count)?;
    if mats.is_degenerate() {
        return Ok(0.0);
    }
    let n = config.antennas_per_ap as f64;
    let pu = Complex64::new(config.uplink_power, 0.0);
    let s2 = Complex64::new(config.noise_power, 0.0);
    let nn = Complex64::new(n, 0.0);
    let u = DVector::from_column_slice(filter.coefficients());
    let gamma_vec = DVector::from_iterator(m_count, mats.gamma.iter().map(|&g| Complex64::new(g, 0.0)));
    let gamma_m = diag(&mats.gamma);
    let omega = diag(&mats.omega);
    let gamma_sq = &gamma_m * &gamma_m;

    let numerator_m = omega.adjoint() * &gamma_vec * gamma_vec.adjoint() * &omega * (pu * nn * nn);
    let mut inner = &gamma_sq * (pu * nn * nn) + &gamma_m * (s2 * nn);
    for dk in &mats.d {
        inner += diag(dk) * (pu * nn);
    }
    let den_first = inner * &omega;
    let den_second = omega.adjoint() * (&gamma_sq * (pu * nn * nn)) * &omega;

    let num = hermitian_form(&u, &numerator_m);
    let den = hermitian_form(&u, &den_first) - hermitian_form(&u, &den_second);
    Ok(if num == 0.0 || den <= 0.0 { 0.0 } else { num / den })
}

/// Per-UE result inside an [`EvaluationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct UeEvaluation {
    pub sinr: f64,
    pub se: f64,
    pub filter: ReceiverFilter,
}

/// Per-UE SINR/SE, aggregates and the filters that realize them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub per_ue_sinr: Vec<f64>,
    pub per_ue_se: Vec<f64>,
    pub total_se: f64,
    pub min_se: f64,
    pub filters: Vec<ReceiverFilter>,
    pub objective: Objective,
}

impl EvaluationReport {
    /// The scalar selected by the report's objective.
    pub fn value(&self) -> f64 {
        self.value_for(self.objective)
    }

    pub fn value_for(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Total => self.total_se,
            Objective::MaxMin => self.min_se,
        }
    }

    fn from_ues(ues: Vec<UeEvaluation>, objective: Objective) -> Self {
        let per_ue_sinr: Vec<f64> = ues.iter().map(|u| u.sinr).collect();
        let per_ue_se: Vec<f64> = ues.iter().map(|u| u.se).collect();
        let total_se = per_ue_se.iter().sum();
        let min_se = per_ue_se.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            per_ue_sinr,
            per_ue_se,
            total_se,
            min_se: if min_se.is_finite() { min_se } else { 0.0 },
            filters: ues.into_iter().map(|u| u.filter).collect(),
            objective,
        }
    }
}

/// Optimal filter, SINR and SE for a single UE.
pub fn evaluate_ue(
    k: usize,
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    config: &SystemConfig,
    profile: &QuantizationProfile,
) -> Result<UeEvaluation> {
    let mats = build_ue_matrices(k, stats, bits, profile)?;
    let design = optimal_filter(&aux_matrices(&mats, config));
    let sinr = if design.degenerate {
        0.0
    } else {
        components_from_matrices(&mats, &design.filter, config)?.sinr()
    };
    Ok(UeEvaluation {
        sinr,
        se: (1.0 + sinr).log2(),
        filter: design.filter,
    })
}

fn check_allocation(
    bits: &BitAllocation,
    config: &SystemConfig,
    profile: &QuantizationProfile,
) -> Result<()> {
    bits.check_feasible(config.bit_budget, profile.max_bits())
}

/// Evaluate an allocation UE by UE.
pub fn evaluate_allocation(
    bits: &BitAllocation,
    stats: &ChannelStatistics,
    config: &SystemConfig,
    profile: &QuantizationProfile,
    objective: Objective,
) -> Result<EvaluationReport> {
    check_allocation(bits, config, profile)?;
    let ues = (0..stats.num_ues())
        .map(|k| evaluate_ue(k, stats, bits, config, profile))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_ues(ues, objective))
}

/// [`evaluate_allocation`] with the per-UE work spread over the rayon pool.
pub fn evaluate_allocation_par(
    bits: &BitAllocation,
    stats: &ChannelStatistics,
    config: &SystemConfig,
    profile: &QuantizationProfile,
    objective: Objective,
) -> Result<EvaluationReport> {
    check_allocation(bits, config, profile)?;
    let ues = (0..stats.num_ues())
        .into_par_iter()
        .map(|k| evaluate_ue(k, stats, bits, config, profile))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_ues(ues, objective))
}
