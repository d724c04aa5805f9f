use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{lmmse_coefficient, ChannelStatistics, SystemConfig};

/// One draw of every channel vector, its LMMSE estimate and the error.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub num_aps: usize,
    pub num_ues: usize,
    pub antennas: usize,
    /// `g[m * K + k]`, length `N` each.
    pub g: Vec<Vec<Complex64>>,
    pub g_hat: Vec<Vec<Complex64>>,
    pub e: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn g(&self, m: usize, k: usize) -> &[Complex64] {
        &self.g[m * self.num_ues + k]
    }

    pub fn g_hat(&self, m: usize, k: usize) -> &[Complex64] {
        &self.g_hat[m * self.num_ues + k]
    }

    pub fn e(&self, m: usize, k: usize) -> &[Complex64] {
        &self.e[m * self.num_ues + k]
    }
}

/// `CN(0, variance)` sample.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draw `g = sqrt(β) h`, the projected pilot observation
/// `sqrt(τp pp) g + w` and its LMMSE estimate.
pub fn sample_realization<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    config: &SystemConfig,
    rng: &mut R,
) -> ChannelRealization {
    let (m_count, k_count, n) = (stats.num_aps(), stats.num_ues(), config.antennas_per_ap);
    let pilot_gain = (config.pilot_length as f64 * config.pilot_power).sqrt();
    let mut g = Vec::with_capacity(m_count * k_count);
    let mut g_hat = Vec::with_capacity(m_count * k_count);
    let mut e = Vec::with_capacity(m_count * k_count);
    for m in 0..m_count {
        for k in 0..k_count {
            let beta = stats.beta(m, k);
            let c = lmmse_coefficient(beta, config);
            let gv: Vec<Complex64> = (0..n).map(|_| complex_normal(rng, 1.0) * beta.sqrt()).collect();
            let ghv: Vec<Complex64> = gv
                .iter()
                .map(|&x| (x * pilot_gain + complex_normal(rng, config.noise_power)) * c)
                .collect();
            e.push(gv.iter().zip(&ghv).map(|(a, b)| a - b).collect());
            g.push(gv);
            g_hat.push(ghv);
        }
    }
    ChannelRealization {
        num_aps: m_count,
        num_ues: k_count,
        antennas: n,
        g,
        g_hat,
        e,
    }
}
