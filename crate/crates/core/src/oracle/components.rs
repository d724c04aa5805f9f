use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::realization::{complex_normal, sample_realization};
use crate::allocation::BitAllocation;
use crate::channel::{ChannelStatistics, SystemConfig};
use crate::error::{Error, Result};
use crate::quantization::QuantizationProfile;
use crate::rng::substream;
use crate::sinr::{ReceiverFilter, SinrComponents};

/// Realizations per parallel work unit. Results depend on the seed and this
/// partition only, not on the thread count.
pub const CHUNK_SIZE: usize = 2048;

const MIN_SAMPLES: usize = 1000;

/// Sample means of the five received-power terms with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimates {
    pub mean: SinrComponents,
    pub std_error: SinrComponents,
    pub samples: usize,
}

/// Closed-form value versus estimate for one term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub name: &'static str,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl ComponentCheck {
    /// `|closed − estimate| / se`; 0 when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let d = (self.closed_form - self.estimate).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }
}

impl ComponentEstimates {
    pub fn checks(&self, closed: &SinrComponents) -> [ComponentCheck; 5] {
        let (c, m, s) = (closed.as_array(), self.mean.as_array(), self.std_error.as_array());
        std::array::from_fn(|i| ComponentCheck {
            name: SinrComponents::NAMES[i],
            closed_form: c[i],
            estimate: m[i],
            std_error: s[i],
        })
    }
}

/// Running sums for one UE.
#[derive(Debug, Clone, Default)]
struct Acc {
    n: f64,
    // X = sqrt(p_u) Σ ū ω ĝᴴ g  (complex): first, second and mixed moments.
    sr: f64,
    si: f64,
    srr: f64,
    sii: f64,
    sri: f64,
    // |X|² times Re X / Im X, and |X|⁴.
    s_aar: f64,
    s_aai: f64,
    s_a4: f64,
    // Real-valued terms: interference, noise, quantization (sum, sum of squares).
    scalar: [(f64, f64); 3],
}

impl Acc {
    fn push(&mut self, x: Complex64, scalars: [f64; 3]) {
        let (r, i) = (x.re, x.im);
        let a2 = r * r + i * i;
        self.n += 1.0;
        self.sr += r;
        self.si += i;
        self.srr += r * r;
        self.sii += i * i;
        self.sri += r * i;
        self.s_aar += a2 * r;
        self.s_aai += a2 * i;
        self.s_a4 += a2 * a2;
        for (acc, v) in self.scalar.iter_mut().zip(scalars) {
            acc.0 += v;
            acc.1 += v * v;
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.sr += o.sr;
        self.si += o.si;
        self.srr += o.srr;
        self.sii += o.sii;
        self.sri += o.sri;
        self.s_aar += o.s_aar;
        self.s_aai += o.s_aai;
        self.s_a4 += o.s_a4;
        for (a, b) in self.scalar.iter_mut().zip(&o.scalar) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }

    fn finish(&self) -> ComponentEstimates {
        let n = self.n;
        let (mr, mi) = (self.sr / n, self.si / n);
        let crr = self.srr / n - mr * mr;
        let cii = self.sii / n - mi * mi;
        let cri = self.sri / n - mr * mi;
        let m2 = mr * mr + mi * mi;
        let var_x = (crr + cii) * n / (n - 1.0);

        // Desired: |E X|², bias-corrected; delta-method error 2|m| · se(proj).
        let desired = (m2 - var_x / n).max(0.0);
        let se_desired = if m2 > 0.0 {
            let var_proj = (mr * mr * crr + mi * mi * cii + 2.0 * mr * mi * cri) / m2;
            2.0 * m2.sqrt() * (var_proj.max(0.0) / n).sqrt()
        } else {
            (var_x / n).sqrt()
        };

        // Beamforming uncertainty: Var X. Influence function
        // |X|² − 2 Re(X m̄), whose variance follows from the raw moments.
        let e_a2 = self.srr / n + self.sii / n;
        let e_a4 = self.s_a4 / n;
        let e_proj = mr * mr + mi * mi; // E Re(X m̄) = |m|²
        let e_a2_proj = (self.s_aar * mr + self.s_aai * mi) / n;
        let e_proj2 = (mr * mr * self.srr + mi * mi * self.sii + 2.0 * mr * mi * self.sri) / n;
        let var_a2 = e_a4 - e_a2 * e_a2;
        let cov = e_a2_proj - e_a2 * e_proj;
        let var_proj = e_proj2 - e_proj * e_proj;
        let var_if = (var_a2 - 4.0 * cov + 4.0 * var_proj).max(0.0);
        let se_bu = (var_if / n).sqrt();

        let scalar: [(f64, f64); 3] = std::array::from_fn(|j| {
            let (s, ss) = self.scalar[j];
            let mean = s / n;
            let var = (ss / n - mean * mean).max(0.0) * n / (n - 1.0);
            (mean, (var / n).sqrt())
        });
        ComponentEstimates {
            mean: SinrComponents {
                desired,
                beamforming_uncertainty: var_x,
                interference: scalar[0].0,
                noise: scalar[1].0,
                quantization: scalar[2].0,
            },
            std_error: SinrComponents {
                desired: se_desired,
                beamforming_uncertainty: se_bu,
                interference: scalar[0].1,
                noise: scalar[1].1,
                quantization: scalar[2].1,
            },
            samples: n as usize,
        }
    }
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(
        if rng.random::<bool>() { s } else { -s },
        if rng.random::<bool>() { s } else { -s },
    )
}

fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Monte-Carlo estimates of all five terms for every UE, sharing one set of
/// realizations. `filters[k]` is UE `k`'s unit-norm combiner.
#[allow(clippy::too_many_arguments)]
pub fn estimate_all_components(
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    filters: &[ReceiverFilter],
    config: &SystemConfig,
    profile: &QuantizationProfile,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<ComponentEstimates>> {
    let (m_count, k_count) = (stats.num_aps(), stats.num_ues());
    if num_samples < MIN_SAMPLES {
        return Err(Error::Oracle(format!(
            "need at least {MIN_SAMPLES} samples, got {num_samples}"
        )));
    }
    if filters.len() != k_count || filters.iter().any(|f| f.coefficients().len() != m_count) {
        return Err(Error::Oracle("one M-tap filter per UE required".into()));
    }
    let rho = (0..m_count * k_count)
        .map(|i| profile.rho_of_bits(bits.as_flat()[i]))
        .collect::<Result<Vec<f64>>>()?;
    let sqrt_pu = config.uplink_power.sqrt();
    let chunks = num_samples.div_ceil(CHUNK_SIZE);

    let partial: Vec<Vec<Acc>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, "oracle", &[c as u64]);
            let count = CHUNK_SIZE.min(num_samples - c * CHUNK_SIZE);
            let mut acc = vec![Acc::default(); k_count];
            for _ in 0..count {
                let real = sample_realization(stats, config, &mut rng);
                let s: Vec<Complex64> = (0..k_count).map(|_| qpsk(&mut rng)).collect();
                let noise: Vec<Vec<Complex64>> = (0..m_count)
                    .map(|_| (0..config.antennas_per_ap).map(|_| complex_normal(&mut rng, config.noise_power)).collect())
                    .collect();
                // y_m = Σ_k' sqrt(p_u) g_mk' s_k' + n_m
                let y: Vec<Vec<Complex64>> = (0..m_count)
                    .map(|m| {
                        let mut ym = noise[m].clone();
                        for (kp, &sk) in s.iter().enumerate() {
                            for (acc, &gv) in ym.iter_mut().zip(real.g(m, kp)) {
                                *acc += gv * sk * sqrt_pu;
                            }
                        }
                        ym
                    })
                    .collect();
                for k in 0..k_count {
                    let u = filters[k].coefficients();
                    let mut x = Complex64::new(0.0, 0.0);
                    let mut interf = vec![Complex64::new(0.0, 0.0); k_count];
                    let mut nz = Complex64::new(0.0, 0.0);
                    let mut quant = 0.0;
                    for m in 0..m_count {
                        let r = rho[m * k_count + k];
                        let w = 1.0 - r;
                        let coef = u[m].conj() * w;
                        let gh = real.g_hat(m, k);
                        for (kp, slot) in interf.iter_mut().enumerate() {
                            let proj = dot_h(gh, real.g(m, kp)) * sqrt_pu;
                            if kp == k {
                                x += coef * proj;
                            } else {
                                *slot += coef * proj;
                            }
                        }
                        nz += coef * dot_h(gh, &noise[m]);
                        quant += u[m].norm_sqr() * r * w * dot_h(gh, &y[m]).norm_sqr();
                    }
                    let interference: f64 = interf.iter().map(Complex64::norm_sqr).sum();
                    acc[k].push(x, [interference, nz.norm_sqr(), quant]);
                }
            }
            acc
        })
        .collect();

    let mut total = vec![Acc::default(); k_count];
    for chunk in &partial {
        for (t, a) in total.iter_mut().zip(chunk) {
            t.merge(a);
        }
    }
    Ok(total.iter().map(Acc::finish).collect())
}

/// Monte-Carlo estimates of the five terms for UE `k` under `filter`.
/// The other UEs are simulated as interferers with uniform filters.
#[allow(clippy::too_many_arguments)]
pub fn estimate_components(
    k: usize,
    stats: &ChannelStatistics,
    bits: &BitAllocation,
    filter: &ReceiverFilter,
    config: &SystemConfig,
    profile: &QuantizationProfile,
    num_samples: usize,
    seed: u64,
) -> Result<ComponentEstimates> {
    let k_count = stats.num_ues();
    if k >= k_count {
        return Err(Error::IndexOutOfRange {
            what: "UE",
            index: k,
            len: k_count,
        });
    }
    let mut filters = vec![ReceiverFilter::uniform(stats.num_aps()); k_count];
    filters[k] = filter.clone();
    Ok(estimate_all_components(stats, bits, &filters, config, profile, num_samples, seed)?.swap_remove(k))
}
