#![allow(dead_code)]

use fronthaul_core::allocation::BitAllocation;
use fronthaul_core::channel::{grid_ap_positions, ChannelStatistics, Geometry, SystemConfig, UeArea};
use fronthaul_core::rng::seeded;
use rand::Rng;

/// Table-III config resized to `m` APs, `k` UEs, `n` antennas (`τp = K`).
pub fn config(m: usize, k: usize, n: usize) -> SystemConfig {
    let mut c = SystemConfig::table3();
    c.num_aps = m;
    c.num_ues = k;
    c.antennas_per_ap = n;
    c.pilot_length = k;
    c
}

pub fn instance(m: usize, k: usize, n: usize, seed: u64) -> (SystemConfig, ChannelStatistics) {
    let c = config(m, k, n);
    let mut rng = seeded(seed);
    let geometry = Geometry::new(grid_ap_positions(m, 1000.0), UeArea::centered(1000.0).sample(k, &mut rng));
    let stats = ChannelStatistics::from_geometry(&geometry, &c, &mut rng).unwrap();
    (c, stats)
}

pub fn random_bits(m: usize, k: usize, max: u32, seed: u64) -> BitAllocation {
    let mut rng = seeded(seed);
    BitAllocation::from_flat(m, k, (0..m * k).map(|_| rng.random_range(0..=max)).collect()).unwrap()
}

/// Standard normal pdf and cdf.
fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `∫_a^b (x − y)² φ(x) dx` in closed form.
fn interval_mse(a: f64, b: f64, y: f64) -> f64 {
    let (pa, pb) = (phi(a), phi(b));
    let (ca, cb) = if a == f64::NEG_INFINITY { (0.0, cdf(b)) } else { (cdf(a), cdf(b)) };
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    (cb - ca) * (1.0 + y * y) + apa - bpb - 2.0 * y * (pa - pb)
}

/// NMSE of the symmetric `2^bits`-level midrise uniform quantizer with step
/// `delta` for a unit-variance Gaussian input.
pub fn uniform_quantizer_nmse(bits: u32, delta: f64) -> f64 {
    let levels = 1usize << bits;
    let half = levels / 2;
    // Positive half, doubled by symmetry.
    let mut total = 0.0;
    for i in 0..half {
        let lo = i as f64 * delta;
        let hi = if i + 1 == half { f64::INFINITY } else { (i + 1) as f64 * delta };
        let y = (i as f64 + 0.5) * delta;
        let hi_pdf = if hi.is_finite() { hi } else { f64::INFINITY };
        total += interval_mse_right(lo, hi_pdf, y);
    }
    2.0 * total
}

fn interval_mse_right(a: f64, b: f64, y: f64) -> f64 {
    if b.is_infinite() {
        let pa = phi(a);
        let tail = 0.5 * libm::erfc(a / std::f64::consts::SQRT_2);
        tail * (1.0 + y * y) + a * pa - 2.0 * y * pa
    } else {
        interval_mse(a, b, y)
    }
}

/// `(optimal step, minimal NMSE)` by golden-section search.
pub fn optimal_uniform_quantizer(bits: u32) -> (f64, f64) {
    let f = |d: f64| uniform_quantizer_nmse(bits, d);
    let (mut lo, mut hi) = (1e-4, 4.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let d = 0.5 * (lo + hi);
    (d, f(d))
}

/// Round to `sig` significant figures.
pub fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let p = sig - 1 - x.abs().log10().floor() as i32;
    let s = 10f64.powi(p);
    (x * s).round() / s
}
