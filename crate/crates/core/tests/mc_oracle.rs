mod common;

use common::{instance, random_bits};
use fronthaul_core::allocation::BitAllocation;
use fronthaul_core::channel::ChannelStatistics;
use fronthaul_core::oracle::{
    dominant_generalized_eigvec, estimate_all_components, estimate_components, rayleigh_quotient, sample_realization,
};
use fronthaul_core::quantization::QuantizationProfile;
use fronthaul_core::rng::{seeded, substream};
use fronthaul_core::sinr::{
    aux_matrices, build_ue_matrices, components_from_matrices, evaluate_ue, optimal_filter, sinr_components,
    ReceiverFilter,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sample mean and standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn estimate_moments_match_statistics() {
    let (c, stats) = instance(2, 2, 4, 1);
    let mut rng = seeded(2);
    let draws = 100_000 / 4;
    let (mut re, mut ghat_pow, mut err_pow, mut cross) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..draws {
        let r = sample_realization(&stats, &c, &mut rng);
        for n in 0..4 {
            let gh = r.g_hat(1, 0)[n];
            let e = r.e(1, 0)[n];
            re.push(gh.re);
            ghat_pow.push(gh.norm_sqr());
            err_pow.push(e.norm_sqr());
            cross.push((gh.conj() * e).re);
        }
    }
    let (g, b) = (stats.gamma(1, 0), stats.beta(1, 0));
    let (m, se) = mean_se(&re);
    assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
    let (v, _) = mean_se(&ghat_pow);
    assert!((v - g).abs() / g < 0.02, "var(ĝ) {v} vs γ {g}");
    let (ve, _) = mean_se(&err_pow);
    assert!((ve - (b - g)).abs() / (b - g) < 0.02);
    let (cm, cse) = mean_se(&cross);
    assert!(cm.abs() < 3.0 * cse);
}

#[test]
fn single_ap_desired_power() {
    let (c, stats) = instance(1, 1, 8, 3);
    // 12 bits: ρ ≈ 5e-7, the closest the tables get to an unquantized link.
    let bits = BitAllocation::from_ap_bits(&[12], 1);
    let profile = QuantizationProfile::default();
    let est = estimate_components(0, &stats, &bits, &ReceiverFilter::uniform(1), &c, &profile, 100_000, 9).unwrap();
    let g = stats.gamma(0, 0);
    let w = 1.0 - profile.rho_of_bits(12).unwrap();
    let expected = c.uplink_power * 64.0 * (w * g).powi(2);
    assert!((est.mean.desired - expected).abs() < 3.0 * est.std_error.desired);
}

#[test]
fn fourth_moment_and_quantizer_input_power() {
    let (c, stats) = instance(2, 3, 4, 4);
    let n = 4.0;
    let mut rng = seeded(5);
    let (mut fourth, mut input) = (Vec::new(), Vec::new());
    let sqrt_pu = c.uplink_power.sqrt();
    for _ in 0..100_000 {
        let r = sample_realization(&stats, &c, &mut rng);
        let gh = r.g_hat(0, 1);
        fourth.push(dot_h(gh, gh).norm_sqr());
        let mut y = vec![Complex64::new(0.0, 0.0); 4];
        for kp in 0..3 {
            let s = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
            for (yi, gv) in y.iter_mut().zip(r.g(0, kp)) {
                *yi += gv * s * sqrt_pu;
            }
        }
        for yi in y.iter_mut() {
            let sd = (c.noise_power / 2.0).sqrt();
            *yi += Complex64::new(sd * rng.sample::<f64, _>(rand_distr::StandardNormal), sd * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        input.push(dot_h(gh, &y).norm_sqr());
    }
    let g = stats.gamma(0, 1);
    let (m4, se4) = mean_se(&fourth);
    assert!((m4 - n * (n + 1.0) * g * g).abs() < 3.0 * se4, "{m4} vs {}", n * (n + 1.0) * g * g);
    let beta_sum: f64 = (0..3).map(|k| stats.beta(0, k)).sum();
    let closed = c.uplink_power * n * n * g * g + c.uplink_power * n * g * beta_sum + c.noise_power * n * g;
    let (mi, sei) = mean_se(&input);
    assert!((mi - closed).abs() < 3.0 * sei, "{mi} vs {closed} ± {sei}");
}

fn instance_checks(seed: u64, samples: usize) -> Vec<(String, f64)> {
    let mut rng = substream(seed, "instance", &[]);
    let m = rng.random_range(1..=4);
    let k = rng.random_range(1..=4);
    let n = rng.random_range(1..=8);
    let (c, stats) = instance(m, k, n, seed);
    let profile = QuantizationProfile::default();
    let bits = random_bits(m, k, 6, seed + 77);
    let filters: Vec<ReceiverFilter> = (0..k).map(|u| evaluate_ue(u, &stats, &bits, &c, &profile).unwrap().filter).collect();
    let est = estimate_all_components(&stats, &bits, &filters, &c, &profile, samples, seed).unwrap();
    let mut out = Vec::new();
    for u in 0..k {
        let closed = sinr_components(u, &stats, &bits, &filters[u], &c, &profile).unwrap();
        for ch in est[u].checks(&closed) {
            out.push((format!("seed {seed} ue {u} {}", ch.name), ch.z_score()));
        }
    }
    out
}

#[test]
fn components_agree_on_random_instances() {
    let mut z = Vec::new();
    for seed in 0..10 {
        z.extend(instance_checks(seed, 50_000));
    }
    let pass = z.iter().filter(|(_, s)| *s <= 3.0).count();
    let worst = z.iter().cloned().fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    assert!(pass as f64 >= 0.95 * z.len() as f64, "{pass}/{} within 3σ; worst {worst:?}", z.len());
}

#[test]
fn random_filter_components_agree() {
    let (c, stats) = instance(3, 2, 4, 21);
    let p = QuantizationProfile::default();
    let bits = random_bits(3, 2, 5, 22);
    let mut rng = seeded(23);
    let f = ReceiverFilter::new((0..3).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()).unwrap();
    let est = estimate_components(1, &stats, &bits, &f, &c, &p, 80_000, 24).unwrap();
    let closed = sinr_components(1, &stats, &bits, &f, &c, &p).unwrap();
    for ch in est.checks(&closed) {
        assert!(ch.within(4.0), "{ch:?}");
    }
}

#[test]
fn standard_errors_shrink_as_inverse_root_n() {
    let (c, stats) = instance(2, 2, 4, 31);
    let p = QuantizationProfile::default();
    let bits = random_bits(2, 2, 4, 32);
    let f = evaluate_ue(0, &stats, &bits, &c, &p).unwrap().filter;
    let se: Vec<[f64; 5]> = [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&n| estimate_components(0, &stats, &bits, &f, &c, &p, n, 33).unwrap().std_error.as_array())
        .collect();
    for (i, (hi, lo)) in se[2].iter().zip(&se[0]).enumerate() {
        // log10 slope over two decades.
        let slope = (hi.log10() - lo.log10()) / 2.0;
        assert!((slope + 0.5).abs() < 0.1, "component {i}: slope {slope}");
    }
}

#[test]
fn estimates_are_deterministic() {
    let (c, stats) = instance(2, 2, 4, 41);
    let p = QuantizationProfile::default();
    let bits = random_bits(2, 2, 4, 42);
    let f = ReceiverFilter::uniform(2);
    let a = estimate_components(0, &stats, &bits, &f, &c, &p, 5_000, 43).unwrap();
    let b = estimate_components(0, &stats, &bits, &f, &c, &p, 5_000, 43).unwrap();
    assert_eq!(a, b);
    assert!(estimate_components(0, &stats, &bits, &f, &c, &p, 999, 43).is_err());
}

fn closed_form_pair(stats: &ChannelStatistics, c: &fronthaul_core::channel::SystemConfig, bits: &BitAllocation) -> (DMatrix<Complex64>, DMatrix<Complex64>, f64) {
    let p = QuantizationProfile::default();
    let mats = build_ue_matrices(0, stats, bits, &p).unwrap();
    let aux = aux_matrices(&mats, c);
    let u = optimal_filter(&aux).filter;
    let s = components_from_matrices(&mats, &u, c).unwrap().sinr();
    (aux.a_matrix(), aux.b_matrix(), s)
}

#[test]
fn power_iteration_agrees_with_closed_form_filter() {
    for seed in 0..50 {
        let (c, stats) = instance(4, 3, 8, 100 + seed);
        let mut bits = random_bits(4, 3, 6, 200 + seed);
        for m in 0..4 {
            bits.set(m, 0, bits.get(m, 0).max(1));
        }
        let (a, b, s) = closed_form_pair(&stats, &c, &bits);
        let sol = dominant_generalized_eigvec(&a, &b).unwrap();
        assert!((sol.quotient - s).abs() / s < 1e-10, "{} vs {s}", sol.quotient);
        let dense_q = rayleigh_quotient(&a, &b, &sol.vector);
        assert!((dense_q - sol.quotient).abs() / s < 1e-12);
    }
}

#[test]
fn power_iteration_on_general_hermitian_pair() {
    let mut rng = seeded(300);
    let r = DMatrix::from_fn(3, 3, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let a = &r * r.adjoint();
    let b = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.0)]));
    let sol = dominant_generalized_eigvec(&a, &b).unwrap();
    for _ in 0..1000 {
        let v = DVector::from_fn(3, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        assert!(rayleigh_quotient(&a, &b, &v) <= sol.quotient * (1.0 + 1e-9));
    }
}
