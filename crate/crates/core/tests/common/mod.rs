//! Brute-force nested-sum oracles and random test fields.

#![allow(dead_code)]

use std::collections::BTreeMap;

use blowup::{ModeRange, Shell, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Coeffs = BTreeMap<i64, Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn coeffs(u: &SpectralField) -> Coeffs {
    u.iter().filter(|(_, c)| *c != Complex64::new(0.0, 0.0)).collect()
}

pub fn restrict(u: &Coeffs, keep: impl Fn(i64) -> bool) -> Coeffs {
    u.iter().filter(|(k, _)| keep(**k)).map(|(k, c)| (*k, *c)).collect()
}

pub fn in_shell(s: &Shell, k: i64) -> bool {
    s.contains(k)
}

/// `(u * v)_k = sum_{p+q=k} u_p v_q` over every stored pair.
pub fn conv(u: &Coeffs, v: &Coeffs) -> Coeffs {
    let mut out = Coeffs::new();
    for (p, a) in u {
        for (q, b) in v {
            *out.entry(p + q).or_default() += a * b;
        }
    }
    out
}

/// Coefficients of `conj(u(x))`: `k -> conj(u_{-k})`.
pub fn conj_reflect(u: &Coeffs) -> Coeffs {
    u.iter().map(|(k, c)| (-k, c.conj())).collect()
}

pub fn scale(u: &Coeffs, s: Complex64) -> Coeffs {
    u.iter().map(|(k, c)| (*k, c * s)).collect()
}

pub fn add(u: &Coeffs, v: &Coeffs) -> Coeffs {
    let mut out = u.clone();
    for (k, c) in v {
        *out.entry(*k).or_default() += c;
    }
    out
}

pub fn get(u: &Coeffs, k: i64) -> Complex64 {
    u.get(&k).copied().unwrap_or_default()
}

/// `-(ik/2) sum_{p+q=k} u_p u_q`, all stored modes.
pub fn burgers_n(u: &Coeffs) -> Coeffs {
    conv(u, u)
        .into_iter()
        .map(|(k, c)| (k, c * Complex64::new(0.0, -0.5 * k as f64)))
        .collect()
}

/// Burgers t-model by the defining double sum over resolved `r` and shell `s`.
pub fn burgers_tmodel(u: &Coeffs, t: f64, r: ModeRange, s: &Shell) -> Coeffs {
    let ur = restrict(u, |k| r.contains(k));
    let w = scale(&restrict(&burgers_n(&ur), |k| s.contains(k)), Complex64::new(t, 0.0));
    let mut out = Coeffs::new();
    for (p, a) in &ur {
        for (q, b) in &w {
            let k = p + q;
            if r.contains(k) {
                *out.entry(k).or_default() += Complex64::new(0.0, -(k as f64)) * a * b;
            }
        }
    }
    out
}

/// `|u|^{2 power} v` as an iterated convolution.
pub fn modulus_power_times(u: &Coeffs, power: u32, v: &Coeffs) -> Coeffs {
    let ub = conj_reflect(u);
    let mut acc = v.clone();
    for _ in 0..power {
        acc = conv(&conv(&acc, u), &ub);
    }
    acc
}

/// `i |u|^{2 sigma} u`, all stored modes.
pub fn nls_n(u: &Coeffs, sigma: u32) -> Coeffs {
    scale(&modulus_power_times(u, sigma, u), I)
}

/// NLS Galerkin right-hand side on `range`.
pub fn nls_galerkin(u: &Coeffs, sigma: u32, range: ModeRange) -> Coeffs {
    let ur = restrict(u, |k| range.contains(k));
    let n = nls_n(&ur, sigma);
    range
        .iter()
        .map(|k| (k, get(&n, k) - I * (k * k) as f64 * get(&ur, k)))
        .collect()
}

/// `t Π_R[ i((σ+1)|u|^{2σ} w + σ|u|^{2σ-2} u² conj(w)) ]`, `w = Π_S N(Π_R u)`.
pub fn nls_tmodel(u: &Coeffs, t: f64, sigma: u32, r: ModeRange, s: &Shell) -> Coeffs {
    let ur = restrict(u, |k| r.contains(k));
    let w = restrict(&nls_n(&ur, sigma), |k| s.contains(k));
    let first = scale(&modulus_power_times(&ur, sigma, &w), Complex64::new((sigma + 1) as f64, 0.0));
    let u2wb = conv(&conv(&ur, &ur), &conj_reflect(&w));
    let second = scale(&modulus_power_times(&ur, sigma - 1, &u2wb), Complex64::new(sigma as f64, 0.0));
    let total = scale(&add(&first, &second), I * t);
    restrict(&total, |k| r.contains(k))
}

/// Moment-rate column `(sum_F 2Re(r conj u), sum_F 4Re(r conj u)|u|²)`.
pub fn rates(r: &Coeffs, u: &Coeffs, f: ModeRange) -> [f64; 2] {
    f.iter().fold([0.0, 0.0], |[a, b], k| {
        let uk = get(u, k);
        let x = (get(r, k) * uk.conj()).re;
        [a + 2.0 * x, b + 4.0 * x * uk.norm_sqr()]
    })
}

/// Largest coefficient difference relative to the largest coefficient.
pub fn rel_diff(got: &SpectralField, want: &Coeffs) -> f64 {
    let mut keys: Vec<i64> = got.range().iter().collect();
    keys.extend(want.keys().copied());
    let mut diff: f64 = 0.0;
    let mut size: f64 = 0.0;
    for k in keys {
        let w = get(want, k);
        let g = if got.range().contains(k) { got.get(k) } else { Complex64::default() };
        diff = diff.max((g - w).norm());
        size = size.max(w.norm());
    }
    diff / size.max(f64::MIN_POSITIVE)
}

fn sample(rng: &mut ChaCha8Rng, k: i64) -> Complex64 {
    let decay = 1.0 / (1.0 + 0.1 * (k * k) as f64);
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * decay
}

/// Conjugate-symmetric field on `symmetric(n)` with a zero Nyquist mode.
pub fn random_real(seed: u64, n: usize) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = ModeRange::symmetric(n);
    let mut u = SpectralField::zeros(range, 0.0);
    u.set(0, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
    for k in 1..(n as i64 / 2) {
        let c = sample(&mut rng, k);
        u.set(k, c);
        u.set(-k, c.conj());
    }
    u
}

/// Arbitrary complex field on `symmetric(n)` scaled to `max |u_k| = amp`.
pub fn random_complex(seed: u64, n: usize, amp: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = ModeRange::symmetric(n);
    let mut u = SpectralField::from_fn(range, 0.0, |_| Complex64::default());
    for k in range.iter() {
        u.set(k, sample(&mut rng, k));
    }
    let m = u.max_norm();
    u.scale(amp / m);
    u
}

/// Event log obeying `ξ = l^{-β₂}`, `α = l^{β₁}`, `T_c - T = l^{β₂/γ}` exactly,
/// so that `δ = γ β₁ / β₂` and `γ' = γ`.
pub fn synthetic_log(tc: f64, gamma: f64, beta1: f64, beta2: f64, count: usize) -> Vec<blowup::driver::RefinementEvent> {
    (0..count)
        .map(|i| {
            let resolution = 32usize << i;
            let l = blowup::driver::length_scale(resolution);
            blowup::driver::RefinementEvent {
                n: i + 1,
                time: tc - l.powf(beta2 / gamma),
                resolution,
                scale: l,
                xi: l.powf(-beta2),
                a1: [1.0, l.powf(beta1)],
                det_b: 1e-10,
                det_a: 0.0,
                e1: 1.0,
                e2: 1.0,
            }
        })
        .collect()
}

/// Fixed-seed proptest configuration so every run draws the same cases.
pub fn seeded(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_b10c),
        failure_persistence: None,
        ..Default::default()
    }
}
