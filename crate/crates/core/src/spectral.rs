//! Fourier representation of 2π-periodic fields.
//!
//! Coefficients are stored densely over a contiguous [`ModeRange`] of
//! wavenumbers. Every nonlinear product is evaluated by pointwise
//! multiplication on a zero-padded grid that is large enough for the
//! result to be free of aliasing, so the truncated convolution sums are
//! exact up to roundoff.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DOMAIN_LENGTH: f64 = 2.0 * PI;

/// Inclusive range of integer wavenumbers `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeRange {
    lo: i64,
    hi: i64,
}

impl ModeRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty mode range [{lo}, {hi}]");
        ModeRange { lo, hi }
    }

    /// `[-n/2, n/2 - 1]`, the storage range of an `n`-point grid.
    pub fn symmetric(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "symmetric range needs an even size, got {n}");
        let h = (n / 2) as i64;
        ModeRange::new(-h, h - 1)
    }

    /// `[-n/2 + 1, n/2 - 1]`: the symmetric range without the unpaired
    /// Nyquist mode, used for real-valued fields.
    pub fn nyquist_free(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "symmetric range needs an even size, got {n}");
        let h = (n / 2) as i64;
        ModeRange::new(-h + 1, h - 1)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn contains_range(&self, other: &ModeRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn index(&self, k: i64) -> Option<usize> {
        self.contains(k).then(|| (k - self.lo) as usize)
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    /// Minkowski sum: every `p + q` with `p` in `self`, `q` in `other`.
    pub fn sum(&self, other: &ModeRange) -> ModeRange {
        ModeRange::new(self.lo + other.lo, self.hi + other.hi)
    }

    /// Wavenumbers of the complex conjugate field.
    pub fn negated(&self) -> ModeRange {
        ModeRange::new(-self.hi, -self.lo)
    }

    pub fn hull(&self, other: &ModeRange) -> ModeRange {
        ModeRange::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for ModeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The modes of `outer` that are not in `hole`, e.g. the unresolved band
/// between a reduced and a full resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shell {
    pub outer: ModeRange,
    pub hole: ModeRange,
}

impl Shell {
    pub fn new(outer: ModeRange, hole: ModeRange) -> Self {
        assert!(outer.contains_range(&hole), "shell hole {hole} not inside {outer}");
        Shell { outer, hole }
    }

    pub fn contains(&self, k: i64) -> bool {
        self.outer.contains(k) && !self.hole.contains(k)
    }

    pub fn len(&self) -> usize {
        self.outer.len() - self.hole.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complex Fourier coefficients `u_k`, `k` in a mode range, at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    range: ModeRange,
    coeffs: Vec<Complex64>,
    time: f64,
}

impl SpectralField {
    pub fn zeros(range: ModeRange, time: f64) -> Self {
        SpectralField {
            range,
            coeffs: vec![Complex64::new(0.0, 0.0); range.len()],
            time,
        }
    }

    pub fn from_fn(range: ModeRange, time: f64, f: impl Fn(i64) -> Complex64) -> Self {
        SpectralField {
            range,
            coeffs: range.iter().map(f).collect(),
            time,
        }
    }

    pub fn from_coeffs(range: ModeRange, coeffs: Vec<Complex64>, time: f64) -> Self {
        assert_eq!(range.len(), coeffs.len(), "coefficient count does not match {range}");
        SpectralField { range, coeffs, time }
    }

    pub fn range(&self) -> ModeRange {
        self.range
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn domain_length(&self) -> f64 {
        DOMAIN_LENGTH
    }

    /// Number of grid points of the storage range.
    pub fn resolution(&self) -> usize {
        self.range.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `u_k`, zero outside the stored range.
    pub fn get(&self, k: i64) -> Complex64 {
        self.range
            .index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, k: i64, v: Complex64) {
        let i = self
            .range
            .index(k)
            .unwrap_or_else(|| panic!("mode {k} outside {}", self.range));
        self.coeffs[i] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.range.iter().zip(self.coeffs.iter().copied())
    }

    /// Same field re-indexed onto `range`: modes outside the old range read
    /// as zero, modes outside `range` are dropped.
    pub fn restrict(&self, range: ModeRange) -> SpectralField {
        SpectralField::from_fn(range, self.time, |k| self.get(k))
    }

    /// Restriction onto `shell.outer` with the hole zeroed.
    pub fn project_shell(&self, shell: &Shell) -> SpectralField {
        SpectralField::from_fn(shell.outer, self.time, |k| {
            if shell.hole.contains(k) {
                Complex64::new(0.0, 0.0)
            } else {
                self.get(k)
            }
        })
    }

    /// Multiply every coefficient by `f(k)`.
    pub fn map_modes(&mut self, f: impl Fn(i64, Complex64) -> Complex64) {
        for (k, c) in self.range.iter().zip(self.coeffs.iter_mut()) {
            *c = f(k, *c);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// `self += a * other` over the intersection of the two ranges.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        let lo = self.range.lo.max(other.range.lo);
        let hi = self.range.hi.min(other.range.hi);
        for k in lo..=hi {
            let i = (k - self.range.lo) as usize;
            self.coeffs[i] += other.coeffs[(k - other.range.lo) as usize] * a;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max_k |u_{-k} - conj(u_k)|` over pairs inside the range.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        self.range
            .iter()
            .filter(|&k| self.range.contains(-k))
            .map(|k| (self.get(-k) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// True when `n = 2^a 3^b` with `n >= 1`.
pub fn is_smooth_size(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    while m.is_multiple_of(2) {
        m /= 2;
    }
    while m.is_multiple_of(3) {
        m /= 3;
    }
    m == 1
}

/// Smallest `2^a 3^b` that is `>= n`.
pub fn next_smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    while !is_smooth_size(m) {
        m += 1;
    }
    m
}

/// Grid size on which a product whose wavenumbers span `sum` can be
/// projected onto `out` without aliasing.
///
/// Two wavenumbers alias on an `m`-point grid when they differ by a
/// multiple of `m`, so `m` must exceed every difference `s - k` between
/// a produced wavenumber `s` and a kept one `k`.
pub fn alias_free_size(sum: ModeRange, out: ModeRange, min_len: usize) -> usize {
    let spread = (sum.hi - out.lo).max(out.hi - sum.lo).max(0) as usize + 1;
    next_smooth_size(spread.max(min_len).max(out.len()))
}

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// FFT plan cache plus the execution strategy for pointwise loops.
///
/// Cheap to share by reference; plans are created lazily per grid size.
pub struct Spectral {
    plans: Mutex<HashMap<usize, Plans>>,
    exec: Exec,
}

impl Default for Spectral {
    fn default() -> Self {
        Spectral::new(Exec::default())
    }
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("exec", &self.exec).finish()
    }
}

impl Spectral {
    pub fn new(exec: Exec) -> Self {
        Spectral {
            plans: Mutex::new(HashMap::new()),
            exec,
        }
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    fn plans(&self, m: usize) -> Plans {
        let mut cache = self.plans.lock().expect("fft plan cache poisoned");
        cache
            .entry(m)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Plans {
                    forward: planner.plan_fft_forward(m),
                    inverse: planner.plan_fft_inverse(m),
                }
            })
            .clone()
    }

    /// Values `sum_k u_k exp(i k x_j)` at `x_j = 2 pi j / m`.
    pub fn synthesize(&self, u: &SpectralField, m: usize) -> Vec<Complex64> {
        assert!(m >= u.range.len(), "grid of {m} points cannot hold {}", u.range);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in u.iter() {
            buf[k.rem_euclid(m as i64) as usize] = c;
        }
        self.plans(m).inverse.process(&mut buf);
        buf
    }

    /// Fourier coefficients of grid values, kept on `out`.
    pub fn analyze(&self, mut values: Vec<Complex64>, out: ModeRange, time: f64) -> SpectralField {
        let m = values.len();
        assert!(m >= out.len(), "grid of {m} points cannot resolve {out}");
        self.plans(m).forward.process(&mut values);
        let inv = 1.0 / m as f64;
        SpectralField::from_fn(out, time, |k| values[k.rem_euclid(m as i64) as usize] * inv)
    }

    /// `w_k = sum_{p+q=k, p in P, q in Q} u_p v_q` for every `k` in `out`.
    ///
    /// Modes of `P` (`Q`) outside `u`'s (`v`'s) stored range count as zero.
    /// Wavenumbers that `P + Q` cannot produce come out exactly zero.
    pub fn truncated_convolution(
        &self,
        u: &SpectralField,
        v: &SpectralField,
        p: ModeRange,
        q: ModeRange,
        out: ModeRange,
    ) -> SpectralField {
        let up = u.restrict(p);
        let vq = v.restrict(q);
        let m = alias_free_size(p.sum(&q), out, p.len().max(q.len()));
        let a = self.synthesize(&up, m);
        let mut b = self.synthesize(&vq, m);
        self.exec.for_each_indexed(&mut b, |j, x| *x *= a[j]);
        let mut w = self.analyze(b, out, u.time);
        let reachable = p.sum(&q);
        w.map_modes(|k, c| if reachable.contains(k) { c } else { Complex64::new(0.0, 0.0) });
        w
    }

    /// `max_x |u(x)|` sampled on a grid of `oversample * N` points.
    pub fn max_abs_physical(&self, u: &SpectralField, oversample: usize) -> f64 {
        assert!(oversample >= 1, "oversample must be at least 1");
        let m = oversample * u.range.len();
        self.synthesize(u, m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficients `i k u_k`.
pub fn spectral_derivative(u: &SpectralField) -> SpectralField {
    let mut d = u.clone();
    d.map_modes(|k, c| c * Complex64::new(0.0, k as f64));
    d
}

/// `(sum_{k in F} |u_k|^2, sum_{k in F} |u_k|^4)`.
pub fn moments(u: &SpectralField, resolved: ModeRange) -> (f64, f64) {
    resolved.iter().fold((0.0, 0.0), |(e1, e2), k| {
        let a = u.get(k).norm_sqr();
        (e1 + a, e2 + a * a)
    })
}

/// Zero-pad `u` onto the `n_new`-point storage range.
///
/// Old coefficients are copied unchanged, so grid values at the old
/// nodes are unchanged too.
pub fn refine_pad(u: &SpectralField, n_new: usize) -> Result<SpectralField> {
    if !is_smooth_size(n_new) || !n_new.is_multiple_of(2) {
        return Err(Error::config(
            "resolution",
            format!("grid size {n_new} is not an even 2^a*3^b"),
        ));
    }
    let range = ModeRange::symmetric(n_new);
    if !range.contains_range(&u.range) || n_new <= u.range.len() {
        return Err(Error::config(
            "resolution",
            format!("cannot refine {} points to {n_new}", u.range.len()),
        ));
    }
    Ok(u.restrict(range))
}
