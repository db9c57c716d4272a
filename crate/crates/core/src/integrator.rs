//! Time advancement of the full system.
//!
//! Classical RK4 for Burgers. For NLS the dispersion `-i k² u_k` is
//! propagated exactly through an integrating factor (Lawson RK4), which
//! removes the `k²` stiffness from the step-size restriction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec, Partition};
use crate::spectral::{Spectral, SpectralField, DOMAIN_LENGTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Ifrk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub dt_max: f64,
    /// Renormalization monitor cadence, in steps.
    pub check_every: usize,
}

impl IntegratorConfig {
    pub fn for_model(model: &ModelSpec) -> Self {
        IntegratorConfig {
            scheme: match model.kind {
                ModelKind::Burgers => Scheme::Rk4,
                ModelKind::Nls { .. } => Scheme::Ifrk4,
            },
            cfl_safety: 0.25,
            // NLS: the cap also bounds the dispersive phase k²·dt of the low modes.
            dt_max: match model.kind {
                ModelKind::Burgers => 1e-2,
                ModelKind::Nls { .. } => 5e-5,
            },
            check_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config("integrator.cfl_safety", "must lie in (0, 1]"));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::config("integrator.dt_max", "must be positive and finite"));
        }
        if self.check_every == 0 {
            return Err(Error::config("integrator.check_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// The state stopped being finite: resolution is exhausted right now.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overflow;

fn combine(base: &SpectralField, terms: &[(f64, &SpectralField)]) -> SpectralField {
    let mut out = base.clone();
    for (a, f) in terms {
        out.axpy(*a, f);
    }
    out
}

fn rhs(sp: &Spectral, u: &SpectralField, model: &ModelSpec, part: &Partition, t: f64) -> SpectralField {
    model.full_rhs(sp, u, part, t)
}

/// Right-hand side with the stiff linear part removed.
fn nonlinear(sp: &Spectral, u: &SpectralField, model: &ModelSpec, part: &Partition, t: f64) -> SpectralField {
    let mut r = model.full_rhs(sp, u, part, t);
    for ((k, c), v) in u.iter().zip(r.coeffs_mut()) {
        *v -= model.linear_symbol(k) * c;
    }
    r
}

fn propagate(u: &SpectralField, model: &ModelSpec, h: f64) -> SpectralField {
    let mut v = u.clone();
    v.map_modes(|k, c| c * (model.linear_symbol(k) * h).exp());
    v
}

/// Advance `u` (and its time stamp) by `dt`.
pub fn step(
    sp: &Spectral,
    u: &SpectralField,
    model: &ModelSpec,
    part: &Partition,
    dt: f64,
    scheme: Scheme,
) -> std::result::Result<SpectralField, Overflow> {
    if dt == 0.0 {
        return Ok(u.clone());
    }
    let t = u.time();
    let h = dt;
    let mut next = match scheme {
        Scheme::Rk4 => {
            let k1 = rhs(sp, u, model, part, t);
            let k2 = rhs(sp, &combine(u, &[(h / 2.0, &k1)]), model, part, t + h / 2.0);
            let k3 = rhs(sp, &combine(u, &[(h / 2.0, &k2)]), model, part, t + h / 2.0);
            let k4 = rhs(sp, &combine(u, &[(h, &k3)]), model, part, t + h);
            combine(u, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)])
        }
        Scheme::Ifrk4 => {
            let half = |f: &SpectralField| propagate(f, model, h / 2.0);
            let full = |f: &SpectralField| propagate(f, model, h);
            let k1 = nonlinear(sp, u, model, part, t);
            let u2 = half(&combine(u, &[(h / 2.0, &k1)]));
            let k2 = nonlinear(sp, &u2, model, part, t + h / 2.0);
            let uh = half(u);
            let u3 = combine(&uh, &[(h / 2.0, &k2)]);
            let k3 = nonlinear(sp, &u3, model, part, t + h / 2.0);
            let u4 = combine(&full(u), &[(h, &half(&k3))]);
            let k4 = nonlinear(sp, &u4, model, part, t + h);
            let mid = combine(&k2, &[(1.0, &k3)]);
            combine(
                &full(u),
                &[(h / 6.0, &full(&k1)), (h / 3.0, &half(&mid)), (h / 6.0, &k4)],
            )
        }
    };
    if model.is_real() {
        // Keep the unpaired Nyquist coefficient at zero.
        let lo = next.range().lo();
        next.set(lo, Complex64::new(0.0, 0.0));
    }
    next.set_time(t + dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Overflow)
    }
}

/// Step size for the current state.
///
/// Burgers: `cfl * dx / max|u|` with `dx = 2π / N`. NLS: the nonlinear
/// phase rate bound `cfl / (max|u|^{2σ} + 1)`. Both capped at `dt_max`.
pub fn choose_dt(sp: &Spectral, u: &SpectralField, model: &ModelSpec, config: &IntegratorConfig) -> f64 {
    let umax = sp.max_abs_physical(u, 1);
    if umax == 0.0 || !umax.is_finite() {
        return config.dt_max;
    }
    let dt = match model.kind {
        ModelKind::Burgers => config.cfl_safety * (DOMAIN_LENGTH / u.resolution() as f64) / umax,
        ModelKind::Nls { sigma } => config.cfl_safety / (umax.powi(2 * sigma as i32) + 1.0),
    };
    dt.min(config.dt_max)
}
