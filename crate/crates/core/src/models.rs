//! Inviscid Burgers and focusing NLS written as coefficient-weighted term
//! lists, for the full system and for the t-model reduced system.
//!
//! Term 1 is the Galerkin right-hand side restricted to a range of modes.
//! Term 2 is the t-model memory term: the derivative of the nonlinearity at
//! the resolved field, applied to the part of the resolved-field right-hand
//! side that lands on unresolved modes, scaled by `t`. The full system uses
//! the same two terms with every range shifted up one level
//! (`F -> F ∪ G`, `G -> I`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{alias_free_size, ModeRange, Shell, Spectral, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Reduced,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelKind {
    Burgers,
    Nls { sigma: u32 },
}

/// A PDE as `m = 2` term evaluators with coefficient vectors for the full
/// system (`a0`) and the reduced model (`a1`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub a0: [f64; 2],
    pub a1: [f64; 2],
}

impl ModelSpec {
    pub const TERMS: usize = 2;

    pub fn burgers() -> Self {
        ModelSpec {
            name: "burgers".into(),
            kind: ModelKind::Burgers,
            a0: [1.0, 0.0],
            a1: [1.0, 1.0],
        }
    }

    /// Focusing NLS `i u_t + u_xx + |u|^{2 sigma} u = 0`. Only integer
    /// exponents keep the nonlinearity polynomial and exactly dealiasable.
    pub fn nls(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 1.0 && sigma.fract() == 0.0) {
            return Err(Error::Unsupported(format!(
                "NLS exponent sigma = {sigma} must be a positive integer"
            )));
        }
        Ok(ModelSpec {
            name: "nls".into(),
            kind: ModelKind::Nls {
                sigma: sigma as u32,
            },
            a0: [1.0, 0.0],
            a1: [1.0, 1.0],
        })
    }

    /// Burgers fields are real: conjugate-symmetric with no Nyquist mode.
    pub fn is_real(&self) -> bool {
        matches!(self.kind, ModelKind::Burgers)
    }

    pub fn partition(&self, n: usize) -> Result<Partition> {
        Partition::new(n, self.is_real())
    }

    /// Term `j` (0 = Galerkin, 1 = t-model) evaluated at `level`.
    pub fn term(
        &self,
        sp: &Spectral,
        j: usize,
        u: &SpectralField,
        t: f64,
        part: &Partition,
        level: Level,
    ) -> SpectralField {
        let (resolved, _) = part.level(level);
        match (self.kind, j) {
            (ModelKind::Burgers, 0) => burgers_galerkin(sp, u, resolved),
            (ModelKind::Burgers, 1) => burgers_tmodel(sp, u, t, part, level),
            (ModelKind::Nls { sigma }, 0) => nls_galerkin_int(sp, u, sigma, resolved),
            (ModelKind::Nls { sigma }, 1) => nls_tmodel_int(sp, u, t, sigma, part, level),
            _ => panic!("model has {} terms, asked for term {j}", Self::TERMS),
        }
    }

    fn weighted(
        &self,
        sp: &Spectral,
        u: &SpectralField,
        t: f64,
        part: &Partition,
        level: Level,
        a: [f64; 2],
        out: ModeRange,
    ) -> SpectralField {
        let mut rhs = SpectralField::zeros(out, u.time());
        for (j, &aj) in a.iter().enumerate() {
            // A zero coefficient switches the term off; the augmented
            // full-system t-model is never needed for time stepping.
            if aj != 0.0 {
                rhs.axpy(aj, &self.term(sp, j, u, t, part, level));
            }
        }
        rhs
    }

    /// `sum_i a0_i R0_ik` on the storage range of the partition.
    pub fn full_rhs(&self, sp: &Spectral, u: &SpectralField, part: &Partition, t: f64) -> SpectralField {
        self.weighted(sp, u, t, part, Level::Full, self.a0, part.storage())
    }

    /// `sum_i a1_i R1_ik` on the resolved range.
    pub fn reduced_rhs(&self, sp: &Spectral, u: &SpectralField, part: &Partition, t: f64) -> SpectralField {
        self.weighted(sp, u, t, part, Level::Reduced, self.a1, part.resolved())
    }

    /// Stiff linear part `L_k` of `du_k/dt = L_k u_k + ...` (zero for Burgers).
    pub fn linear_symbol(&self, k: i64) -> Complex64 {
        match self.kind {
            ModelKind::Burgers => Complex64::new(0.0, 0.0),
            ModelKind::Nls { .. } => Complex64::new(0.0, -((k * k) as f64)),
        }
    }

    /// Full right-hand side without the stiff linear part.
    pub fn nonlinear_rhs(&self, sp: &Spectral, u: &SpectralField, part: &Partition) -> SpectralField {
        match self.kind {
            ModelKind::Burgers => burgers_galerkin(sp, u, part.full()).restrict(part.storage()),
            ModelKind::Nls { sigma } => {
                nls_nonlinear(sp, &u.restrict(part.full()), sigma, part.full()).restrict(part.storage())
            }
        }
    }
}

/// Resolved / unresolved / augmentation sets for an `n`-mode full system.
///
/// `F` holds the lowest `n/2` modes, `F ∪ G` all `n`, and `I` the next
/// octave `[-n, n-1] \ [-n/2, n/2-1]`. For real fields every set drops its
/// unpaired Nyquist mode so that restrictions stay conjugate-symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    real: bool,
}

impl Partition {
    pub fn new(n: usize, real: bool) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(4) {
            return Err(Error::config(
                "resolution",
                format!("{n} modes cannot be halved into an even reduced range"),
            ));
        }
        Ok(Partition { n, real })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn range(&self, n: usize) -> ModeRange {
        if self.real {
            ModeRange::nyquist_free(n)
        } else {
            ModeRange::symmetric(n)
        }
    }

    /// Storage range of the state vector.
    pub fn storage(&self) -> ModeRange {
        ModeRange::symmetric(self.n)
    }

    /// `F`.
    pub fn resolved(&self) -> ModeRange {
        self.range(self.n / 2)
    }

    /// `F ∪ G`.
    pub fn full(&self) -> ModeRange {
        self.range(self.n)
    }

    /// `F ∪ G ∪ I`.
    pub fn augmented(&self) -> ModeRange {
        self.range(2 * self.n)
    }

    /// `G`.
    pub fn unresolved(&self) -> Shell {
        Shell::new(self.full(), self.resolved())
    }

    /// `I`.
    pub fn augmentation(&self) -> Shell {
        Shell::new(self.augmented(), self.full())
    }

    /// (resolved range, unresolved shell) seen by the given level.
    pub fn level(&self, level: Level) -> (ModeRange, Shell) {
        match level {
            Level::Reduced => (self.resolved(), self.unresolved()),
            Level::Full => (self.full(), self.augmentation()),
        }
    }
}

/// `N(u)_k = -(ik/2) sum_{p+q=k} u_p u_q` for `k` in `out`, with `p, q`
/// ranging over the stored modes of `u`.
fn burgers_nonlinear(sp: &Spectral, u: &SpectralField, out: ModeRange) -> SpectralField {
    let r = u.range();
    let m = alias_free_size(r.sum(&r), out, r.len());
    let mut g = sp.synthesize(u, m);
    sp.exec().for_each_indexed(&mut g, |_, z| *z = *z * *z);
    let mut w = sp.analyze(g, out, u.time());
    w.map_modes(|k, c| c * Complex64::new(0.0, -0.5 * k as f64));
    w
}

/// Galerkin Burgers right-hand side `-(ik/2) sum_{p+q=k, p,q in range} u_p u_q`.
pub fn burgers_galerkin(sp: &Spectral, u: &SpectralField, range: ModeRange) -> SpectralField {
    burgers_nonlinear(sp, &u.restrict(range), range)
}

/// Burgers t-model term at the given level:
///
/// `-ik sum_{p in R, q in S, p+q=k} u_p [-t (iq/2) sum_{r+s=q, r,s in R} u_r u_s]`
///
/// with `(R, S) = (F, G)` for the reduced model and `(F ∪ G, I)` for the
/// augmented full system.
pub fn burgers_tmodel(sp: &Spectral, u: &SpectralField, t: f64, part: &Partition, level: Level) -> SpectralField {
    let (resolved, shell) = part.level(level);
    if t == 0.0 {
        return SpectralField::zeros(resolved, u.time());
    }
    let uh = u.restrict(resolved);
    let mut w = burgers_nonlinear(sp, &uh, shell.outer).project_shell(&shell);
    w.scale(t);

    let m = alias_free_size(resolved.sum(&shell.outer), resolved, shell.outer.len());
    let a = sp.synthesize(&uh, m);
    let mut b = sp.synthesize(&w, m);
    sp.exec().for_each_indexed(&mut b, |j, z| *z *= a[j]);
    let mut out = sp.analyze(b, resolved, u.time());
    out.map_modes(|k, c| c * Complex64::new(0.0, -(k as f64)));
    out
}

fn nls_sum_range(r: ModeRange, sigma: u32) -> ModeRange {
    let s = sigma as i64;
    let neg = r.negated();
    ModeRange::new((s + 1) * r.lo() + s * neg.lo(), (s + 1) * r.hi() + s * neg.hi())
}

/// `i [|u|^{2 sigma} u]_k` for `k` in `out`, exact over the stored modes of `u`.
fn nls_nonlinear(sp: &Spectral, u: &SpectralField, sigma: u32, out: ModeRange) -> SpectralField {
    let r = u.range();
    let m = alias_free_size(nls_sum_range(r, sigma), out, r.len());
    let mut g = sp.synthesize(u, m);
    let s = sigma as i32;
    sp.exec()
        .for_each_indexed(&mut g, |_, z| *z = I * *z * z.norm_sqr().powi(s));
    sp.analyze(g, out, u.time())
}

fn check_sigma(sigma: f64) -> Result<u32> {
    ModelSpec::nls(sigma).map(|m| match m.kind {
        ModelKind::Nls { sigma } => sigma,
        ModelKind::Burgers => unreachable!(),
    })
}

fn nls_galerkin_int(sp: &Spectral, u: &SpectralField, sigma: u32, range: ModeRange) -> SpectralField {
    let uh = u.restrict(range);
    let mut rhs = nls_nonlinear(sp, &uh, sigma, range);
    for (k, (r, c)) in range.iter().zip(rhs.coeffs_mut().iter_mut().zip(uh.coeffs())) {
        *r += Complex64::new(0.0, -((k * k) as f64)) * c;
    }
    rhs
}

/// Galerkin NLS right-hand side `-i k^2 u_k + i [|u|^{2 sigma} u]_k` on `range`.
pub fn nls_galerkin(sp: &Spectral, u: &SpectralField, sigma: f64, range: ModeRange) -> Result<SpectralField> {
    Ok(nls_galerkin_int(sp, u, check_sigma(sigma)?, range))
}

fn nls_tmodel_int(
    sp: &Spectral,
    u: &SpectralField,
    t: f64,
    sigma: u32,
    part: &Partition,
    level: Level,
) -> SpectralField {
    let (resolved, shell) = part.level(level);
    if t == 0.0 {
        return SpectralField::zeros(resolved, u.time());
    }
    let uh = u.restrict(resolved);
    // The dispersive part of the right-hand side keeps the support of
    // `uh`, so only the nonlinearity reaches the unresolved shell.
    let w = nls_nonlinear(sp, &uh, sigma, shell.outer).project_shell(&shell);

    let s = sigma as i64;
    let neg = resolved.negated();
    let direct = ModeRange::new(
        s * resolved.lo() + s * neg.lo() + shell.outer.lo(),
        s * resolved.hi() + s * neg.hi() + shell.outer.hi(),
    );
    let conj = ModeRange::new(
        (s + 1) * resolved.lo() + (s - 1) * neg.lo() - shell.outer.hi(),
        (s + 1) * resolved.hi() + (s - 1) * neg.hi() - shell.outer.lo(),
    );
    let m = alias_free_size(direct.hull(&conj), resolved, shell.outer.len());
    let a = sp.synthesize(&uh, m);
    let mut b = sp.synthesize(&w, m);
    let (p1, p2) = ((sigma + 1) as f64, sigma as f64);
    let e = sigma as i32 - 1;
    sp.exec().for_each_indexed(&mut b, |j, z| {
        let ua = a[j];
        let m2 = ua.norm_sqr();
        let pw = m2.powi(e);
        *z = I * t * pw * (p1 * m2 * *z + p2 * ua * ua * z.conj());
    });
    sp.analyze(b, resolved, u.time())
}

/// NLS t-model term `t Π_R[ N'(û)[w] ]` with `w = Π_S[ N(û) ]` and
/// `N'(û)[w] = i((σ+1)|û|^{2σ} w + σ|û|^{2σ-2} û² conj(w))`.
pub fn nls_tmodel(
    sp: &Spectral,
    u: &SpectralField,
    t: f64,
    sigma: f64,
    part: &Partition,
    level: Level,
) -> Result<SpectralField> {
    Ok(nls_tmodel_int(sp, u, t, check_sigma(sigma)?, part, level))
}

/// Initial data for a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `u(x, 0) = sin x`.
    Sine,
    /// `u(x, 0) = i A exp(-(x - π)²)`, periodized.
    Gaussian { amplitude: f64 },
}

impl InitialCondition {
    pub fn field(&self, n: usize) -> SpectralField {
        let range = ModeRange::symmetric(n);
        match *self {
            InitialCondition::Sine => SpectralField::from_fn(range, 0.0, |k| match k {
                1 => Complex64::new(0.0, -0.5),
                -1 => Complex64::new(0.0, 0.5),
                _ => Complex64::new(0.0, 0.0),
            }),
            // Sum of the Gaussian's translates by 2π: its coefficients are
            // the line Fourier transform sampled at integer k, so the data
            // stay analytic across the periodic boundary.
            InitialCondition::Gaussian { amplitude } => SpectralField::from_fn(range, 0.0, |k| {
                let kf = k as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                I * (amplitude * sign * (-kf * kf / 4.0).exp() / (2.0 * PI.sqrt()))
            }),
        }
    }
}
