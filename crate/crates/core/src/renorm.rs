//! Renormalization matrices and the on-the-fly reduced-model coefficients.
//!
//! With `E1 = sum_F |u_k|²` and `E2 = sum_F |u_k|⁴`, the rate of each moment
//! is linear in the term coefficients:
//!
//! ```text
//! dE1/dt = sum_j a_j sum_{k in F} 2 Re(R_jk conj(u_k))
//! dE2/dt = sum_j a_j sum_{k in F} 4 Re(R_jk conj(u_k)) |u_k|²
//! ```
//!
//! `A` collects these sensitivities for the full-system terms and `B` for
//! the reduced-model terms, both evaluated on the resolved modes of the
//! full-system state.

use serde::{Deserialize, Serialize};

use crate::models::{Level, ModelSpec, Partition};
use crate::spectral::{ModeRange, Spectral, SpectralField};

pub type Mat2 = [[f64; 2]; 2];

/// Condition-number ceiling for the coefficient solve and for `M`.
pub const COND_MAX: f64 = 1e12;

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn frobenius(m: &Mat2) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Singular value decomposition `m = U diag(s) V^T` of a 2×2 matrix,
/// singular values in decreasing order.
fn svd2(m: &Mat2) -> ([f64; 2], [[f64; 2]; 2], [[f64; 2]; 2]) {
    // Eigen-decomposition of the symmetric m^T m.
    let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let q = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let r = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let theta = 0.5 * (2.0 * r).atan2(p - q);
    let (c, s) = (theta.cos(), theta.sin());
    let v1 = [c, s];
    let v2 = [-s, c];
    let mv1 = mat_vec(m, v1);
    let mv2 = mat_vec(m, v2);
    let s1 = mv1[0].hypot(mv1[1]);
    let s2 = mv2[0].hypot(mv2[1]);
    let (sv, vs, us) = if s1 >= s2 {
        ([s1, s2], [v1, v2], [mv1, mv2])
    } else {
        ([s2, s1], [v2, v1], [mv2, mv1])
    };
    let unit = |x: [f64; 2], s: f64| if s > 0.0 { [x[0] / s, x[1] / s] } else { [0.0, 0.0] };
    (sv, [unit(us[0], sv[0]), unit(us[1], sv[1])], vs)
}

/// 2-norm condition number; infinite for a singular matrix.
pub fn condition_number(m: &Mat2) -> f64 {
    let (s, _, _) = svd2(m);
    if s[1] == 0.0 {
        f64::INFINITY
    } else {
        s[0] / s[1]
    }
}

/// Moment-rate sensitivities for the terms of one level, summed over `F`.
fn rate_matrix(sp: &Spectral, u: &SpectralField, t: f64, model: &ModelSpec, part: &Partition, level: Level) -> Mat2 {
    let f = part.resolved();
    let mut m = [[0.0; 2]; 2];
    for j in 0..ModelSpec::TERMS {
        let r = model.term(sp, j, u, t, part, level);
        let (r1, r2) = moment_rates(&r, u, f);
        m[0][j] = r1;
        m[1][j] = r2;
    }
    m
}

/// `(sum_F 2 Re(r_k conj u_k), sum_F 4 Re(r_k conj u_k) |u_k|²)`.
pub fn moment_rates(r: &SpectralField, u: &SpectralField, f: ModeRange) -> (f64, f64) {
    f.iter().fold((0.0, 0.0), |(a, b), k| {
        let uk = u.get(k);
        let x = (r.get(k) * uk.conj()).re;
        (a + 2.0 * x, b + 4.0 * x * uk.norm_sqr())
    })
}

/// `B_kj = d(dE_k/dt)/d a1_j`, using only the resolved modes of `u`.
pub fn compute_b(sp: &Spectral, u: &SpectralField, t: f64, model: &ModelSpec, part: &Partition) -> Mat2 {
    rate_matrix(sp, u, t, model, part, Level::Reduced)
}

/// `A_kj = d(dE_k/dt)/d a0_j` for the augmented full system.
pub fn compute_a(sp: &Spectral, u: &SpectralField, t: f64, model: &ModelSpec, part: &Partition) -> Mat2 {
    rate_matrix(sp, u, t, model, part, Level::Full)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    /// `cond(B) > COND_MAX`: minimum-norm least-squares solution.
    IllConditioned,
    /// `det B = 0` exactly: no transfer to unresolved modes yet.
    PreTransfer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSolve {
    pub a1: [f64; 2],
    pub status: SolveStatus,
}

/// Reduced-model coefficients that reproduce the full-system moment rates:
/// `sum_j B_kj a1_j = e_k`.
pub fn solve_coefficients(b: &Mat2, e: [f64; 2]) -> CoefficientSolve {
    solve_coefficients_with(b, e, COND_MAX)
}

pub fn solve_coefficients_with(b: &Mat2, e: [f64; 2], cond_max: f64) -> CoefficientSolve {
    let d = det(b);
    if d == 0.0 {
        return CoefficientSolve {
            a1: [1.0, 0.0],
            status: SolveStatus::PreTransfer,
        };
    }
    if condition_number(b) <= cond_max {
        let a1 = [
            (b[1][1] * e[0] - b[0][1] * e[1]) / d,
            (b[0][0] * e[1] - b[1][0] * e[0]) / d,
        ];
        return CoefficientSolve {
            a1,
            status: SolveStatus::Solved,
        };
    }
    let (s, us, vs) = svd2(b);
    let mut a1 = [0.0; 2];
    for i in 0..2 {
        if s[i] > 0.0 && s[0] / s[i] <= cond_max {
            let coef = (us[i][0] * e[0] + us[i][1] * e[1]) / s[i];
            a1[0] += coef * vs[i][0];
            a1[1] += coef * vs[i][1];
        }
    }
    CoefficientSolve {
        a1,
        status: SolveStatus::IllConditioned,
    }
}

/// `M = A B^{-1}`, or `None` when `B` is too ill-conditioned to invert.
pub fn compute_m(a: &Mat2, b: &Mat2) -> Option<Mat2> {
    let d = det(b);
    if d == 0.0 || condition_number(b) > COND_MAX {
        return None;
    }
    let inv = [[b[1][1] / d, -b[0][1] / d], [-b[1][0] / d, b[0][0] / d]];
    Some(mat_mul(a, &inv))
}

/// Everything the monitor needs at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormSnapshot {
    pub time: f64,
    pub a: Mat2,
    pub b: Mat2,
    pub det_a: f64,
    pub det_b: f64,
    pub m: Option<Mat2>,
    /// Full-system moment rates `A a0`.
    pub e: [f64; 2],
    pub a1_solved: Option<CoefficientSolve>,
}

impl RenormSnapshot {
    pub fn take(sp: &Spectral, u: &SpectralField, model: &ModelSpec, part: &Partition) -> Self {
        let t = u.time();
        let b = compute_b(sp, u, t, model, part);
        let a = compute_a(sp, u, t, model, part);
        let e = mat_vec(&a, model.a0);
        RenormSnapshot {
            time: t,
            det_a: det(&a),
            det_b: det(&b),
            m: compute_m(&a, &b),
            a1_solved: Some(solve_coefficients(&b, e)),
            a,
            b,
            e,
        }
    }

    /// Relative residual of `A - M B`, when `M` exists.
    pub fn m_residual(&self) -> Option<f64> {
        let m = self.m?;
        let mb = mat_mul(&m, &self.b);
        let diff = [
            [self.a[0][0] - mb[0][0], self.a[0][1] - mb[0][1]],
            [self.a[1][0] - mb[1][0], self.a[1][1] - mb[1][1]],
        ];
        Some(frobenius(&diff) / frobenius(&self.a).max(f64::MIN_POSITIVE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::InitialCondition;
    use approx::assert_relative_eq;

    const ID: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn identity_solve() {
        let s = solve_coefficients(&ID, [3.0, 5.0]);
        assert_eq!(s.status, SolveStatus::Solved);
        assert_eq!(s.a1, [3.0, 5.0]);
    }

    #[test]
    fn singular_solve_uses_convention() {
        let s = solve_coefficients(&[[0.0; 2]; 2], [1.0, 2.0]);
        assert_eq!(s.status, SolveStatus::PreTransfer);
        assert_eq!(s.a1, [1.0, 0.0]);
    }

    #[test]
    fn ill_conditioned_solve_is_least_squares() {
        let b = [[1.0, 0.0], [0.0, 1e-14]];
        let s = solve_coefficients(&b, [2.0, 1.0]);
        assert_eq!(s.status, SolveStatus::IllConditioned);
        assert_relative_eq!(s.a1[0], 2.0, epsilon = 1e-12);
        assert_eq!(s.a1[1], 0.0);
    }

    #[test]
    fn m_of_scaled_b() {
        let b = [[2.0, 1.0], [0.5, 3.0]];
        let m = compute_m(&b, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(m[i][j], ID[i][j], epsilon = 1e-15);
            }
        }
        let a = [[4.0, 2.0], [1.0, 6.0]];
        let m2 = compute_m(&a, &b).unwrap();
        assert_relative_eq!(m2[0][0], 2.0, epsilon = 1e-15);
        assert_relative_eq!(m2[1][1], 2.0, epsilon = 1e-15);
        assert!(m2[0][1].abs() < 1e-15 && m2[1][0].abs() < 1e-15);
        assert!(compute_m(&a, &[[1.0, 1.0], [1.0, 1.0]]).is_none());
    }

    #[test]
    fn svd_condition() {
        assert_relative_eq!(condition_number(&[[3.0, 0.0], [0.0, 1.5]]), 2.0, epsilon = 1e-14);
        assert_relative_eq!(condition_number(&[[0.0, 2.0], [0.5, 0.0]]), 4.0, epsilon = 1e-14);
        assert!(condition_number(&[[1.0, 2.0], [2.0, 4.0]]) > 1e15);
    }

    #[test]
    fn zero_field_matrices() {
        let sp = Spectral::default();
        let model = ModelSpec::burgers();
        let part = model.partition(16).unwrap();
        let z = SpectralField::zeros(part.storage(), 0.3);
        let snap = RenormSnapshot::take(&sp, &z, &model, &part);
        assert_eq!(snap.b, [[0.0; 2]; 2]);
        assert_eq!(snap.a, [[0.0; 2]; 2]);
        assert_eq!(snap.det_b, 0.0);
        assert_eq!(snap.a1_solved.unwrap().status, SolveStatus::PreTransfer);
    }

    #[test]
    fn sine_has_no_transfer_at_t0() {
        let sp = Spectral::default();
        let model = ModelSpec::burgers();
        for n in [8, 16, 32, 64] {
            let part = model.partition(n).unwrap();
            let u = InitialCondition::Sine.field(n);
            let b = compute_b(&sp, &u, 0.0, &model, &part);
            assert_eq!(det(&b), 0.0, "n = {n}");
        }
    }
}
