//! Blow-up exponents from a refinement log.
//!
//! Three routes to the rate `γ` in `ξ ~ (T_c - T)^{-γ}`:
//!
//! * direct: choose `T_c` so that `log ξ_n` against `log(T_c - T_n)` is as
//!   straight as possible, then read off the slope;
//! * scaling: fit `ξ_n ~ l_n^{-β₂}`, `α_n ~ l_n^{β₁}`, `α_n ~ (T_c - T_n)^δ`
//!   and combine `γ' = δ β₂ / β₁`;
//! * phase transition: the same three fits on the coarse-graining flow,
//!   i.e. the log read backwards.

use serde::{Deserialize, Serialize};

use crate::driver::RefinementEvent;
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_GRID_POINTS: usize = 400;
pub const DEFAULT_TC_TOL: f64 = 1e-8;
/// Default search window is `(last T_n, last T_n + DEFAULT_WINDOW]`.
pub const DEFAULT_WINDOW: f64 = 0.5;

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; 0 when `degenerate`.
    pub r: f64,
    pub n_points: usize,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// The ordinates were constant, so `r` is undefined.
    pub degenerate: bool,
}

struct Line {
    slope: f64,
    intercept: f64,
    sxx: f64,
    syy: f64,
    ss_res: f64,
}

fn line(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = (b - my) - slope * (a - mx);
            e * e
        })
        .sum();
    Line {
        slope,
        intercept: my - slope * mx,
        sxx,
        syy,
        ss_res,
    }
}

fn fit_logs(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!("length mismatch: {} abscissae, {} ordinates", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", x.len())));
    }
    let l = line(x, y);
    if !(l.sxx > 0.0) {
        return Err(Error::Domain("abscissae coincide".into()));
    }
    let degenerate = l.syy == 0.0;
    let r = if degenerate {
        0.0
    } else {
        (l.slope * (l.sxx / l.syy).sqrt()).clamp(-1.0, 1.0)
    };
    let slope_stderr = (l.ss_res / (x.len() as f64 - 2.0) / l.sxx).sqrt();
    Ok(ScalingFit {
        slope: l.slope,
        intercept: l.intercept,
        r,
        n_points: x.len(),
        slope_stderr,
        degenerate,
    })
}

fn logs(v: &[f64], what: &str) -> Result<Vec<f64>> {
    v.iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Ok(a.ln())
            } else {
                Err(Error::Domain(format!("{what} must be positive and finite, got {a}")))
            }
        })
        .collect()
}

/// Ordinary least squares of `log ys` against `log xs`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    fit_logs(&logs(xs, "abscissa")?, &logs(ys, "ordinate")?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcSearch {
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
    /// Final bracket width, absolute; scaled down by `T_c - T_last` when that
    /// distance is below 1.
    pub tol: f64,
}

impl TcSearch {
    pub fn window(lo: f64, hi: f64) -> Self {
        TcSearch {
            lo,
            hi,
            grid_points: DEFAULT_GRID_POINTS,
            tol: DEFAULT_TC_TOL,
        }
    }

    /// `(last T_n, last T_n + 0.5]`.
    pub fn default_for(events: &[RefinementEvent]) -> Result<Self> {
        let last = last_time(events)?;
        Ok(Self::window(last, last + DEFAULT_WINDOW))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcEstimate {
    pub tc: f64,
    /// Correlation of the straightest fit.
    pub r: f64,
    /// The optimum sits on the edge of the window; widen it.
    pub at_boundary: bool,
}

fn last_time(events: &[RefinementEvent]) -> Result<f64> {
    events
        .iter()
        .map(|e| e.time)
        .reduce(f64::max)
        .ok_or_else(|| Error::Domain("empty event log".into()))
}

/// `1 - r²` of `log ξ` against `log(tc - T)`, from the residuals so that it
/// stays accurate as the fit approaches a perfect line.
fn straightness_defect(times: &[f64], log_xi: &[f64], tc: f64) -> f64 {
    let x: Vec<f64> = times.iter().map(|t| (tc - t).ln()).collect();
    let l = line(&x, log_xi);
    if l.syy == 0.0 {
        return 1.0;
    }
    l.ss_res / l.syy
}

/// `T_c` maximizing the log-log correlation of `ξ_n` against `T_c - T_n`.
pub fn estimate_tc(events: &[RefinementEvent], search: &TcSearch, exec: Exec) -> Result<TcEstimate> {
    if events.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 events to locate T_c, got {}", events.len())));
    }
    let last = last_time(events)?;
    if !(search.lo >= last) {
        return Err(Error::config("tc_window", format!("lower end {} lies below the last event time {last}", search.lo)));
    }
    if !(search.hi > search.lo) || !search.hi.is_finite() {
        return Err(Error::config("tc_window", "upper end must exceed lower end"));
    }
    if search.grid_points < 2 {
        return Err(Error::config("tc_window", "need at least 2 grid points"));
    }
    if !(search.tol > 0.0) {
        return Err(Error::config("tc_window", "refinement tolerance must be positive"));
    }
    let times: Vec<f64> = events.iter().map(|e| e.time).collect();
    let log_xi = logs(&events.iter().map(|e| e.xi).collect::<Vec<_>>(), "xi")?;
    let f = |tc: f64| straightness_defect(&times, &log_xi, tc);

    let m = search.grid_points;
    let h = (search.hi - search.lo) / m as f64;
    let grid: Vec<f64> = (1..=m).map(|i| search.lo + h * i as f64).collect();
    let values = exec.map(&grid, |&tc| f(tc));
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Domain("correlation undefined over the whole window".into()))?;

    // Golden-section refinement inside the neighbouring grid cells.
    let mut a = if best == 0 { search.lo } else { grid[best - 1] };
    let mut b = grid[(best + 1).min(m - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    // Slopes see T_c through log(T_c - T_n), so close to the last event the
    // bracket has to shrink relative to that distance too.
    let width = |a: f64| search.tol * (a - last).clamp(f64::EPSILON, 1.0);
    let mut iterations = 0;
    while b - a > width(a) && iterations < 200 {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut tc = 0.5 * (a + b);
    if values[best] < f(tc) {
        tc = grid[best];
    }
    let at_boundary = tc - search.lo <= search.tol || search.hi - tc <= search.tol;
    let fit = direct_gamma(events, tc)?;
    Ok(TcEstimate {
        tc,
        r: fit.r,
        at_boundary,
    })
}

fn distances(events: &[RefinementEvent], tc: f64) -> Result<Vec<f64>> {
    events
        .iter()
        .map(|e| {
            if tc > e.time {
                Ok(tc - e.time)
            } else {
                Err(Error::Domain(format!("T_c = {tc} does not exceed event time {}", e.time)))
            }
        })
        .collect()
}

/// Slope of `log ξ_n` against `log(1 / (T_c - T_n))`: the rate `γ`.
pub fn direct_gamma(events: &[RefinementEvent], tc: f64) -> Result<ScalingFit> {
    let inv: Vec<f64> = distances(events, tc)?.iter().map(|d| 1.0 / d).collect();
    let xi: Vec<f64> = events.iter().map(|e| e.xi).collect();
    fit_loglog(&inv, &xi)
}

/// The log in coarse-graining order (growing `l_n`), renumbered from 1.
pub fn renorm_flow(events: &[RefinementEvent]) -> Vec<RefinementEvent> {
    events
        .iter()
        .rev()
        .enumerate()
        .map(|(i, e)| RefinementEvent { n: i + 1, ..e.clone() })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPoint {
    Unstable,
    Stable,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFits {
    /// `log ξ` against `log 1/(T_c - T)`.
    pub direct: ScalingFit,
    /// `log ξ` against `log l`; slope `-β₂`.
    pub xi_vs_scale: ScalingFit,
    /// `log α` against `log l`; slope `β₁`.
    pub alpha_vs_scale: ScalingFit,
    /// `log α` against `log(T_c - T)`; slope `δ`.
    pub alpha_vs_time: ScalingFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    #[serde(rename = "Tc_hat")]
    pub tc_hat: f64,
    pub gamma_direct: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
    pub gamma_scaling: f64,
    pub fixed_point_stable: bool,
    pub classification: FixedPoint,
    /// Events dropped from the scaling fits because `α_n ≤ 0`.
    pub excluded: usize,
    /// Leading events left out of every fit by request.
    pub skipped: usize,
    pub tc_search: Option<TcEstimate>,
    pub fits: ExponentFits,
}

fn positive_alpha(events: &[RefinementEvent]) -> (Vec<&RefinementEvent>, usize) {
    let kept: Vec<&RefinementEvent> = events.iter().filter(|e| e.alpha() > 0.0 && e.alpha().is_finite()).collect();
    let excluded = events.len() - kept.len();
    (kept, excluded)
}

fn survivors(events: &[RefinementEvent]) -> Result<(Vec<&RefinementEvent>, usize)> {
    let (kept, excluded) = positive_alpha(events);
    if kept.len() < 3 {
        return Err(Error::Domain(format!(
            "only {} events with positive alpha ({excluded} excluded); need at least 3",
            kept.len()
        )));
    }
    Ok((kept, excluded))
}

fn alpha_vs_scale(kept: &[&RefinementEvent]) -> Result<ScalingFit> {
    let l: Vec<f64> = kept.iter().map(|e| e.scale).collect();
    let a: Vec<f64> = kept.iter().map(|e| e.alpha()).collect();
    fit_loglog(&l, &a)
}

fn classify(fit: &ScalingFit) -> FixedPoint {
    if fit.slope.abs() <= 3.0 * fit.slope_stderr {
        FixedPoint::Marginal
    } else if fit.slope > 0.0 {
        FixedPoint::Unstable
    } else {
        FixedPoint::Stable
    }
}

/// Scaling-law exponents `β₁, β₂, δ` and `γ' = δ β₂ / β₁` at a given `T_c`.
pub fn scaling_gamma(events: &[RefinementEvent], tc: f64) -> Result<ExponentReport> {
    let direct = direct_gamma(events, tc)?;
    let (kept, excluded) = survivors(events)?;
    let l: Vec<f64> = kept.iter().map(|e| e.scale).collect();
    let xi: Vec<f64> = kept.iter().map(|e| e.xi).collect();
    let a: Vec<f64> = kept.iter().map(|e| e.alpha()).collect();
    let dist: Vec<f64> = kept.iter().map(|e| tc - e.time).collect();
    let xi_vs_scale = fit_loglog(&l, &xi)?;
    let alpha_vs_scale = fit_loglog(&l, &a)?;
    let alpha_vs_time = fit_loglog(&dist, &a)?;
    let beta1 = alpha_vs_scale.slope;
    let beta2 = -xi_vs_scale.slope;
    let delta = alpha_vs_time.slope;
    Ok(ExponentReport {
        tc_hat: tc,
        gamma_direct: direct.slope,
        beta1,
        beta2,
        delta,
        gamma_scaling: delta * beta2 / beta1,
        fixed_point_stable: beta1 <= 0.0,
        classification: classify(&alpha_vs_scale),
        excluded,
        skipped: 0,
        tc_search: None,
        fits: ExponentFits {
            direct,
            xi_vs_scale,
            alpha_vs_scale,
            alpha_vs_time,
        },
    })
}

/// The same exponents read off the coarse-graining flow.
pub fn phase_transition_gamma(events: &[RefinementEvent], tc: f64) -> Result<ExponentReport> {
    scaling_gamma(&renorm_flow(events), tc)
}

/// `β₁` of the beta function `β(α) = β₁ α` and the type of its fixed point `α = 0`.
pub fn beta_function(events: &[RefinementEvent]) -> Result<(f64, FixedPoint)> {
    let (kept, _) = survivors(events)?;
    let fit = alpha_vs_scale(&kept)?;
    Ok((fit.slope, classify(&fit)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentOptions {
    /// Leading (pre-asymptotic) events to leave out of every fit.
    pub skip: usize,
    /// `T_c` search window; defaults to `(last T_n, last T_n + 0.5]`.
    pub window: Option<(f64, f64)>,
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions {
            skip: 0,
            window: None,
            grid_points: DEFAULT_GRID_POINTS,
            tol: DEFAULT_TC_TOL,
        }
    }
}

/// Locate `T_c` and run every estimator.
pub fn analyze(events: &[RefinementEvent], options: &ExponentOptions, exec: Exec) -> Result<ExponentReport> {
    if options.skip >= events.len() {
        return Err(Error::Domain(format!("cannot skip {} of {} events", options.skip, events.len())));
    }
    let used = &events[options.skip..];
    let search = match options.window {
        Some((lo, hi)) => TcSearch {
            lo,
            hi,
            grid_points: options.grid_points,
            tol: options.tol,
        },
        None => TcSearch {
            grid_points: options.grid_points,
            tol: options.tol,
            ..TcSearch::default_for(used)?
        },
    };
    let estimate = estimate_tc(used, &search, exec)?;
    let mut report = scaling_gamma(used, estimate.tc)?;
    report.skipped = options.skip;
    report.tc_search = Some(estimate);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn event(n: usize, time: f64, xi: f64, scale: f64, alpha: f64) -> RefinementEvent {
        RefinementEvent {
            n,
            time,
            resolution: (4.0 * std::f64::consts::PI / scale).round() as usize,
            scale,
            xi,
            a1: [1.0, alpha],
            det_b: 0.0,
            det_a: 0.0,
            e1: 0.0,
            e2: 0.0,
        }
    }

    fn power_log(tc: f64, gamma: f64, times: &[f64]) -> Vec<RefinementEvent> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| event(i + 1, t, (tc - t).powf(-gamma), 0.1 / 2f64.powi(i as i32), 1.0))
            .collect()
    }

    #[test]
    fn exact_square() {
        let xs = [1.0, 2.0, 3.0, 7.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.r, 1.0, epsilon = 1e-14);
        assert!(f.intercept.abs() < 1e-14);
        assert!(!f.degenerate);
    }

    #[test]
    fn constant_is_degenerate() {
        let f = fit_loglog(&[1.0, 2.0, 4.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r, 0.0);
        assert!(f.degenerate);
    }

    #[test]
    fn domain_errors() {
        assert!(fit_loglog(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0, 3.0], &[1.0, -1.0, 1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_loglog(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn tc_from_exact_log() {
        let ev = power_log(1.0, 1.0, &[0.9, 0.95, 0.99, 0.999]);
        let est = estimate_tc(&ev, &TcSearch::default_for(&ev).unwrap(), Exec::Sequential).unwrap();
        assert!((est.tc - 1.0).abs() < 1e-6, "{}", est.tc);
        assert!(!est.at_boundary);
        assert!(est.r > 0.999999);
    }

    #[test]
    fn tc_boundary_flag() {
        let ev = power_log(1.0, 1.0, &[0.5, 0.6, 0.7, 0.8]);
        let est = estimate_tc(&ev, &TcSearch::window(0.8, 0.9), Exec::Sequential).unwrap();
        assert!(est.at_boundary);
    }

    #[test]
    fn tc_preconditions() {
        let ev = power_log(1.0, 1.0, &[0.5, 0.6, 0.7]);
        assert!(estimate_tc(&ev, &TcSearch::window(0.7, 1.2), Exec::Sequential).is_err());
        let ev = power_log(1.0, 1.0, &[0.5, 0.6, 0.7, 0.8]);
        assert!(matches!(
            estimate_tc(&ev, &TcSearch::window(0.75, 1.2), Exec::Sequential),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn direct_cubic() {
        let ev = power_log(2.0, 3.0, &[0.0, 1.0, 1.5, 1.9]);
        assert_relative_eq!(direct_gamma(&ev, 2.0).unwrap().slope, 3.0, epsilon = 1e-12);
        assert!(direct_gamma(&ev, 1.9).is_err());
    }

    #[test]
    fn flow_reverses() {
        let ev = power_log(1.0, 1.0, &[0.1, 0.5, 0.8, 0.9]);
        let flow = renorm_flow(&ev);
        assert_eq!(renorm_flow(&flow), ev);
        assert!(flow.windows(2).all(|w| w[1].scale > w[0].scale && w[1].xi < w[0].xi));
        assert_eq!(flow.iter().map(|e| e.n).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn constructed_scaling() {
        // α = l, ξ = 1/l, T_c - T = l.
        let ev: Vec<RefinementEvent> = (0..6)
            .map(|i| {
                let l = 0.5f64.powi(i);
                event(i as usize + 1, 1.0 - l, 1.0 / l, l, l)
            })
            .collect();
        let r = scaling_gamma(&ev, 1.0).unwrap();
        for v in [r.beta1, r.beta2, r.delta, r.gamma_scaling, r.gamma_direct] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert_eq!(r.gamma_scaling, r.delta * r.beta2 / r.beta1);
        assert!(!r.fixed_point_stable);
        assert_eq!(r.classification, FixedPoint::Unstable);
        assert_eq!(r.gamma_scaling, phase_transition_gamma(&ev, 1.0).unwrap().gamma_scaling);
    }

    #[test]
    fn nonpositive_alpha_excluded() {
        let mut ev: Vec<RefinementEvent> = (0..5)
            .map(|i| {
                let l = 0.5f64.powi(i);
                event(i as usize + 1, 1.0 - l, 1.0 / l, l, l)
            })
            .collect();
        ev[0].a1[1] = 0.0;
        ev[1].a1[1] = -1e-17;
        let r = scaling_gamma(&ev, 1.0).unwrap();
        assert_eq!(r.excluded, 2);
        ev[2].a1[1] = -1.0;
        assert!(matches!(scaling_gamma(&ev, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_function_signs() {
        let mk = |f: &dyn Fn(f64) -> f64| -> Vec<RefinementEvent> {
            (0..5)
                .map(|i| {
                    let l = 0.5f64.powi(i);
                    event(i as usize + 1, 1.0 - l, 1.0 / l, l, f(l))
                })
                .collect()
        };
        assert_eq!(beta_function(&mk(&|_| 0.3)).unwrap().1, FixedPoint::Marginal);
        let (b, c) = beta_function(&mk(&|l| l.powf(-0.5))).unwrap();
        assert_relative_eq!(b, -0.5, epsilon = 1e-12);
        assert_eq!(c, FixedPoint::Stable);
        assert_eq!(beta_function(&mk(&|l| l.powf(0.74))).unwrap().1, FixedPoint::Unstable);
    }

    #[test]
    fn analyze_skips_leading_events() {
        let mut ev = power_log(1.0, 0.5, &[0.5, 0.7, 0.9, 0.95, 0.99]);
        ev[0].xi *= 3.0;
        let opts = ExponentOptions {
            skip: 1,
            ..Default::default()
        };
        let r = analyze(&ev, &opts, Exec::Sequential).unwrap();
        assert_eq!(r.skipped, 1);
        assert!((r.tc_hat - 1.0).abs() < 1e-6);
        assert_relative_eq!(r.gamma_direct, 0.5, epsilon = 1e-6);
        assert!(analyze(&ev, &ExponentOptions { skip: 5, ..opts }, Exec::Sequential).is_err());
    }

    #[test]
    fn serialized_names() {
        let ev = power_log(1.0, 1.0, &[0.1, 0.5, 0.8, 0.9]);
        let r = scaling_gamma(&ev, 1.0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("Tc_hat").is_some());
        assert_eq!(v["classification"], "marginal");
    }
}
