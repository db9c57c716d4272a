//! The adaptive refinement loop.
//!
//! The full system is advanced at the current resolution and the
//! renormalization monitor is evaluated every `check_every` steps. When
//! `|det B| >= TOL` a [`RefinementEvent`] is logged, the reduced-model
//! coefficients are solved, and the state is zero-padded to the next
//! resolution of the ladder. At the last resolution the same trigger ends
//! the run.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::integrator::{choose_dt, step, IntegratorConfig};
use crate::models::{InitialCondition, ModelKind, ModelSpec, Partition};
use crate::renorm::RenormSnapshot;
use crate::spectral::{is_smooth_size, moments, refine_pad, spectral_derivative, Spectral, SpectralField};

/// `|det B|` above this counts as the onset of transfer (`T_B`).
pub const DET_B_FLOOR: f64 = 1e-18;
/// `|det A|` above this counts as under-resolution of the full system (`T_A`).
pub const DET_A_FLOOR: f64 = 1e-16;
/// Grid oversampling used when locating the maximum of the blow-up quantity.
pub const MAX_OVERSAMPLE: usize = 4;
/// Digits reported when two runs agree to the last bit.
pub const PRECISION_DIGITS: u32 = f64::DIGITS;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub initial: InitialCondition,
    /// Resolutions visited, coarsest first; the last entry is `N_final`.
    pub ladder: Vec<usize>,
    pub tol: f64,
    pub integrator: IntegratorConfig,
    /// Safety cap on simulated time.
    pub t_end: f64,
}

impl RunConfig {
    /// Burgers with `u(x, 0) = sin x`, doubling from `n_start` to `n_final`.
    pub fn burgers_sine(n_start: usize, n_final: usize, tol: f64) -> Result<Self> {
        let model = ModelSpec::burgers();
        let cfg = RunConfig {
            integrator: IntegratorConfig::for_model(&model),
            model,
            initial: InitialCondition::Sine,
            ladder: geometric_ladder(n_start, n_final, 2)?,
            tol,
            t_end: 1.5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Focusing NLS with exponent `sigma` and Gaussian data of peak `amplitude`.
    pub fn nls_gaussian(sigma: f64, amplitude: f64, ladder: Vec<usize>, tol: f64, t_end: f64) -> Result<Self> {
        let model = ModelSpec::nls(sigma)?;
        let cfg = RunConfig {
            integrator: IntegratorConfig::for_model(&model),
            model,
            initial: InitialCondition::Gaussian { amplitude },
            ladder,
            tol,
            t_end,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_start(&self) -> usize {
        self.ladder[0]
    }

    pub fn n_final(&self) -> usize {
        *self.ladder.last().expect("validated ladder is non-empty")
    }

    /// The same run pinned at `N_final` from the start.
    pub fn fixed(&self) -> RunConfig {
        RunConfig {
            ladder: vec![self.n_final()],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::config("resolution.ladder", "empty resolution ladder"));
        }
        for (i, &n) in self.ladder.iter().enumerate() {
            if !is_smooth_size(n) {
                return Err(Error::config("resolution.ladder", format!("{n} is not of the form 2^a*3^b")));
            }
            self.model.partition(n)?;
            if i > 0 && n < 2 * self.ladder[i - 1] {
                return Err(Error::config(
                    "resolution.ladder",
                    format!("step {} -> {n} refines by less than a factor of 2", self.ladder[i - 1]),
                ));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("criterion.tol", "must be positive and finite"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("run.t_end", "must be positive and finite"));
        }
        if let InitialCondition::Gaussian { amplitude } = self.initial {
            if !amplitude.is_finite() {
                return Err(Error::config("model.amplitude", "must be finite"));
            }
        }
        self.integrator.validate()
    }
}

/// `n_start, r n_start, r² n_start, ..., n_final`.
pub fn geometric_ladder(n_start: usize, n_final: usize, factor: usize) -> Result<Vec<usize>> {
    if factor < 2 {
        return Err(Error::config("resolution.refine_factor", "must be at least 2"));
    }
    let mut ladder = vec![n_start];
    let mut n = n_start;
    while n < n_final {
        n *= factor;
        ladder.push(n);
    }
    if n != n_final {
        return Err(Error::config(
            "resolution.n_final",
            format!("{n_final} is not {n_start} times a power of {factor}"),
        ));
    }
    Ok(ladder)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementEvent {
    pub n: usize,
    /// Trigger time `T_n`.
    pub time: f64,
    /// Full-system resolution `N_n` at the trigger.
    pub resolution: usize,
    /// Length scale of the reduced model, `l_n = 2 (2π) / N_n`.
    pub scale: f64,
    /// Blow-up quantity `ξ_n`.
    pub xi: f64,
    /// Solved reduced-model coefficients; `a1[1]` is the t-model coefficient `α_n`.
    pub a1: [f64; 2],
    pub det_b: f64,
    pub det_a: f64,
    pub e1: f64,
    pub e2: f64,
}

impl RefinementEvent {
    pub fn alpha(&self) -> f64 {
        self.a1[1]
    }
}

pub fn length_scale(resolution: usize) -> f64 {
    2.0 * crate::spectral::DOMAIN_LENGTH / resolution as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResolutionExhausted,
    TEndReached,
    Overflow,
}

/// Moments at the instant `|det B| = TOL`, interpolated between the two
/// monitor points that bracket the final crossing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub events: Vec<RefinementEvent>,
    pub final_time: f64,
    pub termination: Termination,
    pub wall_clock: f64,
    pub t_b_first: Option<f64>,
    pub t_a_first: Option<f64>,
    pub steps: usize,
    pub crossing: Option<Crossing>,
    pub final_field: SpectralField,
}

impl RunOutcome {
    pub fn final_resolution(&self) -> usize {
        self.final_field.resolution()
    }

    /// `(E1, E2)` of the final field over the resolved modes.
    pub fn final_moments(&self, model: &ModelSpec) -> (f64, f64) {
        let part = model
            .partition(self.final_resolution())
            .expect("final resolution was validated");
        moments(&self.final_field, part.resolved())
    }
}

/// Loop options beyond the configuration itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Refine (or stop at `N_final`) when `|det B| >= TOL`.
    pub act_on_trigger: bool,
    /// Run exactly to this time instead of `t_end`.
    pub stop_time: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            act_on_trigger: true,
            stop_time: None,
        }
    }
}

/// What an observer sees at each monitor instant.
pub struct MonitorView<'a> {
    pub field: &'a SpectralField,
    pub snapshot: &'a RenormSnapshot,
    pub partition: &'a Partition,
}

/// `max|u_x|` for Burgers, `max|u|` for NLS.
pub fn blowup_quantity(sp: &Spectral, u: &SpectralField, model: &ModelSpec) -> f64 {
    match model.kind {
        ModelKind::Burgers => sp.max_abs_physical(&spectral_derivative(u), MAX_OVERSAMPLE),
        ModelKind::Nls { .. } => sp.max_abs_physical(u, MAX_OVERSAMPLE),
    }
}

#[derive(Clone, Copy)]
struct MonitorPoint {
    time: f64,
    det_b: f64,
    e1: f64,
    e2: f64,
    rates: [f64; 2],
    resolution: usize,
}

fn interpolate_crossing(p0: &MonitorPoint, p1: &MonitorPoint, tol: f64) -> Crossing {
    let (b0, b1) = (p0.det_b.abs(), p1.det_b.abs());
    let s = if b0 > 0.0 && b1 > b0 {
        (tol.ln() - b0.ln()) / (b1.ln() - b0.ln())
    } else if b1 > b0 {
        (tol - b0) / (b1 - b0)
    } else {
        1.0
    }
    .clamp(0.0, 1.0);
    let h = p1.time - p0.time;
    // Cubic Hermite using the full-system moment rates as slopes.
    let (h00, h10, h01, h11) = (
        2.0 * s.powi(3) - 3.0 * s * s + 1.0,
        s.powi(3) - 2.0 * s * s + s,
        -2.0 * s.powi(3) + 3.0 * s * s,
        s.powi(3) - s * s,
    );
    let herm = |y0: f64, d0: f64, y1: f64, d1: f64| h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    Crossing {
        time: p0.time + s * h,
        e1: herm(p0.e1, p0.rates[0], p1.e1, p1.rates[0]),
        e2: herm(p0.e2, p0.rates[1], p1.e2, p1.rates[1]),
    }
}

/// Adaptive run from `N_start` to `N_final`.
pub fn run_adaptive(sp: &Spectral, config: &RunConfig) -> Result<RunOutcome> {
    run_with(sp, config, RunOptions::default(), &mut |_| {})
}

/// The same loop pinned at `N_final`.
pub fn run_fixed(sp: &Spectral, config: &RunConfig) -> Result<RunOutcome> {
    run_adaptive(sp, &config.fixed())
}

/// General loop with options and a monitor observer.
pub fn run_with(
    sp: &Spectral,
    config: &RunConfig,
    options: RunOptions,
    observer: &mut dyn FnMut(&MonitorView<'_>),
) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let model = &config.model;
    let stop = options.stop_time.unwrap_or(config.t_end);

    let mut level = 0;
    let mut part = model.partition(config.ladder[0])?;
    let mut u = config.initial.field(config.ladder[0]);
    let mut events = Vec::new();
    let mut t_b_first = None;
    let mut t_a_first = None;
    let mut prev: Option<MonitorPoint> = None;
    let mut crossing = None;
    let mut steps = 0usize;

    let termination = loop {
        if steps.is_multiple_of(config.integrator.check_every) {
            let snap = RenormSnapshot::take(sp, &u, model, &part);
            if t_b_first.is_none() && snap.det_b.abs() > DET_B_FLOOR {
                t_b_first = Some(u.time());
            }
            if t_a_first.is_none() && snap.det_a.abs() > DET_A_FLOOR {
                t_a_first = Some(u.time());
            }
            observer(&MonitorView {
                field: &u,
                snapshot: &snap,
                partition: &part,
            });
            let (e1, e2) = moments(&u, part.resolved());
            let point = MonitorPoint {
                time: u.time(),
                det_b: snap.det_b,
                e1,
                e2,
                rates: snap.e,
                resolution: part.n(),
            };

            if options.act_on_trigger && snap.det_b.abs() >= config.tol {
                events.push(RefinementEvent {
                    n: events.len() + 1,
                    time: u.time(),
                    resolution: part.n(),
                    scale: length_scale(part.n()),
                    xi: blowup_quantity(sp, &u, model),
                    a1: snap.a1_solved.map_or([1.0, 0.0], |s| s.a1),
                    det_b: snap.det_b,
                    det_a: snap.det_a,
                    e1,
                    e2,
                });
                if level + 1 < config.ladder.len() {
                    level += 1;
                    part = model.partition(config.ladder[level])?;
                    u = refine_pad(&u, config.ladder[level])?;
                    prev = None;
                } else {
                    crossing = Some(match prev {
                        Some(p0) if p0.resolution == point.resolution => {
                            interpolate_crossing(&p0, &point, config.tol)
                        }
                        _ => Crossing {
                            time: point.time,
                            e1,
                            e2,
                        },
                    });
                    break Termination::ResolutionExhausted;
                }
            } else {
                prev = Some(point);
            }
        }

        if u.time() >= stop {
            break Termination::TEndReached;
        }
        let mut dt = choose_dt(sp, &u, model, &config.integrator);
        let landing = u.time() + dt >= stop;
        if landing {
            dt = stop - u.time();
        }
        match step(sp, &u, model, &part, dt, config.integrator.scheme) {
            Ok(mut next) => {
                if landing {
                    next.set_time(stop);
                }
                u = next;
            }
            Err(_) => break Termination::Overflow,
        }
        steps += 1;
    };

    Ok(RunOutcome {
        events,
        final_time: u.time(),
        termination,
        wall_clock: start.elapsed().as_secs_f64(),
        t_b_first,
        t_a_first,
        steps,
        crossing,
        final_field: u,
    })
}

/// `floor(-log10(max_i |x_i - y_i| / |y_i|))`, capped at the precision floor.
pub fn matching_digits(x: &[f64], y: &[f64]) -> u32 {
    let worst = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            if a == b {
                0.0
            } else {
                (a - b).abs() / b.abs()
            }
        })
        .fold(0.0, f64::max);
    if worst == 0.0 {
        return PRECISION_DIGITS;
    }
    let d = -worst.log10();
    if !d.is_finite() || d <= 0.0 {
        0
    } else {
        (d.floor() as u32).min(PRECISION_DIGITS)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub tol: f64,
    pub digits: u32,
    /// `(E1, E2)` at the crossing of the adaptive run (S1), if it got there.
    pub adaptive: Option<[f64; 2]>,
    /// `(E1, E2)` at the crossing of the fixed run (S2), if it got there.
    pub fixed: Option<[f64; 2]>,
    pub adaptive_time: f64,
    pub fixed_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub target_digits: u32,
    pub rows: Vec<CalibrationRow>,
    pub selected: Option<f64>,
}

impl CalibrationReport {
    pub fn selected_tol(&self) -> Result<f64> {
        self.selected.ok_or(Error::Calibration {
            target_digits: self.target_digits,
        })
    }
}

fn crossing_of(out: &RunOutcome) -> Option<Crossing> {
    (out.termination == Termination::ResolutionExhausted)
        .then_some(out.crossing)
        .flatten()
}

/// Walk a decreasing TOL schedule until the adaptive run (S1) and the
/// fixed-resolution run (S2) agree on the resolved moments at the
/// `N_final` crossing to `target_digits`.
pub fn calibrate_tol(sp: &Spectral, config: &RunConfig, target_digits: u32, schedule: &[f64]) -> Result<CalibrationReport> {
    if schedule.is_empty() {
        return Err(Error::config("schedule", "empty TOL schedule"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("schedule", "TOL schedule must be strictly decreasing"));
    }
    let mut rows = Vec::new();
    let mut selected = None;
    for &tol in schedule {
        let s1_cfg = RunConfig { tol, ..config.clone() };
        let s2_cfg = s1_cfg.fixed();
        let (s1, s2) = sp
            .exec()
            .join(|| run_adaptive(sp, &s1_cfg), || run_adaptive(sp, &s2_cfg));
        let (s1, s2) = (s1?, s2?);
        let row = match (crossing_of(&s1), crossing_of(&s2)) {
            (Some(a), Some(b)) => CalibrationRow {
                tol,
                digits: matching_digits(&[a.e1, a.e2], &[b.e1, b.e2]),
                adaptive: Some([a.e1, a.e2]),
                fixed: Some([b.e1, b.e2]),
                adaptive_time: a.time,
                fixed_time: b.time,
            },
            // One of the runs never reached the crossing at N_final.
            _ => CalibrationRow {
                tol,
                digits: 0,
                adaptive: crossing_of(&s1).map(|c| [c.e1, c.e2]),
                fixed: crossing_of(&s2).map(|c| [c.e1, c.e2]),
                adaptive_time: s1.final_time,
                fixed_time: s2.final_time,
            },
        };
        let ok = row.digits >= target_digits;
        rows.push(row);
        if ok {
            selected = Some(tol);
            break;
        }
    }
    Ok(CalibrationReport {
        target_digits,
        rows,
        selected,
    })
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub adaptive: RunOutcome,
    pub fixed: RunOutcome,
    /// Fixed wall-clock over adaptive wall-clock.
    pub speedup: f64,
    /// `max_x |u_adaptive - u_fixed|` at the common final time.
    pub field_max_diff: f64,
    pub moment_digits: [u32; 2],
}

/// Run the adaptive configuration, then a fixed-`N_final` twin that runs
/// (with the monitor active but never stopping on it) to exactly the same
/// final time. Runs are sequential so their wall clocks are comparable.
pub fn compare_runs(sp: &Spectral, config: &RunConfig) -> Result<Comparison> {
    let adaptive = run_adaptive(sp, config)?;
    let fixed = run_with(
        sp,
        &config.fixed(),
        RunOptions {
            act_on_trigger: false,
            stop_time: Some(adaptive.final_time),
        },
        &mut |_| {},
    )?;
    let n = fixed.final_resolution();
    let a_field = if adaptive.final_resolution() < n {
        refine_pad(&adaptive.final_field, n)?
    } else {
        adaptive.final_field.clone()
    };
    let part = config.model.partition(n)?;
    let ma = moments(&a_field, part.resolved());
    let mf = moments(&fixed.final_field, part.resolved());
    let mut diff = a_field;
    diff.axpy(-1.0, &fixed.final_field);
    let field_max_diff = sp.max_abs_physical(&diff, MAX_OVERSAMPLE);
    Ok(Comparison {
        speedup: fixed.wall_clock / adaptive.wall_clock.max(1e-9),
        field_max_diff,
        moment_digits: [matching_digits(&[ma.0], &[mf.0]), matching_digits(&[ma.1], &[mf.1])],
        adaptive,
        fixed,
    })
}

/// Strategy-parameterized batch of independent runs (e.g. parameter sweeps).
pub fn run_batch(sp: &Spectral, configs: &[RunConfig], exec: Exec) -> Vec<Result<RunOutcome>> {
    exec.map(configs, |c| run_adaptive(sp, c))
}
