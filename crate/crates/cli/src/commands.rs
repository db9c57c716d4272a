//! The four subcommands. Each writes its files into an output directory and
//! returns what it wrote so callers (and tests) can inspect it.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use blowup::driver::{calibrate_tol, compare_runs, run_adaptive, Comparison, RunOutcome, Termination};
use blowup::exponents::{analyze, ExponentOptions, ExponentReport};
use blowup::{Error, Spectral};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::formats::{read_events, write_columns, write_events, write_snapshot, OutcomeFile};
use crate::{CliError, FALLBACK_OUT_DIR, OUT_DIR_ENV};

pub const DEFAULT_SCHEDULE: [f64; 6] = [1e-6, 1e-8, 1e-10, 1e-12, 1e-14, 1e-16];
pub const DEFAULT_DIGITS: u32 = 5;

pub const EVENTS_FILE: &str = "events.csv";
pub const OUTCOME_FILE: &str = "outcome.json";
pub const SNAPSHOT_FILE: &str = "final_field.dat";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const EXPONENTS_FILE: &str = "exponents.json";
pub const MAXQ_FILE: &str = "maxq_vs_invdist.dat";
pub const ALPHA_SCALE_FILE: &str = "alpha_vs_scale.dat";
pub const ALPHA_TIME_FILE: &str = "alpha_vs_time.dat";
pub const COMPARE_FILE: &str = "compare.json";

/// `--out`, else `[run] output_dir`, else `$BLOWUP_OUT_DIR`, else `blowup-out`.
pub fn output_dir(flag: Option<&Path>, config: Option<&ExperimentConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = config.and_then(|c| c.run.output_dir.clone()) {
        return p;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(FALLBACK_OUT_DIR),
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn write_with(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    write_with(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_events(path: &Path) -> Result<Vec<blowup::driver::RefinementEvent>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_events(BufReader::new(f), &path.display().to_string())
}

fn write_run_files(dir: &Path, out: &RunOutcome) -> Result<(), CliError> {
    write_with(dir, EVENTS_FILE, |w| write_events(w, &out.events))?;
    write_json(dir, OUTCOME_FILE, &OutcomeFile::from(out))?;
    write_with(dir, SNAPSHOT_FILE, |w| write_snapshot(w, &out.final_field))?;
    Ok(())
}

/// `blowup run`: one adaptive run.
pub fn cmd_run(sp: &Spectral, config: &Path, out: Option<&Path>) -> Result<(PathBuf, RunOutcome), CliError> {
    let exp = ExperimentConfig::load(config)?;
    let cfg = exp.run_config()?;
    let dir = output_dir(out, Some(&exp));
    let outcome = run_adaptive(sp, &cfg)?;
    write_run_files(&dir, &outcome)?;
    Ok((dir, outcome))
}

/// `blowup calibrate`: the TOL digit table. A failed calibration still
/// writes the table and then reports the error.
pub fn cmd_calibrate(
    sp: &Spectral,
    config: &Path,
    digits: u32,
    schedule: &[f64],
    out: Option<&Path>,
) -> Result<(PathBuf, blowup::driver::CalibrationReport), CliError> {
    let exp = ExperimentConfig::load(config)?;
    let cfg = exp.run_config()?;
    let dir = output_dir(out, Some(&exp));
    let report = calibrate_tol(sp, &cfg, digits, schedule)?;
    write_json(&dir, CALIBRATION_FILE, &report)?;
    report.selected_tol()?;
    Ok((dir, report))
}

/// `blowup exponents`: every estimator on an events file, plus plot data.
pub fn cmd_exponents(
    sp: &Spectral,
    events_csv: &Path,
    window: Option<(f64, f64)>,
    skip: usize,
    out: Option<&Path>,
) -> Result<(PathBuf, ExponentReport), CliError> {
    let events = load_events(events_csv)?;
    let dir = output_dir(out, None);
    let opts = ExponentOptions {
        skip,
        window,
        ..Default::default()
    };
    let report = analyze(&events, &opts, sp.exec())?;
    write_json(&dir, EXPONENTS_FILE, &report)?;
    let used = &events[skip..];
    let tc = report.tc_hat;
    let col = |f: &dyn Fn(&blowup::driver::RefinementEvent) -> (f64, f64)| used.iter().map(f).collect::<Vec<_>>();
    write_with(&dir, MAXQ_FILE, |w| write_columns(w, &col(&|e| (1.0 / (tc - e.time), e.xi))))?;
    write_with(&dir, ALPHA_SCALE_FILE, |w| write_columns(w, &col(&|e| (e.scale, e.alpha()))))?;
    write_with(&dir, ALPHA_TIME_FILE, |w| write_columns(w, &col(&|e| (tc - e.time, e.alpha()))))?;
    Ok((dir, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub termination: Termination,
    pub wall_clock: f64,
    pub steps: usize,
    pub final_resolution: usize,
}

impl From<&RunOutcome> for RunSummary {
    fn from(o: &RunOutcome) -> Self {
        RunSummary {
            final_time: o.final_time,
            termination: o.termination,
            wall_clock: o.wall_clock,
            steps: o.steps,
            final_resolution: o.final_resolution(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareFile {
    pub speedup: f64,
    pub field_max_diff: f64,
    pub moment_digits: [u32; 2],
    pub adaptive: RunSummary,
    pub fixed: RunSummary,
}

impl From<&Comparison> for CompareFile {
    fn from(c: &Comparison) -> Self {
        CompareFile {
            speedup: c.speedup,
            field_max_diff: c.field_max_diff,
            moment_digits: c.moment_digits,
            adaptive: (&c.adaptive).into(),
            fixed: (&c.fixed).into(),
        }
    }
}

/// `blowup compare`: adaptive run against its fixed-`N_final` twin.
pub fn cmd_compare(sp: &Spectral, config: &Path, out: Option<&Path>) -> Result<(PathBuf, CompareFile), CliError> {
    let exp = ExperimentConfig::load(config)?;
    let cfg = exp.run_config()?;
    let dir = output_dir(out, Some(&exp));
    let c = compare_runs(sp, &cfg)?;
    let file = CompareFile::from(&c);
    write_json(&dir, COMPARE_FILE, &file)?;
    Ok((dir, file))
}

/// Validate a schedule given on the command line.
pub fn schedule_or_default(s: Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
    let s = s.unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
    if s.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::config("schedule", "every TOL must be positive and finite").into());
    }
    Ok(s)
}
