//! On-disk formats and their readers.
//!
//! Reals are written with 17 significant digits so every file reads back
//! to the same doubles.

use std::io::{BufRead, Write};
use std::path::Path;

use blowup::driver::{RefinementEvent, RunOutcome, Termination};
use blowup::SpectralField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const EVENTS_HEADER: &str = "n,T_n,N_n,l_n,xi_n,alpha1,alpha2,detB,detA,E1,E2";

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_events<W: Write>(mut w: W, events: &[RefinementEvent]) -> std::io::Result<()> {
    writeln!(w, "{EVENTS_HEADER}")?;
    for e in events {
        let tail = [e.scale, e.xi, e.a1[0], e.a1[1], e.det_b, e.det_a, e.e1, e.e2];
        writeln!(
            w,
            "{},{},{},{}",
            e.n,
            real(e.time),
            e.resolution,
            tail.iter().map(|&x| real(x)).collect::<Vec<_>>().join(",")
        )?;
    }
    Ok(())
}

pub fn read_events<R: std::io::Read>(r: R, source: &str) -> Result<Vec<RefinementEvent>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut events = Vec::new();
    let mut header_seen = false;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Csv {
                file: source.into(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CliError::Csv {
            file: source.into(),
            line,
            message,
        };
        if !header_seen {
            let got = record.iter().collect::<Vec<_>>().join(",");
            if got != EVENTS_HEADER {
                return Err(bad(format!("expected header `{EVENTS_HEADER}`, found `{got}`")));
            }
            header_seen = true;
            continue;
        }
        if record.len() != 11 {
            return Err(bad(format!("expected 11 fields, found {}", record.len())));
        }
        let int = |i: usize| -> Result<usize, CliError> {
            record[i]
                .trim()
                .parse()
                .map_err(|_| bad(format!("field {} `{}` is not a non-negative integer", i + 1, &record[i])))
        };
        let flt = |i: usize| -> Result<f64, CliError> {
            record[i]
                .trim()
                .parse()
                .map_err(|_| bad(format!("field {} `{}` is not a number", i + 1, &record[i])))
        };
        events.push(RefinementEvent {
            n: int(0)?,
            time: flt(1)?,
            resolution: int(2)?,
            scale: flt(3)?,
            xi: flt(4)?,
            a1: [flt(5)?, flt(6)?],
            det_b: flt(7)?,
            det_a: flt(8)?,
            e1: flt(9)?,
            e2: flt(10)?,
        });
    }
    if !header_seen {
        return Err(CliError::Csv {
            file: source.into(),
            line: 1,
            message: "empty file".into(),
        });
    }
    Ok(events)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub final_time: f64,
    pub termination: Termination,
    pub wall_clock: f64,
    #[serde(rename = "T_B_first")]
    pub t_b_first: Option<f64>,
    #[serde(rename = "T_A_first")]
    pub t_a_first: Option<f64>,
}

impl From<&RunOutcome> for OutcomeFile {
    fn from(o: &RunOutcome) -> Self {
        OutcomeFile {
            final_time: o.final_time,
            termination: o.termination,
            wall_clock: o.wall_clock,
            t_b_first: o.t_b_first,
            t_a_first: o.t_a_first,
        }
    }
}

/// One `k Re Im` line per stored mode.
pub fn write_snapshot<W: Write>(mut w: W, u: &SpectralField) -> std::io::Result<()> {
    for (k, c) in u.iter() {
        writeln!(w, "{k} {} {}", real(c.re), real(c.im))?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R, source: &str) -> Result<Vec<(i64, Complex64)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(Path::new(source), e))?;
        let bad = |message: String| CliError::Csv {
            file: source.into(),
            line: i as u64 + 1,
            message,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(format!("expected `k Re Im`, found {} fields", f.len())));
        }
        let k = f[0].parse().map_err(|_| bad(format!("bad mode index `{}`", f[0])))?;
        let re = f[1].parse().map_err(|_| bad(format!("bad real part `{}`", f[1])))?;
        let im = f[2].parse().map_err(|_| bad(format!("bad imaginary part `{}`", f[2])))?;
        out.push((k, Complex64::new(re, im)));
    }
    Ok(out)
}

/// Two whitespace-separated columns of raw values.
pub fn write_columns<W: Write>(mut w: W, rows: &[(f64, f64)]) -> std::io::Result<()> {
    for (x, y) in rows {
        writeln!(w, "{} {}", real(*x), real(*y))?;
    }
    Ok(())
}

pub fn read_columns<R: BufRead>(r: R, source: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(Path::new(source), e))?;
        let f: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Csv {
                file: source.into(),
                line: i as u64 + 1,
                message: format!("{e}"),
            })?;
        if f.len() != 2 {
            return Err(CliError::Csv {
                file: source.into(),
                line: i as u64 + 1,
                message: format!("expected 2 columns, found {}", f.len()),
            });
        }
        out.push((f[0], f[1]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RefinementEvent> {
        (1..=3)
            .map(|n| RefinementEvent {
                n,
                time: 0.1 * n as f64 + 1e-17,
                resolution: 16 << n,
                scale: blowup::driver::length_scale(16 << n),
                xi: std::f64::consts::PI * n as f64,
                a1: [1.0 - 1e-16, 1.0 / 3.0],
                det_b: -1.234e-11,
                det_a: 5e-300,
                e1: 0.5,
                e2: f64::MIN_POSITIVE,
            })
            .collect()
    }

    #[test]
    fn events_round_trip_exactly() {
        let mut buf = Vec::new();
        write_events(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{EVENTS_HEADER}\n")));
        assert_eq!(read_events(&buf[..], "mem").unwrap(), sample());
    }

    #[test]
    fn malformed_line_is_reported() {
        let mut buf = Vec::new();
        write_events(&mut buf, &sample()).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text = text.replace("\n3,", "\n3,x");
        let err = read_events(text.as_bytes(), "ev.csv").unwrap_err();
        assert!(matches!(err, CliError::Csv { line: 4, .. }), "{err}");
        let short = format!("{EVENTS_HEADER}\n1,2,3\n");
        assert!(matches!(read_events(short.as_bytes(), "s").unwrap_err(), CliError::Csv { line: 2, .. }));
        assert!(matches!(read_events("a,b\n".as_bytes(), "h").unwrap_err(), CliError::Csv { line: 1, .. }));
        assert!(read_events("".as_bytes(), "e").is_err());
    }

    #[test]
    fn snapshot_and_columns_round_trip() {
        let u = SpectralField::from_fn(blowup::ModeRange::symmetric(8), 0.3, |k| {
            Complex64::new(1.0 / (1.0 + k as f64 * k as f64), k as f64 / 7.0)
        });
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &u).unwrap();
        let back = read_snapshot(&buf[..], "snap").unwrap();
        assert_eq!(back, u.iter().collect::<Vec<_>>());

        let rows = vec![(1e-300, 2.0 / 3.0), (5.0, -1e10)];
        let mut buf = Vec::new();
        write_columns(&mut buf, &rows).unwrap();
        assert_eq!(read_columns(&buf[..], "cols").unwrap(), rows);
        assert!(read_columns("1 2 3\n".as_bytes(), "c").is_err());
    }

    #[test]
    fn outcome_json_names() {
        let o = OutcomeFile {
            final_time: 0.96,
            termination: Termination::ResolutionExhausted,
            wall_clock: 1.5,
            t_b_first: Some(0.06),
            t_a_first: None,
        };
        let s = serde_json::to_string(&o).unwrap();
        assert!(s.contains("\"T_B_first\":0.06") && s.contains("\"T_A_first\":null"));
        assert!(s.contains("\"termination\":\"resolution_exhausted\""));
        assert_eq!(serde_json::from_str::<OutcomeFile>(&s).unwrap(), o);
    }
}
