use std::path::PathBuf;
use std::process::ExitCode;

use blowup::{Exec, Spectral};
use blowup_cli::commands::{
    cmd_calibrate, cmd_compare, cmd_exponents, cmd_run, schedule_or_default, DEFAULT_DIGITS,
};
use blowup_cli::{parse_list, parse_window, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blowup", version, about = "Adaptive spectral runs toward finite-time singularities")]
struct Cli {
    /// Disable the data-parallel kernels.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive run; writes events.csv, outcome.json and final_field.dat.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose TOL from a decreasing schedule; writes calibration.json.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        digits: u32,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_parser = schedule_arg)]
        schedule: Option<Schedule>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blow-up exponents from an events file.
    Exponents {
        events: PathBuf,
        /// T_c search window `lo,hi`.
        #[arg(long, value_parser = window_arg)]
        tc_window: Option<Window>,
        /// Leading events to leave out of the fits.
        #[arg(long, default_value_t = 0)]
        skip: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adaptive run against a fixed-resolution twin; writes compare.json.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone)]
struct Schedule(Vec<f64>);

#[derive(Clone, Copy)]
struct Window((f64, f64));

fn schedule_arg(s: &str) -> Result<Schedule, String> {
    parse_list(s).map(Schedule).map_err(|e| e.to_string())
}

fn window_arg(s: &str) -> Result<Window, String> {
    parse_window(s).map(Window).map_err(|e| e.to_string())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let sp = Spectral::new(if cli.sequential { Exec::Sequential } else { Exec::default() });
    match cli.command {
        Command::Run { config, out } => {
            let (dir, o) = cmd_run(&sp, &config, out.as_deref())?;
            println!(
                "{} refinements, termination {:?} at t = {:.9}, {:.2} s -> {}",
                o.events.len(),
                o.termination,
                o.final_time,
                o.wall_clock,
                dir.display()
            );
        }
        Command::Calibrate {
            config,
            digits,
            schedule,
            out,
        } => {
            let schedule = schedule_or_default(schedule.map(|s| s.0))?;
            let (dir, r) = cmd_calibrate(&sp, &config, digits, &schedule, out.as_deref())?;
            for row in &r.rows {
                println!("TOL {:e}: {} digits", row.tol, row.digits);
            }
            println!("selected TOL {:e} -> {}", r.selected.unwrap_or(f64::NAN), dir.display());
        }
        Command::Exponents {
            events,
            tc_window,
            skip,
            out,
        } => {
            let (dir, r) = cmd_exponents(&sp, &events, tc_window.map(|w| w.0), skip, out.as_deref())?;
            if let Some(t) = r.tc_search.filter(|t| t.at_boundary) {
                eprintln!("warning: T_c = {} sits on the search window boundary", t.tc);
            }
            println!(
                "T_c = {:.10}  gamma = {:.6}  gamma' = {:.6}  beta1 = {:.4}  beta2 = {:.4}  delta = {:.4}  ({:?}) -> {}",
                r.tc_hat,
                r.gamma_direct,
                r.gamma_scaling,
                r.beta1,
                r.beta2,
                r.delta,
                r.classification,
                dir.display()
            );
        }
        Command::Compare { config, out } => {
            let (dir, c) = cmd_compare(&sp, &config, out.as_deref())?;
            println!(
                "speedup {:.1}x, field difference {:.3e}, moment digits {:?} -> {}",
                c.speedup,
                c.field_max_diff,
                c.moment_digits,
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
