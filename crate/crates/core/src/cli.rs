//! Command-line front end.
//!
//! Flags given on the command line override the fields of an optional
//! `--config` JSON document, which in turn override the defaults.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::engine::{evolve, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::nmr::{magnetization_table, write_magnetization_csv};
use crate::phase_corrections::{figure1_dataset, SweepConfig};
use crate::rotating_frame::solve_rotating_frame;
use crate::spectral_path::{coupling_at, make_kernel, ParameterPath, PrecessingPath, SampledPath};
use crate::validate::{run_validation, NMR_XS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

const MAX_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "geophase", version, about = "Non-adiabatic phase corrections for a two-level system in a moving field")]
pub struct Cli {
    /// JSON file with run settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Eigen,
    Evolve,
    PhaseSweep,
    Nmr,
    Validate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instantaneous eigensystem and couplings at t = 0, plus the
    /// rotating-frame solution when --x is given.
    Eigen(Flags),
    /// Evolve S and I and write the trajectory CSV.
    Evolve(Flags),
    /// Sweep the drive and write the phase-curve CSV.
    PhaseSweep(Flags),
    /// Transverse magnetization at whole precession cycles.
    Nmr(Flags),
    /// Run the oracle comparison suite and write a JSON report.
    Validate(Flags),
}

/// Flags shared by all subcommands; each command reads the ones it needs.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Polar angle of the field in degrees.
    #[arg(long)]
    pub theta_deg: Option<f64>,
    /// Dimensionless drive x (comma-separated list for nmr).
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Final drive of a sweep.
    #[arg(long)]
    pub xf: Option<f64>,
    /// Number of precession cycles at the final drive.
    #[arg(long)]
    pub s: Option<f64>,
    /// Dimensionless evolution time.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Cycle indices (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Number of sweep grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Integration tolerance, in (0, 1e-4].
    #[arg(long)]
    pub tol: Option<f64>,
    /// CSV of t,theta,phi,R samples defining the path.
    #[arg(long)]
    pub path_file: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub theta_deg: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub x_f: Option<f64>,
    pub s: Option<f64>,
    pub tau: Option<f64>,
    pub n: Option<Vec<u32>>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub path_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Overlay command-line flags.
    fn merged(mut self, kind: CommandKind, f: Flags) -> Self {
        self.command = Some(kind);
        macro_rules! take {
            ($($dst:ident <- $src:ident),*) => { $( if f.$src.is_some() { self.$dst = f.$src; } )* };
        }
        take!(theta_deg <- theta_deg, x <- x, x_f <- xf, s <- s, tau <- tau, n <- n, grid <- grid, tol <- tol,
              path_file <- path_file, out <- out);
        self
    }

    fn theta(&self) -> Result<f64> {
        let deg = self.theta_deg.unwrap_or(60.0);
        if !(0.0..=180.0).contains(&deg) {
            return Err(Error::invalid(format!("theta-deg must lie in [0, 180], got {deg}")));
        }
        Ok(deg.to_radians())
    }

    fn tol(&self) -> Result<f64> {
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol <= MAX_TOL) {
            return Err(Error::invalid(format!("tol must lie in (0, 1e-4], got {tol}")));
        }
        Ok(tol)
    }

    fn single_x(&self) -> Result<Option<f64>> {
        match self.x.as_deref() {
            None => Ok(None),
            Some([x]) => Ok(Some(*x)),
            Some(_) => Err(Error::invalid("this command takes a single --x value")),
        }
    }

    fn forbid(&self, present: bool, what: &str) -> Result<()> {
        if present {
            let cmd = self.command.map(|c| format!("{c:?}")).unwrap_or_default().to_lowercase();
            return Err(Error::invalid(format!("{what} is not accepted by {cmd}")));
        }
        Ok(())
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        Error::InvalidInput(_) | Error::Json(_) => EXIT_CONFIG,
        _ if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn run_cli(cli: Cli) -> Result<i32> {
    // a missing or unreadable config file is a configuration problem
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| match e {
            Error::Io(io) => Error::invalid(format!("cannot read config {}: {io}", p.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    let (kind, flags) = match cli.command {
        Some(Command::Eigen(f)) => (CommandKind::Eigen, f),
        Some(Command::Evolve(f)) => (CommandKind::Evolve, f),
        Some(Command::PhaseSweep(f)) => (CommandKind::PhaseSweep, f),
        Some(Command::Nmr(f)) => (CommandKind::Nmr, f),
        Some(Command::Validate(f)) => (CommandKind::Validate, f),
        None => match base.command {
            Some(k) => (k, Flags::default()),
            None => return Err(Error::invalid("no command given on the command line or in the config")),
        },
    };
    if let Some(k) = base.command {
        if cli.config.is_some() && k != kind {
            return Err(Error::invalid(format!("config names command {k:?} but {kind:?} was requested")));
        }
    }
    run(&base.merged(kind, flags))
}

/// Execute a fully merged configuration.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    let kind = cfg.command.ok_or_else(|| Error::invalid("no command"))?;
    let tol = cfg.tol()?;
    if let Some(grid) = cfg.grid {
        if grid < 2 {
            return Err(Error::invalid(format!("grid must be at least 2, got {grid}")));
        }
    }
    match kind {
        CommandKind::Eigen => {
            cfg.forbid(cfg.x_f.is_some(), "--xf")?;
            let text = eigen_report(cfg.theta()?, cfg.single_x()?)?;
            emit(cfg.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
        }
        CommandKind::Evolve => {
            cfg.forbid(cfg.x_f.is_some(), "--xf")?;
            let path: ParameterPath = match &cfg.path_file {
                Some(p) => {
                    cfg.forbid(cfg.x.is_some(), "--x together with --path-file")?;
                    SampledPath::from_csv_file(p)?.into()
                }
                None => {
                    let x = cfg.single_x()?.ok_or_else(|| Error::invalid("evolve needs --x or --path-file"))?;
                    PrecessingPath::dimensionless(x, cfg.theta()?)?.into()
                }
            };
            let t_end = match (cfg.tau, path.duration()) {
                (Some(t), _) => t,
                (None, Some(d)) => d,
                (None, None) => return Err(Error::invalid("evolve needs --tau for a precessing path")),
            };
            let traj = evolve(&make_kernel(&path)?, t_end, tol)?;
            emit(cfg.out.as_deref(), |w| traj.write_csv(w))?;
        }
        CommandKind::PhaseSweep => {
            cfg.forbid(cfg.x.is_some(), "--x")?;
            let defaults = SweepConfig::default();
            let sweep = SweepConfig {
                theta: cfg.theta()?,
                x_f: cfg.x_f.unwrap_or(defaults.x_f),
                s: cfg.s.unwrap_or(defaults.s),
                grid: cfg.grid.unwrap_or(defaults.grid),
                tol,
                ..defaults
            };
            let curve = figure1_dataset(&sweep)?;
            emit(cfg.out.as_deref(), |w| curve.write_csv(w))?;
        }
        CommandKind::Nmr => {
            cfg.forbid(cfg.x_f.is_some(), "--xf")?;
            let xs = cfg.x.clone().unwrap_or_else(|| NMR_XS.to_vec());
            let ns = cfg.n.clone().unwrap_or_else(|| vec![1, 2, 3]);
            let rows = magnetization_table(&xs, cfg.theta()?, &ns)?;
            emit(cfg.out.as_deref(), |w| write_magnetization_csv(w, rows))?;
        }
        CommandKind::Validate => {
            let report = run_validation(tol)?;
            let text = report.to_json()?;
            emit(cfg.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
            if !report.pass {
                for c in report.checks.iter().filter(|c| !c.pass) {
                    eprintln!("check failed: {} (error {:e} > {:e})", c.name, c.max_error, c.tolerance);
                }
                return Ok(EXIT_VALIDATION_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EigenReport {
    theta: f64,
    e_plus: f64,
    e_minus: f64,
    v_plus: [[f64; 2]; 2],
    v_minus: [[f64; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    couplings: Option<Couplings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rotating_frame: Option<RotatingReport>,
}

#[derive(Serialize)]
struct Couplings {
    berry_rate_plus: f64,
    berry_rate_minus: f64,
    coupling_minus: [f64; 2],
    detuning: f64,
}

#[derive(Serialize)]
struct RotatingReport {
    theta_bar: f64,
    delta_theta: f64,
    omega0: f64,
    a_plus: f64,
    a_minus: f64,
    d: f64,
    e: f64,
    g: f64,
}

fn eigen_report(theta: f64, x: Option<f64>) -> Result<String> {
    let split = |v: &[num_complex::Complex64; 2]| [[v[0].re, v[0].im], [v[1].re, v[1].im]];
    let path: ParameterPath = PrecessingPath::dimensionless(x.unwrap_or(0.0), theta)?.into();
    let frame = coupling_at(&path, 0.0)?;
    let (couplings, rotating_frame) = match x {
        None => (None, None),
        Some(x) => {
            let r = solve_rotating_frame(x, theta)?;
            (
                Some(Couplings {
                    berry_rate_plus: frame.gamma_rate_plus,
                    berry_rate_minus: frame.gamma_rate_minus,
                    coupling_minus: [frame.coupling_minus.re, frame.coupling_minus.im],
                    detuning: frame.delta,
                }),
                Some(RotatingReport {
                    theta_bar: r.theta_bar,
                    delta_theta: r.delta_theta,
                    omega0: r.omega0,
                    a_plus: r.a_plus,
                    a_minus: r.a_minus,
                    d: r.d,
                    e: r.e,
                    g: r.g,
                }),
            )
        }
    };
    let report = EigenReport {
        theta,
        e_plus: frame.e_plus,
        e_minus: frame.e_minus,
        v_plus: split(&frame.v_plus),
        v_minus: split(&frame.v_minus),
        x,
        couplings,
        rotating_frame,
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}
