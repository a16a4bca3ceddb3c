//! `spinrad`: radiation, spectra, forces and spin-down of rotating bodies.
//!
//! Exit codes: 0 ok, 1 usage or input, 2 physics (regime, accuracy, ...),
//! 3 verification failure.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spinrad_core::constants::{C, HBAR, K_B};
use spinrad_core::dynamics::{integrate_spin_down, spin_down_timescale, write_trajectory_csv, SpinDownTrajectory};
use spinrad_core::interactions::{shear_force_on_test, torque_on_test, write_sweep_csv, InteractionResult};
use spinrad_core::radiation::{power_cylinder, power_sphere, trace_power, write_spectrum_csv};
use spinrad_core::verify::{run_all, VerifyReport};
use spinrad_core::{Error, RadiationResult};

use config::{BodyConfig, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "spinrad", version, about = "Spontaneous emission and radiation forces of slowly rotating bodies")]
struct Cli {
    /// Scenario JSON; the shipped default is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Proceed past regime-guard violations.
    #[arg(long, global = true)]
    override_regime_guard: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `thermal.angular_velocity_rad_s`.
    #[arg(long, global = true)]
    angular_velocity_rad_s: Option<f64>,
    /// Print the compiled-in physical constants and exit.
    #[arg(long)]
    constants: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Total radiated power and the per-channel table.
    Power,
    /// Photon and power spectra per channel.
    Spectrum,
    /// Torque and shear force on the configured test object.
    Torque,
    /// Spin-down trajectory under radiation reaction.
    Spindown,
    /// Run the self-verification suites.
    Verify,
}

enum Failure {
    Usage(String),
    Physics(Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidParameter(_) | Error::Io(_) => Failure::Usage(format!("error[{}]: {e}", e.code())),
            other => Failure::Physics(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Physics(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
        Err(Failure::Verify) => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.constants {
        println!("hbar_J_s = {HBAR:e}");
        println!("c_m_s = {C:e}");
        println!("k_B_J_K = {K_B:e}");
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Failure::Usage("no subcommand given; see --help".into()));
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let mut cfg = ScenarioConfig::load(cli.config.as_deref())?;
    if cli.override_regime_guard {
        cfg.override_regime_guard = true;
    }
    if let Some(om) = cli.angular_velocity_rad_s {
        cfg.thermal.angular_velocity_rad_s = om;
    }
    cfg.validate()?;
    let sink = Sink { out: cli.out, format: cli.format };
    match command {
        Command::Power => cmd_power(&cfg, &sink),
        Command::Spectrum => cmd_spectrum(&cfg, &sink),
        Command::Torque => cmd_torque(&cfg, &sink),
        Command::Spindown => cmd_spindown(&cfg, &sink),
        Command::Verify => cmd_verify(&cfg, &sink),
    }
}

/// Where the primary artifact goes; `--out` beats the config path.
struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn emit(&self, configured: Option<&PathBuf>, bytes: Vec<u8>) -> Result<(), Failure> {
        match self.out.as_ref().or(configured) {
            Some(path) => std::fs::write(path, bytes)
                .map_err(|e| Failure::Usage(format!("error[io]: cannot write {}: {e}", path.display()))),
            None => std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Failure::Usage(format!("error[io]: stdout: {e}"))),
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("results are plain data");
    s.push('\n');
    s.into_bytes()
}

fn radiation(cfg: &ScenarioConfig, spectrum_points: usize) -> Result<RadiationResult, Error> {
    let mut q = cfg.quadrature.clone();
    q.spectrum_points = spectrum_points;
    let om = cfg.thermal.angular_velocity_rad_s;
    match &cfg.body {
        BodyConfig::Sphere { radius_m } => power_sphere(&cfg.material, *radius_m, &cfg.thermal, &q, cfg.guard()),
        BodyConfig::Cylinder { radius_m, length_m } if cfg.thermal.is_cold() && spectrum_points == 0 => {
            power_cylinder(&cfg.material, *radius_m, *length_m, om, &q, cfg.cylinder_mode, cfg.guard())
        }
        _ => trace_power(cfg.provider(om)?.as_ref(), &cfg.thermal, &q),
    }
}

fn cmd_power(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), Failure> {
    let result = radiation(cfg, cfg.quadrature.spectrum_points)?;
    eprintln!(
        "total power: {:e} W (quadrature error {:e} W, |m| <= {})",
        result.total_power_w, result.quadrature_error_w, result.truncation.max_m_retained
    );
    if let Some(x) = &result.cross_check {
        eprintln!("{}: relative difference {:.3e}", x.description, x.relative_difference);
    }
    if let Some(path) = &cfg.outputs.spectrum_csv {
        if !result.spectrum.is_empty() {
            let mut buf = Vec::new();
            write_spectrum_csv(&result.spectrum, &mut buf)?;
            std::fs::write(path, buf)
                .map_err(|e| Failure::Usage(format!("error[io]: cannot write {}: {e}", path.display())))?;
        }
    }
    let bytes = match sink.format {
        Format::Json => json_bytes(&result),
        Format::Csv => power_table(&result)?,
    };
    sink.emit(cfg.outputs.power.as_ref(), bytes)
}

fn power_table(result: &RadiationResult) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["channel", "m", "power_W", "error_W", "panels"]).map_err(io)?;
    for c in &result.per_channel {
        w.write_record([
            c.channel.to_string(),
            c.channel.m.to_string(),
            format!("{:e}", c.power_w),
            format!("{:e}", c.error_w),
            c.panels.to_string(),
        ])
        .map_err(io)?;
    }
    w.write_record([
        "total".to_string(),
        String::new(),
        format!("{:e}", result.total_power_w),
        format!("{:e}", result.quadrature_error_w),
        result.truncation.panels.to_string(),
    ])
    .map_err(io)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn cmd_spectrum(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), Failure> {
    if cfg.spectrum.points == 0 {
        return Err(Failure::Usage("spectrum.points must be positive".into()));
    }
    let result = radiation(cfg, cfg.spectrum.points)?;
    eprintln!("{} spectrum rows", result.spectrum.len());
    let bytes = match sink.format {
        Format::Json => json_bytes(&result.spectrum),
        Format::Csv => {
            let mut buf = Vec::new();
            write_spectrum_csv(&result.spectrum, &mut buf)?;
            buf
        }
    };
    sink.emit(cfg.outputs.spectrum_csv.as_ref(), bytes)
}

fn cmd_torque(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), Failure> {
    let t = cfg.torque.as_ref().ok_or_else(|| Failure::Usage("config has no `torque` section".into()))?;
    let omegas =
        if t.angular_velocities_rad_s.is_empty() { vec![cfg.thermal.angular_velocity_rad_s] } else { t.angular_velocities_rad_s.clone() };
    let mut jobs: Vec<(f64, f64)> = omegas.iter().flat_map(|&om| t.separations_m.iter().map(move |&d| (om, d))).collect();
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let guard = cfg.guard();
    let rows = jobs
        .par_iter()
        .map(|&(om, d)| -> Result<InteractionResult, Error> {
            let rotator = cfg.provider(om)?;
            let test = cfg.test_object(d)?;
            let (torque_nm, torque_error_nm) = torque_on_test(rotator.as_ref(), &test, om, &cfg.quadrature, guard)?;
            let (force_y_n, force_error_n) =
                shear_force_on_test(rotator.as_ref(), &test, om, &cfg.quadrature, t.shear_form, guard)?;
            Ok(InteractionResult {
                separation_m: d,
                angular_velocity_rad_s: om,
                torque_nm,
                torque_error_nm,
                force_y_n,
                force_error_n,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    eprintln!("{} torque rows", rows.len());
    let bytes = match sink.format {
        Format::Json => json_bytes(&rows),
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            buf
        }
    };
    sink.emit(cfg.outputs.torque.as_ref(), bytes)
}

#[derive(Serialize)]
struct SpinDownReport<'a> {
    timescale_s: Option<f64>,
    t10_s: Option<f64>,
    radiated_energy_j: f64,
    trajectory: &'a SpinDownTrajectory,
}

fn cmd_spindown(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), Failure> {
    let scenario = cfg.spin_down()?;
    let timescale_s = match cfg.body {
        BodyConfig::Cylinder { .. } => Some(spin_down_timescale(&scenario)?),
        _ => None,
    };
    let traj = integrate_spin_down(&scenario, &cfg.quadrature)?;
    let report = SpinDownReport { timescale_s, t10_s: traj.t10_s, radiated_energy_j: traj.radiated_energy(), trajectory: &traj };
    if let Some(tau) = timescale_s {
        eprintln!("timescale estimate: {tau:e} s");
    }
    match traj.t10_s {
        Some(t) => eprintln!("Omega falls to Omega0/10 at t = {t:e} s"),
        None => eprintln!("Omega stays above Omega0/10 within {:e} s", scenario.end_time_s),
    }
    let bytes = match sink.format {
        Format::Json => json_bytes(&report),
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory_csv(&traj, &mut buf)?;
            buf
        }
    };
    sink.emit(cfg.outputs.spindown.as_ref(), bytes)
}

fn verify_table(report: &VerifyReport) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["suite", "check", "measured", "limit", "status"]).map_err(io)?;
    for c in &report.checks {
        w.write_record([
            c.suite.clone(),
            c.check.clone(),
            format!("{:e}", c.measured),
            format!("{:e}", c.limit),
            if c.passed { "PASS" } else { "FAIL" }.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn cmd_verify(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), Failure> {
    let report = run_all(&cfg.verify_inputs(), &cfg.quadrature);
    for c in report.failures() {
        eprintln!("FAIL {} / {}: measured {:e}, limit {:e}", c.suite, c.check, c.measured, c.limit);
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    eprintln!("{passed}/{} checks passed", report.checks.len());
    let bytes = match sink.format {
        Format::Json => json_bytes(&report),
        Format::Csv => verify_table(&report)?,
    };
    sink.emit(cfg.outputs.verify.as_ref(), bytes)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
