use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mimo_mccdma::io::{parse_config_with_profile, write_csv, Profile, Settings};
use mimo_mccdma::link::{calibration_checks, run_sweeps, SnrGrid};
use mimo_mccdma::modem::{ModScheme, Modulation};
use mimo_mccdma::selftest::run_selftest;

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

/// Monte-Carlo BER simulator for a coded, spread, OFDM, Alamouti 2xM link.
#[derive(Parser, Debug)]
#[command(name = "mimo-mccdma", version, about)]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// OFDM size preset applied before any explicit keys.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,

    /// Modulation to sweep; repeat or comma-separate for several.
    #[arg(long = "mod", global = true, value_name = "NAME", value_parser = parse_modulations)]
    modulations: Vec<Vec<Modulation>>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// SNR grid in dB as START:STOP:STEP.
    #[arg(long, global = true, value_name = "A:B:STEP", allow_hyphen_values = true, value_parser = parse_grid)]
    snr: Option<SnrGrid>,

    /// Worker threads (results are identical for any value).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Same as the `dump-constellation` subcommand.
    #[arg(long, value_name = "NAME")]
    dump_constellation: Option<Modulation>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the SNR grid and write a BER table as CSV (the default).
    Sweep,
    /// Compare reduced chains against closed-form fading BER.
    Calibrate,
    /// Write a constellation as `label,I,Q` CSV.
    DumpConstellation { name: Modulation },
    /// Run the exact-recovery invariant checks.
    Selftest,
    /// Print the effective configuration in canonical form.
    PrintConfig,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

fn parse_modulations(s: &str) -> Result<Vec<Modulation>, String> {
    s.split(',').map(|m| m.trim().parse::<Modulation>().map_err(|e| e.to_string())).collect()
}

fn parse_grid(s: &str) -> Result<SnrGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = match parts.as_slice() {
        [a, b, c] => [a, b, c].map(|p| p.trim().parse::<f64>()),
        [a] => [a.trim().parse(), a.trim().parse(), Ok(1.0)],
        _ => return Err("expected START:STOP:STEP".into()),
    };
    let [a, b, c] = nums;
    let grid = SnrGrid {
        start_db: a.map_err(|e| e.to_string())?,
        stop_db: b.map_err(|e| e.to_string())?,
        step_db: c.map_err(|e| e.to_string())?,
    };
    grid.validate().map_err(|e| e.to_string())?;
    Ok(grid)
}

enum Failure {
    Usage(String),
    Config(String),
    Check,
    Io(String),
}

fn load_settings(cli: &Cli) -> Result<Settings, Failure> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let profile = cli.profile.map(|p| match p {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    });
    let mut settings = parse_config_with_profile(&text, profile).map_err(|e| match &cli.config {
        Some(path) => Failure::Config(format!("{}: {e}", path.display())),
        None => Failure::Config(e.to_string()),
    })?;
    if !cli.modulations.is_empty() {
        settings.set_modulations(cli.modulations.concat());
    }
    if let Some(seed) = cli.seed {
        settings.link.seed = seed;
    }
    if let Some(grid) = cli.snr {
        settings.link.snr = grid;
    }
    if let Some(t) = cli.threads {
        settings.threads = Some(t as usize);
    }
    settings.link.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(settings)
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(body).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn sweep(settings: &Settings, out: Option<&Path>) -> Result<(), Failure> {
    let start = Instant::now();
    let records =
        run_sweeps(&settings.link, &settings.modulations, settings.threads).map_err(|e| Failure::Io(e.to_string()))?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &records).map_err(|e| Failure::Io(e.to_string()))?;
    emit(out, &buf)?;
    eprintln!("{} points in {:.1} s", records.len(), start.elapsed().as_secs_f64());
    Ok(())
}

fn calibrate(settings: &Settings, out: Option<&Path>) -> Result<(), Failure> {
    let checks = calibration_checks(&settings.link, settings.threads).map_err(|e| Failure::Io(e.to_string()))?;
    let mut text = String::from("check,eb_n0_db,bits,measured,expected,rel_error,status\n");
    for c in &checks {
        let rel = if c.expected == 0.0 { 0.0 } else { (c.measured - c.expected) / c.expected };
        text.push_str(&format!(
            "{},{},{},{:.5e},{:.5e},{:+.4},{}\n",
            c.name,
            c.eb_n0_db,
            c.bits,
            c.measured,
            c.expected,
            rel,
            if c.passed() { "PASS" } else { "FAIL" }
        ));
    }
    emit(out, text.as_bytes())?;
    if checks.iter().all(|c| c.passed()) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn selftest(out: Option<&Path>) -> Result<(), Failure> {
    let checks = run_selftest().map_err(|e| Failure::Io(e.to_string()))?;
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!("{} {} ({})\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    emit(out, text.as_bytes())?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    if let Some(m) = cli.dump_constellation {
        if cli.command.is_some() {
            return Err(Failure::Usage("--dump-constellation cannot be combined with a subcommand".into()));
        }
        return emit(out, ModScheme::new(m).to_csv().as_bytes());
    }
    match &cli.command {
        Some(Command::DumpConstellation { name }) => emit(out, ModScheme::new(*name).to_csv().as_bytes()),
        Some(Command::Selftest) => selftest(out),
        Some(Command::Calibrate) => calibrate(&load_settings(&cli)?, out),
        Some(Command::PrintConfig) => emit(out, load_settings(&cli)?.to_canonical().as_bytes()),
        Some(Command::Sweep) | None => sweep(&load_settings(&cli)?, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Check) => ExitCode::from(EXIT_CHECK),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
