use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtc_core::sweep::{parse_config, run_sweep, RawConfig};
use dtc_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_IO: u8 = 4;

/// Sweeps of the periodically kicked Ising ring.
///
/// Grids take `a`, `a:b` or `a:b:step` (inclusive), comma separated.
/// Flags override values from `--config`.
#[derive(Parser)]
#[command(name = "dtc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full P(nT) series per grid point, with lifetime and window average.
    Evolve(Flags),
    /// Lifetime n* per grid point, stopping at the first crossing.
    LifetimeScan(Flags),
    /// Window average of P(2nT) per grid point.
    PhaseDiagram(Flags),
    /// Quasi-energy gap statistics, exact pair counts and symmetry residual.
    Spectrum(Flags),
    /// DFT of P(nT) or a local magnetization.
    Fourier(Flags),
    /// Run whatever mode the config file names.
    Run(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat JSON object with the same keys as the flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Chain lengths.
    #[arg(short = 'L', long, value_name = "GRID")]
    length: Option<String>,
    #[arg(long, value_name = "GRID")]
    jt_over_pi: Option<String>,
    #[arg(long, value_name = "GRID")]
    epsilon_over_pi: Option<String>,
    /// Drive period T.
    #[arg(long)]
    period: Option<String>,
    /// Floquet periods per grid point.
    #[arg(long)]
    periods: Option<String>,
    /// Lifetime threshold on P(2nT).
    #[arg(long)]
    threshold: Option<String>,
    /// Number of P(2nT) samples averaged.
    #[arg(long)]
    window: Option<String>,
    /// Summary CSV path.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
    /// up, down, x:<site> or flip:<site>.
    #[arg(long)]
    initial: Option<String>,
    /// return or sz:<site> (fourier).
    #[arg(long)]
    observable: Option<String>,
    /// Record local magnetizations in evolve series.
    #[arg(long)]
    sz: bool,
    /// Write the sorted quasi-energies of every point (spectrum).
    #[arg(long)]
    dump_spectra: bool,
}

impl Flags {
    fn to_raw(&self, mode: Option<&str>) -> RawConfig {
        let mut raw = RawConfig::default();
        if let Some(mode) = mode {
            raw.set("mode", mode);
        }
        let pairs = [
            ("length", &self.length),
            ("jt_over_pi", &self.jt_over_pi),
            ("epsilon_over_pi", &self.epsilon_over_pi),
            ("period", &self.period),
            ("periods", &self.periods),
            ("threshold", &self.threshold),
            ("window", &self.window),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("initial", &self.initial),
            ("observable", &self.observable),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.as_str());
            }
        }
        if self.sz {
            raw.set("sz", "true");
        }
        if self.dump_spectra {
            raw.set("dump_spectra", "true");
        }
        raw
    }
}

fn run(cli: Cli) -> Result<(), u8> {
    let (mode, flags) = match &cli.command {
        Command::Evolve(f) => (Some("evolve"), f),
        Command::LifetimeScan(f) => (Some("lifetime-scan"), f),
        Command::PhaseDiagram(f) => (Some("phase-diagram"), f),
        Command::Spectrum(f) => (Some("spectrum"), f),
        Command::Fourier(f) => (Some("fourier"), f),
        Command::Run(f) => (None, f),
    };

    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                eprintln!("error: cannot read {}: {e}", path.display());
                EXIT_IO
            })?;
            Some(RawConfig::from_json(&text).map_err(|e| {
                eprintln!("error: {}: {e}", path.display());
                EXIT_CONFIG
            })?)
        }
        None => None,
    };

    let config = parse_config(file, flags.to_raw(mode)).map_err(|e| {
        eprintln!("error: {e}");
        if e.is_capacity_only() {
            EXIT_CAPACITY
        } else {
            EXIT_CONFIG
        }
    })?;

    let result = run_sweep(&config).map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })?;
    result.write().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_IO
    })?;

    let failed = result
        .column("error")
        .map_or(0, |c| c.iter().filter(|s| !s.is_empty()).count());
    if failed > 0 {
        eprintln!("warning: {failed} grid point(s) failed, see the error column");
    }
    println!(
        "{}: {} rows written to {}",
        config.mode,
        result.rows.len(),
        config.output_path.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        e if e.is_capacity() => EXIT_CAPACITY,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
