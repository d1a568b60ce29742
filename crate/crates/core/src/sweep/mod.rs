//! Parameter sweeps over `(L, JT, ε)` grids with deterministic CSV output.
//!
//! Grid points are independent and are the unit of parallel work. Workers
//! return formatted rows and side-file contents; everything is written by a
//! single writer in grid order, so the files do not depend on the worker
//! count or completion order.
//!
//! Summary file layout: one `#`-prefixed JSON line holding the config echo
//! and provenance, a CSV header, then one row per grid point. A grid point
//! that fails still gets a row, with the message in the `error` column.
//! The worker count is not recorded, so output is identical for any `jobs`.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::engine::{build_dense_propagator, Evolver, ObservableSelection};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::observables::{average_return, fourier_spectrum, lifetime};
use crate::spectral::{
    count_exact_pi_pairs, gap_statistics, quasi_energies, time_reflection_residual, PAIR_TOL,
};
use crate::state::{polarized_state, product_state, Direction, FloquetParams, StateVector};

pub use config::{
    parse_config, parse_grid, ConfigErrors, ConfigIssue, GridPoint, InitialState, IssueKind, Mode,
    Observable, RawConfig, SweepConfig,
};

/// A file written next to the summary table, path relative to its directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideFile {
    pub relative_path: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp_unix: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub columns: Vec<&'static str>,
    /// Formatted cells, one row per grid point in grid order.
    pub rows: Vec<Vec<String>>,
    pub side_files: Vec<SideFile>,
    pub provenance: Provenance,
}

impl SweepResult {
    /// Cells of the named column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn header_line(&self) -> String {
        let header = json!({
            "config": &self.config,
            "provenance": &self.provenance,
        });
        format!("# {header}")
    }

    /// Full text of the summary CSV.
    pub fn to_csv(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes the summary to `config.output_path` and every side file
    /// relative to its directory.
    pub fn write(&self) -> Result<()> {
        let path = &self.config.output_path;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let base = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        for side in &self.side_files {
            let target = base.join(&side.relative_path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&target, &side.contents).map_err(|e| Error::io(&target, e))?;
        }
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Shortest representation that parses back to the same `f64`, in
/// exponent form for very small or very large magnitudes.
fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn side_dir(config: &SweepConfig, suffix: &str) -> String {
    let stem = config
        .output_path
        .file_stem()
        .map_or_else(|| "sweep".to_string(), |s| s.to_string_lossy().into_owned());
    format!("{stem}_{suffix}")
}

fn point_params(config: &SweepConfig, point: &GridPoint) -> Result<FloquetParams> {
    let pi = std::f64::consts::PI;
    FloquetParams::new(
        point.length,
        point.jt_over_pi * pi / config.period,
        config.period,
        point.epsilon_over_pi * pi,
    )
}

/// Initial state for a run of length `length`.
pub fn initial_state(initial: InitialState, length: usize) -> Result<StateVector> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let with_site = |site: usize, orientation: (f64, f64)| {
        if site >= length {
            return Err(Error::invalid(format!(
                "site {site} out of range for L = {length}"
            )));
        }
        let mut o = vec![(0.0, 0.0); length];
        o[site] = orientation;
        product_state(length, &o)
    };
    match initial {
        InitialState::Up => polarized_state(length, Direction::Up),
        InitialState::Down => polarized_state(length, Direction::Down),
        InitialState::TiltedX(site) => with_site(site, (FRAC_PI_2, 0.0)),
        InitialState::Flipped(site) => with_site(site, (PI, 0.0)),
    }
}

struct PointOutput {
    cells: Vec<String>,
    side_file: Option<SideFile>,
}

fn echo(point: &GridPoint) -> Vec<String> {
    vec![
        point.index.to_string(),
        point.length.to_string(),
        fmt_f64(point.jt_over_pi),
        fmt_f64(point.epsilon_over_pi),
    ]
}

const ECHO_COLUMNS: [&str; 4] = ["index", "L", "jt_over_pi", "epsilon_over_pi"];

fn columns(mode: Mode) -> Vec<&'static str> {
    let specific: &[&str] = match mode {
        Mode::Evolve => &[
            "periods",
            "lifetime_n",
            "censored",
            "average_return",
            "final_p",
            "norm_drift",
            "series_file",
        ],
        Mode::LifetimeScan => &["n_max", "lifetime_n", "censored", "norm_drift"],
        Mode::PhaseDiagram => &["window", "average_return", "norm_drift"],
        Mode::Spectrum => &[
            "delta0_mean",
            "delta_pi_mean",
            "ratio",
            "n_zero",
            "n_pi",
            "pair_reference",
            "reflection_residual",
            "spectrum_file",
        ],
        Mode::Fourier => &[
            "observable",
            "n_samples",
            "peak_bin",
            "peak_frequency",
            "peak_magnitude",
            "half_drive_magnitude",
            "norm_drift",
            "spectrum_file",
        ],
    };
    ECHO_COLUMNS
        .iter()
        .chain(specific)
        .chain(std::iter::once(&"error"))
        .copied()
        .collect()
}

fn evolve_point(config: &SweepConfig, point: &GridPoint) -> Result<PointOutput> {
    let params = point_params(config, point)?;
    let initial = initial_state(config.initial, point.length)?;
    let selection = ObservableSelection {
        sz: config.record_sz,
    };
    let series = Evolver::new(params)?.evolve(&initial, config.n_periods, selection)?;
    let even = series.even_return_probabilities();
    let life = lifetime(&even, config.threshold);
    let avg = average_return(&even, config.window)?;

    let mut text = String::from("n,t,P");
    if config.record_sz {
        for i in 0..point.length {
            let _ = write!(text, ",sz_{i}");
        }
    }
    text.push('\n');
    for s in series.samples() {
        let _ = write!(
            text,
            "{},{},{}",
            s.n,
            fmt_f64(s.n as f64 * config.period),
            fmt_f64(s.p)
        );
        if let Some(sz) = &s.sz {
            for v in sz {
                let _ = write!(text, ",{}", fmt_f64(*v));
            }
        }
        text.push('\n');
    }
    let relative_path = format!(
        "{}/point_{:05}.csv",
        side_dir(config, "series"),
        point.index
    );

    let mut cells = echo(point);
    cells.extend([
        config.n_periods.to_string(),
        life.value().to_string(),
        life.is_censored().to_string(),
        fmt_f64(avg),
        fmt_f64(series.samples().last().map_or(f64::NAN, |s| s.p)),
        fmt_f64(series.norm_drift()),
        relative_path.clone(),
    ]);
    Ok(PointOutput {
        cells,
        side_file: Some(SideFile {
            relative_path,
            contents: text,
        }),
    })
}

fn lifetime_point(config: &SweepConfig, point: &GridPoint) -> Result<PointOutput> {
    let params = point_params(config, point)?;
    let initial = initial_state(config.initial, point.length)?;
    let n_max = config.lifetime_cap();
    let (life, drift) = Evolver::new(params)?.scan_lifetime(&initial, n_max, config.threshold)?;
    let mut cells = echo(point);
    cells.extend([
        n_max.to_string(),
        life.value().to_string(),
        life.is_censored().to_string(),
        fmt_f64(drift),
    ]);
    Ok(PointOutput {
        cells,
        side_file: None,
    })
}

fn phase_point(config: &SweepConfig, point: &GridPoint) -> Result<PointOutput> {
    let params = point_params(config, point)?;
    let initial = initial_state(config.initial, point.length)?;
    let periods = 2 * config.window;
    let series = Evolver::new(params)?.evolve(&initial, periods, ObservableSelection::default())?;
    let avg = average_return(&series.even_return_probabilities(), config.window)?;
    let mut cells = echo(point);
    cells.extend([
        config.window.to_string(),
        fmt_f64(avg),
        fmt_f64(series.norm_drift()),
    ]);
    Ok(PointOutput {
        cells,
        side_file: None,
    })
}

fn spectrum_point(config: &SweepConfig, point: &GridPoint) -> Result<PointOutput> {
    let params = point_params(config, point)?;
    let u = build_dense_propagator(&params)?;
    let residual = time_reflection_residual(&u);
    let spec = quasi_energies(&u, config.period, false)?;
    let gaps = gap_statistics(&spec)?;
    let counts = count_exact_pi_pairs(&spec, PAIR_TOL);

    let mut cells = echo(point);
    let side_file = config.dump_spectra.then(|| {
        let mut text = String::from("index,quasi_energy\n");
        for (i, e) in spec.energies().iter().enumerate() {
            let _ = writeln!(text, "{i},{}", fmt_f64(*e));
        }
        SideFile {
            relative_path: format!(
                "{}/point_{:05}.csv",
                side_dir(config, "spectra"),
                point.index
            ),
            contents: text,
        }
    });
    cells.extend([
        fmt_f64(gaps.delta0_mean),
        fmt_f64(gaps.delta_pi_mean),
        fmt_f64(gaps.ratio),
        counts.n_zero.to_string(),
        counts.n_pi.to_string(),
        fmt_f64(counts.reference),
        fmt_f64(residual),
        side_file
            .as_ref()
            .map_or_else(String::new, |f| f.relative_path.clone()),
    ]);
    Ok(PointOutput { cells, side_file })
}

fn fourier_point(config: &SweepConfig, point: &GridPoint) -> Result<PointOutput> {
    let params = point_params(config, point)?;
    let initial = initial_state(config.initial, point.length)?;
    let selection = ObservableSelection {
        sz: matches!(config.observable, Observable::Sz(_)),
    };
    let series = Evolver::new(params)?.evolve(&initial, config.n_periods, selection)?;
    let samples = match config.observable {
        Observable::ReturnProbability => series.return_probabilities(),
        Observable::Sz(site) => series
            .sz_series(site)
            .ok_or_else(|| Error::invalid(format!("no magnetization recorded for site {site}")))?,
    };
    let spec = fourier_spectrum(&samples, config.period)?;
    let peak = spec.dominant_nonzero_bin();
    let half = spec.half_drive_bin();

    let mut text = String::from("k,frequency_over_omega0,magnitude\n");
    for (k, (f, m)) in spec.frequencies.iter().zip(&spec.magnitudes).enumerate() {
        let _ = writeln!(text, "{k},{},{}", fmt_f64(*f), fmt_f64(*m));
    }
    let relative_path = format!(
        "{}/point_{:05}.csv",
        side_dir(config, "fourier"),
        point.index
    );

    let mut cells = echo(point);
    cells.extend([
        config.observable.to_string(),
        spec.n_samples.to_string(),
        peak.map_or_else(String::new, |k| k.to_string()),
        peak.map_or_else(String::new, |k| fmt_f64(spec.frequencies[k])),
        peak.map_or_else(String::new, |k| fmt_f64(spec.magnitudes[k])),
        half.map_or_else(String::new, |k| fmt_f64(spec.magnitudes[k])),
        fmt_f64(series.norm_drift()),
        relative_path.clone(),
    ]);
    Ok(PointOutput {
        cells,
        side_file: Some(SideFile {
            relative_path,
            contents: text,
        }),
    })
}

fn run_points<F>(config: &SweepConfig, f: F) -> Result<SweepResult>
where
    F: Fn(&SweepConfig, &GridPoint) -> Result<PointOutput> + Sync + Send,
{
    let started = Instant::now();
    let grid = config.grid();
    let cols = columns(config.mode);
    let width = cols.len();
    let work = |point: &GridPoint| match f(config, point) {
        Ok(out) => out,
        Err(e) => {
            let mut cells = echo(point);
            cells.resize(width - 1, String::new());
            cells.push(csv_escape(&e.to_string()));
            PointOutput {
                cells,
                side_file: None,
            }
        }
    };
    let outputs = run_on_workers(config.jobs, &grid, work)?;

    let mut rows = Vec::with_capacity(outputs.len());
    let mut side_files = Vec::new();
    for mut out in outputs {
        if out.cells.len() < width {
            out.cells.push(String::new()); // empty error column
        }
        debug_assert_eq!(out.cells.len(), width);
        rows.push(out.cells);
        side_files.extend(out.side_file);
    }
    Ok(SweepResult {
        config: config.clone(),
        columns: cols,
        rows,
        side_files,
        provenance: Provenance {
            tool: "dtc",
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            elapsed_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

#[cfg(feature = "parallel")]
fn run_on_workers<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return Ok(map_ordered(Execution::Sequential, items, f));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| map_ordered(Execution::Parallel, items, f)))
}

#[cfg(not(feature = "parallel"))]
fn run_on_workers<T, R, F>(_jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    Ok(map_ordered(Execution::Sequential, items, f))
}

/// Full `P(nT)` series per grid point, summarized by lifetime and average.
pub fn run_evolve(config: &SweepConfig) -> Result<SweepResult> {
    expect_mode(config, Mode::Evolve)?;
    run_points(config, evolve_point)
}

/// `n*` per grid point, evolving only until the first crossing.
pub fn run_lifetime_scan(config: &SweepConfig) -> Result<SweepResult> {
    expect_mode(config, Mode::LifetimeScan)?;
    run_points(config, lifetime_point)
}

/// Average of `P(2nT)` over the window for every `(L, JT, ε)`.
pub fn run_phase_diagram(config: &SweepConfig) -> Result<SweepResult> {
    expect_mode(config, Mode::PhaseDiagram)?;
    run_points(config, phase_point)
}

/// Gap statistics, exact pair counts and the time-reflection residual.
pub fn run_spectrum_report(config: &SweepConfig) -> Result<SweepResult> {
    expect_mode(config, Mode::Spectrum)?;
    run_points(config, spectrum_point)
}

/// DFT of `P(nT)` or `⟨σᶻᵢ⟩(nT)` per grid point.
pub fn run_fourier(config: &SweepConfig) -> Result<SweepResult> {
    expect_mode(config, Mode::Fourier)?;
    run_points(config, fourier_point)
}

/// Dispatches on `config.mode`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    match config.mode {
        Mode::Evolve => run_evolve(config),
        Mode::LifetimeScan => run_lifetime_scan(config),
        Mode::PhaseDiagram => run_phase_diagram(config),
        Mode::Spectrum => run_spectrum_report(config),
        Mode::Fourier => run_fourier(config),
    }
}

fn expect_mode(config: &SweepConfig, mode: Mode) -> Result<()> {
    if config.mode != mode {
        return Err(Error::invalid(format!(
            "configuration is for mode {}, not {mode}",
            config.mode
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mode: &str, extra: &[(&str, &str)]) -> SweepConfig {
        let mut raw = RawConfig::default();
        raw.set("mode", mode);
        raw.set("length", "4");
        raw.set("jt-over-pi", "1");
        raw.set("epsilon-over-pi", "0.1");
        raw.set("jobs", "2");
        for (k, v) in extra {
            raw.set(k, *v);
        }
        parse_config(None, raw).unwrap()
    }

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.1,
            1.0 / 3.0,
            1e-300,
            12345.678e10,
            -0.0,
            2.0f64.sqrt(),
            2.5e-15,
            7e22,
            1e-5,
        ] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(2.5e-15), "2.5e-15");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1.0), "1");
    }

    #[test]
    fn perfect_pulses_alternate() {
        let cfg = config(
            "evolve",
            &[
                ("epsilon-over-pi", "0"),
                ("periods", "100"),
                ("jt-over-pi", "0,0.5,1"),
            ],
        );
        let result = run_evolve(&cfg).unwrap();
        assert_eq!(result.rows.len(), 3);
        assert_eq!(result.side_files.len(), 3);
        for side in &result.side_files {
            for line in side.contents.lines().skip(1) {
                let cells: Vec<&str> = line.split(',').collect();
                let n: usize = cells[0].parse().unwrap();
                let p: f64 = cells[2].parse().unwrap();
                let want = if n.is_multiple_of(2) { 1.0 } else { 0.0 };
                assert!((p - want).abs() < 1e-12);
            }
        }
        assert!(result
            .column("censored")
            .unwrap()
            .iter()
            .all(|c| *c == "true"));
        assert!(result.column("average_return").unwrap().iter().all(|c| (c
            .parse::<f64>()
            .unwrap()
            - 1.0)
            .abs()
            < 1e-12));
    }

    #[test]
    fn series_file_has_sz_columns() {
        let cfg = config("evolve", &[("periods", "4"), ("sz", "true")]);
        let result = run_evolve(&cfg).unwrap();
        let first = result.side_files[0].contents.lines().next().unwrap();
        assert_eq!(first, "n,t,P,sz_0,sz_1,sz_2,sz_3");
        assert_eq!(result.side_files[0].contents.lines().count(), 5);
    }

    #[test]
    fn wrong_mode_rejected() {
        let cfg = config("evolve", &[]);
        assert!(run_spectrum_report(&cfg).is_err());
    }

    #[test]
    fn spectrum_rows() {
        let cfg = config("spectrum", &[("dump-spectra", "true")]);
        let result = run_spectrum_report(&cfg).unwrap();
        let n_zero: usize = result.column("n_zero").unwrap()[0].parse().unwrap();
        let n_pi: usize = result.column("n_pi").unwrap()[0].parse().unwrap();
        let residual: f64 = result.column("reflection_residual").unwrap()[0]
            .parse()
            .unwrap();
        assert!(n_zero >= 4 && n_pi >= 4);
        assert!(residual < 1e-12);
        assert_eq!(result.side_files[0].contents.lines().count(), 17);
        assert_eq!(result.column("error").unwrap(), vec![""]);
    }

    #[test]
    fn header_is_json() {
        let cfg = config("lifetime-scan", &[("periods", "200")]);
        let result = run_lifetime_scan(&cfg).unwrap();
        let csv = result.to_csv();
        let first = csv.lines().next().unwrap();
        let value: serde_json::Value =
            serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
        assert_eq!(value["config"]["mode"], "lifetime-scan");
        assert_eq!(value["config"]["n_periods"], 200);
        assert_eq!(value["provenance"]["tool"], "dtc");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn failing_point_keeps_its_row() {
        let cfg = config("fourier", &[("periods", "8")]);
        let fails = |_: &SweepConfig, _: &GridPoint| -> Result<PointOutput> {
            Err(Error::invalid("boom, with a comma"))
        };
        let result = run_points(&cfg, fails).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.rows[0].len(), result.columns.len());
        assert_eq!(result.column("L").unwrap(), vec!["4"]);
        assert!(result.column("error").unwrap()[0].contains("boom"));
    }
}
