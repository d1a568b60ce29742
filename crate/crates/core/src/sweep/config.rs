//! Sweep configuration: layered parsing (JSON file, then flags) and
//! validation with every problem reported at once.
//!
//! Grid values are given as comma separated items, each a number or an
//! inclusive range `start:stop` or `start:stop:step`, e.g. `6:12` or
//! `0.75,0.85,0.95:1.05:0.05`. `JT` and `ε` are given in units of π.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::state::{DENSE_CAP, EVOLVE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Evolve,
    LifetimeScan,
    PhaseDiagram,
    Spectrum,
    Fourier,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::LifetimeScan => "lifetime-scan",
            Mode::PhaseDiagram => "phase-diagram",
            Mode::Spectrum => "spectrum",
            Mode::Fourier => "fourier",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "evolve" => Mode::Evolve,
            "lifetime-scan" | "lifetime_scan" => Mode::LifetimeScan,
            "phase-diagram" | "phase_diagram" => Mode::PhaseDiagram,
            "spectrum" => Mode::Spectrum,
            "fourier" => Mode::Fourier,
            _ => return None,
        })
    }

    fn default_periods(self) -> usize {
        match self {
            Mode::Evolve | Mode::PhaseDiagram => 2000,
            Mode::LifetimeScan => 200_000,
            Mode::Spectrum => 1,
            Mode::Fourier => 512,
        }
    }

    fn cap(self) -> (usize, &'static str) {
        match self {
            Mode::Spectrum => (DENSE_CAP, "dense propagator"),
            _ => (EVOLVE_CAP, "state-vector evolution"),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Initial state of every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Up,
    Down,
    /// All spins up except `site`, which points along +x.
    TiltedX(usize),
    /// All spins up except `site`, which points down.
    Flipped(usize),
}

impl InitialState {
    fn parse(s: &str) -> Option<Self> {
        let site = |rest: &str| rest.parse::<usize>().ok();
        match s {
            "up" => Some(InitialState::Up),
            "down" => Some(InitialState::Down),
            _ => {
                if let Some(rest) = s.strip_prefix("x:") {
                    site(rest).map(InitialState::TiltedX)
                } else if let Some(rest) = s.strip_prefix("flip:") {
                    site(rest).map(InitialState::Flipped)
                } else {
                    None
                }
            }
        }
    }

    fn site(self) -> Option<usize> {
        match self {
            InitialState::TiltedX(s) | InitialState::Flipped(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Up => f.write_str("up"),
            InitialState::Down => f.write_str("down"),
            InitialState::TiltedX(s) => write!(f, "x:{s}"),
            InitialState::Flipped(s) => write!(f, "flip:{s}"),
        }
    }
}

impl Serialize for InitialState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Sequence transformed by the `fourier` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    ReturnProbability,
    Sz(usize),
}

impl Observable {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "return" => Some(Observable::ReturnProbability),
            _ => s
                .strip_prefix("sz:")
                .and_then(|r| r.parse().ok())
                .map(Observable::Sz),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::ReturnProbability => f.write_str("return"),
            Observable::Sz(s) => write!(f, "sz:{s}"),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Validated sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub mode: Mode,
    pub lengths: Vec<usize>,
    pub jt_over_pi: Vec<f64>,
    pub epsilon_over_pi: Vec<f64>,
    /// Drive period `T`; only the quasi-energy scale depends on it.
    pub period: f64,
    /// Number of Floquet periods simulated per grid point. Lifetimes are
    /// searched over `n ≤ n_periods / 2`.
    pub n_periods: usize,
    pub threshold: f64,
    /// Number of `P(2nT)` samples averaged.
    pub window: usize,
    pub initial: InitialState,
    pub observable: Observable,
    pub record_sz: bool,
    pub dump_spectra: bool,
    pub output_path: PathBuf,
    #[serde(skip)]
    pub jobs: usize,
}

impl SweepConfig {
    /// Number of grid points, `|L| · |JT| · |ε|`.
    pub fn cardinality(&self) -> usize {
        self.lengths.len() * self.jt_over_pi.len() * self.epsilon_over_pi.len()
    }

    /// Grid points in output order: `L` outermost, then `JT`, then `ε`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::with_capacity(self.cardinality());
        for &length in &self.lengths {
            for &jt in &self.jt_over_pi {
                for &eps in &self.epsilon_over_pi {
                    points.push(GridPoint {
                        index: points.len(),
                        length,
                        jt_over_pi: jt,
                        epsilon_over_pi: eps,
                    });
                }
            }
        }
        points
    }

    /// Lifetime cap `n_max` in units of `P(2nT)` samples.
    pub fn lifetime_cap(&self) -> usize {
        self.n_periods / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub length: usize,
    pub jt_over_pi: f64,
    pub epsilon_over_pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Config,
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub kind: IssueKind,
    pub message: String,
}

/// Every problem found while parsing and validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigErrors {
    /// True when the only problems are capacity violations.
    pub fn is_capacity_only(&self) -> bool {
        !self.issues.is_empty() && self.issues.iter().all(|i| i.kind == IssueKind::Capacity)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            f.write_str(&issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A configuration value before interpretation.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Text(String),
    Json(Value),
}

/// Unvalidated key/value layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: Vec<(String, RawValue)>,
}

const KEYS: &[&str] = &[
    "mode",
    "length",
    "jt_over_pi",
    "epsilon_over_pi",
    "period",
    "periods",
    "threshold",
    "window",
    "out",
    "jobs",
    "initial",
    "observable",
    "sz",
    "dump_spectra",
];

fn normalize_key(key: &str) -> String {
    key.trim_start_matches('-').replace('-', "_")
}

impl RawConfig {
    /// Parses a flat JSON object whose keys mirror the command-line flags.
    pub fn from_json(text: &str) -> Result<Self, ConfigErrors> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| single(format!("config file: {e}")))?;
        let Value::Object(map) = value else {
            return Err(single("config file must hold a JSON object".into()));
        };
        Ok(Self::from_map(map))
    }

    fn from_map(map: Map<String, Value>) -> Self {
        RawConfig {
            entries: map
                .into_iter()
                .map(|(k, v)| (normalize_key(&k), RawValue::Json(v)))
                .collect(),
        }
    }

    /// Adds a flag value given as text; later values win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries
            .push((normalize_key(key), RawValue::Text(value.into())));
    }

    /// `self` overridden by every entry of `other`.
    pub fn overlay(mut self, other: RawConfig) -> Self {
        self.entries.extend(other.entries);
        self
    }

    fn get(&self, key: &str) -> Option<&RawValue> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }
}

fn single(message: String) -> ConfigErrors {
    ConfigErrors {
        issues: vec![ConfigIssue {
            kind: IssueKind::Config,
            message,
        }],
    }
}

/// Expands a grid spec such as `0.75,0.85,0.9:1.1:0.05` into its values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{s}' is not a number"))
        };
        match parts.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] | [a, b, _] => {
                let (start, stop) = (num(a)?, num(b)?);
                let step = if parts.len() == 3 {
                    num(parts[2])?
                } else {
                    1.0
                };
                if step.is_nan() || step <= 0.0 {
                    return Err(format!("range '{item}' needs a positive step"));
                }
                if stop < start {
                    return Err(format!("range '{item}' is decreasing"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > 1_000_000 {
                    return Err(format!("range '{item}' has too many points"));
                }
                out.extend((0..count).map(|i| start + i as f64 * step));
            }
            _ => return Err(format!("cannot parse grid item '{item}'")),
        }
    }
    Ok(out)
}

struct Collector {
    issues: Vec<ConfigIssue>,
}

impl Collector {
    fn config(&mut self, message: String) {
        self.issues.push(ConfigIssue {
            kind: IssueKind::Config,
            message,
        });
    }

    fn capacity(&mut self, message: String) {
        self.issues.push(ConfigIssue {
            kind: IssueKind::Capacity,
            message,
        });
    }

    fn text(&mut self, key: &str, raw: &RawValue) -> Option<String> {
        match raw {
            RawValue::Text(s) => Some(s.clone()),
            RawValue::Json(Value::String(s)) => Some(s.clone()),
            RawValue::Json(Value::Number(n)) => Some(n.to_string()),
            RawValue::Json(Value::Bool(b)) => Some(b.to_string()),
            RawValue::Json(other) => {
                self.config(format!("{key}: unexpected value {other}"));
                None
            }
        }
    }

    fn grid(&mut self, key: &str, raw: &RawValue) -> Option<Vec<f64>> {
        let values = match raw {
            RawValue::Json(Value::Array(items)) => {
                let mut v = Vec::new();
                for item in items {
                    match item.as_f64() {
                        Some(x) => v.push(x),
                        None => {
                            self.config(format!("{key}: '{item}' is not a number"));
                            return None;
                        }
                    }
                }
                v
            }
            RawValue::Json(Value::Number(n)) => vec![n.as_f64()?],
            other => {
                let text = self.text(key, other)?;
                match parse_grid(&text) {
                    Ok(v) => v,
                    Err(e) => {
                        self.config(format!("{key}: {e}"));
                        return None;
                    }
                }
            }
        };
        if values.is_empty() {
            self.config(format!("{key}: grid is empty"));
            return None;
        }
        Some(values)
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str, raw: &RawValue) -> Option<T> {
        let text = self.text(key, raw)?;
        match text.trim().parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.config(format!("{key}: '{text}' is not a valid number"));
                None
            }
        }
    }

    fn flag(&mut self, key: &str, raw: &RawValue) -> Option<bool> {
        let text = self.text(key, raw)?;
        match text.as_str() {
            "true" | "1" | "yes" => Some(true),
            "false" | "0" | "no" => Some(false),
            _ => {
                self.config(format!("{key}: '{text}' is not a boolean"));
                None
            }
        }
    }
}

/// Merges a config file layer (if any) with flag overrides and validates the
/// result.
pub fn parse_config(
    file: Option<RawConfig>,
    flags: RawConfig,
) -> Result<SweepConfig, ConfigErrors> {
    let raw = file.unwrap_or_default().overlay(flags);
    let mut c = Collector { issues: Vec::new() };

    for (key, _) in &raw.entries {
        if !KEYS.contains(&key.as_str()) {
            c.config(format!("unknown key '{key}'"));
        }
    }

    let mode = match raw.get("mode") {
        None => {
            c.config(
                "missing mode (one of evolve, lifetime-scan, phase-diagram, spectrum, fourier)"
                    .into(),
            );
            None
        }
        Some(v) => c.text("mode", v).and_then(|s| {
            let m = Mode::parse(&s);
            if m.is_none() {
                c.config(format!("mode: unknown mode '{s}'"));
            }
            m
        }),
    };

    let grid = |key: &str, c: &mut Collector| match raw.get(key) {
        Some(v) => c.grid(key, v),
        None => {
            c.config(format!("{key}: no grid values given"));
            None
        }
    };
    let lengths_raw = grid("length", &mut c);
    let jt = grid("jt_over_pi", &mut c);
    let eps = grid("epsilon_over_pi", &mut c);

    let lengths: Option<Vec<usize>> = lengths_raw.and_then(|v| {
        let mut ok = Vec::with_capacity(v.len());
        for x in v {
            if x.fract() != 0.0 || x < 2.0 {
                c.config(format!("length: {x} is not an integer >= 2"));
                return None;
            }
            ok.push(x as usize);
        }
        Some(ok)
    });

    let period = raw
        .get("period")
        .and_then(|v| c.number::<f64>("period", v))
        .unwrap_or(1.0);
    if !period.is_finite() || period <= 0.0 {
        c.config(format!("period: must be > 0, got {period}"));
    }
    let n_periods = raw
        .get("periods")
        .and_then(|v| c.number::<usize>("periods", v))
        .or(mode.map(Mode::default_periods))
        .unwrap_or(1);
    if n_periods < 1 {
        c.config("periods: must be at least 1".into());
    }
    let threshold = raw
        .get("threshold")
        .and_then(|v| c.number::<f64>("threshold", v))
        .unwrap_or(crate::observables::DEFAULT_THRESHOLD);
    if !(threshold > 0.0 && threshold < 1.0) {
        c.config(format!("threshold: must lie in (0, 1), got {threshold}"));
    }
    let explicit_window = raw
        .get("window")
        .and_then(|v| c.number::<usize>("window", v));
    let window = explicit_window
        .unwrap_or_else(|| crate::observables::DEFAULT_WINDOW.min((n_periods / 2).max(1)));
    if window < 1 {
        c.config("window: must be at least 1".into());
    }
    let jobs = raw
        .get("jobs")
        .and_then(|v| c.number::<usize>("jobs", v))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs < 1 {
        c.config("jobs: must be at least 1".into());
    }
    let initial = raw
        .get("initial")
        .and_then(|v| {
            let s = c.text("initial", v)?;
            let parsed = InitialState::parse(&s);
            if parsed.is_none() {
                c.config(format!(
                    "initial: '{s}' is not one of up, down, x:<site>, flip:<site>"
                ));
            }
            parsed
        })
        .unwrap_or(InitialState::Up);
    let observable = raw
        .get("observable")
        .and_then(|v| {
            let s = c.text("observable", v)?;
            let parsed = Observable::parse(&s);
            if parsed.is_none() {
                c.config(format!("observable: '{s}' is not one of return, sz:<site>"));
            }
            parsed
        })
        .unwrap_or(Observable::ReturnProbability);
    let record_sz = raw.get("sz").and_then(|v| c.flag("sz", v)).unwrap_or(false);
    let dump_spectra = raw
        .get("dump_spectra")
        .and_then(|v| c.flag("dump_spectra", v))
        .unwrap_or(false);

    if let (Some(mode), Some(lengths)) = (mode, lengths.as_ref()) {
        let (cap, what) = mode.cap();
        for &l in lengths {
            if l > cap {
                c.capacity(format!(
                    "length: L = {l} exceeds the {what} cap of {cap} sites for mode {mode}"
                ));
            }
            if let Some(site) = initial.site() {
                if site >= l {
                    c.config(format!("initial: site {site} out of range for L = {l}"));
                }
            }
            if let Observable::Sz(site) = observable {
                if mode == Mode::Fourier && site >= l {
                    c.config(format!("observable: site {site} out of range for L = {l}"));
                }
            }
        }
        let samples = n_periods / 2;
        if matches!(mode, Mode::Evolve | Mode::PhaseDiagram) && window > samples {
            c.config(format!(
                "window: {window} exceeds the {samples} P(2nT) samples of {n_periods} periods"
            ));
        }
        if matches!(mode, Mode::LifetimeScan) && samples < 1 {
            c.config("periods: a lifetime scan needs at least 2 periods".into());
        }
        if mode == Mode::Fourier && n_periods < 2 {
            c.config("periods: a Fourier spectrum needs at least 2 periods".into());
        }
    }

    let output_path = raw
        .get("out")
        .and_then(|v| c.text("out", v))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", mode.map_or("sweep", Mode::name))));

    if !c.issues.is_empty() {
        return Err(ConfigErrors { issues: c.issues });
    }
    Ok(SweepConfig {
        mode: mode.expect("validated"),
        lengths: lengths.expect("validated"),
        jt_over_pi: jt.expect("validated"),
        epsilon_over_pi: eps.expect("validated"),
        period,
        n_periods,
        threshold,
        window,
        initial,
        observable,
        record_sz,
        dump_spectra,
        output_path,
        jobs,
    })
}
