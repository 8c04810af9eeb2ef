//! Command-line and config-file parsing.
//!
//! A config file is flat `key=value` text whose keys are the long flag
//! names without dashes (`delta-eps=0.001`, `sweep=epsilon 0 0.8 400`,
//! `analysis.delay=auto`). Flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use kicked_kerr::analysis::decay::DecayRegime;
use kicked_kerr::analysis::lyapunov::LyapunovConfig;
use kicked_kerr::analysis::spectrum::{EntropyOptions, LogBase};
use kicked_kerr::classical::WindowCriteria;
use kicked_kerr::{KerrConvention, KickBasis, SystemParams};

use crate::error::{usage, CliError};

const VALUE_KEYS: &[&str] = &[
    "mode",
    "epsilon",
    "delta-eps",
    "chi",
    "period",
    "dim",
    "buffer",
    "kicks",
    "stride",
    "workers",
    "out",
    "format",
    "figure",
    "kerr",
    "kick-basis",
    "leak-tol",
];

pub const USAGE: &str = "\
kicked-kerr --mode <trajectory|bifurcation|entropy_sweep|lyapunov|decay_fit|spectrum> [options]
kicked-kerr --figure <id> --out <dir>

system:    --epsilon --delta-eps --chi --period --dim --buffer --kicks
           --kerr <half|full> --kick-basis <closed|embedded> --leak-tol
sampling:  --stride <n>  --sweep <epsilon|delta-eps|chi|period> <start> <stop> <steps>
output:    --out <dir> (default ./out)  --format <csv|json>  --workers <n>
analysis:  --analysis.<key> <value>
other:     --config <file>  --help  --version

exit codes: 0 ok, 2 usage, 3 numerical, 4 i/o";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Trajectory,
    Bifurcation,
    EntropySweep,
    Lyapunov,
    DecayFit,
    Spectrum,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Trajectory,
        Mode::Bifurcation,
        Mode::EntropySweep,
        Mode::Lyapunov,
        Mode::DecayFit,
        Mode::Spectrum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Trajectory => "trajectory",
            Mode::Bifurcation => "bifurcation",
            Mode::EntropySweep => "entropy_sweep",
            Mode::Lyapunov => "lyapunov",
            Mode::DecayFit => "decay_fit",
            Mode::Spectrum => "spectrum",
        }
    }
}

impl FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| usage(format!("unknown mode '{s}'")))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    DeltaEpsilon,
    Chi,
    Period,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::DeltaEpsilon => "delta_eps",
            SweepParam::Chi => "chi",
            SweepParam::Period => "period",
        }
    }

    pub fn apply(self, p: &SystemParams, value: f64) -> SystemParams {
        let mut p = p.clone();
        match self {
            SweepParam::Epsilon => p.epsilon = value,
            SweepParam::DeltaEpsilon => p.delta_epsilon = value,
            SweepParam::Chi => p.chi = value,
            SweepParam::Period => p.period = value,
        }
        p
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            SweepParam::Epsilon => p.epsilon,
            SweepParam::DeltaEpsilon => p.delta_epsilon,
            SweepParam::Chi => p.chi,
            SweepParam::Period => p.period,
        }
    }
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "epsilon" | "eps" => Ok(SweepParam::Epsilon),
            "delta-eps" | "delta_eps" => Ok(SweepParam::DeltaEpsilon),
            "chi" => Ok(SweepParam::Chi),
            "period" | "T" => Ok(SweepParam::Period),
            _ => Err(usage(format!(
                "cannot sweep '{s}' (epsilon, delta-eps, chi, period)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        kicked_kerr::classical::linspace(self.start, self.stop, self.steps)
    }
}

/// Which recorded observable an analysis runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Fidelity,
    FidelityN,
    MeanPhotons,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Fidelity => "F",
            SeriesKind::FidelityN => "F_N",
            SeriesKind::MeanPhotons => "mean_n",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub series: SeriesKind,
    /// Kicks dropped before a Lyapunov estimate; `None` drops the first tenth.
    pub skip: Option<usize>,
    pub lyapunov: LyapunovConfig,
    pub class_tol: f64,
    pub regime: DecayRegime,
    /// Explicit decay-fit window in kicks (inclusive); auto-selected if unset.
    pub window_start: Option<usize>,
    pub window_end: Option<usize>,
    /// Spectral window in kicks (inclusive).
    pub t_min: Option<usize>,
    pub t_max: Option<usize>,
    pub entropy: EntropyOptions,
    pub transient: usize,
    pub samples: usize,
    pub windows: WindowCriteria,
    pub peak_min_relative: f64,
    pub peak_min_separation: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            series: SeriesKind::Fidelity,
            skip: None,
            lyapunov: LyapunovConfig::default(),
            class_tol: 0.001,
            regime: DecayRegime::Gaussian,
            window_start: None,
            window_end: None,
            t_min: None,
            t_max: None,
            entropy: EntropyOptions::default(),
            transient: 2000,
            samples: 500,
            windows: WindowCriteria::default(),
            peak_min_relative: 0.1,
            peak_min_separation: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub system: SystemParams,
    pub stride: usize,
    pub leak_tolerance: f64,
    pub sweep: Option<Sweep>,
    pub analysis: AnalysisSettings,
    pub out: PathBuf,
    pub format: Format,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run(Box<RunConfig>),
    Figure { id: String, out: PathBuf },
    Help,
    Version,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| usage(format!("invalid value '{v}' for {key}")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = parse(key, v)?;
    if !x.is_finite() {
        return Err(usage(format!("{key} must be finite, got '{v}'")));
    }
    Ok(x)
}

fn parse_opt_usize(key: &str, v: &str) -> Result<Option<usize>, CliError> {
    match v.trim() {
        "auto" | "none" => Ok(None),
        s => parse(key, s).map(Some),
    }
}

fn parse_sweep(v: &str) -> Result<Sweep, CliError> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let [name, start, stop, steps] = parts[..] else {
        return Err(usage("--sweep takes <name> <start> <stop> <steps>"));
    };
    let sweep = Sweep {
        param: name.parse()?,
        start: parse_f64("sweep start", start)?,
        stop: parse_f64("sweep stop", stop)?,
        steps: parse("sweep steps", steps)?,
    };
    if sweep.steps == 0 {
        return Err(usage("sweep steps must be >= 1"));
    }
    Ok(sweep)
}

/// Raw `key -> value` settings after merging file and flags.
#[derive(Debug, Default, Clone)]
struct Settings {
    values: BTreeMap<String, String>,
    flag_mode: bool,
}

impl Settings {
    fn set(&mut self, key: &str, value: String) -> Result<(), CliError> {
        if !(VALUE_KEYS.contains(&key)
            || key == "sweep"
            || key == "config"
            || key.starts_with("analysis."))
        {
            return Err(usage(format!("unknown option '{key}'")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn read_config_file(path: &str) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config '{path}': {e}")))?;
    let mut s = Settings::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{path}:{}: expected key=value", n + 1)))?;
        let k = k.trim();
        if k == "config" {
            return Err(usage(format!(
                "{path}:{}: nested config files are not supported",
                n + 1
            )));
        }
        s.set(k, v.trim().to_string())
            .map_err(|e| usage(format!("{path}:{}: {e}", n + 1)))?;
    }
    Ok(s)
}

fn parse_flags(args: &[String]) -> Result<(Settings, bool, bool), CliError> {
    let mut s = Settings::default();
    let (mut help, mut version) = (false, false);
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let Some(name) = arg.strip_prefix("--") else {
            return Err(usage(format!("unexpected argument '{arg}'")));
        };
        let (key, inline) = match name.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (name, None),
        };
        match key {
            "help" => help = true,
            "version" => version = true,
            "sweep" => {
                let value = match inline {
                    Some(v) => v,
                    None => {
                        let rest = args
                            .get(i + 1..i + 5)
                            .ok_or_else(|| usage("--sweep takes 4 values"))?;
                        i += 4;
                        rest.join(" ")
                    }
                };
                s.set("sweep", value)?;
            }
            _ => {
                let value = match inline {
                    Some(v) => v,
                    None => {
                        i += 1;
                        args.get(i)
                            .cloned()
                            .ok_or_else(|| usage(format!("--{key} needs a value")))?
                    }
                };
                if key == "mode" {
                    if let Some(prev) = s.get("mode") {
                        if prev != value {
                            return Err(usage(format!("conflicting modes '{prev}' and '{value}'")));
                        }
                    }
                    s.flag_mode = true;
                }
                s.set(key, value)?;
            }
        }
        i += 1;
    }
    Ok((s, help, version))
}

/// Parses command-line arguments (without the program name).
pub fn parse_command(args: &[String]) -> Result<Command, CliError> {
    let (flags, help, version) = parse_flags(args)?;
    if help {
        return Ok(Command::Help);
    }
    if version {
        return Ok(Command::Version);
    }
    let mut merged = match flags.get("config") {
        Some(path) => read_config_file(path)?,
        None => Settings::default(),
    };
    merged.flag_mode = flags.flag_mode;
    for (k, v) in flags.values {
        if k != "config" {
            merged.values.insert(k, v);
        }
    }
    build(&merged)
}

fn build(s: &Settings) -> Result<Command, CliError> {
    let out = PathBuf::from(s.get("out").unwrap_or("out"));
    match (s.get("mode"), s.get("figure")) {
        (Some(_), Some(_)) => return Err(usage("--mode and --figure are mutually exclusive")),
        (None, Some(id)) => {
            return Ok(Command::Figure {
                id: id.to_string(),
                out,
            })
        }
        (None, None) => return Err(usage("no --mode given")),
        (Some(_), None) => {}
    }
    let mode: Mode = s.get("mode").unwrap_or_default().parse()?;

    let mut system = SystemParams::default();
    if let Some(v) = s.get("epsilon") {
        system.epsilon = parse_f64("epsilon", v)?;
    }
    if let Some(v) = s.get("delta-eps") {
        system.delta_epsilon = parse_f64("delta-eps", v)?;
    }
    if let Some(v) = s.get("chi") {
        system.chi = parse_f64("chi", v)?;
    }
    if let Some(v) = s.get("period") {
        system.period = parse_f64("period", v)?;
    }
    if let Some(v) = s.get("dim") {
        system.dim = parse("dim", v)?;
    }
    if let Some(v) = s.get("buffer") {
        system.buffer = parse("buffer", v)?;
    }
    if let Some(v) = s.get("kicks") {
        system.kicks = parse("kicks", v)?;
    }
    if let Some(v) = s.get("kerr") {
        system.kerr = v
            .parse::<KerrConvention>()
            .map_err(|e| usage(e.to_string()))?;
    }
    if let Some(v) = s.get("kick-basis") {
        system.kick_basis = v.parse::<KickBasis>().map_err(|e| usage(e.to_string()))?;
    }
    system.validate().map_err(|e| usage(e.to_string()))?;

    let stride = s.get("stride").map_or(Ok(1), |v| parse("stride", v))?;
    if stride == 0 {
        return Err(usage("stride must be >= 1"));
    }
    let leak_tolerance = s
        .get("leak-tol")
        .map_or(Ok(kicked_kerr::evolution::DEFAULT_LEAK_TOLERANCE), |v| {
            parse_f64("leak-tol", v)
        })?;
    if leak_tolerance < 0.0 {
        return Err(usage("leak-tol must be >= 0"));
    }
    let workers = s.get("workers").map_or(Ok(1), |v| parse("workers", v))?;
    if workers == 0 {
        return Err(usage("workers must be >= 1"));
    }
    let format = match s.get("format").unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(usage(format!("unknown format '{other}' (csv, json)"))),
    };
    let sweep = s.get("sweep").map(parse_sweep).transpose()?;

    let mut analysis = AnalysisSettings::default();
    for (k, v) in s
        .values
        .iter()
        .filter_map(|(k, v)| Some((k.strip_prefix("analysis.")?, v)))
    {
        set_analysis(&mut analysis, k, v)?;
    }

    Ok(Command::Run(Box::new(RunConfig {
        mode,
        system,
        stride,
        leak_tolerance,
        sweep,
        analysis,
        out,
        format,
        workers,
    })))
}

pub const ANALYSIS_KEYS: &[&str] = &[
    "series",
    "skip",
    "embedding_dim",
    "delay",
    "theiler",
    "radius",
    "radius_fraction",
    "fit_start",
    "fit_end",
    "max_references",
    "min_references",
    "class_tol",
    "regime",
    "window_start",
    "window_end",
    "t_min",
    "t_max",
    "log_base",
    "include_dc",
    "transient",
    "samples",
    "max_period",
    "escape_energy",
    "distinct_tol",
    "peak_min_relative",
    "peak_min_separation",
];

fn set_analysis(a: &mut AnalysisSettings, key: &str, v: &str) -> Result<(), CliError> {
    let k = &format!("analysis.{key}");
    match key {
        "series" => {
            a.series = match v {
                "F" | "fidelity" => SeriesKind::Fidelity,
                "F_N" | "fidelity_n" => SeriesKind::FidelityN,
                "mean_n" => SeriesKind::MeanPhotons,
                _ => return Err(usage(format!("{k}: expected F, F_N or mean_n"))),
            }
        }
        "skip" => a.skip = parse_opt_usize(k, v)?,
        "embedding_dim" => a.lyapunov.embedding_dim = parse(k, v)?,
        "delay" => a.lyapunov.delay = parse_opt_usize(k, v)?,
        "theiler" => a.lyapunov.theiler = parse(k, v)?,
        "radius" => {
            a.lyapunov.radius = match v {
                "auto" => None,
                _ => Some(parse_f64(k, v)?),
            }
        }
        "radius_fraction" => a.lyapunov.radius_fraction = parse_f64(k, v)?,
        "fit_start" => a.lyapunov.fit_range = parse(k, v)?..=*a.lyapunov.fit_range.end(),
        "fit_end" => a.lyapunov.fit_range = *a.lyapunov.fit_range.start()..=parse(k, v)?,
        "max_references" => a.lyapunov.max_references = parse(k, v)?,
        "min_references" => a.lyapunov.min_references = parse(k, v)?,
        "class_tol" => a.class_tol = parse_f64(k, v)?,
        "regime" => {
            a.regime = match v {
                "gaussian" => DecayRegime::Gaussian,
                "exponential" => DecayRegime::Exponential,
                _ => return Err(usage(format!("{k}: expected gaussian or exponential"))),
            }
        }
        "window_start" => a.window_start = parse_opt_usize(k, v)?,
        "window_end" => a.window_end = parse_opt_usize(k, v)?,
        "t_min" => a.t_min = parse_opt_usize(k, v)?,
        "t_max" => a.t_max = parse_opt_usize(k, v)?,
        "log_base" => {
            a.entropy.log_base = match v {
                "e" => LogBase::Natural,
                _ => {
                    let b = parse_f64(k, v)?;
                    if !(b > 0.0 && b != 1.0) {
                        return Err(usage(format!("{k}: invalid base {b}")));
                    }
                    LogBase::Base(b)
                }
            }
        }
        "include_dc" => a.entropy.include_dc = parse(k, v)?,
        "transient" => a.transient = parse(k, v)?,
        "samples" => a.samples = parse(k, v)?,
        "max_period" => a.windows.max_period = parse(k, v)?,
        "escape_energy" => a.windows.escape_energy = parse_f64(k, v)?,
        "distinct_tol" => a.windows.distinct_tol = parse_f64(k, v)?,
        "peak_min_relative" => a.peak_min_relative = parse_f64(k, v)?,
        "peak_min_separation" => a.peak_min_separation = parse(k, v)?,
        _ => {
            return Err(usage(format!(
                "unknown analysis key '{key}' (known: {})",
                ANALYSIS_KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), T::to_string)
}

impl RunConfig {
    /// Every setting that can influence output contents, in a fixed order.
    /// Worker count and output directory are deliberately left out.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let p = &self.system;
        let a = &self.analysis;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("mode", self.mode.as_str().into());
        put("chi", format!("{:?}", p.chi));
        put("period", format!("{:?}", p.period));
        put("epsilon", format!("{:?}", p.epsilon));
        put("delta-eps", format!("{:?}", p.delta_epsilon));
        put("dim", p.dim.to_string());
        put("buffer", p.buffer.to_string());
        put("kicks", p.kicks.to_string());
        put("kerr", p.kerr.as_str().into());
        put("kick-basis", p.kick_basis.as_str().into());
        put("stride", self.stride.to_string());
        put("leak-tol", format!("{:?}", self.leak_tolerance));
        put("format", self.format.extension().into());
        put(
            "sweep",
            self.sweep.as_ref().map_or("none".into(), |s| {
                format!(
                    "{} {:?} {:?} {}",
                    s.param.as_str(),
                    s.start,
                    s.stop,
                    s.steps
                )
            }),
        );
        put("analysis.series", a.series.as_str().into());
        put("analysis.skip", opt(&a.skip));
        put(
            "analysis.embedding_dim",
            a.lyapunov.embedding_dim.to_string(),
        );
        put("analysis.delay", opt(&a.lyapunov.delay));
        put("analysis.theiler", a.lyapunov.theiler.to_string());
        put(
            "analysis.radius",
            a.lyapunov
                .radius
                .map_or("auto".into(), |r| format!("{r:?}")),
        );
        put(
            "analysis.radius_fraction",
            format!("{:?}", a.lyapunov.radius_fraction),
        );
        put(
            "analysis.fit_start",
            a.lyapunov.fit_range.start().to_string(),
        );
        put("analysis.fit_end", a.lyapunov.fit_range.end().to_string());
        put(
            "analysis.max_references",
            a.lyapunov.max_references.to_string(),
        );
        put(
            "analysis.min_references",
            a.lyapunov.min_references.to_string(),
        );
        put("analysis.class_tol", format!("{:?}", a.class_tol));
        put("analysis.regime", a.regime.as_str().into());
        put("analysis.window_start", opt(&a.window_start));
        put("analysis.window_end", opt(&a.window_end));
        put("analysis.t_min", opt(&a.t_min));
        put("analysis.t_max", opt(&a.t_max));
        put("analysis.log_base", a.entropy.log_base.to_string());
        put("analysis.include_dc", a.entropy.include_dc.to_string());
        put("analysis.transient", a.transient.to_string());
        put("analysis.samples", a.samples.to_string());
        put("analysis.max_period", a.windows.max_period.to_string());
        put(
            "analysis.escape_energy",
            format!("{:?}", a.windows.escape_energy),
        );
        put(
            "analysis.distinct_tol",
            format!("{:?}", a.windows.distinct_tol),
        );
        put(
            "analysis.peak_min_relative",
            format!("{:?}", a.peak_min_relative),
        );
        put(
            "analysis.peak_min_separation",
            a.peak_min_separation.to_string(),
        );
        m
    }

    /// The system parameters of each run, with the sweep value if any.
    pub fn points(&self) -> Vec<(Option<f64>, SystemParams)> {
        match &self.sweep {
            None => vec![(None, self.system.clone())],
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| (Some(v), s.param.apply(&self.system, v)))
                .collect(),
        }
    }
}
