//! `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use covarloop::protocols::{Grid, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Transient,
    CoolingWeak,
    CoolingStrong,
    CoolingActive,
    Delay,
    Entangle,
    TmsStabilize,
    Squeeze,
    Transfer,
    Verify,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Steady,
        Command::Transient,
        Command::CoolingWeak,
        Command::CoolingStrong,
        Command::CoolingActive,
        Command::Delay,
        Command::Entangle,
        Command::TmsStabilize,
        Command::Squeeze,
        Command::Transfer,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Transient => "transient",
            Command::CoolingWeak => "cooling-weak",
            Command::CoolingStrong => "cooling-strong",
            Command::CoolingActive => "cooling-active",
            Command::Delay => "delay",
            Command::Entangle => "entangle",
            Command::TmsStabilize => "tms-stabilize",
            Command::Squeeze => "squeeze",
            Command::Transfer => "transfer",
            Command::Verify => "verify",
        }
    }

    /// Keys that must be present, each given as alternatives.
    fn required(self) -> Vec<&'static [&'static str]> {
        // Gamma_m and N_m are looked up when a driver builds its model
        const PHYSICAL: [&[&str]; 2] = [&["kappa"], &["G"]];
        let mut req: Vec<&'static [&'static str]> = match self {
            Command::Verify => return Vec::new(),
            _ => PHYSICAL.to_vec(),
        };
        match self {
            Command::Transient => req.push(&["t_final"]),
            Command::CoolingStrong => req[1] = &["grid.G"],
            Command::Delay => req.push(&["tau", "grid.tau"]),
            Command::Squeeze => req.push(&["z"]),
            Command::Transfer => {
                req.push(&["z"]);
                req.push(&["kappa_eff", "grid.kappa_eff"]);
            }
            _ => {}
        }
        req
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::usage(format!("unknown command `{s}`")))
    }
}

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub origin: Option<Origin>,
    pub message: String,
}

impl ConfigError {
    pub fn usage(message: impl Into<String>) -> Self {
        ConfigError { key: None, origin: None, message: message.into() }
    }

    pub fn at(key: &str, origin: Option<Origin>, message: impl Into<String>) -> Self {
        ConfigError { key: Some(key.to_string()), origin, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k} {}", self.message)?,
            None => f.write_str(&self.message)?,
        }
        if let Some(o) = self.origin {
            write!(f, " ({o})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Positive,
    NonNegative,
    Finite,
    Count,
    Word(&'static [&'static str]),
}

const KEYS: &[(&str, Kind)] = &[
    ("regime", Kind::Word(&["red", "blue", "full"])),
    ("omega_m", Kind::Positive),
    ("delta", Kind::Finite),
    ("G", Kind::NonNegative),
    ("kappa", Kind::Positive),
    ("Gamma_m", Kind::Positive),
    ("N_l", Kind::Finite),
    ("N_m", Kind::Finite),
    ("N_convention", Kind::Word(&["covariance", "occupancy"])),
    ("loop", Kind::Word(&["none", "open", "passive", "squeeze", "tms", "tms-flipped"])),
    ("a", Kind::Finite),
    ("b", Kind::Finite),
    ("kappa_eff", Kind::Positive),
    ("eta", Kind::Finite),
    ("z", Kind::Positive),
    ("r", Kind::NonNegative),
    ("theta", Kind::Finite),
    ("tau", Kind::NonNegative),
    ("t_final", Kind::Positive),
    ("dt", Kind::Positive),
    ("level", Kind::Positive),
    ("baseline", Kind::Word(&["single", "two"])),
    ("margin", Kind::Positive),
    ("cap", Kind::Positive),
    ("points", Kind::Count),
    ("rel_tol", Kind::Positive),
    ("rounds", Kind::Count),
    ("theta_samples", Kind::Count),
    ("periods", Kind::Positive),
    ("steps_per_period", Kind::Count),
    ("criterion", Kind::Count),
];

/// Axes accepted as `grid.<axis>`.
pub const GRID_AXES: [&str; 5] = ["kappa_eff", "G", "eta", "z", "tau"];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Count(usize),
    Word(String),
    Grid(Grid),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    raw: String,
    value: Value,
    origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    entries: BTreeMap<String, Entry>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn parse_value(key: &str, raw: &str, origin: Origin) -> Result<Value, ConfigError> {
    let err = |m: String| ConfigError::at(key, Some(origin), m);
    if let Some(axis) = key.strip_prefix("grid.") {
        if !GRID_AXES.contains(&axis) {
            return Err(ConfigError::at(key, Some(origin), format!("is not a known grid axis (expected one of {})", GRID_AXES.join(", "))));
        }
        return parse_grid(raw).map(Value::Grid).map_err(err);
    }
    let kind = KEYS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|&(_, k)| k)
        .ok_or_else(|| ConfigError::at(key, Some(origin), "is not a known key"))?;
    let real = || raw.parse::<f64>().map_err(|_| err(format!("has unparsable value `{raw}`")));
    match kind {
        Kind::Positive => {
            let v = real()?;
            if v > 0.0 && v.is_finite() {
                Ok(Value::Real(v))
            } else {
                Err(err("must be positive".into()))
            }
        }
        Kind::NonNegative => {
            let v = real()?;
            if v >= 0.0 && v.is_finite() {
                Ok(Value::Real(v))
            } else {
                Err(err("must be non-negative".into()))
            }
        }
        Kind::Finite => {
            let v = real()?;
            if v.is_finite() {
                Ok(Value::Real(v))
            } else {
                Err(err("must be finite".into()))
            }
        }
        Kind::Count => match raw.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Value::Count(n)),
            Ok(_) => Err(err("must be positive".into())),
            Err(_) => Err(err(format!("has unparsable value `{raw}` (expected a positive integer)"))),
        },
        Kind::Word(options) => {
            if options.contains(&raw) {
                Ok(Value::Word(raw.to_string()))
            } else {
                Err(err(format!("has unknown value `{raw}` (expected one of {})", options.join(", "))))
            }
        }
    }
}

/// `min,max,points[,linear|log]`.
fn parse_grid(raw: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("has malformed grid `{raw}` (expected min,max,points[,linear|log])"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("has unparsable grid bound `{s}`"));
    let (min, max) = (num(parts[0])?, num(parts[1])?);
    let points = parts[2].parse::<usize>().map_err(|_| format!("has unparsable grid size `{}`", parts[2]))?;
    let scale = match parts.get(3).copied().unwrap_or("linear") {
        "linear" => Scale::Linear,
        "log" => Scale::Log,
        s => return Err(format!("has unknown grid scale `{s}` (expected linear or log)")),
    };
    Grid { min, max, points, scale }.validated().map_err(|e| format!("has an invalid grid: {e}"))
}

fn insert(entries: &mut BTreeMap<String, Entry>, key: &str, raw: &str, origin: Origin) -> Result<(), ConfigError> {
    let value = parse_value(key, raw, origin)?;
    if let Some(prev) = entries.get(key) {
        // flags may replace file values but neither source may repeat a key
        if matches!((prev.origin, origin), (Origin::Line(_), Origin::Line(_)) | (Origin::Flag, Origin::Flag)) {
            return Err(ConfigError::at(key, Some(origin), format!("is given twice (first at {})", prev.origin)));
        }
    }
    entries.insert(key.to_string(), Entry { raw: raw.to_string(), value, origin });
    Ok(())
}

fn parse_lines(text: &str, entries: &mut BTreeMap<String, Entry>) -> Result<(), ConfigError> {
    for (i, line) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| ConfigError { key: None, origin: Some(origin), message: format!("expected `key = value`, found `{content}`") })?;
        let (key, raw) = (key.trim(), raw.trim());
        if key.is_empty() {
            return Err(ConfigError { key: None, origin: Some(origin), message: "missing key before `=`".into() });
        }
        if raw.is_empty() {
            return Err(ConfigError::at(key, Some(origin), "has no value"));
        }
        insert(entries, key, raw, origin)?;
    }
    Ok(())
}

impl RunConfig {
    #[cfg(test)]
    /// Config file text for `command`, with no overrides.
    pub fn parse(command: Command, text: &str) -> Result<Self, ConfigError> {
        Self::build(command, text, &[])
    }

    /// File settings first, then `overrides`, which replace file values.
    pub fn build(command: Command, text: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        parse_lines(text, &mut entries)?;
        for (k, v) in overrides {
            insert(&mut entries, k, v, Origin::Flag)?;
        }
        let cfg = RunConfig { command, entries, out: None, jobs: None };
        for alternatives in command.required() {
            if !alternatives.iter().any(|k| cfg.entries.contains_key(*k)) {
                let names: Vec<String> = alternatives.iter().map(|k| format!("`{k}`")).collect();
                return Err(ConfigError::usage(format!(
                    "missing required key {} for command {}",
                    names.join(" or "),
                    command.name()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn origin(&self, key: &str) -> Option<Origin> {
        self.entries.get(key).map(|e| e.origin)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        match self.entries.get(key).map(|e| &e.value) {
            Some(Value::Real(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn real_or(&self, key: &str, default: f64) -> f64 {
        self.real(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<f64, ConfigError> {
        self.real(key).ok_or_else(|| ConfigError::usage(format!("missing required key `{key}` for command {}", self.command.name())))
    }

    pub fn count_or(&self, key: &str, default: usize) -> usize {
        match self.entries.get(key).map(|e| &e.value) {
            Some(Value::Count(n)) => *n,
            _ => default,
        }
    }

    pub fn count(&self, key: &str) -> Option<usize> {
        match self.entries.get(key).map(|e| &e.value) {
            Some(Value::Count(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn word(&self, key: &str) -> Option<&str> {
        match self.entries.get(key).map(|e| &e.value) {
            Some(Value::Word(w)) => Some(w.as_str()),
            _ => None,
        }
    }

    pub fn grid(&self, axis: &str) -> Option<Grid> {
        match self.entries.get(&format!("grid.{axis}")).map(|e| &e.value) {
            Some(Value::Grid(g)) => Some(*g),
            _ => None,
        }
    }

    /// `key=value` pairs in key order, as given.
    pub fn describe(&self) -> String {
        self.entries.iter().map(|(k, e)| format!("{k}={}", e.raw)).collect::<Vec<_>>().join(" ")
    }
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub overrides: Vec<(String, String)>,
}

pub const USAGE: &str = "usage: covarloop <command> [--key value]... [--config FILE] [--out FILE.csv] [--jobs N]\n\
commands: steady, transient, cooling-weak, cooling-strong, cooling-active, delay, entangle, tms-stabilize, squeeze, transfer, verify";

/// `Ok(None)` means help was requested.
pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> Result<Option<Invocation>, ConfigError> {
    let mut it = args.into_iter();
    let mut command = None;
    let (mut config, mut out, mut jobs) = (None, None, None);
    let mut overrides = Vec::new();
    while let Some(arg) = it.next() {
        if arg == "-h" || arg == "--help" {
            return Ok(None);
        }
        let Some(flag) = arg.strip_prefix("--") else {
            if command.is_some() {
                return Err(ConfigError::usage(format!("unexpected argument `{arg}`")));
            }
            command = Some(arg.parse::<Command>()?);
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::at(&format!("--{flag}"), None, "needs a value"))?;
                (flag.to_string(), v)
            }
        };
        match key.as_str() {
            "config" => config = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            "jobs" => match value.parse::<usize>() {
                Ok(n) if n > 0 => jobs = Some(n),
                _ => return Err(ConfigError::at("jobs", Some(Origin::Flag), "must be a positive integer")),
            },
            _ => overrides.push((key, value)),
        }
    }
    let command = command.ok_or_else(|| ConfigError::usage("missing command"))?;
    Ok(Some(Invocation { command, config, out, jobs, overrides }))
}

impl Invocation {
    pub fn load(&self) -> Result<RunConfig, ConfigError> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| ConfigError::usage(format!("cannot read config file {}: {e}", path.display())))?,
            None => String::new(),
        };
        let mut cfg = RunConfig::build(self.command, &text, &self.overrides)?;
        cfg.out = self.out.clone();
        cfg.jobs = self.jobs;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_weak_cooling_config() {
        let c = RunConfig::parse(Command::CoolingWeak, "kappa = 0.1\nG = 1e-3").unwrap();
        assert_eq!(c.real("kappa"), Some(0.1));
        assert_eq!(c.real("G"), Some(1e-3));
    }

    #[test]
    fn negative_rate_rejected() {
        let err = RunConfig::parse(Command::Steady, "kappa = -1").unwrap_err();
        assert!(err.to_string().contains("kappa must be positive"), "{err}");
        assert_eq!(err.origin, Some(Origin::Line(1)));
    }

    #[test]
    fn flag_overrides_file() {
        let ov = vec![("kappa".to_string(), "0.05".to_string())];
        let c = RunConfig::build(Command::CoolingWeak, "kappa = 0.1\nG = 1e-3\nGamma_m = 1e-5\nN_m = 200", &ov).unwrap();
        assert_eq!(c.real("kappa"), Some(0.05));
        assert_eq!(c.origin("kappa"), Some(Origin::Flag));
    }

    #[test]
    fn duplicates_and_unknowns_name_key_and_line() {
        let err = RunConfig::parse(Command::Verify, "kappa = 0.1\n# note\nkappa = 0.2").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("kappa"));
        assert_eq!(err.origin, Some(Origin::Line(3)));
        let err = RunConfig::parse(Command::Verify, "\nkapa = 0.1").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("kapa"));
        assert_eq!(err.origin, Some(Origin::Line(2)));
        let err = RunConfig::parse(Command::Verify, "G = fast").unwrap_err();
        assert!(err.to_string().contains("unparsable"));
    }

    #[test]
    fn missing_required_key() {
        let err = RunConfig::parse(Command::Delay, "kappa = 0.1\nG = 1e-3").unwrap_err();
        assert!(err.to_string().contains("`tau` or `grid.tau`"), "{err}");
    }

    #[test]
    fn grids() {
        let c = RunConfig::parse(Command::Verify, "grid.kappa_eff = 0.01, 0.2, 5, log\ngrid.eta = 0,1,3").unwrap();
        let g = c.grid("kappa_eff").unwrap();
        assert_eq!((g.points, g.scale), (5, Scale::Log));
        assert_eq!(c.grid("eta").unwrap().values(), vec![0.0, 0.5, 1.0]);
        assert!(RunConfig::parse(Command::Verify, "grid.kappa_eff = 0,1,5,log").is_err());
        assert!(RunConfig::parse(Command::Verify, "grid.phase = 0,1,5").is_err());
    }

    #[test]
    fn argv() {
        let args = ["delay", "--tau", "1", "--out=x.csv", "--jobs", "2", "--grid.tau", "0,1,3"].map(String::from);
        let inv = parse_args(args).unwrap().unwrap();
        assert_eq!(inv.command, Command::Delay);
        assert_eq!(inv.out, Some(PathBuf::from("x.csv")));
        assert_eq!(inv.jobs, Some(2));
        assert_eq!(inv.overrides, vec![("tau".into(), "1".into()), ("grid.tau".into(), "0,1,3".into())]);
        assert!(parse_args(["bogus".to_string()]).is_err());
        assert!(parse_args(["steady".to_string(), "--kappa".to_string()]).is_err());
    }
}
