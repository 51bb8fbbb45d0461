//! Run configuration: a `key = value` file, overridden by command-line flags.

use std::fmt;
use std::path::PathBuf;

use iongate::hamiltonians::SystemConfig;
use iongate::metrics::{FidelityScheme, Grid, DEFAULT_LEVEL};
use iongate::modespectrum::DEFAULT_BUDGET;
use iongate::{Config, WaveType};

pub const UNITS: &str = "frequencies in units of nu_1, times in units of 1/nu_1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaPrime {
    /// `ν_bus / 2` for the lightshift scheme.
    Resonant,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Idealized,
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: FidelityScheme,
    pub eta: f64,
    pub omega_prime: OmegaPrime,
    /// `None` follows the scheme.
    pub wave_type: Option<WaveType>,
    pub n_ions: usize,
    pub modes: usize,
    pub fock_cutoff: usize,
    /// Integrator step; `None` propagates exactly.
    pub step: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub grid: Option<Grid>,
    pub level: f64,
    pub deterministic: bool,
    pub model: Model,
    pub simulate_rotations: bool,
    pub initial: String,
    pub t_final: Option<f64>,
    pub samples: usize,
    pub budget: f64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: FidelityScheme::Lightshift,
            eta: 0.1,
            omega_prime: OmegaPrime::Resonant,
            wave_type: None,
            n_ions: 2,
            modes: 2,
            fock_cutoff: 12,
            step: None,
            output: None,
            format: Format::Csv,
            grid: None,
            level: DEFAULT_LEVEL,
            deterministic: true,
            model: Model::Idealized,
            simulate_rotations: false,
            initial: "+0".into(),
            t_final: None,
            samples: 401,
            budget: DEFAULT_BUDGET,
            threads: None,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "scheme",
    "eta",
    "omega_prime",
    "wave_type",
    "n_ions",
    "modes",
    "fock_cutoff",
    "step",
    "output",
    "format",
    "grid",
    "level",
    "deterministic",
    "model",
    "simulate_rotations",
    "initial",
    "t_final",
    "samples",
    "budget",
    "threads",
];

/// A bad key, value or file. Always a usage error.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(key: &str, value: &str, why: &str) -> ConfigError {
    ConfigError(format!("{key} = {value}: {why}"))
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| bad(key, v, "not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v, "not finite"))
    }
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = num(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, v, "must be positive"))
    }
}

fn count(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| bad(key, v, "not a non-negative integer"))
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

/// `linear:lo:hi:n` or `log:lo:hi:n`.
pub fn parse_grid(v: &str) -> Result<Grid, ConfigError> {
    let parts: Vec<&str> = v.split(':').collect();
    let [kind, lo, hi, n] = parts[..] else {
        return Err(bad("grid", v, "expected linear:lo:hi:n or log:lo:hi:n"));
    };
    let (lo, hi, n) = (num("grid", lo)?, num("grid", hi)?, count("grid", n)?);
    let g = match kind {
        "linear" => Grid::Linear { lo, hi, n },
        "log" => Grid::Log { lo, hi, n },
        _ => return Err(bad("grid", v, "grid kind must be linear or log")),
    };
    g.points().map_err(|e| bad("grid", v, &e.to_string()))?;
    Ok(g)
}

fn grid_string(g: &Grid) -> String {
    match *g {
        Grid::Linear { lo, hi, n } => format!("linear:{lo}:{hi}:{n}"),
        Grid::Log { lo, hi, n } => format!("log:{lo}:{hi}:{n}"),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "scheme" => self.scheme = FidelityScheme::parse(v).map_err(|e| bad(key, v, &e.to_string()))?,
            "eta" => {
                let x = num(key, v)?;
                if !(0.0..1.0).contains(&x) {
                    return Err(bad(key, v, "must lie in [0, 1)"));
                }
                self.eta = x;
            }
            "omega_prime" => {
                self.omega_prime = if v == "resonant" {
                    OmegaPrime::Resonant
                } else {
                    let x = num(key, v)?;
                    if x < 0.0 {
                        return Err(bad(key, v, "must be non-negative"));
                    }
                    OmegaPrime::Value(x)
                }
            }
            "wave_type" => {
                self.wave_type = match v {
                    "travelling" => Some(WaveType::Travelling),
                    "standing" | "standing_node" => Some(WaveType::StandingNode),
                    "scheme" => None,
                    _ => return Err(bad(key, v, "expected travelling, standing_node or scheme")),
                }
            }
            "n_ions" => {
                self.n_ions = count(key, v)?;
                if !(1..=2).contains(&self.n_ions) {
                    return Err(bad(key, v, "1 or 2 ions are supported"));
                }
            }
            "modes" => {
                self.modes = count(key, v)?;
                if !(1..=2).contains(&self.modes) {
                    return Err(bad(key, v, "1 or 2 modes are supported"));
                }
            }
            "fock_cutoff" => {
                self.fock_cutoff = count(key, v)?;
                if self.fock_cutoff == 0 {
                    return Err(bad(key, v, "must be at least 1"));
                }
            }
            "step" => self.step = if v == "exact" { None } else { Some(positive(key, v)?) },
            "output" => self.output = if v == "-" { None } else { Some(PathBuf::from(v)) },
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(key, v, "expected csv or json")),
                }
            }
            "grid" => self.grid = if v == "default" { None } else { Some(parse_grid(v)?) },
            "level" => {
                let x = num(key, v)?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(bad(key, v, "must lie in [0, 1]"));
                }
                self.level = x;
            }
            "deterministic" => {
                if !boolean(key, v)? {
                    return Err(bad(key, v, "runs are seedless; only true is accepted"));
                }
            }
            "model" => {
                self.model = match v {
                    "idealized" => Model::Idealized,
                    "full" => Model::Full,
                    _ => return Err(bad(key, v, "expected idealized or full")),
                }
            }
            "simulate_rotations" => self.simulate_rotations = boolean(key, v)?,
            "initial" => {
                crate::commands::parse_label(v).map_err(|e| bad(key, v, &e))?;
                self.initial = v.to_string();
            }
            "t_final" => self.t_final = if v == "auto" { None } else { Some(positive(key, v)?) },
            "samples" => {
                self.samples = count(key, v)?;
                if self.samples < 2 {
                    return Err(bad(key, v, "need at least 2 samples"));
                }
            }
            "budget" => self.budget = positive(key, v)?,
            "threads" => {
                let n = count(key, v)?;
                self.threads = if n == 0 { None } else { Some(n) };
            }
            _ => return Err(ConfigError(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", k + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("line {}: {e}", k + 1)))?;
        }
        Ok(())
    }

    /// Every key with its resolved value, in file syntax.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |x: Option<f64>, none: &str| x.map_or(none.to_string(), |v| v.to_string());
        let vals = [
            self.scheme.name().to_string(),
            self.eta.to_string(),
            match self.omega_prime {
                OmegaPrime::Resonant => "resonant".into(),
                OmegaPrime::Value(x) => x.to_string(),
            },
            self.wave_type.map_or("scheme".into(), |w| w.name().into()),
            self.n_ions.to_string(),
            self.modes.to_string(),
            self.fock_cutoff.to_string(),
            opt(self.step, "exact"),
            self.output.as_ref().map_or("-".into(), |p| p.display().to_string()),
            match self.format {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            },
            self.grid.as_ref().map_or("default".into(), grid_string),
            self.level.to_string(),
            self.deterministic.to_string(),
            match self.model {
                Model::Idealized => "idealized".into(),
                Model::Full => "full".into(),
            },
            self.simulate_rotations.to_string(),
            self.initial.clone(),
            opt(self.t_final, "auto"),
            self.samples.to_string(),
            self.budget.to_string(),
            self.threads.map_or("0".into(), |n| n.to_string()),
        ];
        KEYS.into_iter().zip(vals).collect()
    }

    /// Trap with the configured ions, modes and truncation.
    pub fn system(&self) -> Config {
        let mut c = if self.n_ions == 1 {
            SystemConfig::single_ion(self.eta, 1.0, 1.0)
        } else {
            SystemConfig::two_ion_trap(self.eta, 1.0)
        };
        c.mode_freqs.truncate(self.modes);
        for row in &mut c.lamb_dicke {
            row.truncate(self.modes);
        }
        c.with_cutoffs(self.fock_cutoff)
    }

    pub fn grid(&self) -> Grid {
        self.grid.unwrap_or_else(|| self.scheme.default_grid())
    }
}
