//! Run configuration: presets, flat `key=value` overrides and validation.
//!
//! Values are resolved in three layers: the preset's defaults, then a config
//! file, then command-line flags. The same keys are used everywhere:
//!
//! | key | meaning |
//! |---|---|
//! | `preset` | `plane1d`, `plane1d-small`, `plane2d`, `plane2d-small`, `beam2d`, `beam2d-small`, `custom` |
//! | `scheme` | `full_stable`, `full_naive`, `dlra_2r`, `dlra_4r` |
//! | `nx`, `nv` | cells per spatial axis, nodes per velocity axis |
//! | `sigma` | collision frequency |
//! | `cfl` | CFL number |
//! | `round_up_vcap` | round `max|v|` up to an integer in the time step |
//! | `tend` | final time |
//! | `r0`, `rmax` | initial and maximal rank |
//! | `theta` | relative truncation tolerance |
//! | `conservative` | conservative (moment-preserving) truncation |
//! | `snapshots` | comma-separated snapshot times |
//! | `out` | output directory |
//! | `seed` | seed for the random basis completion |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Plane1d,
    Plane1dSmall,
    Plane2d,
    Plane2dSmall,
    Beam2d,
    Beam2dSmall,
    Custom,
}

/// Initial data and domain shared by a preset and its small overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Gaussian density on `[-10, 10]`, `g = 1`.
    PlaneSource1d,
    /// Gaussian density on `[-3, 3]^2`, `g = 1`.
    PlaneSource2d,
    /// Narrow density on `[-5, 5]^2`, velocity profile peaked at `(-1, -1)`.
    Beam2d,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Plane1d,
        Preset::Plane1dSmall,
        Preset::Plane2d,
        Preset::Plane2dSmall,
        Preset::Beam2d,
        Preset::Beam2dSmall,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Plane1d => "plane1d",
            Preset::Plane1dSmall => "plane1d-small",
            Preset::Plane2d => "plane2d",
            Preset::Plane2dSmall => "plane2d-small",
            Preset::Beam2d => "beam2d",
            Preset::Beam2dSmall => "beam2d-small",
            Preset::Custom => "custom",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Preset::Plane1d | Preset::Plane1dSmall | Preset::Custom => Family::PlaneSource1d,
            Preset::Plane2d | Preset::Plane2dSmall => Family::PlaneSource2d,
            Preset::Beam2d | Preset::Beam2dSmall => Family::Beam2d,
        }
    }

    /// Resolved configuration with no overrides applied.
    pub fn defaults(self) -> RunConfig {
        let base = RunConfig {
            preset: self,
            scheme: Scheme::Dlra2r,
            n_x: 1000,
            n_v: 500,
            sigma: 10.0,
            cfl: 0.99,
            round_up_vcap: true,
            t_end: 8.0,
            r0: 20,
            theta_coeff: 1e-5,
            r_max: 200,
            conservative: true,
            snapshot_times: vec![0.0, 2.0, 4.0, 6.0],
            output_dir: PathBuf::from(format!("runs/{}", self.name())),
            seed: 0,
        };
        let plane2d = RunConfig {
            n_x: 128,
            n_v: 32,
            sigma: 100.0,
            cfl: 0.7,
            t_end: 3.0,
            snapshot_times: vec![0.0, 1.0, 2.0, 3.0],
            ..base.clone()
        };
        let beam2d = RunConfig { sigma: 1.5, theta_coeff: 1e-4, ..plane2d.clone() };
        match self {
            Preset::Plane1d => base,
            Preset::Plane1dSmall => RunConfig { n_x: 400, n_v: 128, ..base },
            Preset::Plane2d => plane2d,
            Preset::Plane2dSmall => RunConfig { n_x: 64, n_v: 16, ..plane2d },
            Preset::Beam2d => beam2d,
            Preset::Beam2dSmall => RunConfig { n_x: 64, n_v: 16, r_max: 100, ..beam2d },
            Preset::Custom => RunConfig {
                n_x: 128,
                n_v: 32,
                sigma: 1.0,
                round_up_vcap: false,
                t_end: 1.0,
                r0: 10,
                r_max: 64,
                snapshot_times: vec![0.0, 1.0],
                ..base
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected one of {})", names(Preset::ALL.map(Preset::name))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    FullStable,
    FullNaive,
    Dlra2r,
    Dlra4r,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::FullStable, Scheme::FullNaive, Scheme::Dlra2r, Scheme::Dlra4r];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullStable => "full_stable",
            Scheme::FullNaive => "full_naive",
            Scheme::Dlra2r => "dlra_2r",
            Scheme::Dlra4r => "dlra_4r",
        }
    }

    pub fn is_low_rank(self) -> bool {
        matches!(self, Scheme::Dlra2r | Scheme::Dlra4r)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected one of {})", names(Scheme::ALL.map(Scheme::name))))
    }
}

fn names<const N: usize>(all: [&str; N]) -> String {
    all.join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub scheme: Scheme,
    /// Cells per spatial axis.
    pub n_x: usize,
    /// Nodes per velocity axis.
    pub n_v: usize,
    pub sigma: f64,
    pub cfl: f64,
    pub round_up_vcap: bool,
    pub t_end: f64,
    pub r0: usize,
    pub theta_coeff: f64,
    pub r_max: usize,
    pub conservative: bool,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

pub const KEYS: [&str; 15] = [
    "preset",
    "scheme",
    "nx",
    "nv",
    "sigma",
    "cfl",
    "round_up_vcap",
    "tend",
    "r0",
    "theta",
    "rmax",
    "conservative",
    "snapshots",
    "out",
    "seed",
];

/// An ordered list of `key=value` settings, each key checked against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    entries: Vec<(String, String)>,
}

impl Overrides {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a setting; later settings of the same key win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(ExperimentError::config(key, format!("unknown key (expected one of {})", KEYS.join(", "))));
        }
        self.entries.push((key.to_string(), value.into()));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `other` applied on top of `self`.
    pub fn merged(&self, other: &Overrides) -> Overrides {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Overrides { entries }
    }
}

/// Parses flat `key = value` text. Blank lines and lines starting with `#`
/// are ignored; unknown and repeated keys are errors.
pub fn parse_config(text: &str) -> Result<Overrides> {
    let mut out = Overrides::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ExperimentError::parse(i + 1, format!("expected `key=value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if out.get(key).is_some() {
            return Err(ExperimentError::parse(i + 1, format!("key `{key}` given twice")));
        }
        out.set(key, value).map_err(|e| ExperimentError::parse(i + 1, e.to_string()))?;
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ExperimentError::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ExperimentError::config(key, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_times(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|t| parse_value::<f64>(key, t.trim())).collect()
}

impl RunConfig {
    /// Preset defaults with `overrides` applied and the result validated.
    ///
    /// The preset comes from the `preset` key, else `fallback`. When the
    /// snapshot times are not given explicitly, preset times after `t_end`
    /// are dropped.
    pub fn resolve(overrides: &Overrides, fallback: Option<Preset>) -> Result<RunConfig> {
        let preset = match overrides.get("preset") {
            Some(p) => p.parse::<Preset>().map_err(|e| ExperimentError::config("preset", e))?,
            None => fallback.ok_or_else(|| ExperimentError::config("preset", "no preset given"))?,
        };
        let mut c = preset.defaults();
        let explicit_out = overrides.get("out").is_some();
        for (key, value) in overrides.iter() {
            match key {
                "preset" => {}
                "scheme" => c.scheme = value.parse().map_err(|e: String| ExperimentError::config(key, e))?,
                "nx" => c.n_x = parse_value(key, value)?,
                "nv" => c.n_v = parse_value(key, value)?,
                "sigma" => c.sigma = parse_value(key, value)?,
                "cfl" => c.cfl = parse_value(key, value)?,
                "round_up_vcap" => c.round_up_vcap = parse_bool(key, value)?,
                "tend" => c.t_end = parse_value(key, value)?,
                "r0" => c.r0 = parse_value(key, value)?,
                "theta" => c.theta_coeff = parse_value(key, value)?,
                "rmax" => c.r_max = parse_value(key, value)?,
                "conservative" => c.conservative = parse_bool(key, value)?,
                "snapshots" => c.snapshot_times = parse_times(key, value)?,
                "out" => c.output_dir = PathBuf::from(value),
                "seed" => c.seed = parse_value(key, value)?,
                _ => return Err(ExperimentError::config(key, "unknown key")),
            }
        }
        if overrides.get("snapshots").is_none() {
            let t_end = c.t_end;
            c.snapshot_times.retain(|&t| t <= t_end);
        }
        if !explicit_out {
            c.output_dir = PathBuf::from(format!("runs/{}-{}", c.preset, c.scheme));
        }
        c.snapshot_times.sort_by(f64::total_cmp);
        c.snapshot_times.dedup();
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, msg: String| ExperimentError::config(key, msg);
        if self.n_x == 0 {
            return Err(err("nx", "must be positive".into()));
        }
        if self.n_v == 0 {
            return Err(err("nv", "must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(err("sigma", format!("must be finite and >= 0, got {}", self.sigma)));
        }
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return Err(err("cfl", format!("must be positive, got {}", self.cfl)));
        }
        if self.cfl > 1.0 && self.scheme != Scheme::FullNaive {
            return Err(err(
                "cfl",
                format!("{} exceeds 1; {} is only stable under max|v| dt <= dx", self.cfl, self.scheme),
            ));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(err("tend", format!("must be positive, got {}", self.t_end)));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return Err(err("snapshots", format!("time {t} outside [0, {}]", self.t_end)));
        }
        if !(self.theta_coeff >= 0.0) || !self.theta_coeff.is_finite() {
            return Err(err("theta", format!("must be finite and >= 0, got {}", self.theta_coeff)));
        }
        if self.r_max < 2 {
            return Err(err("rmax", format!("must be at least 2, got {}", self.r_max)));
        }
        if self.r0 == 0 || self.r0 > self.r_max {
            return Err(err("r0", format!("must be in 1..={}, got {}", self.r_max, self.r0)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.preset.family() {
            Family::PlaneSource1d => 1,
            Family::PlaneSource2d | Family::Beam2d => 2,
        }
    }

    /// The resolved settings as config-file lines, in [`KEYS`] order.
    pub fn to_config_text(&self) -> String {
        let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
        let lines = [
            ("preset", self.preset.to_string()),
            ("scheme", self.scheme.to_string()),
            ("nx", self.n_x.to_string()),
            ("nv", self.n_v.to_string()),
            ("sigma", self.sigma.to_string()),
            ("cfl", self.cfl.to_string()),
            ("round_up_vcap", self.round_up_vcap.to_string()),
            ("tend", self.t_end.to_string()),
            ("r0", self.r0.to_string()),
            ("theta", self.theta_coeff.to_string()),
            ("rmax", self.r_max.to_string()),
            ("conservative", self.conservative.to_string()),
            ("snapshots", times.join(",")),
            ("out", self.output_dir.display().to_string()),
            ("seed", self.seed.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
