//! Flat `key=value` run configuration.
//!
//! A configuration starts from a preset, then file lines are applied, then
//! command-line overrides. [`RunConfig::echo`] writes every key back out so a
//! run can be reproduced from its echo file alone.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

use crate::env::{Maze, MazeError};
use crate::harness::ExperimentConfig;
use crate::learner::LearnerParams;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("maze {name}: {source}")]
    Maze {
        name: String,
        #[source]
        source: MazeError,
    },
    #[error("cannot read maze file {path}: {reason}")]
    MazeFile { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Paper,
    /// Smaller subpopulations: beta = 2, nu = 5.
    TestA,
    /// Smaller map: 7 x 7.
    TestB,
    Custom,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "test-a" => Ok(Preset::TestA),
            "test-b" => Ok(Preset::TestB),
            "custom" => Ok(Preset::Custom),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::TestA => "test-a",
            Preset::TestB => "test-b",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset name (`empty-room`, `one-wall`) or path to a maze file.
    pub maze: String,
    pub params: LearnerParams,
    pub som_rows: usize,
    pub som_cols: usize,
    pub trials: usize,
    pub max_trial_steps: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub metric_window: usize,
    pub census_interval: u64,
}

pub const KEYS: &[&str] = &[
    "maze",
    "eta",
    "gamma",
    "beta",
    "nu",
    "iota",
    "initial_fitness",
    "de_cr",
    "neighbor_seed_radius",
    "inherit_seed_fitness",
    "som_rows",
    "som_cols",
    "trials",
    "max_trial_steps",
    "repetitions",
    "seed",
    "metric_window",
    "census_interval",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut c = RunConfig {
            maze: "empty-room".to_string(),
            params: LearnerParams::default(),
            som_rows: 10,
            som_cols: 10,
            trials: 10_000,
            max_trial_steps: 500,
            repetitions: 20,
            seed: 0,
            metric_window: 100,
            census_interval: 100,
        };
        match preset {
            Preset::Paper | Preset::Custom => {}
            Preset::TestA => {
                c.params.beta = 2;
                c.params.nu = 5;
            }
            Preset::TestB => {
                c.som_rows = 7;
                c.som_cols = 7;
            }
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        match key {
            "maze" => self.maze = value.to_string(),
            "eta" => p.eta = parse_value(key, value)?,
            "gamma" => p.gamma = parse_value(key, value)?,
            "beta" => p.beta = parse_value(key, value)?,
            "nu" => p.nu = parse_value(key, value)?,
            "iota" => p.iota = parse_value(key, value)?,
            "initial_fitness" => p.initial_fitness = parse_value(key, value)?,
            "de_cr" => p.de_cr = parse_value(key, value)?,
            "neighbor_seed_radius" => p.neighbor_seed_radius = parse_value(key, value)?,
            "inherit_seed_fitness" => p.inherit_seed_fitness = parse_value(key, value)?,
            "som_rows" => self.som_rows = parse_value(key, value)?,
            "som_cols" => self.som_cols = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "max_trial_steps" => self.max_trial_steps = parse_value(key, value)?,
            "repetitions" => self.repetitions = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "metric_window" => self.metric_window = parse_value(key, value)?,
            "census_interval" => self.census_interval = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn apply_assignment(&mut self, text: &str) -> Result<(), ConfigError> {
        let (key, value) = split_assignment(text).ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: text.to_string(),
        })?;
        self.set(key, value)
    }

    /// Applies a config file body: `key=value` lines, blank lines and `#` comments ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (key, value) in parse_assignments(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("maze", self.maze.clone());
        put("eta", p.eta.to_string());
        put("gamma", p.gamma.to_string());
        put("beta", p.beta.to_string());
        put("nu", p.nu.to_string());
        put("iota", p.iota.to_string());
        put("initial_fitness", p.initial_fitness.to_string());
        put("de_cr", p.de_cr.to_string());
        put("neighbor_seed_radius", p.neighbor_seed_radius.to_string());
        put("inherit_seed_fitness", p.inherit_seed_fitness.to_string());
        put("som_rows", self.som_rows.to_string());
        put("som_cols", self.som_cols.to_string());
        put("trials", self.trials.to_string());
        put("max_trial_steps", self.max_trial_steps.to_string());
        put("repetitions", self.repetitions.to_string());
        put("seed", self.seed.to_string());
        put("metric_window", self.metric_window.to_string());
        put("census_interval", self.census_interval.to_string());
        s
    }

    pub fn load_maze(&self) -> Result<Maze, ConfigError> {
        let wrap = |source| ConfigError::Maze {
            name: self.maze.clone(),
            source,
        };
        match self.maze.as_str() {
            "empty-room" | "one-wall" => Maze::preset(&self.maze).map_err(wrap),
            path => {
                let text = std::fs::read_to_string(Path::new(path)).map_err(|e| {
                    ConfigError::MazeFile {
                        path: path.to_string(),
                        reason: e.to_string(),
                    }
                })?;
                Maze::parse(&text).map_err(wrap)
            }
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        Ok(ExperimentConfig {
            maze: self.load_maze()?,
            params: self.params.clone(),
            som_rows: self.som_rows,
            som_cols: self.som_cols,
            trials: self.trials,
            max_trial_steps: self.max_trial_steps,
            repetitions: self.repetitions,
            base_seed: self.seed,
            metric_window: self.metric_window,
            census_interval: self.census_interval,
        })
    }
}

fn split_assignment(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

/// Parses `key=value` lines into pairs without interpreting keys.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_assignment(line).ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}
