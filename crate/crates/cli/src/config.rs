//! Run configuration: preset, then config file, then `--set`, then dedicated flags.
//!
//! The config file is flat `key = value` text. Recognised keys are the model parameter
//! names (`mu0`, `beta`, ... `i0`), the simulation keys `dt`, `n_paths`, `master_seed`,
//! `record_stride`, `boundary_enabled`, the grid keys `n_a`, `n_i`, `n_t`, `a_max`,
//! `time_step`, and `preset`. Anything else is an error.

use std::fs;
use std::path::{Path, PathBuf};

use autolab_core::hjb::GridSpec;
use autolab_core::params::{parse_kv, PARAM_KEYS};
use autolab_core::{ModelParams, SimConfig, DEFAULT_PRESET};
use serde::Serialize;

use crate::CliError;

pub const SIM_KEYS: [&str; 5] = ["dt", "n_paths", "master_seed", "record_stride", "boundary_enabled"];
pub const GRID_KEYS: [&str; 5] = ["n_a", "n_i", "n_t", "a_max", "time_step"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Structured,
}

/// Solver grid settings; the domain's lower edge always follows the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSettings {
    pub n_a: usize,
    pub n_i: usize,
    pub n_t: usize,
    pub a_max: f64,
    pub time_step: Option<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        let g = GridSpec::default_for(&ModelParams::baseline());
        Self { n_a: g.n_a, n_i: g.n_i, n_t: g.n_t, a_max: g.a_max, time_step: g.time_step }
    }
}

impl GridSettings {
    pub fn spec(&self, params: &ModelParams) -> GridSpec {
        GridSpec { a_max: self.a_max, n_t: self.n_t, time_step: self.time_step, ..GridSpec::with_resolution(params, self.n_a, self.n_i) }
    }
}

/// A value that differs from the preset, and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Override {
    pub key: String,
    pub value: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: String,
    pub params: ModelParams,
    pub sim: SimConfig,
    pub grid: GridSettings,
    pub format: Format,
    #[serde(skip)]
    pub out: PathBuf,
    pub overrides: Vec<Override>,
}

/// Values given on the command line, already split into keys.
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub sets: Vec<(String, String)>,
    pub flags: Vec<(String, String)>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| input(format!("bad value `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn resolve(flags: &FlagValues, default_paths: usize, format: Format, out: &Path) -> Result<Self, CliError> {
        let file_entries = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
                parse_kv(&text).map_err(|e| input(format!("{}: {e}", path.display())))?.into_iter().map(|e| (e.key, e.value)).collect()
            }
            None => Vec::new(),
        };
        let file_preset = file_entries.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.clone());
        let preset = flags.preset.clone().or(file_preset).unwrap_or_else(|| DEFAULT_PRESET.to_string());
        let params = ModelParams::preset(&preset).map_err(|e| input(e.to_string()))?;
        let mut cfg = Self {
            preset,
            params,
            sim: SimConfig { n_paths: default_paths, ..SimConfig::default() },
            grid: GridSettings::default(),
            format,
            out: out.to_path_buf(),
            overrides: Vec::new(),
        };
        let config_label = flags.config.as_ref().map(|p| format!("config {}", p.display())).unwrap_or_default();
        for (key, value) in &file_entries {
            if key != "preset" {
                cfg.apply(key, value, &config_label)?;
            }
        }
        for (key, value) in &flags.sets {
            if key == "preset" {
                return Err(input("use --preset to choose a preset"));
            }
            cfg.apply(key, value, "--set")?;
        }
        for (key, value) in &flags.flags {
            cfg.apply(key, value, &format!("--{}", flag_name(key)))?;
        }
        cfg.params.validate().map_err(|e| input(e.to_string()))?;
        cfg.sim.validate(cfg.params.horizon).map_err(|e| input(e.to_string()))?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, source: &str) -> Result<(), CliError> {
        if PARAM_KEYS.contains(&key) {
            let v: f64 = parse_num(key, value)?;
            self.params.set(key, v);
        } else {
            match key {
                "dt" => self.sim.dt = parse_num(key, value)?,
                "n_paths" => self.sim.n_paths = parse_num(key, value)?,
                "master_seed" => self.sim.master_seed = parse_num(key, value)?,
                "record_stride" => self.sim.record_stride = parse_num(key, value)?,
                "boundary_enabled" => self.sim.boundary_enabled = parse_num(key, value)?,
                "n_a" => self.grid.n_a = parse_num(key, value)?,
                "n_i" => self.grid.n_i = parse_num(key, value)?,
                "n_t" => self.grid.n_t = parse_num(key, value)?,
                "a_max" => self.grid.a_max = parse_num(key, value)?,
                "time_step" => {
                    self.grid.time_step = match value.trim() {
                        "auto" => None,
                        v => Some(parse_num(key, v)?),
                    }
                }
                _ => return Err(input(format!("unknown configuration key `{key}` ({source})"))),
            }
        }
        if let Some(prev) = self.overrides.iter().find(|o| o.key == key) {
            eprintln!("override {key}: {} ({}) -> {} ({source})", prev.value, prev.source, value.trim());
        } else {
            eprintln!("override {key} = {} ({source})", value.trim());
        }
        self.overrides.retain(|o| o.key != key);
        self.overrides.push(Override { key: key.into(), value: value.trim().into(), source: source.into() });
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.spec(&self.params)
    }
}

fn flag_name(key: &str) -> &str {
    match key {
        "master_seed" => "seed",
        "n_paths" => "paths",
        other => other,
    }
}

/// Splits `key=value` from `--set`.
pub fn split_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
