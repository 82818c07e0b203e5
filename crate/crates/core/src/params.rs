//! Model parameter record, the named preset, and flat `key = value` configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the preset carrying the reference parameter set.
pub const DEFAULT_PRESET: &str = "paper-2025";

/// Every scalar parameter of the autonomy / information model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Baseline autonomy drift.
    pub mu0: f64,
    /// Linear load coefficient.
    pub beta: f64,
    /// Quadratic load coefficient.
    pub gamma: f64,
    /// Autonomy volatility.
    pub sigma_a: f64,
    /// Initial autonomy.
    pub a0: f64,
    /// Information acquisition gain per unit control.
    pub alpha0: f64,
    /// Information volatility.
    pub sigma_i: f64,
    pub i_max: f64,
    /// Correlation between the autonomy and information noises.
    pub rho: f64,
    pub q_max: f64,
    /// Quality overload coefficient.
    pub beta_q: f64,
    /// Autonomy-cost scale.
    pub kappa: f64,
    /// Per-unit control cost.
    pub c: f64,
    /// Discount rate.
    pub delta: f64,
    /// Baseline disengagement boundary.
    pub b0: f64,
    /// Boundary sensitivity per working-memory item.
    pub beta_wm: f64,
    /// Working-memory capacity in items.
    pub wm: f64,
    /// Task horizon T.
    pub horizon: f64,
    pub u_max: f64,
    /// Initial information level.
    pub i0: f64,
}

/// Field names in declaration order; these are also the configuration keys.
pub const PARAM_KEYS: [&str; 20] = [
    "mu0", "beta", "gamma", "sigma_a", "a0", "alpha0", "sigma_i", "i_max", "rho", "q_max", "beta_q", "kappa", "c", "delta", "b0",
    "beta_wm", "wm", "horizon", "u_max", "i0",
];

impl Default for ModelParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ModelParams {
    /// The reference parameter set. `u_max` and `i0` are not given by the source and are
    /// fixed at 1 and 0.
    pub fn baseline() -> Self {
        Self {
            mu0: 0.10,
            beta: 0.05,
            gamma: 0.01,
            sigma_a: 0.20,
            a0: 1.0,
            alpha0: 0.5,
            sigma_i: 0.1,
            i_max: 5.0,
            rho: -0.3,
            q_max: 10.0,
            beta_q: 0.04,
            kappa: 2.0,
            c: 0.5,
            delta: 0.05,
            b0: 0.9,
            beta_wm: 0.1,
            wm: 4.0,
            horizon: 10.0,
            u_max: 1.0,
            i0: 0.0,
        }
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            DEFAULT_PRESET => Ok(Self::baseline()),
            other => Err(Error::InvalidInput(format!("unknown preset `{other}`"))),
        }
    }

    /// Checks the model's standing assumptions: strictly positive load, volatility, reward and
    /// boundary coefficients on top of [`ModelParams::validate_structure`].
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu0", self.mu0),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma_a", self.sigma_a),
            ("alpha0", self.alpha0),
            ("q_max", self.q_max),
            ("kappa", self.kappa),
            ("c", self.c),
            ("b0", self.b0),
            ("beta_wm", self.beta_wm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") });
            }
        }
        self.validate_structure()
    }

    /// The weaker check needed for simulation and solving to be well defined. Degenerate
    /// cases (zero volatility, zero reward weights) pass.
    pub fn validate_structure(&self) -> Result<()> {
        for (name, v) in [("i_max", self.i_max), ("horizon", self.horizon), ("u_max", self.u_max), ("a0", self.a0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") });
            }
        }
        let non_negative = [
            ("sigma_a", self.sigma_a),
            ("sigma_i", self.sigma_i),
            ("alpha0", self.alpha0),
            ("beta_q", self.beta_q),
            ("q_max", self.q_max),
            ("kappa", self.kappa),
            ("c", self.c),
            ("delta", self.delta),
            ("wm", self.wm),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be >= 0, got {v}") });
            }
        }
        for (name, v) in [("mu0", self.mu0), ("beta", self.beta), ("gamma", self.gamma), ("b0", self.b0), ("beta_wm", self.beta_wm)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite, got {v}") });
            }
        }
        if !(-1.0..=0.0).contains(&self.rho) {
            return Err(Error::InvalidParameter { name: "rho", reason: format!("must lie in [-1, 0], got {}", self.rho) });
        }
        if !(0.0..=self.i_max).contains(&self.i0) {
            return Err(Error::InvalidParameter { name: "i0", reason: format!("must lie in [0, i_max], got {}", self.i0) });
        }
        let b = self.boundary();
        if !(b > 0.0 && b < self.a0) {
            return Err(Error::InvalidParameter { name: "wm", reason: format!("boundary b0 - beta_wm*wm = {b} must lie in (0, a0)") });
        }
        Ok(())
    }

    /// Unchecked drift rate mu(I) = mu0 - beta*I - gamma*I^2, for inner loops.
    #[inline]
    pub fn drift_rate(&self, i: f64) -> f64 {
        self.mu0 - self.beta * i - self.gamma * i * i
    }

    /// Boundary at the configured working-memory capacity.
    #[inline]
    pub fn boundary(&self) -> f64 {
        self.b0 - self.beta_wm * self.wm
    }

    #[inline]
    pub fn quality_value(&self, i: f64) -> f64 {
        self.q_max * i * (-self.beta_q * i * i).exp()
    }

    #[inline]
    pub fn reward_value(&self, a: f64, i: f64, u: f64) -> f64 {
        let gap = self.a0 - a;
        self.quality_value(i) - self.kappa * gap * gap - self.c * u
    }

    /// Sets one field by key. Returns `false` when the key is not a parameter name.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "mu0" => &mut self.mu0,
            "beta" => &mut self.beta,
            "gamma" => &mut self.gamma,
            "sigma_a" => &mut self.sigma_a,
            "a0" => &mut self.a0,
            "alpha0" => &mut self.alpha0,
            "sigma_i" => &mut self.sigma_i,
            "i_max" => &mut self.i_max,
            "rho" => &mut self.rho,
            "q_max" => &mut self.q_max,
            "beta_q" => &mut self.beta_q,
            "kappa" => &mut self.kappa,
            "c" => &mut self.c,
            "delta" => &mut self.delta,
            "b0" => &mut self.b0,
            "beta_wm" => &mut self.beta_wm,
            "wm" => &mut self.wm,
            "horizon" => &mut self.horizon,
            "u_max" => &mut self.u_max,
            "i0" => &mut self.i0,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let v = match key {
            "mu0" => self.mu0,
            "beta" => self.beta,
            "gamma" => self.gamma,
            "sigma_a" => self.sigma_a,
            "a0" => self.a0,
            "alpha0" => self.alpha0,
            "sigma_i" => self.sigma_i,
            "i_max" => self.i_max,
            "rho" => self.rho,
            "q_max" => self.q_max,
            "beta_q" => self.beta_q,
            "kappa" => self.kappa,
            "c" => self.c,
            "delta" => self.delta,
            "b0" => self.b0,
            "beta_wm" => self.beta_wm,
            "wm" => self.wm,
            "horizon" => self.horizon,
            "u_max" => self.u_max,
            "i0" => self.i0,
            _ => return None,
        };
        Some(v)
    }

    /// Renders the record as `key = value` lines with round-trippable precision.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in PARAM_KEYS {
            let _ = writeln!(out, "{key} = {:?}", self.get(key).unwrap_or(f64::NAN));
        }
        out
    }

    /// Parses a flat configuration containing only parameter keys, starting from the reference preset.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut params = Self::baseline();
        for entry in parse_kv(text)? {
            let value = entry.number()?;
            if !params.set(&entry.key, value) {
                return Err(Error::Config { line: entry.line, msg: format!("unknown key `{}`", entry.key) });
            }
        }
        params.validate()?;
        Ok(params)
    }
}

/// One `key = value` line of a flat configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl KvEntry {
    pub fn number(&self) -> Result<f64> {
        self.value
            .parse::<f64>()
            .map_err(|_| Error::Config { line: self.line, msg: format!("`{}` is not a number for key `{}`", self.value, self.key) })
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped; repeated keys
/// are rejected.
pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) =
            body.split_once('=').ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(Error::Config { line, msg: "empty key".into() });
        }
        if let Some(prev) = seen.insert(key.clone(), line) {
            return Err(Error::Config { line, msg: format!("duplicate key `{key}` (first on line {prev})") });
        }
        out.push(KvEntry { line, key, value });
    }
    Ok(out)
}
