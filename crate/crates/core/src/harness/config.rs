//! Run configuration: one TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dg::Dissipation;
use crate::error::{Error, Result};
use crate::time::RkScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    RotatedSquareConvergence,
    /// Convergence on the uncut periodic unit torus.
    PeriodicConvergence,
    ChannelLongTime,
    VerifyForms,
    /// Single rotated-square runs per `(n, degree)` with energy traces.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub n: usize,
    pub degree: usize,
    pub scheme: RkScheme,
    pub dissipation: Dissipation,
    /// Target volume fraction of the small cells next to both walls.
    pub min_alpha: f64,
    /// Approximate band width in `x₂ − x₁`.
    pub width: f64,
    /// Final time in channel lengths.
    pub periods: f64,
    pub snapshots_per_period: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n: 50,
            degree: 2,
            scheme: RkScheme::Ssprk104,
            dissipation: Dissipation::Zero,
            min_alpha: 1e-5,
            width: 0.2,
            periods: 10.0,
            snapshots_per_period: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: usize,
    pub tolerance: f64,
    /// Perturbation of one propagation-form coefficient, for the negative control.
    pub corrupt: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 100, tolerance: 1e-11, corrupt: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub n: Vec<usize>,
    pub degrees: Vec<usize>,
    /// Order-matched scheme when absent.
    pub scheme: Option<RkScheme>,
    pub c: f64,
    pub alpha: f64,
    pub cfl_factor: f64,
    /// Used instead of `cfl_factor` for r >= 2; upwind stabilized runs at 0.25 are unstable there.
    pub cfl_factor_high: f64,
    pub dissipation: Dissipation,
    pub rho_filter: Vec<f64>,
    pub t_end: f64,
    pub angle_deg: f64,
    /// Extra x-offset of the rotated square.
    pub origin_shift: f64,
    pub rho_aniso: f64,
    /// Same η on every small cell instead of the capacity rule.
    pub eta_override: Option<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub vtk: bool,
    pub channel: ChannelConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::RotatedSquareConvergence,
            n: vec![20, 40, 80],
            degrees: vec![1, 2, 3],
            scheme: None,
            c: 1.0,
            alpha: 0.1,
            cfl_factor: 0.25,
            cfl_factor_high: 0.15,
            dissipation: Dissipation::LaxFriedrichs,
            rho_filter: vec![1e-12, 1e-7, 1e-5, 1e-4, 1e-2, 1e-1],
            t_end: 1.0,
            angle_deg: 35.0,
            origin_shift: 0.0,
            rho_aniso: 20.0,
            eta_override: None,
            output_dir: PathBuf::from("out"),
            seed: 20240611,
            vtk: true,
            channel: ChannelConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Sets a dotted key (`channel.min_alpha=1e-9`); the value is read as a TOML literal, else as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut root;
        for p in &parts[..parts.len() - 1] {
            node = node
                .as_table_mut()
                .and_then(|t| t.get_mut(*p))
                .ok_or_else(|| Error::Config(format!("unknown config section `{p}`")))?;
        }
        let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("`{key}` is not inside a table")))?;
        let leaf = parts[parts.len() - 1];
        // integers given for float fields
        let value = match (table.get(leaf), value) {
            (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (Some(toml::Value::Array(a)), toml::Value::Array(b)) if a.first().is_some_and(|v| v.is_float()) => {
                toml::Value::Array(b.into_iter().map(|v| v.as_integer().map_or(v.clone(), |i| toml::Value::Float(i as f64))).collect())
            }
            (_, v) => v,
        };
        table.insert(leaf.to_string(), value);
        let cfg: RunConfig = root.try_into().map_err(|e: toml::de::Error| Error::Config(format!("override `{key}`: {e}")))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.degrees.iter().chain(std::iter::once(&self.channel.degree)).any(|r| *r > 3) {
            return bad("degrees must lie in 0..=3".into());
        }
        if self.n.is_empty() || self.n.contains(&0) || self.channel.n == 0 {
            return bad("resolutions must be positive".into());
        }
        for (name, v) in [
            ("c", self.c),
            ("alpha", self.alpha),
            ("cfl_factor", self.cfl_factor),
            ("cfl_factor_high", self.cfl_factor_high),
            ("t_end", self.t_end),
            ("rho_aniso", self.rho_aniso),
            ("channel.min_alpha", self.channel.min_alpha),
            ("channel.width", self.channel.width),
            ("channel.periods", self.channel.periods),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.channel.width >= 1.0 {
            return bad("channel.width must be below 1".into());
        }
        if self.rho_filter.iter().any(|r| !(*r >= 0.0)) {
            return bad("rho_filter values must be nonnegative".into());
        }
        if let Some(e) = self.eta_override {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("eta_override must lie in [0, 1], got {e}"));
            }
        }
        Ok(())
    }

    pub fn angle(&self) -> f64 {
        self.angle_deg.to_radians()
    }

    pub fn cfl_for(&self, r: usize) -> f64 {
        if r >= 2 { self.cfl_factor_high } else { self.cfl_factor }
    }

    pub fn scheme_for(&self, r: usize) -> RkScheme {
        self.scheme.unwrap_or_else(|| RkScheme::for_degree(r))
    }
}
