//! Run configuration, read from TOML.
//!
//! ```toml
//! d = 2
//! n = 256
//! eps = 0.04            # or "auto", see [epsilon]
//! dt = "auto"
//! t_end = 0.4
//! hook_every = 25
//!
//! [shape]
//! kind = "strip"
//! axis = 0
//! lo = 0.25
//! hi = 0.75
//!
//! [forcing]
//! preset = "constant"
//! g = 0.2
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{InitialOptions, InitialShape};
use crate::solver::Scheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// A number, or the string `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Choice {
    Value(f64),
    Auto(Auto),
}

impl Choice {
    pub fn value(&self) -> Option<f64> {
        match self {
            Choice::Value(v) => Some(*v),
            Choice::Auto(_) => None,
        }
    }
}

impl Default for Choice {
    fn default() -> Self {
        Choice::Auto(Auto::Auto)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingPreset {
    #[default]
    None,
    /// Spatially constant `u` and `g`.
    Constant,
    /// `u = amplitude (sin(2 pi x_2), 0, ..)`, constant `g`.
    Shear,
    /// Raw fields read from snapshot files.
    Snapshot,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub preset: ForcingPreset,
    pub u: Option<Vec<f64>>,
    pub g: f64,
    pub amplitude: f64,
    /// One snapshot per component of `u`.
    pub u_paths: Vec<PathBuf>,
    pub g_path: Option<PathBuf>,
    /// Mollifier radius; defaults to `4 h`.
    pub delta: Option<f64>,
    /// Replaces `L` by a fixed value.
    pub l_override: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonConfig {
    pub gamma: f64,
    /// Strictly descending.
    pub candidates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub y: Vec<f64>,
    pub s: f64,
    #[serde(default)]
    pub cutoff: bool,
}

/// Thresholds used by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `xi_max <= xi * W(0) / (sigma eps)`.
    pub xi: f64,
    /// `w_max <= w`.
    pub w: f64,
    /// Energy residual per hook interval `<= energy (h^2 + dt) mu_0`.
    pub energy: f64,
    /// Coefficient of the monotonicity tolerance model.
    pub mono: f64,
    /// `D(t) <= density * D(0)`.
    pub density: f64,
    /// Coefficient of the cutoff tail term.
    pub tail_c3: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            xi: 0.01,
            w: 0.05,
            energy: 10.0,
            mono: crate::monotonicity::TOL_MONO_C,
            density: 1.5,
            tail_c3: crate::verify::TAIL_C3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Centers per axis for the `D(t)` sample.
    pub density_lattice: usize,
    /// Radii per factor of two in the `D(t)` sample; 1 gives dyadic radii.
    pub radii_per_octave: usize,
    /// Track energy after every step (needed by the energy checks).
    pub energy_trace: bool,
    /// Write a PGM of `{phi > 0}` next to every snapshot.
    pub images: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { density_lattice: 16, radii_per_octave: 1, energy_trace: false, images: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    pub eps: Choice,
    #[serde(default)]
    pub dt: Choice,
    #[serde(default)]
    pub scheme: Scheme,
    pub t_end: f64,
    #[serde(default = "default_hook_every")]
    pub hook_every: u64,
    pub shape: InitialShape,
    #[serde(default)]
    pub init: InitialOptions,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub epsilon: Option<EpsilonConfig>,
    #[serde(default)]
    pub clamp_delta: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub probes: Vec<ProbeConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Rayon worker count; 0 picks the default.
    #[serde(default)]
    pub workers: usize,
}

fn default_hook_every() -> u64 {
    25
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner().message().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be a non-negative number, got {}", self.t_end));
        }
        if self.hook_every == 0 {
            return bad("hook_every must be at least 1".into());
        }
        match (self.eps, &self.epsilon) {
            (Choice::Auto(_), None) => return bad("eps = \"auto\" needs an [epsilon] section".into()),
            (Choice::Auto(_), Some(e)) if !(e.gamma > 0.0 && e.gamma < 0.5) => {
                return bad(format!("epsilon.gamma must lie in (0, 1/2), got {}", e.gamma))
            }
            (Choice::Value(v), _) if !(v > 0.0) => return bad(format!("eps must be positive, got {v}")),
            _ => {}
        }
        if let Choice::Value(v) = self.dt {
            if !(v > 0.0) {
                return bad(format!("dt must be positive, got {v}"));
            }
        }
        if let Some(u) = &self.forcing.u {
            if u.len() != self.d {
                return bad(format!("forcing.u has {} components, need {}", u.len(), self.d));
            }
        }
        if self.forcing.preset == ForcingPreset::Snapshot && self.forcing.u_paths.is_empty() && self.forcing.g_path.is_none() {
            return bad("snapshot forcing needs u_paths or g_path".into());
        }
        for p in &self.probes {
            if p.y.len() != self.d {
                return bad(format!("probe y has {} coordinates, need {}", p.y.len(), self.d));
            }
        }
        Ok(())
    }
}
