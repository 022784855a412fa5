//! Run configuration: built-in defaults, then a JSON file, then command-line flags.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sld_core::numerics::{linspace, logspace};
use sld_core::scattering::{PlacementSpec, SpectrumSpec};
use sld_core::schemes::{Scheme, SchemeParams};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dispersion,
    Scatter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Discrete,
    ContinuumEit,
    ContinuumQuadratic,
    ContinuumLinear,
    ContinuumInfinite,
    ContinuumTruncated,
}

impl FromStr for Model {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            CliError::Config(format!(
                "unknown model '{s}' (expected discrete, continuum-eit, continuum-quadratic, continuum-linear, \
                 continuum-infinite or continuum-truncated)"
            ))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
}

impl FromStr for Spacing {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "log" => Ok(Spacing::Log),
            "linear" => Ok(Spacing::Linear),
            _ => Err(CliError::Config(format!("unknown spacing '{s}' (expected log or linear)"))),
        }
    }
}

/// δ/Γ sample points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Grid { min, max, points, spacing: Spacing::Log }
    }

    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Grid { min, max, points, spacing: Spacing::Linear }
    }

    pub fn deltas(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: &str| Err(CliError::Config(format!("grid: {msg}")));
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad("bounds must be finite");
        }
        match self.points {
            0 => return bad("needs at least one point"),
            1 => return Ok(vec![self.min]),
            _ => {}
        }
        if !(self.max > self.min) {
            return bad("max must exceed min");
        }
        Ok(match self.spacing {
            Spacing::Linear => linspace(self.min, self.max, self.points),
            Spacing::Log if self.min > 0.0 => logspace(self.min, self.max, self.points),
            Spacing::Log => return bad("log spacing needs min > 0"),
        })
    }
}

/// Atom placement. For dispersion it describes one unit cell; for spectra a
/// regular cell is repeated up to `n_total` atoms while a random placement is
/// the whole ensemble. A random placement without `periods` takes its length
/// from the density k₀/n₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementConfig {
    Regular {
        atoms: usize,
    },
    Random {
        atoms: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        periods: Option<u64>,
        seed: u64,
    },
}

impl FromStr for PlacementConfig {
    type Err = CliError;
    /// `regular:N_u`, `random:N_u:n_u:seed` or `random:N_u:seed`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Config(format!("bad placement '{s}' (expected regular:N_u, random:N_u:n_u:seed or random:N_u:seed)"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| parts[i].trim().parse::<u64>().map_err(|_| bad());
        match parts.as_slice() {
            ["regular", _] => Ok(PlacementConfig::Regular { atoms: num(1)? as usize }),
            ["random", _, _, _] => {
                Ok(PlacementConfig::Random { atoms: num(1)? as usize, periods: Some(num(2)?), seed: num(3)? })
            }
            ["random", _, _] => Ok(PlacementConfig::Random { atoms: num(1)? as usize, periods: None, seed: num(2)? }),
            _ => Err(bad()),
        }
    }
}

pub const DEFAULT_N_TOTAL: usize = 40_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: Model,
    pub params: SchemeParams,
    /// Fourier truncation order for `continuum-truncated`.
    pub order: usize,
    pub grid: Grid,
    pub placement: PlacementConfig,
    /// Ensemble size for regular spectra and continuum slabs.
    pub n_total: Option<usize>,
    pub realizations: usize,
    pub input_mode: usize,
    pub output_mode: usize,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (model, grid) = match command {
            Command::Dispersion => (Model::ContinuumInfinite, Grid::log(1e-5, 1e-1, 2000)),
            Command::Scatter => (Model::Discrete, Grid::linear(-0.02, 0.02, 801)),
        };
        RunConfig {
            command,
            model,
            params: SchemeParams::default(),
            order: 25,
            grid,
            placement: PlacementConfig::Regular { atoms: 2 },
            n_total: None,
            realizations: 100,
            input_mode: 0,
            output_mode: 0,
        }
    }

    /// Merge a JSON config file and flag overrides over the defaults for `command`.
    pub fn resolve(command: Command, file: Option<&Path>, overrides: &[(&str, Value)]) -> Result<Self, CliError> {
        let mut cfg = serde_json::to_value(RunConfig::defaults(command)).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let user: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if let Some(c) = user.get("command") {
                if *c != serde_json::to_value(command).expect("command serializes") {
                    return Err(CliError::Config(format!("config file is for command {c}")));
                }
            }
            merge(&mut cfg, user)?;
        }
        for (key, v) in overrides {
            set(&mut cfg, key, v.clone());
        }
        let mut cfg: RunConfig = serde_json::from_value(cfg).map_err(|e| CliError::Config(e.to_string()))?;
        if let PlacementConfig::Random { atoms, periods: periods @ None, .. } = &mut cfg.placement {
            // n₀L = N and L = n_u·π/k₀ give n_u = N·(k₀/n₀)/π.
            *periods = Some(((*atoms as f64 * cfg.params.k0_over_n0 / std::f64::consts::PI).round() as u64).max(1));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.grid.deltas()?;
        let scheme = self.params.scheme;
        let allowed: &[Scheme] = match self.model {
            Model::Discrete => &[Scheme::Lambda, Scheme::DualV],
            Model::ContinuumEit | Model::ContinuumInfinite => &[Scheme::Lambda],
            Model::ContinuumQuadratic => &[Scheme::Lambda, Scheme::DualV],
            Model::ContinuumLinear => &[Scheme::DualV],
            Model::ContinuumTruncated => &[Scheme::Lambda, Scheme::DualColor],
        };
        if !allowed.contains(&scheme) {
            return Err(CliError::Config(format!("model {:?} does not apply to scheme {}", self.model, scheme.name())));
        }
        if self.command == Command::Scatter {
            match self.model {
                Model::Discrete => self.spectrum_spec()?.validate(scheme)?,
                Model::ContinuumInfinite | Model::ContinuumQuadratic if scheme == Scheme::Lambda => {}
                _ => return Err(CliError::Config("spectra use the discrete, continuum-infinite or continuum-quadratic (lambda) model".into())),
            }
        }
        if self.order == 0 {
            return Err(CliError::Config("order must be at least 1".into()));
        }
        Ok(())
    }

    /// Total atoms in a scattering ensemble.
    pub fn ensemble_atoms(&self) -> Result<usize, CliError> {
        match (self.placement, self.n_total) {
            (PlacementConfig::Random { atoms, .. }, Some(n)) if n != atoms => Err(CliError::Config(format!(
                "n_total = {n} conflicts with the {atoms} atoms of the random placement"
            ))),
            (PlacementConfig::Random { atoms, .. }, _) => Ok(atoms),
            (PlacementConfig::Regular { .. }, n) => Ok(n.unwrap_or(DEFAULT_N_TOTAL)),
        }
    }

    pub fn spectrum_spec(&self) -> Result<SpectrumSpec, CliError> {
        let n_total = self.ensemble_atoms()?;
        let (placement, seed) = match self.placement {
            PlacementConfig::Regular { atoms } => (PlacementSpec::Regular { atoms_per_cell: atoms }, 0),
            PlacementConfig::Random { periods, seed, .. } => (PlacementSpec::Random { n_periods: periods_of(periods)? }, seed),
        };
        Ok(SpectrumSpec {
            placement,
            n_total,
            realizations: self.realizations,
            seed,
            input_mode: self.input_mode,
            output_mode: self.output_mode,
        })
    }
}

pub fn periods_of(periods: Option<u64>) -> Result<u64, CliError> {
    periods.ok_or_else(|| CliError::Config("random placement needs periods (or resolve it from k0_over_n0)".into()))
}

/// Top-level keys replace, except the `params` and `grid` tables which merge
/// field by field. A placement is always replaced whole since its fields
/// depend on its kind.
fn merge(base: &mut Value, user: Value) -> Result<(), CliError> {
    let Value::Object(user) = user else {
        return Err(CliError::Config("config file must hold a JSON object".into()));
    };
    let base = base.as_object_mut().expect("defaults are an object");
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(dst)), Value::Object(src)) if k == "params" || k == "grid" => dst.extend(src),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    Ok(())
}

/// Set a dotted key such as `params.omega0`.
fn set(cfg: &mut Value, key: &str, v: Value) {
    let mut node = cfg;
    let mut parts = key.split('.').peekable();
    while let Some(p) = parts.next() {
        let obj = node.as_object_mut().expect("config tables are objects");
        if parts.peek().is_none() {
            obj.insert(p.to_string(), v);
            return;
        }
        node = obj.entry(p).or_insert_with(|| Value::Object(Map::new()));
    }
}
