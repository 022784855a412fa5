//! Curve and spectrum tables, and their CSV/JSON rendering.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use sld_core::continuum::{continuum_q, infinite_alpha, secular_alpha, ContinuumModel, DispersionPoint};
use sld_core::discrete::{random_positions, regular_positions, sweep_dispersion, Placement};
use sld_core::scattering::{continuum_ensemble_t, spectrum, t_r_from_t};

use crate::config::{periods_of, Command, Model, PlacementConfig, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows of formatted cells plus the config that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Echoed in the header and the sidecar.
    pub config: Value,
    /// Extra facts about the run, such as grid points skipped at β poles.
    pub notes: serde_json::Map<String, Value>,
}

pub fn num(x: f64) -> String {
    // Adding 0.0 turns −0 into +0 so signed zeros print alike.
    format!("{:.12e}", x + 0.0)
}

impl Table {
    fn new(columns: Vec<&'static str>, config: Value) -> Self {
        Table { columns, rows: Vec::new(), config, notes: Default::default() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# sld {VERSION}\n# config: {}\n", self.config);
        for (k, v) in &self.notes {
            out += &format!("# {k}: {v}\n");
        }
        out += &self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out += &row.join(",");
            out.push('\n');
        }
        out
    }

    pub fn sidecar(&self, csv_name: &str) -> Value {
        json!({
            "sld_version": VERSION,
            "data": csv_name,
            "columns": self.columns,
            "rows": self.rows.len(),
            "config": self.config,
            "notes": self.notes,
        })
    }

    /// Write the CSV and, when asked, a `.json` sidecar next to it.
    pub fn write(&self, path: &Path, sidecar: bool) -> Result<(), CliError> {
        write_file(path, &self.to_csv())?;
        if sidecar {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let text = serde_json::to_string_pretty(&self.sidecar(&name)).expect("sidecar serializes");
            write_file(&sidecar_path(path), &(text + "\n"))?;
        }
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn run(cfg: &RunConfig) -> Result<Table, CliError> {
    match cfg.command {
        Command::Dispersion => dispersion(cfg),
        Command::Scatter => scatter(cfg),
    }
}

fn continuum_model(model: Model) -> Option<ContinuumModel> {
    match model {
        Model::Discrete => None,
        Model::ContinuumEit => Some(ContinuumModel::Eit),
        Model::ContinuumQuadratic => Some(ContinuumModel::DualVQuadratic),
        Model::ContinuumLinear => Some(ContinuumModel::DualVLinear),
        Model::ContinuumInfinite => Some(ContinuumModel::LambdaInfinite),
        Model::ContinuumTruncated => Some(ContinuumModel::Truncated),
    }
}

/// The root with Re q > 0, or with Im q ≥ 0 when Re q vanishes.
pub fn positive_root(pair: [DispersionPoint; 2]) -> DispersionPoint {
    let key = |p: &DispersionPoint| (p.q_over_n0.re, p.q_over_n0.im);
    if key(&pair[1]) > key(&pair[0]) {
        pair[1]
    } else {
        pair[0]
    }
}

/// Continuum curve on the grid, one positive root per δ.
pub fn continuum_curve(cfg: &RunConfig, deltas: &[f64]) -> Result<Vec<DispersionPoint>, CliError> {
    let model = continuum_model(cfg.model).expect("continuum model");
    sld_core::par_map(deltas, |&d| {
        continuum_q(&cfg.params, model, C64::new(d, 0.0), cfg.order).map(positive_root).map_err(|e| e.at(d))
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(CliError::from)
}

pub fn placement(cfg: &RunConfig) -> Result<Placement, CliError> {
    Ok(match cfg.placement {
        PlacementConfig::Regular { atoms } => regular_positions(atoms)?,
        PlacementConfig::Random { atoms, periods, seed } => random_positions(atoms, periods_of(periods)?, seed)?,
    })
}

fn dispersion(cfg: &RunConfig) -> Result<Table, CliError> {
    let deltas = cfg.grid.deltas()?;
    let mut table = Table::new(vec!["delta", "re_q_over_n0", "im_q_over_n0", "branch"], echo(cfg));
    let mut push = |p: &DispersionPoint| {
        table.rows.push(vec![num(p.delta.re), num(p.q_over_n0.re), num(p.q_over_n0.im), p.branch.to_string()]);
    };
    if cfg.model == Model::Discrete {
        let curve = sweep_dispersion(&cfg.params, &placement(cfg)?, &deltas)?;
        curve.bands.iter().flatten().for_each(&mut push);
        if !curve.skipped.is_empty() {
            let skipped: Vec<String> = curve.skipped.iter().map(|&d| num(d)).collect();
            table.notes.insert("skipped_deltas".into(), json!(skipped));
        }
    } else {
        continuum_curve(cfg, &deltas)?.iter().for_each(push);
    }
    Ok(table)
}

fn scatter(cfg: &RunConfig) -> Result<Table, CliError> {
    let deltas = cfg.grid.deltas()?;
    let mut table = Table::new(vec!["delta", "T_mean", "R_mean", "T_iqr", "R_iqr", "underflow_flag"], echo(cfg));
    let flag = |u: bool| if u { "1" } else { "0" }.to_string();
    if cfg.model == Model::Discrete {
        for s in spectrum(&cfg.params, &cfg.spectrum_spec()?, &deltas)? {
            table.rows.push(vec![num(s.delta), num(s.t_mean), num(s.r_mean), num(s.t_iqr), num(s.r_iqr), flag(s.underflow)]);
        }
        return Ok(table);
    }
    let n = cfg.ensemble_atoms()? as f64;
    let rows: Vec<Vec<String>> = sld_core::par_map(&deltas, |&d| {
        let delta = C64::new(d, 0.0);
        let alpha = match cfg.model {
            Model::ContinuumQuadratic => secular_alpha(&cfg.params, delta),
            _ => infinite_alpha(&cfg.params, delta),
        };
        let amp = alpha.and_then(|a| t_r_from_t(&continuum_ensemble_t(&a, n)?)).map_err(|e| e.at(d))?;
        let (t, r) = (amp.t.0[0][0].norm_sqr(), amp.r.0[0][0].norm_sqr());
        Ok(vec![num(d), num(t), num(r), num(0.0), num(0.0), flag(amp.underflow)])
    })
    .into_iter()
    .collect::<Result<_, sld_core::Error>>()?;
    table.rows = rows;
    Ok(table)
}

pub fn echo(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}
