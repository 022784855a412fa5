//! Presets that regenerate the data behind each figure as a directory of CSV
//! files plus `manifest.json`.

use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};
use sld_core::scattering::resonance_locations;
use sld_core::schemes::Scheme;

use crate::config::{Command, Grid, Model, PlacementConfig, RunConfig, DEFAULT_N_TOTAL};
use crate::run::{self, continuum_curve, num, Table, VERSION};
use crate::CliError;

pub const NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

struct Job {
    file: String,
    description: String,
    config: RunConfig,
}

fn job(file: impl Into<String>, description: impl Into<String>, config: RunConfig) -> Job {
    Job { file: file.into(), description: description.into(), config }
}

fn curve(model: Model, scheme: Scheme, grid: Grid) -> RunConfig {
    let mut c = RunConfig::defaults(Command::Dispersion);
    c.model = model;
    c.params.scheme = scheme;
    c.grid = grid;
    c
}

fn discrete(scheme: Scheme, placement: PlacementConfig, grid: Grid) -> RunConfig {
    RunConfig { placement, ..curve(Model::Discrete, scheme, grid) }
}

fn spectrum(scheme: Scheme, placement: PlacementConfig, grid: Grid, realizations: usize) -> RunConfig {
    let mut c = RunConfig::defaults(Command::Scatter);
    c.params.scheme = scheme;
    c.placement = placement;
    c.grid = grid;
    c.realizations = realizations;
    c
}

/// The continuum curves most figures draw for reference.
fn references(grid: Grid) -> Vec<Job> {
    vec![
        job("eit.csv", "EIT continuum", curve(Model::ContinuumEit, Scheme::Lambda, grid)),
        job("dualv_quadratic.csv", "dual-V quadratic continuum", curve(Model::ContinuumQuadratic, Scheme::DualV, grid)),
        job("lambda_infinite.csv", "cold Lambda continuum, all Fourier orders", curve(Model::ContinuumInfinite, Scheme::Lambda, grid)),
    ]
}

const RANDOM_CELL: PlacementConfig = PlacementConfig::Random { atoms: 10_000, periods: Some(5_000), seed: 42 };
const RANDOM_ENSEMBLE: PlacementConfig = PlacementConfig::Random { atoms: DEFAULT_N_TOTAL, periods: Some(20_000), seed: 1 };

fn jobs(name: &str, realizations: usize) -> Result<Vec<Job>, CliError> {
    Ok(match name {
        "fig2" => {
            let grid = Grid::log(1e-6, 1.0, 601);
            let mut v = references(grid);
            for order in [1, 2, 3, 4, 5, 6, 25] {
                let mut c = curve(Model::ContinuumTruncated, Scheme::Lambda, grid);
                c.order = order;
                v.push(job(format!("truncation_order_{order}.csv"), format!("Lambda truncation of order {order}"), c));
            }
            let mut c = curve(Model::ContinuumTruncated, Scheme::DualColor, grid);
            c.params.delta_d = 1.0;
            v.push(job("dual_color.csv", "dual-color truncation, delta_d = 1", c));
            v
        }
        "fig3" => {
            let grid = Grid::log(1e-6, 1e-1, 400);
            let mut v = references(grid);
            v.push(job("dualv_linear.csv", "dual-V linear continuum", curve(Model::ContinuumLinear, Scheme::DualV, grid)));
            v.push(job("lambda_random.csv", "Lambda, random cell of 1e4 atoms", discrete(Scheme::Lambda, RANDOM_CELL, grid)));
            v.push(job("dualv_random.csv", "dual-V, random cell of 1e4 atoms (two bands)", discrete(Scheme::DualV, RANDOM_CELL, grid)));
            v
        }
        "fig4" => {
            let grid = Grid::log(1e-7, 1e-1, 601);
            let mut v = references(grid);
            for n_u in [2usize, 4, 8, 16, 32] {
                let cell = PlacementConfig::Regular { atoms: n_u };
                v.push(job(format!("lambda_regular_nu{n_u}.csv"), format!("regular Lambda lattice, N_u = {n_u}, phi = 0"), discrete(Scheme::Lambda, cell, grid)));
                let mut c = discrete(Scheme::Lambda, cell, grid);
                c.params.phi = PI / (2.0 * n_u as f64);
                v.push(job(format!("lambda_regular_nu{n_u}_shifted.csv"), format!("regular Lambda lattice, N_u = {n_u}, phi = pi/(2 N_u)"), c));
            }
            v
        }
        "fig5" => {
            let grid = Grid::linear(-0.05, 0.05, 501);
            vec![
                job("lambda_regular_spectrum.csv", "regular Lambda, N_u = 2, N = 4e4", spectrum(Scheme::Lambda, PlacementConfig::Regular { atoms: 2 }, grid, 1)),
                job("lambda_random_spectrum.csv", format!("random Lambda, N = 4e4, mean of {realizations} realizations"), spectrum(Scheme::Lambda, RANDOM_ENSEMBLE, grid, realizations)),
            ]
        }
        "fig6" => {
            let zoom = Grid::linear(-0.02, 0.005, 1001);
            let mut dual = spectrum(Scheme::DualV, RANDOM_ENSEMBLE, zoom, realizations);
            dual.params.omega0 *= 2f64.sqrt();
            dual.output_mode = 1;
            let fine = Grid::log(1e-5, 1e-2, 2000);
            vec![
                job("lambda_regular_spectrum.csv", "regular Lambda, N_u = 2, N = 4e4", spectrum(Scheme::Lambda, PlacementConfig::Regular { atoms: 2 }, zoom, 1)),
                job("lambda_random_spectrum.csv", format!("random Lambda, N = 4e4, mean of {realizations} realizations"), spectrum(Scheme::Lambda, RANDOM_ENSEMBLE, zoom, realizations)),
                job("dualv_random_spectrum.csv", "random dual-V, drive times sqrt 2, sigma+ in, sigma- reflected", dual),
                job("lambda_regular_dispersion.csv", "regular Lambda, N_u = 2, discrete", discrete(Scheme::Lambda, PlacementConfig::Regular { atoms: 2 }, fine)),
                job("lambda_random_dispersion.csv", "random Lambda via the cold Lambda continuum", curve(Model::ContinuumInfinite, Scheme::Lambda, fine)),
            ]
        }
        other => return Err(CliError::Config(format!("unknown figure '{other}' (expected one of {})", NAMES.join(", ")))),
    })
}

/// Re q/n₀ = mπ/N crossings of the two fig6 dispersion curves.
fn resonances(regular: &RunConfig, random: &RunConfig) -> Result<Table, CliError> {
    let deltas = regular.grid.deltas()?;
    let reg = sld_core::discrete::sweep_dispersion(&regular.params, &run::placement(regular)?, &deltas)?;
    let cont = continuum_curve(random, &deltas)?;
    let mut t = Table {
        columns: vec!["curve", "m", "delta"],
        rows: Vec::new(),
        config: json!({ "n_total": DEFAULT_N_TOTAL, "sources": ["lambda_regular_dispersion.csv", "lambda_random_dispersion.csv"] }),
        notes: Default::default(),
    };
    for (label, band) in [("regular", reg.band(0)), ("random", &cont[..])] {
        for (m, d) in resonance_locations(band, DEFAULT_N_TOTAL).into_iter().enumerate() {
            t.rows.push(vec![label.to_string(), (m + 1).to_string(), num(d)]);
        }
    }
    Ok(t)
}

/// Write every curve of `name` into `dir`.
pub fn write_figure(name: &str, dir: &Path, realizations: Option<usize>, sidecar: bool) -> Result<(), CliError> {
    let jobs = jobs(name, realizations.unwrap_or(100))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut files: Vec<Value> = Vec::new();
    for j in &jobs {
        j.config.validate()?;
        run::run(&j.config)?.write(&dir.join(&j.file), sidecar)?;
        files.push(json!({ "file": j.file, "description": j.description, "config": run::echo(&j.config) }));
    }
    if name == "fig6" {
        let t = resonances(&jobs[3].config, &jobs[4].config)?;
        t.write(&dir.join("resonances.csv"), sidecar)?;
        files.push(json!({ "file": "resonances.csv", "description": "Re q/n0 = m pi/N crossings marking transmission resonances", "config": t.config }));
    }
    let manifest = json!({ "figure": name, "sld_version": VERSION, "files": files });
    run::write_file(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))
}
