use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sld_cli::config::{Command, Model, PlacementConfig, RunConfig, Spacing};
use sld_cli::{configure_threads, figures, run, CliError};
use sld_core::schemes::Scheme;

/// Stationary-light dispersion relations and scattering spectra.
#[derive(Parser)]
#[command(name = "sld", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bloch vector q/n0 against the two-photon detuning.
    Dispersion(RunArgs),
    /// Transmittance and reflectance of a finite ensemble.
    Scatter(RunArgs),
    /// Regenerate the data for one figure into a directory.
    Figure(FigureArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with RunConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write a JSON sidecar next to the CSV.
    #[arg(long)]
    json: bool,
    /// lambda, dual-v or dual-color.
    #[arg(long)]
    scheme: Option<String>,
    /// discrete, continuum-eit, continuum-quadratic, continuum-linear,
    /// continuum-infinite or continuum-truncated.
    #[arg(long)]
    model: Option<String>,
    /// regular:N_u, random:N_u:n_u:seed, or random:N_u:seed (length from --k0-over-n0).
    #[arg(long)]
    placement: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_1d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k0_over_n0: Option<f64>,
    /// Fourier truncation order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// log or linear.
    #[arg(long)]
    spacing: Option<String>,
    /// Atoms in a regular ensemble or continuum slab.
    #[arg(long)]
    n_total: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    input_mode: Option<usize>,
    #[arg(long)]
    output_mode: Option<usize>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig2, fig3, fig4, fig5 or fig6.
    name: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write a JSON sidecar per CSV.
    #[arg(long)]
    json: bool,
    /// Realizations for random spectra (default 100).
    #[arg(long)]
    realizations: Option<usize>,
}

fn overrides(a: &RunArgs) -> Result<Vec<(&'static str, Value)>, CliError> {
    let mut v: Vec<(&'static str, Value)> = Vec::new();
    if let Some(s) = &a.scheme {
        v.push(("params.scheme", json!(s.parse::<Scheme>()?)));
    }
    if let Some(m) = &a.model {
        v.push(("model", json!(m.parse::<Model>()?)));
    }
    if let Some(p) = &a.placement {
        v.push(("placement", json!(p.parse::<PlacementConfig>()?)));
    }
    if let Some(s) = &a.spacing {
        v.push(("grid.spacing", json!(s.parse::<Spacing>()?)));
    }
    let floats = [
        ("params.gamma_1d", a.gamma_1d),
        ("params.gamma_prime", a.gamma_prime),
        ("params.delta_c", a.delta_c),
        ("params.omega0", a.omega0),
        ("params.delta_d", a.delta_d),
        ("params.phi", a.phi),
        ("params.k0_over_n0", a.k0_over_n0),
        ("grid.min", a.delta_min),
        ("grid.max", a.delta_max),
    ];
    v.extend(floats.into_iter().filter_map(|(k, x)| x.map(|x| (k, json!(x)))));
    let counts = [
        ("order", a.order),
        ("grid.points", a.points),
        ("n_total", a.n_total),
        ("realizations", a.realizations),
        ("input_mode", a.input_mode),
        ("output_mode", a.output_mode),
    ];
    v.extend(counts.into_iter().filter_map(|(k, x)| x.map(|x| (k, json!(x)))));
    Ok(v)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (command, args) = match cli.command {
        Cmd::Figure(f) => return figures::write_figure(&f.name, &f.out, f.realizations, f.json),
        Cmd::Dispersion(a) => (Command::Dispersion, a),
        Cmd::Scatter(a) => (Command::Scatter, a),
    };
    let cfg = RunConfig::resolve(command, args.config.as_deref(), &overrides(&args)?)?;
    run::run(&cfg)?.write(&args.out, args.json)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sld: {e}");
            if let CliError::Numerics(inner) = &e {
                if let Some(d) = inner.delta() {
                    eprintln!("sld: offending delta = {d:e}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
