//! Command-line driver: configure a run from a key-value file plus flag
//! overrides, adapt the mesh, and write the requested artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 validity
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use homesh::{run_adapt, Error, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "homesh",
    about = "High-order 2D mesh r-adaptation to metric-derived targets",
    version
)]
struct Cli {
    /// Key-value configuration file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Mesh source: fig2, fig3, unit-square:<n>:<p>, quadrant:<h>:<p>, or a
    /// mesh file path. Presets also select their metric.
    #[arg(long)]
    mesh: Option<String>,

    /// Metric field: identity, isotropic, or ring.
    #[arg(long)]
    metric: Option<String>,

    /// Shape modulus.
    #[arg(long)]
    mu: Option<f64>,

    /// Volume modulus.
    #[arg(long)]
    lambda: Option<f64>,

    #[arg(long)]
    max_sweeps: Option<usize>,

    /// Sweep-order shuffle seed; 0 keeps the deterministic lexicographic order.
    #[arg(long)]
    seed: Option<u64>,

    /// Where to write the adapted mesh.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Where to write the plain-text run report.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Figure prefix: writes <prefix>-before.svg and <prefix>-after.svg.
    #[arg(long)]
    svg: Option<String>,

    /// Polyline segments per element edge in figures.
    #[arg(long)]
    samples_per_edge: Option<usize>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // Mesh first: presets reset the metric, explicit flags then override.
    if let Some(spec) = &cli.mesh {
        config.apply_mesh_spec(spec)?;
    }
    if let Some(spec) = &cli.metric {
        config.apply_metric_spec(spec)?;
    }
    if let Some(mu) = cli.mu {
        config.constants.mu = mu;
    }
    if let Some(lambda) = cli.lambda {
        config.constants.lambda = lambda;
    }
    if let Some(n) = cli.max_sweeps {
        config.optimizer.max_sweeps = n;
    }
    if let Some(seed) = cli.seed {
        config.optimizer.rng_seed = seed;
    }
    if let Some(path) = &cli.out {
        config.out_mesh = Some(path.clone());
    }
    if let Some(path) = &cli.report {
        config.report = Some(path.clone());
    }
    if let Some(prefix) = &cli.svg {
        config.svg_before = Some(PathBuf::from(format!("{prefix}-before.svg")));
        config.svg_after = Some(PathBuf::from(format!("{prefix}-after.svg")));
    }
    if let Some(s) = cli.samples_per_edge {
        config.samples_per_edge = s;
    }
    Ok(config)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Unsupported(_) => 1,
        Error::Io(_) | Error::Parse { .. } => 2,
        Error::InvalidMesh(_) | Error::Geometry(_) | Error::Singular(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; everything else is
            // a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match run_adapt(&config) {
        Ok((_, report)) => {
            print!("{}", homesh::io::report_to_string(&report));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
