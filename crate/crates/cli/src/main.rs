//! `plimit`: meshes, solves, limit fields, λ sweeps, the oscillating
//! counterexample and density validation from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plimit_core::energy::{validate_assumptions, SampleGrid};
use plimit_core::geometry::{build_domain, write_mesh, DomainSpec};
use plimit_core::io::{
    parse_config, parse_config_str, read_density, run_experiment, ExperimentConfig, ExperimentKind, RunOptions,
};
use plimit_core::{Error, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "plimit",
    version,
    about = "Two-phase quasilinear conductivity and its large-data limits"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output directory (or file, for `mesh` and `validate-energy`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite an output directory that already holds a run.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled validation points.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh from a domain spec file.
    Mesh {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Minimize the functional at the configured λ.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the limit fields.
    Limits {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a λ sweep against the limit fields.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the oscillating-density counterexample.
    Counterexample {
        /// Outer radius of the annulus.
        #[arg(long, default_value_t = 10.0)]
        r: f64,
        /// Ratio of the oscillation windows.
        #[arg(long = "L", default_value_t = 11.0)]
        window_ratio: f64,
        /// Number of members of each λ family.
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        n_radial: usize,
        /// Growth exponent of the inner phase.
        #[arg(long, default_value_t = 3.0)]
        q: f64,
        /// Skip the non-oscillating control run.
        #[arg(long)]
        no_control: bool,
    },
    /// Check a density file against the structural assumptions.
    ValidateEnergy {
        #[arg(long)]
        density: PathBuf,
        /// Number of sampled points.
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// Points are drawn from `[-extent, extent]²`.
        #[arg(long, default_value_t = 10.0)]
        extent: f64,
        /// Largest sampled field magnitude.
        #[arg(long, default_value_t = 1e3)]
        e_max: f64,
        /// Decades covered by the asymptotic-weight schedule.
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
    },
}

/// Failure of the command itself, reported with exit code 2.
fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn run_config(mut config: ExperimentConfig, kind: ExperimentKind, global: &Global, threads: usize) -> ExitCode {
    if config.experiment != kind {
        return fail(format!(
            "config declares experiment {:?}, not {kind:?}",
            config.experiment
        ));
    }
    let out_dir = global
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(|p| config.resolve(p)))
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}", kind_name(kind))));
    config.output = None;
    let options = RunOptions {
        out_dir,
        force: global.force,
        threads,
        seed: global.seed,
    };
    match run_experiment(&config, &options) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            println!("status: {:?}", m.status);
            for (name, ok) in &m.checks {
                println!("  {name}: {}", if *ok { "ok" } else { "FAILED" });
            }
            if let Some(f) = &m.failure {
                eprintln!("error: {f}");
            }
            println!("output: {}", options.out_dir.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => fail(e),
    }
}

fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Solve => "solve",
        ExperimentKind::Limits => "limits",
        ExperimentKind::Sweep => "sweep",
        ExperimentKind::Counterexample => "counterexample",
    }
}

fn mesh_command(spec: &Path, out: Option<&Path>) -> Result<String, Error> {
    let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
    let domain: DomainSpec = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
    let (mesh, regions) = build_domain(&domain)?;
    let out = out.map_or_else(|| PathBuf::from("mesh.txt"), Path::to_path_buf);
    write_mesh(&out, &mesh, &regions)?;
    Ok(format!(
        "{} nodes, {} triangles -> {}",
        mesh.n_nodes(),
        mesh.n_triangles(),
        out.display()
    ))
}

fn validate_command(
    density: &Path,
    points: usize,
    extent: f64,
    e_max: f64,
    decades: f64,
    seed: u64,
) -> Result<(String, bool), Error> {
    if points == 0 || !(extent > 0.0) || !(e_max > 1e-3) || !(decades > 0.0) {
        return Err(Error::Parameter(
            "need points >= 1, extent > 0, e_max > 1e-3 and decades > 0".into(),
        ));
    }
    let spec = read_density(density)?;
    let d = spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<Point> = (0..points)
        .map(|_| [rng.random_range(-extent..=extent), rng.random_range(-extent..=extent)])
        .collect();
    let grid = SampleGrid::geometric(sample, 1e-3, e_max, 64);
    let report = validate_assumptions(&d, &grid, decades)?;
    Ok((serde_json::to_string_pretty(&report)?, report.verdict))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return fail("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(e);
        }
    }
    let threads = rayon::current_num_threads();
    match &cli.command {
        Command::Mesh { spec } => match mesh_command(spec, g.out.as_deref()) {
            Ok(msg) => {
                println!("{msg}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Solve { config } | Command::Limits { config } | Command::Sweep { config } => {
            let kind = match &cli.command {
                Command::Solve { .. } => ExperimentKind::Solve,
                Command::Limits { .. } => ExperimentKind::Limits,
                _ => ExperimentKind::Sweep,
            };
            match parse_config(config) {
                Ok(c) => run_config(c, kind, g, threads),
                Err(e) => fail(e),
            }
        }
        Command::Counterexample {
            r,
            window_ratio,
            n,
            n_radial,
            q,
            no_control,
        } => {
            let text = format!(
                "experiment = \"counterexample\"\n[counterexample]\nr = {r:?}\nwindow_ratio = {window_ratio:?}\nn_max = {n}\nn_radial = {n_radial}\nq = {q:?}\nrun_control = {}\n",
                !no_control
            );
            match parse_config_str(&text, Path::new(".")) {
                Ok(c) => run_config(c, ExperimentKind::Counterexample, g, threads),
                Err(e) => fail(e),
            }
        }
        Command::ValidateEnergy {
            density,
            points,
            extent,
            e_max,
            decades,
        } => match validate_command(density, *points, *extent, *e_max, *decades, g.seed.unwrap_or(0)) {
            Ok((json, verdict)) => {
                let written = match &g.out {
                    Some(path) => std::fs::write(path, &json).map_err(|e| Error::io(path, e)),
                    None => {
                        println!("{json}");
                        Ok(())
                    }
                };
                match written {
                    Err(e) => fail(e),
                    Ok(()) if verdict => ExitCode::SUCCESS,
                    Ok(()) => {
                        eprintln!("density violates at least one sampled assumption");
                        ExitCode::from(1)
                    }
                }
            }
            Err(e) => fail(e),
        },
    }
}
