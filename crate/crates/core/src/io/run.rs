//! Experiment orchestration: mesh, limits, sweep and checks, with every
//! artifact recorded in the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{emit_config, ExperimentConfig, ExperimentKind};
use super::manifest::{hash_file, Manifest, RunStatus, MANIFEST_FILE};
use crate::energy::GrowthBounds;
use crate::geometry::{mesh_to_string, Mesh2D, Region, RegionMap};
use crate::limit_lab::{
    check_fundamental_inequality, compute_limit_bundle, run_counterexample, run_lambda_sweep, sweep_csv, LimitBundle,
    LimitProblem, Regime, FUNDAMENTAL_TOL,
};
use crate::solver::{
    element_csv, export_solve, field_csv, minimize, write_json, write_text, BoundaryCondition, DiscreteField,
    Functional,
};
use crate::{Error, Result};

/// Relative size of `|∇w|` on A below which the perfect-conductor field
/// counts as constant there.
const CONSTANT_ON_A_TOL: f64 = 1e-8;
/// Number of records in the sweep tail checked for lower semicontinuity.
const TAIL: usize = 3;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub force: bool,
    pub threads: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub exit_code: i32,
}

/// Creates `dir`; refuses to reuse a directory holding a manifest unless
/// `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.join(MANIFEST_FILE).exists() && !force {
        return Err(Error::Config(format!(
            "{} already holds a run; pass --force to overwrite",
            dir.display()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<String>,
    checks: BTreeMap<String, bool>,
}

impl Artifacts<'_> {
    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        write_text(&self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }
}

#[derive(Serialize)]
struct LimitsSummary {
    regime: Regime,
    b_energy: f64,
    converged: bool,
    /// Largest `|∇w|` over A relative to the largest over the mesh.
    w_grad_a_rel: f64,
}

fn grad_max(mesh: &Mesh2D, regions: &RegionMap, v: &[f64], region: Option<Region>) -> f64 {
    (0..mesh.n_triangles())
        .filter(|&t| region.is_none_or(|r| regions.region(t) == r))
        .map(|t| {
            let g = mesh.gradient(t, v);
            g[0].hypot(g[1])
        })
        .fold(0.0, f64::max)
}

fn limits_stage(
    config: &ExperimentConfig,
    mesh: &Mesh2D,
    regions: &RegionMap,
    out: &mut Artifacts,
) -> Result<LimitBundle> {
    let bundle = compute_limit_bundle(
        mesh,
        regions,
        &config.beta,
        &config.alpha,
        config.p,
        config.q,
        &config.f,
        &config.settings,
    )?;
    let w_rel = grad_max(mesh, regions, &bundle.w.values, Some(Region::A))
        / grad_max(mesh, regions, &bundle.w.values, None).max(f64::MIN_POSITIVE);
    out.json(
        "limits.json",
        &LimitsSummary {
            regime: bundle.regime,
            b_energy: bundle.b_energy,
            converged: bundle.converged,
            w_grad_a_rel: w_rel,
        },
    )?;
    out.text("limit_field.csv", &field_csv(mesh, &bundle.limit)?)?;
    out.text("w_field.csv", &field_csv(mesh, &bundle.w)?)?;
    out.check("limits_converged", bundle.converged);
    if bundle.regime == Regime::PLessQ {
        out.check("w_constant_on_a", w_rel <= CONSTANT_ON_A_TOL);
    }
    Ok(bundle)
}

fn growth_bounds(config: &ExperimentConfig, mesh: &Mesh2D, regions: &RegionMap) -> Result<GrowthBounds> {
    let density = config.density_b()?;
    if let Some(b) = density.bounds() {
        return Ok(*b);
    }
    if config.density_b.is_some() {
        return Err(Error::Config("density_b needs `bounds` for the a priori checks".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in 0..mesh.n_triangles() {
        if regions.region(t) == Region::B {
            let b = config.beta.at(mesh.centroid(t));
            lo = lo.min(b);
            hi = hi.max(b);
        }
    }
    GrowthBounds::new(lo, hi, 1.0, config.p)
}

#[derive(Serialize)]
struct SweepChecks {
    all_converged: bool,
    bounds_ok: bool,
    fundamental: crate::limit_lab::FundamentalCheck,
}

fn sweep_stage(config: &ExperimentConfig, mesh: Mesh2D, regions: RegionMap, out: &mut Artifacts) -> Result<()> {
    let bundle = limits_stage(config, &mesh, &regions, out)?;
    let bounds_b = growth_bounds(config, &mesh, &regions)?;
    let problem = LimitProblem {
        density_b: config.density_b()?,
        density_a: config.density_a()?,
        beta: config.beta.clone(),
        alpha: config.alpha.clone(),
        p: config.p,
        q: config.q,
        f: config.f.clone(),
        bounds_b,
        settings: config.settings,
        mesh,
        regions,
    };
    let sweep = run_lambda_sweep(&problem, &bundle, &config.schedule, config.warm_start)?;
    out.text("sweep.csv", &sweep_csv(&sweep.records))?;
    if let Some(last) = &sweep.last {
        out.text("sweep_last_field.csv", &field_csv(&problem.mesh, &last.field)?)?;
    }
    let tail = &sweep.records[sweep.records.len().saturating_sub(TAIL)..];
    let fundamental = check_fundamental_inequality(
        tail,
        &problem.mesh,
        &problem.regions,
        &bundle.limit,
        &problem.beta,
        problem.p,
        FUNDAMENTAL_TOL,
    )?;
    let checks = SweepChecks {
        all_converged: sweep.records.iter().all(|r| r.converged),
        bounds_ok: sweep.records.iter().all(|r| r.grad_bound_ok && r.energy_bound_ok),
        fundamental,
    };
    out.json("sweep_checks.json", &checks)?;
    out.check("sweep_converged", checks.all_converged);
    out.check("a_priori_bounds", checks.bounds_ok);
    out.check("fundamental_inequality", checks.fundamental.ok);
    Ok(())
}

fn solve_stage(config: &ExperimentConfig, mesh: &Mesh2D, regions: &RegionMap, out: &mut Artifacts) -> Result<()> {
    let density_b = config.density_b()?;
    let density_a = config.density_a()?;
    let functional = Functional::new(
        mesh,
        regions,
        &density_b,
        &density_a,
        config.lambda,
        density_b.exponent(),
    )?;
    let bc = BoundaryCondition::dirichlet(mesh, |x| config.f.eval_at(x), config.inner_mode)?
        .with_zero_mean(config.zero_mean);
    let result = minimize(&functional, &bc, &config.settings)?;
    for path in export_solve(out.dir, "solve", mesh, regions, &result)? {
        out.files.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    out.check("solve_converged", result.converged);
    Ok(())
}

fn counterexample_stage(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let report = run_counterexample(&config.counterexample_params())?;
    out.json("counterexample.json", &report)?;
    out.check("counterexample_verdict", report.verdict);
    if let Some(c) = &report.control {
        out.check("control_without_oscillation", c.spread_ok && !c.verdict);
    }
    Ok(())
}

fn run_stages(config: &ExperimentConfig, out: &mut Artifacts) -> std::result::Result<(), String> {
    let stage = |name: &str, e: Error| format!("{name}: {e}");
    out.text("config.toml", &emit_config(config).map_err(|e| stage("config", e))?)
        .map_err(|e| stage("config", e))?;
    if config.experiment == ExperimentKind::Counterexample {
        return counterexample_stage(config, out).map_err(|e| stage("counterexample", e));
    }
    let (mesh, regions) = config.mesh().map_err(|e| stage("mesh", e))?;
    out.text("mesh.txt", &mesh_to_string(&mesh, &regions))
        .map_err(|e| stage("mesh", e))?;
    match config.experiment {
        ExperimentKind::Solve => solve_stage(config, &mesh, &regions, out).map_err(|e| stage("solve", e)),
        ExperimentKind::Limits => limits_stage(config, &mesh, &regions, out)
            .map(|_| ())
            .map_err(|e| stage("limits", e)),
        ExperimentKind::Sweep => sweep_stage(config, mesh, regions, out).map_err(|e| stage("sweep", e)),
        ExperimentKind::Counterexample => unreachable!(),
    }
}

/// Runs the configured pipeline into `options.out_dir` and writes the
/// manifest. Stage failures still produce a manifest with the failure
/// recorded; only an unusable output directory is returned as an error.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    prepare_output_dir(&options.out_dir, options.force)?;
    let mut out = Artifacts {
        dir: &options.out_dir,
        files: Vec::new(),
        checks: BTreeMap::new(),
    };
    let failure = run_stages(config, &mut out).err();
    let status = match (&failure, out.checks.values().all(|&ok| ok)) {
        (Some(_), _) => RunStatus::Failed,
        (None, true) => RunStatus::Passed,
        (None, false) => RunStatus::ChecksFailed,
    };
    let files = out
        .files
        .iter()
        .map(|f| hash_file(&options.out_dir, f))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "plimit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment,
        status,
        checks: out.checks,
        failure,
        threads: options.threads,
        seed: options.seed,
        files,
    };
    write_json(&options.out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutcome {
        exit_code: status.exit_code(),
        manifest,
    })
}

/// Writes a single field with its per-triangle gradients, for subcommands
/// that export fields outside a full run.
pub fn export_field(
    dir: &Path,
    stem: &str,
    mesh: &Mesh2D,
    regions: &RegionMap,
    field: &DiscreteField,
) -> Result<Vec<PathBuf>> {
    let grads: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let g = mesh.gradient(t, &field.values);
            g[0].hypot(g[1])
        })
        .collect();
    let a = dir.join(format!("{stem}_field.csv"));
    let b = dir.join(format!("{stem}_elements.csv"));
    write_text(&a, &field_csv(mesh, field)?)?;
    write_text(&b, &element_csv(mesh, regions, &grads)?)?;
    Ok(vec![a, b])
}
