//! λ sweeps of the rescaled energy and their checks against the limits.

use serde::{Deserialize, Serialize};

use super::bundle::{weighted_b_energy, LimitBundle, Regime};
use crate::energy::{EnergyDensity, GrowthBounds, Weight};
use crate::expr::Expr;
use crate::geometry::{BoundaryTag, Mesh2D, Region, RegionMap};
use crate::solver::{
    minimize_from, trace_on, wp_distance, BoundaryCondition, DiscreteField, Functional, InnerMode, RegionSubset,
    SolveResult, SolveSettings, WpDistance,
};
use crate::{Error, Result};

/// Relative slack of the a priori bound checks.
pub const BOUND_SLACK: f64 = 1e-9;
/// Default relative tolerance of the lower-semicontinuity check.
pub const FUNDAMENTAL_TOL: f64 = 0.02;

/// Everything a λ sweep needs.
#[derive(Clone, Debug)]
pub struct LimitProblem {
    pub mesh: Mesh2D,
    pub regions: RegionMap,
    pub density_b: EnergyDensity,
    pub density_a: EnergyDensity,
    /// Asymptotic weights and exponents of the two phases.
    pub beta: Weight,
    pub alpha: Weight,
    pub p: f64,
    pub q: f64,
    pub f: Expr,
    /// Growth bounds of the B density with exponent `p`.
    pub bounds_b: GrowthBounds,
    pub settings: SolveSettings,
}

impl LimitProblem {
    /// Pure power laws `β E^p` in B and `α E^q` in A; the growth bounds use
    /// the extreme values of `β` over B and `E₀ = 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn power_law(
        mesh: Mesh2D,
        regions: RegionMap,
        beta: Weight,
        p: f64,
        alpha: Weight,
        q: f64,
        f: Expr,
        settings: SolveSettings,
    ) -> Result<Self> {
        let density_b = EnergyDensity::power_law(beta.clone(), p)?;
        let density_a = EnergyDensity::power_law(alpha.clone(), q)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for t in 0..mesh.n_triangles() {
            if regions.region(t) == Region::B {
                let b = beta.at(mesh.centroid(t));
                lo = lo.min(b);
                hi = hi.max(b);
            }
        }
        let bounds_b = GrowthBounds::new(lo, hi, 1.0, p)?;
        Ok(Self {
            mesh,
            regions,
            density_b,
            density_a,
            beta,
            alpha,
            p,
            q,
            f,
            bounds_b,
            settings,
        })
    }

    pub fn regime(&self) -> Result<Regime> {
        Regime::of(self.p, self.q)
    }

    pub fn functional(&self, lambda: f64) -> Result<Functional<'_>> {
        Functional::new(
            &self.mesh,
            &self.regions,
            &self.density_b,
            &self.density_a,
            lambda,
            self.p,
        )
    }

    pub fn boundary_condition(&self) -> Result<BoundaryCondition> {
        BoundaryCondition::dirichlet(&self.mesh, |x| self.f.eval_at(x), InnerMode::None)
    }
}

/// One point of a λ sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    /// `G^λ(v^λ)`.
    pub g_value: f64,
    /// `λ^{-p}∫_B Q_B(x, λ|∇v^λ|)`.
    pub b_term: f64,
    /// `∫_B |∇v^λ|^p`.
    pub grad_p_b: f64,
    /// Distance on B to the B-side limit (exponent p).
    pub dist_to_limit_b: WpDistance,
    /// Distance on A to the A-side limit (exponent q); against the constant
    /// limit its gradient part is the `L^q(A)` norm of `∇v^λ`.
    pub dist_to_limit_a: WpDistance,
    /// Distance on the whole mesh (exponent p).
    pub dist_to_limit_all: WpDistance,
    pub max_grad_a: f64,
    /// Lumped `L^q` distance of interface traces.
    pub trace_gap: f64,
    pub grad_bound_ok: bool,
    pub energy_bound_ok: bool,
    pub grad_bound_slack: f64,
    pub energy_bound_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl SweepRecord {
    /// Column order of the sweep CSV.
    pub const CSV_HEADER: &'static str = "lambda,g_value,b_term,grad_p_b,dist_b_total,dist_b_grad,dist_a_total,dist_a_grad,dist_all_total,dist_all_grad,max_grad_a,trace_gap,grad_bound_ok,energy_bound_ok,grad_bound_slack,energy_bound_slack,converged,iterations,residual";

    pub fn csv_row(&self) -> String {
        let f = |x: f64| format!("{x:.16e}");
        [
            f(self.lambda),
            f(self.g_value),
            f(self.b_term),
            f(self.grad_p_b),
            f(self.dist_to_limit_b.total),
            f(self.dist_to_limit_b.grad_part),
            f(self.dist_to_limit_a.total),
            f(self.dist_to_limit_a.grad_part),
            f(self.dist_to_limit_all.total),
            f(self.dist_to_limit_all.grad_part),
            f(self.max_grad_a),
            f(self.trace_gap),
            self.grad_bound_ok.to_string(),
            self.energy_bound_ok.to_string(),
            f(self.grad_bound_slack),
            f(self.energy_bound_slack),
            self.converged.to_string(),
            self.iterations.to_string(),
            f(self.residual),
        ]
        .join(",")
    }
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut s = String::from(SweepRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Records and the solution at the largest λ.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub last: Option<SolveResult>,
}

/// Outcome of the two a priori bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub grad_ok: bool,
    pub energy_ok: bool,
    /// `rhs − lhs` of each bound.
    pub grad_slack: f64,
    pub energy_slack: f64,
}

/// Checks `∫_B|∇v^λ|^p ≤ Q̄/Q̲(∫_B|∇w|^p + E₀^p|B|/λ^p) + E₀^p|B|/λ^p` and
/// `G^λ(v^λ) ≤ Q̄/E₀^p ∫_B|∇w|^p + Q̄|B|/λ^p` for the record's λ, with `w`
/// the perfect-conductor limit.
pub fn check_a_priori_bounds(
    record: &SweepRecord,
    w: &DiscreteField,
    bounds: &GrowthBounds,
    mesh: &Mesh2D,
    regions: &RegionMap,
) -> BoundCheck {
    let p = bounds.exponent;
    let w_term = weighted_b_energy(mesh, regions, &Weight::Constant(1.0), p, &w.values);
    let area_b = regions.area(mesh, Region::B);
    let e0p = bounds.e0.powf(p);
    let lp = record.lambda.powf(p);
    let ratio = bounds.q_upper / bounds.q_lower;
    let rhs_grad = ratio * (w_term + e0p / lp * area_b) + e0p / lp * area_b;
    let rhs_energy = bounds.q_upper / e0p * w_term + bounds.q_upper / lp * area_b;
    BoundCheck {
        grad_ok: record.grad_p_b <= rhs_grad * (1.0 + BOUND_SLACK),
        energy_ok: record.g_value <= rhs_energy * (1.0 + BOUND_SLACK),
        grad_slack: rhs_grad - record.grad_p_b,
        energy_slack: rhs_energy - record.g_value,
    }
}

/// Lower semicontinuity along the tail of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalCheck {
    /// `∫_B β|∇v|^p` of the limit.
    pub lhs: f64,
    /// Smallest `λ^{-p}∫_B Q_B(x, λ|∇v^λ|)` over the tail.
    pub rhs_min: f64,
    /// `|lhs − rhs_min|/lhs`, zero when `lhs = 0`.
    pub gap_rel: f64,
    pub ok: bool,
}

/// `lhs ≤ rhs_min + tol_rel·lhs` over at least three tail records.
pub fn check_fundamental_inequality(
    tail: &[SweepRecord],
    mesh: &Mesh2D,
    regions: &RegionMap,
    limit: &DiscreteField,
    beta: &Weight,
    p: f64,
    tol_rel: f64,
) -> Result<FundamentalCheck> {
    if tail.len() < 3 {
        return Err(Error::Config(format!(
            "the inequality check needs at least 3 tail records, got {}",
            tail.len()
        )));
    }
    limit.check_len(mesh)?;
    let lhs = weighted_b_energy(mesh, regions, beta, p, &limit.values);
    let rhs_min = tail.iter().map(|r| r.b_term).fold(f64::INFINITY, f64::min);
    let gap_rel = if lhs > 0.0 { (lhs - rhs_min).abs() / lhs } else { 0.0 };
    Ok(FundamentalCheck {
        lhs,
        rhs_min,
        gap_rel,
        ok: lhs <= rhs_min + tol_rel * lhs,
    })
}

fn region_grad_p(mesh: &Mesh2D, regions: &RegionMap, v: &[f64], p: f64, region: Region) -> (f64, f64) {
    let (mut sum, mut max) = (0.0, 0.0f64);
    for t in 0..mesh.n_triangles() {
        if regions.region(t) == region {
            let g = mesh.gradient(t, v);
            let s = g[0].hypot(g[1]);
            sum += mesh.area(t) * s.powf(p);
            max = max.max(s);
        }
    }
    (sum, max)
}

fn record_for(
    problem: &LimitProblem,
    bundle: &LimitBundle,
    lambda: f64,
    result: &SolveResult,
    functional: &Functional,
) -> Result<SweepRecord> {
    let (mesh, regions) = (&problem.mesh, &problem.regions);
    let v = &result.field;
    let b_term = functional.energy_on(&v.values, Region::B)?;
    let (grad_p_b, _) = region_grad_p(mesh, regions, &v.values, problem.p, Region::B);
    let (_, max_grad_a) = region_grad_p(mesh, regions, &v.values, problem.q, Region::A);
    let dist_b = wp_distance(mesh, regions, v, &bundle.limit, problem.p, RegionSubset::B)?;
    let dist_a = wp_distance(mesh, regions, v, &bundle.limit, problem.q, RegionSubset::A)?;
    let dist_all = wp_distance(mesh, regions, v, &bundle.limit, problem.p, RegionSubset::All)?;
    let trace_gap = trace_on(mesh, BoundaryTag::Inner, v)?
        .lq_distance(&trace_on(mesh, BoundaryTag::Inner, &bundle.limit)?, problem.q)?;
    let mut record = SweepRecord {
        lambda,
        g_value: result.energy,
        b_term,
        grad_p_b,
        dist_to_limit_b: dist_b,
        dist_to_limit_a: dist_a,
        dist_to_limit_all: dist_all,
        max_grad_a,
        trace_gap,
        grad_bound_ok: false,
        energy_bound_ok: false,
        grad_bound_slack: 0.0,
        energy_bound_slack: 0.0,
        converged: result.converged,
        iterations: result.iterations,
        residual: result.final_residual,
    };
    let check = check_a_priori_bounds(&record, &bundle.w, &problem.bounds_b, mesh, regions);
    record.grad_bound_ok = check.grad_ok;
    record.energy_bound_ok = check.energy_ok;
    record.grad_bound_slack = check.grad_slack;
    record.energy_bound_slack = check.energy_slack;
    Ok(record)
}

/// Solves the normalized problem at each λ of an increasing schedule,
/// warm-starting each solve from the previous one when `warm_start` is set.
/// A solve that does not converge is recorded and the sweep continues.
pub fn run_lambda_sweep(
    problem: &LimitProblem,
    bundle: &LimitBundle,
    schedule: &[f64],
    warm_start: bool,
) -> Result<Sweep> {
    if schedule.len() < 4 {
        return Err(Error::Config(format!(
            "a sweep needs at least 4 values of lambda, got {}",
            schedule.len()
        )));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) || !(schedule[0] > 0.0) {
        return Err(Error::Config(
            "lambda schedule must be positive and strictly increasing".into(),
        ));
    }
    let bc = problem.boundary_condition()?;
    let mut records = Vec::with_capacity(schedule.len());
    let mut last: Option<SolveResult> = None;
    for &lambda in schedule {
        let functional = problem.functional(lambda)?;
        let start = if warm_start {
            last.as_ref().map(|r| r.field.values.as_slice())
        } else {
            None
        };
        let result = minimize_from(&functional, &bc, &problem.settings, start)?;
        records.push(record_for(problem, bundle, lambda, &result, &functional)?);
        last = Some(result);
    }
    Ok(Sweep { records, last })
}
