//! The oscillating-density counterexample on the annulus `D_r` with `A = D₁`:
//! normalized energies sampled at the two λ families stay below `ℓ₁` and
//! above `ℓ₂`, so the energies have no limit.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::validate::gauss_legendre;
use crate::energy::{build_oscillating_spec, EnergyDensity, Weight};
use crate::geometry::{build_domain, DomainSpec, Mesh2D, Region, RegionMap};
use crate::solver::{minimize, BoundaryCondition, Functional, InnerMode, SolveSettings};
use crate::{Error, Result};

/// Radial panels of the limit-energy quadrature.
const RADIAL_PANELS: usize = 32;
/// Angular panels of the limit-energy quadrature.
const ANGULAR_PANELS: usize = 8;
/// Agreement required between the quadrature and its doubled-order rerun.
const SELF_CHECK_TOL: f64 = 1e-10;

/// `ℓ₁`, `ℓ₂` and the four Dirichlet integrals they are built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEnergies {
    pub r: f64,
    pub limit_weak: f64,
    pub limit_strong: f64,
    /// `∫|∇v|²` of the tied-constant field over `D_r∖D₂` and `D₂∖D₁`.
    pub v_outer: f64,
    pub v_inner: f64,
    /// `∫|∇w|²` of the two-layer field over `D_r∖D₂` and `D₂∖D₁`.
    pub w_outer: f64,
    pub w_inner: f64,
    /// Largest relative change of the integrals under doubled order.
    pub self_check_rel: f64,
}

/// `∫_{a<ρ<b} |∇((Aρ + B/ρ)cosθ)|²` by tensor Gauss–Legendre quadrature in
/// `(ln ρ, θ)`.
fn dirichlet_integral(coef_a: f64, coef_b: f64, a: f64, b: f64, order: usize) -> f64 {
    gauss_legendre(
        |u| {
            let rho = u.exp();
            let radial = coef_a - coef_b / (rho * rho);
            let tangential = coef_a + coef_b / (rho * rho);
            let angular = gauss_legendre(
                |t| {
                    let (s, c) = t.sin_cos();
                    radial * radial * c * c + tangential * tangential * s * s
                },
                0.0,
                2.0 * PI,
                ANGULAR_PANELS * order,
            );
            rho * rho * angular
        },
        a.ln(),
        b.ln(),
        RADIAL_PANELS * order,
    )
}

fn integrals(r: f64, order: usize) -> [f64; 4] {
    let c = (7.0 * r * r + 12.0) / (r * r - 1.0);
    [
        dirichlet_integral(c, -c, 2.0, r, order),
        dirichlet_integral(c, -c, 1.0, 2.0, order),
        dirichlet_integral(7.0, 12.0, 2.0, r, order),
        dirichlet_integral(8.0, 8.0, 1.0, 2.0, order),
    ]
}

/// The tied-constant field is `c(ρ − 1/ρ)cosθ`, `c = (7r²+12)/(r²−1)`; the
/// two-layer field is `(7ρ + 12/ρ)cosθ` outside `D₂` and `8(ρ + 1/ρ)cosθ`
/// inside. `ℓ₁ = 2v_outer + 3v_inner`, `ℓ₂ = 3w_outer + 2w_inner`.
pub fn compute_limit_energies(r: f64) -> Result<LimitEnergies> {
    if !(r >= 10.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("outer radius must be at least 10, got {r}")));
    }
    let base = integrals(r, 1);
    let fine = integrals(r, 2);
    let self_check_rel = base
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    if self_check_rel > SELF_CHECK_TOL {
        return Err(Error::Range {
            message: format!("limit energy quadrature self-check differs by {self_check_rel:e}"),
            achieved: 0,
        });
    }
    let [v_outer, v_inner, w_outer, w_inner] = fine;
    Ok(LimitEnergies {
        r,
        limit_weak: 2.0 * v_outer + 3.0 * v_inner,
        limit_strong: 3.0 * w_outer + 2.0 * w_inner,
        v_outer,
        v_inner,
        w_outer,
        w_inner,
        self_check_rel,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleParams {
    /// Outer radius of the annulus.
    pub r: f64,
    /// Ratio between the ends of each oscillation window.
    pub window_ratio: f64,
    /// First member of the λ'' family.
    pub first_scale: f64,
    pub n_max: usize,
    /// Mesh rings per unit radius of the polar annulus.
    pub n_radial: usize,
    /// Growth exponent of the inner phase.
    pub q: f64,
    /// Relative width of the ramps that smooth the kinks of the density.
    pub kink_rounding: f64,
    /// Relative tolerance on `ℓ₁` and `ℓ₂`.
    pub tol: f64,
    /// First index `n` of the tail used for the verdict.
    pub tail_from: usize,
    /// Fraction of the audited area allowed outside its λ window.
    pub window_budget: f64,
    /// Weight of the `E²` control density.
    pub control_weight: f64,
    pub run_control: bool,
    pub settings: SolveSettings,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            r: 10.0,
            window_ratio: 11.0,
            first_scale: 1.0,
            n_max: 3,
            n_radial: 20,
            q: 3.0,
            kink_rounding: 1e-2,
            tol: 0.02,
            tail_from: 2,
            window_budget: 0.01,
            control_weight: 2.5,
            run_control: true,
            settings: SolveSettings::default(),
        }
    }
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) || !self.q.is_finite() {
            return Err(Error::Parameter(format!("q must exceed 1, got {}", self.q)));
        }
        if self.tail_from == 0 || self.tail_from > self.n_max {
            return Err(Error::Parameter(format!(
                "tail start {} must lie in 1..={}",
                self.tail_from, self.n_max
            )));
        }
        if !(self.tol >= 0.0 && self.window_budget >= 0.0 && self.window_budget < 1.0) {
            return Err(Error::Parameter(
                "tolerance and window budget must be nonnegative".into(),
            ));
        }
        if !(self.control_weight > 0.0) {
            return Err(Error::Parameter("control weight must be positive".into()));
        }
        self.settings.validate()
    }
}

/// Which λ family a sample belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Scales where the outer field sees the `2E²` branch.
    Weak,
    /// Scales where the outer field sees the `3E²` branch.
    Strong,
}

/// Area share of `D_r∖D₂` where `λ|∇v|` lies in `[λ, Lλ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowAudit {
    pub family: Family,
    pub n: usize,
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
    pub compliant_fraction: f64,
    pub min_scaled_grad: f64,
    pub max_scaled_grad: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub family: Family,
    pub n: usize,
    pub lambda: f64,
    pub g_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// The same pipeline with a pure `E²` density in B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub weight: f64,
    pub g_weak: Vec<f64>,
    pub g_strong: Vec<f64>,
    /// `(max − min)/max` over the tail samples of both families.
    pub spread: f64,
    pub spread_ok: bool,
    /// The counterexample verdict rule applied to the control samples.
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub r: f64,
    pub window_ratio: f64,
    pub first_scale: f64,
    pub n_max: usize,
    pub q: f64,
    pub n_triangles: usize,
    pub energies: LimitEnergies,
    pub limit_weak: f64,
    pub limit_strong: f64,
    /// `(ℓ₂ − ℓ₁)/ℓ₁`.
    pub gap_rel: f64,
    pub weak_scales: Vec<f64>,
    pub strong_scales: Vec<f64>,
    pub g_weak: Vec<f64>,
    pub g_strong: Vec<f64>,
    pub samples: Vec<Sample>,
    pub windows: Vec<WindowAudit>,
    pub tail_from: usize,
    pub tol: f64,
    pub verdict: bool,
    /// Set when a window audit or a solve failed; the verdict is then false.
    pub degraded: bool,
    pub diagnostics: Vec<String>,
    pub control: Option<ControlReport>,
}

struct Run {
    samples: Vec<Sample>,
    windows: Vec<WindowAudit>,
}

fn audit(
    mesh: &Mesh2D,
    regions: &RegionMap,
    v: &[f64],
    family: Family,
    n: usize,
    lambda: f64,
    window_ratio: f64,
    budget: f64,
) -> WindowAudit {
    let (lo, hi) = (lambda, window_ratio * lambda);
    let (mut total, mut inside) = (0.0, 0.0);
    let (mut min_s, mut max_s) = (f64::INFINITY, 0.0f64);
    for t in 0..mesh.n_triangles() {
        let c = mesh.centroid(t);
        if regions.region(t) != Region::B || c[0].hypot(c[1]) <= 2.0 {
            continue;
        }
        let g = mesh.gradient(t, v);
        let s = lambda * g[0].hypot(g[1]);
        let area = mesh.area(t);
        total += area;
        if (lo..=hi).contains(&s) {
            inside += area;
        }
        min_s = min_s.min(s);
        max_s = max_s.max(s);
    }
    let compliant_fraction = if total > 0.0 { inside / total } else { 0.0 };
    WindowAudit {
        family,
        n,
        lambda,
        lo,
        hi,
        compliant_fraction,
        min_scaled_grad: min_s,
        max_scaled_grad: max_s,
        ok: compliant_fraction >= 1.0 - budget,
    }
}

fn run_family(
    mesh: &Mesh2D,
    regions: &RegionMap,
    density_b: &EnergyDensity,
    density_a: &EnergyDensity,
    points: &[(Family, usize, f64)],
    bc: &BoundaryCondition,
    params: &CounterexampleParams,
) -> Result<Run> {
    let solved: Vec<(Sample, WindowAudit)> = points
        .par_iter()
        .map(|&(family, n, lambda)| {
            let functional = Functional::new(mesh, regions, density_b, density_a, lambda, 2.0)?;
            let result = minimize(&functional, bc, &params.settings)?;
            let window = audit(
                mesh,
                regions,
                &result.field.values,
                family,
                n,
                lambda,
                params.window_ratio,
                params.window_budget,
            );
            let sample = Sample {
                family,
                n,
                lambda,
                g_value: result.energy,
                converged: result.converged,
                iterations: result.iterations,
                residual: result.final_residual,
            };
            Ok((sample, window))
        })
        .collect::<Result<_>>()?;
    let (samples, windows) = solved.into_iter().unzip();
    Ok(Run { samples, windows })
}

fn family_values(samples: &[Sample], family: Family) -> Vec<f64> {
    samples
        .iter()
        .filter(|s| s.family == family)
        .map(|s| s.g_value)
        .collect()
}

fn tail(samples: &[Sample], family: Family, from: usize) -> Vec<f64> {
    samples
        .iter()
        .filter(|s| s.family == family && s.n >= from)
        .map(|s| s.g_value)
        .collect()
}

/// `max` of the λ' tail `≤ ℓ₁(1+tol)`, `min` of the λ'' tail `≥ ℓ₂(1−tol)`
/// and `ℓ₁ < ℓ₂`.
fn verdict_rule(samples: &[Sample], from: usize, limit_weak: f64, limit_strong: f64, tol: f64) -> bool {
    let hi = tail(samples, Family::Weak, from)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = tail(samples, Family::Strong, from)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    limit_weak < limit_strong && hi <= limit_weak * (1.0 + tol) && lo >= limit_strong * (1.0 - tol)
}

/// Builds the density, meshes `D_r`, solves the normalized problem at every
/// `λ'_n` and `λ''_n` with `n ≤ n_max` concurrently, audits the λ windows and
/// compares the tail energies with `ℓ₁` and `ℓ₂`.
pub fn run_counterexample(params: &CounterexampleParams) -> Result<CounterexampleReport> {
    params.validate()?;
    let energies = compute_limit_energies(params.r)?;
    let mut spec = build_oscillating_spec(params.window_ratio, params.first_scale, params.n_max)?;
    if params.kink_rounding > 0.0 {
        spec = spec.with_kink_rounding(params.kink_rounding)?;
    }
    let (mesh, regions) = build_domain(&DomainSpec::annulus(params.r, params.n_radial))?;
    let data_slope = 7.0 + 12.0 / (params.r * params.r);
    let bc = BoundaryCondition::dirichlet(&mesh, |x| data_slope * x[0], InnerMode::None)?;
    let density_a = EnergyDensity::power_law(Weight::Constant(1.0), params.q)?;

    let mut points: Vec<(Family, usize, f64)> = Vec::new();
    for n in 1..=params.n_max {
        points.push((Family::Weak, n, spec.weak_scales[n - 1]));
        points.push((Family::Strong, n, spec.strong_scales[n - 1]));
    }
    let weak_scales = spec.weak_scales.clone();
    let strong_scales = spec.strong_scales[..params.n_max].to_vec();
    let osc = EnergyDensity::oscillating(spec);
    let run = run_family(&mesh, &regions, &osc, &density_a, &points, &bc, params)?;

    let mut diagnostics = Vec::new();
    for s in run.samples.iter().filter(|s| !s.converged) {
        diagnostics.push(format!(
            "solve at lambda = {:e} ({:?}, n = {}) stopped at residual {:e}",
            s.lambda, s.family, s.n, s.residual
        ));
    }
    for w in run.windows.iter().filter(|w| !w.ok) {
        diagnostics.push(format!(
            "window [{:e}, {:e}] holds {:.4} of the audited area at lambda = {:e}",
            w.lo, w.hi, w.compliant_fraction, w.lambda
        ));
    }
    let degraded = !diagnostics.is_empty();
    let verdict = !degraded
        && verdict_rule(
            &run.samples,
            params.tail_from,
            energies.limit_weak,
            energies.limit_strong,
            params.tol,
        );

    let control = if params.run_control {
        let density = EnergyDensity::power_law(Weight::Constant(params.control_weight), 2.0)?;
        let c = run_family(&mesh, &regions, &density, &density_a, &points, &bc, params)?;
        let all: Vec<f64> = c
            .samples
            .iter()
            .filter(|s| s.n >= params.tail_from)
            .map(|s| s.g_value)
            .collect();
        let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = all.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = (max - min) / max;
        Some(ControlReport {
            weight: params.control_weight,
            g_weak: family_values(&c.samples, Family::Weak),
            g_strong: family_values(&c.samples, Family::Strong),
            spread,
            spread_ok: spread <= params.window_budget,
            verdict: verdict_rule(
                &c.samples,
                params.tail_from,
                energies.limit_weak,
                energies.limit_strong,
                params.tol,
            ),
        })
    } else {
        None
    };

    Ok(CounterexampleReport {
        r: params.r,
        window_ratio: params.window_ratio,
        first_scale: params.first_scale,
        n_max: params.n_max,
        q: params.q,
        n_triangles: mesh.n_triangles(),
        energies,
        limit_weak: energies.limit_weak,
        limit_strong: energies.limit_strong,
        gap_rel: (energies.limit_strong - energies.limit_weak) / energies.limit_weak,
        weak_scales,
        strong_scales,
        g_weak: family_values(&run.samples, Family::Weak),
        g_strong: family_values(&run.samples, Family::Strong),
        samples: run.samples,
        windows: run.windows,
        tail_from: params.tail_from,
        tol: params.tol,
        verdict,
        degraded,
        diagnostics,
        control,
    })
}
