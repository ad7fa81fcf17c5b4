//! Sampling-based validators for the structural assumptions on a density.
//!
//! Every check runs on a declared grid of points and field magnitudes and
//! reports the grid it used; none of them is a proof.

use serde::{Deserialize, Serialize};

use super::density::{EnergyDensity, GrowthBounds};
use crate::{Error, Point, Result};

/// Points of the region crossed with field magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    pub points: Vec<Point>,
    pub energies: Vec<f64>,
}

impl SampleGrid {
    /// `n` equispaced magnitudes on `[0, e_max]`.
    pub fn uniform(points: Vec<Point>, e_max: f64, n: usize) -> Self {
        let n = n.max(2);
        let energies = (0..n).map(|i| e_max * i as f64 / (n - 1) as f64).collect();
        Self { points, energies }
    }

    /// Zero followed by `n` geometric magnitudes on `[e_min, e_max]`.
    pub fn geometric(points: Vec<Point>, e_min: f64, e_max: f64, n: usize) -> Self {
        let n = n.max(2);
        let ratio = (e_max / e_min).powf(1.0 / (n - 1) as f64);
        let mut energies = vec![0.0];
        energies.extend((0..n).map(|i| e_min * ratio.powi(i as i32)));
        Self { points, energies }
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.points.is_empty() || self.energies.is_empty() {
            return Err(Error::Config("sample grid is empty".into()));
        }
        Ok(())
    }

    fn meta(&self) -> GridMeta {
        let e_min = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let e_max = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        GridMeta {
            n_points: self.points.len(),
            n_energies: self.energies.len(),
            e_min,
            e_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_points: usize,
    pub n_energies: usize,
    pub e_min: f64,
    pub e_max: f64,
}

/// A sample where `lhs ≤ value ≤ rhs` failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Point,
    #[serde(rename = "E")]
    pub e: f64,
    pub lhs: f64,
    pub value: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub check: String,
    pub verdict: bool,
    pub violations: Vec<Violation>,
    pub grid_meta: GridMeta,
}

impl ValidationReport {
    fn new(check: &str, violations: Vec<Violation>, grid_meta: GridMeta) -> Self {
        Self {
            check: check.to_string(),
            verdict: violations.is_empty(),
            violations,
            grid_meta,
        }
    }
}

/// Two-sided growth bound on every sample.
pub fn check_growth_bounds(density: &EnergyDensity, grid: &SampleGrid) -> Result<ValidationReport> {
    let bounds = density
        .bounds()
        .ok_or_else(|| Error::Config("density carries no growth bounds".into()))?;
    check_growth_bounds_with(density, bounds, grid)
}

/// As [`check_growth_bounds`] against explicitly supplied constants.
pub fn check_growth_bounds_with(
    density: &EnergyDensity,
    bounds: &GrowthBounds,
    grid: &SampleGrid,
) -> Result<ValidationReport> {
    grid.ensure_nonempty()?;
    let mut violations = Vec::new();
    for &x in &grid.points {
        for &e in &grid.energies {
            let value = density.eval_q(x, e)?;
            let (lhs, rhs) = (bounds.lower(e), bounds.upper(e));
            let slack = 1e-12 * value.abs().max(1.0);
            if value < lhs - slack || value > rhs + slack {
                violations.push(Violation { x, e, lhs, value, rhs });
            }
        }
    }
    Ok(ValidationReport::new("growth_bounds", violations, grid.meta()))
}

/// `Q(x,0) = 0`, positivity, monotonicity and secant-slope monotonicity on
/// consecutive sample triples, plus matching one-sided difference quotients
/// (C¹) at every interior sample.
pub fn check_convexity(density: &EnergyDensity, grid: &SampleGrid) -> Result<ValidationReport> {
    grid.ensure_nonempty()?;
    let mut es = grid.energies.clone();
    es.sort_by(|a, b| a.total_cmp(b));
    es.dedup();
    let mut violations = Vec::new();
    for &x in &grid.points {
        let q0 = density.eval_q(x, 0.0)?;
        if q0 != 0.0 {
            violations.push(Violation {
                x,
                e: 0.0,
                lhs: 0.0,
                value: q0,
                rhs: 0.0,
            });
        }
        let qs: Vec<f64> = es.iter().map(|&e| density.eval_q(x, e)).collect::<Result<_>>()?;
        for i in 1..es.len() {
            let tol = 1e-12 * qs[i].abs().max(1e-300);
            if qs[i] < qs[i - 1] - tol || (es[i] > 0.0 && qs[i] <= 0.0) {
                violations.push(Violation {
                    x,
                    e: es[i],
                    lhs: qs[i - 1],
                    value: qs[i],
                    rhs: f64::INFINITY,
                });
            }
        }
        for i in 1..es.len().saturating_sub(1) {
            let s1 = (qs[i] - qs[i - 1]) / (es[i] - es[i - 1]);
            let s2 = (qs[i + 1] - qs[i]) / (es[i + 1] - es[i]);
            let tol = 1e-10 * s1.abs().max(s2.abs()).max(1e-300);
            if s1 > s2 + tol {
                violations.push(Violation {
                    x,
                    e: es[i],
                    lhs: s1,
                    value: s2,
                    rhs: f64::INFINITY,
                });
            }
        }
        for &e in es.iter().filter(|&&e| e > 0.0) {
            let h = 1e-7 * e;
            let q = density.eval_q(x, e)?;
            let left = (q - density.eval_q(x, e - h)?) / h;
            let right = (density.eval_q(x, e + h)? - q) / h;
            let tol = 1e-4 * left.abs().max(right.abs()).max(1e-12);
            if (right - left).abs() > tol {
                violations.push(Violation {
                    x,
                    e,
                    lhs: left,
                    value: right,
                    rhs: left,
                });
            }
        }
    }
    Ok(ValidationReport::new("convexity_c1", violations, grid.meta()))
}

/// `θ(x) ≥ c₀` on every sample point.
pub fn check_weight_positive(density: &EnergyDensity, points: &[Point], c0: f64) -> ValidationReport {
    let violations = points
        .iter()
        .filter_map(|&x| {
            let w = density.weight().at(x);
            (!(w >= c0)).then_some(Violation {
                x,
                e: 0.0,
                lhs: c0,
                value: w,
                rhs: f64::INFINITY,
            })
        })
        .collect();
    ValidationReport::new(
        "weight_positive",
        violations,
        GridMeta {
            n_points: points.len(),
            n_energies: 0,
            e_min: 0.0,
            e_max: 0.0,
        },
    )
}

/// Dyadic panels used next to `E = 0` by the consistency quadrature.
const ZERO_GRADING: usize = 80;

/// `Q(x,E) = ∫₀^E J(x,ξ)dξ` by composite Gauss–Legendre quadrature,
/// within `rel_tol` relative error.
pub fn check_integral_consistency(
    density: &EnergyDensity,
    grid: &SampleGrid,
    rel_tol: f64,
) -> Result<ValidationReport> {
    grid.ensure_nonempty()?;
    let mut violations = Vec::new();
    let breaks: Vec<f64> = density
        .oscillating_spec()
        .map(|p| p.breakpoints.iter().map(|iv| iv.lo).collect())
        .unwrap_or_default();
    for &x in &grid.points {
        for &e in &grid.energies {
            let q = density.eval_q(x, e)?;
            let mut nodes = vec![0.0];
            nodes.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < e));
            nodes.push(e);
            let mut integral = 0.0;
            let j = |t: f64| density.eval_j(x, t).unwrap_or(f64::NAN);
            for w in nodes.windows(2) {
                if w[0] == 0.0 {
                    // dyadic panels toward zero resolve fractional powers
                    let mut hi = w[1];
                    for _ in 0..ZERO_GRADING {
                        integral += gauss_legendre(j, 0.5 * hi, hi, 2);
                        hi *= 0.5;
                    }
                    integral += gauss_legendre(j, 0.0, hi, 1);
                } else {
                    integral += gauss_legendre(j, w[0], w[1], 64);
                }
            }
            if (integral - q).abs() > rel_tol * q.abs().max(1e-300) && (integral - q).abs() > 1e-300 {
                violations.push(Violation {
                    x,
                    e,
                    lhs: integral,
                    value: q,
                    rhs: integral,
                });
            }
        }
    }
    Ok(ValidationReport::new("q_equals_integral_of_j", violations, grid.meta()))
}

/// Composite 5-point Gauss–Legendre on `pieces` equal panels.
pub(crate) fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / pieces as f64;
    let mut sum = 0.0;
    for k in 0..pieces {
        let mid = a + (k as f64 + 0.5) * h;
        for i in 0..5 {
            sum += W[i] * f(mid + 0.5 * h * X[i]);
        }
    }
    0.5 * h * sum
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEstimate {
    /// `Q(x,E)/E^p` at the last schedule point.
    pub weight_estimate: f64,
    /// max − min of `Q(x,E)/E^p` over the tail half of the schedule.
    pub oscillation: f64,
    /// `oscillation ≤ 1e−3 · weight_estimate`.
    pub certified: bool,
}

/// Relative oscillation threshold used to certify an asymptotic weight.
pub const ASYMPTOTIC_TOL: f64 = 1e-3;

pub fn estimate_asymptotic_weight(density: &EnergyDensity, x: Point, schedule: &[f64]) -> Result<AsymptoticEstimate> {
    if schedule.len() < 8 {
        return Err(Error::Config(format!(
            "asymptotic schedule needs at least 8 points, got {}",
            schedule.len()
        )));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) || !(schedule[0] > 0.0) {
        return Err(Error::Config(
            "asymptotic schedule must be positive and strictly increasing".into(),
        ));
    }
    if schedule[schedule.len() - 1] / schedule[0] < 1e3 {
        return Err(Error::Config("asymptotic schedule must span at least 3 decades".into()));
    }
    let p = density.exponent();
    let ratios: Vec<f64> = schedule
        .iter()
        .map(|&e| density.eval_q(x, e).map(|q| q / e.powf(p)))
        .collect::<Result<_>>()?;
    let tail = &ratios[ratios.len() / 2..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let weight_estimate = *ratios.last().unwrap();
    let oscillation = max - min;
    Ok(AsymptoticEstimate {
        weight_estimate,
        oscillation,
        certified: oscillation <= ASYMPTOTIC_TOL * weight_estimate.abs(),
    })
}

/// Summary of all sampled assumption checks for one density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub continuity_and_weight: ValidationReport,
    pub convexity: ValidationReport,
    pub growth: Option<ValidationReport>,
    pub integral_consistency: ValidationReport,
    pub asymptotic: Vec<(Point, AsymptoticEstimate)>,
    pub verdict: bool,
}

/// Runs every validator; the asymptotic schedule is geometric from 1 to
/// `10^decades` (times `E₀`).
pub fn validate_assumptions(density: &EnergyDensity, grid: &SampleGrid, decades: f64) -> Result<AssumptionReport> {
    grid.ensure_nonempty()?;
    let mut continuity = check_weight_positive(density, &grid.points, f64::MIN_POSITIVE);
    for &x in &grid.points {
        for &e in &grid.energies {
            let q = density.eval_q(x, e)?;
            if !q.is_finite() {
                continuity.violations.push(Violation {
                    x,
                    e,
                    lhs: f64::NEG_INFINITY,
                    value: q,
                    rhs: f64::INFINITY,
                });
            }
        }
    }
    continuity.verdict = continuity.violations.is_empty();
    continuity.check = "caratheodory_and_weight".into();
    let convexity = check_convexity(density, grid)?;
    let growth = match density.bounds() {
        Some(_) => Some(check_growth_bounds(density, grid)?),
        None => None,
    };
    let integral_consistency = check_integral_consistency(density, grid, 1e-8)?;
    let e0 = density.bounds().map_or(1.0, |b| b.e0);
    let n = (8.0 * decades).ceil().max(8.0) as usize;
    let schedule: Vec<f64> = (0..n)
        .map(|i| e0 * 10f64.powf(decades * i as f64 / (n - 1) as f64))
        .collect();
    let asymptotic = grid
        .points
        .iter()
        .map(|&x| estimate_asymptotic_weight(density, x, &schedule).map(|a| (x, a)))
        .collect::<Result<Vec<_>>>()?;
    let verdict = continuity.verdict
        && convexity.verdict
        && growth.as_ref().is_none_or(|g| g.verdict)
        && integral_consistency.verdict
        && asymptotic.iter().all(|(_, a)| a.certified);
    Ok(AssumptionReport {
        continuity_and_weight: continuity,
        convexity,
        growth,
        integral_consistency,
        asymptotic,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::density::Weight;
    use crate::energy::oscillating::build_oscillating_spec;
    use crate::expr::Expr;

    fn pl(p: f64) -> EnergyDensity {
        EnergyDensity::power_law(Weight::Constant(1.0), p).unwrap()
    }

    #[test]
    fn growth_bounds_power_law_passes() {
        let d = pl(2.0)
            .with_bounds(GrowthBounds::new(1.0, 1.0, 1.0, 2.0).unwrap())
            .unwrap();
        let grid = SampleGrid::uniform(vec![[0.0, 0.0], [0.5, 0.2]], 100.0, 500);
        let rep = check_growth_bounds(&d, &grid).unwrap();
        assert!(rep.verdict, "{:?}", rep.violations.first());
    }

    #[test]
    fn growth_bounds_detects_wrong_exponent() {
        let d = pl(3.0)
            .with_bounds(GrowthBounds::new(1.0, 1.0, 1.0, 2.0).unwrap())
            .unwrap();
        let grid = SampleGrid::uniform(vec![[0.0, 0.0]], 5.0, 501);
        let rep = check_growth_bounds(&d, &grid).unwrap();
        assert!(!rep.verdict);
        // oracle: first grid point with E³ > E² + 1, found by scanning
        let first = grid
            .energies
            .iter()
            .copied()
            .find(|&e| e * e * e > e * e + 1.0)
            .unwrap();
        let reported = rep.violations.iter().map(|v| v.e).fold(f64::INFINITY, f64::min);
        assert_eq!(reported, first);
        assert!((first - 1.47).abs() < 0.011);
    }

    #[test]
    fn growth_bounds_empty_grid() {
        let d = pl(2.0)
            .with_bounds(GrowthBounds::new(1.0, 1.0, 1.0, 2.0).unwrap())
            .unwrap();
        let grid = SampleGrid {
            points: vec![],
            energies: vec![1.0],
        };
        assert!(matches!(check_growth_bounds(&d, &grid), Err(Error::Config(_))));
    }

    #[test]
    fn oscillating_density_sandwich() {
        let osc = build_oscillating_spec(11.0, 1.0, 3).unwrap();
        let top = osc.strong_scales[3];
        let d = EnergyDensity::oscillating(osc)
            .with_bounds(GrowthBounds::new(1.0, 3.0, 1.0, 2.0).unwrap())
            .unwrap();
        let grid = SampleGrid::geometric(vec![[0.0, 0.0]], 1e-3, top, 4000);
        assert!(check_growth_bounds(&d, &grid).unwrap().verdict);
        // ratio Ψ/E² stays in [1, 3] (in fact [2, 3])
        for &e in grid.energies.iter().skip(1) {
            let r = d.eval_q([0.0, 0.0], e).unwrap() / (e * e);
            assert!((2.0 - 1e-12..=3.0 + 1e-12).contains(&r), "ratio {r} at {e}");
        }
    }

    #[test]
    fn asymptotic_weight_power_law_is_exact() {
        let w = Weight::Field(Expr::parse("2 + x1").unwrap());
        let d = EnergyDensity::power_law(w, 2.5).unwrap();
        let sched: Vec<f64> = (0..10).map(|i| 10f64.powi(i)).collect();
        let est = estimate_asymptotic_weight(&d, [0.5, 0.0], &sched).unwrap();
        assert!((est.weight_estimate - 2.5).abs() < 1e-13);
        assert!(est.oscillation < 1e-13);
        assert!(est.certified);
    }

    #[test]
    fn asymptotic_weight_lower_order_term() {
        let q = Expr::parse("E^2 + E").unwrap();
        let j = Expr::parse("2*E + 1").unwrap();
        let d = EnergyDensity::user_closed_form(q, j, 2.0, &[]).unwrap();
        let sched: Vec<f64> = (0..13).map(|i| 10f64.powf(i as f64 * 0.75)).collect();
        let est = estimate_asymptotic_weight(&d, [0.0, 0.0], &sched).unwrap();
        let e_max = *sched.last().unwrap();
        assert!((est.weight_estimate - (1.0 + 1.0 / e_max)).abs() < 1e-12);
        // tail ratio spread is 1/E at the start of the tail half
        let e_tail = sched[sched.len() / 2];
        assert!((est.oscillation - (1.0 / e_tail - 1.0 / e_max)).abs() < 1e-12);
        assert!(est.certified);
    }

    #[test]
    fn asymptotic_weight_refutes_oscillating_density() {
        let osc = build_oscillating_spec(11.0, 1.0, 3).unwrap();
        let mut sched = Vec::new();
        for n in 0..3 {
            sched.push((osc.strong_scales[n] * 11.0 * osc.strong_scales[n]).sqrt());
            sched.push((osc.weak_scales[n] * 11.0 * osc.weak_scales[n]).sqrt());
        }
        sched.insert(0, 0.1);
        sched.insert(1, 0.5);
        let d = EnergyDensity::oscillating(osc);
        let est = estimate_asymptotic_weight(&d, [0.0, 0.0], &sched).unwrap();
        assert!(est.oscillation >= 1.0 - 1e-12);
        assert!(!est.certified);
    }

    #[test]
    fn asymptotic_schedule_validation() {
        let d = pl(2.0);
        assert!(estimate_asymptotic_weight(&d, [0.0, 0.0], &[1.0, 10.0]).is_err());
        let flat: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        assert!(estimate_asymptotic_weight(&d, [0.0, 0.0], &flat).is_err());
    }

    #[test]
    fn convexity_checks() {
        let grid = SampleGrid::uniform(vec![[0.0, 0.0]], 10.0, 200);
        assert!(check_convexity(&pl(1.5), &grid).unwrap().verdict);
        assert!(check_convexity(&pl(4.0), &grid).unwrap().verdict);
        let q = Expr::parse("E^2 - E").unwrap();
        let j = Expr::parse("2*E - 1").unwrap();
        let bad = EnergyDensity::user_closed_form(q, j, 2.0, &[]).unwrap();
        assert!(!check_convexity(&bad, &grid).unwrap().verdict);
    }

    #[test]
    fn exact_psi_fails_c1_rounded_passes() {
        let osc = build_oscillating_spec(11.0, 1.0, 2).unwrap();
        let mut energies: Vec<f64> = osc.kinks();
        energies.extend((0..400).map(|i| 0.01 * 1.05f64.powi(i)));
        let grid = SampleGrid {
            points: vec![[0.0, 0.0]],
            energies,
        };
        let exact = EnergyDensity::oscillating(osc.clone());
        let rep = check_convexity(&exact, &grid).unwrap();
        assert!(!rep.verdict);
        // only C¹ violations, never convexity ones
        assert!(rep.violations.iter().all(|v| v.rhs == v.lhs));
        let rounded = EnergyDensity::oscillating(osc.with_kink_rounding(1e-2).unwrap());
        assert!(check_convexity(&rounded, &grid).unwrap().verdict);
    }

    #[test]
    fn integral_consistency() {
        let grid = SampleGrid::uniform(vec![[0.0, 0.0]], 50.0, 40);
        assert!(check_integral_consistency(&pl(2.7), &grid, 1e-8).unwrap().verdict);
        let osc = build_oscillating_spec(11.0, 1.0, 2).unwrap();
        let grid = SampleGrid::geometric(vec![[0.0, 0.0]], 0.1, 1e6, 60);
        let d = EnergyDensity::oscillating(osc.clone());
        assert!(check_integral_consistency(&d, &grid, 1e-8).unwrap().verdict);
        let d = EnergyDensity::oscillating(osc.with_kink_rounding(1e-2).unwrap());
        assert!(check_integral_consistency(&d, &grid, 1e-8).unwrap().verdict);
    }

    #[test]
    fn report_serializes() {
        let d = pl(3.0)
            .with_bounds(GrowthBounds::new(1.0, 1.0, 1.0, 2.0).unwrap())
            .unwrap();
        let rep = check_growth_bounds(&d, &SampleGrid::uniform(vec![[0.0, 0.0]], 3.0, 4)).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["verdict"], false);
        assert!(json["violations"][0]["E"].is_number());
        assert_eq!(json["grid_meta"]["n_energies"], 4);
    }
}
