use serde::{Deserialize, Serialize};

use super::oscillating::OscillatingSpec;
use crate::expr::Expr;
use crate::{Error, Point, Result};

/// Growth constants `Q̲ ≤ Q̄`, `E₀` and exponent of the two-sided bound
/// `Q̲[(E/E₀)^p − 1] ≤ Q(x,E) ≤ Q̄[(E/E₀)^p + 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub q_lower: f64,
    pub q_upper: f64,
    pub e0: f64,
    pub exponent: f64,
}

impl GrowthBounds {
    pub fn new(q_lower: f64, q_upper: f64, e0: f64, exponent: f64) -> Result<Self> {
        let b = Self {
            q_lower,
            q_upper,
            e0,
            exponent,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_lower > 0.0 && self.q_upper >= self.q_lower && self.e0 > 0.0) {
            return Err(Error::Parameter(format!(
                "growth bounds need 0 < q_lower <= q_upper and e0 > 0, got {self:?}"
            )));
        }
        if !(self.exponent > 1.0) {
            return Err(Error::Parameter(format!(
                "growth exponent must exceed 1, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn lower(&self, e: f64) -> f64 {
        self.q_lower * ((e / self.e0).powf(self.exponent) - 1.0)
    }

    pub fn upper(&self, e: f64) -> f64 {
        self.q_upper * ((e / self.e0).powf(self.exponent) + 1.0)
    }
}

/// Spatial factor `θ(x)` multiplying the density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Constant(f64),
    Field(Expr),
}

impl Weight {
    pub fn at(&self, x: Point) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Field(e) => e.eval_at(x),
        }
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Constant(1.0)
    }
}

/// Where a density is meant to be evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    #[default]
    Everywhere,
    Disk {
        center: Point,
        radius: f64,
    },
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
    },
}

impl Support {
    const TOL: f64 = 1e-9;

    pub fn contains(&self, x: Point) -> bool {
        let dist = |c: Point| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        match *self {
            Support::Everywhere => true,
            Support::Disk { center, radius } => dist(center) <= radius * (1.0 + Self::TOL),
            Support::Annulus { center, inner, outer } => {
                let d = dist(center);
                d >= inner * (1.0 - Self::TOL) && d <= outer * (1.0 + Self::TOL)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensityKind {
    /// `Q = θ(x)·E^p`.
    PowerLaw,
    /// `Q = θ(x)·Ψ(E)`.
    Oscillating(Box<OscillatingSpec>),
    /// `Q = θ(x)·q(x,E)` with user-supplied derivative `j = ∂_E q`.
    UserClosedForm { q: Expr, j: Expr },
}

/// A Dirichlet energy density `Q(x,E)`, immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyDensity {
    kind: DensityKind,
    weight: Weight,
    exponent: f64,
    bounds: Option<GrowthBounds>,
    support: Support,
    sigma_eps: f64,
}

impl EnergyDensity {
    pub fn power_law(weight: Weight, exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(Error::Parameter(format!(
                "power-law exponent must exceed 1, got {exponent}"
            )));
        }
        Ok(Self {
            kind: DensityKind::PowerLaw,
            weight,
            exponent,
            bounds: None,
            support: Support::Everywhere,
            sigma_eps: 1e-10,
        })
    }

    /// `Q = θ·Ψ` with asymptotic exponent 2.
    pub fn oscillating(spec: OscillatingSpec) -> Self {
        Self {
            kind: DensityKind::Oscillating(Box::new(spec)),
            weight: Weight::Constant(1.0),
            exponent: 2.0,
            bounds: None,
            support: Support::Everywhere,
            sigma_eps: 1e-10,
        }
    }

    /// User closed form. `j` is cross-checked against central differences
    /// of `q` on 100 samples before the density is accepted.
    pub fn user_closed_form(q: Expr, j: Expr, exponent: f64, probe: &[Point]) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::Parameter(format!("exponent must exceed 1, got {exponent}")));
        }
        let density = Self {
            kind: DensityKind::UserClosedForm { q, j },
            weight: Weight::Constant(1.0),
            exponent,
            bounds: None,
            support: Support::Everywhere,
            sigma_eps: 1e-10,
        };
        density.cross_check_derivative(probe)?;
        Ok(density)
    }

    fn cross_check_derivative(&self, probe: &[Point]) -> Result<()> {
        let DensityKind::UserClosedForm { q, j } = &self.kind else {
            return Ok(());
        };
        let default_probe = [[0.0, 0.0]];
        let probe = if probe.is_empty() { &default_probe[..] } else { probe };
        for s in 0..100 {
            let x = probe[s % probe.len()];
            // E spread over [0.05, 20] on a geometric ladder
            let e = 0.05 * (400f64).powf(s as f64 / 99.0);
            let h = 1e-5 * e;
            let fd = (q.eval(x, e + h) - q.eval(x, e - h)) / (2.0 * h);
            let jv = j.eval(x, e);
            let scale = jv.abs().max(fd.abs()).max(1e-8);
            if !fd.is_finite() || !jv.is_finite() || (fd - jv).abs() > 1e-5 * scale {
                return Err(Error::Config(format!(
                    "derivative `{j}` does not match d/dE of `{q}` at x = {x:?}, E = {e} \
                     (finite difference {fd}, supplied {jv})"
                )));
            }
        }
        Ok(())
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_bounds(mut self, bounds: GrowthBounds) -> Result<Self> {
        bounds.validate()?;
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    /// Sets `ε_σ` (relative to `E₀`) used when reporting σ at `E = 0`.
    pub fn with_sigma_eps(mut self, eps: f64) -> Self {
        self.sigma_eps = eps;
        self
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn bounds(&self) -> Option<&GrowthBounds> {
        self.bounds.as_ref()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn oscillating_spec(&self) -> Option<&OscillatingSpec> {
        match &self.kind {
            DensityKind::Oscillating(s) => Some(s),
            _ => None,
        }
    }

    fn check(&self, x: Point, e: f64) -> Result<()> {
        if !(e >= 0.0) {
            return Err(Error::Domain(format!("field magnitude must be >= 0, got {e}")));
        }
        if !self.support.contains(x) {
            return Err(Error::Region(x[0], x[1]));
        }
        Ok(())
    }

    pub fn eval_q(&self, x: Point, e: f64) -> Result<f64> {
        self.check(x, e)?;
        Ok(self.weight.at(x) * self.base_q(x, e))
    }

    pub fn eval_j(&self, x: Point, e: f64) -> Result<f64> {
        self.check(x, e)?;
        Ok(self.weight.at(x) * self.base_j(x, e))
    }

    /// σ = J/E. At `E = 0` returns `J(ε)/ε` with `ε = ε_σ·E₀` unless the
    /// limit is known in closed form.
    pub fn eval_sigma(&self, x: Point, e: f64) -> Result<f64> {
        self.check(x, e)?;
        let w = self.weight.at(x);
        if e > 0.0 {
            return Ok(w * self.base_j(x, e) / e);
        }
        match &self.kind {
            DensityKind::PowerLaw if self.exponent == 2.0 => Ok(2.0 * w),
            DensityKind::PowerLaw if self.exponent > 2.0 => Ok(0.0),
            DensityKind::Oscillating(_) => Ok(6.0 * w),
            _ => {
                let e0 = self.bounds.map_or(1.0, |b| b.e0);
                let eps = self.sigma_eps * e0;
                Ok(w * self.base_j(x, eps) / eps)
            }
        }
    }

    /// `Q/θ` without argument checks.
    pub fn base_q(&self, x: Point, e: f64) -> f64 {
        match &self.kind {
            DensityKind::PowerLaw => pow(e, self.exponent),
            DensityKind::Oscillating(s) => s.value(e),
            DensityKind::UserClosedForm { q, .. } => q.eval(x, e),
        }
    }

    /// `∂_E Q/θ` without argument checks.
    pub fn base_j(&self, x: Point, e: f64) -> f64 {
        match &self.kind {
            DensityKind::PowerLaw => self.exponent * pow(e, self.exponent - 1.0),
            DensityKind::Oscillating(s) => s.slope(e),
            DensityKind::UserClosedForm { j, .. } => j.eval(x, e),
        }
    }

    /// `∂²_E Q/θ`; central difference of `j` for user closed forms.
    pub fn base_dj(&self, x: Point, e: f64) -> f64 {
        match &self.kind {
            DensityKind::PowerLaw => {
                let p = self.exponent;
                p * (p - 1.0) * pow(e, p - 2.0)
            }
            DensityKind::Oscillating(s) => s.curvature(e),
            DensityKind::UserClosedForm { j, .. } => {
                let h = 1e-6 * e.max(1e-3);
                let lo = (e - h).max(0.0);
                (j.eval(x, e + h) - j.eval(x, lo)) / (e + h - lo)
            }
        }
    }
}

fn pow(e: f64, p: f64) -> f64 {
    if p == 2.0 {
        e * e
    } else if p == 1.0 {
        e
    } else if p == 3.0 {
        e * e * e
    } else {
        e.powf(p)
    }
}
