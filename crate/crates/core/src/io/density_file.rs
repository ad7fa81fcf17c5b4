//! Density specification files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{build_oscillating_spec, EnergyDensity, GrowthBounds, Support, Weight};
use crate::expr::Expr;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKindSpec {
    PowerLaw,
    Oscillating,
    UserClosedForm,
}

/// Serializable description of an [`EnergyDensity`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub kind: DensityKindSpec,
    /// Growth exponent; fixed to 2 for the oscillating density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub weight: Weight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<GrowthBounds>,
    #[serde(default, skip_serializing_if = "is_everywhere")]
    pub support: Support,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Relative ramp width smoothing the kinks of the oscillating density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kink_rounding: Option<f64>,
    /// `Q(x, E)` of a user closed form, in `x1`, `x2` and `E`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Expr>,
    /// `∂Q/∂E` of a user closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Expr>,
}

fn is_everywhere(s: &Support) -> bool {
    *s == Support::Everywhere
}

impl DensitySpec {
    pub fn power_law(weight: Weight, exponent: f64) -> Self {
        Self {
            kind: DensityKindSpec::PowerLaw,
            exponent: Some(exponent),
            weight,
            bounds: None,
            support: Support::Everywhere,
            window_ratio: None,
            first_scale: None,
            n_max: None,
            kink_rounding: None,
            q: None,
            j: None,
        }
    }

    /// All missing or inconsistent keys.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let need = |out: &mut Vec<String>, present: bool, key: &str| {
            if !present {
                out.push(format!("density of kind {:?} needs `{key}`", self.kind));
            }
        };
        match self.kind {
            DensityKindSpec::PowerLaw => need(&mut out, self.exponent.is_some(), "exponent"),
            DensityKindSpec::Oscillating => {
                need(&mut out, self.window_ratio.is_some(), "window_ratio");
                need(&mut out, self.first_scale.is_some(), "first_scale");
                need(&mut out, self.n_max.is_some(), "n_max");
                if self.exponent.is_some_and(|p| p != 2.0) {
                    out.push("the oscillating density has exponent 2".into());
                }
            }
            DensityKindSpec::UserClosedForm => {
                need(&mut out, self.exponent.is_some(), "exponent");
                need(&mut out, self.q.is_some(), "q");
                need(&mut out, self.j.is_some(), "j");
            }
        }
        if let Some(p) = self.exponent {
            if !(p > 1.0) || !p.is_finite() {
                out.push(format!("density exponent must exceed 1, got {p}"));
            }
        }
        out
    }

    pub fn build(&self) -> Result<EnergyDensity> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Config(v.join("; ")));
        }
        let density = match self.kind {
            DensityKindSpec::PowerLaw => EnergyDensity::power_law(Weight::Constant(1.0), self.exponent.unwrap())?,
            DensityKindSpec::Oscillating => {
                let mut spec = build_oscillating_spec(
                    self.window_ratio.unwrap(),
                    self.first_scale.unwrap(),
                    self.n_max.unwrap(),
                )?;
                if let Some(rel) = self.kink_rounding.filter(|&r| r > 0.0) {
                    spec = spec.with_kink_rounding(rel)?;
                }
                EnergyDensity::oscillating(spec)
            }
            DensityKindSpec::UserClosedForm => EnergyDensity::user_closed_form(
                self.q.clone().unwrap(),
                self.j.clone().unwrap(),
                self.exponent.unwrap(),
                &[],
            )?,
        };
        let density = density.with_weight(self.weight.clone()).with_support(self.support);
        match self.bounds {
            Some(b) => density.with_bounds(b),
            None => Ok(density),
        }
    }
}

pub fn parse_density(text: &str) -> Result<DensitySpec> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn read_density(path: &Path) -> Result<DensitySpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_density(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn emit_density(spec: &DensitySpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| Error::Config(e.to_string()))
}
