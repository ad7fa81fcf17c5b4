//! Energy densities `Q(x,E)` and sampling validators for their structural
//! assumptions.

pub mod density;
pub mod oscillating;
pub mod validate;

pub use density::{DensityKind, EnergyDensity, GrowthBounds, Support, Weight};
pub use oscillating::{build_oscillating_spec, Branch, Interval, OscillatingSpec};
pub use validate::{
    check_convexity, check_growth_bounds, check_growth_bounds_with, check_integral_consistency, check_weight_positive,
    estimate_asymptotic_weight, validate_assumptions, AssumptionReport, AsymptoticEstimate, SampleGrid,
    ValidationReport, Violation,
};
