//! P1 finite element assembly of the Dirichlet energy, its minimization
//! under Dirichlet, insulating, tied or prescribed interface conditions,
//! the limit problems and discrete norms.

mod bc;
mod export;
mod field;
mod functional;
mod limits;
mod newton;
mod norms;
pub mod sparse;

pub use bc::{boundary_mean, check_zero_mean, BoundaryCondition, Dof, DofMap, InnerMode, ZERO_MEAN_TOL};
pub use export::{element_csv, export_solve, field_csv, write_json, write_text, SolveSummary};
pub use field::DiscreteField;
pub use functional::{assemble_energy, assemble_gradient, Functional};
pub use limits::{solve_limit_a_inner, solve_limit_b_pei, solve_limit_pec, uniform_regions};
pub use newton::{
    minimize, minimize_from, reduced_gradient, satisfies, Armijo, SolveDiagnostics, SolveResult, SolveSettings,
};
pub use norms::{relative_nodal_l2, trace_on, wp_distance, wp_distance_to_exact, RegionSubset, Trace, WpDistance};
