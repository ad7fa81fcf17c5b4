//! Large-data limits: limit fields, λ sweeps with their a priori checks, and
//! the oscillating-density counterexample.

mod bundle;
mod counterexample;
mod sweep;

pub use bundle::{compute_limit_bundle, weighted_b_energy, LimitBundle, Regime};
pub use counterexample::{
    compute_limit_energies, run_counterexample, ControlReport, CounterexampleParams, CounterexampleReport, Family,
    LimitEnergies, Sample, WindowAudit,
};
pub use sweep::{
    check_a_priori_bounds, check_fundamental_inequality, run_lambda_sweep, sweep_csv, BoundCheck, FundamentalCheck,
    LimitProblem, Sweep, SweepRecord, BOUND_SLACK, FUNDAMENTAL_TOL,
};
