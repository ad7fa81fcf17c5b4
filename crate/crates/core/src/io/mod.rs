//! Configuration and density files, experiment runs and their manifests.

mod config;
mod density_file;
mod manifest;
mod run;

pub use config::{emit_config, parse_config, parse_config_str, DensitySource, ExperimentConfig, ExperimentKind};
pub use density_file::{emit_density, parse_density, read_density, DensityKindSpec, DensitySpec};
pub use manifest::{
    hash_file, read_manifest, sha256_hex, verify_manifest, Manifest, ManifestEntry, RunStatus, MANIFEST_FILE,
};
pub use run::{export_field, prepare_output_dir, run_experiment, RunOptions, RunOutcome};
