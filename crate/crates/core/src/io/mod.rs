//! Configuration, batch runs, sweeps and their on-disk formats.

pub mod config;
pub mod profile;
mod run;
mod sweep;

pub use config::{parse_config, parse_config_str, Method, RunConfig, OUTPUT_ROOT_VAR};
pub use profile::{parse_node_file_str, parse_profile, Profile};
pub use run::{grid_hash, run, status_of, write_iterations, Row, RunSummary, ITERATIONS_HEADER};
pub use sweep::{probe_contraction, sweep, sweep_points, ProbeRow, SweepPoint, SweepSummary};
