//! Job files, external tool runs, reports and the `verify` command built
//! on `stverif-core`.

pub mod job;
pub mod pipeline;
pub mod report;
pub mod tools;

pub use job::{load_job, parse_job, ConfigError, JobConfig};
pub use pipeline::{run_job, JobOutcome, RunOptions};
pub use report::Report;
