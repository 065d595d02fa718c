//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated an operation's domain (negative speed, zero step, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Bad static configuration (degenerate motor map, misaligned signal, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A scenario file failed to parse.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A scenario violated a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// The planner found no feasible trajectory.
    #[error("planning failure: {0}")]
    Planning(String),

    /// A follower touched its predecessor's rear bumper.
    #[error("collision at t={time_s:.3} s: bumper gap {gap_m:.3} m")]
    Collision { time_s: f64, gap_m: f64 },

    /// Follower simulation ran past the allowed horizon.
    #[error("horizon exhausted: {0}")]
    Horizon(String),

    /// A pipeline stage failed for a specific vehicle.
    #[error("vehicle {vehicle_id} ({stage}): {source}")]
    Pipeline {
        vehicle_id: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn for_vehicle(self, vehicle_id: usize, stage: &'static str) -> Error {
        Error::Pipeline {
            vehicle_id,
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 1 for input problems, 2 for pipeline failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Domain(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Validation(_) => 1,
            Error::Pipeline { source, .. } => source.exit_code().max(2),
            _ => 2,
        }
    }
}
