//! Dam-break flooding waves on adaptive triangular meshes.
//!
//! The crate is organized as a pipeline:
//!
//! * [`cpgraph`] — a composition-graph mesh data model whose four rewrite
//!   productions implement Rivara longest-edge bisection without hanging
//!   nodes.
//! * [`terrain`] — ESRI ASCII raster ingestion and the elevation-error
//!   criterion that drives mesh refinement toward topographic features.
//! * [`femcore`] — P1 finite-element assembly of the mass, damping, and
//!   stiffness operators of the shallow-water-derived wave equation in
//!   longitude-latitude coordinates, plus a preconditioned CG solver.
//! * [`timestepper`] — generalized-α time integration with parameters
//!   derived from a target spectral radius.
//! * [`simulation`] — dam-break scenarios: initial water-level regions,
//!   gauges, front-speed estimation, VTU snapshots.
//! * [`bench`] — multi-thread scaling harness with per-category timings.
//!
//! Water level `u` is measured in meters relative to the reference sea
//! level; the seabed field `h_b` is negative below sea level. Longitudes
//! and latitudes are degrees throughout; all physical lengths are meters.

pub mod bench;
pub mod cli;
pub mod cpgraph;
pub mod femcore;
pub mod simulation;
pub mod terrain;
pub mod timestepper;

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants mirror the failure modes of the pipeline stages so callers can
/// match on them; the CLI maps every variant to a nonzero exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown triangle id {0}")]
    UnknownTriangle(u64),

    #[error("unknown edge id {0}")]
    UnknownEdge(u64),

    #[error("triangle {0} is not flagged for refinement")]
    NotFlagged(u64),

    /// A rewrite production was applied to a graph location where its
    /// left-hand side does not match (e.g. splitting an unmarked edge).
    #[error("production does not match at edge {edge}: {reason}")]
    ProductionMismatch { edge: u64, reason: String },

    #[error("mesh is not conforming: {0}")]
    NotConforming(String),

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("point ({lon}, {lat}) lies outside the raster coverage")]
    OutOfDomain { lon: f64, lat: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("front did not arrive: {0}")]
    NoArrival(String),

    #[error("benchmark rejected: {0}")]
    Nondeterminism(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Wraps an error with the pipeline stage it occurred in, so scenario
    /// failures read `simulate: setup: ...` or `step 17: ...`.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attaches a pipeline stage name to an error.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use cpgraph::{chord_length, MeshGraph};
pub use femcore::PhysicsConstants;
pub use terrain::TerrainRaster;
