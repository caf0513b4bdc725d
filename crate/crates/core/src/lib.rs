//! Affine formation maneuvers for leader/follower multi-agent systems using
//! complex-valued (2-D) and real-valued axis (3-D) Laplacians.

pub mod error;
pub mod graph;
pub mod laplacian;
pub mod maneuver;
pub mod presets;
pub mod scenario;
pub mod sim;
pub mod control;

pub use error::{ErrorCategory, FormationError, Result};
pub use graph::{build_graph, FormationGraph};
pub use laplacian::{assemble, ComplexScalar, LaplacianBlocks, NominalConfig};
