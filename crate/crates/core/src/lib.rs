//! Exact solver and cut-separation toolkit for power-assignment wireless
//! network design.
//!
//! The modules build on each other:
//!
//! - [`model`]: instances, assignments, generation and JSON formats;
//! - [`feasibility`]: exact SIR feasibility, minimal powers and
//!   irreducible infeasible subsystems;
//! - [`relaxation`]: the pairwise dB difference-constraint graph;
//! - [`cycles`]: negative cycles and the cuts they induce;
//! - [`solver`]: branch-and-bound, root bounds and a greedy start;
//! - [`milp_export`]: big-M LP files, plain or strengthened;
//! - [`bench`]: the seeded comparison suite and its table.

pub mod bench;
pub mod cycles;
pub mod error;
pub mod feasibility;
pub mod milp_export;
pub mod model;
pub mod par;
pub mod relaxation;
pub mod solver;

pub use error::{CutError, FeasibilityError, ModelError};
pub use model::{Instance, PowerVector, ServerAssignment};
pub use par::Parallelism;
