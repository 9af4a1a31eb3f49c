//! Simulation and almost-periodicity analysis of p-adic self-similar processes
//! with stationary increments.
//!
//! * [`padic`]: valuations, norms, residues and lattice boxes.
//! * [`increments`]: noise laws and counter-based random streams.
//! * [`tree`]: truncated tree-series paths and fields.
//! * [`diagnostics`]: finite-horizon translation numbers, seminorms and moduli.
//! * [`identity`]: two-sample checks of the scaling and increment identities.
//! * [`experiment`]: configuration and scenario runner behind the CLI.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod export;
pub mod identity;
pub mod increments;
pub mod padic;
pub mod tree;

pub use error::{Error, LawError, Result};
pub use increments::{IncrementLaw, RngStream, StreamKey, ValidationContext};
pub use padic::{LatticePoint, PadicContext};
pub use tree::{LazyLevels, NoiseSource, SampleField, SamplePath, TreeLevels, TreeSpec};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
