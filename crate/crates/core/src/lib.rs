//! Recoil-growth Markov chain Monte Carlo for dense systems of
//! self-avoiding polymers on a periodic hypercubic lattice.

pub mod energy;
pub mod entangled;
pub mod error;
pub mod graph;
pub mod growth;
pub mod lattice;
pub mod mcmc;
pub mod oracle;
pub mod runner;
pub mod state;
pub mod verify;

pub use energy::{Energy, EnergyModel};
pub use error::{Error, Result};
pub use graph::{DegreeDistribution, DegreeMode, GraphConstants, UnderlyingGraph};
pub use lattice::{Lattice, LatticeConfig, VertexId};
pub use mcmc::{Chain, ChainConfig, ChainStats, Implementation, StepKind, StepOutcome};
pub use state::{Occupancy, Polymer, Snapshot, SystemState};
