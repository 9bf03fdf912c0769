//! Directional-modulation security with a time-modulated reflecting surface:
//! a closed-form OFDM link model, a discrete assignment MDP over the
//! switching parameters, a flow-network sampler trained with the
//! trajectory-balance objective, meta-learned fast adaptation across user
//! directions, and a deterministic experiment harness with a CLI.
//!
//! Every stochastic routine takes an explicit seed; identical inputs replay
//! bit-exactly, including the CSV artifacts the harness writes.

pub mod error;
pub mod gflownet;
pub mod harness;
pub mod mdp;
pub mod meta;
pub mod nn;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use gflownet::{TaskEnv, TrainSchedule};
pub use mdp::{AssignmentState, DiscretizationGrid, Trajectory};
pub use meta::{DirectionTask, MetaConfig, TaskRegion};
pub use nn::{InitScheme, PolicyNet};
pub use signal::{Direction, OfdmSpec, SinrMode, SystemGeometry, TmIrsConfig};
