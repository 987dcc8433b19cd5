//! Tabular entropy-regularized MDPs, multi-expert inverse reinforcement
//! learning, and certificates for transferring learned rewards to new
//! dynamics.

pub mod envs;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod irl;
pub mod mdp;
pub mod regularizer;
pub mod report;
pub mod rng;
pub mod solver;
pub mod transfer;

pub use error::{Error, Result};
pub use mdp::{MdpSpec, OccupancyMeasure, Policy, Reward};
pub use regularizer::{Regularizer, RegularizerKind};
pub use solver::{SolveOptions, SolveReport};
