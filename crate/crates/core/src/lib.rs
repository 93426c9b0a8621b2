//! Minimum-energy joint link scheduling and rate adaptation for hybrid
//! shore / UAV / vessel relay networks.
//!
//! The pipeline is: build or load a [`scenario::Scenario`], predict the
//! large-scale channel with [`channel::predict_csi`], then either solve the
//! relaxed problem directly ([`solver::solve_relaxed`]) or run the iterative
//! scheduler ([`scheduler::run_scheduler`]) to obtain a binary schedule with
//! matching rates. [`baselines`] holds the reference schemes.

pub mod baselines;
pub mod channel;
mod error;
pub mod links;
pub mod oracle;
pub mod par;
pub mod ratelink;
pub mod report;
pub mod scenario;
pub mod scheduler;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use links::{ForcedZeroSet, LinkGrid, LinkSlot, NodeRole, RateAllocation, Schedule};
