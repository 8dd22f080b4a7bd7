//! Non-contiguous wideband spectrum sensing with sub-Nyquist sampling and
//! online learning of per-band occupancy statistics.
//!
//! The crate is organised along the processing chain of a sensing receiver:
//!
//! - [`spectrum`]: ground-truth environment (two-state Markov band occupancy
//!   and frequency-domain band content).
//! - [`sns`]: the mixing matrix and the per-bin measurement `Z = A X + W`.
//! - [`reconstruction`]: recovery of the selected bands from the compressed
//!   measurements, energy detection and the reconstruction-failure flag.
//! - [`selection`]: Poisson-binomial busy-count law, reconstruction success
//!   probability, throughput-optimal set sizing and the exploration bound.
//! - [`policy`]: belief tracking and the LDM / OLDM / IMP band-selection
//!   policies.
//! - [`harness`]: seeded Monte-Carlo experiments, regret metrics, CSV output
//!   and the command line front end.
//!
//! Band indices are zero-based throughout the API.

pub mod error;
pub mod harness;
pub mod policy;
pub mod reconstruction;
pub mod rng;
pub mod selection;
pub mod sns;
pub mod spectrum;

pub use error::{Error, Result};
