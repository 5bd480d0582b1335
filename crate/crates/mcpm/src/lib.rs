//! Link-level toolkit for molecular communication via diffusion (MCD).
//!
//! The crate models a point transmitter releasing molecules that diffuse to a
//! perfectly absorbing spherical receiver, and builds a full link around that
//! channel: hybrid concentration/position modulation (MCPM) together with the
//! classic BCSK and PPM baselines, optimal sequence detection and a
//! reduced-complexity two-phase detector, a closed-form error-rate analysis,
//! convex design of the modulation parameters, and a seeded Monte Carlo
//! simulator that validates all of the above.
//!
//! Modules mirror the signal chain:
//!
//! * [`channel`] - first-hit statistics and slotted channel coefficients
//! * [`modulation`] - bit grouping, symbol mapping, emission frames
//! * [`detection`] - MLSD (Viterbi and exhaustive) and threshold detectors
//! * [`analysis`] - analytic bit error rate for MCPM
//! * [`optimizer`] - cost-based selection of the concentration split and
//!   detection threshold
//! * [`simulator`] - reproducible Monte Carlo experiments
//! * [`config`] / [`report`] / [`runner`] - run configuration, CSV output,
//!   and the config-driven pipelines shared by the command line tool and
//!   the C bindings

pub mod analysis;
pub mod channel;
pub mod config;
pub mod detection;
mod error;
pub mod modulation;
pub mod numerics;
pub mod optimizer;
pub mod report;
pub mod runner;
pub mod simulator;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
