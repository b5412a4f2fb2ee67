//! Joint transmit beamforming, artificial-noise and IRS phase-shift design
//! for secure multiuser MISO downlinks.
//!
//! The optimizer alternates between two blocks:
//!
//! * For fixed IRS phases, beamforming covariances `W_k` and the AN
//!   covariance `Z` are found by successive convex approximation over a
//!   semidefinite-relaxed subproblem ([`sca`], [`convex`]).
//! * For fixed `(W, Z)`, the unit-modulus phase vector `u` is optimized by
//!   Riemannian conjugate gradient on the complex oblique manifold
//!   ([`manifold`]).
//!
//! [`orchestrator`] glues both together and provides the two reference
//! baselines; [`experiments`] runs seeded Monte-Carlo sweeps and writes CSV
//! tables and SVG plots.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod convex;
pub mod error;
pub mod experiments;
pub mod history;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod orchestrator;
pub mod sca;
pub mod testing;

pub use channel::{generate_scenario, normalize, ChannelSet, LinkClass, ScenarioConfig};
pub use error::{Error, Result};
pub use history::{HistoryRecord, Phase, RunHistory};
pub use metrics::{secrecy_rates, ObjectiveBreakdown, TransmitSolution};
pub use orchestrator::{baseline_no_an, baseline_random_phase, optimize, Scheme};
