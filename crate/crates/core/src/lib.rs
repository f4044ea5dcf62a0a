//! Soft happy colouring of partially coloured graphs.
//!
//! A vertex is ρ-happy when at least ⌈ρ·deg(v)⌉ of its neighbours share its
//! colour. Given a graph with some vertices precoloured from `k` colours,
//! the goal is to colour the rest so as many vertices as possible are
//! ρ-happy. This crate provides:
//!
//! * [`graph`] and [`instance`]: graphs, instances and their file format;
//! * [`generator`]: stochastic block model instances with precoloured
//!   community representatives;
//! * [`metrics`]: happiness counts, community-detection accuracy and the
//!   ξ / μ / ξ̃ thresholds;
//! * [`heuristics`]: random completion, LMC, LS and RLS;
//! * [`evolution`]: genetic and memetic algorithms in six seeding variants;
//! * [`harness`]: batch campaigns, summaries, Welch tests and plot data.

pub mod evolution;
pub mod generator;
pub mod graph;
pub mod harness;
pub mod heuristics;
pub mod instance;
pub mod metrics;
pub mod seeds;

pub use evolution::{EaConfig, EaOutcome, Improver, Seeding, Variant};
pub use generator::{sample_batch, sample_instance, BatchRanges, SbmParams};
pub use graph::Graph;
pub use instance::{parse_colouring, parse_instance, write_colouring, write_instance, GeneratorMeta, Instance};
pub use metrics::{acd, classify_regime, count_happy, is_rho_happy, Colouring, EvalReport, Regime, Thresholds};
