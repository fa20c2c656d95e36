//! Deterministic simulator for conservative pairwise exchange dynamics on
//! time-varying social graphs.
//!
//! Two interaction rules share one state type: a money-transfer rule where a
//! selected pair moves a fraction `mu` of their wealth gap subject to
//! per-agent credit floors and exact conservation of the total, and a
//! bounded-confidence opinion rule where the pair averages toward each other
//! only if their values differ by at most a confidence threshold.
//!
//! Every run is a pure function of its configuration and seed. The engine
//! audits each step against the exact quadratic-potential drop identity and
//! tracks consensus and order-statistic stability, so property violations
//! surface per step rather than per run.
//!
//! All numeric code is generic over [`SimScalar`]; `f64` is the working
//! backend and [`Rational`] gives exact arithmetic for audits where equality
//! must hold bit-for-bit.

pub mod config;
pub mod engine;
pub mod graphs;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod stochastic;

pub use config::{ConfigError, ScenarioConfig};
pub use engine::{AuditReport, Simulation, StepRecord, Trajectory};
pub use model::{InteractionMode, ModelError, OutcomeReason, TransactionOutcome, WealthState};
pub use scalar::SimScalar;

/// Exact arithmetic backend: arbitrary-precision rationals.
pub type Rational = num_rational::BigRational;

/// Wealth state on the default floating-point backend.
pub type WealthStateF64 = model::WealthState<f64>;
/// Wealth state on the exact rational backend.
pub type WealthStateExact = model::WealthState<Rational>;
/// Trajectory on the default floating-point backend.
pub type TrajectoryF64 = engine::Trajectory<f64>;
/// Trajectory on the exact rational backend.
pub type TrajectoryExact = engine::Trajectory<Rational>;
