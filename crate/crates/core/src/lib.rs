//! Stochastic simulator of an industrial work environment and its safety
//! management system, for benchmarking observer-allocation policies against
//! ground-truth safety metrics.
//!
//! Each safety area evolves independently: an event process generates daily
//! incidents and safe/unsafe activities, an observation process records some
//! of the activities according to a policy's observer allocation, and an
//! intervention process feeds observed unsafe activities back into the
//! area's latent safety state. Metrics are computed from that latent state.

pub mod engine;
pub mod event_process;
pub mod intervention_process;
pub mod metrics;
pub mod observation_process;
pub mod policies;
pub mod reports;
pub mod scenario;
pub mod stats;

/// Number of Hurt levels, 0 (near-miss) through 5.
pub const HURT_LEVELS: usize = 6;

/// Random stream used for one replication.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use engine::{
    run_ensemble, run_simulation, step_day, DayRecord, EnsembleSummary, SimState, Trajectory,
};
pub use policies::{Policy, PolicyDecision, PolicySpec};
pub use scenario::{load_scenario, validate_scenario, Scenario, ScenarioError};
