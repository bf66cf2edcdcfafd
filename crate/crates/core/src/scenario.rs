//! Scenario configuration: safety areas, observation types and global settings.
//!
//! A scenario is one JSON document. Field names are the lower_snake_case names
//! used throughout the crate, e.g.
//!
//! ```json
//! {
//!   "areas": [{ "id": "A", "lambda_star": 17, "xi_base": 0.55, "alpha": 0.04,
//!               "k_decay": 0.98, "theta0": 0.1,
//!               "hl_probs": [0.5, 0.35, 0.13, 0.02, 0, 0] }],
//!   "obs_types": [{ "id": "SAO", "m": 2, "rho": 1, "delta_neg": 0.03,
//!                   "eta_pos": 100, "eta_neg": 100 }],
//!   "delta_e": 0.0,
//!   "loss_vector": [0, 1, 10, 100, 1000, 10000],
//!   "horizon_days": 365
//! }
//! ```
//!
//! `rho`, `delta_e`, `loss_vector`, `horizon_days` and `timestep_days` are optional.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::HURT_LEVELS;

/// Tolerance on the hurt-level probability sum and on allocation vectors.
pub const PROB_SUM_TOL: f64 = 1e-9;

pub const DEFAULT_LOSS_VECTOR: [f64; HURT_LEVELS] = [0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0];
pub const DEFAULT_HORIZON_DAYS: u32 = 365;

const CASE_STUDY_JSON: &str = include_str!("../scenarios/case_study.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyAreaConfig {
    pub id: String,
    /// Task rate in tasks per day.
    pub lambda_star: f64,
    /// Worst-case unsafe fraction, reached when the safety state is 0.
    pub xi_base: f64,
    /// Fraction of unsafe tasks that become incidents.
    pub alpha: f64,
    /// Daily complacency decay factor applied to the safety state.
    pub k_decay: f64,
    pub theta0: f64,
    /// Probability of each Hurt level 0..=5 for an incident in this area.
    pub hl_probs: [f64; HURT_LEVELS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationTypeConfig {
    pub id: String,
    /// Observers available per day.
    pub m: u32,
    /// Observations one observer can record per day.
    #[serde(default = "default_rho")]
    pub rho: u32,
    /// Feedback magnitude per observed unsafe activity.
    pub delta_neg: f64,
    /// Dirichlet concentration assigned to each safe activity.
    pub eta_pos: f64,
    /// Dirichlet concentration assigned to each unsafe activity.
    pub eta_neg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub areas: Vec<SafetyAreaConfig>,
    #[serde(default)]
    pub obs_types: Vec<ObservationTypeConfig>,
    /// Feedback magnitude per incident.
    #[serde(default)]
    pub delta_e: f64,
    #[serde(default = "default_loss_vector")]
    pub loss_vector: [f64; HURT_LEVELS],
    #[serde(default = "default_horizon")]
    pub horizon_days: u32,
    /// Only daily steps are supported; kept in the schema so files are explicit.
    #[serde(default = "default_timestep")]
    pub timestep_days: u32,
}

fn default_rho() -> u32 {
    1
}

fn default_loss_vector() -> [f64; HURT_LEVELS] {
    DEFAULT_LOSS_VECTOR
}

fn default_horizon() -> u32 {
    DEFAULT_HORIZON_DAYS
}

fn default_timestep() -> u32 {
    1
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column} (field `{path}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.0.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One broken invariant, rendered as a human-readable sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::ops::Deref for Violation {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl From<Violation> for String {
    fn from(v: Violation) -> Self {
        v.0
    }
}

/// Parses and validates a scenario from JSON text.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            message: inner.to_string(),
        }
    })?;
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

pub fn serialize_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serialization is infallible")
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every scenario invariant. An empty result means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |msg: String| out.push(Violation(msg));

    if s.areas.is_empty() {
        push("scenario must define at least one safety area".into());
    }
    let mut seen = HashSet::new();
    for area in &s.areas {
        let id = &area.id;
        if !seen.insert(id.as_str()) {
            push(format!("duplicate area id `{id}`"));
        }
        if !(area.lambda_star.is_finite() && area.lambda_star > 0.0) {
            push(format!(
                "area `{id}`: lambda_star must be > 0, got {}",
                area.lambda_star
            ));
        }
        for (name, value) in [
            ("xi_base", area.xi_base),
            ("alpha", area.alpha),
            ("k_decay", area.k_decay),
            ("theta0", area.theta0),
        ] {
            if !in_unit(value) {
                push(format!(
                    "area `{id}`: {name} must be in [0, 1], got {value}"
                ));
            }
        }
        if area.hl_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            push(format!("area `{id}`: hl_probs entries must be nonnegative"));
        }
        let total: f64 = area.hl_probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            push(format!("area `{id}`: hl_probs must sum to 1, got {total}"));
        }
    }

    let mut seen = HashSet::new();
    for obs in &s.obs_types {
        let id = &obs.id;
        if !seen.insert(id.as_str()) {
            push(format!("duplicate observation type id `{id}`"));
        }
        if obs.rho == 0 {
            push(format!(
                "observation type `{id}`: rho must be a positive integer"
            ));
        }
        if !in_unit(obs.delta_neg) {
            push(format!(
                "observation type `{id}`: delta_neg must be in [0, 1], got {}",
                obs.delta_neg
            ));
        }
        for (name, value) in [("eta_pos", obs.eta_pos), ("eta_neg", obs.eta_neg)] {
            if !(value.is_finite() && value > 0.0) {
                push(format!(
                    "observation type `{id}`: {name} must be > 0, got {value}"
                ));
            }
        }
    }

    if !in_unit(s.delta_e) {
        push(format!("delta_e must be in [0, 1], got {}", s.delta_e));
    }
    if s.loss_vector.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        push("loss_vector entries must be nonnegative".into());
    }
    if s.loss_vector.windows(2).any(|w| w[1] < w[0]) {
        push("loss_vector must be nondecreasing".into());
    }
    if s.horizon_days == 0 {
        push("horizon_days must be positive".into());
    }
    if s.timestep_days != 1 {
        push(format!("timestep_days must be 1, got {}", s.timestep_days));
    }
    out
}

impl Scenario {
    /// The seven-area, three-observation-type case study shipped with the crate.
    pub fn case_study() -> Scenario {
        load_scenario(CASE_STUDY_JSON).expect("bundled case study is valid")
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    pub fn n_obs_types(&self) -> usize {
        self.obs_types.len()
    }

    /// Total observations the observers can record per day, Σ m·ρ.
    pub fn daily_observation_budget(&self) -> u64 {
        self.obs_types
            .iter()
            .map(|o| u64::from(o.m) * u64::from(o.rho))
            .sum()
    }

    /// Copy of this scenario with every feedback magnitude set to zero.
    pub fn without_feedback(&self) -> Scenario {
        let mut s = self.clone();
        s.delta_e = 0.0;
        for obs in &mut s.obs_types {
            obs.delta_neg = 0.0;
        }
        s
    }
}
