//! Ground-truth safety metrics computed analytically from the latent state.

use serde::{Deserialize, Serialize};

use crate::event_process::AreaState;
use crate::scenario::{SafetyAreaConfig, Scenario};
use crate::HURT_LEVELS;

/// Lowest Hurt level counted as a severe (fatal) incident.
pub const SEVERE_LEVEL: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaMetrics {
    pub expected_loss: f64,
    pub tail_prob: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayMetrics {
    pub per_area: Vec<AreaMetrics>,
    pub expected_loss: f64,
    pub tail_prob: f64,
}

/// Expected daily number of incidents at Hurt level j: α·ξ·λ*·p_j.
pub fn expected_hl_count(lambda_star: f64, xi: f64, alpha: f64, p_j: f64) -> f64 {
    alpha * xi * lambda_star * p_j
}

pub fn expected_daily_loss_at(
    area: &SafetyAreaConfig,
    xi: f64,
    loss_vector: &[f64; HURT_LEVELS],
) -> f64 {
    loss_vector
        .iter()
        .zip(&area.hl_probs)
        .map(|(c, p)| c * expected_hl_count(area.lambda_star, xi, area.alpha, *p))
        .sum()
}

pub fn expected_daily_loss(
    area: &SafetyAreaConfig,
    state: &AreaState,
    loss_vector: &[f64; HURT_LEVELS],
) -> f64 {
    expected_daily_loss_at(area, state.xi(area), loss_vector)
}

/// P(AHL = j) for each level: (1 − Poisson(0; λ*αξ))·p_j.
///
/// The j = 0 entry uses the same expression. It is not the probability of a
/// near-miss-free day, and neither metric reads it.
pub fn ahl_marginal(
    lambda_star: f64,
    xi: f64,
    alpha: f64,
    hl_probs: &[f64; HURT_LEVELS],
) -> [f64; HURT_LEVELS] {
    let any_incident = -(-lambda_star * alpha * xi).exp_m1();
    hl_probs.map(|p| any_incident * p)
}

pub fn tail_probability_at(area: &SafetyAreaConfig, xi: f64) -> f64 {
    ahl_marginal(area.lambda_star, xi, area.alpha, &area.hl_probs)[SEVERE_LEVEL..]
        .iter()
        .sum()
}

/// Daily probability of an incident with AHL ≥ 4 in this area.
pub fn tail_probability(area: &SafetyAreaConfig, state: &AreaState) -> f64 {
    tail_probability_at(area, state.xi(area))
}

/// Sums expected loss over areas; the aggregate tail probability is the
/// chance that at least one area has a severe incident.
pub fn aggregate_metrics(per_area: Vec<AreaMetrics>) -> DayMetrics {
    let expected_loss = per_area.iter().map(|m| m.expected_loss).sum();
    let none_severe: f64 = per_area.iter().map(|m| 1.0 - m.tail_prob).product();
    DayMetrics {
        per_area,
        expected_loss,
        tail_prob: (1.0 - none_severe).clamp(0.0, 1.0),
    }
}

/// Metrics for every area at the given unsafe fractions.
pub fn day_metrics(scenario: &Scenario, xis: &[f64]) -> DayMetrics {
    let per_area = scenario
        .areas
        .iter()
        .zip(xis)
        .map(|(area, &xi)| AreaMetrics {
            expected_loss: expected_daily_loss_at(area, xi, &scenario.loss_vector),
            tail_prob: tail_probability_at(area, xi),
        })
        .collect();
    aggregate_metrics(per_area)
}

/// Limit reached without any feedback, every area at ξ = ξ_base.
pub fn baseline_asymptote(scenario: &Scenario) -> DayMetrics {
    let xis: Vec<f64> = scenario.areas.iter().map(|a| a.xi_base).collect();
    day_metrics(scenario, &xis)
}
