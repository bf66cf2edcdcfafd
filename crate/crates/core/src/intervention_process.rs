//! Safety-state updates: feedback from observed unsafe activities and
//! incidents, otherwise complacency decay.

use crate::event_process::decay_theta;
use crate::scenario::{SafetyAreaConfig, Scenario};

/// Σ_X n_X·δ_X + n_e·δ_e.
pub fn feedback_drive(
    negatives_by_type: &[u32],
    deltas_neg: &[f64],
    incidents: u32,
    delta_e: f64,
) -> f64 {
    debug_assert_eq!(negatives_by_type.len(), deltas_neg.len());
    let observed: f64 = negatives_by_type
        .iter()
        .zip(deltas_neg)
        .map(|(&n, &d)| f64::from(n) * d)
        .sum();
    observed + f64::from(incidents) * delta_e
}

/// Moves theta toward 1 in proportion to the feedback drive, clamped to [0, 1].
pub fn apply_feedback(
    theta: f64,
    negatives_by_type: &[u32],
    incidents: u32,
    deltas_neg: &[f64],
    delta_e: f64,
) -> f64 {
    let drive = feedback_drive(negatives_by_type, deltas_neg, incidents, delta_e);
    (theta + (1.0 - theta) * drive).clamp(0.0, 1.0)
}

/// Next-day safety state. Feedback and decay are mutually exclusive: decay
/// only happens on days with zero feedback drive.
pub fn step_theta(
    theta: f64,
    area: &SafetyAreaConfig,
    negatives_by_type: &[u32],
    incidents: u32,
    scenario: &Scenario,
) -> f64 {
    let deltas: Vec<f64> = scenario.obs_types.iter().map(|o| o.delta_neg).collect();
    let drive = feedback_drive(negatives_by_type, &deltas, incidents, scenario.delta_e);
    if drive > 0.0 {
        apply_feedback(
            theta,
            negatives_by_type,
            incidents,
            &deltas,
            scenario.delta_e,
        )
    } else {
        decay_theta(theta, area.k_decay)
    }
}
