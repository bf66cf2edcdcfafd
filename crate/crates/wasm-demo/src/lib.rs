//! Browser bindings for the simulator: a closed-form ξ curve, a single
//! trajectory, and an ensemble comparison chart, all on the bundled case study.

use safesim::event_process::{decay_theta, xi_of_theta};
use safesim::metrics::baseline_asymptote;
use safesim::reports::{band_chart_svg, trajectory_csv, ChartSeries, Metric};
use safesim::{run_ensemble, run_simulation, PolicySpec, Scenario};
use wasm_bindgen::prelude::*;

/// Largest ensemble the page will run; keeps the tab responsive.
pub const MAX_REPS: u32 = 200;

/// ξ(t) for t = 0..=days with no feedback.
pub fn xi_series(xi_base: f64, k_decay: f64, theta0: f64, days: u32) -> Result<Vec<f64>, String> {
    if !(0.0..=1.0).contains(&xi_base)
        || !(0.0..=1.0).contains(&k_decay)
        || !(0.0..=1.0).contains(&theta0)
    {
        return Err("xi_base, k and theta0 must all lie in [0, 1]".into());
    }
    let mut theta = theta0;
    let mut out = Vec::with_capacity(days as usize + 1);
    for _ in 0..=days {
        out.push(xi_of_theta(theta, xi_base));
        theta = decay_theta(theta, k_decay);
    }
    Ok(out)
}

fn parse_policy(scenario: &Scenario, text: &str) -> Result<PolicySpec, String> {
    let spec: PolicySpec = text.trim().parse().map_err(|e| format!("{e}"))?;
    if let PolicySpec::Weighted(w) = &spec {
        if w.len() != scenario.n_areas() {
            return Err(format!(
                "weighted policy needs {} weights",
                scenario.n_areas()
            ));
        }
    }
    Ok(spec)
}

fn check_horizon(horizon: u32) -> Result<(), String> {
    if (1..=3650).contains(&horizon) {
        Ok(())
    } else {
        Err("horizon must be between 1 and 3650 days".into())
    }
}

/// Trajectory CSV of one case-study run.
pub fn trajectory(policy: &str, seed: u32, horizon: u32) -> Result<String, String> {
    check_horizon(horizon)?;
    let scenario = Scenario::case_study();
    let spec = parse_policy(&scenario, policy)?;
    let traj = run_simulation(&scenario, spec.build().as_ref(), u64::from(seed), horizon);
    Ok(trajectory_csv(&scenario, &traj))
}

/// SVG band chart of the baseline plus each whitespace-separated policy.
/// `metric` is `loss` or `tail`.
pub fn compare_chart(
    policies: &str,
    metric: &str,
    reps: u32,
    seed: u32,
    horizon: u32,
) -> Result<String, String> {
    check_horizon(horizon)?;
    if !(1..=MAX_REPS).contains(&reps) {
        return Err(format!("reps must be between 1 and {MAX_REPS}"));
    }
    let metric = match metric {
        "loss" => Metric::ExpectedLoss,
        "tail" => Metric::TailProbability,
        other => return Err(format!("unknown metric '{other}' (expected loss or tail)")),
    };
    let scenario = Scenario::case_study();
    let mut specs = vec![PolicySpec::None];
    for word in policies.split_whitespace() {
        let spec = parse_policy(&scenario, word)?;
        if !specs.contains(&spec) {
            specs.push(spec);
        }
    }
    let series: Vec<ChartSeries> = specs
        .iter()
        .map(|spec| {
            let summary = run_ensemble(
                &scenario,
                spec.build().as_ref(),
                reps as usize,
                u64::from(seed),
                horizon,
            );
            ChartSeries {
                label: if *spec == PolicySpec::None {
                    "baseline".into()
                } else {
                    spec.label().to_string()
                },
                days: summary.days,
            }
        })
        .collect();
    let limit = baseline_asymptote(&scenario);
    let asymptote = match metric {
        Metric::ExpectedLoss => limit.expected_loss,
        Metric::TailProbability => limit.tail_prob,
    };
    Ok(band_chart_svg(metric, &series, Some(asymptote)))
}

#[wasm_bindgen(js_name = xiCurve)]
pub fn xi_curve(xi_base: f64, k_decay: f64, theta0: f64, days: u32) -> Result<Vec<f64>, JsError> {
    xi_series(xi_base, k_decay, theta0, days).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateCsv)]
pub fn simulate_csv(policy: &str, seed: u32, horizon: u32) -> Result<String, JsError> {
    trajectory(policy, seed, horizon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareSvg)]
pub fn compare_svg(
    policies: &str,
    metric: &str,
    reps: u32,
    seed: u32,
    horizon: u32,
) -> Result<String, JsError> {
    compare_chart(policies, metric, reps, seed, horizon).map_err(|e| JsError::new(&e))
}
