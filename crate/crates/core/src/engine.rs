//! Daily simulation loop, single runs and replicated ensembles.
//!
//! Random draws within a day happen in a fixed order: areas in scenario order
//! (event counts, then AHLs, then PHLs for each area), then any draws the
//! policy makes, then for each observation type the observer allocation
//! followed by per-area selection.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::event_process::{step_events, AreaState, DayEvents, Incident};
use crate::intervention_process::step_theta;
use crate::metrics::{day_metrics, DayMetrics};
use crate::observation_process::{step_observations, DayObservations, ObservedCounts};
use crate::policies::{ObservableHistory, Policy, PolicyContext, PolicyDecision};
use crate::scenario::Scenario;
use crate::stats::{mean, nearest_rank, std_dev};
use crate::{SimRng, HURT_LEVELS};

/// Latent state plus the recorded history of one replication.
#[derive(Debug, Clone)]
pub struct SimState {
    pub areas: Vec<AreaState>,
    pub history: ObservableHistory,
}

impl SimState {
    pub fn initial(scenario: &Scenario) -> Self {
        SimState {
            areas: scenario
                .areas
                .iter()
                .map(|a| AreaState { theta: a.theta0 })
                .collect(),
            history: ObservableHistory::new(),
        }
    }
}

/// Everything that happened on one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    /// Safety state each area started the day with.
    pub theta: Vec<f64>,
    /// Unsafe fraction used to generate the day's events.
    pub xi: Vec<f64>,
    pub events: Vec<DayEvents>,
    pub decision: PolicyDecision,
    pub observations: DayObservations,
    pub metrics: DayMetrics,
}

impl DayRecord {
    /// Incident counts by AHL summed over areas.
    pub fn incidents_by_level(&self) -> [u32; HURT_LEVELS] {
        let mut out = [0; HURT_LEVELS];
        for inc in self.events.iter().flat_map(|e| &e.incidents) {
            out[inc.ahl.index()] += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub policy: String,
    pub seed: u64,
    /// Day `i + 1` is at index `i`.
    pub records: Vec<DayRecord>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    /// Total incidents per (area, AHL) over the whole run.
    pub fn incident_totals(&self, n_areas: usize) -> Vec<[u32; HURT_LEVELS]> {
        let mut totals = vec![[0u32; HURT_LEVELS]; n_areas];
        for rec in &self.records {
            for (area, ev) in rec.events.iter().enumerate() {
                for inc in &ev.incidents {
                    totals[area][inc.ahl.index()] += 1;
                }
            }
        }
        totals
    }

    /// Total incidents per AHL summed over areas.
    pub fn severity_counts(&self) -> [u32; HURT_LEVELS] {
        let mut out = [0; HURT_LEVELS];
        for rec in &self.records {
            for (o, c) in out.iter_mut().zip(rec.incidents_by_level()) {
                *o += c;
            }
        }
        out
    }
}

/// Advances the simulation by one day and returns what happened.
pub fn step_day(
    state: &mut SimState,
    scenario: &Scenario,
    policy: &dyn Policy,
    rng: &mut SimRng,
) -> DayRecord {
    let day = state.history.current_day();
    let theta: Vec<f64> = state.areas.iter().map(|s| s.theta).collect();
    let xi: Vec<f64> = scenario
        .areas
        .iter()
        .zip(&state.areas)
        .map(|(cfg, s)| s.xi(cfg))
        .collect();

    let events: Vec<DayEvents> = scenario
        .areas
        .iter()
        .zip(&state.areas)
        .map(|(cfg, s)| step_events(rng, cfg, s))
        .collect();

    let ctx = PolicyContext {
        n_areas: scenario.n_areas(),
        n_obs_types: scenario.n_obs_types(),
    };
    let decision = policy.decide(&state.history, ctx, rng);

    let observations = match &decision {
        PolicyDecision::NoObservation => DayObservations {
            by_type: vec![vec![ObservedCounts::default(); ctx.n_areas]; ctx.n_obs_types],
        },
        PolicyDecision::Allocate(allocations) => {
            assert_eq!(
                allocations.len(),
                ctx.n_obs_types,
                "policy `{}` must return one allocation per observation type",
                policy.name()
            );
            assert!(
                allocations.iter().all(|a| a.len() == ctx.n_areas),
                "policy `{}` returned an allocation of the wrong length",
                policy.name()
            );
            step_observations(rng, scenario, &events, allocations)
        }
    };

    for (i, (cfg, s)) in scenario
        .areas
        .iter()
        .zip(state.areas.iter_mut())
        .enumerate()
    {
        let negatives = observations.negatives_in_area(i);
        s.theta = step_theta(
            s.theta,
            cfg,
            &negatives,
            events[i].counts.incidents,
            scenario,
        );
    }

    let metrics = day_metrics(scenario, &xi);

    let incidents: Vec<Vec<Incident>> = events.iter().map(|e| e.incidents.clone()).collect();
    state.history.push(observations.clone(), &incidents);

    DayRecord {
        day,
        theta,
        xi,
        events,
        decision,
        observations,
        metrics,
    }
}

pub fn run_simulation(
    scenario: &Scenario,
    policy: &dyn Policy,
    seed: u64,
    horizon: u32,
) -> Trajectory {
    assert!(horizon >= 1, "horizon must be at least one day");
    let mut rng = SimRng::seed_from_u64(seed);
    let mut state = SimState::initial(scenario);
    let records = (0..horizon)
        .map(|_| step_day(&mut state, scenario, policy, &mut rng))
        .collect();
    Trajectory {
        policy: policy.name(),
        seed,
        records,
    }
}

/// Per-day ensemble statistics of the aggregate metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayStats {
    pub day: u32,
    pub mean_expected_loss: f64,
    pub std_expected_loss: f64,
    pub mean_tail_prob: f64,
    pub std_tail_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p05: u32,
    pub p50: u32,
    pub p95: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub policy: String,
    pub base_seed: u64,
    pub n_reps: usize,
    pub days: Vec<DayStats>,
    /// Percentiles of whole-run incident totals, indexed `[area][ahl]`.
    pub incident_percentiles: Vec<[Percentiles; HURT_LEVELS]>,
    /// Whole-run incident totals, indexed `[replication][area][ahl]`, in seed order.
    pub replicate_totals: Vec<Vec<[u32; HURT_LEVELS]>>,
}

impl EnsembleSummary {
    fn sorted_cell(&self, area: Option<usize>, ahl: usize) -> Vec<u32> {
        let mut xs: Vec<u32> = self
            .replicate_totals
            .iter()
            .map(|rep| match area {
                Some(a) => rep[a][ahl],
                None => rep.iter().map(|row| row[ahl]).sum(),
            })
            .collect();
        xs.sort_unstable();
        xs
    }

    /// Nearest-rank percentile of whole-run totals for one area, or summed
    /// over all areas when `area` is `None`.
    pub fn totals_percentile(&self, area: Option<usize>, ahl: usize, q: f64) -> u32 {
        nearest_rank(&self.sorted_cell(area, ahl), q)
    }

    pub fn final_day(&self) -> &DayStats {
        self.days.last().expect("ensemble has at least one day")
    }
}

struct ReplicationResult {
    loss: Vec<f64>,
    tail: Vec<f64>,
    totals: Vec<[u32; HURT_LEVELS]>,
}

fn replicate(
    scenario: &Scenario,
    policy: &dyn Policy,
    seed: u64,
    horizon: u32,
) -> ReplicationResult {
    let traj = run_simulation(scenario, policy, seed, horizon);
    ReplicationResult {
        loss: traj
            .records
            .iter()
            .map(|r| r.metrics.expected_loss)
            .collect(),
        tail: traj.records.iter().map(|r| r.metrics.tail_prob).collect(),
        totals: traj.incident_totals(scenario.n_areas()),
    }
}

/// Runs `n_reps` replications with seeds `base_seed + i` and summarizes them.
/// The result does not depend on whether replications run in parallel.
pub fn run_ensemble(
    scenario: &Scenario,
    policy: &dyn Policy,
    n_reps: usize,
    base_seed: u64,
    horizon: u32,
) -> EnsembleSummary {
    assert!(n_reps >= 1, "ensemble needs at least one replication");
    let seeds: Vec<u64> = (0..n_reps as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();

    #[cfg(feature = "parallel")]
    let reps: Vec<ReplicationResult> = {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&seed| replicate(scenario, policy, seed, horizon))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reps: Vec<ReplicationResult> = seeds
        .iter()
        .map(|&seed| replicate(scenario, policy, seed, horizon))
        .collect();

    summarize(scenario, policy.name(), base_seed, reps)
}

/// Sequential variant of [`run_ensemble`].
pub fn run_ensemble_sequential(
    scenario: &Scenario,
    policy: &dyn Policy,
    n_reps: usize,
    base_seed: u64,
    horizon: u32,
) -> EnsembleSummary {
    assert!(n_reps >= 1, "ensemble needs at least one replication");
    let reps = (0..n_reps as u64)
        .map(|i| replicate(scenario, policy, base_seed.wrapping_add(i), horizon))
        .collect();
    summarize(scenario, policy.name(), base_seed, reps)
}

fn summarize(
    scenario: &Scenario,
    policy: String,
    base_seed: u64,
    reps: Vec<ReplicationResult>,
) -> EnsembleSummary {
    let horizon = reps[0].loss.len();
    let days = (0..horizon)
        .map(|t| {
            let loss: Vec<f64> = reps.iter().map(|r| r.loss[t]).collect();
            let tail: Vec<f64> = reps.iter().map(|r| r.tail[t]).collect();
            DayStats {
                day: t as u32 + 1,
                mean_expected_loss: mean(&loss),
                std_expected_loss: std_dev(&loss),
                mean_tail_prob: mean(&tail),
                std_tail_prob: std_dev(&tail),
            }
        })
        .collect();

    let replicate_totals: Vec<Vec<[u32; HURT_LEVELS]>> =
        reps.into_iter().map(|r| r.totals).collect();
    let incident_percentiles = (0..scenario.n_areas())
        .map(|area| {
            std::array::from_fn(|ahl| {
                let mut xs: Vec<u32> = replicate_totals.iter().map(|rep| rep[area][ahl]).collect();
                xs.sort_unstable();
                Percentiles {
                    p05: nearest_rank(&xs, 5.0),
                    p50: nearest_rank(&xs, 50.0),
                    p95: nearest_rank(&xs, 95.0),
                }
            })
        })
        .collect();

    EnsembleSummary {
        policy,
        base_seed,
        n_reps: replicate_totals.len(),
        days,
        incident_percentiles,
        replicate_totals,
    }
}
