//! Safety-analytics approaches: rules that turn recorded history into daily
//! observer-allocation proportions.
//!
//! A policy only ever sees [`ObservableHistory`], which holds recorded
//! observations and incidents. Latent safety states are not reachable from it.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::event_process::{HurtLevel, Incident};
use crate::observation_process::{Allocation, AllocationError, DayObservations};

pub const DEFAULT_WINDOW_DAYS: u32 = 30;

/// Weights of the case-study "weighted random" approach, areas A..G.
pub const CASE_STUDY_WEIGHTS: [f64; 7] = [0.12, 0.12, 0.12, 0.08, 0.08, 0.28, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub area: usize,
    pub ahl: HurtLevel,
    pub phl: HurtLevel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordedDay {
    pub day: u32,
    pub observations: DayObservations,
    pub incidents: Vec<IncidentRecord>,
}

/// Append-only log of what the safety management system recorded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableHistory {
    days: Vec<RecordedDay>,
}

impl ObservableHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of the day about to be decided (days are numbered from 1).
    pub fn current_day(&self) -> u32 {
        self.days.len() as u32 + 1
    }

    pub fn days(&self) -> &[RecordedDay] {
        &self.days
    }

    pub fn push(&mut self, observations: DayObservations, incidents_by_area: &[Vec<Incident>]) {
        let day = self.current_day();
        let incidents = incidents_by_area
            .iter()
            .enumerate()
            .flat_map(|(area, list)| {
                list.iter().map(move |inc| IncidentRecord {
                    area,
                    ahl: inc.ahl,
                    phl: inc.phl,
                })
            })
            .collect();
        self.days.push(RecordedDay {
            day,
            observations,
            incidents,
        });
    }

    /// The last `window` recorded days (fewer at the start of a run).
    pub fn window(&self, window: u32) -> &[RecordedDay] {
        let start = self.days.len().saturating_sub(window as usize);
        &self.days[start..]
    }

    pub fn incidents_in_window(&self, window: u32) -> impl Iterator<Item = &IncidentRecord> {
        self.window(window).iter().flat_map(|d| d.incidents.iter())
    }
}

/// What the observation process should do today.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyDecision {
    /// No observers are sent out; the observation process is skipped.
    NoObservation,
    /// One proportion vector per observation type, in scenario order.
    Allocate(Vec<Allocation>),
}

impl PolicyDecision {
    pub fn same_for_all(allocation: Allocation, n_obs_types: usize) -> Self {
        PolicyDecision::Allocate(vec![allocation; n_obs_types])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyContext {
    pub n_areas: usize,
    pub n_obs_types: usize,
}

/// An SA approach. Stochastic policies must draw only from `rng`, which the
/// engine supplies from the replication's stream.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    fn decide(
        &self,
        history: &ObservableHistory,
        ctx: PolicyContext,
        rng: &mut dyn RngCore,
    ) -> PolicyDecision;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoObservation;

impl Policy for NoObservation {
    fn name(&self) -> String {
        "none".into()
    }

    fn decide(
        &self,
        _: &ObservableHistory,
        _: PolicyContext,
        _: &mut dyn RngCore,
    ) -> PolicyDecision {
        PolicyDecision::NoObservation
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl Policy for UniformRandom {
    fn name(&self) -> String {
        "uniform".into()
    }

    fn decide(
        &self,
        _: &ObservableHistory,
        ctx: PolicyContext,
        _: &mut dyn RngCore,
    ) -> PolicyDecision {
        PolicyDecision::same_for_all(Allocation::uniform(ctx.n_areas), ctx.n_obs_types)
    }
}

/// Proportional to the number of incidents (near-misses included) per area
/// over the trailing window; uniform when there were none.
#[derive(Debug, Clone, Copy)]
pub struct IncidentCount {
    pub window: u32,
}

impl Default for IncidentCount {
    fn default() -> Self {
        IncidentCount {
            window: DEFAULT_WINDOW_DAYS,
        }
    }
}

impl IncidentCount {
    pub fn weights(&self, history: &ObservableHistory, n_areas: usize) -> Vec<f64> {
        let mut counts = vec![0.0; n_areas];
        for inc in history.incidents_in_window(self.window) {
            counts[inc.area] += 1.0;
        }
        counts
    }
}

impl Policy for IncidentCount {
    fn name(&self) -> String {
        "counts".into()
    }

    fn decide(
        &self,
        history: &ObservableHistory,
        ctx: PolicyContext,
        _: &mut dyn RngCore,
    ) -> PolicyDecision {
        let weights = self.weights(history, ctx.n_areas);
        let allocation =
            Allocation::from_weights(&weights).unwrap_or_else(|_| Allocation::uniform(ctx.n_areas));
        PolicyDecision::same_for_all(allocation, ctx.n_obs_types)
    }
}

/// Weight 2^h per area, h being the highest AHL recorded there in the window
/// (0 when the area had no incidents).
#[derive(Debug, Clone, Copy)]
pub struct IncidentSeverity {
    pub window: u32,
}

impl Default for IncidentSeverity {
    fn default() -> Self {
        IncidentSeverity {
            window: DEFAULT_WINDOW_DAYS,
        }
    }
}

impl IncidentSeverity {
    pub fn weights(&self, history: &ObservableHistory, n_areas: usize) -> Vec<f64> {
        let mut highest = vec![0u8; n_areas];
        for inc in history.incidents_in_window(self.window) {
            highest[inc.area] = highest[inc.area].max(inc.ahl.get());
        }
        highest.into_iter().map(|h| f64::from(1u32 << h)).collect()
    }
}

impl Policy for IncidentSeverity {
    fn name(&self) -> String {
        "severity".into()
    }

    fn decide(
        &self,
        history: &ObservableHistory,
        ctx: PolicyContext,
        _: &mut dyn RngCore,
    ) -> PolicyDecision {
        let weights = self.weights(history, ctx.n_areas);
        let allocation = Allocation::from_weights(&weights).expect("powers of two are positive");
        PolicyDecision::same_for_all(allocation, ctx.n_obs_types)
    }
}

/// The same predefined proportions every day.
#[derive(Debug, Clone)]
pub struct FixedWeights {
    allocation: Allocation,
}

impl FixedWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, AllocationError> {
        Ok(FixedWeights {
            allocation: Allocation::new(weights)?,
        })
    }

    pub fn case_study() -> Self {
        FixedWeights::new(CASE_STUDY_WEIGHTS.to_vec()).expect("case-study weights sum to 1")
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }
}

impl Policy for FixedWeights {
    fn name(&self) -> String {
        let ws: Vec<String> = self
            .allocation
            .as_slice()
            .iter()
            .map(|w| w.to_string())
            .collect();
        format!("weighted:{}", ws.join(","))
    }

    fn decide(
        &self,
        _: &ObservableHistory,
        ctx: PolicyContext,
        _: &mut dyn RngCore,
    ) -> PolicyDecision {
        assert_eq!(
            self.allocation.len(),
            ctx.n_areas,
            "fixed weights must cover every area"
        );
        PolicyDecision::same_for_all(self.allocation.clone(), ctx.n_obs_types)
    }
}

/// Built-in policy named on the command line:
/// `uniform | counts | severity | weighted[:w1,...,wn] | none`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    None,
    Uniform,
    Counts,
    Severity,
    Weighted(Vec<f64>),
}

pub const POLICY_NAMES: &str = "uniform, counts, severity, weighted:<w1,...,wn>, none";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicySpecError {
    #[error("unknown policy `{0}`; valid policies: {POLICY_NAMES}")]
    Unknown(String),
    #[error("bad weight `{0}` in weighted policy")]
    BadWeight(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(#[from] AllocationError),
}

impl FromStr for PolicySpec {
    type Err = PolicySpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "none" | "baseline" => return Ok(PolicySpec::None),
            "uniform" | "random" => return Ok(PolicySpec::Uniform),
            "counts" => return Ok(PolicySpec::Counts),
            "severity" => return Ok(PolicySpec::Severity),
            "weighted" => return Ok(PolicySpec::Weighted(CASE_STUDY_WEIGHTS.to_vec())),
            _ => {}
        }
        let Some(list) = s.strip_prefix("weighted:") else {
            return Err(PolicySpecError::Unknown(s.to_string()));
        };
        let weights = list
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| PolicySpecError::BadWeight(w.trim().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Allocation::new(weights.clone())?;
        Ok(PolicySpec::Weighted(weights))
    }
}

impl PolicySpec {
    /// Short label used for file names and table rows.
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::None => "none",
            PolicySpec::Uniform => "uniform",
            PolicySpec::Counts => "counts",
            PolicySpec::Severity => "severity",
            PolicySpec::Weighted(_) => "weighted",
        }
    }

    pub fn build(&self) -> Box<dyn Policy> {
        match self {
            PolicySpec::None => Box::new(NoObservation),
            PolicySpec::Uniform => Box::new(UniformRandom),
            PolicySpec::Counts => Box::new(IncidentCount::default()),
            PolicySpec::Severity => Box::new(IncidentSeverity::default()),
            PolicySpec::Weighted(w) => {
                Box::new(FixedWeights::new(w.clone()).expect("weights validated at parse time"))
            }
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Weighted(w) => {
                let ws: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "weighted:{}", ws.join(","))
            }
            other => f.write_str(other.label()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    const CTX: PolicyContext = PolicyContext {
        n_areas: 7,
        n_obs_types: 3,
    };

    fn history_with(incidents: &[(usize, u8)], day_offset: usize) -> ObservableHistory {
        let mut h = ObservableHistory::new();
        for _ in 0..day_offset {
            h.push(DayObservations::default(), &vec![vec![]; 7]);
        }
        let mut by_area = vec![vec![]; 7];
        for &(area, ahl) in incidents {
            let level = HurtLevel::new(ahl).unwrap();
            by_area[area].push(Incident {
                ahl: level,
                phl: level,
            });
        }
        h.push(DayObservations::default(), &by_area);
        h
    }

    fn single(decision: PolicyDecision) -> Vec<f64> {
        match decision {
            PolicyDecision::Allocate(v) => {
                assert_eq!(v.len(), 3);
                assert!(v.iter().all(|a| a == &v[0]));
                v[0].as_slice().to_vec()
            }
            PolicyDecision::NoObservation => panic!("expected allocation"),
        }
    }

    fn rng() -> SimRng {
        SimRng::seed_from_u64(0)
    }

    #[test]
    fn uniform_policy() {
        let s = single(UniformRandom.decide(&ObservableHistory::new(), CTX, &mut rng()));
        assert!(s.iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-15));
        let one = PolicyContext {
            n_areas: 1,
            n_obs_types: 3,
        };
        assert_eq!(
            single(UniformRandom.decide(&ObservableHistory::new(), one, &mut rng())),
            vec![1.0]
        );
        let h = history_with(&[(2, 4)], 3);
        assert_eq!(
            UniformRandom.decide(&h, CTX, &mut rng()),
            UniformRandom.decide(&ObservableHistory::new(), CTX, &mut rng())
        );
    }

    #[test]
    fn count_policy() {
        let h = history_with(&[(0, 0), (0, 1), (0, 2), (1, 0)], 0);
        let s = single(IncidentCount::default().decide(&h, CTX, &mut rng()));
        assert_eq!(s, vec![0.75, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let s = single(IncidentCount::default().decide(&ObservableHistory::new(), CTX, &mut rng()));
        assert_eq!(s, Allocation::uniform(7).as_slice());

        let h = history_with(&[(5, 0), (5, 3)], 2);
        let s = single(IncidentCount::default().decide(&h, CTX, &mut rng()));
        assert_eq!(s[5], 1.0);
    }

    #[test]
    fn window_excludes_old_incidents() {
        let mut h = history_with(&[(0, 3)], 0);
        for _ in 0..30 {
            h.push(DayObservations::default(), &vec![vec![]; 7]);
        }
        assert_eq!(h.current_day(), 32);
        assert_eq!(h.incidents_in_window(30).count(), 0);
        assert_eq!(h.incidents_in_window(31).count(), 1);
        let s = single(IncidentSeverity::default().decide(&h, CTX, &mut rng()));
        assert_eq!(s, Allocation::uniform(7).as_slice());
    }

    #[test]
    fn severity_policy() {
        let h = history_with(&[(0, 3), (0, 1)], 0);
        let s = single(IncidentSeverity::default().decide(&h, CTX, &mut rng()));
        assert_relative_eq!(s[0], 8.0 / 14.0, epsilon = 1e-15);
        assert_relative_eq!(s[1], 1.0 / 14.0, epsilon = 1e-15);

        let h = history_with(&[(0, 5)], 0);
        let s = single(IncidentSeverity::default().decide(&h, CTX, &mut rng()));
        assert_relative_eq!(s[0], 32.0 / 38.0, epsilon = 1e-15);

        let h = history_with(&[(0, 2), (1, 2), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2)], 0);
        let s = single(IncidentSeverity::default().decide(&h, CTX, &mut rng()));
        assert!(s.iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn fixed_weights_policy() {
        let p = FixedWeights::case_study();
        let s = single(p.decide(&ObservableHistory::new(), CTX, &mut rng()));
        assert_eq!(s[5], 0.28);
        assert!(FixedWeights::new(vec![0.3, 0.3, 0.3]).is_err());
        let u = FixedWeights::new(Allocation::uniform(7).as_slice().to_vec()).unwrap();
        assert_eq!(
            u.decide(&ObservableHistory::new(), CTX, &mut rng()),
            UniformRandom.decide(&ObservableHistory::new(), CTX, &mut rng())
        );
    }

    #[test]
    fn none_policy() {
        let h = history_with(&[(0, 3)], 4);
        assert_eq!(
            NoObservation.decide(&h, CTX, &mut rng()),
            PolicyDecision::NoObservation
        );
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("none".parse::<PolicySpec>().unwrap(), PolicySpec::None);
        assert_eq!(
            "uniform".parse::<PolicySpec>().unwrap(),
            PolicySpec::Uniform
        );
        assert_eq!("counts".parse::<PolicySpec>().unwrap(), PolicySpec::Counts);
        assert_eq!(
            "severity".parse::<PolicySpec>().unwrap(),
            PolicySpec::Severity
        );
        assert_eq!(
            "weighted:0.12,0.12,0.12,0.08,0.08,0.28,0.2"
                .parse::<PolicySpec>()
                .unwrap(),
            PolicySpec::Weighted(CASE_STUDY_WEIGHTS.to_vec())
        );
        assert!(matches!(
            "weighted:0.5,0.4".parse::<PolicySpec>(),
            Err(PolicySpecError::InvalidWeights(_))
        ));
        assert!(matches!(
            "weighted:a,b".parse::<PolicySpec>(),
            Err(PolicySpecError::BadWeight(_))
        ));
        let err = "greedy".parse::<PolicySpec>().unwrap_err().to_string();
        assert!(err.contains("uniform") && err.contains("severity"), "{err}");
    }

    #[test]
    fn spec_display_round_trips() {
        for spec in [
            PolicySpec::None,
            PolicySpec::Counts,
            PolicySpec::Weighted(CASE_STUDY_WEIGHTS.to_vec()),
        ] {
            assert_eq!(spec.to_string().parse::<PolicySpec>().unwrap(), spec);
        }
    }
}
