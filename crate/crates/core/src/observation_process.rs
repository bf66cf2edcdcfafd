//! Observer allocation and biased recording of safe/unsafe activities.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::event_process::{sample_categorical, DayEvents};
use crate::scenario::{Scenario, PROB_SUM_TOL};

/// Proportions by which observers are spread over the safety areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation(Vec<f64>);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocationError {
    #[error("allocation must cover at least one area")]
    Empty,
    #[error("allocation entry {index} is {value}, expected a value in [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("allocation proportions must sum to 1, got {0}")]
    BadSum(f64),
    #[error("allocation weights must have a positive sum")]
    ZeroWeight,
}

impl Allocation {
    pub fn new(proportions: Vec<f64>) -> Result<Self, AllocationError> {
        if proportions.is_empty() {
            return Err(AllocationError::Empty);
        }
        for (index, &value) in proportions.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(AllocationError::OutOfRange { index, value });
            }
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(AllocationError::BadSum(total));
        }
        Ok(Allocation(proportions))
    }

    /// Normalizes nonnegative weights so they sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self, AllocationError> {
        if weights.is_empty() {
            return Err(AllocationError::Empty);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(AllocationError::OutOfRange { index, value });
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(AllocationError::ZeroWeight);
        }
        Ok(Allocation(weights.iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n_areas: usize) -> Self {
        assert!(n_areas > 0, "uniform allocation over zero areas");
        Allocation(vec![1.0 / n_areas as f64; n_areas])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Allocation {
    type Error = AllocationError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Allocation::new(v)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(a: Allocation) -> Self {
        a.0
    }
}

/// Recorded safe (`positive`) and unsafe (`negative`) activities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedCounts {
    pub positive: u32,
    pub negative: u32,
}

impl ObservedCounts {
    pub fn total(&self) -> u32 {
        self.positive + self.negative
    }
}

/// Observations recorded in one day, indexed `[obs_type][area]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayObservations {
    pub by_type: Vec<Vec<ObservedCounts>>,
}

impl DayObservations {
    pub fn get(&self, obs_type: usize, area: usize) -> ObservedCounts {
        self.by_type
            .get(obs_type)
            .and_then(|row| row.get(area))
            .copied()
            .unwrap_or_default()
    }

    /// Unsafe observations recorded in `area`, one entry per observation type.
    pub fn negatives_in_area(&self, area: usize) -> Vec<u32> {
        self.by_type
            .iter()
            .map(|row| row.get(area).map_or(0, |c| c.negative))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.by_type
            .iter()
            .flatten()
            .map(|c| u64::from(c.total()))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Multinomial(m, s) placement of observers onto areas.
pub fn allocate_observers<R: Rng + ?Sized>(rng: &mut R, m: u32, s: &Allocation) -> Vec<u32> {
    let mut q = vec![0u32; s.len()];
    for _ in 0..m {
        let i = sample_categorical(rng, s.as_slice()).expect("allocation sums to one");
        q[i] += 1;
    }
    q
}

/// Picks which of an area's safe/unsafe activities get recorded.
///
/// `min(capacity, n_pos + n_neg)` distinct events are drawn without
/// replacement, with per-event weights from a Dirichlet whose concentration
/// is `eta_pos` for safe events and `eta_neg` for unsafe ones.
pub fn select_observed<R: Rng + ?Sized>(
    rng: &mut R,
    n_pos: u32,
    n_neg: u32,
    capacity: u64,
    eta_pos: f64,
    eta_neg: f64,
) -> ObservedCounts {
    let total = u64::from(n_pos) + u64::from(n_neg);
    let n_obs = capacity.min(total);
    if n_obs == 0 {
        return ObservedCounts::default();
    }
    if n_obs == total {
        return ObservedCounts {
            positive: n_pos,
            negative: n_neg,
        };
    }

    // Dirichlet weights via independent Gamma(eta, 1) draws. Normalization is
    // skipped since the selection below renormalizes at every pick anyway.
    let gamma_pos = Gamma::new(eta_pos, 1.0).expect("eta_pos > 0");
    let gamma_neg = Gamma::new(eta_neg, 1.0).expect("eta_neg > 0");
    let mut weights: Vec<(f64, bool)> = Vec::with_capacity(total as usize);
    weights.extend((0..n_pos).map(|_| (gamma_pos.sample(rng), false)));
    weights.extend((0..n_neg).map(|_| (gamma_neg.sample(rng), true)));

    let mut out = ObservedCounts::default();
    let mut remaining: f64 = weights.iter().map(|(w, _)| w).sum();
    for _ in 0..n_obs {
        let u = rng.random::<f64>() * remaining;
        let mut acc = 0.0;
        let mut pick = weights.len() - 1;
        for (i, (w, _)) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        let (w, is_unsafe) = weights.swap_remove(pick);
        if is_unsafe {
            out.negative += 1;
        } else {
            out.positive += 1;
        }
        remaining -= w;
    }
    out
}

/// Runs every observation type against the day's events.
///
/// `allocations` holds one proportion vector per observation type, in
/// scenario order.
pub fn step_observations<R: Rng + ?Sized>(
    rng: &mut R,
    scenario: &Scenario,
    events: &[DayEvents],
    allocations: &[Allocation],
) -> DayObservations {
    assert_eq!(allocations.len(), scenario.n_obs_types());
    assert_eq!(events.len(), scenario.n_areas());
    let by_type = scenario
        .obs_types
        .iter()
        .zip(allocations)
        .map(|(obs, s)| {
            let q = allocate_observers(rng, obs.m, s);
            q.iter()
                .zip(events)
                .map(|(&observers, ev)| {
                    select_observed(
                        rng,
                        ev.counts.safe_acts,
                        ev.counts.unsafe_acts,
                        u64::from(obs.rho) * u64::from(observers),
                        obs.eta_pos,
                        obs.eta_neg,
                    )
                })
                .collect()
        })
        .collect();
    DayObservations { by_type }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_process::EventCounts;
    use crate::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn allocation_validation() {
        assert!(Allocation::new(vec![0.5, 0.4]).is_err());
        assert!(Allocation::new(vec![1.2, -0.2]).is_err());
        assert!(Allocation::new(vec![]).is_err());
        assert!(Allocation::new(vec![0.25, 0.75]).is_ok());
        assert_eq!(
            Allocation::from_weights(&[3.0, 1.0, 0.0])
                .unwrap()
                .as_slice(),
            &[0.75, 0.25, 0.0]
        );
        assert_eq!(
            Allocation::from_weights(&[0.0, 0.0]),
            Err(AllocationError::ZeroWeight)
        );
    }

    #[test]
    fn degenerate_proportions() {
        let mut r = rng(1);
        let s = Allocation::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(allocate_observers(&mut r, 5, &s), vec![5, 0, 0, 0]);
        assert_eq!(
            allocate_observers(&mut r, 0, &Allocation::uniform(4)),
            vec![0; 4]
        );
    }

    #[test]
    fn multinomial_mean() {
        let mut r = rng(2);
        let s = Allocation::uniform(7);
        let n = 100_000;
        let mut sums = [0u64; 7];
        for _ in 0..n {
            let q = allocate_observers(&mut r, 2, &s);
            assert_eq!(q.iter().sum::<u32>(), 2);
            for (acc, v) in sums.iter_mut().zip(q) {
                *acc += u64::from(v);
            }
        }
        for v in sums {
            assert!((v as f64 / n as f64 - 2.0 / 7.0).abs() < 0.01);
        }
    }

    #[test]
    fn no_scarcity_observes_everything() {
        let mut r = rng(3);
        let c = select_observed(&mut r, 7, 4, 11, 1.0, 5.0);
        assert_eq!((c.positive, c.negative), (7, 4));
        let c = select_observed(&mut r, 7, 4, 100, 1.0, 5.0);
        assert_eq!((c.positive, c.negative), (7, 4));
    }

    #[test]
    fn nothing_to_observe() {
        let mut r = rng(4);
        assert_eq!(
            select_observed(&mut r, 0, 0, 5, 1.0, 1.0),
            ObservedCounts::default()
        );
        assert_eq!(
            select_observed(&mut r, 9, 9, 0, 1.0, 1.0),
            ObservedCounts::default()
        );
        for _ in 0..100 {
            assert_eq!(select_observed(&mut r, 0, 12, 3, 2.0, 7.0).positive, 0);
        }
    }

    /// Independent route: weighted sampling without replacement by
    /// exponential keys (smallest Exp(1)/w wins), on the same Dirichlet law.
    fn oracle_select(
        rng: &mut SimRng,
        n_pos: u32,
        n_neg: u32,
        cap: usize,
        ep: f64,
        en: f64,
    ) -> (u32, u32) {
        use rand_distr::Exp1;
        let gp = Gamma::new(ep, 1.0).unwrap();
        let gn = Gamma::new(en, 1.0).unwrap();
        let mut weights: Vec<(bool, f64)> = Vec::new();
        weights.extend((0..n_pos).map(|_| (false, gp.sample(rng))));
        weights.extend((0..n_neg).map(|_| (true, gn.sample(rng))));
        let mut keyed: Vec<(f64, bool)> = weights
            .into_iter()
            .map(|(neg, w)| {
                let e: f64 = Exp1.sample(rng);
                (e / w, neg)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let neg = keyed[..cap].iter().filter(|k| k.1).count() as u32;
        (cap as u32 - neg, neg)
    }

    #[test]
    fn three_to_one_bias() {
        let n = 10_000;
        let mut r = rng(5);
        let (mut pos, mut neg) = (0u64, 0u64);
        for _ in 0..n {
            let c = select_observed(&mut r, 50, 50, 10, 100.0, 300.0);
            assert_eq!(c.total(), 10);
            pos += u64::from(c.positive);
            neg += u64::from(c.negative);
        }
        let ratio = neg as f64 / pos as f64;

        let mut r = rng(6);
        let (mut opos, mut oneg) = (0u64, 0u64);
        for _ in 0..n {
            let (p, q) = oracle_select(&mut r, 50, 50, 10, 100.0, 300.0);
            opos += u64::from(p);
            oneg += u64::from(q);
        }
        let oracle_ratio = oneg as f64 / opos as f64;

        assert!((ratio / 3.0 - 1.0).abs() < 0.10, "ratio {ratio}");
        assert!(
            (oracle_ratio / 3.0 - 1.0).abs() < 0.10,
            "oracle {oracle_ratio}"
        );
        assert!(
            (ratio / oracle_ratio - 1.0).abs() < 0.03,
            "{ratio} vs {oracle_ratio}"
        );
    }

    #[test]
    fn equal_concentrations_unbiased() {
        let n = 100_000;
        let mut r = rng(7);
        let (mut neg, mut tot) = (0u64, 0u64);
        for _ in 0..n {
            let c = select_observed(&mut r, 14, 6, 4, 100.0, 100.0);
            neg += u64::from(c.negative);
            tot += u64::from(c.total());
        }
        let frac = neg as f64 / tot as f64;
        assert!((frac - 0.3).abs() < 0.02 * 0.3, "{frac}");
    }

    fn events(counts: &[(u32, u32)]) -> Vec<DayEvents> {
        counts
            .iter()
            .map(|&(safe, unsafe_acts)| DayEvents {
                counts: EventCounts {
                    incidents: 0,
                    unsafe_acts,
                    safe_acts: safe,
                },
                incidents: vec![],
            })
            .collect()
    }

    #[test]
    fn no_observers_no_observations() {
        let mut s = Scenario::case_study();
        for o in &mut s.obs_types {
            o.m = 0;
        }
        let ev = events(&[(10, 10); 7]);
        let alloc = vec![Allocation::uniform(7); 3];
        let obs = step_observations(&mut rng(8), &s, &ev, &alloc);
        assert!(obs.is_empty());
    }

    #[test]
    fn case_study_budget_and_empty_area() {
        let s = Scenario::case_study();
        let mut ev = events(&[(10, 8); 7]);
        ev[3] = DayEvents::default();
        let alloc = vec![Allocation::uniform(7); 3];
        let mut r = rng(9);
        for _ in 0..2000 {
            let obs = step_observations(&mut r, &s, &ev, &alloc);
            assert!(obs.total() <= 5);
            for t in 0..3 {
                assert_eq!(obs.get(t, 3).total(), 0);
            }
        }
    }

    proptest! {
        #[test]
        fn observation_bounds(
            seed in any::<u64>(),
            counts in proptest::collection::vec((0u32..30, 0u32..30), 7),
            weights in proptest::collection::vec(0.01f64..1.0, 7),
        ) {
            let s = Scenario::case_study();
            let ev = events(&counts);
            let alloc = vec![Allocation::from_weights(&weights).unwrap(); 3];
            let obs = step_observations(&mut rng(seed), &s, &ev, &alloc);
            prop_assert!(obs.total() <= s.daily_observation_budget());
            for t in 0..3 {
                for (a, &(safe, unsafe_acts)) in counts.iter().enumerate() {
                    let c = obs.get(t, a);
                    prop_assert!(c.positive <= safe);
                    prop_assert!(c.negative <= unsafe_acts);
                }
            }
        }

        #[test]
        fn selection_reproducible(seed in any::<u64>(), p in 0u32..20, n in 0u32..20, cap in 0u64..30) {
            let a = select_observed(&mut rng(seed), p, n, cap, 1.5, 0.5);
            let b = select_observed(&mut rng(seed), p, n, cap, 1.5, 0.5);
            prop_assert_eq!(a, b);
            prop_assert_eq!(u64::from(a.total()), cap.min(u64::from(p + n)));
        }
    }
}
