//! Daily generation of incidents, unsafe activities and safe activities per
//! safety area, with actual/potential Hurt levels for each incident.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::scenario::SafetyAreaConfig;
use crate::HURT_LEVELS;

/// Incident severity on the 0 (near-miss) ..= 5 (multiple fatalities) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HurtLevel(u8);

impl HurtLevel {
    pub const MAX: HurtLevel = HurtLevel(HURT_LEVELS as u8 - 1);

    pub fn new(level: u8) -> Option<HurtLevel> {
        (usize::from(level) < HURT_LEVELS).then_some(HurtLevel(level))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = HurtLevel> {
        (0..HURT_LEVELS as u8).map(HurtLevel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incident {
    pub ahl: HurtLevel,
    pub phl: HurtLevel,
}

/// Latent per-area state. Only the engine and the metrics see this.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaState {
    pub theta: f64,
}

impl AreaState {
    pub fn xi(&self, area: &SafetyAreaConfig) -> f64 {
        xi_of_theta(self.theta, area.xi_base)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub incidents: u32,
    pub unsafe_acts: u32,
    pub safe_acts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayEvents {
    pub counts: EventCounts,
    /// One entry per incident, `counts.incidents` in total.
    pub incidents: Vec<Incident>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EventError {
    #[error("no probability mass at or above hurt level {0}")]
    DegenerateSeverity(u8),
}

/// Unsafe-activity fraction for a given safety state.
pub fn xi_of_theta(theta: f64, xi_base: f64) -> f64 {
    (1.0 - theta) * xi_base
}

/// One day of complacency decay.
pub fn decay_theta(theta: f64, k_decay: f64) -> f64 {
    k_decay * theta
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    let x: f64 = d.sample(rng);
    x as u32
}

/// Draws the day's (incident, unsafe, safe) counts as three independent Poissons.
pub fn sample_event_counts<R: Rng + ?Sized>(
    rng: &mut R,
    lambda_star: f64,
    xi: f64,
    alpha: f64,
) -> EventCounts {
    EventCounts {
        incidents: poisson(rng, alpha * xi * lambda_star),
        unsafe_acts: poisson(rng, (1.0 - alpha) * xi * lambda_star),
        safe_acts: poisson(rng, (1.0 - xi) * lambda_star),
    }
}

/// Two-stage construction: a Poisson task count split by a multinomial over
/// (incident, unsafe, safe). Same law as [`sample_event_counts`]; kept for
/// equivalence checks.
pub fn sample_event_counts_two_stage<R: Rng + ?Sized>(
    rng: &mut R,
    lambda_star: f64,
    xi: f64,
    alpha: f64,
) -> EventCounts {
    let tasks = u64::from(poisson(rng, lambda_star));
    let p_incident = alpha * xi;
    let incidents = binomial(rng, tasks, p_incident);
    let rest = tasks - incidents;
    let p_unsafe_given_not_incident = if p_incident < 1.0 {
        ((1.0 - alpha) * xi / (1.0 - p_incident)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let unsafe_acts = binomial(rng, rest, p_unsafe_given_not_incident);
    EventCounts {
        incidents: incidents as u32,
        unsafe_acts: unsafe_acts as u32,
        safe_acts: (rest - unsafe_acts) as u32,
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Index drawn from an (unnormalized) weight vector by inverse CDF.
/// Returns `None` when all weights are zero.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    // rounding left u at or just above the accumulated total
    last_positive
}

pub fn sample_ahl<R: Rng + ?Sized>(rng: &mut R, hl_probs: &[f64; HURT_LEVELS]) -> HurtLevel {
    let j = sample_categorical(rng, hl_probs).expect("hl_probs is a probability vector");
    HurtLevel(j as u8)
}

/// Potential Hurt level: `hl_probs` restricted to levels at or above `ahl`
/// and renormalized.
pub fn sample_phl<R: Rng + ?Sized>(
    rng: &mut R,
    hl_probs: &[f64; HURT_LEVELS],
    ahl: HurtLevel,
) -> Result<HurtLevel, EventError> {
    let tail = &hl_probs[ahl.index()..];
    if tail.iter().sum::<f64>() <= 0.0 {
        return Err(EventError::DegenerateSeverity(ahl.get()));
    }
    if tail.len() == 1 {
        return Ok(ahl);
    }
    let offset = sample_categorical(rng, tail).expect("positive tail mass");
    Ok(HurtLevel(ahl.get() + offset as u8))
}

/// Samples one day of events for an area at its current safety state.
/// Does not touch `state`.
pub fn step_events<R: Rng + ?Sized>(
    rng: &mut R,
    area: &SafetyAreaConfig,
    state: &AreaState,
) -> DayEvents {
    let xi = state.xi(area);
    let counts = sample_event_counts(rng, area.lambda_star, xi, area.alpha);
    let ahls: Vec<HurtLevel> = (0..counts.incidents)
        .map(|_| sample_ahl(rng, &area.hl_probs))
        .collect();
    let incidents = ahls
        .into_iter()
        .map(|ahl| {
            let phl = sample_phl(rng, &area.hl_probs, ahl)
                .expect("ahl drawn from the same distribution has mass at or above it");
            Incident { ahl, phl }
        })
        .collect();
    DayEvents { counts, incidents }
}
