use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DecisionVector;

/// Resolution of a bounded decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Continuous,
    /// Values lie on `low + k * step`; the upper bound itself is always allowed.
    Grid(f64),
}

/// What an agent is allowed to choose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Flexibility {
    DiscreteSet {
        schedules: Vec<DecisionVector>,
    },
    BoundedPerSlot {
        low: Vec<f64>,
        high: Vec<f64>,
        step: Step,
    },
}

const GRID_SLACK: f64 = 1e-9;

impl Flexibility {
    /// Scalar variable in `[low, high]`.
    pub fn interval(low: f64, high: f64) -> Self {
        Flexibility::BoundedPerSlot {
            low: vec![low],
            high: vec![high],
            step: Step::Continuous,
        }
    }

    /// Integer values between zero and `max` per slot.
    pub fn integer_profile(max: &[f64]) -> Self {
        Flexibility::BoundedPerSlot {
            low: vec![0.0; max.len()],
            high: max.to_vec(),
            step: Step::Grid(1.0),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Flexibility::DiscreteSet { schedules } => {
                let first = schedules.first().ok_or("discrete flexibility without schedules")?;
                if schedules.iter().any(|s| s.len() != first.len()) {
                    return Err("schedules of different lengths".into());
                }
                Ok(())
            }
            Flexibility::BoundedPerSlot { low, high, step } => {
                if low.is_empty() || low.len() != high.len() {
                    return Err("bounds must be nonempty and of equal length".into());
                }
                if low.iter().zip(high).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
                    return Err("every slot needs finite low <= high".into());
                }
                if let Step::Grid(s) = step {
                    if !(s.is_finite() && *s > 0.0) {
                        return Err("grid step must be positive".into());
                    }
                }
                Ok(())
            }
        }
    }

    pub fn slots(&self) -> usize {
        match self {
            Flexibility::DiscreteSet { schedules } => schedules[0].len(),
            Flexibility::BoundedPerSlot { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, decision: &DecisionVector) -> bool {
        match self {
            Flexibility::DiscreteSet { schedules } => schedules.iter().any(|s| s == decision),
            Flexibility::BoundedPerSlot { low, high, step } => {
                decision.len() == low.len()
                    && decision
                        .values()
                        .iter()
                        .zip(low.iter().zip(high))
                        .all(|(&v, (&l, &h))| {
                            if !(l..=h).contains(&v) {
                                return false;
                            }
                            match step {
                                Step::Continuous => true,
                                Step::Grid(s) => {
                                    let k = (v - l) / s;
                                    v == h || (k - k.round()).abs() <= GRID_SLACK
                                }
                            }
                        })
            }
        }
    }

    /// A feasible decision drawn uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DecisionVector {
        match self {
            Flexibility::DiscreteSet { schedules } => schedules[rng.gen_range(0..schedules.len())].clone(),
            Flexibility::BoundedPerSlot { low, high, step } => {
                let values = low
                    .iter()
                    .zip(high)
                    .map(|(&l, &h)| match step {
                        Step::Continuous => {
                            if l == h {
                                l
                            } else {
                                rng.gen_range(l..=h)
                            }
                        }
                        Step::Grid(s) => {
                            let steps = ((h - l) / s + GRID_SLACK).floor() as u64;
                            l + rng.gen_range(0..=steps) as f64 * s
                        }
                    })
                    .collect();
                DecisionVector::new(values)
            }
        }
    }
}
