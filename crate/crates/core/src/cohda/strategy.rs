use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DecisionVector, Flexibility};

/// Which solution points of the current front get mutated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PickStrategy {
    RandomPoint,
    AllPoints,
}

impl PickStrategy {
    pub fn pick<R: Rng + ?Sized>(&self, front_len: usize, rng: &mut R) -> Vec<usize> {
        if front_len == 0 {
            return Vec::new();
        }
        match self {
            PickStrategy::RandomPoint => vec![rng.gen_range(0..front_len)],
            PickStrategy::AllPoints => (0..front_len).collect(),
        }
    }
}

/// How new decisions are derived from a picked one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MutateStrategy {
    /// One offspring moved down and one moved up by a delta drawn from
    /// `[min_delta, max_delta]`, both clamped to the bounds.
    TwoSided { min_delta: f64, max_delta: f64 },
    /// A uniformly drawn schedule, possibly the current one.
    DiscreteRandom,
    /// Every schedule other than the current one.
    DiscreteExhaustive,
    /// Each slot moves up or down by an integer in `[0, max_change]`.
    BoundedShift { max_change: f64 },
}

impl MutateStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            MutateStrategy::TwoSided { .. } => "two-sided",
            MutateStrategy::DiscreteRandom => "discrete random",
            MutateStrategy::DiscreteExhaustive => "discrete exhaustive",
            MutateStrategy::BoundedShift { .. } => "bounded shift",
        }
    }

    pub fn fits(&self, flexibility: &Flexibility) -> bool {
        match (self, flexibility) {
            (MutateStrategy::TwoSided { min_delta, max_delta }, Flexibility::BoundedPerSlot { .. }) => {
                0.0 <= *min_delta && min_delta <= max_delta && max_delta.is_finite()
            }
            (MutateStrategy::BoundedShift { max_change }, Flexibility::BoundedPerSlot { .. }) => {
                *max_change >= 1.0 && max_change.is_finite()
            }
            (MutateStrategy::DiscreteRandom | MutateStrategy::DiscreteExhaustive, Flexibility::DiscreteSet { .. }) => {
                true
            }
            _ => false,
        }
    }

    /// New decisions derived from `current`. Returns `None` if the strategy
    /// does not apply to this kind of flexibility.
    pub fn mutate<R: Rng + ?Sized>(
        &self,
        current: &DecisionVector,
        flexibility: &Flexibility,
        rng: &mut R,
    ) -> Option<Vec<DecisionVector>> {
        match (self, flexibility) {
            (MutateStrategy::TwoSided { min_delta, max_delta }, Flexibility::BoundedPerSlot { low, high, .. }) => {
                let mut down = Vec::with_capacity(current.len());
                let mut up = Vec::with_capacity(current.len());
                for (i, &x) in current.values().iter().enumerate() {
                    let d1 = rng.gen_range(*min_delta..=*max_delta);
                    let d2 = rng.gen_range(*min_delta..=*max_delta);
                    let (a, b) = two_sided(x, d1, d2, low[i], high[i]);
                    down.push(a);
                    up.push(b);
                }
                Some(vec![DecisionVector::new(down), DecisionVector::new(up)])
            }
            (MutateStrategy::DiscreteRandom, Flexibility::DiscreteSet { schedules }) => {
                Some(vec![schedules[rng.gen_range(0..schedules.len())].clone()])
            }
            (MutateStrategy::DiscreteExhaustive, Flexibility::DiscreteSet { schedules }) => {
                Some(schedules.iter().filter(|s| *s != current).cloned().collect())
            }
            (MutateStrategy::BoundedShift { max_change }, Flexibility::BoundedPerSlot { low, high, .. }) => {
                let max = max_change.floor() as i64;
                let values = current
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let shift = rng.gen_range(0..=max) as f64;
                        let moved = if rng.gen_bool(0.5) { x + shift } else { x - shift };
                        moved.clamp(low[i], high[i])
                    })
                    .collect();
                Some(vec![DecisionVector::new(values)])
            }
            _ => None,
        }
    }
}

/// The two offspring of one slot: `x - down` and `x + up`, clamped.
pub fn two_sided(x: f64, down: f64, up: f64, low: f64, high: f64) -> (f64, f64) {
    ((x - down).max(low), (x + up).min(high))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_sided_arithmetic() {
        let (a, b) = two_sided(0.5, 0.45, 0.52, 0.0, 1.0);
        assert!((a - 0.05).abs() < 1e-12);
        assert_eq!(b, 1.0);
        assert_eq!(two_sided(0.0, 0.4, 0.4, 0.0, 1.0).0, 0.0);
        assert_eq!(two_sided(1.0, 0.4, 0.4, 0.0, 1.0).1, 1.0);
    }

    #[test]
    fn two_sided_offspring_are_feasible() {
        let flex = Flexibility::interval(0.0, 1.0);
        let m = MutateStrategy::TwoSided {
            min_delta: 0.4,
            max_delta: 0.6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..200 {
            let x = DecisionVector::scalar(f64::from(i) / 199.0);
            let out = m.mutate(&x, &flex, &mut rng).unwrap();
            assert_eq!(out.len(), 2);
            let (lo, hi) = (out[0].values()[0], out[1].values()[0]);
            assert!(flex.contains(&out[0]) && flex.contains(&out[1]));
            let x = x.values()[0];
            assert!(lo == 0.0 || (0.4..=0.6).contains(&(x - lo + 1e-12)));
            assert!(hi == 1.0 || (0.4 - 1e-12..=0.6 + 1e-12).contains(&(hi - x)));
        }
    }

    #[test]
    fn pick_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(PickStrategy::AllPoints.pick(25, &mut rng).len(), 25);
        assert_eq!(PickStrategy::RandomPoint.pick(25, &mut rng).len(), 1);
        assert!(PickStrategy::RandomPoint.pick(0, &mut rng).is_empty());
        let a = PickStrategy::RandomPoint.pick(25, &mut ChaCha8Rng::seed_from_u64(5));
        let b = PickStrategy::RandomPoint.pick(25, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn pick_random_is_uniform() {
        // Chi-square against uniform over 10 cells with 10^4 draws; the 0.999
        // quantile for 9 degrees of freedom is 27.88.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = [0u32; 10];
        for _ in 0..10_000 {
            counts[PickStrategy::RandomPoint.pick(10, &mut rng)[0]] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (f64::from(c) - 1000.0).powi(2) / 1000.0)
            .sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn discrete_mutations() {
        let schedules: Vec<DecisionVector> = (0..10).map(|i| DecisionVector::scalar(f64::from(i))).collect();
        let flex = Flexibility::DiscreteSet {
            schedules: schedules.clone(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let out = MutateStrategy::DiscreteRandom
                .mutate(&schedules[3], &flex, &mut rng)
                .unwrap();
            assert_eq!(out.len(), 1);
            assert!(flex.contains(&out[0]));
        }
        let all = MutateStrategy::DiscreteExhaustive
            .mutate(&schedules[3], &flex, &mut rng)
            .unwrap();
        assert_eq!(all.len(), 9);
        assert!(!all.contains(&schedules[3]));

        let single = Flexibility::DiscreteSet {
            schedules: vec![schedules[0].clone()],
        };
        let out = MutateStrategy::DiscreteRandom
            .mutate(&schedules[0], &single, &mut rng)
            .unwrap();
        assert_eq!(out, vec![schedules[0].clone()]);
    }

    #[test]
    fn bounded_shift_clamps_and_stays_integer() {
        let flex = Flexibility::integer_profile(&[200.0, 200.0, 50.0]);
        let m = MutateStrategy::BoundedShift { max_change: 100.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let start = DecisionVector::new(vec![150.0, 0.0, 25.0]);
        for _ in 0..500 {
            let out = &m.mutate(&start, &flex, &mut rng).unwrap()[0];
            assert!(flex.contains(out), "{out:?}");
            for (v, s) in out.values().iter().zip(start.values()) {
                assert!((v - s).abs() <= 100.0);
            }
        }
        assert!(m.mutate(&start, &Flexibility::DiscreteSet { schedules: vec![start.clone()] }, &mut rng).is_none());
    }

    #[test]
    fn larger_shift_moves_further() {
        let flex = Flexibility::integer_profile(&[1000.0; 24]);
        let start = DecisionVector::new(vec![500.0; 24]);
        let mean_move = |max_change: f64| {
            let m = MutateStrategy::BoundedShift { max_change };
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let mut total = 0.0;
            for _ in 0..1000 {
                let out = &m.mutate(&start, &flex, &mut rng).unwrap()[0];
                total += out
                    .values()
                    .iter()
                    .zip(start.values())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            }
            total / 24_000.0
        };
        let (small, large) = (mean_move(25.0), mean_move(100.0));
        assert!((small - 12.5).abs() < 1.0, "{small}");
        assert!((large - 50.0).abs() < 2.0, "{large}");
    }
}
