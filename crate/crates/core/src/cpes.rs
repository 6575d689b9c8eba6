//! Generation scheduling for a cluster of CHP units and wind plants.
//!
//! Three objectives are minimized on a normalized scale: deviation of the
//! cluster schedule from a target schedule, the share of emitting (CHP)
//! power and the time-weighted share of uncertain (wind) power.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohda::{
    AgentConfig, AgentId, DecisionVector, EngineError, Flexibility, GlobalTarget, MutateStrategy, PickStrategy,
    TargetSpec,
};
use crate::pareto::{ObjectiveVector, ReferencePoint};
use crate::seeding::derive_seed;

/// Fifteen-minute intervals per schedule.
pub const INTERVALS: usize = 24;
pub const CHP_SCHEDULES: usize = 10;
pub const CHP_RATINGS_KW: [f64; 15] = [
    200.0, 200.0, 200.0, 200.0, 200.0, 200.0, 200.0, 400.0, 400.0, 400.0, 400.0, 400.0, 400.0, 400.0, 400.0,
];
pub const WIND_RATINGS_KW: [f64; 15] = [
    200.0, 200.0, 250.0, 250.0, 250.0, 300.0, 300.0, 300.0, 350.0, 350.0, 350.0, 400.0, 400.0, 400.0, 400.0,
];
/// Applied to every normalized objective.
pub const REFERENCE_COORDINATE: f64 = 1.1;

const NORMALIZATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpesError {
    #[error("expected {expected} intervals, got {found}")]
    Length { expected: usize, found: usize },
    #[error("raw objective {index} = {value} exceeds its maximum {max}")]
    AboveMaximum { index: usize, value: f64, max: f64 },
    #[error("unknown setting `{0}` (expected A or B)")]
    UnknownSetting(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChpUnit {
    pub id: AgentId,
    pub rated_kw: f64,
    /// Index 0 is the maximum schedule, the last one is all zero.
    pub schedules: Vec<DecisionVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindUnit {
    pub id: AgentId,
    pub rated_kw: f64,
    /// Forecast maximum per interval, integer kW.
    pub max_profile: Vec<f64>,
}

/// Linearly increasing interval weights summing to 100.
pub fn uncertainty_weights(l: usize) -> Vec<f64> {
    let unit = 100.0 / (l * (l + 1) / 2) as f64;
    (1..=l).map(|i| unit * i as f64).collect()
}

fn check_len(a: &[f64], b: &[f64]) -> Result<(), CpesError> {
    if a.len() != b.len() {
        return Err(CpesError::Length {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Manhattan distance between cluster schedule and target.
pub fn eval_deviation(u: &[f64], t: &[f64]) -> Result<f64, CpesError> {
    check_len(t, u)?;
    Ok(t.iter().zip(u).map(|(t, u)| (t - u).abs()).sum())
}

/// `a / b` with an empty interval counting as share zero.
fn share(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Sum over intervals of the CHP share of production.
pub fn eval_emissions(chp: &[f64], u: &[f64]) -> Result<f64, CpesError> {
    check_len(u, chp)?;
    Ok(chp.iter().zip(u).map(|(c, u)| share(*c, *u)).sum())
}

/// Weighted sum over intervals of the wind share of production.
pub fn eval_uncertainty(wind: &[f64], u: &[f64], w: &[f64]) -> Result<f64, CpesError> {
    check_len(u, wind)?;
    check_len(u, w)?;
    Ok(wind
        .iter()
        .zip(u)
        .zip(w)
        .map(|((x, u), w)| w * share(*x, *u))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Chp,
    Wind,
}

/// Everything needed to score a cluster schedule; shared by all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationContext {
    pub kinds: Vec<UnitKind>,
    pub target: Vec<f64>,
    pub weights: Vec<f64>,
    /// Normalization maxima; all minima are zero.
    pub f_max: [f64; 3],
}

impl EvaluationContext {
    pub fn new(kinds: Vec<UnitKind>, target: Vec<f64>) -> Self {
        let l = target.len();
        let f_max = [2.0 * target.iter().sum::<f64>(), l as f64, 100.0];
        Self {
            kinds,
            weights: uncertainty_weights(l),
            target,
            f_max,
        }
    }

    pub fn normalize(&self, raw: [f64; 3]) -> Result<ObjectiveVector, CpesError> {
        let mut out = Vec::with_capacity(3);
        for (index, (&value, &max)) in raw.iter().zip(&self.f_max).enumerate() {
            if value > max * (1.0 + NORMALIZATION_SLACK) {
                return Err(CpesError::AboveMaximum { index, value, max });
            }
            out.push(if max == 0.0 { 0.0 } else { (value / max).min(1.0) });
        }
        Ok(ObjectiveVector::new(out).expect("finite"))
    }

    /// Raw (f1, f2, f3) of the given per-unit schedules.
    pub fn raw_objectives(&self, schedules: &[&[f64]]) -> Result<[f64; 3], CpesError> {
        let l = self.target.len();
        let mut chp = vec![0.0; l];
        let mut wind = vec![0.0; l];
        for (s, kind) in schedules.iter().zip(&self.kinds) {
            check_len(&self.target, s)?;
            let sum = match kind {
                UnitKind::Chp => &mut chp,
                UnitKind::Wind => &mut wind,
            };
            for (acc, v) in sum.iter_mut().zip(s.iter()) {
                *acc += v;
            }
        }
        let u: Vec<f64> = chp.iter().zip(&wind).map(|(c, w)| c + w).collect();
        Ok([
            eval_deviation(&u, &self.target)?,
            eval_emissions(&chp, &u)?,
            eval_uncertainty(&wind, &u, &self.weights)?,
        ])
    }

    pub fn evaluate(&self, schedules: &[&[f64]]) -> Result<ObjectiveVector, CpesError> {
        self.normalize(self.raw_objectives(schedules)?)
    }
}

/// Negotiation target for the scenario: unknown units are assumed off.
#[derive(Debug, Clone)]
pub struct CpesTarget {
    context: Arc<EvaluationContext>,
    off: DecisionVector,
}

impl CpesTarget {
    pub fn new(context: Arc<EvaluationContext>) -> Self {
        let off = DecisionVector::new(vec![0.0; context.target.len()]);
        Self { context, off }
    }
}

impl GlobalTarget for CpesTarget {
    fn num_agents(&self) -> usize {
        self.context.kinds.len()
    }

    fn num_objectives(&self) -> usize {
        3
    }

    fn assumed_decision(&self, _agent: AgentId) -> DecisionVector {
        self.off.clone()
    }

    fn evaluate(&self, decisions: &[&[f64]]) -> crate::cohda::Result<ObjectiveVector> {
        self.context
            .evaluate(decisions)
            .map_err(|e| EngineError::Evaluation(e.to_string()))
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "cpes", "context": &*self.context })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
}

impl std::str::FromStr for Setting {
    type Err = CpesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Setting::A),
            "B" | "b" => Ok(Setting::B),
            _ => Err(CpesError::UnknownSetting(s.to_string())),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::A => "A",
            Setting::B => "B",
        })
    }
}

/// Fully materialized scenario; serializable so a run can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub chp: Vec<ChpUnit>,
    pub wind: Vec<WindUnit>,
    pub target: Vec<f64>,
    pub context: EvaluationContext,
}

/// Bounded random walk of `len` steps in `[lo, hi]`.
fn walk(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut v = rng.gen_range(lo..=hi);
    (0..len)
        .map(|_| {
            let out = v;
            v = (v + rng.gen_range(-step..=step)).clamp(lo, hi);
            out
        })
        .collect()
}

/// Integer parts of `values` adjusted so they sum to `total` exactly,
/// handing leftover units to the largest remainders.
fn integer_split(values: &[f64], total: f64) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().map(|v| v.floor()).collect();
    let mut leftover = (total - out.iter().sum::<f64>()).round() as i64;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| (values[b] - values[b].floor()).total_cmp(&(values[a] - values[a].floor())));
    for &i in order.iter().cycle() {
        if leftover <= 0 {
            break;
        }
        out[i] += 1.0;
        leftover -= 1;
    }
    out
}

/// Synthetic scenario: 15 CHP units with ten schedules each and 15 wind
/// plants whose forecasts add up exactly to the target schedule.
pub fn build_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = INTERVALS;

    let mut chp = Vec::with_capacity(CHP_RATINGS_KW.len());
    for (i, &rated) in CHP_RATINGS_KW.iter().enumerate() {
        let max: Vec<f64> = walk(&mut rng, l, 0.6, 0.8, 0.03)
            .into_iter()
            .map(|f| (f * rated).round())
            .collect();
        let mut schedules = vec![DecisionVector::new(max.clone())];
        for _ in 1..CHP_SCHEDULES - 1 {
            let level = f64::from(rng.gen_range(2u8..=9)) / 10.0;
            let s: Vec<f64> = walk(&mut rng, l, (level - 0.1).max(0.1), (level + 0.1).min(1.0), 0.05)
                .into_iter()
                .zip(&max)
                .map(|(f, m)| (f * m).floor())
                .collect();
            schedules.push(DecisionVector::new(s));
        }
        schedules.push(DecisionVector::new(vec![0.0; l]));
        chp.push(ChpUnit {
            id: AgentId(i),
            rated_kw: rated,
            schedules,
        });
    }

    let target: Vec<f64> = (0..l)
        .map(|k| chp.iter().map(|u| u.schedules[0].values()[k]).sum())
        .collect();

    let raw: Vec<Vec<f64>> = WIND_RATINGS_KW
        .iter()
        .map(|&rated| {
            walk(&mut rng, l, 0.9, 1.0, 0.02)
                .into_iter()
                .map(|f| f * rated)
                .collect()
        })
        .collect();
    let mut profiles = vec![vec![0.0; l]; raw.len()];
    for k in 0..l {
        let total: f64 = raw.iter().map(|r| r[k]).sum();
        let scale = target[k] / total;
        assert!(scale <= 1.0, "wind forecasts must be scaled down");
        let scaled: Vec<f64> = raw.iter().map(|r| r[k] * scale).collect();
        for (p, v) in profiles.iter_mut().zip(integer_split(&scaled, target[k])) {
            p[k] = v;
        }
    }
    let wind: Vec<WindUnit> = WIND_RATINGS_KW
        .iter()
        .zip(profiles)
        .enumerate()
        .map(|(j, (&rated, max_profile))| WindUnit {
            id: AgentId(CHP_RATINGS_KW.len() + j),
            rated_kw: rated,
            max_profile,
        })
        .collect();

    let kinds = chp
        .iter()
        .map(|_| UnitKind::Chp)
        .chain(wind.iter().map(|_| UnitKind::Wind))
        .collect();
    let context = EvaluationContext::new(kinds, target.clone());
    let scenario = Scenario {
        seed,
        chp,
        wind,
        target,
        context,
    };
    debug_assert!(scenario.check_invariants().is_ok());
    scenario
}

impl Scenario {
    pub fn num_agents(&self) -> usize {
        self.chp.len() + self.wind.len()
    }

    pub fn reference_point() -> ReferencePoint {
        ReferencePoint::new(vec![REFERENCE_COORDINATE; 3]).expect("finite")
    }

    pub fn target_spec(&self) -> Arc<TargetSpec> {
        let target = CpesTarget::new(Arc::new(self.context.clone()));
        Arc::new(TargetSpec::new(Arc::new(target), Self::reference_point()).expect("three objectives"))
    }

    /// Checks the construction rules; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let l = self.target.len();
        for u in &self.chp {
            let max = u.schedules[0].values();
            if u.schedules.len() != CHP_SCHEDULES {
                return Err(format!("unit {} has {} schedules", u.id, u.schedules.len()));
            }
            for s in &u.schedules {
                if s.len() != l || s.values().iter().zip(max).any(|(v, m)| *v > *m || *v < 0.0) {
                    return Err(format!("unit {} has a schedule above its maximum", u.id));
                }
            }
            let zero = u
                .schedules
                .iter()
                .filter(|s| s.values().iter().all(|v| *v == 0.0))
                .count();
            if zero != 1 {
                return Err(format!("unit {} has {zero} off schedules", u.id));
            }
        }
        for k in 0..l {
            let chp_max: f64 = self.chp.iter().map(|u| u.schedules[0].values()[k]).sum();
            let wind_max: f64 = self.wind.iter().map(|w| w.max_profile[k]).sum();
            if chp_max != self.target[k] {
                return Err(format!("interval {k}: target differs from the CHP maxima"));
            }
            if wind_max > self.target[k] {
                return Err(format!("interval {k}: wind exceeds the target"));
            }
            if chp_max + wind_max > 2.0 * self.target[k] {
                return Err(format!("interval {k}: total generation exceeds twice the target"));
            }
        }
        Ok(())
    }

    /// Agent configurations for one setting. CHP agents pick a random point
    /// and draw a random schedule; wind agents shift their schedule by up to
    /// 25 kW on one point (A) or by up to 100 kW on all points (B).
    pub fn make_setting(&self, setting: Setting, seed: u64) -> Vec<AgentConfig> {
        let base = |id: AgentId, flexibility, pick, mutate| AgentConfig {
            id,
            flexibility: Arc::new(flexibility),
            pick,
            mutate,
            min_change: 0.0005,
            num_iterations: 1,
            num_solution_points: 25,
            seed: derive_seed(seed, id.0 as u64),
        };
        let (wind_pick, max_change) = match setting {
            Setting::A => (PickStrategy::RandomPoint, 25.0),
            Setting::B => (PickStrategy::AllPoints, 100.0),
        };
        self.chp
            .iter()
            .map(|u| {
                base(
                    u.id,
                    Flexibility::DiscreteSet {
                        schedules: u.schedules.clone(),
                    },
                    PickStrategy::RandomPoint,
                    MutateStrategy::DiscreteRandom,
                )
            })
            .chain(self.wind.iter().map(|w| {
                base(
                    w.id,
                    Flexibility::integer_profile(&w.max_profile),
                    wind_pick,
                    MutateStrategy::BoundedShift { max_change },
                )
            }))
            .collect()
    }

    /// First wind agent; decide calls are reported for it.
    pub fn reference_agent(&self) -> AgentId {
        self.wind[0].id
    }
}
