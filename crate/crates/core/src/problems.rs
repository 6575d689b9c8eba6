//! ZDT benchmark problems and their sampled Pareto-optimal fronts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pareto::{hypervolume, non_dominated_indices, ObjectiveVector, ReferencePoint};

/// Decision variables of the ZDT problems as used in the benchmarks.
pub const ZDT_VARIABLES: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("expected {expected} decision variables, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("variable {index} = {value} is outside [{low}, {high}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("unknown problem `{0}` (expected one of zdt1, zdt2, zdt3)")]
    UnknownProblem(String),
    #[error("resolution must be at least 2")]
    Resolution,
}

/// A box-constrained multi-objective minimization problem.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn n_vars(&self) -> usize;
    fn bounds(&self) -> Vec<(f64, f64)>;
    fn num_objectives(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector, ProblemError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZdtVariant {
    Zdt1,
    Zdt2,
    Zdt3,
}

impl ZdtVariant {
    pub const ALL: [ZdtVariant; 3] = [ZdtVariant::Zdt1, ZdtVariant::Zdt2, ZdtVariant::Zdt3];

    fn h(self, f1: f64, g: f64) -> f64 {
        let ratio = f1 / g;
        match self {
            ZdtVariant::Zdt1 => 1.0 - ratio.sqrt(),
            ZdtVariant::Zdt2 => 1.0 - ratio * ratio,
            ZdtVariant::Zdt3 => {
                1.0 - ratio.sqrt() - ratio * (10.0 * std::f64::consts::PI * f1).sin()
            }
        }
    }
}

impl fmt::Display for ZdtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ZdtVariant::Zdt1 => "zdt1",
            ZdtVariant::Zdt2 => "zdt2",
            ZdtVariant::Zdt3 => "zdt3",
        };
        f.write_str(s)
    }
}

impl FromStr for ZdtVariant {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zdt1" => Ok(ZdtVariant::Zdt1),
            "zdt2" => Ok(ZdtVariant::Zdt2),
            "zdt3" => Ok(ZdtVariant::Zdt3),
            _ => Err(ProblemError::UnknownProblem(s.to_string())),
        }
    }
}

/// `g(x) = 1 + 9/(n-1) * sum(x_2..x_n)`.
fn zdt_g(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 1.0;
    }
    1.0 + 9.0 / (n as f64 - 1.0) * x[1..].iter().sum::<f64>()
}

/// Evaluates a ZDT problem on any number of variables in `[0, 1]`.
pub fn evaluate_zdt(variant: ZdtVariant, x: &[f64]) -> Result<ObjectiveVector, ProblemError> {
    if x.is_empty() {
        return Err(ProblemError::WrongLength {
            expected: ZDT_VARIABLES,
            found: 0,
        });
    }
    if let Some((index, &value)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(ProblemError::OutOfBounds {
            index,
            value,
            low: 0.0,
            high: 1.0,
        });
    }
    let f1 = x[0];
    let g = zdt_g(x);
    let f2 = g * variant.h(f1, g);
    Ok(ObjectiveVector::new(vec![f1, f2]).expect("ZDT objectives are finite"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zdt {
    pub variant: ZdtVariant,
    pub n_vars: usize,
}

impl Zdt {
    pub fn new(variant: ZdtVariant) -> Self {
        Self {
            variant,
            n_vars: ZDT_VARIABLES,
        }
    }

    /// Reference point used for all ZDT hypervolumes.
    pub fn reference_point() -> ReferencePoint {
        ReferencePoint::new(vec![1.1, 6.9]).expect("finite")
    }
}

impl Problem for Zdt {
    fn name(&self) -> String {
        self.variant.to_string()
    }

    fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.n_vars]
    }

    fn num_objectives(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector, ProblemError> {
        if x.len() != self.n_vars {
            return Err(ProblemError::WrongLength {
                expected: self.n_vars,
                found: x.len(),
            });
        }
        evaluate_zdt(self.variant, x)
    }
}

/// Evenly sampled Pareto-optimal points of a ZDT problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrontSample {
    pub points: Vec<ObjectiveVector>,
    pub resolution: usize,
}

/// Samples `x1` over `[0, 1]` with every other variable at zero. The ZDT3
/// sample is filtered down to its non-dominated segments.
pub fn reference_front(
    variant: ZdtVariant,
    resolution: usize,
) -> Result<ReferenceFrontSample, ProblemError> {
    if resolution < 2 {
        return Err(ProblemError::Resolution);
    }
    let mut x = vec![0.0; ZDT_VARIABLES];
    let mut points = Vec::with_capacity(resolution);
    for i in 0..resolution {
        x[0] = i as f64 / (resolution - 1) as f64;
        points.push(evaluate_zdt(variant, &x)?);
    }
    let keep = non_dominated_indices(&points);
    let points = keep.into_iter().map(|i| points[i].clone()).collect();
    Ok(ReferenceFrontSample { points, resolution })
}

pub fn reference_front_hv(
    variant: ZdtVariant,
    resolution: usize,
    reference: &ReferencePoint,
) -> Result<f64, ProblemError> {
    let front = reference_front(variant, resolution)?;
    Ok(hypervolume(&front.points, reference).expect("two objectives"))
}
