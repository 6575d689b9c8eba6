//! Pareto dominance, non-dominated sorting, exact hypervolume and the front
//! reduction used by the negotiation engine.
//!
//! Everything here follows the minimization convention.

mod hypervolume;
mod reduce;
mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hypervolume::{exclusive_contributions, hypervolume};
pub use reduce::{reduce_front, reduce_indices};
pub use reference::{
    dynamic_reference_point, find_dynamic_reference_cycle, pairwise_dynamic_volumes, ReferenceCycle,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("objective vectors have mismatched length: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input must not be empty")]
    Empty,
    #[error("objective value at position {0} is not finite")]
    NonFinite(usize),
    #[error("target size must be at least 1")]
    ZeroTargetSize,
}

pub type Result<T> = std::result::Result<T, ParetoError>;

/// Anything that carries a vector of objective values.
pub trait Objectives {
    fn objectives(&self) -> &[f64];
}

impl Objectives for [f64] {
    fn objectives(&self) -> &[f64] {
        self
    }
}

impl Objectives for Vec<f64> {
    fn objectives(&self) -> &[f64] {
        self
    }
}

impl<const N: usize> Objectives for [f64; N] {
    fn objectives(&self) -> &[f64] {
        self
    }
}

impl<T: Objectives + ?Sized> Objectives for &T {
    fn objectives(&self) -> &[f64] {
        (**self).objectives()
    }
}

/// Finite objective values of one solution, all minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ParetoError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ParetoError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = ParetoError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

impl Objectives for ObjectiveVector {
    fn objectives(&self) -> &[f64] {
        &self.0
    }
}

/// Corner of the hypervolume box. Fixed for the lifetime of a negotiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ReferencePoint(Vec<f64>);

impl ReferencePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ObjectiveVector::new(values).map(|v| Self(v.0))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// True iff `point` is strictly better than the reference in every objective.
    pub fn is_strictly_dominated_by(&self, point: &[f64]) -> bool {
        point.iter().zip(&self.0).all(|(p, r)| p < r)
    }
}

impl TryFrom<Vec<f64>> for ReferencePoint {
    type Error = ParetoError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ReferencePoint> for Vec<f64> {
    fn from(r: ReferencePoint) -> Self {
        r.0
    }
}

/// A point on a front together with a handle to whatever produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint<P> {
    objectives: ObjectiveVector,
    pub payload: P,
}

impl<P> FrontPoint<P> {
    pub fn new(objectives: ObjectiveVector, payload: P) -> Self {
        Self {
            objectives,
            payload,
        }
    }

    pub fn objective_vector(&self) -> &ObjectiveVector {
        &self.objectives
    }
}

impl<P> Objectives for FrontPoint<P> {
    fn objectives(&self) -> &[f64] {
        self.objectives.values()
    }
}

pub(crate) fn check_dims<T: Objectives>(points: &[T], dim: usize) -> Result<()> {
    for p in points {
        let found = p.objectives().len();
        if found != dim {
            return Err(ParetoError::DimensionMismatch {
                expected: dim,
                found,
            });
        }
    }
    Ok(())
}

/// `a` dominates `b`: no worse in every objective and strictly better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(ParetoError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort. Returns groups of input indices; group 0 is the
/// non-dominated set and every point of group `r` is dominated only by
/// points of lower groups. Indices inside a group keep input order.
pub fn non_dominated_sort<T: Objectives>(points: &[T]) -> Result<Vec<Vec<usize>>> {
    let first = points.first().ok_or(ParetoError::Empty)?;
    check_dims(points, first.objectives().len())?;
    Ok(sort_unchecked(points))
}

pub(crate) fn sort_unchecked<T: Objectives>(points: &[T]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let a = points[i].objectives();
        for j in (i + 1)..n {
            let b = points[j].objectives();
            if dominates_unchecked(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut ranks = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        ranks.push(current);
        current = next;
    }
    ranks
}

/// Indices of the non-dominated subset, in input order.
pub fn non_dominated_indices<T: Objectives>(points: &[T]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = points[i].objectives();
            !points
                .iter()
                .any(|q| dominates_unchecked(q.objectives(), p))
        })
        .collect()
}
