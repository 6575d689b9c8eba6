//! The MO-COHDA agent: working memory, perceive/decide/act and the pluggable
//! pick and mutate strategies.
//!
//! Agents exchange full [`WorkingMemory`] snapshots. Every snapshot carries the
//! shared target, the agent's view of everyone's selections and the best front
//! it knows of.

mod agent;
mod flexibility;
mod strategy;
mod target;
pub mod wire;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pareto::{hypervolume, non_dominated_indices, ObjectiveVector, Objectives, ParetoError, ReferencePoint};

pub use agent::{act, decide, initial_participation, perceive, Agent, AgentConfig, Outgoing};
pub use flexibility::{Flexibility, Step};
pub use strategy::{two_sided, PickStrategy, MutateStrategy};
pub use target::{DiscreteToy, VariablePerAgent};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("working memories describe different targets")]
    TargetMismatch,
    #[error("agent {agent} produced a decision outside its flexibility: {values:?}")]
    Infeasible { agent: AgentId, values: Vec<f64> },
    #[error("agent {agent}: {strategy} mutation does not fit its flexibility")]
    StrategyMismatch { agent: AgentId, strategy: &'static str },
    #[error("agent {0} has no decision in the current candidate")]
    MissingDecision(AgentId),
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

pub type Result<T> = std::result::Result<T, EngineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One agent's decision for one solution point; a schedule or a single value.
///
/// Equality, ordering and hashing are bitwise so the type can key maps.
#[derive(Clone, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct DecisionVector(Arc<[f64]>);

impl DecisionVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values.into())
    }

    pub fn scalar(value: f64) -> Self {
        Self(Arc::new([value]))
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

impl fmt::Debug for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

impl From<DecisionVector> for Vec<f64> {
    fn from(v: DecisionVector) -> Self {
        v.0.to_vec()
    }
}

impl PartialEq for DecisionVector {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.len() == other.0.len()
                && self.0.iter().zip(other.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits()))
    }
}

impl Eq for DecisionVector {}

impl Hash for DecisionVector {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.len().hash(state);
        for v in self.0.iter() {
            v.to_bits().hash(state);
        }
    }
}

impl Ord for DecisionVector {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        cmp_floats(&self.0, &other.0)
    }
}

impl PartialOrd for DecisionVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn cmp_floats(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// The problem every agent works on. Decisions are indexed by agent id.
pub trait GlobalTarget: Send + Sync + fmt::Debug {
    fn num_agents(&self) -> usize;

    fn num_objectives(&self) -> usize;

    /// Stand-in for an agent whose decision is not known yet.
    fn assumed_decision(&self, agent: AgentId) -> DecisionVector;

    /// Objective values of a complete assignment, one slice per agent.
    fn evaluate(&self, decisions: &[&[f64]]) -> Result<ObjectiveVector>;

    /// Hook for global constraints. The default leaves objectives untouched.
    fn penalize(&self, _decisions: &[&[f64]], objectives: ObjectiveVector) -> ObjectiveVector {
        objectives
    }

    /// Self-describing content used to check that two agents share a target.
    fn descriptor(&self) -> serde_json::Value;
}

/// Global target plus the reference point fixed for the whole negotiation.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    target: Arc<dyn GlobalTarget>,
    reference: ReferencePoint,
}

impl TargetSpec {
    pub fn new(target: Arc<dyn GlobalTarget>, reference: ReferencePoint) -> Result<Self> {
        if reference.dim() != target.num_objectives() {
            return Err(ParetoError::DimensionMismatch {
                expected: target.num_objectives(),
                found: reference.dim(),
            }
            .into());
        }
        Ok(Self { target, reference })
    }

    pub fn target(&self) -> &Arc<dyn GlobalTarget> {
        &self.target
    }

    pub fn reference(&self) -> &ReferencePoint {
        &self.reference
    }

    pub fn num_agents(&self) -> usize {
        self.target.num_agents()
    }

    /// Evaluates a partial assignment, assuming decisions for missing agents.
    pub fn evaluate(&self, assignment: &BTreeMap<AgentId, DecisionVector>) -> Result<ObjectiveVector> {
        let assumed: Vec<Option<DecisionVector>> = (0..self.num_agents())
            .map(|a| {
                let id = AgentId(a);
                (!assignment.contains_key(&id)).then(|| self.target.assumed_decision(id))
            })
            .collect();
        let full: Vec<&[f64]> = (0..self.num_agents())
            .map(|a| match &assumed[a] {
                Some(d) => d.values(),
                None => assignment[&AgentId(a)].values(),
            })
            .collect();
        let objectives = self.target.evaluate(&full)?;
        Ok(self.target.penalize(&full, objectives))
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "target": self.target.descriptor(),
            "reference": self.reference.values(),
        })
    }

    pub fn same_as(&self, other: &TargetSpec) -> bool {
        (Arc::ptr_eq(&self.target, &other.target) && self.reference == other.reference)
            || self.descriptor() == other.descriptor()
    }
}

/// One solution point: decisions of the contributing agents and the objective
/// values of the assembled solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    assignment: Arc<BTreeMap<AgentId, DecisionVector>>,
    objectives: ObjectiveVector,
}

impl Individual {
    pub fn evaluate(assignment: BTreeMap<AgentId, DecisionVector>, target: &TargetSpec) -> Result<Self> {
        let objectives = target.evaluate(&assignment)?;
        Ok(Self {
            assignment: Arc::new(assignment),
            objectives,
        })
    }

    /// Copy with one agent's decision replaced, re-evaluated.
    pub fn with_decision(&self, agent: AgentId, decision: DecisionVector, target: &TargetSpec) -> Result<Self> {
        let mut assignment = (*self.assignment).clone();
        assignment.insert(agent, decision);
        Self::evaluate(assignment, target)
    }

    pub fn assignment(&self) -> &BTreeMap<AgentId, DecisionVector> {
        &self.assignment
    }

    pub fn decision(&self, agent: AgentId) -> Option<&DecisionVector> {
        self.assignment.get(&agent)
    }

    pub fn objective_vector(&self) -> &ObjectiveVector {
        &self.objectives
    }

    /// Same decisions for the same agents.
    pub fn same_assignment(&self, other: &Individual) -> bool {
        Arc::ptr_eq(&self.assignment, &other.assignment) || self.assignment == other.assignment
    }

    fn content_cmp(&self, other: &Individual) -> Ordering {
        cmp_floats(self.objectives.values(), other.objectives.values())
            .then_with(|| self.assignment.iter().cmp(other.assignment.iter()))
    }
}

impl Objectives for Individual {
    fn objectives(&self) -> &[f64] {
        self.objectives.values()
    }
}

/// Hashes an individual by its assignment only.
struct AssignmentKey<'a>(&'a Individual);

impl PartialEq for AssignmentKey<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.0.same_assignment(other.0)
    }
}

impl Eq for AssignmentKey<'_> {}

impl Hash for AssignmentKey<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.assignment.hash(state);
    }
}

/// Keeps the first occurrence of every assignment.
pub fn dedup_individuals(pool: Vec<Individual>) -> Vec<Individual> {
    let mut seen = std::collections::HashSet::with_capacity(pool.len());
    let keep: Vec<bool> = pool.iter().map(|ind| seen.insert(AssignmentKey(ind))).collect();
    drop(seen);
    pool.into_iter()
        .zip(keep)
        .filter_map(|(ind, k)| k.then_some(ind))
        .collect()
}

/// A proposed front with its rating. The stored front keeps up to the
/// configured number of solution points and may hold dominated points left
/// over from reduction; [`Candidate::non_dominated`] gives the front proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    front: Vec<Individual>,
    hypervolume: f64,
    contributors: BTreeSet<AgentId>,
    creator: AgentId,
}

impl Candidate {
    /// Placeholder carried by the bootstrap message.
    pub fn empty(creator: AgentId) -> Self {
        Self {
            front: Vec::new(),
            hypervolume: 0.0,
            contributors: BTreeSet::new(),
            creator,
        }
    }

    pub fn new(front: Vec<Individual>, target: &TargetSpec, creator: AgentId) -> Result<Self> {
        let contributors: BTreeSet<AgentId> = front
            .first()
            .map(|ind| ind.assignment.keys().copied().collect())
            .unwrap_or_default();
        if let Some(bad) = front
            .iter()
            .find(|ind| !ind.assignment.keys().eq(contributors.iter()))
        {
            return Err(EngineError::Evaluation(format!(
                "individuals disagree on contributors: {:?} vs {:?}",
                bad.assignment.keys().collect::<Vec<_>>(),
                contributors
            )));
        }
        let hypervolume = hypervolume(&front, target.reference())?;
        Ok(Self {
            front,
            hypervolume,
            contributors,
            creator,
        })
    }

    pub fn front(&self) -> &[Individual] {
        &self.front
    }

    pub fn hypervolume(&self) -> f64 {
        self.hypervolume
    }

    pub fn contributors(&self) -> &BTreeSet<AgentId> {
        &self.contributors
    }

    pub fn creator(&self) -> AgentId {
        self.creator
    }

    pub fn is_empty(&self) -> bool {
        self.front.is_empty()
    }

    /// Mutually non-dominated individuals of the stored front, in order.
    pub fn non_dominated(&self) -> Vec<&Individual> {
        non_dominated_indices(&self.front)
            .into_iter()
            .map(|i| &self.front[i])
            .collect()
    }

    /// Objective vectors of the non-dominated individuals.
    pub fn front_objectives(&self) -> Vec<Vec<f64>> {
        self.non_dominated()
            .into_iter()
            .map(|ind| ind.objectives().to_vec())
            .collect()
    }

    /// Decisions of `agent` for `slots` solution points, wrapping around the
    /// front when it is shorter.
    pub fn column(&self, agent: AgentId, slots: usize) -> Option<Vec<DecisionVector>> {
        if self.front.is_empty() {
            return None;
        }
        (0..slots)
            .map(|j| self.front[j % self.front.len()].decision(agent).cloned())
            .collect()
    }

    /// Total order used everywhere two candidates are compared: more
    /// contributors, then higher hypervolume, then the smaller creator id,
    /// then content. `Greater` means better.
    pub fn rank_cmp(&self, other: &Candidate) -> Ordering {
        self.contributors
            .len()
            .cmp(&other.contributors.len())
            .then_with(|| self.hypervolume.total_cmp(&other.hypervolume))
            .then_with(|| other.creator.cmp(&self.creator))
            .then_with(|| self.content_cmp(other))
    }

    fn content_cmp(&self, other: &Candidate) -> Ordering {
        // Reversed so that, all else equal, the lexicographically smaller
        // content wins.
        other
            .contributors
            .cmp(&self.contributors)
            .then_with(|| other.front.len().cmp(&self.front.len()))
            .then_with(|| {
                for (a, b) in other.front.iter().zip(&self.front) {
                    match a.content_cmp(b) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            })
    }
}

/// Versioned selections of one agent, one decision per solution point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub counter: u64,
    pub selections: Vec<DecisionVector>,
}

/// What an agent knows about everyone's current selections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemConfig(BTreeMap<AgentId, SelectionEntry>);

impl SystemConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, agent: AgentId) -> Option<&SelectionEntry> {
        self.0.get(&agent)
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.0.contains_key(&agent)
    }

    pub fn insert(&mut self, agent: AgentId, entry: SelectionEntry) {
        self.0.insert(agent, entry);
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps, per agent, the entry with the higher counter. Equal counters
    /// fall back to the smaller content so the merge is order independent.
    pub fn merge(&mut self, other: &SystemConfig) {
        for (agent, theirs) in &other.0 {
            match self.0.get(agent) {
                Some(ours) if !entry_wins(theirs, ours) => {}
                _ => {
                    self.0.insert(*agent, theirs.clone());
                }
            }
        }
    }

    /// Overwrites the selections of every contributor with its column of
    /// the candidate, keeping the number of slots already recorded. Counters
    /// are left alone.
    pub fn align_to(&mut self, candidate: &Candidate) {
        for &agent in candidate.contributors() {
            let slots = self
                .0
                .get(&agent)
                .map_or(candidate.front().len(), |e| e.selections.len().max(1));
            let Some(column) = candidate.column(agent, slots) else {
                continue;
            };
            match self.0.get_mut(&agent) {
                Some(entry) => {
                    if entry.selections != column {
                        entry.selections = column;
                    }
                }
                None => {
                    self.0.insert(
                        agent,
                        SelectionEntry {
                            counter: 0,
                            selections: column,
                        },
                    );
                }
            }
        }
    }

    pub(crate) fn bump(&mut self, agent: AgentId) {
        if let Some(entry) = self.0.get_mut(&agent) {
            entry.counter += 1;
        }
    }
}

fn entry_wins(candidate: &SelectionEntry, current: &SelectionEntry) -> bool {
    match candidate.counter.cmp(&current.counter) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => candidate.selections < current.selections,
    }
}

/// Complete decision list for one solution point: known selections for the
/// given slot, assumed decisions for everyone else.
pub fn assemble(system_config: &SystemConfig, slot: usize, target: &TargetSpec) -> Vec<DecisionVector> {
    (0..target.num_agents())
        .map(|a| {
            let id = AgentId(a);
            match system_config.get(id) {
                Some(entry) if !entry.selections.is_empty() => {
                    entry.selections[slot % entry.selections.len()].clone()
                }
                _ => target.target().assumed_decision(id),
            }
        })
        .collect()
}

/// The unit agents exchange.
#[derive(Debug, Clone)]
pub struct WorkingMemory {
    pub target: Arc<TargetSpec>,
    pub system_config: SystemConfig,
    pub candidate: Arc<Candidate>,
}

impl WorkingMemory {
    /// Memory of the bootstrap message: nobody has participated yet.
    pub fn bootstrap(target: Arc<TargetSpec>, starter: AgentId) -> Self {
        Self {
            target,
            system_config: SystemConfig::new(),
            candidate: Arc::new(Candidate::empty(starter)),
        }
    }
}

impl PartialEq for WorkingMemory {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.target, &other.target) || self.target.same_as(&other.target))
            && (Arc::ptr_eq(&self.candidate, &other.candidate) || self.candidate == other.candidate)
            && self.system_config == other.system_config
    }
}
