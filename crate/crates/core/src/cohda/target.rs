use std::sync::Arc;

use serde_json::json;

use super::{AgentId, DecisionVector, EngineError, GlobalTarget, Result};
use crate::pareto::{ObjectiveVector, ReferencePoint};
use crate::problems::{Problem, Zdt, ZdtVariant};

/// Spreads the variables of a [`Problem`] over agents, one variable each.
/// Unknown variables are assumed to hold a fixed value.
#[derive(Clone)]
pub struct VariablePerAgent {
    problem: Arc<dyn Problem>,
    assumed: f64,
}

impl std::fmt::Debug for VariablePerAgent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariablePerAgent")
            .field("problem", &self.problem.name())
            .field("n_vars", &self.problem.n_vars())
            .field("assumed", &self.assumed)
            .finish()
    }
}

impl VariablePerAgent {
    pub fn new(problem: Arc<dyn Problem>, assumed: f64) -> Self {
        Self { problem, assumed }
    }

    /// Thirty agents, unknown variables assumed to be 1.
    pub fn zdt(variant: ZdtVariant) -> Self {
        Self::new(Arc::new(Zdt::new(variant)), 1.0)
    }

    pub fn problem(&self) -> &Arc<dyn Problem> {
        &self.problem
    }
}

impl GlobalTarget for VariablePerAgent {
    fn num_agents(&self) -> usize {
        self.problem.n_vars()
    }

    fn num_objectives(&self) -> usize {
        self.problem.num_objectives()
    }

    fn assumed_decision(&self, _agent: AgentId) -> DecisionVector {
        DecisionVector::scalar(self.assumed)
    }

    fn evaluate(&self, decisions: &[&[f64]]) -> Result<ObjectiveVector> {
        let x: Vec<f64> = decisions.iter().map(|d| d[0]).collect();
        self.problem
            .evaluate(&x)
            .map_err(|e| EngineError::Evaluation(e.to_string()))
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({
            "kind": "variable_per_agent",
            "problem": self.problem.name(),
            "n_vars": self.problem.n_vars(),
            "assumed": self.assumed,
        })
    }
}

/// Small exhaustively enumerable instance: agent `a` picks bit `s_a` in
/// {0, 1}; f1 is the binary number the bits spell, f2 its complement. Every
/// assignment is Pareto optimal.
#[derive(Debug, Clone)]
pub struct DiscreteToy {
    agents: usize,
}

impl DiscreteToy {
    pub fn new(agents: usize) -> Self {
        assert!((1..=16).contains(&agents), "toy supports 1 to 16 agents");
        Self { agents }
    }

    pub fn schedules() -> Vec<DecisionVector> {
        vec![DecisionVector::scalar(0.0), DecisionVector::scalar(1.0)]
    }

    fn max_value(&self) -> f64 {
        ((1u32 << self.agents) - 1) as f64
    }

    pub fn reference_point(&self) -> ReferencePoint {
        let r = self.max_value() + 1.0;
        ReferencePoint::new(vec![r, r]).expect("finite")
    }
}

impl GlobalTarget for DiscreteToy {
    fn num_agents(&self) -> usize {
        self.agents
    }

    fn num_objectives(&self) -> usize {
        2
    }

    fn assumed_decision(&self, _agent: AgentId) -> DecisionVector {
        DecisionVector::scalar(0.0)
    }

    fn evaluate(&self, decisions: &[&[f64]]) -> Result<ObjectiveVector> {
        let f1: f64 = decisions
            .iter()
            .enumerate()
            .map(|(a, d)| d[0] * f64::from(1u32 << a))
            .sum();
        Ok(ObjectiveVector::new(vec![f1, self.max_value() - f1])?)
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({ "kind": "discrete_toy", "agents": self.agents })
    }
}
