//! Agent setups for the distributed ZDT benchmarks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cohda::{AgentConfig, AgentId, DiscreteToy, Flexibility, MutateStrategy, PickStrategy, Result, TargetSpec, VariablePerAgent};
use crate::problems::{Zdt, ZdtVariant};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZdtParams {
    pub variant: ZdtVariant,
    pub agents: usize,
    pub points: usize,
    pub min_change: f64,
    pub min_delta: f64,
    pub max_delta: f64,
    pub iterations: usize,
}

impl ZdtParams {
    /// Thirty agents, 25 points, deltas in [0.4, 0.6], one iteration; the
    /// minimal change is 0.0001 for ZDT1 and 0.001 otherwise.
    pub fn defaults(variant: ZdtVariant) -> Self {
        Self {
            variant,
            agents: 30,
            points: 25,
            min_change: match variant {
                ZdtVariant::Zdt1 => 0.0001,
                ZdtVariant::Zdt2 | ZdtVariant::Zdt3 => 0.001,
            },
            min_delta: 0.4,
            max_delta: 0.6,
            iterations: 1,
        }
    }

    pub fn target(&self) -> Result<Arc<TargetSpec>> {
        let problem = Zdt {
            variant: self.variant,
            n_vars: self.agents,
        };
        let target = VariablePerAgent::new(Arc::new(problem), 1.0);
        Ok(Arc::new(TargetSpec::new(Arc::new(target), Zdt::reference_point())?))
    }

    /// One agent per variable; agent seeds derive from `seed`.
    pub fn agent_configs(&self, seed: u64) -> Vec<AgentConfig> {
        let flexibility = Arc::new(Flexibility::interval(0.0, 1.0));
        (0..self.agents)
            .map(|i| AgentConfig {
                id: AgentId(i),
                flexibility: flexibility.clone(),
                pick: PickStrategy::AllPoints,
                mutate: MutateStrategy::TwoSided {
                    min_delta: self.min_delta,
                    max_delta: self.max_delta,
                },
                min_change: self.min_change,
                num_iterations: self.iterations,
                num_solution_points: self.points,
                seed: derive_seed(seed, i as u64),
            })
            .collect()
    }
}

/// Small discrete instance whose Pareto front is every one of the
/// `2^agents` assignments. Agents try both schedules on every point.
pub fn toy_setup(agents: usize, seed: u64) -> Result<(Vec<AgentConfig>, Arc<TargetSpec>)> {
    let toy = DiscreteToy::new(agents);
    let reference = toy.reference_point();
    let spec = Arc::new(TargetSpec::new(Arc::new(toy), reference)?);
    let flexibility = Arc::new(Flexibility::DiscreteSet {
        schedules: DiscreteToy::schedules(),
    });
    let configs = (0..agents)
        .map(|i| AgentConfig {
            id: AgentId(i),
            flexibility: flexibility.clone(),
            pick: PickStrategy::AllPoints,
            mutate: MutateStrategy::DiscreteExhaustive,
            min_change: 0.0,
            num_iterations: 1,
            num_solution_points: 1 << agents,
            seed: derive_seed(seed, i as u64),
        })
        .collect();
    Ok((configs, spec))
}
