use std::cmp::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    dedup_individuals, AgentId, Candidate, EngineError, Flexibility, Individual, MutateStrategy, PickStrategy,
    Result, SelectionEntry, WorkingMemory,
};
use crate::pareto::{hypervolume, reduce_indices};

/// Everything that shapes one agent's behaviour. All fields may differ
/// between agents of the same negotiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub id: AgentId,
    pub flexibility: Arc<Flexibility>,
    pub pick: PickStrategy,
    pub mutate: MutateStrategy,
    pub min_change: f64,
    pub num_iterations: usize,
    pub num_solution_points: usize,
    pub seed: u64,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        self.flexibility
            .validate()
            .map_err(|e| EngineError::Config(format!("agent {}: {e}", self.id)))?;
        if !self.mutate.fits(&self.flexibility) {
            return Err(EngineError::StrategyMismatch {
                agent: self.id,
                strategy: self.mutate.name(),
            });
        }
        if self.min_change.is_nan() || self.min_change < 0.0 {
            return Err(EngineError::Config(format!("agent {}: min_change must be >= 0", self.id)));
        }
        if self.num_iterations == 0 || self.num_solution_points == 0 {
            return Err(EngineError::Config(format!(
                "agent {}: iterations and solution points must be positive",
                self.id
            )));
        }
        Ok(())
    }
}

/// Merges an incoming memory into the local one.
///
/// Selections are merged per agent by counter and the better candidate is
/// kept. Returns whether anything changed.
pub fn perceive(memory: &WorkingMemory, incoming: &WorkingMemory) -> Result<(WorkingMemory, bool)> {
    if !Arc::ptr_eq(&memory.target, &incoming.target) && !memory.target.same_as(&incoming.target) {
        return Err(EngineError::TargetMismatch);
    }
    let mut system_config = memory.system_config.clone();
    system_config.merge(&incoming.system_config);
    let candidate = if incoming.candidate.rank_cmp(&memory.candidate) == Ordering::Greater {
        incoming.candidate.clone()
    } else {
        memory.candidate.clone()
    };
    system_config.align_to(&candidate);
    let merged = WorkingMemory {
        target: memory.target.clone(),
        system_config,
        candidate,
    };
    let changed = merged != *memory;
    Ok((merged, changed))
}

/// First contribution of an agent: random feasible decisions for every
/// solution point, folded into the candidate.
pub fn initial_participation<R: Rng + ?Sized>(
    cfg: &AgentConfig,
    memory: &WorkingMemory,
    rng: &mut R,
) -> Result<WorkingMemory> {
    let mut mem = memory.clone();
    let selections = (0..cfg.num_solution_points)
        .map(|_| cfg.flexibility.sample(rng))
        .collect();
    mem.system_config.insert(
        cfg.id,
        SelectionEntry {
            counter: 1,
            selections,
        },
    );
    if let Some(candidate) = include_known_agents(&mem, cfg)? {
        adopt(&mut mem, candidate, cfg.id);
    }
    Ok(mem)
}

/// Rebuilds the candidate when the system configuration knows agents the
/// candidate lacks. Their selections are added slot by slot.
fn include_known_agents(mem: &WorkingMemory, cfg: &AgentConfig) -> Result<Option<Candidate>> {
    let current = &mem.candidate;
    let missing: Vec<AgentId> = mem
        .system_config
        .agents()
        .filter(|a| !current.contributors().contains(a))
        .collect();
    if missing.is_empty() {
        return Ok(None);
    }
    let slots = cfg.num_solution_points.max(current.front().len());
    let mut front = Vec::with_capacity(slots);
    for j in 0..slots {
        let mut assignment = match current.front() {
            [] => Default::default(),
            f => f[j % f.len()].assignment().clone(),
        };
        for &agent in &missing {
            let entry = mem.system_config.get(agent).expect("listed above");
            if entry.selections.is_empty() {
                continue;
            }
            assignment.insert(agent, entry.selections[j % entry.selections.len()].clone());
        }
        front.push(Individual::evaluate(assignment, &mem.target)?);
    }
    let front = dedup_individuals(front);
    let keep = reduce_indices(&front, cfg.num_solution_points, mem.target.reference())?;
    let front = keep.into_iter().map(|i| front[i].clone()).collect();
    Candidate::new(front, &mem.target, cfg.id).map(Some)
}

/// Installs a new candidate, aligns the selections to it and counts an
/// update of the agent's own entry if its column moved.
fn adopt(mem: &mut WorkingMemory, candidate: Candidate, own: AgentId) {
    let before = mem.system_config.get(own).map(|e| e.selections.clone());
    mem.system_config.align_to(&candidate);
    mem.candidate = Arc::new(candidate);
    if mem.system_config.get(own).map(|e| &e.selections) != before.as_ref() {
        mem.system_config.bump(own);
    }
}

/// Pick, mutate, reduce and keep the new front only if its hypervolume
/// beats the candidate's by more than `min_change`.
pub fn decide<R: Rng + ?Sized>(
    memory: &WorkingMemory,
    cfg: &AgentConfig,
    rng: &mut R,
) -> Result<(WorkingMemory, bool)> {
    if !memory.system_config.contains(cfg.id) {
        return Err(EngineError::MissingDecision(cfg.id));
    }
    let mut mem = memory.clone();
    if let Some(candidate) = include_known_agents(&mem, cfg)? {
        adopt(&mut mem, candidate, cfg.id);
    }
    let reference = mem.target.reference().clone();

    for _ in 0..cfg.num_iterations {
        let current = mem.candidate.clone();
        let front = current.front();
        if front.is_empty() {
            break;
        }
        let mut pool: Vec<Individual> = front.to_vec();
        for p in cfg.pick.pick(front.len(), rng) {
            let own = front[p].decision(cfg.id).ok_or(EngineError::MissingDecision(cfg.id))?;
            let offspring =
                cfg.mutate
                    .mutate(own, &cfg.flexibility, rng)
                    .ok_or(EngineError::StrategyMismatch {
                        agent: cfg.id,
                        strategy: cfg.mutate.name(),
                    })?;
            for decision in offspring {
                if !cfg.flexibility.contains(&decision) {
                    return Err(EngineError::Infeasible {
                        agent: cfg.id,
                        values: decision.values().to_vec(),
                    });
                }
                if decision != *own {
                    pool.push(front[p].with_decision(cfg.id, decision, &mem.target)?);
                }
            }
        }
        if pool.len() == front.len() {
            continue;
        }
        let pool = dedup_individuals(pool);
        let keep = reduce_indices(&pool, cfg.num_solution_points, &reference)?;
        let new_front: Vec<Individual> = keep.into_iter().map(|i| pool[i].clone()).collect();
        let hv = hypervolume(&new_front, &reference)?;
        if hv > current.hypervolume() + cfg.min_change {
            let candidate = Candidate::new(new_front, &mem.target, cfg.id)?;
            debug_assert!(candidate
                .front()
                .iter()
                .all(|ind| ind.decision(cfg.id).is_some_and(|d| cfg.flexibility.contains(d))));
            adopt(&mut mem, candidate, cfg.id);
        }
    }
    let changed = mem != *memory;
    Ok((mem, changed))
}

/// A working memory addressed to one neighbour.
#[derive(Debug, Clone)]
pub struct Outgoing {
    pub to: AgentId,
    pub memory: Arc<WorkingMemory>,
}

/// One message per neighbour if the memory changed, none otherwise.
pub fn act(memory: &Arc<WorkingMemory>, changed: bool, neighbors: &[AgentId]) -> Vec<Outgoing> {
    if !changed {
        return Vec::new();
    }
    neighbors
        .iter()
        .map(|&to| Outgoing {
            to,
            memory: memory.clone(),
        })
        .collect()
}

/// An agent with its own random stream and working memory.
#[derive(Debug, Clone)]
pub struct Agent {
    cfg: AgentConfig,
    rng: ChaCha8Rng,
    memory: Option<Arc<WorkingMemory>>,
    decide_calls: u64,
}

impl Agent {
    pub fn new(cfg: AgentConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self {
            cfg,
            rng,
            memory: None,
            decide_calls: 0,
        })
    }

    pub fn id(&self) -> AgentId {
        self.cfg.id
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn memory(&self) -> Option<&Arc<WorkingMemory>> {
        self.memory.as_ref()
    }

    pub fn decide_calls(&self) -> u64 {
        self.decide_calls
    }

    /// Processes a batch of received memories: perceive all of them, then
    /// participate (first time) or decide. Returns the memory to broadcast
    /// if it changed.
    pub fn handle(&mut self, batch: &[Arc<WorkingMemory>]) -> Result<Option<Arc<WorkingMemory>>> {
        let Some(first) = batch.first() else {
            return Ok(None);
        };
        let mut mem = match &self.memory {
            Some(m) => (**m).clone(),
            None => (**first).clone(),
        };
        for incoming in batch {
            mem = perceive(&mem, incoming)?.0;
        }
        if mem.system_config.contains(self.cfg.id) {
            self.decide_calls += 1;
            mem = decide(&mem, &self.cfg, &mut self.rng)?.0;
        } else {
            mem = initial_participation(&self.cfg, &mem, &mut self.rng)?;
        }
        let changed = self.memory.as_deref() != Some(&mem);
        if !changed {
            return Ok(None);
        }
        let mem = Arc::new(mem);
        self.memory = Some(mem.clone());
        Ok(Some(mem))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohda::{DecisionVector, DiscreteToy, TargetSpec, VariablePerAgent};
    use crate::pareto::Objectives;
    use crate::problems::{Zdt, ZdtVariant};

    fn zdt_spec() -> Arc<TargetSpec> {
        Arc::new(TargetSpec::new(Arc::new(VariablePerAgent::zdt(ZdtVariant::Zdt1)), Zdt::reference_point()).unwrap())
    }

    fn zdt_cfg(id: usize, min_change: f64) -> AgentConfig {
        AgentConfig {
            id: AgentId(id),
            flexibility: Arc::new(Flexibility::interval(0.0, 1.0)),
            pick: PickStrategy::AllPoints,
            mutate: MutateStrategy::TwoSided {
                min_delta: 0.4,
                max_delta: 0.6,
            },
            min_change,
            num_iterations: 1,
            num_solution_points: 25,
            seed: id as u64,
        }
    }

    /// Memory after agents 0..n participated in turn.
    fn participated(n: usize) -> WorkingMemory {
        let spec = zdt_spec();
        let mut mem = WorkingMemory::bootstrap(spec, AgentId(0));
        for a in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + a as u64);
            mem = initial_participation(&zdt_cfg(a, 0.0), &mem, &mut rng).unwrap();
        }
        mem
    }

    #[test]
    fn initial_participation_draws_feasible_points() {
        let mem = participated(1);
        let entry = mem.system_config.get(AgentId(0)).unwrap();
        assert_eq!(entry.selections.len(), 25);
        assert_eq!(entry.counter, 1);
        assert!(entry.selections.iter().all(|d| (0.0..=1.0).contains(&d.values()[0])));
        assert_eq!(mem.candidate.front().len(), 25);
        assert_eq!(mem.candidate.contributors().len(), 1);
        // Everyone else is assumed to be 1: g = 10.
        let ind = &mem.candidate.front()[0];
        let x = ind.decision(AgentId(0)).unwrap().values()[0];
        assert!((ind.objectives()[1] - 10.0 * (1.0 - (x / 10.0).sqrt())).abs() < 1e-12);

        let again = participated(1);
        assert_eq!(again, mem);
    }

    #[test]
    fn discrete_participation_draws_from_the_set() {
        let toy = DiscreteToy::new(3);
        let reference = toy.reference_point();
        let spec = Arc::new(TargetSpec::new(Arc::new(toy), reference).unwrap());
        let cfg = AgentConfig {
            id: AgentId(1),
            flexibility: Arc::new(Flexibility::DiscreteSet {
                schedules: DiscreteToy::schedules(),
            }),
            pick: PickStrategy::AllPoints,
            mutate: MutateStrategy::DiscreteExhaustive,
            min_change: 0.0,
            num_iterations: 1,
            num_solution_points: 8,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mem = initial_participation(&cfg, &WorkingMemory::bootstrap(spec, AgentId(0)), &mut rng).unwrap();
        let sel = &mem.system_config.get(AgentId(1)).unwrap().selections;
        assert_eq!(sel.len(), 8);
        assert!(sel.iter().all(|d| cfg.flexibility.contains(d)));
        // At most two distinct assignments survive deduplication.
        assert!(mem.candidate.front().len() <= 2);
    }

    #[test]
    fn perceive_prefers_more_contributors() {
        let two = participated(2);
        let three = participated(3);
        let (merged, changed) = perceive(&two, &three).unwrap();
        assert!(changed);
        assert_eq!(merged.candidate, three.candidate);
        let (merged, changed) = perceive(&three, &two).unwrap();
        assert!(!changed);
        assert_eq!(merged, three);
    }

    #[test]
    fn perceive_prefers_higher_hypervolume() {
        let base = participated(2);
        let mut better = base.clone();
        let mut c = (*base.candidate).clone();
        c.hypervolume += 0.1;
        c.creator = AgentId(5);
        better.candidate = Arc::new(c);
        let (merged, changed) = perceive(&base, &better).unwrap();
        assert!(changed);
        assert_eq!(merged.candidate.creator(), AgentId(5));
        let (same, changed) = perceive(&base, &base).unwrap();
        assert!(!changed);
        assert_eq!(same, base);
    }

    #[test]
    fn perceive_is_order_independent_for_candidates() {
        let a = participated(2);
        let b = participated(3);
        let mut c = participated(3);
        let mut cand = (*c.candidate).clone();
        cand.hypervolume += 1.0;
        c.candidate = Arc::new(cand);
        let ab = perceive(&perceive(&a, &b).unwrap().0, &c).unwrap().0;
        let ba = perceive(&perceive(&a, &c).unwrap().0, &b).unwrap().0;
        assert_eq!(ab.candidate, ba.candidate);
    }

    #[test]
    fn perceive_rejects_foreign_targets() {
        let a = participated(1);
        let other = Arc::new(
            TargetSpec::new(Arc::new(VariablePerAgent::zdt(ZdtVariant::Zdt2)), Zdt::reference_point()).unwrap(),
        );
        let b = WorkingMemory::bootstrap(other, AgentId(0));
        assert_eq!(perceive(&a, &b).unwrap_err(), EngineError::TargetMismatch);
    }

    #[test]
    fn decide_requires_participation() {
        let mem = participated(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            decide(&mem, &zdt_cfg(4, 0.0), &mut rng),
            Err(EngineError::MissingDecision(AgentId(4)))
        ));
    }

    #[test]
    fn decide_adopts_improvements_and_bumps_counter() {
        let mem = participated(3);
        let cfg = zdt_cfg(1, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (next, changed) = decide(&mem, &cfg, &mut rng).unwrap();
        assert!(changed);
        assert!(next.candidate.hypervolume() > mem.candidate.hypervolume());
        assert_eq!(next.candidate.creator(), AgentId(1));
        assert!(next.system_config.get(AgentId(1)).unwrap().counter > mem.system_config.get(AgentId(1)).unwrap().counter);
        assert!(next.candidate.front().len() <= 25);
        for ind in next.candidate.front() {
            assert!(cfg.flexibility.contains(ind.decision(AgentId(1)).unwrap()));
        }
        // Selections follow the adopted front.
        assert_eq!(
            next.system_config.get(AgentId(2)).unwrap().selections,
            next.candidate.column(AgentId(2), 25).unwrap()
        );
    }

    #[test]
    fn min_change_gates_adoption() {
        let mem = participated(3);
        let base_hv = mem.candidate.hypervolume();
        let run = |min_change: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            decide(&mem, &zdt_cfg(2, min_change), &mut rng).unwrap()
        };
        let (free, _) = run(0.0);
        let gain = free.candidate.hypervolume() - base_hv;
        assert!(gain > 0.0);

        let (kept, changed) = run(gain * 1.001);
        assert!(!changed);
        assert_eq!(kept, mem);
        let (taken, changed) = run(gain * 0.999);
        assert!(changed);
        assert_eq!(taken.candidate.hypervolume(), free.candidate.hypervolume());

        // A gain of 0.0005 against a margin of 0.001 is discarded; a gain of
        // 0.01 is not.
        let mut tight = mem.clone();
        let mut c = (*mem.candidate).clone();
        c.hypervolume = free.candidate.hypervolume() - 0.0005;
        tight.candidate = Arc::new(c);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        assert!(!decide(&tight, &zdt_cfg(2, 0.001), &mut rng).unwrap().1);
        let mut loose = mem.clone();
        let mut c = (*mem.candidate).clone();
        c.hypervolume = free.candidate.hypervolume() - 0.01;
        loose.candidate = Arc::new(c);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        assert!(decide(&loose, &zdt_cfg(2, 0.001), &mut rng).unwrap().1);
    }

    #[test]
    fn infinite_margin_never_updates() {
        let mem = participated(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (next, changed) = decide(&mem, &zdt_cfg(0, f64::INFINITY), &mut rng).unwrap();
            assert!(!changed);
            assert_eq!(next, mem);
        }
    }

    #[test]
    fn decide_folds_in_agents_known_only_from_selections() {
        let mut mem = participated(2);
        mem.system_config.insert(
            AgentId(9),
            SelectionEntry {
                counter: 1,
                selections: vec![DecisionVector::scalar(0.0); 25],
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (next, changed) = decide(&mem, &zdt_cfg(0, f64::INFINITY), &mut rng).unwrap();
        assert!(changed);
        assert!(next.candidate.contributors().contains(&AgentId(9)));
        assert_eq!(next.candidate.contributors().len(), 3);
    }

    #[test]
    fn act_sends_only_on_change() {
        let mem = Arc::new(participated(1));
        let n = [AgentId(1), AgentId(2)];
        assert_eq!(act(&mem, true, &n).len(), 2);
        assert!(act(&mem, false, &n).is_empty());
    }

    #[test]
    fn config_validation() {
        let mut cfg = zdt_cfg(0, 0.0);
        assert!(cfg.validate().is_ok());
        cfg.mutate = MutateStrategy::DiscreteRandom;
        assert!(matches!(cfg.validate(), Err(EngineError::StrategyMismatch { .. })));
        let mut cfg = zdt_cfg(0, -1.0);
        assert!(cfg.validate().is_err());
        cfg.min_change = 0.0;
        cfg.num_solution_points = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn agent_handles_batches() {
        let spec = zdt_spec();
        let mut a = Agent::new(zdt_cfg(0, 0.0)).unwrap();
        let boot = Arc::new(WorkingMemory::bootstrap(spec, AgentId(0)));
        let out = a.handle(std::slice::from_ref(&boot)).unwrap().expect("first participation broadcasts");
        assert_eq!(a.decide_calls(), 0);
        assert!(out.system_config.contains(AgentId(0)));
        let mut b = Agent::new(zdt_cfg(1, 0.0)).unwrap();
        let out_b = b.handle(std::slice::from_ref(&out)).unwrap().unwrap();
        assert_eq!(out_b.candidate.contributors().len(), 2);
        a.handle(&[out_b]).unwrap();
        assert_eq!(a.decide_calls(), 1);
        assert!(a.handle(&[]).unwrap().is_none());
    }
}
