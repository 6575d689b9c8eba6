use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::cohda::AgentId;

/// Rewiring attempts before a small world is declared unbuildable.
const MAX_REWIRE_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologyKind {
    Ring,
    Full,
    /// Ring lattice with `k` neighbours per side, each lattice edge rewired
    /// with probability `p`.
    SmallWorld { k: usize, p: f64 },
}

/// Undirected communication overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub n: usize,
    pub kind: TopologyKind,
    pub edges: BTreeSet<(usize, usize)>,
}

fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Topology {
    pub fn neighbors(&self, agent: AgentId) -> Vec<AgentId> {
        let a = agent.0;
        self.edges
            .iter()
            .filter_map(|&(x, y)| {
                if x == a {
                    Some(AgentId(y))
                } else if y == a {
                    Some(AgentId(x))
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn neighbor_lists(&self) -> Vec<Vec<AgentId>> {
        let mut lists = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            lists[a].push(AgentId(b));
            lists[b].push(AgentId(a));
        }
        for l in &mut lists {
            l.sort_unstable();
        }
        lists
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let lists = self.neighbor_lists();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for w in &lists[v] {
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w.0);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn lattice(n: usize, k: usize) -> BTreeSet<(usize, usize)> {
    (0..n)
        .flat_map(|i| (1..=k).map(move |j| edge(i, (i + j) % n)))
        .filter(|(a, b)| a != b)
        .collect()
}

fn rewire(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> BTreeSet<(usize, usize)> {
    let mut edges = lattice(n, k);
    for j in 1..=k {
        for i in 0..n {
            let old = edge(i, (i + j) % n);
            if !edges.contains(&old) || !rng.gen_bool(p) {
                continue;
            }
            let free: Vec<usize> = (0..n)
                .filter(|&w| w != i && !edges.contains(&edge(i, w)))
                .collect();
            if free.is_empty() {
                continue;
            }
            let w = free[rng.gen_range(0..free.len())];
            edges.remove(&old);
            edges.insert(edge(i, w));
        }
    }
    edges
}

/// Builds a connected overlay of `n` agents.
pub fn build_topology(n: usize, kind: TopologyKind, seed: u64) -> Result<Topology, SimError> {
    if n < 2 {
        return Err(SimError::Topology(format!("need at least 2 agents, got {n}")));
    }
    let edges = match kind {
        TopologyKind::Ring => lattice(n, 1),
        TopologyKind::Full => (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect(),
        TopologyKind::SmallWorld { k, p } => {
            if k == 0 || !(0.0..=1.0).contains(&p) {
                return Err(SimError::Topology(format!("invalid small world parameters k={k}, p={p}")));
            }
            let mut found = None;
            for attempt in 0..MAX_REWIRE_ATTEMPTS {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(attempt);
                let edges = rewire(n, k, p, &mut rng);
                let t = Topology { n, kind, edges };
                if t.is_connected() {
                    found = Some(t.edges);
                    break;
                }
            }
            found.ok_or_else(|| {
                SimError::Topology(format!(
                    "no connected small world after {MAX_REWIRE_ATTEMPTS} rewiring attempts"
                ))
            })?
        }
    };
    Ok(Topology { n, kind, edges })
}
