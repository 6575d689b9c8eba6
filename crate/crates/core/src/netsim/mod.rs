//! Seeded asynchronous message passing between negotiation agents.
//!
//! A single logical event queue delivers working memories after random
//! delays. Messages that reach an agent while it waits to process are
//! handled together as one batch.

mod topology;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohda::{wire, Agent, AgentConfig, AgentId, Candidate, EngineError, TargetSpec, WorkingMemory};

pub use topology::{build_topology, Topology, TopologyKind};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("topology: {0}")]
    Topology(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("trace: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DeliveryPolicy {
    /// Every message takes one time unit; delivery follows send order.
    Fifo,
    /// Delays drawn uniformly from `[min, max]`.
    UniformDelay { min: f64, max: f64 },
}

impl DeliveryPolicy {
    fn delay(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            DeliveryPolicy::Fifo => 1.0,
            DeliveryPolicy::UniformDelay { min, max } if min < max => rng.gen_range(min..max),
            DeliveryPolicy::UniformDelay { min, .. } => min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub delivery: DeliveryPolicy,
    /// Time between an agent's first pending message and its processing.
    pub processing_delay: f64,
    pub max_messages: u64,
    /// Route every message through the JSON wire format.
    pub serialize_messages: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            delivery: DeliveryPolicy::UniformDelay { min: 1.0, max: 10.0 },
            processing_delay: 1.0,
            max_messages: 1_000_000,
            serialize_messages: false,
            trace: None,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        let ok_delay = match self.delivery {
            DeliveryPolicy::Fifo => true,
            DeliveryPolicy::UniformDelay { min, max } => min > 0.0 && min <= max && max.is_finite(),
        };
        if !ok_delay || !(self.processing_delay >= 0.0 && self.processing_delay.is_finite()) {
            return Err(SimError::Config("delays must be finite and delivery delays positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// Final candidate of every agent, `None` if it never participated.
    pub candidates: Vec<Option<Arc<Candidate>>>,
    /// Quiescent and every agent holds the same candidate.
    pub converged: bool,
    pub quiescent: bool,
    pub messages: u64,
    pub messages_sent: Vec<u64>,
    pub messages_received: Vec<u64>,
    pub decide_calls: Vec<u64>,
    pub final_time: f64,
    pub wall_time: Duration,
}

impl SimResult {
    /// The agreed candidate of a converged run.
    pub fn agreed_candidate(&self) -> Option<&Arc<Candidate>> {
        if !self.converged {
            return None;
        }
        self.candidates.first().and_then(|c| c.as_ref())
    }

    pub fn all_candidates_equal(&self) -> bool {
        match self.candidates.first() {
            Some(Some(first)) => self
                .candidates
                .iter()
                .all(|c| c.as_ref().is_some_and(|c| Arc::ptr_eq(c, first) || **c == **first)),
            _ => false,
        }
    }

    /// Everything except wall time, for determinism checks.
    pub fn same_outcome(&self, other: &SimResult) -> bool {
        self.candidates == other.candidates
            && self.converged == other.converged
            && self.quiescent == other.quiescent
            && self.messages == other.messages
            && self.messages_sent == other.messages_sent
            && self.messages_received == other.messages_received
            && self.decide_calls == other.decide_calls
            && self.final_time.to_bits() == other.final_time.to_bits()
    }
}

/// True iff nothing is in flight and no agent has unprocessed input.
pub fn detect_quiescence(in_flight: usize, pending: &[bool]) -> bool {
    in_flight == 0 && pending.iter().all(|p| !p)
}

#[derive(Debug, Clone)]
enum Payload {
    Shared(Arc<WorkingMemory>),
    Encoded(Arc<[u8]>),
}

#[derive(Debug)]
enum Event {
    Deliver {
        from: Option<AgentId>,
        to: AgentId,
        payload: Payload,
    },
    Process(AgentId),
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: the heap pops the earliest event, ties by insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Serialize)]
struct TraceRecord {
    time: f64,
    event: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<usize>,
    to: usize,
}

struct Queue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    in_flight: usize,
}

impl Queue {
    fn push(&mut self, time: f64, event: Event) {
        if matches!(event, Event::Deliver { .. }) {
            self.in_flight += 1;
        }
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }
}

/// Runs one negotiation until quiescence or the message cap.
///
/// Agent `i` of `agents` must carry id `i`. Agent 0 receives the bootstrap
/// message.
pub fn run_negotiation(
    agents: Vec<AgentConfig>,
    target: Arc<TargetSpec>,
    topology: &Topology,
    sim: &SimConfig,
) -> Result<SimResult, SimError> {
    sim.validate()?;
    let n = agents.len();
    if n != topology.n {
        return Err(SimError::Config(format!("{n} agents for a topology of {}", topology.n)));
    }
    if let Some((i, c)) = agents.iter().enumerate().find(|(i, c)| c.id.0 != *i) {
        return Err(SimError::Config(format!("agent at position {i} has id {}", c.id)));
    }
    if n == 0 {
        return Err(SimError::Config("no agents".into()));
    }

    let started = Instant::now();
    let mut agents: Vec<Agent> = agents.into_iter().map(Agent::new).collect::<Result<_, _>>()?;
    let neighbors = topology.neighbor_lists();
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let mut trace = sim
        .trace
        .as_ref()
        .map(|p| File::create(p).map(BufWriter::new))
        .transpose()?;

    let mut inbox: Vec<Vec<Arc<WorkingMemory>>> = vec![Vec::new(); n];
    let mut pending = vec![false; n];
    let mut sent = vec![0u64; n];
    let mut received = vec![0u64; n];
    let mut messages = 0u64;
    let mut capped = false;
    let mut now = 0.0;

    let starter = AgentId(0);
    let mut queue = Queue {
        heap: BinaryHeap::new(),
        seq: 0,
        in_flight: 0,
    };
    queue.push(
        0.0,
        Event::Deliver {
            from: None,
            to: starter,
            payload: Payload::Shared(Arc::new(WorkingMemory::bootstrap(target.clone(), starter))),
        },
    );

    while let Some(Scheduled { time, event, .. }) = queue.heap.pop() {
        now = time;
        match event {
            Event::Deliver { from, to, payload } => {
                queue.in_flight -= 1;
                if from.is_some() {
                    received[to.0] += 1;
                }
                let memory = match payload {
                    Payload::Shared(m) => m,
                    Payload::Encoded(bytes) => Arc::new(wire::decode(&bytes, &target)?),
                };
                inbox[to.0].push(memory);
                if !pending[to.0] {
                    pending[to.0] = true;
                    queue.push(time + sim.processing_delay, Event::Process(to));
                }
                write_trace(&mut trace, time, "deliver", from, to)?;
            }
            Event::Process(agent) => {
                pending[agent.0] = false;
                let batch = std::mem::take(&mut inbox[agent.0]);
                write_trace(&mut trace, time, "process", None, agent)?;
                let Some(memory) = agents[agent.0].handle(&batch)? else {
                    continue;
                };
                let payload = if sim.serialize_messages {
                    Payload::Encoded(wire::encode(&memory).into())
                } else {
                    Payload::Shared(memory)
                };
                for &to in &neighbors[agent.0] {
                    if messages >= sim.max_messages {
                        capped = true;
                        break;
                    }
                    messages += 1;
                    sent[agent.0] += 1;
                    let delay = sim.delivery.delay(&mut rng);
                    queue.push(
                        time + delay,
                        Event::Deliver {
                            from: Some(agent),
                            to,
                            payload: payload.clone(),
                        },
                    );
                    write_trace(&mut trace, time, "send", Some(agent), to)?;
                }
                if capped {
                    break;
                }
            }
        }
    }
    if let Some(t) = trace.as_mut() {
        t.flush()?;
    }

    let quiescent = !capped && detect_quiescence(queue.in_flight, &pending);
    let candidates: Vec<Option<Arc<Candidate>>> = agents
        .iter()
        .map(|a| a.memory().map(|m| m.candidate.clone()))
        .collect();
    let mut result = SimResult {
        candidates,
        converged: false,
        quiescent,
        messages,
        messages_sent: sent,
        messages_received: received,
        decide_calls: agents.iter().map(Agent::decide_calls).collect(),
        final_time: now,
        wall_time: started.elapsed(),
    };
    result.converged = quiescent && result.all_candidates_equal();
    Ok(result)
}

fn write_trace(
    trace: &mut Option<BufWriter<File>>,
    time: f64,
    event: &'static str,
    from: Option<AgentId>,
    to: AgentId,
) -> Result<(), SimError> {
    if let Some(w) = trace {
        let record = TraceRecord {
            time,
            event,
            from: from.map(|a| a.0),
            to: to.0,
        };
        serde_json::to_writer(&mut *w, &record).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
