//! Self-describing JSON encoding of working memories.
//!
//! The target itself is not shipped; a message carries the target's
//! descriptor and the receiver resolves it against the target it already
//! holds.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Candidate, EngineError, Result, SystemConfig, TargetSpec, WorkingMemory};

/// Version of the message layout.
pub const WIRE_VERSION: u32 = 1;

#[derive(Serialize)]
struct WireOut<'a> {
    version: u32,
    target: serde_json::Value,
    system_config: &'a SystemConfig,
    candidate: &'a Candidate,
}

#[derive(Deserialize)]
struct WireIn {
    version: u32,
    target: serde_json::Value,
    system_config: SystemConfig,
    candidate: Candidate,
}

pub fn encode(memory: &WorkingMemory) -> Vec<u8> {
    let out = WireOut {
        version: WIRE_VERSION,
        target: memory.target.descriptor(),
        system_config: &memory.system_config,
        candidate: &memory.candidate,
    };
    serde_json::to_vec(&out).expect("working memory serializes")
}

/// Decodes a message, checking that it describes `target`.
pub fn decode(bytes: &[u8], target: &Arc<TargetSpec>) -> Result<WorkingMemory> {
    let wire: WireIn = serde_json::from_slice(bytes).map_err(|e| EngineError::Evaluation(format!("bad message: {e}")))?;
    if wire.version != WIRE_VERSION {
        return Err(EngineError::Evaluation(format!("unsupported message version {}", wire.version)));
    }
    if wire.target != target.descriptor() {
        return Err(EngineError::TargetMismatch);
    }
    Ok(WorkingMemory {
        target: target.clone(),
        system_config: wire.system_config,
        candidate: Arc::new(wire.candidate),
    })
}
