use std::time::Instant;

use serde::Serialize;

use crate::cell::Workspace;
use crate::error::{Error, Result};
use crate::model::{CellKind, RecurrentModel};

#[derive(Debug, Clone, Serialize)]
pub struct LatencyReport {
    pub kind: CellKind,
    pub batch_size: usize,
    pub seq_len: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub repeats: usize,
    /// mean wall time for one forward pass of one sequence
    pub per_sequence_ms: f64,
    /// mean wall time for one pass over the whole batch
    pub total_s: f64,
}

/// Times forward passes over `batch` (row-major L×d sequences). One warmup
/// pass is run first and discarded.
pub fn measure_latency(model: &RecurrentModel, batch: &[Vec<f64>], repeats: usize) -> Result<LatencyReport> {
    if batch.is_empty() {
        return Err(Error::validation("latency batch is empty"));
    }
    let repeats = repeats.max(1);
    let mut ws = Workspace::default();
    let mut sink = 0.0;
    for s in batch {
        sink += model.forward_with(s, &mut ws)?;
    }
    let start = Instant::now();
    for _ in 0..repeats {
        for s in batch {
            sink += model.forward_with(s, &mut ws)?;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    let passes = repeats as f64;
    Ok(LatencyReport {
        kind: model.kind,
        batch_size: batch.len(),
        seq_len: batch[0].len() / model.input_dim,
        input_dim: model.input_dim,
        hidden_dim: model.hidden_dim,
        repeats,
        per_sequence_ms: elapsed * 1000.0 / (passes * batch.len() as f64),
        total_s: elapsed / passes,
    })
}
