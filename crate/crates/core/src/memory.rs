//! Peak activation memory of a straight-line tensor program.
//!
//! Ops run in the given order. A tensor is allocated when its op runs and
//! freed right after its last consumer; graph inputs are resident from the
//! start and graph outputs until the end. The peak is the largest total of
//! resident bytes observed while any op executes.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemOp {
    pub inputs: Vec<usize>,
    pub output: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemGraph {
    /// Size of every tensor, indexed by tensor id.
    pub tensor_bytes: Vec<u64>,
    pub inputs: Vec<usize>,
    pub ops: Vec<MemOp>,
    pub outputs: Vec<usize>,
}

impl MemGraph {
    /// Checks that ids are in range, each tensor has one producer, and ops
    /// only read tensors that already exist.
    pub fn validate(&self) -> Result<()> {
        let n = self.tensor_bytes.len();
        let mut ready = vec![false; n];
        let bad = |d: String| Err(Error::invalid("memory plan", d));
        for &t in &self.inputs {
            if t >= n || ready[t] {
                return bad(format!("graph input {t} out of range or repeated"));
            }
            ready[t] = true;
        }
        for (i, op) in self.ops.iter().enumerate() {
            if let Some(&t) = op.inputs.iter().find(|&&t| t >= n || !ready[t]) {
                return bad(format!("op {i} reads tensor {t} before it exists"));
            }
            if op.output >= n || ready[op.output] {
                return bad(format!("op {i} writes tensor {} twice or out of range", op.output));
            }
            ready[op.output] = true;
        }
        if let Some(&t) = self.outputs.iter().find(|&&t| t >= n || !ready[t]) {
            return bad(format!("graph output {t} is never produced"));
        }
        Ok(())
    }
}

/// Peak resident bytes under last-use freeing.
pub fn peak_live_bytes(g: &MemGraph) -> Result<u64> {
    g.validate()?;
    let steps = g.ops.len();
    if steps == 0 {
        return Ok(g.inputs.iter().map(|&t| g.tensor_bytes[t]).sum());
    }
    let n = g.tensor_bytes.len();
    let mut birth = vec![usize::MAX; n];
    let mut death = vec![0usize; n];
    for &t in &g.inputs {
        birth[t] = 0;
    }
    for (i, op) in g.ops.iter().enumerate() {
        birth[op.output] = i;
        death[op.output] = i;
    }
    for (i, op) in g.ops.iter().enumerate() {
        for &t in &op.inputs {
            death[t] = death[t].max(i);
        }
    }
    for &t in &g.outputs {
        death[t] = steps - 1;
    }
    // Difference array over op steps.
    let mut delta = vec![0i128; steps + 1];
    for t in 0..n {
        if birth[t] == usize::MAX {
            continue;
        }
        delta[birth[t]] += g.tensor_bytes[t] as i128;
        delta[death[t] + 1] -= g.tensor_bytes[t] as i128;
    }
    let mut live = 0i128;
    let mut peak = 0i128;
    for d in &delta[..steps] {
        live += d;
        peak = peak.max(live);
    }
    Ok(peak as u64)
}
