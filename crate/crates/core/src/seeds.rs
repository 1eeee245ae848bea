//! Deterministic per-task seeds derived from one master seed.
//!
//! A task label is a pair `(β, replica)`. Its seed is
//!
//! ```text
//! base = splitmix64(splitmix64(master ^ SALT) ^ splitmix64(bits(|β|)) ^ splitmix64(replica ^ REPLICA_SALT))
//! seed = (base & !MIRROR_BIT) | (MIRROR_BIT if β < 0)
//! ```
//!
//! so `(β, r)` and `(-β, r)` share the same 63 low bits and differ only in
//! [`MIRROR_BIT`]. [`crate::env::sample_environment`] reads that bit and
//! negates the whole path, giving exact path mirrors `W ↦ -W`.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Seeds carrying this bit produce the mirror image `-W` of the path
/// generated from the remaining bits.
pub const MIRROR_BIT: u64 = 1 << 63;

const SALT: u64 = 0x6a09_e667_f3bc_c909;
const REPLICA_SALT: u64 = 0xbb67_ae85_84ca_a73b;

/// The splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a seed with further words, order-sensitively.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(seed ^ SALT), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// One `(β, replica)` task label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskLabel {
    pub beta: f64,
    pub replica: u64,
}

impl TaskLabel {
    pub fn new(beta: f64, replica: u64) -> Self {
        TaskLabel { beta, replica }
    }

    fn key(&self) -> (u64, u64) {
        // -0.0 and 0.0 are the same label.
        let beta = if self.beta == 0.0 { 0.0 } else { self.beta };
        (beta.to_bits(), self.replica)
    }
}

/// Seed for a single label; see the module docs for the formula.
pub fn task_seed(master_seed: u64, label: TaskLabel) -> u64 {
    let magnitude = label.beta.abs();
    let base = splitmix64(
        splitmix64(master_seed ^ SALT) ^ splitmix64(magnitude.to_bits()) ^ splitmix64(label.replica ^ REPLICA_SALT),
    );
    let sign = if label.beta < 0.0 { MIRROR_BIT } else { 0 };
    (base & !MIRROR_BIT) | sign
}

/// Seeds for every label, in label order. Duplicate labels are rejected.
pub fn seed_schedule(master_seed: u64, labels: &[TaskLabel]) -> Result<Vec<u64>> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !label.beta.is_finite() {
            return Err(Error::param(format!("task label has non-finite beta {}", label.beta)));
        }
        if !seen.insert(label.key()) {
            return Err(Error::param(format!(
                "duplicate task label (beta = {}, replica = {})",
                label.beta, label.replica
            )));
        }
    }
    Ok(labels.iter().map(|&l| task_seed(master_seed, l)).collect())
}
