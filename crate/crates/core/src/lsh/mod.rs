//! Hyperplane locality-sensitive hashing over embedded codewords.
//!
//! Each of `t` tables hashes a codeword `v_j = 2x_j - 1` to the `k`-bit sign
//! pattern of its projections onto `k` sparse random hyperplanes. A query
//! hashes the embedded pirate copy the same way and computes exact scores
//! only for users sharing a bucket with it in some table. Buckets hold user
//! indices only.

mod hyperplane;
mod index;
mod persist;
mod probe;

use serde::{Deserialize, Serialize};

pub use hyperplane::{hash_key, SparseHyperplane};
pub use index::{
    build_index, build_index_with_budget, decode_lsh, decode_with_index, query, query_copy, CandidateSet,
    HyperplaneIndex, IndexSource,
};
pub use persist::{read_index, write_index, INDEX_MAGIC, INDEX_VERSION};
pub use probe::probe_masks;

use crate::error::{domain, Result};

/// Default fraction of nonzero hyperplane coordinates.
pub const DEFAULT_SPARSITY: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshParams {
    /// Number of hash tables `t`.
    pub tables: usize,
    /// Hash length `k` in bits.
    pub hash_len: u32,
    /// Expected fraction of nonzero hyperplane coordinates.
    pub sparsity: f64,
    /// Buckets visited per table, including the query's own.
    pub probes: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams {
            tables: 100,
            hash_len: 16,
            sparsity: DEFAULT_SPARSITY,
            probes: 1,
        }
    }
}

impl LshParams {
    pub fn new(tables: usize, hash_len: u32, sparsity: f64, probes: u64) -> Result<Self> {
        let p = LshParams {
            tables,
            hash_len,
            sparsity,
            probes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn bucket_count(&self) -> u64 {
        1u64 << self.hash_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables == 0 {
            return Err(domain("need at least one hash table"));
        }
        if !(1..=63).contains(&self.hash_len) {
            return Err(domain(format!("hash length {} not in [1, 63]", self.hash_len)));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(domain(format!("sparsity {} not in (0, 1]", self.sparsity)));
        }
        if self.probes == 0 || self.probes > self.bucket_count() {
            return Err(domain(format!(
                "probes {} not in [1, 2^{}]",
                self.probes, self.hash_len
            )));
        }
        Ok(())
    }

    /// Projections computed per query: `t·k`.
    pub fn hash_products(&self) -> usize {
        self.tables * self.hash_len as usize
    }
}
