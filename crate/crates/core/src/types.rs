//! Bias vectors, packed codebooks and pirate copies.
//!
//! Bits are packed little-endian inside 64-bit words: bit `i` of a row lives
//! in word `i / 64` at position `i % 64`. Rows are stored back to back and
//! padding bits past `len` in the last word are always zero.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_len, domain, Error, Result};

/// Default ceiling on the bytes a single codebook or index may allocate.
pub const DEFAULT_MEMORY_BUDGET: u128 = 16 << 30;

pub fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
pub fn bit_at(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(bits.len())];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

fn padding_clean(words: &[u64], len: usize) -> bool {
    match words.last() {
        Some(&w) if !len.is_multiple_of(64) => w & !tail_mask(len) == 0,
        _ => true,
    }
}

/// Per-segment probabilities `p_i`, each strictly inside (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    probs: Vec<f64>,
}

impl BiasVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("bias vector must have length >= 1"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
            return Err(domain(format!("p[{i}] = {p} is outside (0, 1)")));
        }
        Ok(BiasVector { probs })
    }

    /// Constant bias vector, mostly for tests and the `p = 1/2` code.
    pub fn constant(p: f64, len: usize) -> Result<Self> {
        Self::new(vec![p; len])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Σ_i 1/(p_i(1-p_i))`, the squared norm of an embedded pirate copy.
    pub fn query_norm_squared(&self) -> f64 {
        self.probs.iter().map(|p| 1.0 / (p * (1.0 - p))).sum()
    }
}

/// A pirate copy `y ∈ {0,1}^ℓ`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PirateCopy {
    len: usize,
    words: Vec<u64>,
}

impl PirateCopy {
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        check_len(words_for(len), words.len())?;
        if !padding_clean(&words, len) {
            return Err(Error::Format("nonzero padding bits in pirate copy".into()));
        }
        Ok(PirateCopy { len, words })
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        PirateCopy {
            len: bits.len(),
            words: pack(bits),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        bit_at(&self.words, i)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.bit(i)).collect()
    }
}

impl fmt::Debug for PirateCopy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PirateCopy").field("len", &self.len).finish()
    }
}

/// `n × ℓ` bit matrix of user codewords, row-major and bit-packed.
#[derive(Clone)]
pub struct Codebook {
    n: usize,
    len: usize,
    words_per_row: usize,
    words: Vec<u64>,
    checksum: OnceLock<u64>,
}

impl Codebook {
    pub fn from_words(n: usize, len: usize, words: Vec<u64>) -> Result<Self> {
        if n == 0 || len == 0 {
            return Err(domain("codebook needs n >= 1 and len >= 1"));
        }
        let wpr = words_for(len);
        check_len(n * wpr, words.len())?;
        if words.chunks_exact(wpr).any(|row| !padding_clean(row, len)) {
            return Err(Error::Format("nonzero padding bits in codebook row".into()));
        }
        Ok(Codebook {
            n,
            len,
            words_per_row: wpr,
            words,
            checksum: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        let mut words = Vec::with_capacity(rows.len() * words_for(len));
        for row in rows {
            check_len(len, row.len())?;
            words.extend(pack(row));
        }
        Self::from_words(rows.len(), len, words)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.words[j * self.words_per_row..(j + 1) * self.words_per_row]
    }

    pub fn bit(&self, j: usize, i: usize) -> bool {
        bit_at(self.row(j), i)
    }

    pub fn row_bits(&self, j: usize) -> Vec<bool> {
        let row = self.row(j);
        (0..self.len).map(|i| bit_at(row, i)).collect()
    }

    /// A pirate copy holding exactly codeword `j`.
    pub fn row_as_copy(&self, j: usize) -> PirateCopy {
        PirateCopy {
            len: self.len,
            words: self.row(j).to_vec(),
        }
    }

    /// First 8 bytes (little-endian) of SHA-256 over `n`, `len` and the
    /// packed words. Computed once and cached.
    pub fn checksum(&self) -> u64 {
        *self.checksum.get_or_init(|| {
            let mut h = Sha256::new();
            h.update(b"TFPC-checksum");
            h.update((self.n as u64).to_le_bytes());
            h.update((self.len as u64).to_le_bytes());
            for w in &self.words {
                h.update(w.to_le_bytes());
            }
            let digest = h.finalize();
            u64::from_le_bytes(digest[..8].try_into().unwrap())
        })
    }
}

impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.len == other.len && self.words == other.words
    }
}

impl Eq for Codebook {}

impl fmt::Debug for Codebook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Codebook")
            .field("n", &self.n)
            .field("len", &self.len)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFunctionKind {
    /// The four-case symmetric score.
    Symmetric,
    /// `±1/√(p(1-p))`, equal to the embedded dot product.
    #[default]
    Equivalent,
}

impl std::str::FromStr for ScoreFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "sym" => Ok(ScoreFunctionKind::Symmetric),
            "equivalent" | "eq" => Ok(ScoreFunctionKind::Equivalent),
            _ => Err(Error::Lookup {
                kind: "score function",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserScore {
    pub user: usize,
    pub score: f64,
}

/// Descending by score, ties broken by the lower user index.
pub fn rank_order(a: &UserScore, b: &UserScore) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.user.cmp(&b.user))
}
