use rand_chacha::ChaCha8Rng;

use crate::decoder::EmbeddedPoint;
use crate::error::{check_len, Error, Result};
use crate::rng::open01;
use crate::types::words_for;

/// A `{-1, 0, +1}` hyperplane normal over `ℓ` coordinates.
///
/// Nonzero scaling is dropped since only signs of projections are used.
/// Alongside the position list the plane keeps packed positive and negative
/// masks, so projecting a packed codeword takes a handful of popcounts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseHyperplane {
    dim: usize,
    positions: Vec<u32>,
    negative: Vec<bool>,
    pos_mask: Vec<u64>,
    neg_mask: Vec<u64>,
    pos_count: i64,
    neg_count: i64,
}

impl SparseHyperplane {
    /// `positions` must be strictly increasing and below `dim`.
    pub fn new(dim: usize, positions: Vec<u32>, negative: Vec<bool>) -> Result<Self> {
        check_len(positions.len(), negative.len())?;
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("hyperplane positions not strictly increasing".into()));
        }
        if positions.last().is_some_and(|&p| p as usize >= dim) {
            return Err(Error::Format("hyperplane position out of range".into()));
        }
        let mut pos_mask = vec![0u64; words_for(dim)];
        let mut neg_mask = vec![0u64; words_for(dim)];
        for (&i, &neg) in positions.iter().zip(&negative) {
            let mask = if neg { &mut neg_mask } else { &mut pos_mask };
            mask[i as usize / 64] |= 1 << (i % 64);
        }
        let neg_count = negative.iter().filter(|&&b| b).count() as i64;
        Ok(SparseHyperplane {
            dim,
            pos_count: positions.len() as i64 - neg_count,
            neg_count,
            positions,
            negative,
            pos_mask,
            neg_mask,
        })
    }

    /// Each coordinate is `+1` w.p. `s/2`, `-1` w.p. `s/2`, else `0`.
    pub(crate) fn random(dim: usize, sparsity: f64, rng: &mut ChaCha8Rng) -> Self {
        let half = sparsity / 2.0;
        let mut positions = Vec::new();
        let mut negative = Vec::new();
        for i in 0..dim {
            let r = open01(rng);
            if r < sparsity {
                positions.push(i as u32);
                negative.push(r >= half);
            }
        }
        SparseHyperplane::new(dim, positions, negative).expect("positions are increasing")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn signs(&self) -> impl Iterator<Item = i8> + '_ {
        self.negative.iter().map(|&n| if n { -1 } else { 1 })
    }

    pub(crate) fn negative(&self) -> &[bool] {
        &self.negative
    }

    pub fn nnz(&self) -> usize {
        self.positions.len()
    }

    /// Projection of a dense vector, summed in position order.
    pub fn dot(&self, coords: &[f64]) -> f64 {
        self.positions
            .iter()
            .zip(&self.negative)
            .map(|(&i, &neg)| {
                let c = coords[i as usize];
                if neg {
                    -c
                } else {
                    c
                }
            })
            .sum()
    }

    /// Exact projection of the embedded codeword `2x - 1` given packed `x`.
    pub fn dot_packed(&self, x: &[u64]) -> i64 {
        let mut pos = 0u32;
        let mut neg = 0u32;
        for ((w, p), n) in x.iter().zip(&self.pos_mask).zip(&self.neg_mask) {
            pos += (w & p).count_ones();
            neg += (w & n).count_ones();
        }
        (2 * pos as i64 - self.pos_count) - (2 * neg as i64 - self.neg_count)
    }
}

/// Bit `b` of the key is set iff `⟨plane_b, v⟩ ≥ 0`.
pub fn hash_key(v: &EmbeddedPoint, planes: &[SparseHyperplane]) -> Result<u64> {
    let mut key = 0u64;
    for (b, plane) in planes.iter().enumerate() {
        check_len(plane.dim(), v.dim())?;
        if plane.dot(&v.coords) >= 0.0 {
            key |= 1 << b;
        }
    }
    Ok(key)
}

pub(crate) fn hash_packed(x: &[u64], planes: &[SparseHyperplane]) -> u64 {
    planes.iter().enumerate().fold(
        0u64,
        |key, (b, plane)| {
            if plane.dot_packed(x) >= 0 {
                key | (1 << b)
            } else {
                key
            }
        },
    )
}
