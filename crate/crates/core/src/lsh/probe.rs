//! Query-directed probe order over bucket keys.
//!
//! Given the per-bit projection magnitudes `|⟨plane_b, q⟩|`, the sequence is:
//! the query's own key, then every single-bit flip in ascending magnitude,
//! then the remaining multi-bit flips in ascending total magnitude. The
//! first `k + 1` probes are exactly the single-bit scheme; continuing past
//! them visits all `2^k` keys, so `probes = 2^k` is an exhaustive scan.
//! Ties are broken by bit index.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, PartialEq)]
struct Pending {
    cost: f64,
    // subset of sorted positions as a bitmask over ranks
    ranks: u64,
    last: u32,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.ranks.cmp(&other.ranks))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The first `count` flip masks (the first is always `0`).
pub fn probe_masks(magnitudes: &[f64], count: u64) -> Vec<u64> {
    let k = magnitudes.len();
    let total = if k >= 64 { u64::MAX } else { 1u64 << k };
    let count = count.min(total);
    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    if count == 0 {
        return out;
    }
    out.push(0);

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]).then(a.cmp(&b)));
    let weight: Vec<f64> = order.iter().map(|&b| magnitudes[b]).collect();
    let to_mask = |ranks: u64| {
        let mut mask = 0u64;
        let mut r = ranks;
        while r != 0 {
            let i = r.trailing_zeros() as usize;
            mask |= 1 << order[i];
            r &= r - 1;
        }
        mask
    };

    for &b in order.iter().take((count - 1) as usize) {
        out.push(1 << b);
    }
    if (out.len() as u64) >= count {
        return out;
    }

    // Best-first enumeration of subsets of the sorted ranks by total weight:
    // from {.., a} branch to {.., a+1} (shift) and {.., a, a+1} (extend).
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Pending {
        cost: weight[0],
        ranks: 1,
        last: 0,
    }));
    while let Some(Reverse(cur)) = heap.pop() {
        if cur.ranks.count_ones() > 1 {
            out.push(to_mask(cur.ranks));
            if out.len() as u64 >= count {
                break;
            }
        }
        let next = cur.last as usize + 1;
        if next < k {
            heap.push(Reverse(Pending {
                cost: cur.cost - weight[cur.last as usize] + weight[next],
                ranks: (cur.ranks & !(1 << cur.last)) | (1 << next),
                last: next as u32,
            }));
            heap.push(Reverse(Pending {
                cost: cur.cost + weight[next],
                ranks: cur.ranks | (1 << next),
                last: next as u32,
            }));
        }
    }
    out
}
