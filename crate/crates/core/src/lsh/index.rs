use std::collections::HashMap;

use rayon::prelude::*;

use super::hyperplane::{hash_packed, SparseHyperplane};
use super::probe::probe_masks;
use super::LshParams;
use crate::decoder::{embed_pirate, select, AccusationResult, DecodeMode, DecodeStats, EmbeddedPoint};
use crate::error::{check_len, domain, Error, Result};
use crate::rng::{domain as dom, Seed};
use crate::score::ScoreKernel;
use crate::types::{rank_order, BiasVector, Codebook, PirateCopy, ScoreFunctionKind, UserScore, DEFAULT_MEMORY_BUDGET};

/// Identity of the codebook an index was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexSource {
    pub n: usize,
    pub len: usize,
    pub checksum: u64,
}

impl IndexSource {
    pub fn of(codebook: &Codebook) -> Self {
        IndexSource {
            n: codebook.n(),
            len: codebook.len(),
            checksum: codebook.checksum(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HyperplaneIndex {
    pub(crate) params: LshParams,
    pub(crate) seed: Seed,
    pub(crate) planes: Vec<Vec<SparseHyperplane>>,
    pub(crate) tables: Vec<HashMap<u64, Vec<u32>>>,
    pub(crate) source: IndexSource,
}

impl HyperplaneIndex {
    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn source(&self) -> IndexSource {
        self.source
    }

    pub fn planes(&self, table: usize) -> &[SparseHyperplane] {
        &self.planes[table]
    }

    pub fn table(&self, table: usize) -> &HashMap<u64, Vec<u32>> {
        &self.tables[table]
    }

    /// Change the probe count of a built index; the tables are unaffected.
    pub fn set_probes(&mut self, probes: u64) -> Result<()> {
        let params = LshParams { probes, ..self.params };
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn verify(&self, codebook: &Codebook) -> Result<()> {
        let found = IndexSource::of(codebook);
        if found != self.source {
            return Err(Error::Integrity(format!(
                "index built for (n={}, len={}, checksum={:016x}), codebook is (n={}, len={}, checksum={:016x})",
                self.source.n, self.source.len, self.source.checksum, found.n, found.len, found.checksum
            )));
        }
        Ok(())
    }
}

/// Plane `b` of table `t` comes from sub-stream `(t << 6) | b`.
pub(crate) fn generate_planes(params: &LshParams, len: usize, seed: Seed) -> Vec<Vec<SparseHyperplane>> {
    (0..params.tables)
        .map(|t| {
            (0..params.hash_len)
                .map(|b| {
                    let mut rng = seed.stream(dom::PLANES, ((t as u64) << 6) | b as u64);
                    SparseHyperplane::random(len, params.sparsity, &mut rng)
                })
                .collect()
        })
        .collect()
}

pub fn build_index(codebook: &Codebook, params: &LshParams, seed: Seed) -> Result<HyperplaneIndex> {
    build_index_with_budget(codebook, params, seed, DEFAULT_MEMORY_BUDGET)
}

pub fn build_index_with_budget(
    codebook: &Codebook,
    params: &LshParams,
    seed: Seed,
    budget_bytes: u128,
) -> Result<HyperplaneIndex> {
    params.validate()?;
    if codebook.n() > u32::MAX as usize {
        return Err(domain("index supports at most 2^32 - 1 users"));
    }
    // one u32 pointer per user per table
    let requested = params.tables as u128 * codebook.n() as u128 * 4;
    if requested > budget_bytes {
        return Err(Error::Capacity {
            requested,
            budget: budget_bytes,
        });
    }
    let planes = generate_planes(params, codebook.len(), seed);
    let tables = planes
        .par_iter()
        .map(|table_planes| {
            let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
            for j in 0..codebook.n() {
                let key = hash_packed(codebook.row(j), table_planes);
                buckets.entry(key).or_default().push(j as u32);
            }
            buckets
        })
        .collect();
    Ok(HyperplaneIndex {
        params: *params,
        seed,
        planes,
        tables,
        source: IndexSource::of(codebook),
    })
}

/// Users whose scores were computed for one query, ranked.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    /// Descending score, ties by ascending user index.
    pub candidates: Vec<UserScore>,
    pub stats: DecodeStats,
}

impl CandidateSet {
    pub fn users(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().map(|c| c.user)
    }
}

fn candidate_users(index: &HyperplaneIndex, q: &EmbeddedPoint) -> Vec<usize> {
    let mut seen = vec![false; index.source.n];
    let mut users = Vec::new();
    for (planes, table) in index.planes.iter().zip(&index.tables) {
        let dots: Vec<f64> = planes.iter().map(|p| p.dot(&q.coords)).collect();
        let key = dots
            .iter()
            .enumerate()
            .fold(0u64, |k, (b, &d)| if d >= 0.0 { k | (1 << b) } else { k });
        let probes = if index.params.probes == 1 {
            vec![0]
        } else {
            let mags: Vec<f64> = dots.iter().map(|d| d.abs()).collect();
            probe_masks(&mags, index.params.probes)
        };
        for mask in probes {
            if let Some(bucket) = table.get(&(key ^ mask)) {
                for &u in bucket {
                    let u = u as usize;
                    if !seen[u] {
                        seen[u] = true;
                        users.push(u);
                    }
                }
            }
        }
    }
    users
}

/// Look up `q` in every table and score the colliding users exactly.
///
/// The pirate copy is recovered from the signs of `q`.
pub fn query(
    index: &HyperplaneIndex,
    q: &EmbeddedPoint,
    codebook: &Codebook,
    p: &BiasVector,
    kind: ScoreFunctionKind,
) -> Result<CandidateSet> {
    let y = PirateCopy::from_bits(&q.coords.iter().map(|&c| c > 0.0).collect::<Vec<_>>());
    query_inner(index, q, &y, codebook, p, kind)
}

/// [`query`] starting from the pirate copy itself.
pub fn query_copy(
    index: &HyperplaneIndex,
    y: &PirateCopy,
    codebook: &Codebook,
    p: &BiasVector,
    kind: ScoreFunctionKind,
) -> Result<CandidateSet> {
    let q = embed_pirate(y, p)?;
    query_inner(index, &q, y, codebook, p, kind)
}

fn query_inner(
    index: &HyperplaneIndex,
    q: &EmbeddedPoint,
    y: &PirateCopy,
    codebook: &Codebook,
    p: &BiasVector,
    kind: ScoreFunctionKind,
) -> Result<CandidateSet> {
    index.verify(codebook)?;
    check_len(index.source.len, q.dim())?;
    let kernel = ScoreKernel::new(y, p, kind)?;
    let users = candidate_users(index, q);
    let mut candidates: Vec<UserScore> = users
        .par_iter()
        .map(|&user| UserScore {
            user,
            score: kernel.score_user(codebook, user),
        })
        .collect();
    candidates.sort_by(rank_order);
    let scores = candidates.len();
    Ok(CandidateSet {
        candidates,
        stats: DecodeStats {
            scores_computed: scores,
            dot_products_total: index.params.hash_products() + scores,
        },
    })
}

pub fn decode_with_index(
    index: &HyperplaneIndex,
    codebook: &Codebook,
    y: &PirateCopy,
    p: &BiasVector,
    kind: ScoreFunctionKind,
    mode: DecodeMode,
) -> Result<AccusationResult> {
    if let DecodeMode::TopM(m) = mode {
        if m > codebook.n() {
            return Err(domain(format!("top-{m} requested from {} users", codebook.n())));
        }
    }
    let found = query_copy(index, y, codebook, p, kind)?;
    let (accused, threshold_used) = select(&found.candidates, mode);
    Ok(AccusationResult {
        accused,
        threshold_used,
        work: found.stats,
    })
}

/// Build an index for `codebook` and decode `y` through it.
pub fn decode_lsh(
    codebook: &Codebook,
    y: &PirateCopy,
    p: &BiasVector,
    params: &LshParams,
    kind: ScoreFunctionKind,
    mode: DecodeMode,
    seed: Seed,
) -> Result<AccusationResult> {
    let index = build_index(codebook, params, seed)?;
    decode_with_index(&index, codebook, y, p, kind, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{generate_codebook, sample_bias, uniform_half};
    use crate::decoder::embed_codeword;

    fn small(n: usize, len: usize, seed: u64) -> (Codebook, BiasVector) {
        let p = sample_bias(&uniform_half(), len, Seed(seed)).unwrap();
        (generate_codebook(n, &p, Seed(seed + 1)).unwrap(), p)
    }

    #[test]
    fn tables_partition_users() {
        let (cb, _) = small(500, 256, 1);
        let params = LshParams::new(7, 6, 0.5, 1).unwrap();
        let index = build_index(&cb, &params, Seed(2)).unwrap();
        for t in 0..params.tables {
            let mut all: Vec<u32> = index.table(t).values().flatten().copied().collect();
            assert_eq!(all.len(), 500);
            all.sort_unstable();
            assert!(all.iter().enumerate().all(|(i, &u)| u as usize == i));
        }
    }

    #[test]
    fn single_user_index() {
        let (cb, _) = small(1, 100, 3);
        let index = build_index(&cb, &LshParams::new(5, 10, 0.3, 1).unwrap(), Seed(0)).unwrap();
        for t in 0..5 {
            let table = index.table(t);
            assert_eq!(table.len(), 1);
            assert_eq!(table.values().next().unwrap(), &vec![0]);
        }
    }

    #[test]
    fn identical_codewords_share_buckets() {
        let row: Vec<bool> = (0..200).map(|i| i % 7 < 3).collect();
        let other: Vec<bool> = (0..200).map(|i| i % 5 == 0).collect();
        let cb = Codebook::from_rows(&[row.clone(), other, row]).unwrap();
        let index = build_index(&cb, &LshParams::new(20, 12, 0.3, 1).unwrap(), Seed(5)).unwrap();
        for t in 0..20 {
            let bucket = index.table(t).values().find(|b| b.contains(&0)).unwrap();
            assert!(bucket.contains(&2));
        }
    }

    #[test]
    fn own_codeword_always_found() {
        let (cb, p) = small(300, 128, 4);
        let index = build_index(&cb, &LshParams::new(10, 12, 0.3, 1).unwrap(), Seed(6)).unwrap();
        let y = cb.row_as_copy(17);
        let found = query_copy(&index, &y, &cb, &p, ScoreFunctionKind::Equivalent).unwrap();
        assert_eq!(found.candidates[0].user, 17);
        // and the dense-query path agrees
        let q = embed_codeword(cb.codeword(17));
        let again = query(&index, &q, &cb, &p, ScoreFunctionKind::Equivalent).unwrap();
        assert_eq!(again.candidates[0].user, 17);
        assert_eq!(found.stats.dot_products_total, 120 + found.stats.scores_computed);
    }

    #[test]
    fn mismatched_codebook_is_integrity_error() {
        let (cb, p) = small(50, 64, 7);
        let (other, _) = small(50, 64, 8);
        let index = build_index(&cb, &LshParams::new(2, 4, 0.5, 1).unwrap(), Seed(0)).unwrap();
        let y = other.row_as_copy(0);
        let err = query_copy(&index, &y, &other, &p, ScoreFunctionKind::Equivalent).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn capacity_budget() {
        let (cb, _) = small(1000, 64, 9);
        let params = LshParams::new(100, 8, 0.5, 1).unwrap();
        let err = build_index_with_budget(&cb, &params, Seed(0), 1000).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn infinite_threshold_reports_work() {
        let (cb, p) = small(200, 128, 10);
        let y = cb.row_as_copy(3);
        let params = LshParams::new(4, 6, 0.5, 1).unwrap();
        let r = decode_lsh(
            &cb,
            &y,
            &p,
            &params,
            ScoreFunctionKind::Equivalent,
            DecodeMode::Threshold(f64::INFINITY),
            Seed(1),
        )
        .unwrap();
        assert!(r.accused.is_empty());
        assert!(r.work.dot_products_total >= 24);
        assert!(r.work.scores_computed >= 1);
    }
}
