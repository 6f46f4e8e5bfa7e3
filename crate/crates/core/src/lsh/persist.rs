//! `TFLI` index files.
//!
//! ```text
//! "TFLI" | version u32 | tables u64 | hash_len u32 | len u64 | n u64
//!        | sparsity f64 | probes u64 | seed u64 | codebook checksum u64
//! per table:
//!   per plane: nnz u64, then nnz × (position u32, sign u8: 0 = +1, 1 = -1)
//!   buckets u64, then per bucket (ascending key): key u64, size u64, size × user u32
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};

use super::hyperplane::SparseHyperplane;
use super::index::{HyperplaneIndex, IndexSource};
use super::LshParams;
use crate::error::{Error, Result};
use crate::io::{
    expect_header, get_f64, get_u32, get_u64, get_u8, get_usize, put_f64, put_u32, put_u64, FORMAT_VERSION,
};
use crate::rng::Seed;
use crate::types::Codebook;

pub const INDEX_MAGIC: &[u8; 4] = b"TFLI";
pub const INDEX_VERSION: u32 = FORMAT_VERSION;

pub fn write_index(w: &mut impl Write, index: &HyperplaneIndex) -> Result<()> {
    let p = &index.params;
    w.write_all(INDEX_MAGIC)?;
    put_u32(w, INDEX_VERSION)?;
    put_u64(w, p.tables as u64)?;
    put_u32(w, p.hash_len)?;
    put_u64(w, index.source.len as u64)?;
    put_u64(w, index.source.n as u64)?;
    put_f64(w, p.sparsity)?;
    put_u64(w, p.probes)?;
    put_u64(w, index.seed.0)?;
    put_u64(w, index.source.checksum)?;
    for (planes, table) in index.planes.iter().zip(&index.tables) {
        for plane in planes {
            put_u64(w, plane.nnz() as u64)?;
            for (&pos, &neg) in plane.positions().iter().zip(plane.negative()) {
                put_u32(w, pos)?;
                w.write_all(&[neg as u8])?;
            }
        }
        let mut keys: Vec<u64> = table.keys().copied().collect();
        keys.sort_unstable();
        put_u64(w, keys.len() as u64)?;
        for key in keys {
            let bucket = &table[&key];
            put_u64(w, key)?;
            put_u64(w, bucket.len() as u64)?;
            for &u in bucket {
                put_u32(w, u)?;
            }
        }
    }
    Ok(())
}

/// Read an index and check it against `codebook`; a checksum mismatch is an
/// integrity error.
pub fn read_index(r: &mut impl Read, codebook: &Codebook) -> Result<HyperplaneIndex> {
    expect_header(r, INDEX_MAGIC)?;
    let tables = get_usize(r)?;
    let hash_len = get_u32(r)?;
    let len = get_usize(r)?;
    let n = get_usize(r)?;
    let sparsity = get_f64(r)?;
    let probes = get_u64(r)?;
    let seed = Seed(get_u64(r)?);
    let checksum = get_u64(r)?;
    let params = LshParams {
        tables,
        hash_len,
        sparsity,
        probes,
    };
    params
        .validate()
        .map_err(|e| Error::Format(format!("bad index parameters: {e}")))?;
    let source = IndexSource { n, len, checksum };
    let expected = IndexSource::of(codebook);
    if source != expected {
        return Err(Error::Integrity(format!(
            "index checksum {checksum:016x} (n={n}, len={len}) does not match codebook {:016x} (n={}, len={})",
            expected.checksum, expected.n, expected.len
        )));
    }

    let mut all_planes = Vec::with_capacity(tables);
    let mut all_tables = Vec::with_capacity(tables);
    for _ in 0..tables {
        let mut planes = Vec::with_capacity(hash_len as usize);
        for _ in 0..hash_len {
            let nnz = get_usize(r)?;
            if nnz > len {
                return Err(Error::Format("hyperplane has more nonzeros than dimensions".into()));
            }
            let mut positions = Vec::with_capacity(nnz);
            let mut negative = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                positions.push(get_u32(r)?);
                negative.push(match get_u8(r)? {
                    0 => false,
                    1 => true,
                    s => return Err(Error::Format(format!("bad sign byte {s}"))),
                });
            }
            planes.push(SparseHyperplane::new(len, positions, negative)?);
        }
        let buckets = get_usize(r)?;
        let mut table = HashMap::with_capacity(buckets.min(n));
        let mut stored = 0usize;
        for _ in 0..buckets {
            let key = get_u64(r)?;
            let size = get_usize(r)?;
            stored += size;
            if stored > n {
                return Err(Error::Format("bucket sizes exceed user count".into()));
            }
            let users = (0..size)
                .map(|_| {
                    let u = get_u32(r)?;
                    if u as usize >= n {
                        Err(Error::Format(format!("user {u} out of range")))
                    } else {
                        Ok(u)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            table.insert(key, users);
        }
        if stored != n {
            return Err(Error::Format(format!("table holds {stored} users, expected {n}")));
        }
        all_planes.push(planes);
        all_tables.push(table);
    }
    Ok(HyperplaneIndex {
        params,
        seed,
        planes: all_planes,
        tables: all_tables,
        source,
    })
}
