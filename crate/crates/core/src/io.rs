//! Binary codebook (`TFPC`) and pirate-copy (`TFPY`) files.
//!
//! All integers and reals are little-endian.
//!
//! ```text
//! TFPC: "TFPC" | version u32 | n u64 | len u64 | len × f64 bias | n × ⌈len/64⌉ × u64
//! TFPY: "TFPY" | version u32 | len u64 | ⌈len/64⌉ × u64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{words_for, BiasVector, Codebook, PirateCopy};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"TFPC";
pub const PIRATE_MAGIC: &[u8; 4] = b"TFPY";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

pub(crate) fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

pub(crate) fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("unexpected end of file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub(crate) fn get_u8(r: &mut impl Read) -> Result<u8> {
    Ok(take::<1>(r)?[0])
}

pub(crate) fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

pub(crate) fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

pub(crate) fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

pub(crate) fn get_usize(r: &mut impl Read) -> Result<usize> {
    usize::try_from(get_u64(r)?).map_err(|_| Error::Format("size field overflows usize".into()))
}

pub(crate) fn expect_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let found: [u8; 4] = take(r)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    Ok(())
}

fn get_words(r: &mut impl Read, count: usize) -> Result<Vec<u64>> {
    (0..count).map(|_| get_u64(r)).collect()
}

pub fn write_codebook(w: &mut impl Write, codebook: &Codebook, bias: &BiasVector) -> Result<()> {
    crate::error::check_len(codebook.len(), bias.len())?;
    w.write_all(CODEBOOK_MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u64(w, codebook.n() as u64)?;
    put_u64(w, codebook.len() as u64)?;
    for &p in bias.probs() {
        put_f64(w, p)?;
    }
    for &word in codebook.words() {
        put_u64(w, word)?;
    }
    Ok(())
}

pub fn read_codebook(r: &mut impl Read) -> Result<(Codebook, BiasVector)> {
    expect_header(r, CODEBOOK_MAGIC)?;
    let n = get_usize(r)?;
    let len = get_usize(r)?;
    if n == 0 || len == 0 {
        return Err(Error::Format("empty codebook".into()));
    }
    let probs = (0..len).map(|_| get_f64(r)).collect::<Result<Vec<_>>>()?;
    let bias = BiasVector::new(probs)?;
    let total = n
        .checked_mul(words_for(len))
        .ok_or_else(|| Error::Format("codebook size overflows".into()))?;
    let words = get_words(r, total)?;
    Ok((Codebook::from_words(n, len, words)?, bias))
}

pub fn write_pirate(w: &mut impl Write, y: &PirateCopy) -> Result<()> {
    w.write_all(PIRATE_MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u64(w, y.len() as u64)?;
    for &word in y.words() {
        put_u64(w, word)?;
    }
    Ok(())
}

pub fn read_pirate(r: &mut impl Read) -> Result<PirateCopy> {
    expect_header(r, PIRATE_MAGIC)?;
    let len = get_usize(r)?;
    let words = get_words(r, words_for(len))?;
    PirateCopy::from_words(len, words)
}

pub fn save_codebook(path: &Path, codebook: &Codebook, bias: &BiasVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_codebook(&mut w, codebook, bias)?;
    Ok(w.flush()?)
}

pub fn load_codebook(path: &Path) -> Result<(Codebook, BiasVector)> {
    read_codebook(&mut BufReader::new(File::open(path)?))
}

pub fn save_pirate(path: &Path, y: &PirateCopy) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pirate(&mut w, y)?;
    Ok(w.flush()?)
}

pub fn load_pirate(path: &Path) -> Result<PirateCopy> {
    read_pirate(&mut BufReader::new(File::open(path)?))
}
