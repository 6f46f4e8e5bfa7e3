//! Per-segment score functions and their accumulation over a codeword.

use crate::error::{check_len, domain, Result};
use crate::types::{bit_at, BiasVector, Codebook, PirateCopy, ScoreFunctionKind};

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("bias {p} is outside (0, 1)")))
    }
}

/// The symmetric four-case score.
pub fn score_symmetric(x: bool, y: bool, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(symmetric_unchecked(x, y, p))
}

/// `+1/√(p(1-p))` on a match, `-1/√(p(1-p))` otherwise.
pub fn score_equivalent(x: bool, y: bool, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(equivalent_unchecked(x, y, p))
}

pub fn score(kind: ScoreFunctionKind, x: bool, y: bool, p: f64) -> Result<f64> {
    match kind {
        ScoreFunctionKind::Symmetric => score_symmetric(x, y, p),
        ScoreFunctionKind::Equivalent => score_equivalent(x, y, p),
    }
}

#[inline]
fn symmetric_unchecked(x: bool, y: bool, p: f64) -> f64 {
    match (x, y) {
        (false, false) => (p / (1.0 - p)).sqrt(),
        (true, false) => -((1.0 - p) / p).sqrt(),
        (false, true) => -(p / (1.0 - p)).sqrt(),
        (true, true) => ((1.0 - p) / p).sqrt(),
    }
}

#[inline]
fn equivalent_unchecked(x: bool, y: bool, p: f64) -> f64 {
    let w = 1.0 / (p * (1.0 - p)).sqrt();
    if x == y {
        w
    } else {
        -w
    }
}

#[inline]
fn unchecked(kind: ScoreFunctionKind, x: bool, y: bool, p: f64) -> f64 {
    match kind {
        ScoreFunctionKind::Symmetric => symmetric_unchecked(x, y, p),
        ScoreFunctionKind::Equivalent => equivalent_unchecked(x, y, p),
    }
}

/// Borrowed view of one packed codeword.
#[derive(Clone, Copy, Debug)]
pub struct CodewordRef<'a> {
    pub len: usize,
    pub words: &'a [u64],
}

impl<'a> CodewordRef<'a> {
    pub fn bit(&self, i: usize) -> bool {
        bit_at(self.words, i)
    }
}

impl Codebook {
    pub fn codeword(&self, j: usize) -> CodewordRef<'_> {
        CodewordRef {
            len: self.len(),
            words: self.row(j),
        }
    }
}

impl PirateCopy {
    pub fn as_codeword(&self) -> CodewordRef<'_> {
        CodewordRef {
            len: self.len(),
            words: self.words(),
        }
    }
}

/// `Σ_i g(x_i, y_i, p_i)` summed in segment order in `f64`.
pub fn accumulate_score(
    codeword: CodewordRef<'_>,
    y: &PirateCopy,
    p: &BiasVector,
    kind: ScoreFunctionKind,
) -> Result<f64> {
    check_len(codeword.len, y.len())?;
    check_len(codeword.len, p.len())?;
    let mut total = 0.0;
    for (i, &pi) in p.probs().iter().enumerate() {
        total += unchecked(kind, codeword.bit(i), y.bit(i), pi);
    }
    Ok(total)
}

/// Per-segment score table for a fixed `(y, p, kind)`.
///
/// Scoring a packed row reads one of two precomputed values per segment and
/// adds them in segment order, so the result is bit-identical to
/// [`accumulate_score`].
#[derive(Clone, Debug)]
pub struct ScoreKernel {
    kind: ScoreFunctionKind,
    // [score if x = 0, score if x = 1]
    table: Vec<[f64; 2]>,
}

impl ScoreKernel {
    pub fn new(y: &PirateCopy, p: &BiasVector, kind: ScoreFunctionKind) -> Result<Self> {
        check_len(p.len(), y.len())?;
        let table = p
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                let yi = y.bit(i);
                [unchecked(kind, false, yi, pi), unchecked(kind, true, yi, pi)]
            })
            .collect();
        Ok(ScoreKernel { kind, table })
    }

    pub fn kind(&self) -> ScoreFunctionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn score_words(&self, words: &[u64]) -> f64 {
        let mut total = 0.0;
        for (chunk, &w) in self.table.chunks(64).zip(words) {
            for (b, pair) in chunk.iter().enumerate() {
                total += pair[((w >> b) & 1) as usize];
            }
        }
        total
    }

    pub fn score_user(&self, codebook: &Codebook, j: usize) -> f64 {
        self.score_words(codebook.row(j))
    }
}
