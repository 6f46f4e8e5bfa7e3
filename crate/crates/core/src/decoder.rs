//! Spherical embedding of codewords and pirate copies, and the baseline
//! linear-scan decoder.
//!
//! With `v_j = 2x_j - 1` and `q_i = (2y_i - 1)/√(p_i(1-p_i))`, the
//! equivalent score of user `j` is exactly `⟨v_j, q⟩`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_len, domain, Result};
use crate::score::{CodewordRef, ScoreKernel};
use crate::types::{rank_order, BiasVector, Codebook, PirateCopy, ScoreFunctionKind, UserScore};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPoint {
    pub coords: Vec<f64>,
    pub norm: f64,
}

impl EmbeddedPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        EmbeddedPoint { coords, norm }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, other: &EmbeddedPoint) -> Result<f64> {
        check_len(self.dim(), other.dim())?;
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, lambda: f64) -> EmbeddedPoint {
        EmbeddedPoint::new(self.coords.iter().map(|c| c * lambda).collect())
    }
}

pub fn embed_codeword(x: CodewordRef<'_>) -> EmbeddedPoint {
    let coords = (0..x.len).map(|i| if x.bit(i) { 1.0 } else { -1.0 }).collect();
    EmbeddedPoint {
        coords,
        norm: (x.len as f64).sqrt(),
    }
}

pub fn embed_pirate(y: &PirateCopy, p: &BiasVector) -> Result<EmbeddedPoint> {
    check_len(p.len(), y.len())?;
    let coords = p
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let w = 1.0 / (pi * (1.0 - pi)).sqrt();
            if y.bit(i) {
                w
            } else {
                -w
            }
        })
        .collect();
    Ok(EmbeddedPoint {
        coords,
        norm: p.query_norm_squared().sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Accuse every user with `s_j > z`.
    Threshold(f64),
    /// Accuse the `m` highest scores.
    TopM(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    /// Exact user scores evaluated.
    pub scores_computed: usize,
    /// Length-ℓ operations in total: hash projections plus scores.
    pub dot_products_total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccusationResult {
    /// Sorted by descending score, ties by ascending user index.
    pub accused: Vec<UserScore>,
    pub threshold_used: Option<f64>,
    pub work: DecodeStats,
}

/// Apply a decision rule to an already ranked list of scored users.
pub(crate) fn select(ranked: &[UserScore], mode: DecodeMode) -> (Vec<UserScore>, Option<f64>) {
    match mode {
        DecodeMode::Threshold(z) => (ranked.iter().take_while(|s| s.score > z).copied().collect(), Some(z)),
        DecodeMode::TopM(m) => (ranked.iter().take(m).copied().collect(), None),
    }
}

/// Every user's score, in user order.
pub fn all_scores(codebook: &Codebook, kernel: &ScoreKernel) -> Result<Vec<f64>> {
    check_len(codebook.len(), kernel.len())?;
    Ok(codebook
        .words()
        .par_chunks(codebook.words_per_row())
        .map(|row| kernel.score_words(row))
        .collect())
}

pub fn linear_decode(
    codebook: &Codebook,
    y: &PirateCopy,
    p: &BiasVector,
    kind: ScoreFunctionKind,
    mode: DecodeMode,
) -> Result<AccusationResult> {
    check_len(codebook.len(), y.len())?;
    check_len(codebook.len(), p.len())?;
    if let DecodeMode::TopM(m) = mode {
        if m > codebook.n() {
            return Err(domain(format!("top-{m} requested from {} users", codebook.n())));
        }
    }
    let kernel = ScoreKernel::new(y, p, kind)?;
    let mut ranked: Vec<UserScore> = all_scores(codebook, &kernel)?
        .into_iter()
        .enumerate()
        .map(|(user, score)| UserScore { user, score })
        .collect();
    ranked.sort_by(rank_order);
    let (accused, threshold_used) = select(&ranked, mode);
    let n = codebook.n();
    Ok(AccusationResult {
        accused,
        threshold_used,
        work: DecodeStats {
            scores_computed: n,
            dot_products_total: n,
        },
    })
}

/// Threshold giving about `target_fp` falsely accused innocents among `n`
/// users under a normal approximation of innocent scores.
///
/// For the symmetric score an innocent codeword is independent of `y` given
/// `p`, so its score has mean 0 and variance `ℓ` for any attack. For the
/// equivalent score the moments are taken under the interleaving attack
/// (`E[y_i] = p_i`): per segment the mean is `(1-2p)^2/√(p(1-p))` and the
/// second moment `1/(p(1-p))`. At `p ≡ 1/2` this is mean 0 and variance
/// `‖q‖²`. Other attacks need Monte-Carlo calibration.
pub fn suggest_threshold(p: &BiasVector, kind: ScoreFunctionKind, target_fp: f64, n: usize) -> Result<f64> {
    let tail = target_fp / n as f64;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(domain(format!(
            "target false positives {target_fp} must lie in (0, n = {n})"
        )));
    }
    let (mean, var) = match kind {
        ScoreFunctionKind::Symmetric => (0.0, p.len() as f64),
        ScoreFunctionKind::Equivalent => p.probs().iter().fold((0.0, 0.0), |(m, v), &pi| {
            let pq = pi * (1.0 - pi);
            let mi = (1.0 - 2.0 * pi).powi(2) / pq.sqrt();
            (m + mi, v + 1.0 / pq - mi * mi)
        }),
    };
    let quantile = Normal::standard().inverse_cdf(1.0 - tail);
    Ok(mean + var.sqrt() * quantile)
}
