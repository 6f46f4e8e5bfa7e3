use rayon::prelude::*;

use super::moments::ScoreMoments;
use crate::attack::{forge, AttackStrategy};
use crate::codegen::{generate_codebook, sample_bias, BiasDistribution};
use crate::error::{domain, Result};
use crate::rng::{domain as dom, Seed};
use crate::score::ScoreKernel;
use crate::types::ScoreFunctionKind;

/// Empirical equivalent-score moments from simulated codes.
///
/// Each trial draws a fresh bias vector and `c + 1` codewords, lets users
/// `0..c` forge a copy with `strategy`, and records the score of colluder
/// `0` and of the innocent user `c`. Means and variances are divided by `ℓ`.
pub fn monte_carlo_moments(
    dist: &BiasDistribution,
    strategy: &AttackStrategy,
    len: usize,
    trials: usize,
    seed: Seed,
) -> Result<ScoreMoments> {
    if trials == 0 {
        return Err(domain("need at least one trial"));
    }
    let c = strategy.c();
    let colluders: Vec<usize> = (0..c).collect();
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = seed.child(dom::TRIAL, t as u64);
            let p = sample_bias(dist, len, s)?;
            let cb = generate_codebook(c + 1, &p, s)?;
            let y = forge(&cb, &colluders, strategy, s)?;
            let kernel = ScoreKernel::new(&y, &p, ScoreFunctionKind::Equivalent)?;
            let qnorm = p.query_norm_squared().sqrt();
            Ok((kernel.score_user(&cb, c), kernel.score_user(&cb, 0), qnorm))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials as f64;
    let len = len as f64;
    let mean = |f: &dyn Fn(&(f64, f64, f64)) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let m0 = mean(&|s| s.0);
    let m1 = mean(&|s| s.1);
    let qnorm = mean(&|s| s.2) / len.sqrt();
    let (var0, var1) = if trials > 1 {
        let v = |m: f64, f: &dyn Fn(&(f64, f64, f64)) -> f64| {
            samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (n - 1.0)
        };
        (Some(v(m0, &|s| s.0)), Some(v(m1, &|s| s.1)))
    } else {
        (None, None)
    };
    Ok(ScoreMoments {
        mu0_per_seg: m0 / len,
        mu1_per_seg: m1 / len,
        qnorm_per_sqrtseg: qnorm,
        var0: var0.map(|v| v / len),
        var1: var1.map(|v| v / len),
        se0: var0.map(|v| (v / n).sqrt() / len),
        se1: var1.map(|v| (v / n).sqrt() / len),
    })
}
