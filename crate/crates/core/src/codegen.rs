//! Bias distributions and codebook generation.

use std::f64::consts::PI;
use std::fmt;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{bernoulli_threshold, domain as dom, open01, Seed};
use crate::types::{words_for, BiasVector, Codebook, DEFAULT_MEMORY_BUDGET};

/// Default proportionality constant of [`default_cutoff`].
pub const DEFAULT_CUTOFF_KAPPA: f64 = 0.5;

const MAX_CUTOFF: f64 = 0.49;

/// Distribution of the per-segment bias `p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BiasDistribution {
    /// Arcsine law restricted to `[δ, 1-δ]`.
    ArcsineTruncated { delta: f64 },
    /// Finite support, `(p, weight)` pairs.
    Discrete { support: Vec<(f64, f64)> },
}

impl BiasDistribution {
    pub fn arcsine(delta: f64) -> Result<Self> {
        let d = BiasDistribution::ArcsineTruncated { delta };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(support: Vec<(f64, f64)>) -> Result<Self> {
        let d = BiasDistribution::Discrete { support };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BiasDistribution::ArcsineTruncated { delta } => {
                if !(*delta >= 0.0 && *delta < 0.5) {
                    return Err(domain(format!("arcsine cutoff {delta} not in [0, 1/2)")));
                }
            }
            BiasDistribution::Discrete { support } => {
                if support.is_empty() {
                    return Err(domain("discrete distribution has empty support"));
                }
                for &(p, w) in support {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(domain(format!("support point {p} not in (0, 1)")));
                    }
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(domain(format!("weight {w} must be positive")));
                    }
                }
                let total: f64 = support.iter().map(|s| s.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(domain(format!("weights sum to {total}, expected 1")));
                }
            }
        }
        Ok(())
    }

    /// Parse a distribution spec.
    ///
    /// Accepted forms: `half`, `nuida-c3`, `arcsine` (cutoff from
    /// [`default_cutoff`] for `c` colluders), `arcsine:<delta>`, and
    /// `discrete:<p>:<w>,<p>:<w>,...`.
    pub fn parse(spec: &str, c: usize) -> Result<Self> {
        let spec = spec.trim();
        let lookup = || Error::Lookup {
            kind: "bias distribution",
            name: spec.to_string(),
        };
        match spec {
            "half" | "uniform-half" => return Ok(uniform_half()),
            "nuida-c3" => return Ok(nuida_c3()),
            "arcsine" => return BiasDistribution::arcsine(default_cutoff(c.max(1), DEFAULT_CUTOFF_KAPPA)),
            _ => {}
        }
        let (head, rest) = spec.split_once(':').ok_or_else(lookup)?;
        match head {
            "arcsine" => {
                let delta = rest.parse::<f64>().map_err(|_| lookup())?;
                BiasDistribution::arcsine(delta)
            }
            "discrete" => {
                let support = rest
                    .split(',')
                    .map(|pair| {
                        let (p, w) = pair.split_once(':').ok_or_else(lookup)?;
                        let p = p.trim().parse::<f64>().map_err(|_| lookup())?;
                        let w = w.trim().parse::<f64>().map_err(|_| lookup())?;
                        Ok((p, w))
                    })
                    .collect::<Result<Vec<_>>>()?;
                BiasDistribution::discrete(support)
            }
            _ => Err(lookup()),
        }
    }
}

impl fmt::Display for BiasDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BiasDistribution::ArcsineTruncated { delta } => write!(f, "arcsine:{delta}"),
            BiasDistribution::Discrete { support } => {
                write!(f, "discrete:")?;
                for (i, (p, w)) in support.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}:{w}")?;
                }
                Ok(())
            }
        }
    }
}

/// Optimal two-point distribution for three colluders: `p = 1/2 ± 0.289`.
pub fn nuida_c3() -> BiasDistribution {
    BiasDistribution::Discrete {
        support: vec![(0.211, 0.5), (0.789, 0.5)],
    }
}

/// Point mass at `p = 1/2` (uniformly random codes).
pub fn uniform_half() -> BiasDistribution {
    BiasDistribution::Discrete {
        support: vec![(0.5, 1.0)],
    }
}

/// `κ·c^{-4/3}` clamped to `[0, 0.49]`.
pub fn default_cutoff(c: usize, kappa: f64) -> f64 {
    let c = c.max(1) as f64;
    (kappa * c.powf(-4.0 / 3.0)).clamp(0.0, MAX_CUTOFF)
}

/// Arcsine CDF `F(p) = (2/π) arcsin √p`.
pub fn arcsine_cdf(p: f64) -> f64 {
    2.0 / PI * p.clamp(0.0, 1.0).sqrt().asin()
}

/// Rescales `u ∈ (0,1)` onto `[F(δ), F(1-δ)]`.
pub fn arcsine_rescale(u: f64, delta: f64) -> f64 {
    let lo = arcsine_cdf(delta);
    let hi = arcsine_cdf(1.0 - delta);
    lo + u * (hi - lo)
}

/// Inverse-transform sample of the truncated arcsine law for a uniform `u`.
pub fn arcsine_inverse(u: f64, delta: f64) -> f64 {
    let s = (PI * arcsine_rescale(u, delta) / 2.0).sin();
    // keep the result strictly inside (0, 1) at f64 resolution
    (s * s).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Draw `len` i.i.d. biases. Deterministic in `(dist, len, seed)`.
pub fn sample_bias(dist: &BiasDistribution, len: usize, seed: Seed) -> Result<BiasVector> {
    dist.validate()?;
    if len == 0 {
        return Err(domain("code length must be >= 1"));
    }
    let mut rng = seed.stream(dom::BIAS, 0);
    let probs = match dist {
        BiasDistribution::ArcsineTruncated { delta } => {
            (0..len).map(|_| arcsine_inverse(open01(&mut rng), *delta)).collect()
        }
        BiasDistribution::Discrete { support } => {
            let mut cumulative = Vec::with_capacity(support.len());
            let mut acc = 0.0;
            for &(_, w) in support {
                acc += w;
                cumulative.push(acc);
            }
            (0..len)
                .map(|_| {
                    let u = open01(&mut rng) * acc;
                    let k = cumulative.iter().position(|&c| u < c).unwrap_or(support.len() - 1);
                    support[k].0
                })
                .collect()
        }
    };
    BiasVector::new(probs)
}

pub fn generate_codebook(n: usize, p: &BiasVector, seed: Seed) -> Result<Codebook> {
    generate_codebook_with_budget(n, p, seed, DEFAULT_MEMORY_BUDGET)
}

/// `n` codewords with `x_{j,i} ~ Bernoulli(p_i)`, row `j` drawn from its own
/// sub-stream so the output does not depend on thread count.
pub fn generate_codebook_with_budget(n: usize, p: &BiasVector, seed: Seed, budget_bytes: u128) -> Result<Codebook> {
    if n == 0 {
        return Err(domain("user count must be >= 1"));
    }
    let len = p.len();
    let wpr = words_for(len);
    let requested = n as u128 * wpr as u128 * 8;
    if requested > budget_bytes {
        return Err(Error::Capacity {
            requested,
            budget: budget_bytes,
        });
    }
    let thresholds: Vec<u64> = p.probs().iter().map(|&q| bernoulli_threshold(q)).collect();
    let mut words = vec![0u64; n * wpr];
    words.par_chunks_mut(wpr).enumerate().for_each(|(j, row)| {
        let mut rng = seed.stream(dom::CODEBOOK_ROW, j as u64);
        for (i, &t) in thresholds.iter().enumerate() {
            if rng.next_u64() < t {
                row[i / 64] |= 1 << (i % 64);
            }
        }
    });
    Codebook::from_words(n, len, words)
}
