//! Collusion channels `θ = (θ_0, …, θ_c)` and pirate-copy forging.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, domain, Error, Result};
use crate::rng::{bernoulli_threshold, domain as dom, Seed};
use crate::types::{words_for, Codebook, PirateCopy};

/// `theta[k] = Pr(y_i = 1 | k of the c colluders hold a 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AttackStrategy {
    theta: Vec<f64>,
}

impl AttackStrategy {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(domain("strategy needs c >= 1 (at least two entries)"));
        }
        if let Some(t) = theta.iter().find(|t| !(**t >= 0.0 && **t <= 1.0)) {
            return Err(domain(format!("theta entry {t} is outside [0, 1]")));
        }
        if theta[0] != 0.0 || theta[theta.len() - 1] != 1.0 {
            return Err(domain("marking assumption requires theta[0] = 0 and theta[c] = 1"));
        }
        Ok(AttackStrategy { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of colluders this channel is defined for.
    pub fn c(&self) -> usize {
        self.theta.len() - 1
    }

    fn from_fn(c: usize, f: impl Fn(usize) -> f64) -> Self {
        let c = c.max(1);
        let theta = (0..=c)
            .map(|k| match k {
                0 => 0.0,
                k if k == c => 1.0,
                k => f(k),
            })
            .collect();
        AttackStrategy { theta }
    }
}

impl TryFrom<Vec<f64>> for AttackStrategy {
    type Error = Error;

    fn try_from(theta: Vec<f64>) -> Result<Self> {
        AttackStrategy::new(theta)
    }
}

impl From<AttackStrategy> for Vec<f64> {
    fn from(s: AttackStrategy) -> Self {
        s.theta
    }
}

/// Plain list form: `c+1` decimal reals separated by commas or whitespace.
impl FromStr for AttackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let theta = s
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| domain(format!("bad theta entry {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        AttackStrategy::new(theta)
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.theta.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Copy a uniformly random colluder per segment: `θ_k = k/c`.
pub fn interleaving(c: usize) -> AttackStrategy {
    AttackStrategy::from_fn(c, |k| k as f64 / c as f64)
}

/// Output 1 whenever any colluder holds a 1 (the group-testing channel).
pub fn all_one(c: usize) -> AttackStrategy {
    AttackStrategy::from_fn(c, |_| 1.0)
}

pub fn majority(c: usize) -> AttackStrategy {
    AttackStrategy::from_fn(c, |k| match (2 * k).cmp(&c) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    })
}

pub fn minority(c: usize) -> AttackStrategy {
    AttackStrategy::from_fn(c, |k| match (2 * k).cmp(&c) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    })
}

pub fn coin_flip(c: usize) -> AttackStrategy {
    AttackStrategy::from_fn(c, |_| 0.5)
}

pub const STRATEGY_NAMES: [&str; 5] = ["interleaving", "all-one", "majority", "minority", "coinflip"];

pub fn named_strategy(name: &str, c: usize) -> Result<AttackStrategy> {
    if c == 0 {
        return Err(domain("colluder count must be >= 1"));
    }
    match name.to_ascii_lowercase().as_str() {
        "interleaving" | "interleave" => Ok(interleaving(c)),
        "all-one" | "all1" | "all-1" | "allone" => Ok(all_one(c)),
        "majority" => Ok(majority(c)),
        "minority" => Ok(minority(c)),
        "coinflip" | "coin-flip" => Ok(coin_flip(c)),
        _ => Err(Error::Lookup {
            kind: "attack strategy",
            name: name.to_string(),
        }),
    }
}

/// Forge a pirate copy from the colluders' codewords.
///
/// Segment `i` consumes the `i`-th 64-bit draw of the forge stream whether
/// or not the colluders agree there, so the copy depends only on the seed
/// and the set of colluders (not their order).
pub fn forge(codebook: &Codebook, colluders: &[usize], strategy: &AttackStrategy, seed: Seed) -> Result<PirateCopy> {
    if colluders.is_empty() {
        return Err(domain("colluder set is empty"));
    }
    let mut sorted = colluders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != colluders.len() {
        return Err(domain("colluder set contains duplicates"));
    }
    if let Some(&j) = sorted.iter().find(|&&j| j >= codebook.n()) {
        return Err(domain(format!("colluder {j} out of range for n = {}", codebook.n())));
    }
    check_len(strategy.c(), sorted.len())?;

    let len = codebook.len();
    let c = sorted.len();
    let thresholds: Vec<u64> = strategy.theta.iter().map(|&t| bernoulli_threshold(t)).collect();
    let rows: Vec<&[u64]> = sorted.iter().map(|&j| codebook.row(j)).collect();
    let mut rng = seed.stream(dom::FORGE, 0);
    let mut words = vec![0u64; words_for(len)];
    for i in 0..len {
        let (w, b) = (i / 64, i % 64);
        let k = rows.iter().filter(|r| (r[w] >> b) & 1 == 1).count();
        let draw = rng.next_u64();
        let one = if k == 0 {
            false
        } else if k == c {
            true
        } else {
            let t = strategy.theta[k];
            t >= 1.0 || draw < thresholds[k]
        };
        if one {
            words[w] |= 1 << b;
        }
    }
    PirateCopy::from_words(len, words)
}
