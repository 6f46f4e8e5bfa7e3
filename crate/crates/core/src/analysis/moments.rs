use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use crate::codegen::{arcsine_cdf, BiasDistribution};
use crate::error::{domain, Error, Result};

pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Per-segment score statistics of the equivalent score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMoments {
    /// Innocent mean `μ0 / ℓ`.
    pub mu0_per_seg: f64,
    /// Colluder mean `μ1 / ℓ`.
    pub mu1_per_seg: f64,
    /// `‖q‖ / √ℓ`.
    pub qnorm_per_sqrtseg: f64,
    /// Empirical `σ0² / ℓ` (Monte-Carlo only).
    pub var0: Option<f64>,
    /// Empirical `σ1² / ℓ` (Monte-Carlo only).
    pub var1: Option<f64>,
    /// Standard error of `mu0_per_seg` (Monte-Carlo only).
    pub se0: Option<f64>,
    /// Standard error of `mu1_per_seg` (Monte-Carlo only).
    pub se1: Option<f64>,
}

/// `E[h(p)]` for `p` drawn from `dist`.
///
/// Discrete laws are summed exactly. For the truncated arcsine law the
/// substitution `p = sin²θ` turns the density into the constant `2/π` on
/// `[asin √δ, π/2 - asin √δ]`, and the integral is evaluated adaptively.
pub fn expectation(dist: &BiasDistribution, h: impl Fn(f64) -> f64) -> Result<f64> {
    expect_in_theta(dist, &h, |theta| {
        let s = theta.sin();
        h(s * s)
    })
}

/// `E[g(p(1-p))]`. In θ the product is `(sin 2θ / 2)²`, which keeps full
/// relative precision near `p = 1` where `1 - sin²θ` would cancel.
fn expectation_pq(dist: &BiasDistribution, g: impl Fn(f64) -> f64) -> Result<f64> {
    expect_in_theta(dist, &|p: f64| g(p * (1.0 - p)), |theta| {
        let half = 0.5 * (2.0 * theta).sin();
        g(half * half)
    })
}

fn expect_in_theta(dist: &BiasDistribution, h: &dyn Fn(f64) -> f64, in_theta: impl Fn(f64) -> f64) -> Result<f64> {
    dist.validate()?;
    match dist {
        BiasDistribution::Discrete { support } => {
            let total: f64 = support.iter().map(|s| s.1).sum();
            Ok(support.iter().map(|&(p, w)| w * h(p)).sum::<f64>() / total)
        }
        BiasDistribution::ArcsineTruncated { delta } => {
            if *delta <= 0.0 {
                return Err(Error::Numeric(
                    "score moments diverge for the untruncated arcsine law (cutoff 0)".into(),
                ));
            }
            let lo = delta.sqrt().asin();
            let hi = FRAC_PI_2 - lo;
            let mass = arcsine_cdf(1.0 - delta) - arcsine_cdf(*delta);
            let raw = integrate(in_theta, lo, hi, QUADRATURE_TOLERANCE * mass * FRAC_PI_2)?;
            Ok(raw * (2.0 / std::f64::consts::PI) / mass)
        }
    }
}

/// Closed-form moments under the interleaving attack with `c` colluders.
pub fn moments_interleaving(dist: &BiasDistribution, c: usize) -> Result<ScoreMoments> {
    if c == 0 {
        return Err(domain("colluder count must be >= 1"));
    }
    let inv_sd = expectation_pq(dist, |pq| 1.0 / pq.sqrt())?;
    // p² + (1-p)² - 2p(1-p) = 1 - 4p(1-p)
    let mu0 = expectation_pq(dist, |pq| (1.0 - 4.0 * pq) / pq.sqrt())?;
    let q2 = expectation_pq(dist, |pq| 1.0 / pq)?;
    let c = c as f64;
    Ok(ScoreMoments {
        mu0_per_seg: mu0,
        mu1_per_seg: (1.0 - 1.0 / c) * mu0 + inv_sd / c,
        qnorm_per_sqrtseg: q2.sqrt(),
        var0: None,
        var1: None,
        se0: None,
        se1: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{nuida_c3, uniform_half};

    #[test]
    fn uniform_half_rows() {
        let m = moments_interleaving(&uniform_half(), 2).unwrap();
        assert_eq!((m.mu0_per_seg, m.mu1_per_seg, m.qnorm_per_sqrtseg), (0.0, 1.0, 2.0));
        let m = moments_interleaving(&uniform_half(), 1).unwrap();
        assert_eq!((m.mu0_per_seg, m.mu1_per_seg, m.qnorm_per_sqrtseg), (0.0, 2.0, 2.0));
    }

    #[test]
    fn nuida_row() {
        let m = moments_interleaving(&nuida_c3(), 3).unwrap();
        assert!((m.mu0_per_seg - 0.82).abs() < 0.01);
        assert!((m.mu1_per_seg - 1.36).abs() < 0.01);
        assert!((m.qnorm_per_sqrtseg - 2.45).abs() < 0.01);
        assert!(m.mu1_per_seg >= m.mu0_per_seg);
    }

    #[test]
    fn arcsine_expectations_against_closed_forms() {
        // E[1] = 1, and E[p] = 1/2 by symmetry
        let d = BiasDistribution::ArcsineTruncated { delta: 0.01 };
        assert!((expectation(&d, |_| 1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((expectation(&d, |p| p).unwrap() - 0.5).abs() < 1e-9);
        // E[1/√(p(1-p))] = (2/π)/Z · ∫ 2/sin(2θ) dθ = (2/π)/Z · 2·ln cot(θδ)
        let delta: f64 = 0.01;
        let lo = delta.sqrt().asin();
        let z = arcsine_cdf(1.0 - delta) - arcsine_cdf(delta);
        let exact = (2.0 / std::f64::consts::PI) / z * 2.0 * (1.0 / lo.tan()).ln();
        let got = expectation(&d, |p| 1.0 / (p * (1.0 - p)).sqrt()).unwrap();
        assert!((got - exact).abs() < 1e-8, "{got} vs {exact}");
    }

    #[test]
    fn zero_cutoff_is_numeric_error() {
        let d = BiasDistribution::ArcsineTruncated { delta: 0.0 };
        assert!(matches!(moments_interleaving(&d, 4), Err(Error::Numeric(_))));
    }
}
