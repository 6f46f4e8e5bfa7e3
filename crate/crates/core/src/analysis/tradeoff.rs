//! Time/space exponents of nearest-neighbor search on the sphere.
//!
//! For an approximation factor `α`, any `(ρq, ρs)` with
//! `α²√ρq + (α²-1)√ρs ≥ √(2α²-1)` is achievable; query time scales as
//! `n^ρq` and space as `n^(1+ρs)`. Every point returned here lies on the
//! equality curve.

use serde::{Deserialize, Serialize};

use super::moments::ScoreMoments;
use crate::error::{domain, Result};

/// `(d0, d1) = (μ0, μ1) / (‖v‖·‖q‖)`; the `√ℓ·√ℓ` factors cancel against `ℓ`.
pub fn normalized_dots(m: &ScoreMoments) -> Result<(f64, f64)> {
    if !(m.qnorm_per_sqrtseg > 0.0) {
        return Err(domain("query norm must be positive"));
    }
    Ok((m.mu0_per_seg / m.qnorm_per_sqrtseg, m.mu1_per_seg / m.qnorm_per_sqrtseg))
}

/// `α = √(1-d0) / √(1-d1)`, requires `-1 ≤ d0 < d1 < 1`.
pub fn approximation_factor(d0: f64, d1: f64) -> Result<f64> {
    if !(d1 < 1.0) {
        return Err(domain(format!("d1 = {d1} must be < 1")));
    }
    if !(d0 >= -1.0 && d0 < d1) {
        return Err(domain(format!("need -1 <= d0 < d1, got d0 = {d0}, d1 = {d1}")));
    }
    Ok((1.0 - d0).sqrt() / (1.0 - d1).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Smallest `ρq` for the given space exponent.
    FixedSpace(f64),
    /// `ρq = ρs`.
    Balanced,
    /// Smallest `ρs` for the given query exponent.
    FixedQuery(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub alpha: f64,
    pub rho_q: f64,
    pub rho_s: f64,
}

/// `α²√ρq + (α²-1)√ρs - √(2α²-1)`; zero on the curve.
pub fn tradeoff_residual(alpha: f64, rho_q: f64, rho_s: f64) -> f64 {
    let a2 = alpha * alpha;
    a2 * rho_q.sqrt() + (a2 - 1.0) * rho_s.sqrt() - (2.0 * a2 - 1.0).sqrt()
}

/// The point of the equality curve selected by `regime`.
///
/// Requests past the end of the curve are clamped onto it: asking for more
/// space than needed for `ρq = 0` returns that endpoint, and likewise for
/// query time. `α = ∞` gives `(0, 0)`.
pub fn tradeoff(alpha: f64, regime: Regime) -> Result<TradeoffPoint> {
    if alpha.is_nan() || alpha < 1.0 {
        return Err(domain(format!("approximation factor {alpha} must be >= 1")));
    }
    let point = |rho_q: f64, rho_s: f64| TradeoffPoint {
        d0: None,
        d1: None,
        alpha,
        rho_q,
        rho_s,
    };
    if alpha.is_infinite() {
        if let Regime::FixedSpace(r) | Regime::FixedQuery(r) = regime {
            if !(r >= 0.0) {
                return Err(domain(format!("exponent {r} must be >= 0")));
            }
        }
        return Ok(point(0.0, 0.0));
    }
    let a2 = alpha * alpha;
    let rhs = (2.0 * a2 - 1.0).sqrt();
    match regime {
        Regime::Balanced => {
            let rho = 1.0 / (2.0 * a2 - 1.0);
            Ok(point(rho, rho))
        }
        Regime::FixedSpace(rho_s) => {
            if !(rho_s >= 0.0) {
                return Err(domain(format!("space exponent {rho_s} must be >= 0")));
            }
            if a2 > 1.0 {
                let saturation = rhs / (a2 - 1.0);
                if rho_s.sqrt() >= saturation {
                    return Ok(point(0.0, saturation * saturation));
                }
            }
            let root = (rhs - (a2 - 1.0) * rho_s.sqrt()) / a2;
            Ok(point(root * root, rho_s))
        }
        Regime::FixedQuery(rho_q) => {
            if !(rho_q >= 0.0) {
                return Err(domain(format!("query exponent {rho_q} must be >= 0")));
            }
            if a2 <= 1.0 {
                return Err(domain("fixed query time needs alpha > 1"));
            }
            let limit = rhs / a2;
            if rho_q.sqrt() >= limit {
                return Ok(point(limit * limit, 0.0));
            }
            let root = (rhs - a2 * rho_q.sqrt()) / (a2 - 1.0);
            Ok(point(rho_q, root * root))
        }
    }
}

/// [`tradeoff`] starting from normalized dot products.
pub fn tradeoff_for(d0: f64, d1: f64, regime: Regime) -> Result<TradeoffPoint> {
    let alpha = approximation_factor(d0, d1)?;
    let mut p = tradeoff(alpha, regime)?;
    p.d0 = Some(d0);
    p.d1 = Some(d1);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn approximation_factor_examples() {
        assert!((approximation_factor(0.0, 0.5).unwrap() - SQRT2).abs() < 1e-12);
        assert!((approximation_factor(0.334, 0.556).unwrap() - 1.22).abs() < 0.01);
        assert!((approximation_factor(0.3, 0.3 + 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(approximation_factor(0.0, 1.0).is_err());
        assert!(approximation_factor(0.5, 0.5).is_err());
        assert!(approximation_factor(-1.5, 0.5).is_err());
    }

    #[test]
    fn two_colluder_points() {
        let p = tradeoff(SQRT2, Regime::FixedSpace(0.0)).unwrap();
        assert!((p.rho_q - 0.75).abs() < 1e-12);
        let p = tradeoff(SQRT2, Regime::Balanced).unwrap();
        assert!((p.rho_q - 1.0 / 3.0).abs() < 1e-12 && (p.rho_s - 1.0 / 3.0).abs() < 1e-12);
        let p = tradeoff(SQRT2, Regime::FixedQuery(0.0)).unwrap();
        assert!((p.rho_s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn other_points() {
        let p = tradeoff(1.2246, Regime::FixedQuery(0.0)).unwrap();
        assert!((p.rho_s - 8.0).abs() < 0.05, "{}", p.rho_s);
        let a = (4.0f64 / 3.0).sqrt();
        let p = tradeoff(a, Regime::FixedSpace(0.0)).unwrap();
        assert!((p.rho_q - 15.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn limits_and_errors() {
        assert_eq!(tradeoff(f64::INFINITY, Regime::Balanced).unwrap().rho_q, 0.0);
        let p = tradeoff(1.0, Regime::FixedSpace(2.0)).unwrap();
        assert!((p.rho_q - 1.0).abs() < 1e-15);
        assert!(tradeoff(1.0, Regime::FixedQuery(0.0)).is_err());
        assert!(tradeoff(0.9, Regime::Balanced).is_err());
        assert!(tradeoff(1.5, Regime::FixedSpace(-1.0)).is_err());
    }

    #[test]
    fn clamped_requests_stay_on_curve() {
        let p = tradeoff(2.0, Regime::FixedSpace(3.0)).unwrap();
        assert_eq!(p.rho_q, 0.0);
        assert!((p.rho_s - 7.0 / 9.0).abs() < 1e-12);
        assert!(tradeoff_residual(2.0, p.rho_q, p.rho_s).abs() < 1e-12);
        let p = tradeoff(2.0, Regime::FixedQuery(5.0)).unwrap();
        assert_eq!(p.rho_s, 0.0);
        assert!(tradeoff_residual(2.0, p.rho_q, p.rho_s).abs() < 1e-12);
    }
}
