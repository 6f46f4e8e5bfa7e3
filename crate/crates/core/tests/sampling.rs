use std::f64::consts::PI;

use tardos_core::analysis::{approximation_factor, moments_interleaving, monte_carlo_moments, normalized_dots};
use tardos_core::attack::{forge, interleaving};
use tardos_core::codegen::{generate_codebook, nuida_c3, sample_bias, uniform_half, BiasDistribution};
use tardos_core::Seed;

/// Truncated arcsine CDF written through `atan` instead of `asin`.
fn truncated_cdf(p: f64, delta: f64) -> f64 {
    let g = |x: f64| 2.0 / PI * (x / (1.0 - x)).sqrt().atan();
    ((g(p) - g(delta)) / (g(1.0 - delta) - g(delta))).clamp(0.0, 1.0)
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn arcsine_samples_pass_ks() {
    let n = 20_000;
    // 1.95/√n is the 0.1% critical value
    let critical = 1.95 / (n as f64).sqrt();
    for (delta, seed) in [(0.0, 1), (0.01, 2), (0.1, 3), (0.3, 4)] {
        let p = sample_bias(&BiasDistribution::arcsine(delta).unwrap(), n, Seed(seed)).unwrap();
        assert!(p
            .probs()
            .iter()
            .all(|&x| x >= delta && x <= 1.0 - delta && x > 0.0 && x < 1.0));
        let d = ks_statistic(p.probs().to_vec(), |x| truncated_cdf(x, delta));
        assert!(d < critical, "delta {delta}: KS {d} >= {critical}");
    }
}

/// Same check against a CDF tabulated by integrating the density
/// `1/(π√(p(1-p)))` on a grid (substituting `p = sin²θ` to remove the
/// endpoint singularities).
#[test]
fn arcsine_samples_match_grid_integrated_cdf() {
    let delta: f64 = 0.05;
    let steps = 20_000;
    let (a, b) = (delta.sqrt().asin(), (1.0 - delta).sqrt().asin());
    // in θ the density is the constant 2/π, so the CDF is piecewise linear in θ
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let theta = a + (b - a) * i as f64 / steps as f64;
            (theta.sin().powi(2), i as f64 / steps as f64)
        })
        .collect();
    let cdf = |p: f64| {
        let k = grid.partition_point(|g| g.0 < p);
        if k == 0 {
            0.0
        } else if k == grid.len() {
            1.0
        } else {
            let (lo, hi) = (grid[k - 1], grid[k]);
            lo.1 + (p - lo.0) / (hi.0 - lo.0) * (hi.1 - lo.1)
        }
    };
    let n = 20_000;
    let p = sample_bias(&BiasDistribution::arcsine(delta).unwrap(), n, Seed(9)).unwrap();
    let d = ks_statistic(p.probs().to_vec(), cdf);
    assert!(d < 1.95 / (n as f64).sqrt(), "KS {d}");
}

#[test]
fn discrete_frequencies() {
    let dist = BiasDistribution::discrete(vec![(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)]).unwrap();
    let n = 50_000;
    let p = sample_bias(&dist, n, Seed(5)).unwrap();
    for (value, weight) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)] {
        let freq = p.probs().iter().filter(|&&x| x == value).count() as f64 / n as f64;
        let se = (weight * (1.0 - weight) / n as f64).sqrt();
        assert!((freq - weight).abs() < 4.0 * se, "{value}: {freq}");
    }
}

#[test]
fn codeword_bits_follow_bias() {
    let p = sample_bias(&BiasDistribution::arcsine(0.05).unwrap(), 200, Seed(2)).unwrap();
    let n = 4000;
    let cb = generate_codebook(n, &p, Seed(2)).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &pi) in p.probs().iter().enumerate() {
        let ones = (0..n).filter(|&j| cb.bit(j, i)).count() as f64;
        let z = (ones / n as f64 - pi) / (pi * (1.0 - pi) / n as f64).sqrt();
        worst = worst.max(z.abs());
    }
    // 200 segments, so allow the 1-in-10⁴ two-sided band
    assert!(worst < 3.9, "max |z| = {worst}");
}

#[test]
fn interleaving_output_has_mean_p() {
    // E[y_i | p_i] = p_i, checked on segments pooled by bias value
    let dist = nuida_c3();
    let len = 4000;
    let trials = 40;
    let (mut ones, mut count) = ([0.0f64; 2], [0.0f64; 2]);
    for t in 0..trials {
        let p = sample_bias(&dist, len, Seed(100 + t)).unwrap();
        let cb = generate_codebook(3, &p, Seed(100 + t)).unwrap();
        let y = forge(&cb, &[0, 1, 2], &interleaving(3), Seed(100 + t)).unwrap();
        for (i, &pi) in p.probs().iter().enumerate() {
            let k = (pi > 0.5) as usize;
            count[k] += 1.0;
            ones[k] += y.bit(i) as u8 as f64;
        }
    }
    for (k, pi) in [(0, 0.211), (1, 0.789)] {
        let rate = ones[k] / count[k];
        let se = (pi * (1.0 - pi) / count[k]).sqrt();
        assert!((rate - pi).abs() < 3.0 * se, "p = {pi}: rate {rate}");
    }
}

#[test]
fn arcsine_closed_form_matches_simulation() {
    let dist = BiasDistribution::arcsine(0.05).unwrap();
    let exact = moments_interleaving(&dist, 3).unwrap();
    let mc = monte_carlo_moments(&dist, &interleaving(3), 4000, 200, Seed(12)).unwrap();
    assert!((mc.mu0_per_seg - exact.mu0_per_seg).abs() < 3.0 * mc.se0.unwrap());
    assert!((mc.mu1_per_seg - exact.mu1_per_seg).abs() < 3.0 * mc.se1.unwrap());
}

#[test]
fn dots_vanish_as_cutoff_shrinks() {
    let mut last = (f64::INFINITY, f64::INFINITY);
    let mut by_delta = Vec::new();
    for delta in [1e-2, 1e-4, 1e-6, 1e-8] {
        let m = moments_interleaving(&BiasDistribution::arcsine(delta).unwrap(), 3).unwrap();
        let (d0, d1) = normalized_dots(&m).unwrap();
        assert!(d0 > 0.0 && d1 > d0);
        assert!(d0 < last.0 && d1 < last.1, "delta {delta}: ({d0}, {d1}) vs {last:?}");
        last = (d0, d1);
        by_delta.push(d1);
    }
    assert!(last.1 < 0.1, "{last:?}");
    // ‖q‖ grows like δ^(-1/4) while the means grow like ln(1/δ), so from
    // δ = 1e-4 to 1e-8 the ratio is about 0.1 · ln(1e8)/ln(1e4) = 0.2
    let ratio = by_delta[3] / by_delta[1];
    assert!((ratio - 0.2).abs() < 0.03, "ratio {ratio}");
}

#[test]
fn alpha_decreases_with_coalition_size() {
    let alpha = |dist: BiasDistribution, c: usize| {
        let (d0, d1) = normalized_dots(&moments_interleaving(&dist, c).unwrap()).unwrap();
        approximation_factor(d0, d1).unwrap()
    };
    let a2 = alpha(uniform_half(), 2);
    let a3 = alpha(nuida_c3(), 3);
    assert!((a2 - 2f64.sqrt()).abs() < 1e-12);
    assert!((a3 - 1.2247).abs() < 1e-3);
    assert!(a3 < a2);
    // within the arcsine family too
    let arcs: Vec<f64> = (2..=8)
        .map(|c| alpha(BiasDistribution::parse("arcsine", c).unwrap(), c))
        .collect();
    assert!(arcs.windows(2).all(|w| w[1] <= w[0]), "{arcs:?}");
}
