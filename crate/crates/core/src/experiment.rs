//! Seeded end-to-end simulation of LSH decoding: generate, collude, index,
//! query, and aggregate work and recall statistics over many trials.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{forge, named_strategy};
use crate::codegen::{generate_codebook, nuida_c3, sample_bias, BiasDistribution};
use crate::decoder::{all_scores, select, DecodeMode};
use crate::error::{domain, Result};
use crate::lsh::{build_index, query_copy, LshParams};
use crate::rng::{domain as dom, Seed};
use crate::score::ScoreKernel;
use crate::types::{ScoreFunctionKind, UserScore};

pub const DEFAULT_WINDOW: usize = 201;
pub const DEFAULT_SERIES_POINTS: usize = 200;
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Total users, colluders included.
    pub n: usize,
    pub len: usize,
    pub c: usize,
    pub trials: usize,
    pub dist: BiasDistribution,
    pub strategy: String,
    pub lsh: LshParams,
    pub kind: ScoreFunctionKind,
    /// Rule applied to the LSH candidates to count accusations.
    pub mode: DecodeMode,
    pub seed: Seed,
    /// Users per centered running-average window in the score series.
    pub window: usize,
    pub series_points: usize,
    pub histogram_bins: usize,
}

impl ExperimentConfig {
    /// The large configuration: 10⁵ users, ℓ = 5000, three colluders.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            n: 100_000,
            len: 5000,
            c: 3,
            trials: 50,
            dist: nuida_c3(),
            strategy: "interleaving".into(),
            lsh: LshParams::default(),
            kind: ScoreFunctionKind::Equivalent,
            mode: DecodeMode::TopM(3),
            seed: Seed(0),
            window: DEFAULT_WINDOW,
            series_points: DEFAULT_SERIES_POINTS,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
        }
    }

    /// A scaled-down run that finishes in minutes on one core.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            n: 20_000,
            len: 2000,
            trials: 20,
            lsh: LshParams {
                tables: 30,
                hash_len: 13,
                ..LshParams::default()
            },
            ..Self::full_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.len == 0 || self.c == 0 || self.trials == 0 {
            return Err(domain("n, len, c and trials must be positive"));
        }
        if self.c > self.n {
            return Err(domain(format!("{} colluders among {} users", self.c, self.n)));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(domain("running-average window must be odd"));
        }
        if self.series_points == 0 || self.histogram_bins == 0 {
            return Err(domain("series sizes must be positive"));
        }
        if let DecodeMode::TopM(m) = self.mode {
            if m > self.n {
                return Err(domain(format!("top-{m} requested from {} users", self.n)));
            }
        }
        self.dist.validate()?;
        self.lsh.validate()?;
        named_strategy(&self.strategy, self.c)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub colluders: Vec<usize>,
    /// Innocent users whose score was computed.
    pub innocent_candidates: usize,
    /// Colluders that collided with the query in some table.
    pub colluders_found: usize,
    pub scores_computed: usize,
    pub dot_products_total: usize,
    pub colluders_accused: usize,
    pub innocents_accused: usize,
}

/// One point of the score-sorted running average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub score: f64,
    pub candidate_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub mean_score: f64,
    pub users: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialReport>,
    /// Mean over trials of the per-trial innocent candidate fraction.
    pub innocent_fraction_mean: f64,
    /// Innocent candidates over innocent users, pooled across trials.
    pub innocent_fraction_pooled: f64,
    pub colluder_recall: f64,
    pub mean_scores_computed: f64,
    pub mean_dot_products: f64,
    /// `n` over the mean total dot products.
    pub speedup: f64,
    /// Running-average candidate rate against score, pooled over all users
    /// of all trials.
    pub series: Vec<SeriesPoint>,
    /// The same pooled users in equal-count score bins.
    pub histogram: Vec<HistogramBin>,
    /// Spearman correlation between bin mean score and bin candidate rate.
    pub spearman: f64,
}

struct TrialOutcome {
    report: TrialReport,
    /// `(score, was a candidate)` for every user.
    scored: Vec<(f64, bool)>,
}

fn run_trial(cfg: &ExperimentConfig, t: usize) -> Result<TrialOutcome> {
    let seed = cfg.seed.child(dom::TRIAL, t as u64);
    let p = sample_bias(&cfg.dist, cfg.len, seed)?;
    let codebook = generate_codebook(cfg.n, &p, seed)?;
    let mut colluders = sample(&mut seed.stream(dom::COLLUDERS, 0), cfg.n, cfg.c).into_vec();
    colluders.sort_unstable();
    let strategy = named_strategy(&cfg.strategy, cfg.c)?;
    let y = forge(&codebook, &colluders, &strategy, seed)?;

    let index = build_index(&codebook, &cfg.lsh, seed)?;
    let found = query_copy(&index, &y, &codebook, &p, cfg.kind)?;

    let mut is_colluder = vec![false; cfg.n];
    for &u in &colluders {
        is_colluder[u] = true;
    }
    let mut is_candidate = vec![false; cfg.n];
    for u in found.users() {
        is_candidate[u] = true;
    }
    let colluders_found = colluders.iter().filter(|&&u| is_candidate[u]).count();
    let (accused, _) = select(&found.candidates, cfg.mode);
    let colluders_accused = accused.iter().filter(|s: &&UserScore| is_colluder[s.user]).count();

    let kernel = ScoreKernel::new(&y, &p, cfg.kind)?;
    let scores = all_scores(&codebook, &kernel)?;
    let scored = scores.into_iter().zip(is_candidate).collect();

    Ok(TrialOutcome {
        report: TrialReport {
            innocent_candidates: found.stats.scores_computed - colluders_found,
            colluders_found,
            scores_computed: found.stats.scores_computed,
            dot_products_total: found.stats.dot_products_total,
            colluders_accused,
            innocents_accused: accused.len() - colluders_accused,
            colluders,
        },
        scored,
    })
}

/// Centered running mean of the candidate indicator over users sorted by
/// score, sampled at `points` evenly spaced positions.
fn running_series(sorted: &[(f64, bool)], window: usize, points: usize) -> Vec<SeriesPoint> {
    if sorted.len() < window {
        return Vec::new();
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0usize);
    for &(_, hit) in sorted {
        prefix.push(prefix.last().unwrap() + hit as usize);
    }
    let centers = sorted.len() - 2 * half;
    let points = points.min(centers);
    (0..points)
        .map(|i| {
            let center = half
                + if points > 1 {
                    i * (centers - 1) / (points - 1)
                } else {
                    centers / 2
                };
            let hits = prefix[center + half + 1] - prefix[center - half];
            SeriesPoint {
                score: sorted[center].0,
                candidate_rate: hits as f64 / window as f64,
            }
        })
        .collect()
}

/// Equal-count bins over users sorted by score; the last bin takes the
/// remainder.
fn histogram(sorted: &[(f64, bool)], bins: usize) -> Vec<HistogramBin> {
    let per = sorted.len() / bins;
    if per == 0 {
        return Vec::new();
    }
    (0..bins)
        .map(|b| {
            let chunk = &sorted[b * per..if b + 1 == bins { sorted.len() } else { (b + 1) * per }];
            HistogramBin {
                lo: chunk[0].0,
                hi: chunk[chunk.len() - 1].0,
                mean_score: chunk.iter().map(|s| s.0).sum::<f64>() / chunk.len() as f64,
                users: chunk.len(),
                candidates: chunk.iter().filter(|s| s.1).count(),
            }
        })
        .collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; NaN if either
/// side is constant or there are fewer than two points.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let m = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m).powi(2);
        syy += (b - m).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Run every trial and aggregate. Trials are seeded independently, so the
/// report does not depend on the number of threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;

    let trials = cfg.trials as f64;
    let innocents = (cfg.n - cfg.c) as f64;
    let reports: Vec<TrialReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let sum = |f: fn(&TrialReport) -> usize| reports.iter().map(f).sum::<usize>() as f64;
    let innocent_fraction_mean = if cfg.n > cfg.c {
        reports
            .iter()
            .map(|r| r.innocent_candidates as f64 / innocents)
            .sum::<f64>()
            / trials
    } else {
        0.0
    };
    let innocent_fraction_pooled = if cfg.n > cfg.c {
        sum(|r| r.innocent_candidates) / (innocents * trials)
    } else {
        0.0
    };
    let mean_dot_products = sum(|r| r.dot_products_total) / trials;

    let mut pooled: Vec<(f64, bool)> = outcomes.into_iter().flat_map(|o| o.scored).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let series = running_series(&pooled, cfg.window, cfg.series_points);
    let histogram = histogram(&pooled, cfg.histogram_bins);
    let xs: Vec<f64> = histogram.iter().map(|b| b.mean_score).collect();
    let ys: Vec<f64> = histogram.iter().map(|b| b.candidates as f64 / b.users as f64).collect();

    Ok(ExperimentReport {
        innocent_fraction_mean,
        innocent_fraction_pooled,
        colluder_recall: sum(|r| r.colluders_found) / (cfg.c as f64 * trials),
        mean_scores_computed: sum(|r| r.scores_computed) / trials,
        mean_dot_products,
        speedup: cfg.n as f64 / mean_dot_products,
        histogram,
        spearman: spearman(&xs, &ys),
        series,
        trials: reports,
        config: cfg.clone(),
    })
}

pub const TRIALS_CSV_HEADER: &str =
    "trial,innocent_candidates,colluders_found,scores_computed,dot_products_total,colluders_accused,innocents_accused";
pub const SERIES_CSV_HEADER: &str = "score,candidate_rate";
pub const HISTOGRAM_CSV_HEADER: &str = "lo,hi,mean_score,users,candidates,candidate_rate";

impl ExperimentReport {
    pub fn trials_csv(&self) -> String {
        let mut s = format!("{TRIALS_CSV_HEADER}\n");
        for (t, r) in self.trials.iter().enumerate() {
            let _ = writeln!(
                s,
                "{t},{},{},{},{},{},{}",
                r.innocent_candidates,
                r.colluders_found,
                r.scores_computed,
                r.dot_products_total,
                r.colluders_accused,
                r.innocents_accused
            );
        }
        s
    }

    pub fn series_csv(&self) -> String {
        let mut s = format!("{SERIES_CSV_HEADER}\n");
        for p in &self.series {
            let _ = writeln!(s, "{},{}", p.score, p.candidate_rate);
        }
        s
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = format!("{HISTOGRAM_CSV_HEADER}\n");
        for b in &self.histogram {
            let rate = b.candidates as f64 / b.users as f64;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{rate}",
                b.lo, b.hi, b.mean_score, b.users, b.candidates
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n: 300,
            len: 256,
            trials: 3,
            window: 21,
            series_points: 20,
            histogram_bins: 8,
            lsh: LshParams::new(4, 6, 1.0 / 3.0, 1).unwrap(),
            ..ExperimentConfig::full_scale()
        }
    }

    #[test]
    fn report_invariants() {
        let cfg = tiny();
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.trials.len(), 3);
        for t in &r.trials {
            assert_eq!(t.colluders.len(), 3);
            assert!(t.dot_products_total <= cfg.n + cfg.lsh.hash_products());
            assert_eq!(t.scores_computed, t.innocent_candidates + t.colluders_found);
            assert_eq!(t.colluders_accused + t.innocents_accused, 3);
        }
        for f in [r.innocent_fraction_mean, r.innocent_fraction_pooled, r.colluder_recall] {
            assert!((0.0..=1.0).contains(&f));
        }
        assert_eq!(r.series.len(), 20);
        assert_eq!(r.histogram.iter().map(|b| b.users).sum::<usize>(), 900);
        assert!(r.histogram.windows(2).all(|w| w[0].hi <= w[1].lo));
        assert!(r.series.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn deterministic() {
        assert_eq!(run_experiment(&tiny()).unwrap(), run_experiment(&tiny()).unwrap());
    }

    #[test]
    fn exhaustive_probing_finds_everyone() {
        let mut cfg = tiny();
        cfg.lsh.probes = 1 << cfg.lsh.hash_len;
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.innocent_fraction_pooled, 1.0);
        assert_eq!(r.colluder_recall, 1.0);
        assert!(r.speedup <= 1.0);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        // ties get average ranks: x ranks (1, 2.5, 2.5), y ranks (1, 2, 3)
        let r = spearman(&[1.0, 2.0, 2.0], &[1.0, 2.0, 3.0]);
        assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
    }

    #[test]
    fn running_series_is_exact_on_small_input() {
        let data: Vec<(f64, bool)> = (0..7).map(|i| (i as f64, i >= 4)).collect();
        let s = running_series(&data, 3, 10);
        let rates: Vec<f64> = s.iter().map(|p| p.candidate_rate * 3.0).collect();
        assert_eq!(rates, vec![0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(s[0].score, 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = tiny();
        cfg.window = 20;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = tiny();
        cfg.c = 400;
        assert!(cfg.validate().is_err());
    }
}
