//! Truth estimation, replicate experiments and format comparison.
//!
//! Replicate `k` of format `p` always draws from the stream keyed by
//! `(master_seed, p, k)`, and results are collected in replicate order, so
//! the output does not depend on how many workers run the experiment.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formats::{execute, FormatError, FormatId, SeedingPolicy};
use crate::model::{ResultPool, TeamId, TeamSet};
use crate::ranking::{
    l1_distance, max_l1_distance, rank_from_points, scheme_totals, PointsTable, Ranking,
    RankingError, ResultTally, SchemeKind,
};
use crate::stream::{derive_stream, domain, replicate_stream};

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_COMPARISON_RESAMPLES: usize = 1_000;
pub const DEFAULT_BOOTSTRAP_ROUNDS: usize = 1_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("an experiment needs at least one replicate")]
    NoReplicates,
    #[error("an experiment needs at least one format")]
    NoFormats,
    #[error("truth ranking covers {truth} teams but the pool has {pool}")]
    TruthSize { truth: usize, pool: usize },
    #[error("comparison needs at least 2 distributions, got {0}")]
    TooFewDistributions(usize),
    #[error(
        "distributions differ in replicate count ({first}: {first_len}, {second}: {second_len})"
    )]
    ReplicateMismatch {
        first: FormatId,
        first_len: usize,
        second: FormatId,
        second_len: usize,
    },
    #[error("comparison needs at least one bootstrap resample")]
    NoResamples,
    #[error("could not start worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub plans: Vec<FormatId>,
    pub replicates: usize,
    pub master_seed: u64,
    pub scheme: SchemeKind,
    pub seeding: SeedingPolicy,
    pub comparison_resamples: usize,
    /// Number of worker threads; never changes results.
    #[serde(skip)]
    pub worker_count_hint: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plans: vec![
                FormatId::Rc2012,
                FormatId::Rc2013DoubleElim,
                FormatId::Rc2014Hybrid,
            ],
            replicates: DEFAULT_REPLICATES,
            master_seed: 0,
            scheme: SchemeKind::Continuous,
            seeding: SeedingPolicy::RandomPerReplicate,
            comparison_resamples: DEFAULT_COMPARISON_RESAMPLES,
            worker_count_hint: 1,
        }
    }
}

/// Reference ranking from the full pool plus bootstrap stability of each
/// adjacent pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthReport {
    pub ranking: Ranking,
    pub totals: PointsTable,
    /// Entry `k` is the share of bootstrap rounds in which the teams at
    /// ranks `k + 1` and `k + 2` kept their order. Empty without bootstrap.
    pub adjacent_stability: Vec<f64>,
    pub bootstrap_rounds: usize,
}

/// Ranks the full pool under `scheme`. With `bootstrap_rounds > 0`, also
/// resamples every pair's games with replacement that many times (stream
/// keyed by `seed` and the round index) and records how often each
/// adjacent pair keeps its order.
pub fn estimate_truth(
    pool: &ResultPool,
    scheme: SchemeKind,
    bootstrap_rounds: usize,
    seed: u64,
) -> TruthReport {
    let totals = scheme_totals(pool, scheme);
    let ranking = rank_from_points(&totals);
    let n = pool.team_count();
    let order = ranking.order();

    let kept = (0..bootstrap_rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = derive_stream(seed, domain::TRUTH_BOOTSTRAP, 0, round as u64);
            let mut tally = ResultTally::new(n);
            for (a, b, games) in pool.pairs() {
                for _ in 0..games.len() {
                    tally.record(a, b, games[rng.random_range(0..games.len())]);
                }
            }
            let resampled = rank_from_points(&PointsTable::from_tally(&tally, scheme));
            order
                .windows(2)
                .map(|w| u64::from(resampled.rank(w[0]) < resampled.rank(w[1])))
                .collect::<Vec<u64>>()
        })
        .reduce(
            || vec![0u64; n - 1],
            |mut acc, v| {
                acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                acc
            },
        );
    let adjacent_stability = if bootstrap_rounds == 0 {
        Vec::new()
    } else {
        kept.iter()
            .map(|&k| k as f64 / bootstrap_rounds as f64)
            .collect()
    };
    TruthReport {
        ranking,
        totals,
        adjacent_stability,
        bootstrap_rounds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    pub d1: u32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub replicates: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
    pub min: u32,
    pub max: u32,
    /// Every even value from 0 to the largest possible distance.
    pub histogram: Vec<HistogramBin>,
}

/// d1 values of one format across all replicates, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyDistribution {
    pub format: FormatId,
    pub team_count: usize,
    #[serde(skip)]
    pub d1_values: Vec<u32>,
    pub summary: DistributionSummary,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl DiscrepancyDistribution {
    pub fn new(format: FormatId, team_count: usize, d1_values: Vec<u32>) -> Self {
        assert!(
            !d1_values.is_empty(),
            "distribution needs at least one value"
        );
        let len = d1_values.len() as f64;
        let sum: u64 = d1_values.iter().map(|&d| u64::from(d)).sum();
        let mean = sum as f64 / len;
        let var = d1_values
            .iter()
            .map(|&d| (f64::from(d) - mean).powi(2))
            .sum::<f64>()
            / (len - 1.0).max(1.0);
        let mut sorted: Vec<f64> = d1_values.iter().map(|&d| f64::from(d)).collect();
        sorted.sort_by(f64::total_cmp);

        let cap = max_l1_distance(team_count);
        let mut histogram: Vec<HistogramBin> = (0..=cap / 2)
            .map(|i| HistogramBin {
                d1: 2 * i,
                count: 0,
            })
            .collect();
        for &d in &d1_values {
            if let Some(bin) = histogram.get_mut((d / 2) as usize) {
                bin.count += 1;
            }
        }
        let summary = DistributionSummary {
            replicates: d1_values.len(),
            mean,
            std_dev: var.sqrt(),
            median: quantile(&sorted, 0.5),
            p05: quantile(&sorted, 0.05),
            p95: quantile(&sorted, 0.95),
            min: *d1_values.iter().min().unwrap(),
            max: *d1_values.iter().max().unwrap(),
            histogram,
        };
        Self {
            format,
            team_count,
            d1_values,
            summary,
        }
    }

    pub fn mean(&self) -> f64 {
        self.summary.mean
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        self.summary.std_dev / (self.d1_values.len() as f64).sqrt()
    }
}

/// Runs `config.replicates` executions of every plan against `pool` and
/// scores each final ranking against `truth`.
///
/// Under truth seeding, `truth` also supplies the seeds.
pub fn run_experiment(
    config: &ExperimentConfig,
    pool: &ResultPool,
    truth: &Ranking,
) -> Result<Vec<DiscrepancyDistribution>, ExperimentError> {
    let n = pool.team_count();
    if config.replicates == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    if config.plans.is_empty() {
        return Err(ExperimentError::NoFormats);
    }
    if truth.len() != n {
        return Err(ExperimentError::TruthSize {
            truth: truth.len(),
            pool: n,
        });
    }
    let plans = config
        .plans
        .iter()
        .map(|id| Ok(id.plan(n)?.with_seeding(config.seeding)))
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count_hint.max(1))
        .build()
        .map_err(|e| ExperimentError::Workers(e.to_string()))?;
    workers.install(|| {
        plans
            .iter()
            .map(|plan| {
                let tag = plan.id.stream_tag();
                let d1 = (0..config.replicates)
                    .into_par_iter()
                    .map(|k| {
                        let mut rng = replicate_stream(config.master_seed, tag, k as u64);
                        let outcome = execute(plan, pool, &mut rng, Some(truth))?;
                        Ok(l1_distance(&outcome.final_ranking, truth)?)
                    })
                    .collect::<Result<Vec<u32>, ExperimentError>>()?;
                Ok(DiscrepancyDistribution::new(plan.id, n, d1))
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormatRow {
    pub format: FormatId,
    pub mean: f64,
    pub standard_error: f64,
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
}

/// `mean(first) - mean(second)` with a percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub first: FormatId,
    pub second: FormatId,
    pub mean_difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub excludes_zero: bool,
    /// Format with the lower mean d1, when the interval excludes zero.
    pub better: Option<FormatId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub confidence: f64,
    pub resamples: usize,
    pub formats: Vec<FormatRow>,
    pub pairwise: Vec<PairwiseComparison>,
    /// Formats by ascending mean d1 (closest to the truth first).
    pub ordering: Vec<FormatId>,
    /// False when any neighbouring pair in `ordering` has an interval
    /// covering zero.
    pub conclusive: bool,
}

impl ComparisonReport {
    pub fn pair(&self, first: FormatId, second: FormatId) -> Option<&PairwiseComparison> {
        self.pairwise
            .iter()
            .find(|p| p.first == first && p.second == second)
    }
}

const CONFIDENCE: f64 = 0.95;

/// Summary table plus pairwise bootstrap intervals on mean differences.
/// Each distribution is resampled independently; resample `r` of pair `i`
/// uses the stream keyed by `(seed, i, r)`.
pub fn compare_formats(
    distributions: &[DiscrepancyDistribution],
    resamples: usize,
    seed: u64,
) -> Result<ComparisonReport, ExperimentError> {
    if distributions.len() < 2 {
        return Err(ExperimentError::TooFewDistributions(distributions.len()));
    }
    if resamples == 0 {
        return Err(ExperimentError::NoResamples);
    }
    let head = &distributions[0];
    for d in &distributions[1..] {
        if d.d1_values.len() != head.d1_values.len() {
            return Err(ExperimentError::ReplicateMismatch {
                first: head.format,
                first_len: head.d1_values.len(),
                second: d.format,
                second_len: d.d1_values.len(),
            });
        }
    }

    let formats = distributions
        .iter()
        .map(|d| FormatRow {
            format: d.format,
            mean: d.summary.mean,
            standard_error: d.standard_error(),
            median: d.summary.median,
            p05: d.summary.p05,
            p95: d.summary.p95,
        })
        .collect();

    let mut pairwise = Vec::new();
    let mut pair_index = 0u64;
    for (i, a) in distributions.iter().enumerate() {
        for b in &distributions[i + 1..] {
            pairwise.push(bootstrap_difference(a, b, resamples, seed, pair_index));
            pair_index += 1;
        }
    }

    let mut ordering: Vec<&DiscrepancyDistribution> = distributions.iter().collect();
    ordering.sort_by(|x, y| x.mean().total_cmp(&y.mean()));
    let conclusive = ordering.windows(2).all(|w| {
        pairwise
            .iter()
            .find(|p| {
                (p.first == w[0].format && p.second == w[1].format)
                    || (p.first == w[1].format && p.second == w[0].format)
            })
            .is_some_and(|p| p.excludes_zero)
    });
    Ok(ComparisonReport {
        confidence: CONFIDENCE,
        resamples,
        formats,
        pairwise,
        ordering: ordering.iter().map(|d| d.format).collect(),
        conclusive,
    })
}

fn resampled_mean<R: Rng>(values: &[u32], rng: &mut R) -> f64 {
    let sum: u64 = (0..values.len())
        .map(|_| u64::from(values[rng.random_range(0..values.len())]))
        .sum();
    sum as f64 / values.len() as f64
}

fn bootstrap_difference(
    a: &DiscrepancyDistribution,
    b: &DiscrepancyDistribution,
    resamples: usize,
    seed: u64,
    pair_index: u64,
) -> PairwiseComparison {
    let mut diffs: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_stream(seed, domain::COMPARISON, pair_index, r as u64);
            resampled_mean(&a.d1_values, &mut rng) - resampled_mean(&b.d1_values, &mut rng)
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - CONFIDENCE) / 2.0;
    let ci_low = quantile(&diffs, tail);
    let ci_high = quantile(&diffs, 1.0 - tail);
    let mean_difference = a.mean() - b.mean();
    let excludes_zero = ci_low > 0.0 || ci_high < 0.0;
    let better = excludes_zero.then_some(if mean_difference < 0.0 {
        a.format
    } else {
        b.format
    });
    PairwiseComparison {
        first: a.format,
        second: b.format,
        mean_difference,
        ci_low,
        ci_high,
        excludes_zero,
        better,
    }
}

/// `format,replicate,d1`, one row per replicate.
pub fn write_distribution_csv<W: Write>(
    distributions: &[DiscrepancyDistribution],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "format,replicate,d1")?;
    for d in distributions {
        let token = d.format.token();
        for (k, v) in d.d1_values.iter().enumerate() {
            writeln!(out, "{token},{k},{v}")?;
        }
    }
    Ok(())
}

/// `format,d1,count` over the even bins of every distribution.
pub fn write_histogram_csv<W: Write>(
    distributions: &[DiscrepancyDistribution],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "format,d1,count")?;
    for d in distributions {
        let token = d.format.token();
        for bin in &d.summary.histogram {
            writeln!(out, "{token},{},{}", bin.d1, bin.count)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TruthEcho {
    pub scheme: SchemeKind,
    /// Team names, rank 1 first.
    pub ranking: Vec<String>,
}

/// The structured summary document of one experiment.
#[derive(Debug, Serialize)]
pub struct ExperimentSummary<'a> {
    pub master_seed: u64,
    pub config: &'a ExperimentConfig,
    pub team_count: usize,
    pub truth: TruthEcho,
    pub distributions: &'a [DiscrepancyDistribution],
    pub comparison: Option<&'a ComparisonReport>,
}

impl<'a> ExperimentSummary<'a> {
    pub fn new(
        config: &'a ExperimentConfig,
        teams: &TeamSet,
        truth: &Ranking,
        distributions: &'a [DiscrepancyDistribution],
        comparison: Option<&'a ComparisonReport>,
    ) -> Self {
        Self {
            master_seed: config.master_seed,
            config,
            team_count: teams.len(),
            truth: TruthEcho {
                scheme: config.scheme,
                ranking: truth
                    .order()
                    .into_iter()
                    .map(|t: TeamId| teams.name(t).to_owned())
                    .collect(),
            },
            distributions,
            comparison,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}
