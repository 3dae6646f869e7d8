//! Monte Carlo evaluation of tournament formats.
//!
//! The crate derives a reference ("true") ranking from a large pool of
//! pairwise game results, replays candidate tournament formats by sampling
//! games from that pool with replacement, and measures how far each
//! simulated final ranking lands from the reference using the L1 distance
//! between rank vectors.
//!
//! Module map:
//! - [`model`]: teams, scorelines, result pools, synthetic pool generation
//! - [`ranking`]: point schemes, tie-broken rankings, L1 rank distance
//! - [`formats`]: declarative format plans and their execution engine
//! - [`montecarlo`]: truth estimation, replicate experiments, comparisons
//! - [`stream`]: keyed random streams for reproducible parallel work

pub mod formats;
pub mod model;
pub mod montecarlo;
pub mod ranking;
pub mod stream;

pub use formats::{execute, FormatError, FormatId, FormatPlan, SeedingPolicy, TournamentOutcome};
pub use model::{
    generate_synthetic_pool, load_pool, write_pool, ModelError, PairSummary, PoolError, ResultPool,
    Scoreline, SyntheticModel, TeamId, TeamSet,
};
pub use montecarlo::{
    compare_formats, estimate_truth, run_experiment, ComparisonReport, DiscrepancyDistribution,
    ExperimentConfig, ExperimentError, TruthReport,
};
pub use ranking::{
    continuous_totals, discrete_totals, game_points, l1_distance, rank_from_points, PointsTable,
    Ranking, RankingError, SchemeKind,
};
