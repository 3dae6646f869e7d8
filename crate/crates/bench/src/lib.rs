//! Shared fixtures for the benchmarks.

use tourney_core::{generate_synthetic_pool, ResultPool, SyntheticModel, TeamId, TeamSet};

/// Eight-team pool with 1000 games per pair, moderate upset and draw rates,
/// and a rock-paper-scissors cycle among teams 3, 4 and 5.
pub fn calibrated_pool(seed: u64) -> ResultPool {
    let mut model = SyntheticModel::strength_ladder(TeamSet::numbered(8), 0.25, 1.6, seed)
        .expect("valid ladder");
    model.set_offset(TeamId(5), TeamId(3), 0.35);
    model.set_offset(TeamId(3), TeamId(5), -0.35);
    generate_synthetic_pool(&model, 1000).expect("valid model")
}
