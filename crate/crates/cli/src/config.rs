//! Experiment config file for `simulate`.
//!
//! ```toml
//! games = "games.csv"            # relative to this file
//! truth = "truth/ranking.txt"    # optional; computed from the pool if absent
//! plans = ["rc2012", "rc2013-de", "rc2014-hybrid"]
//! replicates = 10000
//! seed = 1
//! scheme = "continuous"          # or "discrete"
//! seeding = "random"             # or "truth"
//! comparison_resamples = 1000
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use tourney_core::montecarlo::{DEFAULT_COMPARISON_RESAMPLES, DEFAULT_REPLICATES};
use tourney_core::{ExperimentConfig, FormatId, SchemeKind, SeedingPolicy};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    games: PathBuf,
    truth: Option<PathBuf>,
    plans: Vec<String>,
    #[serde(default = "default_replicates")]
    replicates: usize,
    seed: u64,
    #[serde(default)]
    scheme: Option<String>,
    #[serde(default)]
    seeding: Option<String>,
    #[serde(default = "default_resamples")]
    comparison_resamples: usize,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_resamples() -> usize {
    DEFAULT_COMPARISON_RESAMPLES
}

#[derive(Debug)]
pub struct SimulateConfig {
    pub games: PathBuf,
    pub truth: Option<PathBuf>,
    pub experiment: ExperimentConfig,
}

impl SimulateConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        if raw.plans.is_empty() {
            bail!("`plans` is empty");
        }
        let mut plans = Vec::with_capacity(raw.plans.len());
        for token in &raw.plans {
            let id: FormatId = token.parse()?;
            if plans.contains(&id) {
                bail!("format `{token}` listed twice");
            }
            plans.push(id);
        }
        if raw.replicates == 0 {
            bail!("`replicates` must be at least 1");
        }
        if raw.comparison_resamples == 0 {
            bail!("`comparison_resamples` must be at least 1");
        }
        let scheme = match raw.scheme {
            Some(s) => s.parse::<SchemeKind>().map_err(|e| anyhow!(e))?,
            None => SchemeKind::Continuous,
        };
        let seeding = match raw.seeding {
            Some(s) => s.parse::<SeedingPolicy>().map_err(|e| anyhow!(e))?,
            None => SeedingPolicy::RandomPerReplicate,
        };
        Ok(Self {
            games: base.join(raw.games),
            truth: raw.truth.map(|t| base.join(t)),
            experiment: ExperimentConfig {
                plans,
                replicates: raw.replicates,
                master_seed: raw.seed,
                scheme,
                seeding,
                comparison_resamples: raw.comparison_resamples,
                worker_count_hint: 1,
            },
        })
    }
}
