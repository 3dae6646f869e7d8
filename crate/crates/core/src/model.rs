//! Teams, scorelines and empirical result pools.
//!
//! A [`ResultPool`] holds every observed game for every unordered pair of
//! teams, oriented so the first goal count belongs to the lower-indexed team.
//! Tournaments are replayed by drawing from these per-pair lists with
//! replacement.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Deserialize;
use thiserror::Error;

use crate::stream::{derive_stream, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeamId(pub usize);

impl TeamId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Ordered set of team names; a team's position is its [`TeamId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamSet {
    names: Vec<String>,
}

impl TeamSet {
    /// Fails on duplicate names.
    pub fn new<I, S>(names: I) -> Result<Self, PoolError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(PoolError::DuplicateTeam(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Teams named `T0`, `T1`, ...
    pub fn numbered(n: usize) -> Self {
        Self {
            names: (0..n).map(|i| format!("T{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, team: TeamId) -> &str {
        &self.names[team.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn find(&self, name: &str) -> Option<TeamId> {
        self.names.iter().position(|n| n == name).map(TeamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = TeamId> + '_ {
        (0..self.names.len()).map(TeamId)
    }
}

/// One observed game result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scoreline {
    pub goals_first: u32,
    pub goals_second: u32,
}

impl Scoreline {
    pub const fn new(goals_first: u32, goals_second: u32) -> Self {
        Self {
            goals_first,
            goals_second,
        }
    }

    /// Same game seen from the other side.
    pub const fn swapped(self) -> Self {
        Self::new(self.goals_second, self.goals_first)
    }

    pub fn is_draw(self) -> bool {
        self.goals_first == self.goals_second
    }
}

impl fmt::Display for Scoreline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.goals_first, self.goals_second)
    }
}

/// Index of the unordered pair `{a, b}` in a row-major upper triangle.
pub(crate) fn pair_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a != b && a < n && b < n);
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Calls `f(i, j)` for every `i < j`, in canonical order.
pub(crate) fn for_each_pair(n: usize, mut f: impl FnMut(usize, usize)) {
    for i in 0..n {
        for j in i + 1..n {
            f(i, j);
        }
    }
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header `team_a,team_b,goals_a,goals_b`, found `{0}`")]
    BadHeader(String),
    #[error("game file is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: team `{team}` cannot play itself")]
    SelfPlay { line: usize, team: String },
    #[error("no games recorded between `{first}` and `{second}`")]
    MissingPair { first: String, second: String },
    #[error("a pool needs at least 2 teams, found {0}")]
    TooFewTeams(usize),
    #[error("duplicate team name `{0}`")]
    DuplicateTeam(String),
    #[error("expected {expected} pair lists for {teams} teams, got {actual}")]
    PairShape {
        teams: usize,
        expected: usize,
        actual: usize,
    },
}

/// Observed games for every unordered pair of teams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPool {
    teams: TeamSet,
    // canonical pair order, goals_first = lower index
    games: Vec<Vec<Scoreline>>,
}

impl ResultPool {
    /// `games` must list pairs in canonical order `(0,1), (0,2), ..., (n-2,n-1)`,
    /// each oriented lower index first and non-empty.
    pub fn from_pairs(teams: TeamSet, games: Vec<Vec<Scoreline>>) -> Result<Self, PoolError> {
        let n = teams.len();
        if n < 2 {
            return Err(PoolError::TooFewTeams(n));
        }
        if games.len() != pair_count(n) {
            return Err(PoolError::PairShape {
                teams: n,
                expected: pair_count(n),
                actual: games.len(),
            });
        }
        let mut missing = None;
        for_each_pair(n, |i, j| {
            if missing.is_none() && games[pair_index(n, i, j)].is_empty() {
                missing = Some((i, j));
            }
        });
        if let Some((i, j)) = missing {
            return Err(PoolError::MissingPair {
                first: teams.name(TeamId(i)).to_owned(),
                second: teams.name(TeamId(j)).to_owned(),
            });
        }
        Ok(Self { teams, games })
    }

    /// Builds a pool from a function giving the canonical games of `(i, j)`, `i < j`.
    pub fn from_fn(
        teams: TeamSet,
        mut games: impl FnMut(TeamId, TeamId) -> Vec<Scoreline>,
    ) -> Result<Self, PoolError> {
        let n = teams.len();
        let mut lists = Vec::with_capacity(pair_count(n));
        for_each_pair(n, |i, j| lists.push(games(TeamId(i), TeamId(j))));
        Self::from_pairs(teams, lists)
    }

    pub fn teams(&self) -> &TeamSet {
        &self.teams
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    /// Games between `first` and `second`, oriented lower index first.
    pub fn canonical_games(&self, first: TeamId, second: TeamId) -> &[Scoreline] {
        &self.games[pair_index(self.team_count(), first.0, second.0)]
    }

    /// Games between `first` and `second`, oriented as asked.
    pub fn games_between(&self, first: TeamId, second: TeamId) -> Vec<Scoreline> {
        let games = self.canonical_games(first, second);
        if first < second {
            games.to_vec()
        } else {
            games.iter().map(|s| s.swapped()).collect()
        }
    }

    /// `(lower, higher, games)` for every pair, in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (TeamId, TeamId, &[Scoreline])> + '_ {
        let n = self.team_count();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .map(move |(i, j)| {
                (
                    TeamId(i),
                    TeamId(j),
                    self.games[pair_index(n, i, j)].as_slice(),
                )
            })
    }

    pub fn total_games(&self) -> usize {
        self.games.iter().map(Vec::len).sum()
    }

    /// Draws one game uniformly with replacement from the pair's pool,
    /// oriented as `(first, second)`.
    pub fn sample_game<R: Rng + ?Sized>(
        &self,
        first: TeamId,
        second: TeamId,
        rng: &mut R,
    ) -> Scoreline {
        assert_ne!(first, second, "a team cannot play itself");
        let games = self.canonical_games(first, second);
        let game = games[rng.random_range(0..games.len())];
        if first < second {
            game
        } else {
            game.swapped()
        }
    }

    pub fn summary(&self, first: TeamId, second: TeamId) -> PairSummary {
        let mut summary = PairSummary::default();
        let games = self.canonical_games(first, second);
        let (mut gf, mut gs, mut pf, mut ps) = (0u64, 0u64, 0u64, 0u64);
        for &game in games {
            let game = if first < second { game } else { game.swapped() };
            let (a, b) = crate::ranking::game_points(game);
            gf += u64::from(game.goals_first);
            gs += u64::from(game.goals_second);
            pf += u64::from(a);
            ps += u64::from(b);
        }
        let count = games.len() as f64;
        summary.games = games.len();
        summary.mean_goals_first = gf as f64 / count;
        summary.mean_goals_second = gs as f64 / count;
        summary.mean_points_first = pf as f64 / count;
        summary.mean_points_second = ps as f64 / count;
        summary
    }
}

/// Per-pair averages over every recorded game, oriented as requested.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairSummary {
    pub mean_goals_first: f64,
    pub mean_goals_second: f64,
    pub mean_points_first: f64,
    pub mean_points_second: f64,
    pub games: usize,
}

const HEADER: &str = "team_a,team_b,goals_a,goals_b";

/// Reads a game-record CSV. Team ids are assigned in order of first appearance.
pub fn load_pool<R: BufRead>(reader: R) -> Result<ResultPool, PoolError> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(PoolError::Empty),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    if header.trim().trim_start_matches('\u{feff}') != HEADER {
        return Err(PoolError::BadHeader(header));
    }

    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(usize, usize, Scoreline)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| PoolError::Malformed {
            line: line_no,
            reason,
        };
        if line.contains('"') {
            return Err(malformed("quoted fields are not supported".into()));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(malformed(format!(
                "expected 4 fields, found {}",
                fields.len()
            )));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(malformed("empty team name".into()));
        }
        let goals = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| malformed(format!("`{s}` is not a non-negative integer goal count")))
        };
        let goals_a = goals(fields[2])?;
        let goals_b = goals(fields[3])?;
        if fields[0] == fields[1] {
            return Err(PoolError::SelfPlay {
                line: line_no,
                team: fields[0].to_owned(),
            });
        }
        let mut intern = |name: &str| {
            *index.entry(name.to_owned()).or_insert_with(|| {
                names.push(name.to_owned());
                names.len() - 1
            })
        };
        let a = intern(fields[0]);
        let b = intern(fields[1]);
        rows.push((a, b, Scoreline::new(goals_a, goals_b)));
    }

    let n = names.len();
    if n < 2 {
        return Err(PoolError::TooFewTeams(n));
    }
    let mut games = vec![Vec::new(); pair_count(n)];
    for (a, b, score) in rows {
        let oriented = if a < b { score } else { score.swapped() };
        games[pair_index(n, a, b)].push(oriented);
    }
    ResultPool::from_pairs(TeamSet { names }, games)
}

/// Writes a pool in the game-record format, pairs in canonical order.
pub fn write_pool<W: Write>(pool: &ResultPool, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for (a, b, games) in pool.pairs() {
        let (na, nb) = (pool.teams.name(a), pool.teams.name(b));
        for game in games {
            writeln!(out, "{na},{nb},{},{}", game.goals_first, game.goals_second)?;
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("base_rate must be positive and finite, got {0}")]
    BaseRate(f64),
    #[error("games per pair must be at least 1")]
    NoGames,
    #[error("field `{field}` must be finite (team `{team}`)")]
    NonFinite { field: &'static str, team: String },
    #[error("`{field}` has {actual} entries, expected {expected}")]
    Shape {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("nontransitivity entry refers to unknown team `{0}`")]
    UnknownTeam(String),
    #[error("nontransitivity entry pairs `{0}` with itself")]
    SelfOffset(String),
    #[error("expected rate {rate} for `{first}` vs `{second}` is not usable")]
    Rate {
        first: String,
        second: String,
        rate: f64,
    },
    #[error(transparent)]
    Teams(#[from] PoolError),
    #[error("model file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Independent-Poisson goal model with log-linear strengths.
///
/// Expected goals for `a` against `b` are
/// `base_rate * exp(attack[a] - defense[b] + nontransitivity[a][b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pub teams: TeamSet,
    pub attack: Vec<f64>,
    pub defense: Vec<f64>,
    pub base_rate: f64,
    /// Row-major `n x n`; entry `[a * n + b]` shifts `a`'s log-rate against `b`.
    pub nontransitivity: Vec<f64>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    base_rate: f64,
    #[serde(default)]
    seed: u64,
    team: Vec<TeamEntry>,
    #[serde(default)]
    nontransitivity: Vec<OffsetEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TeamEntry {
    name: String,
    #[serde(default)]
    attack: f64,
    #[serde(default)]
    defense: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OffsetEntry {
    team_a: String,
    team_b: String,
    offset: f64,
}

impl SyntheticModel {
    /// Model with zero non-transitivity.
    pub fn new(
        teams: TeamSet,
        attack: Vec<f64>,
        defense: Vec<f64>,
        base_rate: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let n = teams.len();
        let model = Self {
            teams,
            attack,
            defense,
            base_rate,
            nontransitivity: vec![0.0; n * n],
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    /// Teams evenly spaced in strength: team `i` has log-strength
    /// `-step * i`, split equally between attack and defense, so adjacent
    /// teams differ by a factor `exp(step / 2)` in each side's expected goals.
    pub fn strength_ladder(
        teams: TeamSet,
        step: f64,
        base_rate: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let half: Vec<f64> = (0..teams.len()).map(|i| -step * i as f64 / 2.0).collect();
        Self::new(teams, half.clone(), half, base_rate, seed)
    }

    /// Sets the offset applied to `first`'s log-rate when facing `second`.
    pub fn set_offset(&mut self, first: TeamId, second: TeamId, offset: f64) {
        let n = self.teams.len();
        self.nontransitivity[first.0 * n + second.0] = offset;
    }

    /// Parses the key = value model file.
    ///
    /// ```toml
    /// base_rate = 1.6
    /// seed = 7
    ///
    /// [[team]]
    /// name = "Alpha"
    /// attack = 0.5
    /// defense = 0.5
    ///
    /// [[nontransitivity]]
    /// team_a = "Alpha"
    /// team_b = "Bravo"
    /// offset = -0.3
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = toml::from_str(text)?;
        let teams = TeamSet::new(file.team.iter().map(|t| t.name.clone()))?;
        let mut model = Self::new(
            teams,
            file.team.iter().map(|t| t.attack).collect(),
            file.team.iter().map(|t| t.defense).collect(),
            file.base_rate,
            file.seed,
        )?;
        for entry in &file.nontransitivity {
            let a = model
                .teams
                .find(&entry.team_a)
                .ok_or_else(|| ModelError::UnknownTeam(entry.team_a.clone()))?;
            let b = model
                .teams
                .find(&entry.team_b)
                .ok_or_else(|| ModelError::UnknownTeam(entry.team_b.clone()))?;
            if a == b {
                return Err(ModelError::SelfOffset(entry.team_a.clone()));
            }
            if !entry.offset.is_finite() {
                return Err(ModelError::NonFinite {
                    field: "offset",
                    team: entry.team_a.clone(),
                });
            }
            model.set_offset(a, b, entry.offset);
        }
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.teams.len();
        if n < 2 {
            return Err(PoolError::TooFewTeams(n).into());
        }
        if !(self.base_rate.is_finite() && self.base_rate > 0.0) {
            return Err(ModelError::BaseRate(self.base_rate));
        }
        for (field, values, expected) in [
            ("attack", &self.attack, n),
            ("defense", &self.defense, n),
            ("nontransitivity", &self.nontransitivity, n * n),
        ] {
            if values.len() != expected {
                return Err(ModelError::Shape {
                    field,
                    expected,
                    actual: values.len(),
                });
            }
        }
        for team in self.teams.ids() {
            for (field, value) in [
                ("attack", self.attack[team.0]),
                ("defense", self.defense[team.0]),
            ] {
                if !value.is_finite() {
                    return Err(ModelError::NonFinite {
                        field,
                        team: self.teams.name(team).to_owned(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn expected_goals(&self, first: TeamId, second: TeamId) -> f64 {
        let n = self.teams.len();
        self.base_rate
            * (self.attack[first.0] - self.defense[second.0]
                + self.nontransitivity[first.0 * n + second.0])
                .exp()
    }
}

/// Draws `games_per_pair` games for every pair; a pure function of the model
/// (seed included) and `games_per_pair`.
pub fn generate_synthetic_pool(
    model: &SyntheticModel,
    games_per_pair: usize,
) -> Result<ResultPool, ModelError> {
    model.validate()?;
    if games_per_pair == 0 {
        return Err(ModelError::NoGames);
    }
    let n = model.teams.len();
    let mut rng = derive_stream(model.seed, domain::SYNTHETIC_POOL, n as u64, 0);
    let mut lists = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (TeamId(i), TeamId(j));
            let law = |first: TeamId, second: TeamId| {
                let rate = model.expected_goals(first, second);
                Poisson::new(rate).map_err(|_| ModelError::Rate {
                    first: model.teams.name(first).to_owned(),
                    second: model.teams.name(second).to_owned(),
                    rate,
                })
            };
            let (first_law, second_law) = (law(a, b)?, law(b, a)?);
            let games = (0..games_per_pair)
                .map(|_| {
                    let gf = first_law.sample(&mut rng);
                    let gs = second_law.sample(&mut rng);
                    Scoreline::new(gf as u32, gs as u32)
                })
                .collect();
            lists.push(games);
        }
    }
    Ok(ResultPool::from_pairs(model.teams.clone(), lists)?)
}
