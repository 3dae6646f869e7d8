//! Tournament formats as declarative plans, and the engine that plays them.
//!
//! A [`FormatPlan`] is a list of stages wired together through [`Slot`]s:
//! seeded positions, group placements, and the winner or loser of a
//! knockout tie. Every stage consumes some live slots and produces the same
//! number of new ones, so the plan's `standings` (one slot per final rank)
//! always resolve to a permutation of the teams.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{ResultPool, Scoreline, TeamId, TeamSet};
use crate::ranking::{PointsTable, Ranking, ResultTally, SchemeKind};

/// Knockout draws are re-sampled from the pair's pool at most this many
/// times before a coin decides.
pub const DRAW_RESAMPLE_CAP: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormatId {
    /// Two groups of four, two-legged semifinals, four classification games.
    Rc2012,
    /// Eight-team double elimination (14 games) plus two classification games.
    Rc2013DoubleElim,
    /// Full round-robin followed by 1v2, 3v4, 5v6, 7v8 classification games.
    Rc2014Hybrid,
    RoundRobin {
        games_per_pairing: u32,
    },
    /// Four-team single elimination with a third-place game.
    Knockout4,
}

pub const VALID_TOKENS: &str = "rc2012, rc2013-de, rc2014-hybrid, round-robin:<g>, knockout4";

impl FormatId {
    pub fn token(&self) -> String {
        match self {
            FormatId::Rc2012 => "rc2012".into(),
            FormatId::Rc2013DoubleElim => "rc2013-de".into(),
            FormatId::Rc2014Hybrid => "rc2014-hybrid".into(),
            FormatId::RoundRobin { games_per_pairing } => {
                format!("round-robin:{games_per_pairing}")
            }
            FormatId::Knockout4 => "knockout4".into(),
        }
    }

    /// Stable per-format key for replicate stream derivation.
    pub fn stream_tag(&self) -> u64 {
        match self {
            FormatId::Rc2012 => 2012,
            FormatId::Rc2013DoubleElim => 2013,
            FormatId::Rc2014Hybrid => 2014,
            FormatId::Knockout4 => 4,
            FormatId::RoundRobin { games_per_pairing } => (1 << 32) | u64::from(*games_per_pairing),
        }
    }

    /// Builds the plan for `teams` teams.
    pub fn plan(&self, teams: usize) -> Result<FormatPlan, FormatError> {
        let fixed = |required: usize| {
            if teams == required {
                Ok(())
            } else {
                Err(FormatError::UnsupportedSize {
                    format: *self,
                    required,
                    actual: teams,
                })
            }
        };
        match *self {
            FormatId::Rc2012 => fixed(8).map(|_| FormatPlan::rc2012()),
            FormatId::Rc2013DoubleElim => fixed(8).map(|_| FormatPlan::rc2013_double_elim()),
            FormatId::Rc2014Hybrid => fixed(8).map(|_| FormatPlan::rc2014_hybrid()),
            FormatId::Knockout4 => fixed(4).map(|_| FormatPlan::knockout4()),
            FormatId::RoundRobin { games_per_pairing } => {
                FormatPlan::round_robin(teams, games_per_pairing)
            }
        }
    }
}

impl fmt::Display for FormatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for FormatId {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || FormatError::UnknownToken(s.to_owned());
        match s {
            "rc2012" => Ok(FormatId::Rc2012),
            "rc2013-de" => Ok(FormatId::Rc2013DoubleElim),
            "rc2014-hybrid" => Ok(FormatId::Rc2014Hybrid),
            "knockout4" => Ok(FormatId::Knockout4),
            _ => {
                let g = s.strip_prefix("round-robin:").ok_or_else(unknown)?;
                match g.parse::<u32>() {
                    Ok(games_per_pairing) if games_per_pairing >= 1 => {
                        Ok(FormatId::RoundRobin { games_per_pairing })
                    }
                    _ => Err(unknown()),
                }
            }
        }
    }
}

impl Serialize for FormatId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedingPolicy {
    /// Fresh uniform permutation of teams into seed positions per execution.
    #[default]
    RandomPerReplicate,
    /// Seed position `k` holds the team ranked `k + 1` in a supplied ranking.
    TruthSeeded,
}

impl FromStr for SeedingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" | "random-per-replicate" => Ok(SeedingPolicy::RandomPerReplicate),
            "truth" | "truth-seeded" => Ok(SeedingPolicy::TruthSeeded),
            other => Err(format!(
                "unknown seeding `{other}` (expected `random` or `truth`)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TieId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(pub usize);

/// Where a participant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Seed position, 0-based.
    Seed(usize),
    /// Final place within a round-robin group, 0-based.
    GroupPlace {
        group: GroupId,
        place: usize,
    },
    Winner(TieId),
    Loser(TieId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub id: GroupId,
    pub members: Vec<Slot>,
}

/// A knockout pairing that must produce a winner and a loser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tie {
    pub id: TieId,
    pub label: String,
    pub first: Slot,
    pub second: Slot,
}

impl Tie {
    fn new(id: usize, label: impl Into<String>, first: Slot, second: Slot) -> Self {
        Self {
            id: TieId(id),
            label: label.into(),
            first,
            second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elimination {
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageKind {
    /// Everyone in a group meets everyone else `games_per_pairing` times;
    /// places come from in-tournament points with the usual tie-breaks.
    GroupRoundRobin {
        groups: Vec<Group>,
        games_per_pairing: u32,
    },
    /// Single-game ties played in order; later ties may use earlier results.
    Bracket {
        structure: Elimination,
        ties: Vec<Tie>,
    },
    /// One game whose winner takes rank `upper_rank`, loser `upper_rank + 1`.
    ClassificationPair { tie: Tie, upper_rank: u32 },
    /// Two games; aggregate goals decide.
    TwoLeggedTie { tie: Tie },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub name: String,
    pub kind: StageKind,
}

impl StageSpec {
    fn new(name: impl Into<String>, kind: StageKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    fn fixture_count(&self) -> usize {
        match &self.kind {
            StageKind::GroupRoundRobin {
                groups,
                games_per_pairing,
            } => {
                groups
                    .iter()
                    .map(|g| g.members.len() * g.members.len().saturating_sub(1) / 2)
                    .sum::<usize>()
                    * *games_per_pairing as usize
            }
            StageKind::Bracket { ties, .. } => ties.len(),
            StageKind::ClassificationPair { .. } => 1,
            StageKind::TwoLeggedTie { .. } => 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unknown format `{0}` (valid: {VALID_TOKENS})")]
    UnknownToken(String),
    #[error("{format} needs exactly {required} teams, got {actual}")]
    UnsupportedSize {
        format: FormatId,
        required: usize,
        actual: usize,
    },
    #[error("round-robin needs at least 2 teams and 1 game per pairing")]
    RoundRobinShape,
    #[error("plan is for {plan} teams but the pool has {pool}")]
    TeamCountMismatch { plan: usize, pool: usize },
    #[error("truth-seeded execution needs a seed ranking")]
    MissingSeedRanking,
    #[error("seed ranking covers {actual} teams, expected {expected}")]
    SeedRankingSize { expected: usize, actual: usize },
    #[error("malformed plan: {0}")]
    InvalidPlan(String),
    #[error("played {actual} fixtures, plan requires {expected}")]
    FixtureCount { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormatPlan {
    pub id: FormatId,
    pub team_count: usize,
    pub stages: Vec<StageSpec>,
    /// Slot holding the team that finishes at each rank, rank 1 first.
    pub standings: Vec<Slot>,
    pub seeding: SeedingPolicy,
    fixture_count: usize,
    group_slots: usize,
    tie_slots: usize,
}

impl FormatPlan {
    /// Checks that every slot is produced before it is used, used at most
    /// once, and that the standings consume exactly the slots left live.
    pub fn new(
        id: FormatId,
        team_count: usize,
        stages: Vec<StageSpec>,
        standings: Vec<Slot>,
    ) -> Result<Self, FormatError> {
        fn invalid<T>(msg: String) -> Result<T, FormatError> {
            Err(FormatError::InvalidPlan(msg))
        }
        fn take(slot: Slot, live: &mut HashSet<Slot>) -> Result<(), FormatError> {
            if live.remove(&slot) {
                Ok(())
            } else {
                invalid(format!("slot {slot:?} is not available"))
            }
        }
        fn play_tie(
            tie: &Tie,
            live: &mut HashSet<Slot>,
            seen: &mut HashSet<TieId>,
        ) -> Result<(), FormatError> {
            if !seen.insert(tie.id) {
                return invalid(format!("tie {:?} defined twice", tie.id));
            }
            take(tie.first, live)?;
            take(tie.second, live)?;
            live.insert(Slot::Winner(tie.id));
            live.insert(Slot::Loser(tie.id));
            Ok(())
        }
        let mut live: HashSet<Slot> = (0..team_count).map(Slot::Seed).collect();
        let (mut groups_seen, mut ties_seen) = (HashSet::new(), HashSet::new());
        let mut classification = Vec::new();
        for stage in &stages {
            match &stage.kind {
                StageKind::GroupRoundRobin {
                    groups,
                    games_per_pairing,
                } => {
                    if *games_per_pairing == 0 {
                        return invalid(format!("stage `{}` plays no games", stage.name));
                    }
                    for group in groups {
                        if group.members.len() < 2 || !groups_seen.insert(group.id) {
                            return invalid(format!("bad group {:?}", group.id));
                        }
                        for &m in &group.members {
                            take(m, &mut live)?;
                        }
                    }
                    for group in groups {
                        for place in 0..group.members.len() {
                            live.insert(Slot::GroupPlace {
                                group: group.id,
                                place,
                            });
                        }
                    }
                }
                StageKind::Bracket { ties, .. } => {
                    for tie in ties {
                        play_tie(tie, &mut live, &mut ties_seen)?;
                    }
                }
                StageKind::ClassificationPair { tie, upper_rank } => {
                    play_tie(tie, &mut live, &mut ties_seen)?;
                    classification.push((tie.id, *upper_rank));
                }
                StageKind::TwoLeggedTie { tie } => play_tie(tie, &mut live, &mut ties_seen)?,
            }
        }
        if standings.len() != team_count {
            return invalid(format!(
                "{} standings for {team_count} teams",
                standings.len()
            ));
        }
        for &slot in &standings {
            take(slot, &mut live)?;
        }
        if !live.is_empty() {
            return invalid(format!("{} slots never reach the standings", live.len()));
        }
        for (tie, k) in classification {
            let k = k as usize;
            if k == 0
                || standings.get(k - 1) != Some(&Slot::Winner(tie))
                || standings.get(k) != Some(&Slot::Loser(tie))
            {
                return invalid(format!(
                    "classification {tie:?} does not decide ranks {k}/{}",
                    k + 1
                ));
            }
        }
        let fixture_count = stages.iter().map(StageSpec::fixture_count).sum();
        let group_slots = groups_seen.iter().map(|g| g.0 + 1).max().unwrap_or(0);
        let tie_slots = ties_seen.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        Ok(Self {
            id,
            team_count,
            stages,
            standings,
            seeding: SeedingPolicy::default(),
            fixture_count,
            group_slots,
            tie_slots,
        })
    }

    pub fn with_seeding(mut self, seeding: SeedingPolicy) -> Self {
        self.seeding = seeding;
        self
    }

    /// Games every execution of this plan plays.
    pub fn fixture_count(&self) -> usize {
        self.fixture_count
    }

    /// Label for a fixture: the tie label for knockout games, else the stage name.
    pub fn fixture_label(&self, fixture: &Fixture) -> &str {
        let stage = &self.stages[fixture.stage];
        let tie_label = fixture.tie.and_then(|id| match &stage.kind {
            StageKind::Bracket { ties, .. } => ties.iter().find(|t| t.id == id).map(|t| &t.label),
            StageKind::ClassificationPair { tie, .. } | StageKind::TwoLeggedTie { tie } => {
                Some(&tie.label)
            }
            StageKind::GroupRoundRobin { .. } => None,
        });
        tie_label.map_or(stage.name.as_str(), String::as_str)
    }

    /// Two snake-seeded groups of four ({1,4,5,8} and {2,3,6,7}), two-legged
    /// semifinals A1-B2 and B1-A2, then final, third-place, 5/6 and 7/8 games.
    pub fn rc2012() -> Self {
        let place = |group, place| Slot::GroupPlace {
            group: GroupId(group),
            place,
        };
        let stages = vec![
            StageSpec::new(
                "groups",
                StageKind::GroupRoundRobin {
                    groups: vec![
                        Group {
                            id: GroupId(0),
                            members: [0, 3, 4, 7].map(Slot::Seed).to_vec(),
                        },
                        Group {
                            id: GroupId(1),
                            members: [1, 2, 5, 6].map(Slot::Seed).to_vec(),
                        },
                    ],
                    games_per_pairing: 1,
                },
            ),
            StageSpec::new(
                "semifinal-1",
                StageKind::TwoLeggedTie {
                    tie: Tie::new(0, "semifinal-1", place(0, 0), place(1, 1)),
                },
            ),
            StageSpec::new(
                "semifinal-2",
                StageKind::TwoLeggedTie {
                    tie: Tie::new(1, "semifinal-2", place(1, 0), place(0, 1)),
                },
            ),
            classification(
                2,
                "final",
                Slot::Winner(TieId(0)),
                Slot::Winner(TieId(1)),
                1,
            ),
            classification(
                3,
                "third-place",
                Slot::Loser(TieId(0)),
                Slot::Loser(TieId(1)),
                3,
            ),
            classification(4, "places-5-6", place(0, 2), place(1, 2), 5),
            classification(5, "places-7-8", place(0, 3), place(1, 3), 7),
        ];
        let standings = (2..6)
            .flat_map(|t| [Slot::Winner(TieId(t)), Slot::Loser(TieId(t))])
            .collect();
        Self::new(FormatId::Rc2012, 8, stages, standings).expect("rc2012 plan is well formed")
    }

    /// Winners bracket 4+2+1, losers bracket 2+2+1+1, one grand final
    /// without reset (14 games), then LB round-2 losers play for 5/6 and
    /// LB round-1 losers for 7/8.
    pub fn rc2013_double_elim() -> Self {
        use Slot::{Loser as L, Seed as S, Winner as W};
        let t = TieId;
        let ties = vec![
            Tie::new(0, "wb-quarterfinal-1", S(0), S(7)),
            Tie::new(1, "wb-quarterfinal-2", S(3), S(4)),
            Tie::new(2, "wb-quarterfinal-3", S(1), S(6)),
            Tie::new(3, "wb-quarterfinal-4", S(2), S(5)),
            Tie::new(4, "wb-semifinal-1", W(t(0)), W(t(1))),
            Tie::new(5, "wb-semifinal-2", W(t(2)), W(t(3))),
            Tie::new(6, "wb-final", W(t(4)), W(t(5))),
            Tie::new(7, "lb-round-1a", L(t(0)), L(t(1))),
            Tie::new(8, "lb-round-1b", L(t(2)), L(t(3))),
            // cross-over so semifinal losers avoid an immediate rematch
            Tie::new(9, "lb-round-2a", W(t(7)), L(t(5))),
            Tie::new(10, "lb-round-2b", W(t(8)), L(t(4))),
            Tie::new(11, "lb-round-3", W(t(9)), W(t(10))),
            Tie::new(12, "lb-final", W(t(11)), L(t(6))),
            Tie::new(13, "grand-final", W(t(6)), W(t(12))),
        ];
        let stages = vec![
            StageSpec::new(
                "double-elimination",
                StageKind::Bracket {
                    structure: Elimination::Double,
                    ties,
                },
            ),
            classification(14, "places-5-6", L(t(9)), L(t(10)), 5),
            classification(15, "places-7-8", L(t(7)), L(t(8)), 7),
        ];
        let standings = vec![
            W(t(13)),
            L(t(13)),
            L(t(12)),
            L(t(11)),
            W(t(14)),
            L(t(14)),
            W(t(15)),
            L(t(15)),
        ];
        Self::new(FormatId::Rc2013DoubleElim, 8, stages, standings)
            .expect("rc2013 plan is well formed")
    }

    /// Single round-robin of all eight teams, then 1v2, 3v4, 5v6 and 7v8.
    pub fn rc2014_hybrid() -> Self {
        let place = |place| Slot::GroupPlace {
            group: GroupId(0),
            place,
        };
        let mut stages = vec![StageSpec::new(
            "round-robin",
            StageKind::GroupRoundRobin {
                groups: vec![Group {
                    id: GroupId(0),
                    members: (0..8).map(Slot::Seed).collect(),
                }],
                games_per_pairing: 1,
            },
        )];
        let mut standings = Vec::with_capacity(8);
        for k in 0..4 {
            let upper = 2 * k as u32 + 1;
            let label = match k {
                0 => "final".to_owned(),
                1 => "third-place".to_owned(),
                _ => format!("places-{}-{}", upper, upper + 1),
            };
            stages.push(classification(
                k,
                &label,
                place(2 * k),
                place(2 * k + 1),
                upper,
            ));
            standings.extend([Slot::Winner(TieId(k)), Slot::Loser(TieId(k))]);
        }
        Self::new(FormatId::Rc2014Hybrid, 8, stages, standings).expect("hybrid plan is well formed")
    }

    /// Every pair meets `games_per_pairing` times; final table is the ranking.
    pub fn round_robin(teams: usize, games_per_pairing: u32) -> Result<Self, FormatError> {
        if teams < 2 || games_per_pairing == 0 {
            return Err(FormatError::RoundRobinShape);
        }
        let stages = vec![StageSpec::new(
            "round-robin",
            StageKind::GroupRoundRobin {
                groups: vec![Group {
                    id: GroupId(0),
                    members: (0..teams).map(Slot::Seed).collect(),
                }],
                games_per_pairing,
            },
        )];
        let standings = (0..teams)
            .map(|place| Slot::GroupPlace {
                group: GroupId(0),
                place,
            })
            .collect();
        Self::new(
            FormatId::RoundRobin { games_per_pairing },
            teams,
            stages,
            standings,
        )
    }

    /// Semifinals 1v4 and 2v3, final, third-place game.
    pub fn knockout4() -> Self {
        use Slot::{Loser as L, Seed as S, Winner as W};
        let ties = vec![
            Tie::new(0, "semifinal-1", S(0), S(3)),
            Tie::new(1, "semifinal-2", S(1), S(2)),
            Tie::new(2, "final", W(TieId(0)), W(TieId(1))),
            Tie::new(3, "third-place", L(TieId(0)), L(TieId(1))),
        ];
        let stages = vec![StageSpec::new(
            "knockout",
            StageKind::Bracket {
                structure: Elimination::Single,
                ties,
            },
        )];
        let standings = vec![W(TieId(2)), L(TieId(2)), W(TieId(3)), L(TieId(3))];
        Self::new(FormatId::Knockout4, 4, stages, standings).expect("knockout plan is well formed")
    }
}

fn classification(id: usize, label: &str, first: Slot, second: Slot, upper_rank: u32) -> StageSpec {
    StageSpec::new(
        label,
        StageKind::ClassificationPair {
            tie: Tie::new(id, label, first, second),
            upper_rank,
        },
    )
}

/// How a knockout draw was broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decider {
    /// `attempt`-th extra game from the pair's pool was decisive;
    /// `score` is oriented like the fixture.
    Resampled { attempt: u32, score: Scoreline },
    /// Every extra game was drawn; a fair coin picked the winner.
    Coin { first_won: bool },
}

impl fmt::Display for Decider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decider::Resampled { attempt, score } => write!(f, "replay {attempt}: {score}"),
            Decider::Coin { first_won } => {
                write!(f, "coin: {}", if *first_won { "first" } else { "second" })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// The scoreline stands on its own (group game, decisive knockout game,
    /// first leg).
    Played,
    /// Knockout game drawn and broken by the draw-resolution rule.
    Replay(Decider),
    /// Second leg of a two-legged tie; aggregate goals shown first-second.
    Aggregate {
        first: u32,
        second: u32,
        decider: Option<Decider>,
    },
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Played => Ok(()),
            Resolution::Replay(d) => write!(f, "{d}"),
            Resolution::Aggregate {
                first,
                second,
                decider,
            } => {
                write!(f, "aggregate {first}-{second}")?;
                if let Some(d) = decider {
                    write!(f, "; {d}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    /// Index into the plan's stages.
    pub stage: usize,
    pub tie: Option<TieId>,
    pub first: TeamId,
    pub second: TeamId,
    pub score: Scoreline,
    pub resolution: Resolution,
    /// Team that went through, when this game completed a knockout tie.
    pub advanced: Option<TeamId>,
}

impl Fixture {
    pub fn involves(&self, team: TeamId) -> bool {
        self.first == team || self.second == team
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TournamentOutcome {
    pub format: FormatId,
    pub fixtures: Vec<Fixture>,
    pub final_ranking: Ranking,
    pub games_played_total: usize,
    pub games_played_per_team: Vec<u32>,
}

impl TournamentOutcome {
    /// `stage,team_a,team_b,goals_a,goals_b,resolution`, one fixture per row.
    pub fn write_csv<W: Write>(
        &self,
        plan: &FormatPlan,
        teams: &TeamSet,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "stage,team_a,team_b,goals_a,goals_b,resolution")?;
        for f in &self.fixtures {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                plan.fixture_label(f),
                teams.name(f.first),
                teams.name(f.second),
                f.score.goals_first,
                f.score.goals_second,
                f.resolution
            )?;
        }
        Ok(())
    }
}

struct Execution<'a, R: ?Sized> {
    pool: &'a ResultPool,
    rng: &'a mut R,
    seeds: Vec<TeamId>,
    group_places: Vec<Vec<TeamId>>,
    tie_results: Vec<Option<(TeamId, TeamId)>>,
    fixtures: Vec<Fixture>,
}

impl<R: Rng + ?Sized> Execution<'_, R> {
    fn resolve(&self, slot: Slot) -> Result<TeamId, FormatError> {
        let unresolved = || FormatError::InvalidPlan(format!("slot {slot:?} unresolved"));
        match slot {
            Slot::Seed(k) => self.seeds.get(k).copied().ok_or_else(unresolved),
            Slot::GroupPlace { group, place } => self
                .group_places
                .get(group.0)
                .and_then(|g| g.get(place))
                .copied()
                .ok_or_else(unresolved),
            Slot::Winner(t) => self.tie_results[t.0].map(|(w, _)| w).ok_or_else(unresolved),
            Slot::Loser(t) => self.tie_results[t.0].map(|(_, l)| l).ok_or_else(unresolved),
        }
    }

    /// Extra games until one is decisive, then a coin. Returns whether
    /// `first` won.
    fn break_draw(&mut self, first: TeamId, second: TeamId) -> (bool, Decider) {
        for attempt in 1..=DRAW_RESAMPLE_CAP {
            let score = self.pool.sample_game(first, second, self.rng);
            if !score.is_draw() {
                return (
                    score.goals_first > score.goals_second,
                    Decider::Resampled { attempt, score },
                );
            }
        }
        let first_won = self.rng.random_bool(0.5);
        (first_won, Decider::Coin { first_won })
    }

    fn settle(&mut self, tie: TieId, first: TeamId, second: TeamId, first_won: bool) -> TeamId {
        let (w, l) = if first_won {
            (first, second)
        } else {
            (second, first)
        };
        self.tie_results[tie.0] = Some((w, l));
        w
    }

    fn play_single(&mut self, stage: usize, tie: &Tie) -> Result<(), FormatError> {
        let first = self.resolve(tie.first)?;
        let second = self.resolve(tie.second)?;
        let score = self.pool.sample_game(first, second, self.rng);
        let (first_won, resolution) = if score.is_draw() {
            let (won, decider) = self.break_draw(first, second);
            (won, Resolution::Replay(decider))
        } else {
            (score.goals_first > score.goals_second, Resolution::Played)
        };
        let advanced = self.settle(tie.id, first, second, first_won);
        self.fixtures.push(Fixture {
            stage,
            tie: Some(tie.id),
            first,
            second,
            score,
            resolution,
            advanced: Some(advanced),
        });
        Ok(())
    }

    fn play_two_legs(&mut self, stage: usize, tie: &Tie) -> Result<(), FormatError> {
        let first = self.resolve(tie.first)?;
        let second = self.resolve(tie.second)?;
        let leg1 = self.pool.sample_game(first, second, self.rng);
        let leg2 = self.pool.sample_game(first, second, self.rng);
        let agg_first = leg1.goals_first + leg2.goals_first;
        let agg_second = leg1.goals_second + leg2.goals_second;
        let (first_won, decider) = if agg_first == agg_second {
            let (won, decider) = self.break_draw(first, second);
            (won, Some(decider))
        } else {
            (agg_first > agg_second, None)
        };
        let advanced = self.settle(tie.id, first, second, first_won);
        self.fixtures.push(Fixture {
            stage,
            tie: Some(tie.id),
            first,
            second,
            score: leg1,
            resolution: Resolution::Played,
            advanced: None,
        });
        self.fixtures.push(Fixture {
            stage,
            tie: Some(tie.id),
            first,
            second,
            score: leg2,
            resolution: Resolution::Aggregate {
                first: agg_first,
                second: agg_second,
                decider,
            },
            advanced: Some(advanced),
        });
        Ok(())
    }

    fn play_groups(
        &mut self,
        stage: usize,
        groups: &[Group],
        games_per_pairing: u32,
    ) -> Result<(), FormatError> {
        let mut tally = ResultTally::new(self.pool.team_count());
        for group in groups {
            let mut members = group
                .members
                .iter()
                .map(|&s| self.resolve(s))
                .collect::<Result<Vec<_>, _>>()?;
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    for _ in 0..games_per_pairing {
                        let score = self.pool.sample_game(a, b, self.rng);
                        tally.record(a, b, score);
                        self.fixtures.push(Fixture {
                            stage,
                            tie: None,
                            first: a,
                            second: b,
                            score,
                            resolution: Resolution::Played,
                            advanced: None,
                        });
                    }
                }
            }
            let table = PointsTable::from_tally(&tally, SchemeKind::Continuous);
            table.order(&mut members);
            self.group_places[group.id.0] = members;
        }
        Ok(())
    }
}

/// Plays one tournament. Every game is drawn from `pool`; the result is a
/// deterministic function of `(plan, pool, rng state, seed ranking)`.
///
/// `seed_ranking` is required for [`SeedingPolicy::TruthSeeded`] and
/// ignored otherwise.
pub fn execute<R: Rng + ?Sized>(
    plan: &FormatPlan,
    pool: &ResultPool,
    rng: &mut R,
    seed_ranking: Option<&Ranking>,
) -> Result<TournamentOutcome, FormatError> {
    let n = plan.team_count;
    if pool.team_count() != n {
        return Err(FormatError::TeamCountMismatch {
            plan: n,
            pool: pool.team_count(),
        });
    }
    let seeds = match plan.seeding {
        SeedingPolicy::RandomPerReplicate => {
            let mut seeds: Vec<TeamId> = (0..n).map(TeamId).collect();
            seeds.shuffle(rng);
            seeds
        }
        SeedingPolicy::TruthSeeded => {
            let ranking = seed_ranking.ok_or(FormatError::MissingSeedRanking)?;
            if ranking.len() != n {
                return Err(FormatError::SeedRankingSize {
                    expected: n,
                    actual: ranking.len(),
                });
            }
            ranking.order()
        }
    };

    let mut exec = Execution {
        pool,
        rng,
        seeds,
        group_places: vec![Vec::new(); plan.group_slots],
        tie_results: vec![None; plan.tie_slots],
        fixtures: Vec::with_capacity(plan.fixture_count),
    };
    for (index, stage) in plan.stages.iter().enumerate() {
        match &stage.kind {
            StageKind::GroupRoundRobin {
                groups,
                games_per_pairing,
            } => exec.play_groups(index, groups, *games_per_pairing)?,
            StageKind::Bracket { ties, .. } => {
                for tie in ties {
                    exec.play_single(index, tie)?;
                }
            }
            StageKind::ClassificationPair { tie, .. } => exec.play_single(index, tie)?,
            StageKind::TwoLeggedTie { tie } => exec.play_two_legs(index, tie)?,
        }
    }

    let order = plan
        .standings
        .iter()
        .map(|&s| exec.resolve(s))
        .collect::<Result<Vec<_>, _>>()?;
    let final_ranking = Ranking::from_order(&order)
        .map_err(|_| FormatError::InvalidPlan("standings are not a permutation".into()))?;
    let fixtures = exec.fixtures;
    if fixtures.len() != plan.fixture_count {
        return Err(FormatError::FixtureCount {
            expected: plan.fixture_count,
            actual: fixtures.len(),
        });
    }
    let mut per_team = vec![0u32; n];
    for f in &fixtures {
        per_team[f.first.0] += 1;
        per_team[f.second.0] += 1;
    }
    Ok(TournamentOutcome {
        format: plan.id,
        games_played_total: fixtures.len(),
        fixtures,
        final_ranking,
        games_played_per_team: per_team,
    })
}
