use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tourney-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const LADDER: &str = r#"
base_rate = 1.6
seed = 12

[[team]]
name = "Alpha"
attack = 0.0
defense = 0.0

[[team]]
name = "Bravo"
attack = -0.125
defense = -0.125

[[team]]
name = "Charlie"
attack = -0.25
defense = -0.25

[[team]]
name = "Delta"
attack = -0.375
defense = -0.375

[[team]]
name = "Echo"
attack = -0.5
defense = -0.5

[[team]]
name = "Foxtrot"
attack = -0.625
defense = -0.625

[[team]]
name = "Golf"
attack = -0.75
defense = -0.75

[[team]]
name = "Hotel"
attack = -0.875
defense = -0.875

[[nontransitivity]]
team_a = "Foxtrot"
team_b = "Delta"
offset = 0.35
"#;

fn gen(dir: &Path, model: &str, games: &str, name: &str) -> std::path::PathBuf {
    let model_path = dir.join(format!("{name}.toml"));
    fs::write(&model_path, model).unwrap();
    let out = dir.join(name);
    let result = run(&[
        "gen",
        "--model",
        p(&model_path),
        "--games",
        games,
        "--out",
        p(&out),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    out
}

#[test]
fn gen_writes_every_game() {
    let dir = TempDir::new().unwrap();
    let games = gen(dir.path(), LADDER, "1000", "games.csv");
    let text = fs::read_to_string(&games).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("team_a,team_b,goals_a,goals_b"));
    assert_eq!(lines.count(), 28_000);

    let again = gen(dir.path(), LADDER, "1000", "again.csv");
    assert_eq!(fs::read(&games).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn gen_smallest_pool() {
    let dir = TempDir::new().unwrap();
    let model = "base_rate = 1.0\n[[team]]\nname = \"A\"\n[[team]]\nname = \"B\"\n";
    let games = gen(dir.path(), model, "1", "two.csv");
    assert_eq!(fs::read_to_string(games).unwrap().lines().count(), 2);
}

#[test]
fn gen_rejects_bad_model() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m.toml");
    fs::write(
        &model,
        "base_rate = -1.0\n[[team]]\nname = \"A\"\n[[team]]\nname = \"B\"\n",
    )
    .unwrap();
    let out = run(&[
        "gen",
        "--model",
        p(&model),
        "--games",
        "5",
        "--out",
        p(&dir.path().join("g.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = run(&[
        "gen",
        "--model",
        p(&model),
        "--games",
        "0",
        "--out",
        "x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truth_ranks_a_dominant_pool() {
    let dir = TempDir::new().unwrap();
    let games = dir.path().join("games.csv");
    fs::write(
        &games,
        "team_a,team_b,goals_a,goals_b\nB,C,2,0\nA,B,1,0\nC,A,0,3\nA,B,2,1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("truth");
    let out = run(&[
        "truth",
        "--games",
        p(&games),
        "--bootstrap",
        "50",
        "--out",
        p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(out_dir.join("ranking.txt")).unwrap(),
        "A\nB\nC\n"
    );

    let totals = fs::read_to_string(out_dir.join("totals.csv")).unwrap();
    let mut rows = totals.lines();
    assert_eq!(
        rows.next(),
        Some("rank,team,total,goal_difference,goals_scored")
    );
    let points: Vec<f64> = rows
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(points, vec![6.0, 3.0, 0.0]);

    let stability = fs::read_to_string(out_dir.join("stability.csv")).unwrap();
    assert_eq!(stability.lines().count(), 3);
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"sha256\""));
}

#[test]
fn truth_totals_stay_in_range() {
    let dir = TempDir::new().unwrap();
    let games = gen(dir.path(), LADDER, "40", "games.csv");
    let out_dir = dir.path().join("truth");
    let out = run(&[
        "truth",
        "--games",
        p(&games),
        "--scheme",
        "discrete",
        "--out",
        p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let totals = fs::read_to_string(out_dir.join("totals.csv")).unwrap();
    for row in totals.lines().skip(1) {
        let total: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=21.0).contains(&total), "{row}");
    }
}

#[test]
fn truth_reports_missing_pair() {
    let dir = TempDir::new().unwrap();
    let games = dir.path().join("games.csv");
    fs::write(&games, "team_a,team_b,goals_a,goals_b\nA,B,1,0\nB,C,1,1\n").unwrap();
    let out = run(&[
        "truth",
        "--games",
        p(&games),
        "--out",
        p(&dir.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains('A') && err.contains('C'), "{err}");
}

fn simulate_setup(dir: &Path, extra: &str) -> std::path::PathBuf {
    gen(dir, LADDER, "50", "games.csv");
    let config = dir.join("experiment.toml");
    fs::write(
        &config,
        format!(
            "games = \"games.csv\"\nplans = [\"rc2012\", \"rc2013-de\", \"rc2014-hybrid\"]\n\
             replicates = 10\nseed = 4\n{extra}"
        ),
    )
    .unwrap();
    config
}

#[test]
fn simulate_writes_distributions() {
    let dir = TempDir::new().unwrap();
    let config = simulate_setup(dir.path(), "");
    let out_dir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--config",
        p(&config),
        "--out",
        p(&out_dir),
        "--workers",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("ordering by mean d1"));

    let d1 = fs::read_to_string(out_dir.join("d1_rc2014-hybrid.csv")).unwrap();
    let mut rows = d1.lines();
    assert_eq!(rows.next(), Some("format,replicate,d1"));
    let values: Vec<u32> = rows
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 10);
    assert!(values.iter().all(|v| v % 2 == 0 && *v <= 32));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 4);
    assert_eq!(summary["distributions"].as_array().unwrap().len(), 3);
    assert!(summary["comparison"]["ordering"].is_array());
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let config = simulate_setup(dir.path(), "seeding = \"truth\"\n");
    let digests = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = run(&["simulate", "--config", p(&config), "--out", p(&out_dir)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
                .unwrap();
        manifest["outputs"].clone()
    };
    assert_eq!(digests("first"), digests("second"));
}

#[test]
fn simulate_rejects_unknown_format() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), LADDER, "5", "games.csv");
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        "games = \"games.csv\"\nplans = [\"swiss\"]\nseed = 1\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        p(&config),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for token in ["rc2012", "rc2013-de", "rc2014-hybrid", "round-robin"] {
        assert!(err.contains(token), "{err}");
    }
}

#[test]
fn simulate_rejects_wrong_team_count() {
    let dir = TempDir::new().unwrap();
    let games = dir.path().join("games.csv");
    fs::write(
        &games,
        "team_a,team_b,goals_a,goals_b\nA,B,1,0\nA,C,2,2\nB,C,0,1\n",
    )
    .unwrap();
    let config = dir.path().join("c.toml");
    fs::write(
        &config,
        "games = \"games.csv\"\nplans = [\"rc2012\"]\nseed = 1\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        p(&config),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let games = dir.path().join("games.csv");
    fs::write(&games, "team_a,team_b,goals_a,goals_b\nA,B,1,0\n").unwrap();
    // a regular file where the output directory should go
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = run(&[
        "truth",
        "--games",
        p(&games),
        "--out",
        p(&blocker.join("sub")),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
