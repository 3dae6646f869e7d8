use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde_json::json;
use tourney_core::montecarlo::{write_distribution_csv, write_histogram_csv, ExperimentSummary};
use tourney_core::{
    compare_formats, estimate_truth, generate_synthetic_pool, load_pool, run_experiment,
    write_pool, Ranking, ResultPool, SchemeKind, SyntheticModel, TruthReport,
};

use crate::config::SimulateConfig;
use crate::manifest::{FileDigest, RunManifest};
use crate::{Failure, FailureExt};

fn read_pool(path: &Path) -> Result<ResultPool, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .invalid()?;
    load_pool(BufReader::new(file))
        .with_context(|| format!("{}", path.display()))
        .invalid()
}

/// Writes `name` inside `dir` through a buffered writer.
fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let path = dir.join(name);
    let file = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))
        .runtime()?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .with_context(|| format!("cannot write {}", path.display()))
        .runtime()
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .runtime()
}

pub fn gen(model_path: &Path, games: usize, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(model_path)
        .with_context(|| format!("cannot read model {}", model_path.display()))
        .invalid()?;
    let mut model = SyntheticModel::from_toml_str(&text)
        .with_context(|| format!("model {}", model_path.display()))
        .invalid()?;
    if let Some(seed) = seed {
        model.seed = seed;
    }
    let pool = generate_synthetic_pool(&model, games).invalid()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = File::create(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .runtime()?;
    let mut writer = BufWriter::new(file);
    write_pool(&pool, &mut writer)
        .and_then(|_| writer.flush())
        .with_context(|| format!("cannot write {}", out.display()))
        .runtime()
}

fn write_truth_files(
    dir: &Path,
    pool: &ResultPool,
    report: &TruthReport,
) -> Result<Vec<String>, Failure> {
    let teams = pool.teams();
    write_file(dir, "ranking.txt", |w| report.ranking.write_names(teams, w))?;
    write_file(dir, "totals.csv", |w| {
        writeln!(w, "rank,team,total,goal_difference,goals_scored")?;
        for (pos, team) in report.ranking.order().into_iter().enumerate() {
            let t = &report.totals;
            writeln!(
                w,
                "{},{},{},{},{}",
                pos + 1,
                teams.name(team),
                t.totals[team.0],
                t.goal_difference[team.0],
                t.goals_scored[team.0]
            )?;
        }
        Ok(())
    })?;
    write_file(dir, "stability.csv", |w| {
        writeln!(w, "rank,team,next_team,probability")?;
        let order = report.ranking.order();
        for (k, p) in report.adjacent_stability.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                k + 1,
                teams.name(order[k]),
                teams.name(order[k + 1]),
                p
            )?;
        }
        Ok(())
    })?;
    Ok(vec![
        "ranking.txt".into(),
        "totals.csv".into(),
        "stability.csv".into(),
    ])
}

pub fn truth(
    games: &Path,
    scheme: SchemeKind,
    bootstrap: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let pool = read_pool(games)?;
    let mut manifest = RunManifest::new(
        "truth",
        seed,
        json!({ "scheme": scheme, "bootstrap_rounds": bootstrap }),
    );
    manifest
        .inputs
        .push(FileDigest::of(games, games.display().to_string()).invalid()?);
    let report = estimate_truth(&pool, scheme, bootstrap, seed);
    create_dir(out)?;
    let outputs = write_truth_files(out, &pool, &report)?;
    manifest.finish(out, &outputs).runtime()
}

pub fn simulate(config_path: &Path, out: &Path, workers: usize) -> Result<(), Failure> {
    let config = SimulateConfig::load(config_path).invalid()?;
    let mut experiment = config.experiment;
    experiment.worker_count_hint = workers.max(1);

    let pool = read_pool(&config.games)?;
    let n = pool.team_count();
    for id in &experiment.plans {
        id.plan(n).invalid()?;
    }
    let truth = match &config.truth {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))
                .invalid()?;
            Ranking::read_names(pool.teams(), BufReader::new(file))
                .with_context(|| format!("truth ranking {}", path.display()))
                .invalid()?
        }
        None => estimate_truth(&pool, experiment.scheme, 0, experiment.master_seed).ranking,
    };

    let mut manifest = RunManifest::new(
        "simulate",
        experiment.master_seed,
        serde_json::to_value(&experiment).runtime()?,
    );
    manifest
        .inputs
        .push(FileDigest::of(config_path, config_path.display().to_string()).invalid()?);
    manifest
        .inputs
        .push(FileDigest::of(&config.games, config.games.display().to_string()).invalid()?);
    if let Some(path) = &config.truth {
        manifest
            .inputs
            .push(FileDigest::of(path, path.display().to_string()).invalid()?);
    }

    let distributions = run_experiment(&experiment, &pool, &truth).runtime()?;
    let comparison = if distributions.len() >= 2 {
        Some(
            compare_formats(
                &distributions,
                experiment.comparison_resamples,
                experiment.master_seed,
            )
            .runtime()?,
        )
    } else {
        None
    };

    create_dir(out)?;
    let mut outputs = Vec::new();
    write_file(out, "truth.txt", |w| truth.write_names(pool.teams(), w))?;
    outputs.push("truth.txt".to_owned());
    for d in &distributions {
        let name = format!("d1_{}.csv", d.format.token().replace(':', "-"));
        write_file(out, &name, |w| {
            write_distribution_csv(std::slice::from_ref(d), w)
        })?;
        outputs.push(name);
    }
    write_file(out, "histogram.csv", |w| {
        write_histogram_csv(&distributions, w)
    })?;
    outputs.push("histogram.csv".to_owned());
    let summary = ExperimentSummary::new(
        &experiment,
        pool.teams(),
        &truth,
        &distributions,
        comparison.as_ref(),
    );
    write_file(out, "summary.json", |w| {
        w.write_all(summary.to_json().as_bytes())
    })?;
    outputs.push("summary.json".to_owned());

    if let Some(c) = &comparison {
        let order: Vec<String> = c.ordering.iter().map(|f| f.token()).collect();
        eprintln!(
            "ordering by mean d1: {}{}",
            order.join(" < "),
            if c.conclusive { "" } else { " (inconclusive)" }
        );
    }
    manifest.finish(out, &outputs).runtime()
}
