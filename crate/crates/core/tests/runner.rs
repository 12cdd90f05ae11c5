use std::fs;

use textquest::extract::parse_dataset;
use textquest::games;
use textquest::runner::{emit_dataset, run, Patience, RunConfig, Strategy};

fn config(out: &std::path::Path, strategy: Strategy) -> RunConfig {
    RunConfig {
        strategy,
        seeds: vec![0, 1],
        budget: 6_000,
        batch: 8,
        patience: Patience(Some(400)),
        output: Some(out.display().to_string()),
        alpha: None,
        ..RunConfig::default()
    }
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (da, _) = run(&config(a.path(), Strategy::McIm)).unwrap();
    let (db, _) = run(&config(b.path(), Strategy::McIm)).unwrap();
    for file in ["summary.tsv", "seed-0/episodes.csv", "seed-0/evals.csv", "seed-1/steps.tsv", "seed-1/chain/manifest.tsv"] {
        let x = fs::read(da.join(file)).unwrap();
        let y = fs::read(db.join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn summary_agrees_with_episode_logs() {
    let out = tempfile::tempdir().unwrap();
    let (dir, rows) = run(&config(out.path(), Strategy::Go)).unwrap();
    for r in &rows {
        let csv = fs::read_to_string(dir.join(format!("seed-{}/episodes.csv", r.seed))).unwrap();
        let scores: Vec<i32> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(scores.iter().copied().max().unwrap_or(0), r.episode_max);
        assert!(dir.join(format!("seed-{}/archive.txt", r.seed)).exists());
    }
    let summary = fs::read_to_string(dir.join("summary.tsv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.starts_with("seed\t")).count(), 2);
}

#[test]
fn datasets_hold_three_questions_per_state_and_reparse() {
    let game = games::miniz();
    let text = emit_dataset(&game, 100, 3).unwrap();
    let records = parse_dataset(&text).unwrap();
    assert_eq!(records.len(), 100);
    assert!(records.iter().map(|r| r.pairs.len()).sum::<usize>() >= 300);
    assert_eq!(textquest::extract::write_dataset(&records), text);
}
