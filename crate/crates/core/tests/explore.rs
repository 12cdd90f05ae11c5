use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textquest::explore::{execute_chain, go_train, mc_train, CellArchive, Env, ExploreConfig, Frame, PolicyChain};
use textquest::extract::OracleBackend;
use textquest::game::parse_game;
use textquest::games;
use textquest::RunError;

const TINY: &str = r#"
format = "textquest-game/1"
name = "tiny"
start = "room"
max_score = 1
templates = ["look", "take ___"]

[[room]]
id = "room"
name = "Room"
description = "A bare room."

[[object]]
id = "ball"
noun = "ball"
name = "ball"
location = "room"
portable = true

[[event]]
id = "ball"
when = "has:ball"
points = 1
"#;

fn short(seed: u64, budget: u64) -> ExploreConfig {
    ExploreConfig { budget, batch: 8, patience: Some(500), seed, ..ExploreConfig::default() }
}

fn walk(env: &Env, commands: &[&str]) -> Frame {
    let mut frame = env.initial();
    for c in commands {
        frame = env.advance(&frame, &env.game.parse_action(c).unwrap()).unwrap().frame;
    }
    frame
}

#[test]
fn chains_survive_disk_and_detect_tampering() {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let out = mc_train(&env, &short(1, 20_000)).unwrap();
    let chain = out.chain.unwrap();

    let dir = tempfile::tempdir().unwrap();
    chain.write_dir(dir.path(), &game).unwrap();
    let back = PolicyChain::read_dir(dir.path(), &game).unwrap();
    assert_eq!(back, chain);
    let r = execute_chain(&back, &env).unwrap();
    assert_eq!(r.score, chain.score);
    assert_eq!(r.j.to_bits(), chain.j_max.to_bits());

    let mut wrong = chain.clone();
    wrong.j_max += 1.0;
    assert!(matches!(execute_chain(&wrong, &env), Err(RunError::ChainDivergence(_))));

    let other = games::bundled("deceive").unwrap().unwrap();
    assert!(PolicyChain::read_dir(dir.path(), &other).is_err());
}

#[test]
fn chain_launch_scores_never_decrease() {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    for seed in 0..2 {
        let chain = mc_train(&env, &short(seed, 40_000)).unwrap().chain.unwrap();
        let launches: Vec<i32> = chain.modules.iter().map(|m| m.launch.score()).collect();
        assert!(launches.windows(2).all(|w| w[0] <= w[1]), "{launches:?}");
        assert!(chain.modules.iter().all(|m| m.score >= m.launch.score()));
    }
}

#[test]
fn training_is_reproducible_per_seed() {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let a = mc_train(&env, &short(7, 8_000)).unwrap();
    let b = mc_train(&env, &short(7, 8_000)).unwrap();
    assert_eq!(a.trajectory_hash, b.trajectory_hash);
    assert_eq!(a.evals, b.evals);
    assert_eq!(a.final_params, b.final_params);
    let c = mc_train(&env, &short(8, 8_000)).unwrap();
    assert_ne!(a.trajectory_hash, c.trajectory_hash);
}

#[test]
fn backtracking_gives_up_once_nothing_beats_the_best_return() {
    let game = parse_game(TINY).unwrap();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let cfg = ExploreConfig {
        budget: 50_000,
        batch: 4,
        patience: Some(20),
        buffer_size: 1,
        backtrack_steps: Some(400),
        alpha: 0.0,
        ..ExploreConfig::default()
    };
    let out = mc_train(&env, &cfg).unwrap();
    assert!(out.gave_up);
    assert_eq!(out.backtracks, 1);
    assert!(out.env_steps < cfg.budget);
    assert!(out.notes.last().unwrap().contains("giving up"));
}

#[test]
fn archive_keys_are_unique() {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let mut archive = CellArchive::new(env.initial());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut frame = env.initial();
    for _ in 0..20_000 {
        let actions = game.admissible_actions(&frame.state);
        let a = actions[rng.gen_range(0..actions.len())];
        let step = env.advance(&frame, &a).unwrap();
        archive.insert(step.frame.clone(), Some(0), vec![a]);
        frame = if step.done { env.initial() } else { step.frame };
    }
    let keys: HashSet<_> = (0..archive.len()).map(|i| archive.get(i).key).collect();
    assert_eq!(keys.len(), archive.len());

    let out = go_train(&env, &short(0, 5_000)).unwrap();
    assert!(out.archive_cells > 1);
}

#[test]
fn cells_are_drawn_in_proportion_to_score_plus_one() {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let scored = walk(&env, &["go north", "go east", "open window", "go west"]);
    assert_eq!(scored.score(), 10);
    let mut archive = CellArchive::new(env.initial());
    archive.insert(scored, Some(0), Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 10_000;
    let high = (0..draws).filter(|_| archive.select(rng.gen()) == 1).count();
    let ratio = high as f64 / (draws - high) as f64;
    assert!((ratio - 11.0).abs() < 1.5, "ratio {ratio}");
}
