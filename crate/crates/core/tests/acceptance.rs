//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textquest::explore::{execute_chain, mc_train, vanilla_train, Env, ExploreConfig, PolicyChain, RunOutcome};
use textquest::extract::{parse_dataset, write_dataset, OracleBackend};
use textquest::game::{enumerate_grounded, grounded_count, parse_game, EntityKind, GameDef, GroundedAction};
use textquest::games;
use textquest::kg::{GlobalEdgeSet, ScoreTerm, Shaping};
use textquest::policy::{act, filler_distribution, gradients, loss_terms, Mode, PolicyConfig, PolicyParams, Targets, Transition};
use textquest::quest::DependencyGraph;
use textquest::runner::{self, median, Patience, RunConfig, Strategy};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---- 1: bottleneck sets -------------------------------------------------

/// Direct reading of the bottleneck definition: levels by repeated
/// relaxation of longest-path ranks, then the set-builder condition
/// checked vertex by vertex.
fn naive_bottlenecks(n: usize, edges: &[(usize, usize)], rewards: &[i32]) -> Vec<usize> {
    let mut level = vec![0usize; n];
    for _ in 0..n {
        for &(a, b) in edges {
            level[b] = level[b].max(level[a] + 1);
        }
    }
    let mut out = Vec::new();
    for b in 0..n {
        let alone = (0..n).filter(|&v| level[v] == level[b]).count() == 1;
        let rewarded_above = (0..n).any(|s| level[s] > level[b] && rewards[s] != 0);
        if alone && rewarded_above {
            out.push(b);
        }
    }
    out.sort_by_key(|&v| level[v]);
    out
}

fn bottleneck_mismatch(n: usize, edges: &[(usize, usize)], rewards: &[i32]) -> bool {
    let dag = DependencyGraph::from_rewards(rewards, edges).expect("valid edges");
    dag.bottlenecks().expect("acyclic") != naive_bottlenecks(n, edges, rewards)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    // Every DAG on up to 5 vertices has a labelling whose edges all point to
    // larger labels, so subsets of forward pairs cover them all.
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
            for rmask in 0u32..(1 << n) {
                let rewards: Vec<i32> = (0..n).map(|v| if rmask >> v & 1 == 1 { 5 } else { 0 }).collect();
                cases += 1;
                mismatches += u64::from(bottleneck_mismatch(n, &edges, &rewards));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=12usize);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let density: f64 = rng.gen_range(0.05..0.6);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    edges.push((perm[a], perm[b]));
                }
            }
        }
        let rewards: Vec<i32> = (0..n).map(|_| if rng.gen_bool(0.3) { rng.gen_range(-5..=10) } else { 0 }).collect();
        cases += 1;
        mismatches += u64::from(bottleneck_mismatch(n, &edges, &rewards));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(mismatches == 0 && secs < 10.0, format!("{cases} graphs, {mismatches} mismatches, {secs:.2}s"))
}

// ---- 2: intrinsic reward bookkeeping -------------------------------------

fn criterion_2() -> Verdict {
    let game = games::miniz();
    let backend = OracleBackend;
    let mut details = Vec::new();
    let mut pass = true;
    for (strategy, seed) in [("mc+im", 0u64), ("vanilla", 1)] {
        let cfg = ExploreConfig {
            budget: 20_000,
            seed,
            record_graphs: true,
            alpha: if strategy == "vanilla" { 0.0 } else { 1.0 },
            patience: Some(200),
            ..ExploreConfig::default()
        };
        let env = Env::new(&game, &backend, cfg.features);
        let out = if strategy == "vanilla" { vanilla_train(&env, &cfg) } else { mc_train(&env, &cfg) }.expect("run");
        let mut global = GlobalEdgeSet::new();
        let first: usize = out.graphs.iter().map(|g| global.im_reward(g)).sum();
        let second: usize = out.graphs.iter().map(|g| global.im_reward(g)).sum();
        let ok = out.im_total == out.kg_global as u64 && first == out.kg_global && second == 0;
        pass &= ok;
        details.push(format!("{strategy}: sum {} = |KG_global| {}, replay sum {second}", out.im_total, out.kg_global));
    }
    verdict(pass, details.join("; "))
}

// ---- 3: shaping neutrality -----------------------------------------------

fn criterion_3() -> Verdict {
    let game = games::miniz();
    let backend = OracleBackend;
    let plain = Shaping::new(0.0, 1.0, 50.0, ScoreTerm::EpisodeScore).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = (0..10_000).all(|_| {
        let rg = rng.gen_range(-10..=25);
        plain.reward(rg, rng.gen_range(-20..=50), rng.gen_range(0..40)) == f64::from(rg)
    });

    let cfg = ExploreConfig { budget: 20_000, alpha: 0.0, record_steps: true, ..ExploreConfig::default() };
    let env = Env::new(&game, &backend, cfg.features);
    let out = vanilla_train(&env, &cfg).expect("run");
    let shaped_steps = out.steps.iter().filter(|s| s.reward != f64::from(s.r_g)).count();
    pass &= shaped_steps == 0;

    let mut equal = 0;
    for seed in 0..5u64 {
        let cfg = ExploreConfig { budget: 20_000, alpha: 0.0, patience: None, seed, ..ExploreConfig::default() };
        let env = Env::new(&game, &backend, cfg.features);
        let a = vanilla_train(&env, &cfg).expect("vanilla");
        let b = mc_train(&env, &cfg).expect("mc");
        equal += usize::from(a.trajectory_hash == b.trajectory_hash);
    }
    pass &= equal == 5;
    verdict(pass, format!("{shaped_steps} of {} steps shaped at alpha 0; {equal}/5 seeds with equal trajectory hashes", out.steps.len()))
}

// ---- 4: gradients ---------------------------------------------------------

const TINY: &str = r#"
format = "textquest-game/1"
name = "tiny"
start = "room"
max_score = 0
templates = ["look", "take ___", "put ___ in ___"]

[[room]]
id = "room"
name = "Room"
description = "A bare room."

[[object]]
id = "box"
noun = "box"
name = "box"
location = "room"

[[object]]
id = "ball"
noun = "ball"
name = "ball"
location = "room"
portable = true
"#;

fn random_params(p: &mut PolicyParams, rng: &mut impl Rng, scale: f64) {
    for i in 0..p.len() {
        p.set(i, rng.gen_range(-scale..scale));
    }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let game = parse_game(TINY).expect("tiny game");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..200 {
        let dim = rng.gen_range(2..=5);
        let mut params = PolicyParams::for_game(&game, dim);
        random_params(&mut params, &mut rng, 1.0);
        let entities = params.entities;
        let batch: Vec<Transition> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let t = rng.gen_range(0..game.templates.len());
                let mut choices: Vec<usize> = (0..entities).filter(|_| rng.gen_bool(0.7)).collect();
                if choices.is_empty() {
                    choices.push(rng.gen_range(0..entities));
                }
                let mut fillers = [0; 2];
                for f in fillers.iter_mut().take(game.templates[t].blanks) {
                    *f = choices[rng.gen_range(0..choices.len())];
                }
                let x: Arc<[f64]> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let next: Option<Arc<[f64]>> = rng.gen_bool(0.8).then(|| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
                Transition {
                    features: x,
                    action: GroundedAction { template: t, fillers },
                    choices: choices.into(),
                    reward: rng.gen_range(-2.0..5.0),
                    span: rng.gen_range(1..=8),
                    next_features: next,
                }
            })
            .collect();
        let targets: Vec<Targets> = batch.iter().map(|tr| Targets::compute(&params, 0.9, tr)).collect();
        let config = PolicyConfig { entropy_coef: rng.gen_range(0.0..0.5), critic_coef: rng.gen_range(0.1..1.0), ..PolicyConfig::default() };
        let analytic = gradients(&params, &game, &batch, &targets).total(&config);
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus.set(i, params.get(i) + h);
            let mut minus = params.clone();
            minus.set(i, params.get(i) - h);
            let numeric = (loss_terms(&plus, &game, &batch, &targets).total(&config)
                - loss_terms(&minus, &game, &batch, &targets).total(&config))
                / (2.0 * h);
            let a = analytic.get(i);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-4 && secs < 30.0, format!("{checked} coordinates over 200 instances, max relative error {worst:.2e}, {secs:.2}s"))
}

// ---- 5: graph mask --------------------------------------------------------

fn criterion_5() -> Verdict {
    let game = games::miniz();
    let backend = OracleBackend;
    let env = Env::new(&game, &backend, Default::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = env.zero_params();
    random_params(&mut params, &mut rng, 0.5);
    let mut frame = env.initial();
    let mut masked_mass = 0.0f64;
    let mut outside = 0usize;
    let mut fallbacks = 0usize;
    let mut blanks = 0usize;
    for step in 0..100_000 {
        let x = env.features(&frame);
        let mask = env.mask(&frame.kg);
        let d = act(&params, &game, &x, &mask, Mode::Sample, &mut rng);
        let known: HashSet<usize> = frame.kg.entities().iter().filter_map(|n| game.entity_id(n)).collect();
        if d.fallback {
            fallbacks += 1;
        } else {
            for (j, &f) in d.action.fillers(&game).iter().enumerate() {
                blanks += 1;
                outside += usize::from(!known.contains(&f));
                let prev = (j > 0).then(|| d.action.fillers[j - 1]);
                let dist = filler_distribution(&params, &x, d.action.template, prev, j, &mask);
                masked_mass += dist.iter().enumerate().filter(|(e, _)| !mask.contains(e)).map(|(_, p)| p).sum::<f64>();
            }
        }
        let next = env.advance(&frame, &d.action).expect("step");
        frame = if next.done || step % 60 == 59 { env.initial() } else { next.frame };
    }
    verdict(
        masked_mass == 0.0 && outside == 0,
        format!("1e5 actions, {blanks} filled blanks, masked mass {masked_mass}, {outside} fillers outside the graph, {fallbacks} empty-mask fallbacks"),
    )
}

// ---- 6 and 7: behaviour and chains ---------------------------------------

fn seeds(game: &GameDef, strategy: Strategy) -> Vec<RunOutcome> {
    let cfg = RunConfig {
        game: game.name.clone(),
        strategy,
        seeds: vec![0, 1, 2, 3, 4],
        budget: 200_000,
        batch: 16,
        patience: Patience(Some(1000)),
        record_steps: false,
        ..RunConfig::default()
    };
    cfg.validate().expect("valid config");
    cfg.seeds.iter().map(|&s| runner::train(game, &cfg, s).expect("run")).collect()
}

fn med(outs: &[RunOutcome], get: fn(&RunOutcome) -> i32) -> f64 {
    median(&outs.iter().map(|o| f64::from(get(o))).collect::<Vec<_>>())
}

fn kitchen_before_cellar(chain: &PolicyChain) -> bool {
    let ev = chain.events();
    match (ev.iter().position(|&e| e == "kitchen"), ev.iter().position(|&e| e == "cellar")) {
        (Some(k), Some(c)) => k < c,
        _ => false,
    }
}

fn criteria_6_7() -> (Verdict, Verdict) {
    let start = Instant::now();
    let miniz = games::miniz();
    let deceive = games::bundled("deceive").unwrap().unwrap();
    let vanilla = seeds(&miniz, Strategy::Vanilla);
    let plain_mc = seeds(&miniz, Strategy::Mc);
    let mc_im = seeds(&miniz, Strategy::McIm);
    let go = seeds(&deceive, Strategy::Go);
    let deceive_mc = seeds(&deceive, Strategy::McIm);
    let secs = start.elapsed().as_secs_f64();

    let best = |o: &RunOutcome| o.best_score;
    let fin = |o: &RunOutcome| o.final_score;
    let (v, n, m) = (med(&vanilla, best), med(&plain_mc, best), med(&mc_im, best));
    let ordered = mc_im.iter().filter(|o| o.chain.as_ref().is_some_and(kitchen_before_cellar)).count();
    let reached_cellar = mc_im.iter().filter(|o| o.chain.as_ref().is_some_and(|c| c.events().contains(&"cellar"))).count();
    let (g, d) = (med(&go, fin), med(&deceive_mc, fin));
    let a_ok = v <= 35.0 && n <= 35.0;
    let b_ok = m >= 40.0 && reached_cellar > 0 && ordered == reached_cellar;
    let c_ok = g <= d;
    let six = verdict(
        a_ok && b_ok && c_ok && secs < 1800.0,
        format!(
            "(a) vanilla median {v}, no-IM median {n}; (b) MC+IM median {m}, kitchen before cellar in {ordered}/{reached_cellar} chains reaching the cellar; (c) deceive final medians GO {g} vs MC+IM {d}; {secs:.0}s"
        ),
    );

    let backend = OracleBackend;
    let mut replayed = 0;
    let mut failures = Vec::new();
    for (game, outs) in [(&miniz, &vanilla), (&miniz, &plain_mc), (&miniz, &mc_im), (&deceive, &deceive_mc)] {
        for o in outs.iter() {
            let chain = o.chain.as_ref().expect("structured runs emit chains");
            let env = Env::new(game, &backend, chain.features);
            let one = execute_chain(chain, &env);
            let two = execute_chain(chain, &env);
            match (one, two) {
                (Ok(a), Ok(b)) if a.hash == b.hash && a.score == chain.score && a.j.to_bits() == chain.j_max.to_bits() && b.j == a.j => {
                    replayed += 1
                }
                (a, b) => failures.push(format!("{} seed {}: {:?} / {:?}", o.strategy, o.seed, a.map(|r| r.score), b.map(|r| r.score))),
            }
        }
    }
    // One chain also goes through its on-disk form.
    let dir = tempfile::tempdir().expect("tempdir");
    let chain = mc_im[0].chain.as_ref().unwrap();
    chain.write_dir(dir.path(), &miniz).expect("write chain");
    let disk_ok = match PolicyChain::read_dir(dir.path(), &miniz) {
        Ok(back) => {
            let env = Env::new(&miniz, &backend, back.features);
            execute_chain(&back, &env).is_ok_and(|r| r.j.to_bits() == chain.j_max.to_bits() && back == *chain)
        }
        Err(e) => {
            failures.push(format!("read back: {e}"));
            false
        }
    };
    let seven = verdict(
        failures.is_empty() && disk_ok,
        format!("{replayed}/20 chains replayed twice to their logged J_max with equal hashes; disk round trip {}{}", if disk_ok { "ok" } else { "failed" }, if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }),
    );
    (six, seven)
}

// ---- 8: template arithmetic -----------------------------------------------

fn criterion_8() -> Verdict {
    let templates: Vec<String> = (0..237).map(|i| format!("\"verb{i} ___ with ___\"")).collect();
    let zork = format!(
        "format = \"textquest-game/1\"\nname = \"zork-shape\"\nstart = \"r\"\nmax_score = 0\ntemplates = [{}]\n\n[[room]]\nid = \"r\"\nname = \"R\"\ndescription = \"R.\"\n",
        templates.join(", ")
    );
    let game = parse_game(&zork).expect("zork-shaped game");
    let vocab: Vec<usize> = (0..697).collect();
    let (count, iter) = enumerate_grounded(&game, &vocab);
    let enumerated = iter.count() as u128;
    let expected = 237u128 * 697 * 697;
    let mut pass = count == 115_136_733 && enumerated == expected && count == expected;
    let rounded = format!("{:.2e}", count as f64);
    pass &= rounded == "1.15e8";

    let mut details = vec![format!("Zork1 shape: {count} = 237 x 697^2 ({rounded}), {enumerated} enumerated")];
    for (name, _) in games::BUNDLED {
        let game = games::bundled(name).unwrap().unwrap();
        let objects: Vec<usize> =
            (0..game.entities.len()).filter(|&e| matches!(game.entities[e].kind, EntityKind::Object(_))).collect();
        let (count, iter) = enumerate_grounded(&game, &objects);
        let listed: Vec<GroundedAction> = iter.collect();
        let distinct: HashSet<(usize, [usize; 2])> = listed.iter().map(|a| (a.template, a.fillers)).collect();
        let mut brute = 0u128;
        for t in &game.templates {
            let mut n = 1u128;
            for _ in 0..t.blanks {
                n *= objects.len() as u128;
            }
            brute += n;
        }
        let ok = count == brute && listed.len() as u128 == brute && distinct.len() == listed.len()
            && grounded_count(game.templates.iter().map(|t| t.blanks), objects.len() as u64) == brute;
        pass &= ok;
        details.push(format!("{name}: {brute}"));
    }
    verdict(pass, details.join("; "))
}

// ---- 9: dataset format ----------------------------------------------------

fn criterion_9() -> Verdict {
    let game = games::miniz();
    let text = runner::emit_dataset(&game, 1000, 9).expect("dataset");
    let records = parse_dataset(&text).expect("parse");
    let markers = ["[loc] ", " [inv] ", " [obs] ", " [atr] "];
    let well_formed = text
        .split("\n\n")
        .filter(|b| !b.is_empty())
        .filter(|block| {
            let first = block.lines().next().unwrap_or("");
            let mut at = 0;
            first.starts_with("[loc] ")
                && markers.iter().all(|m| match first[at..].find(m) {
                    Some(i) => {
                        at += i + m.len();
                        true
                    }
                    None => false,
                })
        })
        .count();
    let lossless = write_dataset(&records) == text && parse_dataset(&write_dataset(&records)).as_ref() == Ok(&records);
    verdict(
        records.len() == 1000 && well_formed == 1000 && lossless,
        format!("{} records, {well_formed} well formed, round trip {}", records.len(), if lossless { "lossless" } else { "lossy" }),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter other than ours skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut results: Vec<(u32, Verdict)> = Vec::new();
    let mut report = |n: u32, v: Verdict| {
        println!("criterion {n}: {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, v));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    let (six, seven) = criteria_6_7();
    report(6, six);
    report(7, seven);
    report(8, criterion_8());
    report(9, criterion_9());
    let failed: Vec<u32> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
