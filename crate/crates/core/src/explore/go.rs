use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::archive::CellArchive;
use super::env::Env;
use super::log::{EvalRecord, RunOutcome};
use super::mc::evaluate;
use super::trail::Trail;
use super::segment::{multi_step, step_worker, RunState, Segment};
use super::ExploreConfig;
use crate::error::RunError;
use crate::game::GroundedAction;
use crate::hash::mix64;
use crate::policy::{a2c_update, Transition};

struct Tracker {
    origin: usize,
    tail: Vec<GroundedAction>,
}

/// Archive-driven exploration: workers repeatedly restart from archived
/// frames, chosen in proportion to score, while one shared policy trains on
/// everything they do.
pub fn go_train(env: &Env, cfg: &ExploreConfig) -> Result<RunOutcome, RunError> {
    let mut run = RunState::new(env, cfg)?;
    let mut archive = CellArchive::new(run.initial.clone());
    let mut seg = Segment::new(env, cfg, env.zero_params(), run.initial.clone(), 0);
    let mut pick_rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ 0x676f));
    let mut trackers: Vec<Tracker> = (0..cfg.batch).map(|_| Tracker { origin: 0, tail: Vec::new() }).collect();
    let s0 = run.initial.score();
    let mut evals = vec![EvalRecord { step: 0, score: s0, j: f64::from(s0), best: f64::from(s0) }];
    let cell_step = cfg.cell_step.min(cfg.horizon);

    while run.env_steps < cfg.budget {
        let mut pending: Vec<Vec<(Transition, bool)>> = vec![Vec::new(); cfg.batch];
        for _ in 0..cfg.rollout {
            for (i, steps) in pending.iter_mut().enumerate() {
                let (info, _) = step_worker(env, &seg.params, &mut seg.workers[i], i, &mut run)?;
                let t = &mut trackers[i];
                t.tail.push(info.transition.action);
                if info.step.frame.state.alive {
                    let (idx, new) = archive.insert(info.step.frame.clone(), Some(t.origin), t.tail.clone());
                    if new {
                        t.origin = idx;
                        t.tail.clear();
                    }
                }
                let w = &mut seg.workers[i];
                let ended = info.step.done || w.steps >= cell_step;
                if ended {
                    run.end_episode(w.frame.score());
                    let c = archive.select(pick_rng.gen());
                    archive.visit(c);
                    w.restart(env, archive.get(c).frame.clone());
                    *t = Tracker { origin: c, tail: Vec::new() };
                }
                steps.push((info.transition, ended));
            }
        }
        let batch: Vec<Transition> = pending.into_iter().flat_map(|steps| multi_step(steps, cfg.policy.gamma)).collect();
        seg.env_steps += batch.len() as u64;
        seg.updates += 1;
        a2c_update(&mut seg.params, env.game, &cfg.policy, &batch, seg.updates)?;
        if seg.updates.is_multiple_of(cfg.eval_interval) {
            let best = archive.get(archive.best()).score;
            evals.push(EvalRecord { step: run.env_steps, score: best, j: f64::from(best), best: f64::from(best) });
        }
    }

    let best = archive.best();
    let trail = Trail::start(&run.initial);
    let last = evaluate(env, cfg, &run.shaping, &seg.params, &run.initial, &trail)?;
    Ok(RunOutcome {
        strategy: "go".into(),
        seed: cfg.seed,
        best_score: archive.get(best).score,
        final_score: last.rollout.score,
        env_steps: run.env_steps,
        im_total: run.im_total,
        kg_global: run.global.len(),
        trajectory_hash: run.hash.finish(),
        chain: None,
        final_params: seg.params,
        best_actions: archive.path(best),
        archive_cells: archive.len(),
        backtracks: 0,
        gave_up: false,
        notes: Vec::new(),
        episodes: run.episodes,
        evals,
        steps: run.steps,
        graphs: run.graphs,
    })
}
