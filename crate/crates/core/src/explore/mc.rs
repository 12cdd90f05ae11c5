use super::buffer::{BufferEntry, StateBuffer};
use super::chain::{ChainModule, PolicyChain};
use super::env::{rollout, Env, Frame, Rollout};
use super::log::{EvalRecord, RunOutcome};
use super::monitor::BottleneckMonitor;
use super::segment::{RunState, Segment};
use super::trail::Trail;
use super::ExploreConfig;
use crate::error::RunError;
use crate::kg::Shaping;
use crate::policy::PolicyParams;

/// Outcome of a successful restart from a buffered frame.
pub(crate) struct BacktrackResult {
    pub entry: BufferEntry,
    pub params: PolicyParams,
    pub eval: Eval,
    pub segment: Segment,
}

/// An evaluated execution and the shaped return of the whole trajectory
/// through it.
pub(crate) struct Eval {
    pub rollout: Rollout,
    pub j: f64,
}

struct Best {
    params: PolicyParams,
    eval: Eval,
}

/// Best of the greedy execution and `eval_samples` seeded ones by shaped
/// return; the earliest wins ties. `trail` is the trajectory up to `launch`.
pub(crate) fn evaluate(
    env: &Env,
    cfg: &ExploreConfig,
    shaping: &Shaping,
    params: &PolicyParams,
    launch: &Frame,
    trail: &Trail,
) -> Result<Eval, RunError> {
    let mut best: Option<Eval> = None;
    for seed in std::iter::once(None).chain((1..=u64::from(cfg.eval_samples)).map(Some)) {
        let rollout = rollout(env, params, launch, cfg.horizon as usize, seed)?;
        let j = trail.extend(shaping, &rollout).j;
        if best.as_ref().is_none_or(|b| j > b.j) {
            best = Some(Eval { rollout, j });
        }
    }
    Ok(best.expect("greedy execution evaluated"))
}

fn buffer_from(shaping: &Shaping, trail: &Trail, r: &Rollout, capacity: usize) -> StateBuffer {
    StateBuffer::from_rollout(r, trail.along(shaping, r), capacity)
}

fn event_keys(env: &Env, r: &Rollout, before: usize) -> Vec<String> {
    r.events.iter().filter(|&&(i, _)| i < before).map(|&(_, e)| env.game.events[e].key.clone()).collect()
}

/// Actor-critic on a batch of instances restarting from the reset frame.
pub fn vanilla_train(env: &Env, cfg: &ExploreConfig) -> Result<RunOutcome, RunError> {
    train(env, cfg, false)
}

/// Actor-critic with stagnation detection, backtracking to frames along the
/// best greedy trajectory, and policy chaining.
pub fn mc_train(env: &Env, cfg: &ExploreConfig) -> Result<RunOutcome, RunError> {
    train(env, cfg, true)
}

fn train(env: &Env, cfg: &ExploreConfig, structured: bool) -> Result<RunOutcome, RunError> {
    let mut run = RunState::new(env, cfg)?;
    let shaping = run.shaping;
    let mut next_id = 0u64;
    let mut seg = Segment::new(env, cfg, env.zero_params(), run.initial.clone(), next_id);
    let mut trail = Trail::start(&seg.launch);
    next_id += 1;
    let first = evaluate(env, cfg, &shaping, &seg.params, &seg.launch, &trail)?;
    let mut monitor = BottleneckMonitor::new(cfg.batch, cfg.patience, cfg.patience_batch_factor, first.j);
    let mut buffer = buffer_from(&shaping, &trail, &first.rollout, cfg.buffer_size);
    let mut evals = vec![EvalRecord { step: 0, score: first.rollout.score, j: first.j, best: first.j }];
    let mut best = Best { params: seg.params.clone(), eval: first };
    let mut modules = Vec::new();
    let mut notes = Vec::new();
    let mut backtracks = 0;
    let mut gave_up = false;

    while run.env_steps < cfg.budget {
        let novelty = seg.batch_step(env, cfg, &mut run)?;
        for (i, r) in novelty {
            monitor.tick(i, cfg.alpha > 0.0 && r > 0);
        }
        if seg.updates.is_multiple_of(cfg.eval_interval) {
            let e = evaluate(env, cfg, &shaping, &seg.params, &seg.launch, &trail)?;
            let (score, j) = (e.rollout.score, e.j);
            if monitor.observe(j) {
                buffer = buffer_from(&shaping, &trail, &e.rollout, cfg.buffer_size);
                best = Best { params: seg.params.clone(), eval: e };
            }
            evals.push(EvalRecord { step: run.env_steps, score, j, best: monitor.j_max });
        }
        if structured && monitor.stagnant() && run.env_steps < cfg.budget {
            backtracks += 1;
            match backtrack(env, cfg, &mut run, &buffer, monitor.j_max, &mut next_id, &mut evals)? {
                Some(found) => {
                    notes.push(format!(
                        "backtrack {backtracks} at step {}: restart from step {} raised J from {} to {}",
                        run.env_steps, found.entry.step, monitor.j_max, found.eval.j
                    ));
                    modules.push(ChainModule {
                        params: best.params.clone(),
                        launch: seg.launch.clone(),
                        seed: best.eval.rollout.seed,
                        steps: found.entry.step,
                        score: found.entry.frame.score(),
                        events: event_keys(env, &best.eval.rollout, found.entry.step),
                    });
                    monitor.reset(found.eval.j);
                    trail = found.entry.trail;
                    buffer = buffer_from(&shaping, &trail, &found.eval.rollout, cfg.buffer_size);
                    best = Best { params: found.params, eval: found.eval };
                    seg = found.segment;
                }
                None => {
                    notes.push(format!("backtrack {backtracks} at step {} found nothing; giving up", run.env_steps));
                    gave_up = true;
                    break;
                }
            }
        }
    }

    let score = best.eval.rollout.score;
    let final_params = seg.params;
    modules.push(ChainModule {
        params: best.params,
        launch: seg.launch,
        seed: best.eval.rollout.seed,
        steps: best.eval.rollout.actions.len(),
        score,
        events: event_keys(env, &best.eval.rollout, usize::MAX),
    });
    let chain = PolicyChain {
        game: env.game.name.clone(),
        fingerprint: env.game.fingerprint,
        features: env.encoder.config,
        policy: cfg.policy,
        shaping,
        modules,
        score,
        j_max: best.eval.j,
    };
    let strategy = match (structured, cfg.alpha > 0.0) {
        (false, _) => "vanilla",
        (true, false) => "mc",
        (true, true) => "mc+im",
    };
    Ok(RunOutcome {
        strategy: strategy.into(),
        seed: cfg.seed,
        best_score: score,
        final_score: score,
        env_steps: run.env_steps,
        im_total: run.im_total,
        kg_global: run.global.len(),
        trajectory_hash: run.hash.finish(),
        chain: Some(chain),
        final_params,
        best_actions: Vec::new(),
        archive_cells: 0,
        backtracks,
        gave_up,
        notes,
        episodes: run.episodes,
        evals,
        steps: run.steps,
        graphs: run.graphs,
    })
}

/// Tries buffered frames newest first, training a fresh policy from each for
/// up to the backtrack budget, until one's evaluation beats `j_target`.
pub(crate) fn backtrack(
    env: &Env,
    cfg: &ExploreConfig,
    run: &mut RunState,
    buffer: &StateBuffer,
    j_target: f64,
    next_id: &mut u64,
    evals: &mut Vec<EvalRecord>,
) -> Result<Option<BacktrackResult>, RunError> {
    let limit = cfg.backtrack_budget();
    for entry in buffer.iter().rev() {
        let mut seg = Segment::new(env, cfg, env.zero_params(), entry.frame.clone(), *next_id);
        *next_id += 1;
        while seg.env_steps < limit && run.env_steps < cfg.budget {
            seg.batch_step(env, cfg, run)?;
            if seg.updates.is_multiple_of(cfg.eval_interval) {
                let e = evaluate(env, cfg, &run.shaping, &seg.params, &seg.launch, &entry.trail)?;
                evals.push(EvalRecord { step: run.env_steps, score: e.rollout.score, j: e.j, best: j_target.max(e.j) });
                if e.j > j_target {
                    return Ok(Some(BacktrackResult {
                        entry: entry.clone(),
                        params: seg.params.clone(),
                        eval: e,
                        segment: seg,
                    }));
                }
            }
        }
        if run.env_steps >= cfg.budget {
            break;
        }
    }
    Ok(None)
}
