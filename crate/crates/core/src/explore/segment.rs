use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::env::{trajectory_step, Env, Frame, Step};
use super::log::{EpisodeRecord, StepRecord};
use super::ExploreConfig;
use crate::error::RunError;
use crate::hash::{mix64, StableHasher};
use crate::kg::{GlobalEdgeSet, KnowledgeGraph, Shaping};
use crate::policy::{a2c_update, act, Decision, Mode, PolicyParams, Transition};

/// Run-wide state shared by every segment: the global edge set, counters and
/// logs.
pub(crate) struct RunState {
    pub global: GlobalEdgeSet,
    pub shaping: Shaping,
    pub im_total: u64,
    pub env_steps: u64,
    pub hash: StableHasher,
    pub steps: Vec<StepRecord>,
    pub episodes: Vec<EpisodeRecord>,
    pub best_episode: i32,
    pub graphs: Vec<KnowledgeGraph>,
    pub record_steps: bool,
    pub record_graphs: bool,
    pub initial: Frame,
}

impl RunState {
    pub fn new(env: &Env, cfg: &ExploreConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let shaping = cfg.shaping(env.game.max_score)?;
        let initial = env.initial();
        let mut run = Self {
            global: GlobalEdgeSet::new(),
            shaping,
            im_total: 0,
            env_steps: 0,
            hash: StableHasher::with_seed(cfg.seed),
            steps: Vec::new(),
            episodes: Vec::new(),
            best_episode: initial.score(),
            graphs: Vec::new(),
            record_steps: cfg.record_steps,
            record_graphs: cfg.record_graphs,
            initial: initial.clone(),
        };
        run.novelty(&initial.kg);
        Ok(run)
    }

    /// Scores a graph for novelty and folds it into the global set.
    pub fn novelty(&mut self, kg: &KnowledgeGraph) -> usize {
        if self.record_graphs {
            self.graphs.push(kg.clone());
        }
        let r = self.global.im_reward(kg);
        self.im_total += r as u64;
        r
    }

    pub fn end_episode(&mut self, score: i32) {
        self.best_episode = self.best_episode.max(score);
        let episode = self.episodes.len() as u64;
        self.episodes.push(EpisodeRecord { episode, score, max_score: self.best_episode });
    }
}

pub(crate) struct Worker {
    pub frame: Frame,
    pub features: Arc<[f64]>,
    pub steps: u32,
    pub rng: ChaCha8Rng,
}

impl Worker {
    pub fn new(env: &Env, frame: Frame, seed: u64) -> Self {
        let features = env.features(&frame);
        Self { frame, features, steps: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn restart(&mut self, env: &Env, frame: Frame) {
        self.features = env.features(&frame);
        self.frame = frame;
        self.steps = 0;
    }
}

pub(crate) struct StepInfo {
    pub step: Step,
    pub r_im: usize,
    pub transition: Transition,
}

/// Samples and executes one action for `worker`, scoring novelty against the
/// global set. The worker moves to the new frame; restarting is up to the
/// caller.
pub(crate) fn step_worker(
    env: &Env,
    params: &PolicyParams,
    worker: &mut Worker,
    instance: usize,
    run: &mut RunState,
) -> Result<(StepInfo, Decision), RunError> {
    let mask = env.mask(&worker.frame.kg);
    let d = act(params, env.game, &worker.features, &mask, Mode::Sample, &mut worker.rng);
    let step = env.advance(&worker.frame, &d.action)?;
    run.env_steps += 1;
    trajectory_step(&mut run.hash, &d.action, &step.frame.state);
    let r_im = run.novelty(&step.frame.kg);
    let reward = run.shaping.reward(step.reward, step.frame.score(), r_im);
    let next = env.features(&step.frame);
    if run.record_steps {
        let mut flags: Vec<&str> = step.fired.iter().map(|&e| env.game.events[e].key.as_str()).collect();
        if step.done {
            flags.push("death");
        }
        if d.fallback {
            flags.push("fallback");
        }
        run.steps.push(StepRecord {
            step: run.env_steps,
            instance,
            score: step.frame.score(),
            r_g: step.reward,
            r_im,
            reward,
            kg_global: run.global.len(),
            flags: if flags.is_empty() { "-".into() } else { flags.join(",") },
        });
    }
    let transition = Transition {
        features: worker.features.clone(),
        action: d.action,
        choices: d.choices.clone(),
        reward,
        span: 1,
        next_features: (!step.done).then(|| next.clone()),
    };
    worker.frame = step.frame.clone();
    worker.features = next;
    worker.steps += 1;
    Ok((StepInfo { step, r_im, transition }, d))
}

/// A policy being trained from one launch frame by a batch of workers.
pub(crate) struct Segment {
    pub params: PolicyParams,
    pub launch: Frame,
    pub workers: Vec<Worker>,
    pub updates: u64,
    pub env_steps: u64,
}

impl Segment {
    pub fn new(env: &Env, cfg: &ExploreConfig, params: PolicyParams, launch: Frame, id: u64) -> Self {
        let workers = (0..cfg.batch)
            .map(|i| Worker::new(env, launch.clone(), mix64(cfg.seed ^ mix64(id.wrapping_mul(1_000_003) + i as u64))))
            .collect();
        Self { params, launch, workers, updates: 0, env_steps: 0 }
    }

    /// `cfg.rollout` synchronous steps of every worker followed by one
    /// update. Returns `(instance, r_im)` for every step taken.
    pub fn batch_step(&mut self, env: &Env, cfg: &ExploreConfig, run: &mut RunState) -> Result<Vec<(usize, usize)>, RunError> {
        let n = self.workers.len();
        let mut pending: Vec<Vec<(Transition, bool)>> = vec![Vec::with_capacity(cfg.rollout as usize); n];
        let mut novelty = Vec::with_capacity(n * cfg.rollout as usize);
        for _ in 0..cfg.rollout {
            for (i, steps) in pending.iter_mut().enumerate() {
                let (info, _) = step_worker(env, &self.params, &mut self.workers[i], i, run)?;
                let w = &mut self.workers[i];
                let ended = info.step.done || w.steps >= cfg.horizon;
                if ended {
                    run.end_episode(w.frame.score());
                    w.restart(env, self.launch.clone());
                }
                novelty.push((i, info.r_im));
                steps.push((info.transition, ended));
            }
        }
        let batch: Vec<Transition> = pending.into_iter().flat_map(|steps| multi_step(steps, cfg.policy.gamma)).collect();
        self.env_steps += batch.len() as u64;
        self.updates += 1;
        a2c_update(&mut self.params, env.game, &cfg.policy, &batch, self.updates)?;
        Ok(novelty)
    }
}

/// Folds one worker's consecutive one-step transitions into returns that
/// run to the end of the rollout or of the episode, whichever comes first.
/// The flag marks a step after which the worker restarted.
pub(crate) fn multi_step(steps: Vec<(Transition, bool)>, gamma: f64) -> Vec<Transition> {
    let mut out: Vec<Transition> = Vec::with_capacity(steps.len());
    let mut tail: Option<(f64, u32, Option<Arc<[f64]>>)> = None;
    for (tr, ended) in steps.into_iter().rev() {
        let (reward, span, next) = match tail.take() {
            Some((r, k, next)) if !ended => (tr.reward + gamma * r, k + 1, next),
            _ => (tr.reward, 1, tr.next_features.clone()),
        };
        tail = Some((reward, span, next.clone()));
        out.push(Transition { reward, span, next_features: next, ..tr });
    }
    out.reverse();
    out
}
