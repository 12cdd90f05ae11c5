use std::cell::RefCell;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EngineError;
use crate::extract::AnswerBackend;
use crate::game::{Builtin, EntityId, EntityKind, EventId, GameDef, GroundedAction, Observation, WorldState};
use crate::hash::StableHasher;
use crate::kg::{KnowledgeGraph, Movement};
use crate::policy::{act, Encoder, FeatureConfig, GraphCache, Mode, PolicyParams};

/// Everything the agent's next decision depends on: the world, what it last
/// saw, and what it believes.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub state: WorldState,
    pub obs: Observation,
    pub kg: KnowledgeGraph,
    /// Last answered location, used to detect movement.
    pub location: Option<String>,
}

impl Frame {
    pub fn key(&self) -> (u64, u64) {
        (self.state.state_hash(), self.kg.kg_hash())
    }

    pub fn score(&self) -> i32 {
        self.state.score
    }

    /// Same decision context: world (turn aside), observation and beliefs.
    pub fn same_context(&self, other: &Frame) -> bool {
        self.state.same_world(&other.state)
            && self.obs == other.obs
            && self.kg.kg_hash() == other.kg.kg_hash()
            && self.kg.len() == other.kg.len()
            && self.location == other.location
    }
}

pub struct Step {
    pub frame: Frame,
    pub reward: i32,
    pub done: bool,
    pub fired: Vec<EventId>,
}

/// Game, answerer and encoder bundled for one run. Not shared across threads.
pub struct Env<'a> {
    pub game: &'a GameDef,
    pub backend: &'a dyn AnswerBackend,
    pub encoder: Encoder,
    cache: RefCell<GraphCache>,
}

impl<'a> Env<'a> {
    pub fn new(game: &'a GameDef, backend: &'a dyn AnswerBackend, features: FeatureConfig) -> Self {
        Self { game, backend, encoder: Encoder::new(features), cache: RefCell::new(GraphCache::new()) }
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn zero_params(&self) -> PolicyParams {
        PolicyParams::for_game(self.game, self.dim())
    }

    /// The reset frame, with the graph built from the first observation.
    pub fn initial(&self) -> Frame {
        let (state, obs, _) = self.game.reset();
        let answers = self.backend.answer(self.game, &state, &obs);
        let mut kg = KnowledgeGraph::new();
        kg.update(&answers, None);
        Frame { state, obs, kg, location: answers.location }
    }

    pub fn advance(&self, frame: &Frame, action: &GroundedAction) -> Result<Step, EngineError> {
        let out = self.game.step(&frame.state, action)?;
        let answers = self.backend.answer(self.game, &out.state, &out.observation);
        let movement = match (self.game.templates[action.template].builtin, &frame.location, &answers.location) {
            (Builtin::Go(direction), Some(from), Some(to)) if from != to => {
                Some(Movement { from: from.clone(), direction, to: to.clone() })
            }
            _ => None,
        };
        let mut kg = frame.kg.clone();
        kg.update(&answers, movement.as_ref());
        let fired = (0..self.game.events.len()).filter(|&e| out.state.fired[e] && !frame.state.fired[e]).collect();
        let location = answers.location.or_else(|| frame.location.clone());
        Ok(Step {
            frame: Frame { state: out.state, obs: out.observation, kg, location },
            reward: out.reward,
            done: out.done,
            fired,
        })
    }

    /// Objects named in the graph, in entity order.
    pub fn mask(&self, kg: &KnowledgeGraph) -> Arc<[EntityId]> {
        let mut ids: Vec<EntityId> = kg
            .at_hand()
            .iter()
            .filter_map(|n| self.game.entity_id(n))
            .filter(|&id| matches!(self.game.entities[id].kind, EntityKind::Object(_)))
            .collect();
        ids.sort_unstable();
        ids.into()
    }

    pub fn features(&self, frame: &Frame) -> Arc<[f64]> {
        self.encoder.encode_cached(&frame.obs, &frame.kg, &mut self.cache.borrow_mut()).into()
    }
}

/// A deterministic execution: `frames[0]` is the launch, `frames[i + 1]`
/// follows `actions[i]`.
#[derive(Debug, Clone)]
pub struct Rollout {
    /// `None` for greedy decoding, otherwise the sampling seed.
    pub seed: Option<u64>,
    pub frames: Vec<Frame>,
    pub actions: Vec<GroundedAction>,
    /// `(step index, event)` in firing order.
    pub events: Vec<(usize, EventId)>,
    pub score: i32,
    pub hash: u64,
}

impl Rollout {
    pub fn died(&self) -> bool {
        self.frames.last().is_some_and(|f| !f.state.alive)
    }
}

pub(crate) fn trajectory_step(h: &mut StableHasher, action: &GroundedAction, state: &WorldState) {
    h.write_u64(action.template as u64);
    h.write_u64(action.fillers[0] as u64);
    h.write_u64(action.fillers[1] as u64);
    h.write_u64(state.state_hash());
}

/// Runs `params` from `launch` for at most `steps` steps, greedily or by
/// sampling from a generator seeded with `seed`.
pub fn rollout(
    env: &Env,
    params: &PolicyParams,
    launch: &Frame,
    steps: usize,
    seed: Option<u64>,
) -> Result<Rollout, EngineError> {
    let mode = if seed.is_some() { Mode::Sample } else { Mode::Greedy };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let mut frames = vec![launch.clone()];
    let mut actions = Vec::new();
    let mut events = Vec::new();
    let mut h = StableHasher::new();
    for i in 0..steps {
        let frame = frames.last().expect("launch present");
        if !frame.state.alive {
            break;
        }
        let x = env.features(frame);
        let d = act(params, env.game, &x, &env.mask(&frame.kg), mode, &mut rng);
        let step = env.advance(frame, &d.action)?;
        trajectory_step(&mut h, &d.action, &step.frame.state);
        events.extend(step.fired.iter().map(|&e| (i, e)));
        actions.push(d.action);
        frames.push(step.frame);
    }
    let score = frames.last().expect("launch present").score();
    Ok(Rollout { seed, frames, actions, events, score, hash: h.finish() })
}
