//! Breadth-first search over the reachable state space. Used as the
//! walkthrough oracle, for authoring-time validation, and by tests.

use std::collections::{HashMap, VecDeque};

use super::action::GroundedAction;
use super::def::GameDef;
use super::state::WorldState;
use crate::error::EngineError;

pub struct SearchOracle {
    states: Vec<WorldState>,
    parents: Vec<Option<(usize, GroundedAction)>>,
    successors: Vec<Vec<usize>>,
}

impl SearchOracle {
    pub const DEFAULT_STATE_LIMIT: usize = 2_000_000;

    pub fn explore(game: &GameDef, limit: usize) -> Result<Self, EngineError> {
        let candidates = game.candidate_actions();
        let start = game.initial_state();
        let mut index: HashMap<WorldState, usize> = HashMap::new();
        let mut states = vec![start.clone()];
        let mut parents = vec![None];
        let mut successors = vec![Vec::new()];
        index.insert(canonical(&start), 0);
        let mut queue = VecDeque::from([0usize]);

        while let Some(i) = queue.pop_front() {
            if !states[i].alive {
                continue;
            }
            let mut next_ids = Vec::new();
            for action in &candidates {
                let out = game.step(&states[i], action)?;
                if out.state.same_world(&states[i]) {
                    continue;
                }
                let key = canonical(&out.state);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        if id >= limit {
                            return Err(EngineError::SearchLimit(limit));
                        }
                        index.insert(key, id);
                        states.push(out.state);
                        parents.push(Some((i, *action)));
                        successors.push(Vec::new());
                        queue.push_back(id);
                        id
                    }
                };
                next_ids.push(id);
            }
            next_ids.sort_unstable();
            next_ids.dedup();
            successors[i] = next_ids;
        }
        Ok(Self { states, parents, successors })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[WorldState] {
        &self.states
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    pub fn max_score(&self) -> i32 {
        self.states.iter().map(|s| s.score).max().unwrap_or(0)
    }

    pub fn event_reachable(&self, event: usize) -> bool {
        self.states.iter().any(|s| s.fired[event])
    }

    /// Shortest action sequence reaching the best score (BFS order makes the
    /// first such state a shortest one).
    pub fn walkthrough(&self) -> Vec<GroundedAction> {
        let best = self.max_score();
        let target = self.states.iter().position(|s| s.score == best).unwrap_or(0);
        self.path_to(target)
    }

    pub fn path_to(&self, mut i: usize) -> Vec<GroundedAction> {
        let mut path = Vec::new();
        while let Some((parent, action)) = self.parents[i] {
            path.push(action);
            i = parent;
        }
        path.reverse();
        path
    }

    /// Multi-source forward reachability over the state graph.
    pub fn reachable_from(&self, sources: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut stack: Vec<usize> = sources.into_iter().collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(i) = stack.pop() {
            for &j in &self.successors[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }
}

fn canonical(state: &WorldState) -> WorldState {
    let mut s = state.clone();
    s.turn = 0;
    s
}
