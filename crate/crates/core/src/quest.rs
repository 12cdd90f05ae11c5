//! Quest dependency DAGs: longest-path leveling and bottleneck extraction.
//!
//! A bottleneck is a vertex that is alone on its level while some vertex on a
//! strictly higher level carries a non-zero reward.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::QuestError;
use crate::game::{GameDef, Location, SearchOracle, WorldState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepVertex {
    pub id: String,
    /// Room keys; the vertex holds while the player is in one of them.
    pub locations: Vec<String>,
    /// Object keys that must all be carried.
    pub items: Vec<String>,
    pub reward: i32,
    /// Reward event this vertex's reward corresponds to.
    pub event: Option<String>,
}

impl DepVertex {
    pub fn new(id: impl Into<String>, reward: i32) -> Self {
        Self { id: id.into(), locations: Vec::new(), items: Vec::new(), reward, event: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub vertices: Vec<DepVertex>,
    pub edges: Vec<(usize, usize)>,
}

impl DependencyGraph {
    pub fn new(vertices: Vec<DepVertex>, edges: Vec<(usize, usize)>) -> Result<Self, QuestError> {
        for &(a, b) in &edges {
            for v in [a, b] {
                if v >= vertices.len() {
                    return Err(QuestError::BadEdge(v));
                }
            }
        }
        Ok(Self { vertices, edges })
    }

    /// Convenience constructor for rewards-only graphs, mostly for tests.
    pub fn from_rewards(rewards: &[i32], edges: &[(usize, usize)]) -> Result<Self, QuestError> {
        let vertices = rewards.iter().enumerate().map(|(i, &r)| DepVertex::new(format!("v{i}"), r)).collect();
        Self::new(vertices, edges.to_vec())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    fn adjacency(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let n = self.vertices.len();
        let mut out = vec![Vec::new(); n];
        let mut indeg = vec![0; n];
        for &(a, b) in &self.edges {
            out[a].push(b);
            indeg[b] += 1;
        }
        (out, indeg)
    }

    /// Level of each vertex: length of the longest path reaching it from a
    /// source. Errors with a cycle witness if the graph is not a DAG.
    pub fn level_of(&self) -> Result<Vec<usize>, QuestError> {
        let n = self.vertices.len();
        let (out, mut indeg) = self.adjacency();
        let mut level = vec![0usize; n];
        let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut done = 0;
        while let Some(v) = ready.pop() {
            done += 1;
            for &w in &out[v] {
                level[w] = level[w].max(level[v] + 1);
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        if done < n {
            return Err(QuestError::Cycle(self.cycle_witness(&out, &indeg)));
        }
        Ok(level)
    }

    fn cycle_witness(&self, out: &[Vec<usize>], indeg: &[usize]) -> Vec<String> {
        // Every vertex left with indegree > 0 lies on or behind a cycle;
        // walking backwards along unprocessed predecessors must revisit one.
        let n = self.vertices.len();
        let mut pred = vec![usize::MAX; n];
        for (a, succ) in out.iter().enumerate() {
            for &b in succ {
                if indeg[a] > 0 && indeg[b] > 0 {
                    pred[b] = a;
                }
            }
        }
        let mut v = (0..n).find(|&v| indeg[v] > 0 && pred[v] != usize::MAX).unwrap_or(0);
        let mut seen = vec![usize::MAX; n];
        let mut walk = Vec::new();
        while seen[v] == usize::MAX {
            seen[v] = walk.len();
            walk.push(v);
            v = pred[v];
        }
        let mut cycle: Vec<usize> = walk[seen[v]..].to_vec();
        cycle.reverse();
        cycle.push(cycle[0]);
        cycle.into_iter().map(|i| self.vertices[i].id.clone()).collect()
    }

    /// Vertices grouped by level, each level sorted by vertex index.
    pub fn topological_levels(&self) -> Result<Vec<Vec<usize>>, QuestError> {
        let level = self.level_of()?;
        let depth = level.iter().max().map_or(0, |m| m + 1);
        let mut levels = vec![Vec::new(); depth];
        for (v, &l) in level.iter().enumerate() {
            levels[l].push(v);
        }
        Ok(levels)
    }

    /// Bottleneck vertices in level order.
    pub fn bottlenecks(&self) -> Result<Vec<usize>, QuestError> {
        let levels = self.topological_levels()?;
        // rewarded_above[i]: some vertex on a level > i has non-zero reward.
        let mut rewarded_above = vec![false; levels.len()];
        let mut seen = false;
        for i in (0..levels.len()).rev() {
            rewarded_above[i] = seen;
            seen |= levels[i].iter().any(|&v| self.vertices[v].reward != 0);
        }
        Ok(levels
            .iter()
            .enumerate()
            .filter(|(i, level)| level.len() == 1 && rewarded_above[*i])
            .map(|(_, level)| level[0])
            .collect())
    }

    pub fn bottleneck_ids(&self) -> Result<Vec<String>, QuestError> {
        Ok(self.bottlenecks()?.into_iter().map(|v| self.vertices[v].id.clone()).collect())
    }
}

/// Outcome of checking a quest DAG against the game it annotates.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Number of reachable alive states satisfying each vertex.
    pub satisfying_states: Vec<usize>,
    pub reachable_states: usize,
}

fn satisfies(vertex: &ResolvedVertex, state: &WorldState) -> bool {
    state.alive
        && (vertex.rooms.is_empty() || vertex.rooms.contains(&state.room))
        && vertex.items.iter().all(|&o| state.objects[o] == Location::Inventory)
        && vertex.event.is_none_or(|e| state.fired[e])
}

struct ResolvedVertex {
    rooms: Vec<usize>,
    items: Vec<usize>,
    event: Option<usize>,
}

/// Confirms every vertex is attainable in the engine, each reward maps to a
/// reward event, and each edge is realisable from its source vertex.
pub fn validate_against_game(dag: &DependencyGraph, game: &GameDef) -> Result<ValidationReport, QuestError> {
    let mut resolved = Vec::with_capacity(dag.len());
    for v in &dag.vertices {
        let mut rooms = Vec::new();
        for key in &v.locations {
            rooms.push(game.room_id(key).ok_or_else(|| QuestError::UnmappedDependency {
                vertex: v.id.clone(),
                kind: "room",
                name: key.clone(),
            })?);
        }
        let mut items = Vec::new();
        for key in &v.items {
            items.push(game.object_id(key).ok_or_else(|| QuestError::UnmappedDependency {
                vertex: v.id.clone(),
                kind: "object",
                name: key.clone(),
            })?);
        }
        let event = match &v.event {
            Some(key) => {
                let e = game
                    .event_id(key)
                    .ok_or(QuestError::UnmappedReward { vertex: v.id.clone(), reward: v.reward })?;
                if game.events[e].points != v.reward {
                    return Err(QuestError::UnmappedReward { vertex: v.id.clone(), reward: v.reward });
                }
                Some(e)
            }
            None if v.reward != 0 => {
                return Err(QuestError::UnmappedReward { vertex: v.id.clone(), reward: v.reward });
            }
            None => None,
        };
        resolved.push(ResolvedVertex { rooms, items, event });
    }

    let oracle = SearchOracle::explore(game, SearchOracle::DEFAULT_STATE_LIMIT)?;
    let holders: Vec<Vec<usize>> = resolved
        .iter()
        .map(|rv| {
            oracle
                .states()
                .iter()
                .enumerate()
                .filter(|(_, s)| satisfies(rv, s))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for (v, states) in holders.iter().enumerate() {
        if states.is_empty() {
            return Err(QuestError::Unreachable(dag.vertices[v].id.clone()));
        }
    }
    for &(a, b) in &dag.edges {
        let reach = oracle.reachable_from(holders[a].iter().copied());
        if !holders[b].iter().any(|&s| reach[s]) {
            return Err(QuestError::UnrealisableEdge {
                from: dag.vertices[a].id.clone(),
                to: dag.vertices[b].id.clone(),
            });
        }
    }
    Ok(ValidationReport { satisfying_states: holders.iter().map(Vec::len).collect(), reachable_states: oracle.len() })
}

/// Levels, bottlenecks and walkthrough facts for a game.
#[derive(Debug, Clone)]
pub struct QuestReport {
    pub game: String,
    pub levels: Vec<Vec<String>>,
    pub bottlenecks: Vec<String>,
    pub max_score: i32,
    pub walkthrough: Vec<String>,
    pub validation: Option<String>,
}

impl QuestReport {
    pub fn build(game: &GameDef) -> Result<Self, QuestError> {
        let dag = game.quest.as_ref().ok_or(QuestError::MissingDag)?;
        let levels = dag
            .topological_levels()?
            .into_iter()
            .map(|l| l.into_iter().map(|v| dag.vertices[v].id.clone()).collect())
            .collect();
        let bottlenecks = dag.bottleneck_ids()?;
        let oracle = SearchOracle::explore(game, SearchOracle::DEFAULT_STATE_LIMIT)?;
        let walkthrough = oracle.walkthrough().iter().map(|a| a.text(game)).collect();
        let validation = match validate_against_game(dag, game) {
            Ok(_) => None,
            Err(e) => Some(e.to_string()),
        };
        Ok(Self { game: game.name.clone(), levels, bottlenecks, max_score: oracle.max_score(), walkthrough, validation })
    }

    /// Human-readable section followed by tab-separated machine lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "quest report for {}", self.game);
        for (i, level) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "  level {i}: {}", level.join(", "));
        }
        let _ = writeln!(out, "  bottlenecks: {}", self.bottlenecks.join(", "));
        let _ = writeln!(out, "  max score: {}", self.max_score);
        let _ = writeln!(out, "  walkthrough ({} steps): {}", self.walkthrough.len(), self.walkthrough.join("; "));
        match &self.validation {
            None => {
                let _ = writeln!(out, "  validation: ok");
            }
            Some(e) => {
                let _ = writeln!(out, "  validation: {e}");
            }
        }
        let _ = writeln!(out);
        for (i, level) in self.levels.iter().enumerate() {
            for v in level {
                let _ = writeln!(out, "level\t{i}\t{v}");
            }
        }
        let ids: BTreeSet<&String> = self.bottlenecks.iter().collect();
        for b in ids {
            let _ = writeln!(out, "bottleneck\t{b}");
        }
        let _ = writeln!(out, "max_score\t{}", self.max_score);
        let _ = writeln!(out, "walkthrough_len\t{}", self.walkthrough.len());
        let _ = writeln!(out, "validation\t{}", if self.validation.is_none() { "ok" } else { "failed" });
        out
    }
}
