//! Knowledge-graph world model, the run-wide global edge set, and the
//! intrinsic-motivation and shaped rewards built on them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::ConfigError;
use crate::extract::AnswerSet;
use crate::game::Direction;
use crate::hash::{mix64, StableHasher};

/// Lowercase, trim, strip a leading article, collapse whitespace.
pub fn normalize(text: &str) -> String {
    let lower = text.trim().to_lowercase();
    let mut words: Vec<&str> = lower.split_whitespace().collect();
    if words.len() > 1 && matches!(words[0], "a" | "an" | "the") {
        words.remove(0);
    }
    words.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Has,
    Is,
    Have,
    In,
    Visited,
    /// `⟨a, east of, b⟩`: recorded after going east from a to b.
    Of(Direction),
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Has => f.write_str("has"),
            Relation::Is => f.write_str("is"),
            Relation::Have => f.write_str("have"),
            Relation::In => f.write_str("in"),
            Relation::Visited => f.write_str("visited"),
            Relation::Of(d) => write!(f, "{d} of"),
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "has" => Relation::Has,
            "is" => Relation::Is,
            "have" => Relation::Have,
            "in" => Relation::In,
            "visited" => Relation::Visited,
            other => {
                let dir = other
                    .strip_suffix(" of")
                    .and_then(Direction::parse)
                    .ok_or_else(|| format!("unknown relation `{other}`"))?;
                Relation::Of(dir)
            }
        })
    }
}

/// `⟨subject, relation, object⟩` over normalized entity names. Names are
/// shared so that cloning graphs is cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Arc<str>,
    pub relation: Relation,
    pub object: Arc<str>,
}

impl Triple {
    /// Returns `None` if either side normalizes to the empty string.
    pub fn new(subject: &str, relation: Relation, object: &str) -> Option<Self> {
        let s = normalize(subject);
        let o = normalize(object);
        if s.is_empty() || o.is_empty() {
            return None;
        }
        Some(Self { subject: s.into(), relation, object: o.into() })
    }

    fn digest(&self) -> u64 {
        let mut h = StableHasher::new();
        h.write_str(&self.subject);
        h.write_str(&self.relation.to_string());
        h.write_str(&self.object);
        h.finish()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.subject, self.relation, self.object)
    }
}

/// A room transition observed by the agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Movement {
    pub from: String,
    pub direction: Direction,
    pub to: String,
}

/// Digest of the empty graph.
pub const EMPTY_KG_HASH: u64 = 0x6a09_e667_f3bc_c909;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    triples: BTreeSet<Triple>,
    pub step: u64,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    /// Every node name appearing in any triple.
    pub fn entities(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(t.subject.clone());
            out.insert(t.object.clone());
        }
        out
    }

    /// Objects of `has` and `have` triples leaving `you` or its location.
    pub fn at_hand(&self) -> BTreeSet<Arc<str>> {
        let loc = self.location();
        self.triples
            .iter()
            .filter(|t| match t.relation {
                Relation::Have => &*t.subject == "you",
                Relation::Has => Some(&*t.subject) == loc,
                _ => false,
            })
            .map(|t| t.object.clone())
            .collect()
    }

    /// The current `⟨you, in, room⟩` target, if any.
    pub fn location(&self) -> Option<&str> {
        self.triples
            .iter()
            .find(|t| t.relation == Relation::In && &*t.subject == "you")
            .map(|t| &*t.object)
    }

    /// Applies the update rules for one observation's answers:
    /// room-has-item, object-is-attribute, you-have-item, room-direction-room,
    /// plus a single `⟨you, in, room⟩` that replaces the previous one and an
    /// accumulating `⟨room, visited, yes⟩`.
    pub fn update(&mut self, answers: &AnswerSet, movement: Option<&Movement>) {
        self.step += 1;
        let Some(loc) = answers.location.as_deref().map(normalize).filter(|l| !l.is_empty()) else {
            return;
        };
        self.triples.retain(|t| !(t.relation == Relation::In && &*t.subject == "you"));
        self.extend([
            Triple::new("you", Relation::In, &loc),
            Triple::new(&loc, Relation::Visited, "yes"),
        ]);
        for item in &answers.surroundings {
            self.extend([Triple::new(&loc, Relation::Has, item)]);
        }
        for item in &answers.inventory {
            self.extend([Triple::new("you", Relation::Have, item)]);
        }
        for (obj, attrs) in &answers.attributes {
            for attr in attrs {
                self.extend([Triple::new(obj, Relation::Is, attr)]);
            }
        }
        if let Some(m) = movement {
            self.extend([Triple::new(&m.from, Relation::Of(m.direction), &m.to)]);
        }
    }

    fn extend(&mut self, triples: impl IntoIterator<Item = Option<Triple>>) {
        self.triples.extend(triples.into_iter().flatten());
    }

    /// Order-independent 64-bit digest; equal triple sets give equal digests.
    pub fn kg_hash(&self) -> u64 {
        if self.triples.is_empty() {
            return EMPTY_KG_HASH;
        }
        let sum = self.triples.iter().fold(0u64, |acc, t| acc.wrapping_add(mix64(t.digest())));
        mix64(sum ^ (self.triples.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// One triple per line, tab-separated, sorted.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#step\t{}\n", self.step);
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut kg = Self::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            if let Some(n) = line.strip_prefix("#step\t") {
                kg.step = n.parse().map_err(|_| format!("malformed step line `{line}`"))?;
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(s), Some(r), Some(o), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(format!("malformed triple line `{line}`"));
            };
            let t = Triple::new(s, r.parse()?, o).ok_or_else(|| format!("empty field in `{line}`"))?;
            kg.insert(t);
        }
        Ok(kg)
    }
}

/// Union of every triple held during a run. Never shrinks.
#[derive(Debug, Clone, Default)]
pub struct GlobalEdgeSet {
    seen: BTreeSet<Triple>,
}

impl GlobalEdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    /// Count of triples in `kg` never seen before, without recording them.
    pub fn novelty(&self, kg: &KnowledgeGraph) -> usize {
        kg.triples().filter(|t| !self.seen.contains(*t)).count()
    }

    /// Intrinsic reward: `|kg \ global|`, then `global ← global ∪ kg`.
    pub fn im_reward(&mut self, kg: &KnowledgeGraph) -> usize {
        let mut new = 0;
        for t in kg.triples() {
            if !self.seen.contains(t) {
                self.seen.insert(t.clone());
                new += 1;
            }
        }
        new
    }
}

/// Functional form of the intrinsic reward: returns `r_IM` and the grown set.
pub fn im_reward(kg: &KnowledgeGraph, global: &GlobalEdgeSet) -> (usize, GlobalEdgeSet) {
    let mut next = global.clone();
    let r = next.im_reward(kg);
    (r, next)
}

/// Which quantity scales the intrinsic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreTerm {
    /// Cumulative episode score to date.
    #[default]
    EpisodeScore,
    /// The step's own game reward.
    StepReward,
}

impl ScoreTerm {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreTerm::EpisodeScore => "episode-score",
            ScoreTerm::StepReward => "step-reward",
        }
    }
}

impl FromStr for ScoreTerm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "episode-score" => Ok(Self::EpisodeScore),
            "step-reward" => Ok(Self::StepReward),
            other => Err(format!("unknown score term `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shaping {
    pub alpha: f64,
    pub epsilon: f64,
    pub r_max: f64,
    pub score_term: ScoreTerm,
}

impl Shaping {
    pub fn new(alpha: f64, epsilon: f64, r_max: f64, score_term: ScoreTerm) -> Result<Self, ConfigError> {
        if !(r_max > 0.0) {
            return Err(ConfigError::Field { field: "r_max", reason: format!("must be > 0, got {r_max}") });
        }
        if !(alpha >= 0.0) {
            return Err(ConfigError::Field { field: "alpha", reason: format!("must be >= 0, got {alpha}") });
        }
        if !(epsilon >= 0.0) {
            return Err(ConfigError::Field { field: "epsilon", reason: format!("must be >= 0, got {epsilon}") });
        }
        Ok(Self { alpha, epsilon, r_max, score_term })
    }

    /// `r_g + α · r_IM · (term + ε) / r_max`.
    pub fn reward(&self, step_reward: i32, episode_score: i32, r_im: usize) -> f64 {
        let term = match self.score_term {
            ScoreTerm::EpisodeScore => episode_score,
            ScoreTerm::StepReward => step_reward,
        };
        shaped_reward(f64::from(step_reward), f64::from(term), self.r_max, r_im, self.alpha, self.epsilon)
    }
}

/// `r_t = r_g + α · r_IM · (score_term + ε) / r_max`. With α = 0 or
/// r_IM = 0 this returns `r_g` exactly.
pub fn shaped_reward(r_g: f64, score_term: f64, r_max: f64, r_im: usize, alpha: f64, epsilon: f64) -> f64 {
    if r_im == 0 || alpha == 0.0 {
        return r_g;
    }
    r_g + alpha * r_im as f64 * (score_term + epsilon) / r_max
}
