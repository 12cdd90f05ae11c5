//! Deterministic text adventures, quest dependency graphs, and exploration
//! agents that track a knowledge graph of the world.

pub mod error;
pub mod explore;
pub mod extract;
pub mod game;
pub mod games;
pub mod hash;
pub mod kg;
pub mod policy;
pub mod quest;
pub mod runner;

pub use error::{ConfigError, EngineError, GameError, PolicyError, QuestError, RunError, SnapshotError};
pub use extract::{AnswerBackend, AnswerSet, QAContext};
pub use game::{GameDef, GroundedAction, Observation, Snapshot, WorldState};
pub use kg::{GlobalEdgeSet, KnowledgeGraph, Triple};
pub use quest::{DependencyGraph, DepVertex};
