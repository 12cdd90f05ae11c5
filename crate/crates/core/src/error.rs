use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid game ({invariant}): {detail}")]
    Validation { invariant: &'static str, detail: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("cannot step a terminal state")]
    Terminal,
    #[error("state search exceeded {0} states")]
    SearchLimit(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("unsupported snapshot version `{found}`")]
    Version { found: String },
    #[error("snapshot belongs to a different game definition")]
    GameMismatch,
    #[error("malformed snapshot line `{0}`")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuestError {
    #[error("dependency graph has a cycle through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("edge references vertex index {0} out of range")]
    BadEdge(usize),
    #[error("game has no quest graph")]
    MissingDag,
    #[error("vertex `{vertex}` depends on unknown {kind} `{name}`")]
    UnmappedDependency { vertex: String, kind: &'static str, name: String },
    #[error("vertex `{vertex}` reward {reward} does not map to a reward event")]
    UnmappedReward { vertex: String, reward: i32 },
    #[error("vertex `{0}` is unreachable in the game")]
    Unreachable(String),
    #[error("edge {from} -> {to} is not realisable in the game")]
    UnrealisableEdge { from: String, to: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("non-finite gradient at update step {step}")]
    NonFiniteGradient { step: u64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Quest(#[from] QuestError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("chain replay diverged: {0}")]
    ChainDivergence(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
