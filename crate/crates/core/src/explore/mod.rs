//! Exploration strategies: the plain actor-critic loop, structured
//! exploration with backtracking and policy chaining, and a cell archive.

mod archive;
mod buffer;
mod chain;
mod env;
mod go;
mod log;
mod mc;
mod monitor;
mod segment;
mod trail;

pub use archive::{select_weighted, Cell, CellArchive, CellKey};
pub use buffer::{BufferEntry, StateBuffer};
pub use chain::{execute_chain, ChainModule, ChainReplay, PolicyChain, CHAIN_VERSION};
pub use env::{rollout, Env, Frame, Rollout};
pub use go::go_train;
pub use log::{EpisodeRecord, EvalRecord, RunOutcome, StepRecord};
pub use mc::{mc_train, vanilla_train};
pub use monitor::BottleneckMonitor;
pub use trail::Trail;

use crate::error::ConfigError;
use crate::kg::{ScoreTerm, Shaping};
use crate::policy::{FeatureConfig, PolicyConfig};

/// Everything a training run needs besides the game and answer backend.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploreConfig {
    /// Total environment steps, backtracking included.
    pub budget: u64,
    pub batch: usize,
    /// Steps each instance takes between updates; returns bootstrap after at most this many.
    pub rollout: u32,
    /// Steps before an episode is cut and restarted from its launch.
    pub horizon: u32,
    /// Per-instance steps without progress before an instance counts as
    /// stuck; `None` never triggers.
    pub patience: Option<u64>,
    pub patience_batch_factor: f64,
    pub buffer_size: usize,
    /// Steps each backtrack restart may train for; defaults to a tenth of the budget.
    pub backtrack_steps: Option<u64>,
    /// Updates between evaluations.
    pub eval_interval: u64,
    /// Seeded sampled executions tried alongside the greedy one when
    /// evaluating a policy.
    pub eval_samples: u32,
    pub alpha: f64,
    pub epsilon: f64,
    pub score_term: ScoreTerm,
    pub cell_step: u32,
    pub policy: PolicyConfig,
    pub features: FeatureConfig,
    pub seed: u64,
    pub record_steps: bool,
    /// Keep every graph scored for novelty, in order.
    pub record_graphs: bool,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            budget: 200_000,
            batch: 16,
            rollout: 8,
            horizon: 60,
            patience: Some(3000),
            patience_batch_factor: 0.75,
            buffer_size: 40,
            backtrack_steps: None,
            eval_interval: 10,
            eval_samples: 7,
            alpha: 1.0,
            epsilon: 1.0,
            score_term: ScoreTerm::EpisodeScore,
            cell_step: 32,
            policy: PolicyConfig::default(),
            features: FeatureConfig::default(),
            seed: 0,
            record_steps: false,
            record_graphs: false,
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field, reason: &str| Err(ConfigError::Field { field, reason: reason.into() });
        if self.batch == 0 {
            return field("batch", "must be at least 1");
        }
        if self.rollout == 0 {
            return field("rollout", "must be at least 1");
        }
        if self.horizon == 0 {
            return field("horizon", "must be at least 1");
        }
        if self.patience == Some(0) {
            return field("patience", "must be positive");
        }
        if !(self.patience_batch_factor > 0.0 && self.patience_batch_factor <= 1.0) {
            return field("patience_batch_factor", "must lie in (0, 1]");
        }
        if self.buffer_size == 0 {
            return field("buffer_size", "must be at least 1");
        }
        if self.eval_interval == 0 {
            return field("eval_interval", "must be at least 1");
        }
        if self.cell_step == 0 {
            return field("cell_step", "must be at least 1");
        }
        if !(self.policy.gamma >= 0.0 && self.policy.gamma <= 1.0) {
            return field("gamma", "must lie in [0, 1]");
        }
        if !(self.policy.learning_rate > 0.0) {
            return field("learning_rate", "must be positive");
        }
        Ok(())
    }

    pub fn backtrack_budget(&self) -> u64 {
        self.backtrack_steps.unwrap_or(self.budget / 10)
    }

    pub fn shaping(&self, r_max: i32) -> Result<Shaping, ConfigError> {
        Shaping::new(self.alpha, self.epsilon, f64::from(r_max), self.score_term)
    }
}
