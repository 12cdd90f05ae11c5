//! Factored template-then-entity actor-critic over hashed observation and
//! knowledge-graph features.

mod features;
mod model;

pub use features::{Encoder, FeatureConfig, GraphCache};
pub use model::{
    a2c_update, act, filler_distribution, gradients, log_prob, loss_terms, Checkpoint, Decision, Gradients, LossTerms, Mode, PolicyConfig,
    PolicyParams, Targets, Transition, CHECKPOINT_VERSION,
};
