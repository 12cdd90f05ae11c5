//! Deterministic text-adventure engine.

mod action;
mod condition;
mod def;
mod engine;
mod format;
mod search;
mod snapshot;
mod state;

pub use action::{enumerate_grounded, grounded_count, GroundedAction};
pub use condition::{Atom, Condition, Effect, Literal};
pub use def::{
    ActionTemplate, Builtin, DeathCondition, Direction, Entity, EntityId, EntityKind, EventId, Exit, FlagId,
    GameDef, Location, Object, ObjectId, RewardEvent, Room, RoomId, Rule, BLANK,
};
pub use engine::{DARK_TEXT, EMPTY_HANDED};
pub use format::{load_game, parse_game, FORMAT_VERSION};
pub use search::SearchOracle;
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};
pub use state::{Observation, StepOutcome, WorldState};
