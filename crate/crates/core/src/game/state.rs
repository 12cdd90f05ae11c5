use serde::{Deserialize, Serialize};

use super::def::{Location, RoomId};
use crate::hash::StableHasher;

/// Mutable simulation state. Indices refer to the owning `GameDef`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub room: RoomId,
    pub objects: Vec<Location>,
    pub flags: Vec<bool>,
    pub fired: Vec<bool>,
    pub score: i32,
    pub turn: u32,
    pub alive: bool,
}

impl WorldState {
    /// Digest of everything except the turn counter; two states with the same
    /// digest are interchangeable for exploration purposes.
    pub fn state_hash(&self) -> u64 {
        let mut h = StableHasher::new();
        h.write_u64(self.room as u64);
        for loc in &self.objects {
            let (tag, idx) = match *loc {
                Location::Room(r) => (0u64, r),
                Location::Inventory => (1, 0),
                Location::Inside(o) => (2, o),
                Location::Nowhere => (3, 0),
            };
            h.write_u64(tag);
            h.write_u64(idx as u64);
        }
        for &f in &self.flags {
            h.write(&[u8::from(f)]);
        }
        for &f in &self.fired {
            h.write(&[u8::from(f)]);
        }
        h.write_i64(i64::from(self.score));
        h.write(&[u8::from(self.alive)]);
        h.finish()
    }

    /// Equality ignoring the turn counter.
    pub fn same_world(&self, other: &WorldState) -> bool {
        self.room == other.room
            && self.objects == other.objects
            && self.flags == other.flags
            && self.fired == other.fired
            && self.score == other.score
            && self.alive == other.alive
    }

    pub fn done(&self) -> bool {
        !self.alive
    }
}

/// What the agent sees after each step.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Observation {
    /// Room description, identical to the output of `look`.
    pub desc: String,
    /// Response to the last action.
    pub feedback: String,
    pub inv: String,
    pub prev_action: String,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: WorldState,
    pub observation: Observation,
    pub reward: i32,
    pub done: bool,
}
