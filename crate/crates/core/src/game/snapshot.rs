//! Versioned, bit-exact snapshot serialization.
//!
//! ```text
//! textquest-snapshot/1
//! game miniz 9f3c...
//! room kitchen
//! turn 12
//! score 10
//! alive 1
//! object lamp inventory
//! flag window-open 1
//! fired kitchen 1
//! ```
//! Every object, flag and event appears exactly once, in definition order.

use std::fmt::Write as _;

use super::def::{GameDef, Location};
use super::state::WorldState;
use crate::error::SnapshotError;

pub const SNAPSHOT_VERSION: &str = "textquest-snapshot/1";

/// A frozen world state tagged with the game it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub fingerprint: u64,
    pub state: WorldState,
}

impl Snapshot {
    pub fn take(game: &GameDef, state: &WorldState) -> Self {
        Self { fingerprint: game.fingerprint, state: state.clone() }
    }

    pub fn restore(&self, game: &GameDef) -> Result<WorldState, SnapshotError> {
        if self.fingerprint != game.fingerprint {
            return Err(SnapshotError::GameMismatch);
        }
        Ok(self.state.clone())
    }

    pub fn to_text(&self, game: &GameDef) -> String {
        let s = &self.state;
        let mut out = String::new();
        let _ = writeln!(out, "{SNAPSHOT_VERSION}");
        let _ = writeln!(out, "game {} {:016x}", game.name, self.fingerprint);
        let _ = writeln!(out, "room {}", game.rooms[s.room].key);
        let _ = writeln!(out, "turn {}", s.turn);
        let _ = writeln!(out, "score {}", s.score);
        let _ = writeln!(out, "alive {}", u8::from(s.alive));
        for (o, loc) in s.objects.iter().enumerate() {
            let loc = match *loc {
                Location::Room(r) => game.rooms[r].key.as_str(),
                Location::Inventory => "inventory",
                Location::Inside(c) => game.objects[c].key.as_str(),
                Location::Nowhere => "nowhere",
            };
            let _ = writeln!(out, "object {} {}", game.objects[o].key, loc);
        }
        for (f, v) in s.flags.iter().enumerate() {
            let _ = writeln!(out, "flag {} {}", game.flags[f].0, u8::from(*v));
        }
        for (e, v) in s.fired.iter().enumerate() {
            let _ = writeln!(out, "fired {} {}", game.events[e].key, u8::from(*v));
        }
        out
    }

    pub fn from_text(text: &str, game: &GameDef) -> Result<Self, SnapshotError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version { found: header.to_owned() });
        }
        let bad = |line: &str| SnapshotError::Malformed(line.to_owned());
        let mut field = |key: &str| -> Result<String, SnapshotError> {
            let line = lines.next().ok_or_else(|| bad("<eof>"))?;
            let rest = line.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| bad(line))?;
            Ok(rest.to_owned())
        };
        let game_line = field("game")?;
        let (_, fp) = game_line.rsplit_once(' ').ok_or_else(|| bad(&game_line))?;
        let fingerprint = u64::from_str_radix(fp, 16).map_err(|_| bad(&game_line))?;
        if fingerprint != game.fingerprint {
            return Err(SnapshotError::GameMismatch);
        }
        let room_key = field("room")?;
        let room = game.room_id(&room_key).ok_or_else(|| bad(&room_key))?;
        let turn = field("turn")?.parse().map_err(|_| bad("turn"))?;
        let score = field("score")?.parse().map_err(|_| bad("score"))?;
        let alive = parse_bit(&field("alive")?).ok_or_else(|| bad("alive"))?;

        let mut objects = Vec::with_capacity(game.objects.len());
        for obj in &game.objects {
            let rest = field("object")?;
            let (key, loc) = rest.split_once(' ').ok_or_else(|| bad(&rest))?;
            if key != obj.key {
                return Err(bad(&rest));
            }
            let loc = match loc {
                "inventory" => Location::Inventory,
                "nowhere" => Location::Nowhere,
                other => game
                    .room_id(other)
                    .map(Location::Room)
                    .or_else(|| game.object_id(other).map(Location::Inside))
                    .ok_or_else(|| bad(&rest))?,
            };
            objects.push(loc);
        }
        let mut flags = Vec::with_capacity(game.flags.len());
        for (name, _) in &game.flags {
            flags.push(keyed_bit(&field("flag")?, name).ok_or_else(|| bad(name))?);
        }
        let mut fired = Vec::with_capacity(game.events.len());
        for event in &game.events {
            fired.push(keyed_bit(&field("fired")?, &event.key).ok_or_else(|| bad(&event.key))?);
        }
        if let Some(extra) = lines.next() {
            return Err(bad(extra));
        }
        Ok(Self { fingerprint, state: WorldState { room, objects, flags, fired, score, turn, alive } })
    }
}

fn parse_bit(s: &str) -> Option<bool> {
    match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

fn keyed_bit(rest: &str, key: &str) -> Option<bool> {
    let (k, v) = rest.split_once(' ')?;
    (k == key).then_some(())?;
    parse_bit(v)
}
