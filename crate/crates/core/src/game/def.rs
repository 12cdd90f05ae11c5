use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::condition::{Condition, Effect, Names};
use crate::quest::DependencyGraph;

pub type RoomId = usize;
pub type ObjectId = usize;
pub type FlagId = usize;
pub type EventId = usize;
pub type EntityId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    South,
    East,
    West,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
        Direction::Up,
        Direction::Down,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }

    pub fn parse(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == word)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Room(RoomId),
    Inventory,
    Inside(ObjectId),
    Nowhere,
}

#[derive(Debug, Clone)]
pub struct Exit {
    pub direction: Direction,
    pub to: RoomId,
    pub when: Condition,
    pub blocked: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Room {
    pub key: String,
    pub name: String,
    pub description: String,
    /// Alternative descriptions; the first whose condition holds wins.
    pub variants: Vec<(Condition, String)>,
    pub exits: Vec<Exit>,
    /// When set and false, the room renders as pitch black.
    pub lit_when: Option<Condition>,
}

#[derive(Debug, Clone)]
pub struct Object {
    pub key: String,
    /// Single token used to refer to the object in commands and answers.
    pub noun: String,
    /// Display name used in rendered text ("small mailbox").
    pub name: String,
    pub location: Location,
    pub attributes: Vec<String>,
    /// Attributes that hold while a flag is set, e.g. `lit` for the lamp.
    pub flag_attributes: Vec<(String, FlagId)>,
    pub portable: bool,
    pub visible: Condition,
    pub examine: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Go(Direction),
    Take,
    Examine,
    Look,
    Inventory,
    None,
}

#[derive(Debug, Clone)]
pub struct ActionTemplate {
    pub text: String,
    /// Words of the template; blanks are `___`.
    pub words: Vec<String>,
    pub blanks: usize,
    pub builtin: Builtin,
}

pub const BLANK: &str = "___";

impl ActionTemplate {
    pub fn parse(text: &str) -> Result<Self, String> {
        let words: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
        if words.is_empty() {
            return Err("empty template".into());
        }
        let blanks = words.iter().filter(|w| *w == BLANK).count();
        if blanks > 2 {
            return Err(format!("template `{text}` has {blanks} blanks (max 2)"));
        }
        if words[0] == BLANK {
            return Err(format!("template `{text}` must start with a verb"));
        }
        let builtin = match words.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            ["go", dir] => Direction::parse(dir).map_or(Builtin::None, Builtin::Go),
            ["take", BLANK] => Builtin::Take,
            ["examine", BLANK] => Builtin::Examine,
            ["look"] => Builtin::Look,
            ["inventory"] => Builtin::Inventory,
            _ => Builtin::None,
        };
        Ok(Self { text: words.join(" "), words, blanks, builtin })
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub action: String,
    pub when: Condition,
    pub effects: Vec<Effect>,
    pub say: String,
}

#[derive(Debug, Clone)]
pub struct RewardEvent {
    pub key: String,
    pub when: Condition,
    pub points: i32,
    pub once: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DeathCondition {
    pub when: Condition,
    pub message: String,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    You,
    Room(RoomId),
    Object(ObjectId),
}

#[derive(Debug, Clone)]
pub struct Entity {
    pub token: String,
    pub kind: EntityKind,
}

/// Immutable description of a game world.
#[derive(Debug, Clone)]
pub struct GameDef {
    pub name: String,
    pub start: RoomId,
    pub rooms: Vec<Room>,
    pub objects: Vec<Object>,
    pub flags: Vec<(String, bool)>,
    pub templates: Vec<ActionTemplate>,
    pub rules: Vec<Rule>,
    pub events: Vec<RewardEvent>,
    pub deaths: Vec<DeathCondition>,
    pub max_score: i32,
    pub vocabulary: BTreeSet<String>,
    /// Everything a template blank may be filled with: `you`, rooms, object nouns.
    pub entities: Vec<Entity>,
    /// Sorted union of static and flag attributes; the `[atr]` list.
    pub attribute_vocab: Vec<String>,
    pub quest: Option<DependencyGraph>,
    /// Digest of the definition text; snapshots refuse to restore across games.
    pub fingerprint: u64,
    pub(crate) rule_index: HashMap<String, Vec<usize>>,
    pub(crate) room_index: HashMap<String, RoomId>,
    pub(crate) object_index: HashMap<String, ObjectId>,
    pub(crate) flag_index: HashMap<String, FlagId>,
    pub(crate) event_index: HashMap<String, EventId>,
    pub(crate) entity_index: HashMap<String, EntityId>,
}

impl GameDef {
    pub fn room_id(&self, key: &str) -> Option<RoomId> {
        self.room_index.get(key).copied()
    }

    pub fn object_id(&self, key: &str) -> Option<ObjectId> {
        self.object_index.get(key).copied()
    }

    pub fn object_by_noun(&self, noun: &str) -> Option<ObjectId> {
        self.objects.iter().position(|o| o.noun == noun)
    }

    pub fn flag_id(&self, key: &str) -> Option<FlagId> {
        self.flag_index.get(key).copied()
    }

    pub fn event_id(&self, key: &str) -> Option<EventId> {
        self.event_index.get(key).copied()
    }

    pub fn entity_id(&self, token: &str) -> Option<EntityId> {
        self.entity_index.get(token).copied()
    }

    pub fn entity_token(&self, id: EntityId) -> &str {
        &self.entities[id].token
    }

    /// Lowercased room name, the form rooms take in answers and triples.
    pub fn room_token(&self, room: RoomId) -> String {
        self.rooms[room].name.to_lowercase()
    }

    pub fn rules_for(&self, action_text: &str) -> &[usize] {
        self.rule_index.get(action_text).map_or(&[], Vec::as_slice)
    }

    pub fn once_only_total(&self) -> i32 {
        self.events.iter().filter(|e| e.once && e.points > 0).map(|e| e.points).sum()
    }
}

impl Names for GameDef {
    fn flag(&self, name: &str) -> Option<FlagId> {
        self.flag_id(name)
    }
    fn room(&self, name: &str) -> Option<RoomId> {
        self.room_id(name)
    }
    fn object(&self, name: &str) -> Option<ObjectId> {
        self.object_id(name)
    }
    fn event(&self, name: &str) -> Option<EventId> {
        self.event_id(name)
    }
}
