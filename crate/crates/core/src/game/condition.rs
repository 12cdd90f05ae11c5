use super::def::{EventId, FlagId, Location, ObjectId, RoomId};
use super::state::WorldState;

/// A single test over world state. Conditions are conjunctions of these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Flag(FlagId),
    In(RoomId),
    Has(ObjectId),
    At(ObjectId, Location),
    Fired(EventId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

/// Conjunction of literals; the empty condition is always true.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Condition {
    pub literals: Vec<Literal>,
}

impl Condition {
    pub fn always() -> Self {
        Self::default()
    }

    pub fn is_always(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn holds(&self, state: &WorldState) -> bool {
        self.literals.iter().all(|lit| lit.atom.holds(state) != lit.negated)
    }
}

impl Atom {
    pub fn holds(&self, state: &WorldState) -> bool {
        match *self {
            Atom::Flag(f) => state.flags[f],
            Atom::In(r) => state.room == r,
            Atom::Has(o) => state.objects[o] == Location::Inventory,
            Atom::At(o, loc) => state.objects[o] == loc,
            Atom::Fired(e) => state.fired[e],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Set(FlagId),
    Clear(FlagId),
    Move(ObjectId, Location),
    Goto(RoomId),
}

impl Effect {
    pub fn apply(&self, state: &mut WorldState) {
        match *self {
            Effect::Set(f) => state.flags[f] = true,
            Effect::Clear(f) => state.flags[f] = false,
            Effect::Move(o, loc) => state.objects[o] = loc,
            Effect::Goto(r) => state.room = r,
        }
    }
}

/// Name lookups needed to parse conditions and effects.
pub trait Names {
    fn flag(&self, name: &str) -> Option<FlagId>;
    fn room(&self, name: &str) -> Option<RoomId>;
    fn object(&self, name: &str) -> Option<ObjectId>;
    fn event(&self, name: &str) -> Option<EventId>;

    fn location(&self, name: &str) -> Option<Location> {
        match name {
            "inventory" => Some(Location::Inventory),
            "nowhere" => Some(Location::Nowhere),
            _ => self
                .room(name)
                .map(Location::Room)
                .or_else(|| self.object(name).map(Location::Inside)),
        }
    }
}

/// Parses `atom & !atom & ...`, e.g. `in:cellar & !flag:lamp-lit`.
/// `true` (or an empty string) is the always-true condition.
pub fn parse_condition(text: &str, names: &dyn Names) -> Result<Condition, String> {
    let text = text.trim();
    if text.is_empty() || text == "true" {
        return Ok(Condition::always());
    }
    let mut literals = Vec::new();
    for part in text.split('&') {
        let part = part.trim();
        let (negated, body) = match part.strip_prefix('!') {
            Some(rest) => (true, rest.trim()),
            None => (false, part),
        };
        let (kind, arg) = body
            .split_once(':')
            .ok_or_else(|| format!("malformed condition atom `{part}`"))?;
        let unknown = |what: &str, name: &str| format!("unknown {what} `{name}` in `{part}`");
        let atom = match kind {
            "flag" => Atom::Flag(names.flag(arg).ok_or_else(|| unknown("flag", arg))?),
            "in" => Atom::In(names.room(arg).ok_or_else(|| unknown("room", arg))?),
            "has" => Atom::Has(names.object(arg).ok_or_else(|| unknown("object", arg))?),
            "fired" => Atom::Fired(names.event(arg).ok_or_else(|| unknown("event", arg))?),
            "at" => {
                let (obj, loc) = arg
                    .split_once(':')
                    .ok_or_else(|| format!("`at` needs object:location in `{part}`"))?;
                Atom::At(
                    names.object(obj).ok_or_else(|| unknown("object", obj))?,
                    names.location(loc).ok_or_else(|| unknown("location", loc))?,
                )
            }
            other => return Err(format!("unknown condition kind `{other}` in `{part}`")),
        };
        literals.push(Literal { atom, negated });
    }
    Ok(Condition { literals })
}

/// Parses `set:flag`, `clear:flag`, `move:object:location`, `goto:room`.
pub fn parse_effect(text: &str, names: &dyn Names) -> Result<Effect, String> {
    let text = text.trim();
    let (kind, arg) = text
        .split_once(':')
        .ok_or_else(|| format!("malformed effect `{text}`"))?;
    let unknown = |what: &str, name: &str| format!("unknown {what} `{name}` in `{text}`");
    Ok(match kind {
        "set" => Effect::Set(names.flag(arg).ok_or_else(|| unknown("flag", arg))?),
        "clear" => Effect::Clear(names.flag(arg).ok_or_else(|| unknown("flag", arg))?),
        "goto" => Effect::Goto(names.room(arg).ok_or_else(|| unknown("room", arg))?),
        "move" => {
            let (obj, loc) = arg
                .split_once(':')
                .ok_or_else(|| format!("`move` needs object:location in `{text}`"))?;
            Effect::Move(
                names.object(obj).ok_or_else(|| unknown("object", obj))?,
                names.location(loc).ok_or_else(|| unknown("location", loc))?,
            )
        }
        other => return Err(format!("unknown effect kind `{other}` in `{text}`")),
    })
}
