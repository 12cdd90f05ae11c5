//! The game-definition file format.
//!
//! A definition is a TOML document with a versioned header:
//!
//! ```toml
//! format = "textquest-game/1"
//! name = "tiny"
//! start = "hall"
//! max_score = 5
//! templates = ["go north", "go south", "take ___", "open ___"]
//!
//! [flags]
//! box-open = false
//!
//! [[room]]
//! id = "hall"
//! name = "Hall"
//! description = "A bare hall."
//! exits = { north = "yard" }
//!
//! [[object]]
//! id = "box"
//! noun = "box"
//! name = "wooden box"
//! location = "hall"
//!
//! [[rule]]
//! action = "open box"
//! when = "in:hall & !flag:box-open"
//! effects = ["set:box-open"]
//! say = "The box creaks open."
//!
//! [[event]]
//! id = "opened"
//! when = "flag:box-open"
//! points = 5
//! ```
//!
//! Conditions are `&`-joined atoms (`flag:x`, `in:room`, `has:object`,
//! `at:object:location`, `fired:event`), each optionally negated with `!`.
//! Effects are `set:flag`, `clear:flag`, `move:object:location`, `goto:room`.
//! Locations are a room id, an object id (container), `inventory` or `nowhere`.
//!
//! An optional `[quest]` table holds the dependency DAG:
//! `[[quest.vertex]]` entries (`id`, `locations`, `items`, `reward`, `event`)
//! and `edges = [["from", "to"], ...]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Deserialize;

use super::condition::{parse_condition, parse_effect, Condition, Names};
use super::def::*;
use super::search::SearchOracle;
use crate::error::GameError;
use crate::hash::hash_str;
use crate::quest::{DepVertex, DependencyGraph};

pub const FORMAT_VERSION: &str = "textquest-game/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    format: String,
    name: String,
    start: String,
    max_score: i32,
    templates: Vec<String>,
    #[serde(default)]
    vocabulary: Option<Vec<String>>,
    #[serde(default)]
    flags: BTreeMap<String, bool>,
    #[serde(default, rename = "room")]
    rooms: Vec<RawRoom>,
    #[serde(default, rename = "object")]
    objects: Vec<RawObject>,
    #[serde(default, rename = "rule")]
    rules: Vec<RawRule>,
    #[serde(default, rename = "event")]
    events: Vec<RawEvent>,
    #[serde(default, rename = "death")]
    deaths: Vec<RawDeath>,
    #[serde(default)]
    quest: Option<RawQuest>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    id: String,
    name: String,
    description: String,
    #[serde(default)]
    lit_when: Option<String>,
    #[serde(default, rename = "variant")]
    variants: Vec<RawVariant>,
    #[serde(default)]
    exits: BTreeMap<String, RawExit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    when: String,
    description: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExit {
    To(String),
    Guarded {
        to: String,
        #[serde(default)]
        when: Option<String>,
        #[serde(default)]
        blocked: Option<String>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    id: String,
    noun: String,
    name: String,
    location: String,
    #[serde(default)]
    attributes: Vec<String>,
    #[serde(default)]
    flag_attributes: BTreeMap<String, String>,
    #[serde(default)]
    portable: bool,
    #[serde(default)]
    visible: Option<String>,
    #[serde(default)]
    examine: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    action: String,
    #[serde(default)]
    when: Option<String>,
    #[serde(default)]
    effects: Vec<String>,
    say: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    id: String,
    when: String,
    points: i32,
    #[serde(default = "yes")]
    once: bool,
    #[serde(default)]
    message: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeath {
    when: String,
    message: String,
    #[serde(default = "yes")]
    terminal: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuest {
    #[serde(default, rename = "vertex")]
    vertices: Vec<RawVertex>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: String,
    #[serde(default)]
    locations: Vec<String>,
    #[serde(default)]
    items: Vec<String>,
    #[serde(default)]
    reward: i32,
    #[serde(default)]
    event: Option<String>,
}

fn yes() -> bool {
    true
}

fn invalid(invariant: &'static str, detail: impl Into<String>) -> GameError {
    GameError::Validation { invariant, detail: detail.into() }
}

/// Parses and validates a game definition, including the reachability check
/// that the search oracle attains `max_score`.
pub fn load_game(text: &str) -> Result<GameDef, GameError> {
    let game = parse_game(text)?;
    let oracle = SearchOracle::explore(&game, SearchOracle::DEFAULT_STATE_LIMIT)
        .map_err(|e| invalid("reachable-rewards", e.to_string()))?;
    for (e, event) in game.events.iter().enumerate() {
        if event.points > 0 && !oracle.event_reachable(e) {
            return Err(invalid("reachable-rewards", format!("reward event `{}` is unreachable", event.key)));
        }
    }
    if oracle.max_score() != game.max_score {
        return Err(invalid(
            "max-score",
            format!("best reachable score is {} but max_score is {}", oracle.max_score(), game.max_score),
        ));
    }
    Ok(game)
}

/// Parses a definition and checks every invariant that does not need search.
pub fn parse_game(text: &str) -> Result<GameDef, GameError> {
    if text.trim().is_empty() {
        return Err(GameError::Parse { line: 1, column: 1, message: "empty game definition".into() });
    }
    let raw: RawGame = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(text, span.start))
            .unwrap_or((1, 1));
        GameError::Parse { line, column, message: e.message().to_owned() }
    })?;
    if raw.format != FORMAT_VERSION {
        return Err(invalid(
            "format-version",
            format!("expected `{FORMAT_VERSION}`, found `{}`", raw.format),
        ));
    }

    let mut game = GameDef {
        name: raw.name,
        start: 0,
        rooms: Vec::new(),
        objects: Vec::new(),
        flags: raw.flags.into_iter().collect(),
        templates: Vec::new(),
        rules: Vec::new(),
        events: Vec::new(),
        deaths: Vec::new(),
        max_score: raw.max_score,
        vocabulary: BTreeSet::new(),
        entities: Vec::new(),
        attribute_vocab: Vec::new(),
        quest: None,
        fingerprint: hash_str(0, text),
        rule_index: HashMap::new(),
        room_index: HashMap::new(),
        object_index: HashMap::new(),
        flag_index: HashMap::new(),
        event_index: HashMap::new(),
        entity_index: HashMap::new(),
    };

    for (i, (name, _)) in game.flags.iter().enumerate() {
        game.flag_index.insert(name.clone(), i);
    }
    for (i, room) in raw.rooms.iter().enumerate() {
        if game.room_index.insert(room.id.clone(), i).is_some() {
            return Err(invalid("unique-ids", format!("duplicate room `{}`", room.id)));
        }
    }
    for (i, obj) in raw.objects.iter().enumerate() {
        if game.room_index.contains_key(&obj.id) || game.object_index.insert(obj.id.clone(), i).is_some() {
            return Err(invalid("unique-ids", format!("duplicate object `{}`", obj.id)));
        }
    }
    for (i, ev) in raw.events.iter().enumerate() {
        if game.event_index.insert(ev.id.clone(), i).is_some() {
            return Err(invalid("unique-ids", format!("duplicate event `{}`", ev.id)));
        }
    }
    game.start = game
        .room_id(&raw.start)
        .ok_or_else(|| invalid("start-room", format!("start room `{}` is not defined", raw.start)))?;

    let cond = |game: &GameDef, text: &str, ctx: &str| -> Result<Condition, GameError> {
        parse_condition(text, game).map_err(|e| invalid("condition", format!("{ctx}: {e}")))
    };

    let mut rooms = Vec::with_capacity(raw.rooms.len());
    for room in &raw.rooms {
        let mut exits = Vec::new();
        for (dir, exit) in &room.exits {
            let direction = Direction::parse(dir)
                .ok_or_else(|| invalid("exit-direction", format!("room `{}`: unknown direction `{dir}`", room.id)))?;
            let (to, when, blocked) = match exit {
                RawExit::To(to) => (to, None, None),
                RawExit::Guarded { to, when, blocked } => (to, when.as_deref(), blocked.clone()),
            };
            let to = game.room_id(to).ok_or_else(|| {
                invalid("exit-target", format!("room `{}` exit {dir} leads to undefined room `{to}`", room.id))
            })?;
            let when = match when {
                Some(w) => cond(&game, w, &format!("room `{}` exit {dir}", room.id))?,
                None => Condition::always(),
            };
            exits.push(Exit { direction, to, when, blocked });
        }
        let mut variants = Vec::new();
        for v in &room.variants {
            variants.push((cond(&game, &v.when, &format!("room `{}` variant", room.id))?, v.description.clone()));
        }
        let lit_when = match &room.lit_when {
            Some(w) => Some(cond(&game, w, &format!("room `{}` lit_when", room.id))?),
            None => None,
        };
        rooms.push(Room {
            key: room.id.clone(),
            name: room.name.clone(),
            description: room.description.clone(),
            variants,
            exits,
            lit_when,
        });
    }
    game.rooms = rooms;

    let mut objects = Vec::with_capacity(raw.objects.len());
    for obj in &raw.objects {
        let location = game.location(&obj.location).ok_or_else(|| {
            invalid("object-location", format!("object `{}` has undefined location `{}`", obj.id, obj.location))
        })?;
        let mut flag_attributes = Vec::new();
        for (attr, flag) in &obj.flag_attributes {
            let f = game.flag_id(flag).ok_or_else(|| {
                invalid("condition", format!("object `{}` attribute `{attr}` uses unknown flag `{flag}`", obj.id))
            })?;
            flag_attributes.push((attr.clone(), f));
        }
        let visible = match &obj.visible {
            Some(v) => cond(&game, v, &format!("object `{}` visible", obj.id))?,
            None => Condition::always(),
        };
        if obj.noun.split_whitespace().count() != 1 {
            return Err(invalid("object-noun", format!("object `{}` noun must be a single word", obj.id)));
        }
        objects.push(Object {
            key: obj.id.clone(),
            noun: obj.noun.to_lowercase(),
            name: obj.name.clone(),
            location,
            attributes: obj.attributes.clone(),
            flag_attributes,
            portable: obj.portable,
            visible,
            examine: obj.examine.clone(),
        });
    }
    game.objects = objects;

    for (i, event) in raw.events.iter().enumerate() {
        if event.points > 0 && !event.once {
            return Err(invalid(
                "once-only-rewards",
                format!("event `{}` awards positive points but is repeatable", event.id),
            ));
        }
        let when = cond(&game, &event.when, &format!("event `{}`", event.id))?;
        game.events.push(RewardEvent {
            key: event.id.clone(),
            when,
            points: event.points,
            once: event.once,
            message: event.message.clone(),
        });
        debug_assert_eq!(game.events.len(), i + 1);
    }
    let total = game.once_only_total();
    if total != game.max_score {
        return Err(invalid(
            "max-score",
            format!("once-only rewards sum to {total} but max_score is {}", game.max_score),
        ));
    }

    for death in &raw.deaths {
        game.deaths.push(DeathCondition {
            when: cond(&game, &death.when, "death")?,
            message: death.message.clone(),
            terminal: death.terminal,
        });
    }

    for t in &raw.templates {
        let template = ActionTemplate::parse(t).map_err(|e| invalid("template", e))?;
        game.templates.push(template);
    }
    if game.templates.is_empty() {
        return Err(invalid("template", "at least one template is required"));
    }

    // Entities: you, rooms, object nouns.
    let mut entities = vec![Entity { token: "you".into(), kind: EntityKind::You }];
    for (r, room) in game.rooms.iter().enumerate() {
        entities.push(Entity { token: room.name.to_lowercase(), kind: EntityKind::Room(r) });
    }
    for (o, obj) in game.objects.iter().enumerate() {
        entities.push(Entity { token: obj.noun.clone(), kind: EntityKind::Object(o) });
    }
    for (i, e) in entities.iter().enumerate() {
        if game.entity_index.insert(e.token.clone(), i).is_some() {
            return Err(invalid("unique-entities", format!("entity token `{}` is used twice", e.token)));
        }
    }
    game.entities = entities;

    for (i, rule) in raw.rules.iter().enumerate() {
        let when = match &rule.when {
            Some(w) => cond(&game, w, &format!("rule `{}`", rule.action))?,
            None => Condition::always(),
        };
        let mut effects = Vec::new();
        for e in &rule.effects {
            effects.push(
                parse_effect(e, &game).map_err(|err| invalid("effect", format!("rule `{}`: {err}", rule.action)))?,
            );
        }
        let action = rule.action.split_whitespace().collect::<Vec<_>>().join(" ");
        game.rules.push(Rule { action: action.clone(), when, effects, say: rule.say.clone() });
        game.rule_index.entry(action).or_default().push(i);
    }
    for rule in &game.rules {
        if game.parse_action(&rule.action).is_none() {
            return Err(invalid(
                "rule-action",
                format!("rule action `{}` does not match any template", rule.action),
            ));
        }
    }

    // Vocabulary: every word of names, nouns and templates.
    let mut derived = BTreeSet::new();
    let words = |s: &str| s.to_lowercase().split_whitespace().map(str::to_owned).collect::<Vec<_>>();
    for room in &game.rooms {
        derived.extend(words(&room.name));
    }
    for obj in &game.objects {
        derived.extend(words(&obj.name));
        derived.insert(obj.noun.clone());
    }
    for t in &game.templates {
        derived.extend(t.words.iter().filter(|w| *w != BLANK).cloned());
    }
    derived.insert("you".into());
    match raw.vocabulary {
        Some(declared) => {
            let declared: BTreeSet<String> = declared.iter().map(|w| w.to_lowercase()).collect();
            if let Some(missing) = derived.iter().find(|w| !declared.contains(*w)) {
                return Err(invalid("vocabulary", format!("word `{missing}` is used but not in the vocabulary")));
            }
            game.vocabulary = declared;
        }
        None => game.vocabulary = derived,
    }

    let mut attrs = BTreeSet::new();
    for obj in &game.objects {
        attrs.extend(obj.attributes.iter().cloned());
        attrs.extend(obj.flag_attributes.iter().map(|(a, _)| a.clone()));
    }
    game.attribute_vocab = attrs.into_iter().collect();

    if let Some(q) = raw.quest {
        let mut index = HashMap::new();
        let mut vertices = Vec::new();
        for (i, v) in q.vertices.into_iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(invalid("quest-dag", format!("duplicate quest vertex `{}`", v.id)));
            }
            vertices.push(DepVertex {
                id: v.id,
                locations: v.locations,
                items: v.items,
                reward: v.reward,
                event: v.event,
            });
        }
        let mut edges = Vec::new();
        for (from, to) in q.edges {
            let f = *index
                .get(&from)
                .ok_or_else(|| invalid("quest-dag", format!("edge from undefined vertex `{from}`")))?;
            let t = *index
                .get(&to)
                .ok_or_else(|| invalid("quest-dag", format!("edge to undefined vertex `{to}`")))?;
            edges.push((f, t));
        }
        game.quest = Some(DependencyGraph::new(vertices, edges).map_err(|e| invalid("quest-dag", e.to_string()))?);
    }

    Ok(game)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rfind('\n').map_or(prefix.len(), |nl| prefix.len() - nl - 1) + 1;
    (line, column)
}
