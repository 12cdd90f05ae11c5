//! Question answering over observations: the context line format, the
//! answer backends that feed the knowledge graph, and dataset emission.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{GameDef, Observation, WorldState, EMPTY_HANDED};
use crate::hash::{mix64, StableHasher};

pub const LOC: &str = "[loc]";
pub const INV: &str = "[inv]";
pub const OBS: &str = "[obs]";
pub const ATR: &str = "[atr]";
/// Answer text for an empty list.
pub const NOTHING: &str = "nothing";

/// The text an answerer sees: room description, inventory listing, last
/// feedback and the attribute vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QAContext {
    pub loc: String,
    pub inv: String,
    pub obs: String,
    pub atr: Vec<String>,
}

impl QAContext {
    pub fn build(obs: &Observation, attr_vocab: &[String]) -> Self {
        Self {
            loc: obs.desc.clone(),
            inv: obs.inv.clone(),
            obs: obs.feedback.clone(),
            atr: attr_vocab.to_vec(),
        }
    }

    /// Inverse of `Display`. Fields must not themselves contain the markers.
    pub fn parse(line: &str) -> Result<Self, String> {
        let rest = line
            .strip_prefix(LOC)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| format!("context must start with `{LOC} `"))?;
        let (loc, rest) = split_marker(rest, INV)?;
        let (inv, rest) = split_marker(rest, OBS)?;
        let (obs, atr) = split_marker(rest, ATR)?;
        let atr = if atr.is_empty() { Vec::new() } else { atr.split(", ").map(str::to_owned).collect() };
        Ok(Self { loc: loc.into(), inv: inv.into(), obs: obs.into(), atr })
    }
}

fn split_marker<'a>(text: &'a str, marker: &str) -> Result<(&'a str, &'a str), String> {
    let sep = format!(" {marker} ");
    let at = text.find(&sep).ok_or_else(|| format!("missing `{marker}` section"))?;
    Ok((&text[..at], &text[at + sep.len()..]))
}

impl fmt::Display for QAContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{LOC} {} {INV} {} {OBS} {} {ATR} {}",
            self.loc,
            self.inv,
            self.obs,
            self.atr.join(", ")
        )
    }
}

/// Answers to the fixed question set. Lists hold entity tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnswerSet {
    pub location: Option<String>,
    pub surroundings: Vec<String>,
    pub inventory: Vec<String>,
    pub attributes: BTreeMap<String, Vec<String>>,
}

impl AnswerSet {
    /// Objects that get an attribute question: surroundings then inventory.
    pub fn attribute_subjects(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for item in self.surroundings.iter().chain(&self.inventory) {
            if !out.contains(&item.as_str()) {
                out.push(item);
            }
        }
        out
    }

    /// Question/answer pairs in record order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("Where am I located?".to_owned(), self.location.clone().unwrap_or_else(|| NOTHING.into())),
            ("What is here?".to_owned(), join_or_nothing(&self.surroundings)),
            ("What do I have?".to_owned(), join_or_nothing(&self.inventory)),
        ];
        for obj in self.attribute_subjects() {
            let attrs = self.attributes.get(obj).map(Vec::as_slice).unwrap_or(&[]);
            out.push((format!("What attributes does {obj} have?"), join_or_nothing(attrs)));
        }
        out
    }
}

fn join_or_nothing(items: &[String]) -> String {
    if items.is_empty() {
        NOTHING.into()
    } else {
        items.join(", ")
    }
}

/// Produces answers for one step. Implementations must be deterministic in
/// their inputs so that replays rebuild identical graphs.
pub trait AnswerBackend: Send + Sync {
    fn answer(&self, game: &GameDef, state: &WorldState, obs: &Observation) -> AnswerSet;
}

/// Reads answers straight from the simulator state.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleBackend;

pub fn oracle_answer(state: &WorldState, game: &GameDef) -> AnswerSet {
    let surroundings = game.visible_objects(state);
    let inventory = game.inventory(state);
    let mut attributes = BTreeMap::new();
    for &o in surroundings.iter().chain(&inventory) {
        let attrs = game.active_attributes(state, o);
        if !attrs.is_empty() {
            attributes.insert(game.objects[o].noun.clone(), attrs);
        }
    }
    let noun = |o: &usize| game.objects[*o].noun.clone();
    AnswerSet {
        location: Some(game.room_token(state.room)),
        surroundings: surroundings.iter().map(noun).collect(),
        inventory: inventory.iter().map(noun).collect(),
        attributes,
    }
}

impl AnswerBackend for OracleBackend {
    fn answer(&self, game: &GameDef, state: &WorldState, _obs: &Observation) -> AnswerSet {
        oracle_answer(state, game)
    }
}

struct LexObject {
    name: String,
    noun: String,
    attributes: Vec<String>,
}

/// Surface forms the rule backend matches against.
pub struct Lexicon {
    rooms: Vec<(String, String)>,
    objects: Vec<LexObject>,
}

impl Lexicon {
    pub fn new(game: &GameDef) -> Self {
        let mut rooms: Vec<(String, String)> = game.rooms.iter().map(|r| (r.name.clone(), r.name.to_lowercase())).collect();
        rooms.sort_by_key(|(name, _)| std::cmp::Reverse(name.len()));
        let objects = game
            .objects
            .iter()
            .map(|o| LexObject { name: o.name.clone(), noun: o.noun.clone(), attributes: o.attributes.clone() })
            .collect();
        Self { rooms, objects }
    }
}

/// `needle` occurs in `hay` ending at a word boundary.
fn mentions(hay: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(i) = hay[from..].find(needle) {
        let end = from + i + needle.len();
        if hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric()) {
            return Some(end);
        }
        from = from + i + 1;
    }
    None
}

/// Pattern rules over the engine's regular text.
pub fn rule_answer(ctx: &QAContext, lex: &Lexicon) -> AnswerSet {
    let location = lex.rooms.iter().find(|(name, _)| ctx.loc.starts_with(name.as_str())).map(|(_, token)| token.clone());
    let mut answers = AnswerSet { location, ..AnswerSet::default() };
    let allowed = |a: &str| ctx.atr.iter().any(|x| x == a);

    for obj in &lex.objects {
        let here = mentions(&ctx.loc, &format!("There is a {} here.", obj.name)).is_some();
        let held = ctx.inv != EMPTY_HANDED && mentions(&ctx.inv, &format!("a {}", obj.name)).is_some();
        if !here && !held {
            continue;
        }
        if here {
            answers.surroundings.push(obj.noun.clone());
        }
        if held {
            answers.inventory.push(obj.noun.clone());
        }
        let mut attrs: Vec<String> = obj.attributes.iter().filter(|a| allowed(a)).cloned().collect();
        let mut add = |a: &str| {
            if allowed(a) && !attrs.iter().any(|x| x == a) {
                attrs.push(a.to_owned());
            }
        };
        let stated = format!("The {} is ", obj.name);
        let mut rest = ctx.loc.as_str();
        while let Some(i) = rest.find(&stated) {
            rest = &rest[i + stated.len()..];
            if let Some(dot) = rest.find('.') {
                add(&rest[..dot]);
            }
        }
        if let Some(end) = mentions(&ctx.inv, &format!("a {}", obj.name)) {
            if let Some(inner) = ctx.inv[end..].strip_prefix(" (").and_then(|s| s.split_once(')')).map(|(a, _)| a) {
                for a in inner.split(", ") {
                    add(a);
                }
            }
        }
        if !attrs.is_empty() {
            answers.attributes.insert(obj.noun.clone(), attrs);
        }
    }
    answers
}

pub struct RuleBackend {
    lexicon: Lexicon,
}

impl RuleBackend {
    pub fn new(game: &GameDef) -> Self {
        Self { lexicon: Lexicon::new(game) }
    }
}

impl AnswerBackend for RuleBackend {
    fn answer(&self, game: &GameDef, _state: &WorldState, obs: &Observation) -> AnswerSet {
        rule_answer(&QAContext::build(obs, &game.attribute_vocab), &self.lexicon)
    }
}

/// Corrupts another backend's answers: each item is dropped with `p_drop`,
/// otherwise replaced by a random token of the same kind with `p_swap`.
/// The generator is keyed on (seed, observation) so identical inputs always
/// corrupt identically.
pub struct NoisyBackend<B> {
    pub inner: B,
    pub p_drop: f64,
    pub p_swap: f64,
    pub seed: u64,
}

impl<B: AnswerBackend> NoisyBackend<B> {
    pub fn new(inner: B, p_drop: f64, p_swap: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_drop) && (0.0..=1.0).contains(&p_swap), "probabilities must lie in [0, 1]");
        Self { inner, p_drop, p_swap, seed }
    }
}

/// Applies the noise model to `clean` using a generator seeded by `key`.
pub fn noisy_answer(clean: &AnswerSet, game: &GameDef, p_drop: f64, p_swap: f64, key: u64) -> AnswerSet {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let rooms: Vec<String> = (0..game.rooms.len()).map(|r| game.room_token(r)).collect();
    let nouns: Vec<String> = game.objects.iter().map(|o| o.noun.clone()).collect();
    let mut corrupt = |item: &str, pool: &[String]| -> Option<String> {
        let u: f64 = rng.gen();
        if u < p_drop {
            return None;
        }
        let v: f64 = rng.gen();
        if v < p_swap && !pool.is_empty() {
            return Some(pool[rng.gen_range(0..pool.len())].clone());
        }
        Some(item.to_owned())
    };
    let location = clean.location.as_deref().and_then(|l| corrupt(l, &rooms));
    let surroundings = clean.surroundings.iter().filter_map(|s| corrupt(s, &nouns)).collect();
    let inventory = clean.inventory.iter().filter_map(|s| corrupt(s, &nouns)).collect();
    let mut attributes = BTreeMap::new();
    for (obj, attrs) in &clean.attributes {
        let kept: Vec<String> = attrs.iter().filter_map(|a| corrupt(a, &game.attribute_vocab)).collect();
        if !kept.is_empty() {
            attributes.insert(obj.clone(), kept);
        }
    }
    AnswerSet { location, surroundings, inventory, attributes }
}

impl<B: AnswerBackend> AnswerBackend for NoisyBackend<B> {
    fn answer(&self, game: &GameDef, state: &WorldState, obs: &Observation) -> AnswerSet {
        let clean = self.inner.answer(game, state, obs);
        let mut h = StableHasher::with_seed(self.seed);
        h.write_str(&obs.desc);
        h.write_str(&obs.inv);
        h.write_str(&obs.feedback);
        h.write_str(&obs.prev_action);
        noisy_answer(&clean, game, self.p_drop, self.p_swap, mix64(h.finish()))
    }
}

/// Per-field exact agreement between two answer sets, averaged over
/// location, surroundings, inventory and attributes.
pub fn agreement(a: &AnswerSet, b: &AnswerSet) -> f64 {
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    let fields = [
        a.location == b.location,
        sorted(&a.surroundings) == sorted(&b.surroundings),
        sorted(&a.inventory) == sorted(&b.inventory),
        a.attributes.iter().map(|(k, v)| (k, sorted(v))).collect::<Vec<_>>()
            == b.attributes.iter().map(|(k, v)| (k, sorted(v))).collect::<Vec<_>>(),
    ];
    fields.iter().filter(|&&x| x).count() as f64 / fields.len() as f64
}

/// One dataset record: a context line followed by question/answer lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QARecord {
    pub context: QAContext,
    pub pairs: Vec<(String, String)>,
}

impl QARecord {
    pub fn new(context: QAContext, answers: &AnswerSet) -> Self {
        Self { context, pairs: answers.pairs() }
    }

    pub fn from_state(game: &GameDef, state: &WorldState, obs: &Observation) -> Self {
        Self::new(QAContext::build(obs, &game.attribute_vocab), &oracle_answer(state, game))
    }
}

impl fmt::Display for QARecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.context)?;
        for (q, a) in &self.pairs {
            writeln!(f, "Question: {q} Answer: {a}")?;
        }
        Ok(())
    }
}

/// Records separated by blank lines.
pub fn write_dataset(records: &[QARecord]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}

pub fn parse_dataset(text: &str) -> Result<Vec<QARecord>, String> {
    let mut out = Vec::new();
    for (n, block) in text.split("\n\n").enumerate() {
        let mut lines = block.lines().filter(|l| !l.is_empty());
        let Some(first) = lines.next() else { continue };
        let context = QAContext::parse(first).map_err(|e| format!("record {}: {e}", n + 1))?;
        let mut pairs = Vec::new();
        for line in lines {
            let qa = line
                .strip_prefix("Question: ")
                .and_then(|rest| rest.split_once(" Answer: "))
                .ok_or_else(|| format!("record {}: malformed line `{line}`", n + 1))?;
            pairs.push((qa.0.to_owned(), qa.1.to_owned()));
        }
        out.push(QARecord { context, pairs });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> QAContext {
        QAContext {
            loc: "West of House You are in a field. There is a small mailbox here.".into(),
            inv: EMPTY_HANDED.into(),
            obs: "Opening the small mailbox reveals a leaflet.".into(),
            atr: vec!["openable".into(), "treasure".into()],
        }
    }

    #[test]
    fn context_layout() {
        let line = ctx().to_string();
        assert!(line.starts_with("[loc] West of House "));
        assert!(line.contains(" [inv] You are empty handed. [obs] "));
        assert!(line.ends_with("[atr] openable, treasure"));
    }

    #[test]
    fn context_round_trip() {
        let c = ctx();
        assert_eq!(QAContext::parse(&c.to_string()).unwrap(), c);
        let empty = QAContext::default();
        assert_eq!(QAContext::parse(&empty.to_string()).unwrap(), empty);
    }

    #[test]
    fn pairs_and_nothing() {
        let mut a = AnswerSet { location: Some("kitchen".into()), ..Default::default() };
        a.surroundings.push("lamp".into());
        a.attributes.insert("lamp".into(), vec!["light".into()]);
        let pairs = a.pairs();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[2], ("What do I have?".into(), "nothing".into()));
        assert_eq!(pairs[3].1, "light");
    }

    #[test]
    fn dataset_round_trip() {
        let a = AnswerSet { location: Some("west of house".into()), surroundings: vec!["mailbox".into()], ..Default::default() };
        let records = vec![QARecord::new(ctx(), &a), QARecord::new(ctx(), &AnswerSet::default())];
        let text = write_dataset(&records);
        assert!(text.contains("Question: Where am I located? Answer: west of house\n"));
        assert_eq!(parse_dataset(&text).unwrap(), records);
        assert!(parse_dataset("").unwrap().is_empty());
    }

    #[test]
    fn word_boundary_mentions() {
        assert!(mentions("a lamp post", "a lamp").is_some());
        assert!(mentions("a lampshade", "a lamp").is_none());
    }
}
