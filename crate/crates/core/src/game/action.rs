use super::def::{EntityId, GameDef, BLANK};

/// A template with its blanks filled. Unused filler slots are always zero so
/// that derived equality and hashing are well defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundedAction {
    pub template: usize,
    pub fillers: [EntityId; 2],
}

impl GroundedAction {
    pub fn new(game: &GameDef, template: usize, fillers: &[EntityId]) -> Self {
        let blanks = game.templates[template].blanks;
        assert_eq!(fillers.len(), blanks, "filler count must match template blanks");
        let mut f = [0; 2];
        f[..blanks].copy_from_slice(fillers);
        Self { template, fillers: f }
    }

    pub fn fillers<'a>(&'a self, game: &GameDef) -> &'a [EntityId] {
        &self.fillers[..game.templates[self.template].blanks]
    }

    pub fn text(&self, game: &GameDef) -> String {
        let template = &game.templates[self.template];
        let mut next = 0;
        let mut out = String::new();
        for word in &template.words {
            if !out.is_empty() {
                out.push(' ');
            }
            if word == BLANK {
                out.push_str(game.entity_token(self.fillers[next]));
                next += 1;
            } else {
                out.push_str(word);
            }
        }
        out
    }
}

impl GameDef {
    /// Parses command text such as `open mailbox` or `go north` into a
    /// grounded action. Entities may span several words.
    pub fn parse_action(&self, text: &str) -> Option<GroundedAction> {
        let words: Vec<&str> = text.split_whitespace().collect();
        for (t, template) in self.templates.iter().enumerate() {
            let mut fillers = Vec::with_capacity(2);
            if match_words(self, &template.words, &words, &mut fillers) {
                return Some(GroundedAction::new(self, t, &fillers));
            }
        }
        None
    }
}

fn match_words(game: &GameDef, pattern: &[String], words: &[&str], fillers: &mut Vec<EntityId>) -> bool {
    match pattern.split_first() {
        None => words.is_empty(),
        Some((head, rest)) if head == BLANK => {
            for take in 1..=words.len() {
                let candidate = words[..take].join(" ");
                if let Some(id) = game.entity_id(&candidate) {
                    fillers.push(id);
                    if match_words(game, rest, &words[take..], fillers) {
                        return true;
                    }
                    fillers.pop();
                }
            }
            false
        }
        Some((head, rest)) => {
            words.first() == Some(&head.as_str()) && match_words(game, rest, &words[1..], fillers)
        }
    }
}

/// Size of a template action space: Σ over templates of |entities|^blanks.
pub fn grounded_count(blank_counts: impl IntoIterator<Item = usize>, entities: u64) -> u128 {
    blank_counts
        .into_iter()
        .map(|b| u128::from(entities).pow(b as u32))
        .sum()
}

/// Every grounding of the game's templates over `entity_set`.
pub fn enumerate_grounded<'a>(
    game: &'a GameDef,
    entity_set: &'a [EntityId],
) -> (u128, impl Iterator<Item = GroundedAction> + 'a) {
    let count = grounded_count(game.templates.iter().map(|t| t.blanks), entity_set.len() as u64);
    let iter = game.templates.iter().enumerate().flat_map(move |(t, template)| {
        let n = entity_set.len();
        let total = n.pow(template.blanks as u32);
        (0..total).map(move |mut k| {
            let mut fillers = [0; 2];
            for slot in (0..template.blanks).rev() {
                fillers[slot] = entity_set[k % n];
                k /= n;
            }
            GroundedAction { template: t, fillers }
        })
    });
    (count, iter)
}
