use super::action::GroundedAction;
use super::def::{Builtin, EntityKind, GameDef, Location, ObjectId};
use super::state::{Observation, StepOutcome, WorldState};
use crate::error::EngineError;

pub const DARK_TEXT: &str = "It is pitch black. You are likely to be eaten by a grue.";
pub const EMPTY_HANDED: &str = "You are empty handed.";
const CANT: &str = "You can't do that.";
const NOT_HERE: &str = "You don't see that here.";
const NO_EXIT: &str = "You can't go that way.";

impl GameDef {
    pub fn initial_state(&self) -> WorldState {
        WorldState {
            room: self.start,
            objects: self.objects.iter().map(|o| o.location).collect(),
            flags: self.flags.iter().map(|(_, v)| *v).collect(),
            fired: vec![false; self.events.len()],
            score: 0,
            turn: 0,
            alive: true,
        }
    }

    /// Fresh episode: start room, nothing fired.
    pub fn reset(&self) -> (WorldState, Observation, i32) {
        let state = self.initial_state();
        let desc = self.render_look(&state);
        let obs = Observation {
            feedback: desc.clone(),
            desc,
            inv: self.render_inventory(&state),
            prev_action: String::new(),
        };
        let score = state.score;
        (state, obs, score)
    }

    pub fn step(&self, state: &WorldState, action: &GroundedAction) -> Result<StepOutcome, EngineError> {
        if !state.alive {
            return Err(EngineError::Terminal);
        }
        let text = action.text(self);
        let mut next = state.clone();
        next.turn += 1;
        let mut feedback = self.apply_action(&mut next, action, &text);

        let mut reward = 0;
        for (e, event) in self.events.iter().enumerate() {
            if event.once && next.fired[e] {
                continue;
            }
            if event.when.holds(&next) {
                next.fired[e] = true;
                next.score += event.points;
                reward += event.points;
                if let Some(msg) = &event.message {
                    feedback.push(' ');
                    feedback.push_str(msg);
                }
            }
        }
        for death in &self.deaths {
            if death.terminal && death.when.holds(&next) {
                next.alive = false;
                feedback.push(' ');
                feedback.push_str(&death.message);
                break;
            }
        }

        let observation = Observation {
            desc: self.render_look(&next),
            feedback,
            inv: self.render_inventory(&next),
            prev_action: text,
        };
        let done = !next.alive;
        Ok(StepOutcome { state: next, observation, reward, done })
    }

    /// Applies the action in place and returns feedback text. Inapplicable
    /// actions leave `state` untouched.
    fn apply_action(&self, state: &mut WorldState, action: &GroundedAction, text: &str) -> String {
        for &r in self.rules_for(text) {
            let rule = &self.rules[r];
            if rule.when.holds(state) {
                for effect in &rule.effects {
                    effect.apply(state);
                }
                return rule.say.clone();
            }
        }
        let template = &self.templates[action.template];
        let target = || match self.entities[action.fillers[0]].kind {
            EntityKind::Object(o) => Some(o),
            _ => None,
        };
        match template.builtin {
            Builtin::Go(dir) => {
                let Some(exit) = self.rooms[state.room].exits.iter().find(|e| e.direction == dir) else {
                    return NO_EXIT.into();
                };
                if !exit.when.holds(state) {
                    return exit.blocked.clone().unwrap_or_else(|| NO_EXIT.into());
                }
                state.room = exit.to;
                self.render_look(state)
            }
            Builtin::Take => match target() {
                Some(o) if state.objects[o] == Location::Inventory => "You already have that.".into(),
                Some(o) if self.can_see(state, o) => {
                    if self.objects[o].portable {
                        state.objects[o] = Location::Inventory;
                        "Taken.".into()
                    } else {
                        CANT.into()
                    }
                }
                _ => NOT_HERE.into(),
            },
            Builtin::Examine => match target() {
                Some(o) if state.objects[o] == Location::Inventory || self.can_see(state, o) => self.objects[o]
                    .examine
                    .clone()
                    .unwrap_or_else(|| format!("There's nothing special about the {}.", self.objects[o].name)),
                _ => NOT_HERE.into(),
            },
            Builtin::Look => self.render_look(state),
            Builtin::Inventory => self.render_inventory(state),
            Builtin::None => CANT.into(),
        }
    }

    fn room_is_lit(&self, state: &WorldState) -> bool {
        self.rooms[state.room].lit_when.as_ref().is_none_or(|c| c.holds(state))
    }

    fn can_see(&self, state: &WorldState, o: ObjectId) -> bool {
        self.room_is_lit(state) && self.is_reachable(state, o)
    }

    /// Visible object in the current room, directly or inside a container
    /// that is itself reachable.
    pub fn is_reachable(&self, state: &WorldState, o: ObjectId) -> bool {
        if !self.objects[o].visible.holds(state) {
            return false;
        }
        let mut loc = state.objects[o];
        for _ in 0..=self.objects.len() {
            match loc {
                Location::Room(r) => return r == state.room,
                Location::Inside(c) => {
                    if !self.objects[c].visible.holds(state) {
                        return false;
                    }
                    loc = state.objects[c];
                }
                Location::Inventory | Location::Nowhere => return false,
            }
        }
        false
    }

    /// Objects listed in the room description, in definition order.
    pub fn visible_objects(&self, state: &WorldState) -> Vec<ObjectId> {
        if !self.room_is_lit(state) {
            return Vec::new();
        }
        (0..self.objects.len()).filter(|&o| self.is_reachable(state, o)).collect()
    }

    pub fn inventory(&self, state: &WorldState) -> Vec<ObjectId> {
        (0..self.objects.len()).filter(|&o| state.objects[o] == Location::Inventory).collect()
    }

    pub fn active_attributes(&self, state: &WorldState, o: ObjectId) -> Vec<String> {
        let obj = &self.objects[o];
        let mut attrs = obj.attributes.clone();
        for (attr, flag) in &obj.flag_attributes {
            if state.flags[*flag] && !attrs.contains(attr) {
                attrs.push(attr.clone());
            }
        }
        attrs
    }

    fn state_suffix(&self, state: &WorldState, o: ObjectId) -> Vec<&str> {
        self.objects[o]
            .flag_attributes
            .iter()
            .filter(|(_, f)| state.flags[*f])
            .map(|(a, _)| a.as_str())
            .collect()
    }

    /// Output of `look`: room name, description, then one line per object.
    pub fn render_look(&self, state: &WorldState) -> String {
        if !self.room_is_lit(state) {
            return DARK_TEXT.into();
        }
        let room = &self.rooms[state.room];
        let description = room
            .variants
            .iter()
            .find(|(c, _)| c.holds(state))
            .map_or(room.description.as_str(), |(_, d)| d.as_str());
        let mut out = format!("{} {}", room.name, description);
        for o in self.visible_objects(state) {
            let name = &self.objects[o].name;
            out.push_str(&format!(" There is a {name} here."));
            for attr in self.state_suffix(state, o) {
                out.push_str(&format!(" The {name} is {attr}."));
            }
        }
        out
    }

    pub fn render_inventory(&self, state: &WorldState) -> String {
        let items = self.inventory(state);
        if items.is_empty() {
            return EMPTY_HANDED.into();
        }
        let listed: Vec<String> = items
            .iter()
            .map(|&o| {
                let suffix = self.state_suffix(state, o);
                if suffix.is_empty() {
                    format!("a {}", self.objects[o].name)
                } else {
                    format!("a {} ({})", self.objects[o].name, suffix.join(", "))
                }
            })
            .collect();
        format!("You are carrying: {}.", listed.join(", "))
    }

    /// Actions that can possibly change state: rule actions, movement, and
    /// taking each object. `admissible_actions` filters these by stepping.
    pub(crate) fn candidate_actions(&self) -> Vec<GroundedAction> {
        let mut out = Vec::new();
        for (t, template) in self.templates.iter().enumerate() {
            match template.builtin {
                Builtin::Go(_) => out.push(GroundedAction::new(self, t, &[])),
                Builtin::Take => {
                    for (e, entity) in self.entities.iter().enumerate() {
                        if matches!(entity.kind, EntityKind::Object(_)) {
                            out.push(GroundedAction::new(self, t, &[e]));
                        }
                    }
                }
                _ => {}
            }
        }
        for rule in &self.rules {
            if let Some(a) = self.parse_action(&rule.action) {
                out.push(a);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Grounded actions whose step changes the world state (turn excluded).
    /// Test/oracle facility; agents never see this.
    pub fn admissible_actions(&self, state: &WorldState) -> Vec<GroundedAction> {
        if !state.alive {
            return Vec::new();
        }
        self.candidate_actions()
            .into_iter()
            .filter(|a| {
                let out = self.step(state, a).expect("state is alive");
                !out.state.same_world(state)
            })
            .collect()
    }
}
