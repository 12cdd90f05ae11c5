use std::collections::VecDeque;

use super::env::{Frame, Rollout};
use super::trail::Trail;

#[derive(Debug, Clone)]
pub struct BufferEntry {
    pub frame: Frame,
    /// Greedy steps from the launch to this frame.
    pub step: usize,
    pub trail: Trail,
}

/// Distinct live frames along the best trajectory, oldest first.
#[derive(Debug, Clone, Default)]
pub struct StateBuffer {
    entries: VecDeque<BufferEntry>,
    capacity: usize,
}

impl StateBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { entries: VecDeque::new(), capacity }
    }

    /// Frames of `rollout` with their trails, skipping dead ones and
    /// repeats of a (state, graph) key.
    pub fn from_rollout(rollout: &Rollout, trails: Vec<Trail>, capacity: usize) -> Self {
        let mut b = Self::new(capacity);
        for ((step, frame), trail) in rollout.frames.iter().enumerate().zip(trails) {
            if frame.state.alive {
                b.push(BufferEntry { frame: frame.clone(), step, trail });
            }
        }
        b
    }

    /// Adds an entry unless its key is present; drops the oldest when full.
    pub fn push(&mut self, entry: BufferEntry) -> bool {
        let key = entry.frame.key();
        if self.entries.iter().any(|e| e.frame.key() == key) {
            return false;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &BufferEntry> {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::Env;
    use crate::extract::OracleBackend;
    use crate::games;

    fn entries(env: &Env, commands: &[&str]) -> Vec<BufferEntry> {
        let mut frame = env.initial();
        let mut out = vec![BufferEntry { frame: frame.clone(), step: 0, trail: Trail::start(&frame) }];
        for (i, c) in commands.iter().enumerate() {
            frame = env.advance(&frame, &env.game.parse_action(c).unwrap()).unwrap().frame;
            out.push(BufferEntry { frame: frame.clone(), step: i + 1, trail: Trail::start(&frame) });
        }
        out
    }

    #[test]
    fn repeats_are_skipped_and_the_oldest_dropped() {
        let game = games::miniz();
        let env = Env::new(&game, &OracleBackend, Default::default());
        let all = entries(&env, &["go north", "go south", "go north", "go east", "go east"]);
        let mut b = StateBuffer::new(3);
        let added: Vec<bool> = all.into_iter().map(|e| b.push(e)).collect();
        assert_eq!(added, [true, true, false, false, true, true]);
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter().map(|e| e.step).collect::<Vec<_>>(), [1, 4, 5]);
        let again = b.iter().next().unwrap().clone();
        assert!(!b.push(again));
    }
}
