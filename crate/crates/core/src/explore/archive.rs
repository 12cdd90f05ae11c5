use std::collections::HashMap;

use super::env::Frame;
use crate::game::GroundedAction;

/// World digest and graph digest.
pub type CellKey = (u64, u64);

#[derive(Debug, Clone)]
pub struct Cell {
    pub key: CellKey,
    pub frame: Frame,
    pub score: i32,
    pub visits: u64,
    /// Cell the worker started from when it first reached this one.
    pub parent: Option<usize>,
    /// Actions from the parent's frame to this one.
    pub tail: Vec<GroundedAction>,
}

/// Distinct (world, graph) frames reached so far, with the path that first
/// reached each.
#[derive(Debug, Clone, Default)]
pub struct CellArchive {
    cells: Vec<Cell>,
    index: HashMap<CellKey, usize>,
}

impl CellArchive {
    pub fn new(root: Frame) -> Self {
        let mut a = Self::default();
        a.insert(root, None, Vec::new());
        a
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    /// Adds a frame unless its key is archived. Returns the cell index and
    /// whether it was new.
    pub fn insert(&mut self, frame: Frame, parent: Option<usize>, tail: Vec<GroundedAction>) -> (usize, bool) {
        let key = frame.key();
        if let Some(&i) = self.index.get(&key) {
            return (i, false);
        }
        let i = self.cells.len();
        let score = frame.score();
        self.cells.push(Cell { key, frame, score, visits: 0, parent, tail });
        self.index.insert(key, i);
        (i, true)
    }

    pub fn visit(&mut self, i: usize) {
        self.cells[i].visits += 1;
    }

    /// Picks a cell with probability proportional to its score plus one;
    /// `u` is uniform in [0, 1).
    pub fn select(&self, u: f64) -> usize {
        let weights: Vec<f64> = self.cells.iter().map(|c| f64::from(c.score.max(0)) + 1.0).collect();
        select_weighted(&weights, u)
    }

    /// Highest score, earliest cell on ties.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.cells.iter().enumerate() {
            if c.score > self.cells[best].score {
                best = i;
            }
        }
        best
    }

    /// Actions from the root to cell `i`.
    pub fn path(&self, mut i: usize) -> Vec<GroundedAction> {
        let mut parts = Vec::new();
        while let Some(p) = self.cells[i].parent {
            parts.push(&self.cells[i].tail);
            i = p;
        }
        parts.into_iter().rev().flatten().copied().collect()
    }
}

/// Index whose cumulative weight first exceeds `u` times the total.
pub fn select_weighted(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len().saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_selection_respects_boundaries() {
        let w = [1.0, 3.0];
        assert_eq!(select_weighted(&w, 0.0), 0);
        assert_eq!(select_weighted(&w, 0.24), 0);
        assert_eq!(select_weighted(&w, 0.25), 1);
        assert_eq!(select_weighted(&w, 0.999), 1);
    }
}
