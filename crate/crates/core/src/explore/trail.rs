use super::env::{Frame, Rollout};
use crate::kg::{GlobalEdgeSet, Shaping};

/// Triples held anywhere along one trajectory from the reset frame, and the
/// trajectory's shaped return so far (starting from the reset score).
#[derive(Debug, Clone)]
pub struct Trail {
    pub known: GlobalEdgeSet,
    pub j: f64,
}

impl Trail {
    pub fn start(frame: &Frame) -> Self {
        let mut known = GlobalEdgeSet::new();
        known.im_reward(&frame.kg);
        Self { known, j: f64::from(frame.score()) }
    }

    /// Adds the shaped reward of moving from `prev` to `next`.
    pub fn advance(&mut self, shaping: &Shaping, prev: &Frame, next: &Frame) {
        let r_im = self.known.im_reward(&next.kg);
        self.j += shaping.reward(next.score() - prev.score(), next.score(), r_im);
    }

    /// The trail after following `r`, which must launch where this one ends.
    pub fn extend(&self, shaping: &Shaping, r: &Rollout) -> Trail {
        let mut t = self.clone();
        for w in r.frames.windows(2) {
            t.advance(shaping, &w[0], &w[1]);
        }
        t
    }

    /// One trail per frame of `r`; element 0 is a copy of `self`.
    pub fn along(&self, shaping: &Shaping, r: &Rollout) -> Vec<Trail> {
        let mut out = vec![self.clone()];
        for w in r.frames.windows(2) {
            let mut t = out.last().expect("nonempty").clone();
            t.advance(shaping, &w[0], &w[1]);
            out.push(t);
        }
        out
    }
}
