//! Shared fixtures for the benchmarks.

use textquest::explore::{Env, Frame};
use textquest::game::{GameDef, GroundedAction, SearchOracle};

/// The oracle walkthrough of `game`.
pub fn walkthrough(game: &GameDef) -> Vec<GroundedAction> {
    SearchOracle::explore(game, SearchOracle::DEFAULT_STATE_LIMIT).expect("bundled game explores").walkthrough()
}

/// Frames along the walkthrough, reset frame first.
pub fn walkthrough_frames(env: &Env, actions: &[GroundedAction]) -> Vec<Frame> {
    let mut frames = vec![env.initial()];
    for a in actions {
        let next = env.advance(frames.last().expect("nonempty"), a).expect("walkthrough steps are legal").frame;
        frames.push(next);
    }
    frames
}
