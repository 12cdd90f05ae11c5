//! Games shipped with the crate, addressable by name.

use crate::error::GameError;
use crate::game::{load_game, GameDef};

pub const MINIZ: &str = include_str!("../games/miniz.toml");
pub const CHAINWORLD: &str = include_str!("../games/chainworld.toml");
pub const DECEIVE: &str = include_str!("../games/deceive.toml");

pub const BUNDLED: [(&str, &str); 3] = [("miniz", MINIZ), ("chainworld", CHAINWORLD), ("deceive", DECEIVE)];

/// Definition text of a bundled game.
pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Loads and validates a bundled game.
pub fn bundled(name: &str) -> Option<Result<GameDef, GameError>> {
    source(name).map(load_game)
}

pub fn miniz() -> GameDef {
    load_game(MINIZ).expect("bundled miniz is valid")
}
