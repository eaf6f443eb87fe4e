//! Tile-grid level model: generation, validation, movement graph and the
//! 8-channel binary encoding consumed by the surrogate network.
//!
//! A level is a 20x20 grid. Each tile has an elevation (0 ground, 1 first
//! floor, 2 second floor acting as an impenetrable wall), may carry one
//! entity (stairs or one of three powerups) and may belong to one of the two
//! 5x5 corner bases. Players can walk on elevations 0 and 1, climb stairs to
//! a designated first-floor tile and jump down from the first floor to any
//! adjacent ground tile (one way).

mod encode;
mod generate;
mod graph;
mod text;

pub use encode::{ChannelStack, CHANNELS, PLANE_BYTES};
pub use generate::{GeneratorConfig, SketchCell, SketchGrid};
pub use graph::MovementGraph;
pub use text::{parse_level, render_level};

use thiserror::Error;

/// Grid side length in tiles.
pub const GRID: usize = 20;
/// Number of tiles in a level.
pub const TILES: usize = GRID * GRID;
/// Side length of a base region (and of one sketch cell) in tiles.
pub const BASE: usize = 5;
/// Side length of the generator sketch in cells.
pub const SKETCH: usize = 4;

/// Entity carried by a tile. At most one per tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    None,
    Stairs,
    DoubleDamage,
    Healing,
    Armor,
}

/// Base ownership of a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseOwner {
    None,
    Player1,
    Player2,
}

/// One grid tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    /// 0 = ground, 1 = first floor, 2 = second floor (wall).
    pub elevation: u8,
    pub entity: Entity,
    pub base: BaseOwner,
}

impl Tile {
    pub const GROUND: Tile = Tile {
        elevation: 0,
        entity: Entity::None,
        base: BaseOwner::None,
    };
    pub const WALL: Tile = Tile {
        elevation: 2,
        entity: Entity::None,
        base: BaseOwner::None,
    };

    /// Players can stand on elevations 0 and 1.
    pub fn walkable(&self) -> bool {
        self.elevation <= 1
    }
}

/// Errors produced by level generation, parsing and validation.
#[derive(Debug, Error)]
pub enum LevelError {
    #[error("level generation failed after {attempts} attempts (connectivity unrecoverable)")]
    GenerationFailed { attempts: u32 },
    #[error("invalid generator config: {0}")]
    BadConfig(String),
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("invariant violation at row {row}, column {col}: {msg}")]
    Invariant { row: usize, col: usize, msg: String },
}

/// A 20x20 level plus the seed that produced it (0 for parsed levels).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    tiles: Vec<Tile>,
    pub seed: u64,
}

/// The four cardinal directions, in the fixed N, E, S, W order used for all
/// deterministic tie-breaking.
pub const DIRS: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

pub(crate) fn idx(x: usize, y: usize) -> usize {
    y * GRID + x
}

pub(crate) fn coords(i: usize) -> (usize, usize) {
    (i % GRID, i / GRID)
}

/// Owner of the base region containing (x, y), if any. Player 1 owns the
/// north-west 5x5 corner, player 2 the south-east one.
pub fn base_at(x: usize, y: usize) -> BaseOwner {
    if x < BASE && y < BASE {
        BaseOwner::Player1
    } else if x >= GRID - BASE && y >= GRID - BASE {
        BaseOwner::Player2
    } else {
        BaseOwner::None
    }
}

/// Spawn tile at the center of a player's base.
pub fn base_center(owner: BaseOwner) -> (usize, usize) {
    match owner {
        BaseOwner::Player1 => (BASE / 2, BASE / 2),
        BaseOwner::Player2 => (GRID - 1 - BASE / 2, GRID - 1 - BASE / 2),
        BaseOwner::None => panic!("no base center for BaseOwner::None"),
    }
}

impl Level {
    /// Builds a level from raw tiles, stamping base ownership from position.
    /// Does not validate; see [`Level::validate`].
    pub(crate) fn from_tiles(mut tiles: Vec<Tile>, seed: u64) -> Level {
        assert_eq!(tiles.len(), TILES);
        for (i, t) in tiles.iter_mut().enumerate() {
            let (x, y) = coords(i);
            t.base = base_at(x, y);
        }
        Level { tiles, seed }
    }

    pub fn tile(&self, x: usize, y: usize) -> &Tile {
        &self.tiles[idx(x, y)]
    }

    pub fn tile_at(&self, i: usize) -> &Tile {
        &self.tiles[i]
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn elevation(&self, x: usize, y: usize) -> u8 {
        self.tiles[idx(x, y)].elevation
    }

    pub fn walkable(&self, x: usize, y: usize) -> bool {
        self.tiles[idx(x, y)].walkable()
    }

    /// The first-floor tile a stairs tile connects to: the first 4-neighbor
    /// at elevation 1 in N, E, S, W order. `None` if (x, y) is not stairs or
    /// no first-floor neighbor exists.
    pub fn stairs_target(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        if self.tiles[idx(x, y)].entity != Entity::Stairs {
            return None;
        }
        for (dx, dy) in DIRS {
            let (nx, ny) = (x as i32 + dx, y as i32 + dy);
            if nx < 0 || ny < 0 || nx >= GRID as i32 || ny >= GRID as i32 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if self.elevation(nx, ny) == 1 {
                return Some((nx, ny));
            }
        }
        None
    }

    /// All tiles holding a live-at-start powerup, with their entity.
    pub fn powerups(&self) -> Vec<(usize, Entity)> {
        self.tiles
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                matches!(
                    t.entity,
                    Entity::DoubleDamage | Entity::Healing | Entity::Armor
                )
            })
            .map(|(i, t)| (i, t.entity))
            .collect()
    }

    /// Checks every level invariant: base regions, per-tile entity rules,
    /// stairs adjacency and full connectivity of the walkable tiles under
    /// the movement graph (reachable from and back to the player-1 base).
    pub fn validate(&self) -> Result<(), LevelError> {
        for i in 0..TILES {
            let (x, y) = coords(i);
            let t = &self.tiles[i];
            let err = |msg: &str| LevelError::Invariant {
                row: y,
                col: x,
                msg: msg.to_string(),
            };
            if t.elevation > 2 {
                return Err(err("elevation out of range"));
            }
            if t.base != base_at(x, y) {
                return Err(err("base ownership does not match position"));
            }
            if t.base != BaseOwner::None {
                if t.elevation != 0 {
                    return Err(err("base tiles must be on the ground floor"));
                }
                if t.entity != Entity::None {
                    return Err(err("base tiles must carry no entity"));
                }
            }
            match t.entity {
                Entity::Stairs => {
                    if t.elevation != 0 {
                        return Err(err("stairs must be on the ground floor"));
                    }
                    if self.stairs_target(x, y).is_none() {
                        return Err(err("stairs have no adjacent first-floor tile"));
                    }
                }
                Entity::None => {}
                _ => {
                    if t.elevation > 1 {
                        return Err(err("powerups must sit on a walkable tile"));
                    }
                }
            }
        }

        let graph = MovementGraph::build(self);
        let start = {
            let (x, y) = base_center(BaseOwner::Player1);
            idx(x, y)
        };
        let fwd = graph.reachable_from(start);
        let bwd = graph.reachable_to(start);
        for i in 0..TILES {
            if self.tiles[i].walkable() && (!fwd[i] || !bwd[i]) {
                let (x, y) = coords(i);
                return Err(LevelError::Invariant {
                    row: y,
                    col: x,
                    msg: "walkable tile not connected to the player-1 base".to_string(),
                });
            }
        }
        Ok(())
    }

    /// Encodes this level as the 8-channel binary stack.
    pub fn encode(&self) -> ChannelStack {
        encode::encode_level(self)
    }
}

/// Generates a playable level. See [`generate::generate_level`].
pub fn generate_level(seed: u64, cfg: &GeneratorConfig) -> Result<Level, LevelError> {
    generate::generate_level(seed, cfg)
}

/// Builds the movement graph over walkable tiles.
pub fn movement_graph(level: &Level) -> MovementGraph {
    MovementGraph::build(level)
}

/// Encodes a level as the 8-channel binary stack.
pub fn encode_level(level: &Level) -> ChannelStack {
    encode::encode_level(level)
}
