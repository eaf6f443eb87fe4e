//! Constructive level generator.
//!
//! Pipeline: two digger agents carve a 4x4 sketch path from base to base on
//! each side of the bases' diagonal; every sketch cell expands to 5x5 tiles
//! where a per-cell digger carves ground touching each connected edge; wall
//! tiles flanked by enough ground become a first-floor substrate; stairs are
//! placed at valid positions with a fixed probability; a stochastic cellular
//! automaton raises part of the substrate into second-floor walls; finally
//! non-base cells may receive one powerup each. Levels failing the
//! connectivity check are regenerated from a derived seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    base_at, base_center, idx, BaseOwner, Entity, Level, LevelError, MovementGraph, Tile, BASE,
    DIRS, GRID, SKETCH, TILES,
};
use crate::rng::{stream, Stream};

/// Tunable generator parameters. Probabilities are in [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Chance for each valid ground tile to become stairs.
    pub stairs_prob: f64,
    /// Chance for each non-base sketch cell to receive one powerup.
    pub powerup_cell_prob: f64,
    /// Digger step bias toward the opponent base.
    pub digger_bias: f64,
    /// Cellular automaton sweeps over the first-floor substrate.
    pub ca_iterations: u32,
    /// Chance to raise a first-floor tile into a wall when crowded.
    pub ca_build_prob: f64,
    /// Walls among the 8 neighbors needed to raise (>=).
    pub ca_build_threshold: u32,
    /// Chance to lower a raised tile back when isolated.
    pub ca_revert_prob: f64,
    /// Walls among the 8 neighbors allowing a revert (<=).
    pub ca_revert_threshold: u32,
    /// Regeneration attempts before giving up on connectivity.
    pub max_attempts: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            stairs_prob: 0.2,
            powerup_cell_prob: 0.33,
            digger_bias: 0.7,
            ca_iterations: 3,
            ca_build_prob: 0.8,
            ca_build_threshold: 5,
            ca_revert_prob: 0.8,
            ca_revert_threshold: 2,
            max_attempts: 20,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), LevelError> {
        let probs = [
            ("stairs_prob", self.stairs_prob),
            ("powerup_cell_prob", self.powerup_cell_prob),
            ("digger_bias", self.digger_bias),
            ("ca_build_prob", self.ca_build_prob),
            ("ca_revert_prob", self.ca_revert_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(LevelError::BadConfig(format!("{name} = {p} not in [0,1]")));
            }
        }
        if self.max_attempts == 0 {
            return Err(LevelError::BadConfig("max_attempts must be > 0".into()));
        }
        Ok(())
    }
}

/// One cell of the low-resolution sketch.
#[derive(Debug, Clone, Copy, Default)]
pub struct SketchCell {
    pub is_base: bool,
    /// Open edges to 4-neighbors, indexed like [`DIRS`] (N, E, S, W).
    pub connections: [bool; 4],
    pub has_powerup: bool,
}

/// 4x4 sketch the diggers operate on. Base cells sit at the NW and SE
/// corners; the connection relation is kept symmetric.
#[derive(Debug, Clone)]
pub struct SketchGrid {
    pub cells: [[SketchCell; SKETCH]; SKETCH],
}

impl SketchGrid {
    fn new() -> SketchGrid {
        let mut cells = [[SketchCell::default(); SKETCH]; SKETCH];
        cells[0][0].is_base = true;
        cells[SKETCH - 1][SKETCH - 1].is_base = true;
        SketchGrid { cells }
    }

    pub fn cell(&self, cx: usize, cy: usize) -> &SketchCell {
        &self.cells[cy][cx]
    }

    fn connect(&mut self, a: (usize, usize), b: (usize, usize)) {
        for (d, (dx, dy)) in DIRS.iter().enumerate() {
            if (a.0 as i32 + dx, a.1 as i32 + dy) == (b.0 as i32, b.1 as i32) {
                self.cells[a.1][a.0].connections[d] = true;
                // opposite direction: N<->S, E<->W
                self.cells[b.1][b.0].connections[(d + 2) % 4] = true;
                return;
            }
        }
        panic!("connect called on non-adjacent cells {a:?} {b:?}");
    }

    /// Cells visited by at least one digger (any connection, or base).
    fn is_carved(&self, cx: usize, cy: usize) -> bool {
        let c = self.cell(cx, cy);
        c.is_base || c.connections.iter().any(|&b| b)
    }
}

/// Generates a level satisfying every level invariant. Pure in (seed, cfg):
/// identical inputs give identical levels. Attempt k reseeds the stream with
/// `seed ^ k`, so a connectivity failure retries with fresh randomness.
pub fn generate_level(seed: u64, cfg: &GeneratorConfig) -> Result<Level, LevelError> {
    cfg.validate()?;
    for attempt in 0..cfg.max_attempts {
        let mut rng = stream(seed ^ u64::from(attempt));
        let level = build_once(seed, cfg, &mut rng);
        if connected(&level) {
            return Ok(level);
        }
    }
    Err(LevelError::GenerationFailed {
        attempts: cfg.max_attempts,
    })
}

fn connected(level: &Level) -> bool {
    let graph = MovementGraph::build(level);
    let (bx, by) = base_center(BaseOwner::Player1);
    let start = idx(bx, by);
    let fwd = graph.reachable_from(start);
    let bwd = graph.reachable_to(start);
    (0..TILES).all(|i| !level.tile_at(i).walkable() || (fwd[i] && bwd[i]))
}

fn build_once(seed: u64, cfg: &GeneratorConfig, rng: &mut Stream) -> Level {
    let sketch = dig_sketch(cfg, rng);
    let mut tiles = expand_sketch(&sketch, cfg, rng);
    raise_first_floor(&mut tiles);
    place_stairs(&mut tiles, cfg, rng);
    run_automaton(&mut tiles, cfg, rng);
    prune_orphan_stairs(&mut tiles);
    demote_unreachable_floors(&mut tiles, seed);
    prune_orphan_stairs(&mut tiles);
    place_powerups(&mut tiles, &sketch, cfg, rng);
    Level::from_tiles(tiles, seed)
}

/// Two diggers walk the sketch from the player-1 base to the player-2 base,
/// one on each side of the NW-SE diagonal (they may walk on the diagonal
/// itself). Steps are biased toward the target, else a random allowed move.
fn dig_sketch(cfg: &GeneratorConfig, rng: &mut Stream) -> SketchGrid {
    let mut sketch = SketchGrid::new();
    let target = (SKETCH - 1, SKETCH - 1);
    for side in 0..2 {
        // side 0 keeps cx >= cy (north-east half), side 1 keeps cx <= cy
        let allowed = |x: usize, y: usize| if side == 0 { x >= y } else { x <= y };
        let mut pos = (0usize, 0usize);
        let mut steps = 0;
        while pos != target {
            let mut toward = Vec::new();
            let mut lateral = Vec::new();
            for (dx, dy) in DIRS {
                let (nx, ny) = (pos.0 as i32 + dx, pos.1 as i32 + dy);
                if nx < 0 || ny < 0 || nx >= SKETCH as i32 || ny >= SKETCH as i32 {
                    continue;
                }
                let next = (nx as usize, ny as usize);
                if !allowed(next.0, next.1) {
                    continue;
                }
                let closer = (target.0 - next.0) + (target.1 - next.1)
                    < (target.0 - pos.0) + (target.1 - pos.1);
                if closer {
                    toward.push(next);
                } else {
                    lateral.push(next);
                }
            }
            steps += 1;
            let next = if steps > 50 || lateral.is_empty() || rng.random::<f64>() < cfg.digger_bias
            {
                toward[rng.random_range(0..toward.len())]
            } else {
                lateral[rng.random_range(0..lateral.len())]
            };
            sketch.connect(pos, next);
            pos = next;
        }
    }
    sketch
}

/// Expands the sketch into tiles. Base cells become solid ground; each other
/// carved cell gets a digger that walks from a random interior anchor to the
/// midpoint of every connected edge, carving ground along the way. Edge
/// midpoints line up across cell boundaries, so connected cells always meet.
fn expand_sketch(sketch: &SketchGrid, cfg: &GeneratorConfig, rng: &mut Stream) -> Vec<Tile> {
    let mut tiles = vec![Tile::WALL; TILES];
    for cy in 0..SKETCH {
        for cx in 0..SKETCH {
            let cell = sketch.cell(cx, cy);
            let (ox, oy) = (cx * BASE, cy * BASE);
            if cell.is_base {
                for y in 0..BASE {
                    for x in 0..BASE {
                        tiles[idx(ox + x, oy + y)] = Tile::GROUND;
                    }
                }
                continue;
            }
            if !sketch.is_carved(cx, cy) {
                continue;
            }
            // local edge midpoints per direction, in DIRS order
            let exits = [(2, 0), (4, 2), (2, 4), (0, 2)];
            let anchor = (rng.random_range(1..BASE - 1), rng.random_range(1..BASE - 1));
            tiles[idx(ox + anchor.0, oy + anchor.1)] = Tile::GROUND;
            for (d, open) in cell.connections.iter().enumerate() {
                if !open {
                    continue;
                }
                let goal = exits[d];
                let mut pos = anchor;
                let mut steps = 0;
                while pos != goal {
                    let mut toward = Vec::new();
                    let mut lateral = Vec::new();
                    for (dx, dy) in DIRS {
                        let (nx, ny) = (pos.0 as i32 + dx, pos.1 as i32 + dy);
                        if nx < 0 || ny < 0 || nx >= BASE as i32 || ny >= BASE as i32 {
                            continue;
                        }
                        let next = (nx as usize, ny as usize);
                        let dist = |p: (usize, usize)| {
                            (p.0 as i32 - goal.0 as i32).unsigned_abs()
                                + (p.1 as i32 - goal.1 as i32).unsigned_abs()
                        };
                        if dist(next) < dist(pos) {
                            toward.push(next);
                        } else {
                            lateral.push(next);
                        }
                    }
                    steps += 1;
                    pos = if steps > 40
                        || lateral.is_empty()
                        || rng.random::<f64>() < cfg.digger_bias
                    {
                        toward[rng.random_range(0..toward.len())]
                    } else {
                        lateral[rng.random_range(0..lateral.len())]
                    };
                    tiles[idx(ox + pos.0, oy + pos.1)] = Tile::GROUND;
                }
            }
        }
    }
    tiles
}

/// Wall tiles 4-adjacent to at least two ground tiles become the first-floor
/// substrate the cellular automaton will shape.
fn raise_first_floor(tiles: &mut [Tile]) {
    let mut raise = Vec::new();
    for i in 0..TILES {
        if tiles[i].elevation != 2 {
            continue;
        }
        let (x, y) = super::coords(i);
        let ground_neighbors = DIRS
            .iter()
            .filter(|(dx, dy)| {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                nx >= 0
                    && ny >= 0
                    && nx < GRID as i32
                    && ny < GRID as i32
                    && tiles[idx(nx as usize, ny as usize)].elevation == 0
            })
            .count();
        if ground_neighbors >= 2 {
            raise.push(i);
        }
    }
    for i in raise {
        tiles[i].elevation = 1;
    }
}

/// Ground tiles (outside bases) with a 4-adjacent first-floor tile may become
/// stairs. Scanned row-major so the random stream is consumed in fixed order.
fn place_stairs(tiles: &mut [Tile], cfg: &GeneratorConfig, rng: &mut Stream) {
    for i in 0..TILES {
        let (x, y) = super::coords(i);
        if tiles[i].elevation != 0 || base_at(x, y) != BaseOwner::None {
            continue;
        }
        let has_first_floor = DIRS.iter().any(|(dx, dy)| {
            let (nx, ny) = (x as i32 + dx, y as i32 + dy);
            nx >= 0
                && ny >= 0
                && nx < GRID as i32
                && ny < GRID as i32
                && tiles[idx(nx as usize, ny as usize)].elevation == 1
        });
        if has_first_floor && rng.random::<f64>() < cfg.stairs_prob {
            tiles[i].entity = Entity::Stairs;
        }
    }
}

/// Stochastic cellular automaton over the first-floor substrate. Crowded
/// first-floor tiles turn into second-floor walls; isolated raised tiles
/// revert. Updates are synchronous per sweep; out-of-bounds counts as wall.
fn run_automaton(tiles: &mut [Tile], cfg: &GeneratorConfig, rng: &mut Stream) {
    let candidate: Vec<bool> = tiles.iter().map(|t| t.elevation == 1).collect();
    for _ in 0..cfg.ca_iterations {
        let snapshot: Vec<u8> = tiles.iter().map(|t| t.elevation).collect();
        let walls_around = |x: usize, y: usize| {
            let mut walls = 0;
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                    if nx < 0 || ny < 0 || nx >= GRID as i32 || ny >= GRID as i32 {
                        walls += 1;
                    } else if snapshot[idx(nx as usize, ny as usize)] == 2 {
                        walls += 1;
                    }
                }
            }
            walls
        };
        for i in 0..TILES {
            if !candidate[i] {
                continue;
            }
            let (x, y) = super::coords(i);
            let walls = walls_around(x, y);
            if snapshot[i] == 1 && walls >= cfg.ca_build_threshold {
                if rng.random::<f64>() < cfg.ca_build_prob {
                    tiles[i].elevation = 2;
                }
            } else if snapshot[i] == 2 && walls <= cfg.ca_revert_threshold
                && rng.random::<f64>() < cfg.ca_revert_prob {
                    tiles[i].elevation = 1;
                }
        }
    }
}

/// Drops stairs whose first-floor tile was swallowed by the automaton.
fn prune_orphan_stairs(tiles: &mut [Tile]) {
    for i in 0..TILES {
        if tiles[i].entity != Entity::Stairs {
            continue;
        }
        let (x, y) = super::coords(i);
        let has_first_floor = DIRS.iter().any(|(dx, dy)| {
            let (nx, ny) = (x as i32 + dx, y as i32 + dy);
            nx >= 0
                && ny >= 0
                && nx < GRID as i32
                && ny < GRID as i32
                && tiles[idx(nx as usize, ny as usize)].elevation == 1
        });
        if !has_first_floor {
            tiles[i].entity = Entity::None;
        }
    }
}

/// First-floor areas that never received stairs (or whose stairs point into
/// another region) are unreachable; they solidify into second-floor walls so
/// that every walkable tile stays connected. The ground floor itself is
/// connected by construction, so this pass makes single-attempt generation
/// reliable; the retry loop remains as the final guarantee.
fn demote_unreachable_floors(tiles: &mut Vec<Tile>, seed: u64) {
    let probe = Level::from_tiles(tiles.clone(), seed);
    let graph = MovementGraph::build(&probe);
    let (bx, by) = base_center(BaseOwner::Player1);
    let reachable = graph.reachable_from(idx(bx, by));
    for i in 0..TILES {
        if tiles[i].elevation == 1 && !reachable[i] {
            tiles[i].elevation = 2;
            tiles[i].entity = Entity::None;
        }
    }
}

/// Each non-base sketch cell may receive one powerup of a random type on a
/// random walkable, entity-free tile of the cell.
fn place_powerups(tiles: &mut [Tile], sketch: &SketchGrid, cfg: &GeneratorConfig, rng: &mut Stream) {
    for cy in 0..SKETCH {
        for cx in 0..SKETCH {
            if sketch.cell(cx, cy).is_base {
                continue;
            }
            if rng.random::<f64>() >= cfg.powerup_cell_prob {
                continue;
            }
            let mut spots = Vec::new();
            for y in 0..BASE {
                for x in 0..BASE {
                    let i = idx(cx * BASE + x, cy * BASE + y);
                    if tiles[i].walkable() && tiles[i].entity == Entity::None {
                        spots.push(i);
                    }
                }
            }
            if spots.is_empty() {
                continue;
            }
            let spot = spots[rng.random_range(0..spots.len())];
            tiles[spot].entity = match rng.random_range(0..3) {
                0 => Entity::DoubleDamage,
                1 => Entity::Healing,
                _ => Entity::Armor,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{coords, render_level};
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let a = generate_level(123, &cfg).unwrap();
        let b = generate_level(123, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(render_level(&a), render_level(&b));
    }

    #[test]
    fn bases_are_clean_ground_blocks() {
        let cfg = GeneratorConfig::default();
        for seed in [0u64, 1, 7, 99] {
            let level = generate_level(seed, &cfg).unwrap();
            for y in 0..BASE {
                for x in 0..BASE {
                    for (bx, by) in [(x, y), (GRID - 1 - x, GRID - 1 - y)] {
                        let t = level.tile(bx, by);
                        assert_eq!(t.elevation, 0, "base tile ({bx},{by}) seed {seed}");
                        assert_eq!(t.entity, Entity::None);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_powerup_probability_yields_no_powerups() {
        let cfg = GeneratorConfig {
            powerup_cell_prob: 0.0,
            ..GeneratorConfig::default()
        };
        for seed in 0..10u64 {
            let level = generate_level(seed, &cfg).unwrap();
            assert!(level.powerups().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn generated_levels_validate_and_flood_fill() {
        // brute-force oracle: walk the movement graph from the player-1 base
        // and demand every walkable tile and every powerup is reached.
        let cfg = GeneratorConfig::default();
        for seed in 0..100u64 {
            let level = generate_level(seed, &cfg).unwrap();
            level.validate().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let graph = MovementGraph::build(&level);
            let (bx, by) = base_center(BaseOwner::Player1);
            let seen = graph.reachable_from(idx(bx, by));
            let (ox, oy) = base_center(BaseOwner::Player2);
            assert!(seen[idx(ox, oy)], "seed {seed}: opponent base unreachable");
            for (i, _) in level.powerups() {
                let (x, y) = coords(i);
                assert!(seen[i], "seed {seed}: powerup at ({x},{y}) unreachable");
            }
            for i in 0..TILES {
                if level.tile_at(i).walkable() {
                    assert!(seen[i], "seed {seed}: walkable tile {i} unreachable");
                }
            }
        }
    }

    #[test]
    fn sketch_connections_are_symmetric_and_reach_both_bases() {
        let cfg = GeneratorConfig::default();
        for seed in 0..50u64 {
            let mut rng = stream(seed);
            let sketch = dig_sketch(&cfg, &mut rng);
            for cy in 0..SKETCH {
                for cx in 0..SKETCH {
                    for (d, (dx, dy)) in DIRS.iter().enumerate() {
                        if !sketch.cell(cx, cy).connections[d] {
                            continue;
                        }
                        let (nx, ny) = (cx as i32 + dx, cy as i32 + dy);
                        assert!(nx >= 0 && ny >= 0 && nx < SKETCH as i32 && ny < SKETCH as i32);
                        let back = sketch.cell(nx as usize, ny as usize).connections[(d + 2) % 4];
                        assert!(back, "asymmetric connection at ({cx},{cy}) dir {d}");
                    }
                }
            }
            assert!(sketch.is_carved(0, 0));
            assert!(sketch.is_carved(SKETCH - 1, SKETCH - 1));
        }
    }
}

