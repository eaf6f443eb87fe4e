//! Deterministic discrete-time 1v1 deathmatch simulation.
//!
//! Agents run a fixed behavior priority: seek healing when hurt, grab nearby
//! powerups, attack a visible opponent, chase far powerups, otherwise patrol
//! between the map center and the opponent base. A match ends when the kill
//! limit is reached or the time limit expires. Identical inputs produce a
//! bit-identical outcome.

mod combat;

pub use combat::{falloff, line_of_sight, resolve_shot, ShotError, ShotOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::PhysicalClass;
use crate::level::{
    base_center, coords, idx as tile_idx, BaseOwner, Entity, Level, LevelError, MovementGraph,
    TILES,
};
use crate::rng::{stream, Stream};

/// Fixed healing amount per pickup.
pub const HEAL_AMOUNT: f64 = 100.0;
/// Armor buffer granted by an armor pickup (non-stacking).
pub const ARMOR_VALUE: f64 = 50.0;
/// Damage multiplier while double damage is active.
pub const DOUBLE_DAMAGE_MULT: f64 = 2.0;

/// Match rules and agent tuning. All times in seconds, distances in tiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub kill_limit: u32,
    pub time_limit_s: f64,
    pub tick_s: f64,
    pub respawn_delay_s: f64,
    pub perception_radius: f64,
    /// Seek healing below this fraction of max hit points.
    pub heal_seek_threshold: f64,
    pub double_damage_duration_s: f64,
    pub reload_time_s: f64,
    pub healing_respawn_s: f64,
    pub armor_respawn_s: f64,
    pub double_damage_respawn_s: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            kill_limit: 20,
            time_limit_s: 600.0,
            tick_s: 0.1,
            respawn_delay_s: 3.0,
            perception_radius: 10.0,
            heal_seek_threshold: 0.35,
            double_damage_duration_s: 10.0,
            reload_time_s: 2.0,
            healing_respawn_s: 15.0,
            armor_respawn_s: 20.0,
            double_damage_respawn_s: 30.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid level: {0}")]
    Level(#[from] LevelError),
    #[error("invalid match config: {0}")]
    BadConfig(String),
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.kill_limit == 0 {
            return Err(SimError::BadConfig("kill_limit must be > 0".into()));
        }
        if self.tick_s <= 0.0 {
            return Err(SimError::BadConfig("tick_s must be > 0".into()));
        }
        if self.time_limit_s < 150.0 {
            return Err(SimError::BadConfig("time_limit_s must be >= 150".into()));
        }
        Ok(())
    }
}

/// Final match record. `score` is player 1's kill ratio; a match with no
/// kills at all scores 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome {
    pub kills_p1: u32,
    pub kills_p2: u32,
    pub duration_s: f64,
    pub completed: bool,
    pub score: f64,
}

impl MatchOutcome {
    fn new(kills_p1: u32, kills_p2: u32, duration_s: f64, completed: bool) -> MatchOutcome {
        let total = kills_p1 + kills_p2;
        let score = if total == 0 {
            0.5
        } else {
            f64::from(kills_p1) / f64::from(total)
        };
        MatchOutcome {
            kills_p1,
            kills_p2,
            duration_s,
            completed,
            score,
        }
    }

    /// One-line structured text record.
    pub fn render(&self) -> String {
        format!(
            "kills_p1={} kills_p2={} duration_s={:.1} completed={} score={}",
            self.kills_p1, self.kills_p2, self.duration_s, self.completed, self.score
        )
    }
}

/// Live state of one combatant.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub class: PhysicalClass,
    /// Tile whose center was last crossed.
    pub tile: usize,
    /// Continuous position in tile units (tile center = x + 0.5).
    pub fx: f64,
    pub fy: f64,
    pub hp: f64,
    pub armor: f64,
    pub clip: u32,
    pub reload_timer: f64,
    pub fire_cooldown: f64,
    pub double_damage_timer: f64,
    pub kills: u32,
    pub deaths: u32,
    pub alive: bool,
    respawn_timer: f64,
    home: usize,
    /// Committed movement segment (can't reverse mid-tile).
    move_to: Option<usize>,
    move_progress: f64,
    /// Remaining hops after the committed segment.
    path: std::collections::VecDeque<u16>,
    path_goal: Option<usize>,
    patrol_to_center: bool,
}

impl AgentState {
    fn spawn(class: PhysicalClass, home: usize) -> AgentState {
        let (x, y) = coords(home);
        AgentState {
            tile: home,
            fx: x as f64 + 0.5,
            fy: y as f64 + 0.5,
            hp: class.hit_points,
            armor: 0.0,
            clip: clip_rounds(&class),
            reload_timer: 0.0,
            fire_cooldown: 0.0,
            double_damage_timer: 0.0,
            kills: 0,
            deaths: 0,
            alive: true,
            respawn_timer: 0.0,
            home,
            move_to: None,
            move_progress: 0.0,
            path: std::collections::VecDeque::new(),
            path_goal: None,
            patrol_to_center: true,
            class,
        }
    }

    fn respawn(&mut self) {
        let fresh = AgentState::spawn(self.class, self.home);
        let (kills, deaths) = (self.kills, self.deaths);
        *self = fresh;
        self.kills = kills;
        self.deaths = deaths;
    }

    /// Tile the agent is navigating from: the committed segment target if
    /// one is underway, else the current tile.
    fn nav_tile(&self) -> usize {
        self.move_to.unwrap_or(self.tile)
    }
}

fn clip_rounds(class: &PhysicalClass) -> u32 {
    class.clip_size.round().max(1.0) as u32
}

/// Applies one powerup to an agent and returns the powerup's respawn delay.
/// Healing restores 100 hp capped at the class maximum, armor sets the
/// buffer to 50 (non-stacking), double damage starts the configured timer.
pub fn apply_powerup(agent: &mut AgentState, kind: Entity, cfg: &MatchConfig) -> f64 {
    match kind {
        Entity::Healing => {
            agent.hp = (agent.hp + HEAL_AMOUNT).min(agent.class.hit_points);
            cfg.healing_respawn_s
        }
        Entity::Armor => {
            agent.armor = ARMOR_VALUE;
            cfg.armor_respawn_s
        }
        Entity::DoubleDamage => {
            agent.double_damage_timer = cfg.double_damage_duration_s;
            cfg.double_damage_respawn_s
        }
        _ => unreachable!("only powerups are tracked"),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Decision {
    goal: Option<usize>,
    fire: bool,
}

struct Powerup {
    tile: usize,
    kind: Entity,
    live: bool,
    timer: f64,
}

struct MatchSim<'a> {
    level: &'a Level,
    /// Per-player movement graphs: player 2's ties break in its own
    /// (180-degree rotated) frame so neither player prefers a map corner.
    graphs: [MovementGraph; 2],
    cfg: &'a MatchConfig,
    agents: [AgentState; 2],
    powerups: Vec<Powerup>,
    rng: Stream,
    time: f64,
    patrol_center: [usize; 2],
    dist: Vec<u16>,
    parent: Vec<u16>,
    events: Option<Vec<String>>,
}

/// Simulates one match. Pure in (level, classes, seed, cfg).
pub fn simulate_match(
    level: &Level,
    player1: &PhysicalClass,
    player2: &PhysicalClass,
    seed: u64,
    cfg: &MatchConfig,
) -> Result<MatchOutcome, SimError> {
    run_match(level, player1, player2, seed, cfg, false).map(|(o, _)| o)
}

/// Like [`simulate_match`] but also returns a per-event text log.
pub fn simulate_match_logged(
    level: &Level,
    player1: &PhysicalClass,
    player2: &PhysicalClass,
    seed: u64,
    cfg: &MatchConfig,
) -> Result<(MatchOutcome, Vec<String>), SimError> {
    run_match(level, player1, player2, seed, cfg, true).map(|(o, l)| (o, l.unwrap_or_default()))
}

fn run_match(
    level: &Level,
    player1: &PhysicalClass,
    player2: &PhysicalClass,
    seed: u64,
    cfg: &MatchConfig,
    logged: bool,
) -> Result<(MatchOutcome, Option<Vec<String>>), SimError> {
    cfg.validate()?;
    level.validate()?;
    let graphs = [MovementGraph::build(level), MovementGraph::build_flipped(level)];
    let home1 = {
        let (x, y) = base_center(BaseOwner::Player1);
        tile_idx(x, y)
    };
    let home2 = {
        let (x, y) = base_center(BaseOwner::Player2);
        tile_idx(x, y)
    };
    let powerups = level
        .powerups()
        .into_iter()
        .map(|(tile, kind)| Powerup {
            tile,
            kind,
            live: true,
            timer: 0.0,
        })
        .collect();
    // Patrol waypoints are 180-degree rotation images of each other so that
    // rotationally symmetric levels stay symmetric between the players.
    let patrol_center = [
        nearest_walkable(level, (9, 9), false),
        nearest_walkable(level, (10, 10), true),
    ];
    let mut sim = MatchSim {
        level,
        graphs,
        cfg,
        agents: [
            AgentState::spawn(*player1, home1),
            AgentState::spawn(*player2, home2),
        ],
        powerups,
        rng: stream(seed),
        time: 0.0,
        patrol_center,
        dist: vec![u16::MAX; TILES],
        parent: vec![u16::MAX; TILES],
        events: logged.then(Vec::new),
    };
    let outcome = sim.run();
    let events = sim.events.take();
    Ok((outcome, events))
}

/// Walkable tile nearest to `ideal` by euclidean distance; ties break by
/// node index in the caller's frame (rotated for player 2).
fn nearest_walkable(level: &Level, ideal: (usize, usize), flipped: bool) -> usize {
    let (ix, iy) = (ideal.0 as f64 + 0.5, ideal.1 as f64 + 0.5);
    let key = |i: usize| if flipped { TILES - 1 - i } else { i };
    let mut best: Option<(f64, usize)> = None;
    for i in 0..TILES {
        if !level.tile_at(i).walkable() {
            continue;
        }
        let (x, y) = coords(i);
        let d = (x as f64 + 0.5 - ix).powi(2) + (y as f64 + 0.5 - iy).powi(2);
        if best.is_none_or(|(bd, bk)| (d, key(i)) < (bd, bk)) {
            best = Some((d, key(i)));
        }
    }
    let (_, k) = best.expect("level has walkable tiles");
    if flipped { TILES - 1 - k } else { k }
}

impl MatchSim<'_> {
    fn run(&mut self) -> MatchOutcome {
        let max_steps = (self.cfg.time_limit_s / self.cfg.tick_s).ceil() as u64;
        for _ in 0..max_steps {
            self.time += self.cfg.tick_s;
            if let Some(done) = self.tick() {
                return done;
            }
        }
        MatchOutcome::new(
            self.agents[0].kills,
            self.agents[1].kills,
            self.cfg.time_limit_s,
            false,
        )
    }

    fn tick(&mut self) -> Option<MatchOutcome> {
        // powerups respawning underfoot are collected immediately
        let mut claims: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..2 {
            if self.agents[i].alive {
                claims.push((i, self.agents[i].tile, 0.0));
            }
        }
        self.resolve_pickups(&claims);

        let decisions = [self.decide(0), self.decide(1)];

        // both agents fire against the tick-start state; a simultaneous
        // exchange can kill both
        for i in 0..2 {
            if decisions[i].fire && self.agents[i].alive {
                self.fire(i);
            }
        }
        if let Some(done) = self.process_deaths() {
            return Some(done);
        }

        // both agents move through the same tick interval; tiles entered are
        // claimed at their in-tick crossing time so pickup contention is
        // settled by arrival, not by player index
        let mut claims = Vec::new();
        for i in 0..2 {
            if self.agents[i].alive {
                if let Some((tile, at)) = self.advance(i, decisions[i].goal) {
                    claims.push((i, tile, at));
                }
            }
        }
        self.resolve_pickups(&claims);

        self.step_timers();
        None
    }

    fn decide(&mut self, i: usize) -> Decision {
        if !self.agents[i].alive {
            return Decision::default();
        }
        let nav = self.agents[i].nav_tile();
        // one BFS per agent per tick serves healing, powerup and patrol
        // target selection plus path construction
        let MatchSim {
            graphs,
            dist,
            parent,
            ..
        } = self;
        graphs[i].distance_field(nav, dist, parent);

        let me = &self.agents[i];
        let opp = &self.agents[1 - i];
        let max_hp = me.class.hit_points;

        // (a) seek healing when low
        if me.hp < self.cfg.heal_seek_threshold * max_hp {
            if let Some(goal) = self.best_powerup(i, Some(Entity::Healing), None) {
                return self.move_decision(i, goal);
            }
        }
        // (b) collect a powerup within perception radius
        if let Some(goal) = self.best_powerup(i, None, Some(self.cfg.perception_radius)) {
            return self.move_decision(i, goal);
        }
        // (c) attack a visible opponent
        if opp.alive && line_of_sight(self.level, coords(me.tile), coords(opp.tile)) {
            let d = ((me.fx - opp.fx).powi(2) + (me.fy - opp.fy).powi(2)).sqrt();
            let class = &me.class;
            let fire = d < 2.0 * class.range_tiles
                && me.clip > 0
                && me.fire_cooldown <= 0.0
                && me.reload_timer <= 0.0;
            if d > class.range_tiles {
                let mut dec = self.move_decision(i, opp.tile);
                dec.fire = fire;
                return dec;
            }
            // in range: hold position
            let agent = &mut self.agents[i];
            agent.path.clear();
            agent.path_goal = None;
            return Decision { goal: None, fire };
        }
        // (d) seek far powerups
        if let Some(goal) = self.best_powerup(i, None, None) {
            return self.move_decision(i, goal);
        }
        // patrol: map center, then the opponent base, and back
        let center = self.patrol_center[i];
        let opp_base = self.agents[1 - i].home;
        let me = &mut self.agents[i];
        if me.tile == center {
            me.patrol_to_center = false;
        } else if me.tile == opp_base {
            me.patrol_to_center = true;
        }
        let goal = if me.patrol_to_center { center } else { opp_base };
        self.move_decision(i, goal)
    }

    /// Lowest (path length, tile index) live powerup matching the filters,
    /// using the distance field prepared in `decide`. Unreachable powerups
    /// are skipped, so pathfinding failure falls through to later behaviors.
    fn best_powerup(
        &self,
        i: usize,
        kind: Option<Entity>,
        within: Option<f64>,
    ) -> Option<usize> {
        let me = &self.agents[i];
        let mut best: Option<(u16, usize, usize)> = None;
        for p in &self.powerups {
            if !p.live {
                continue;
            }
            if let Some(k) = kind {
                if p.kind != k {
                    continue;
                }
            }
            let d = self.dist[p.tile];
            if d == u16::MAX {
                continue;
            }
            if let Some(radius) = within {
                let (x, y) = coords(p.tile);
                let euclid = ((me.fx - (x as f64 + 0.5)).powi(2)
                    + (me.fy - (y as f64 + 0.5)).powi(2))
                .sqrt();
                if euclid > radius {
                    continue;
                }
            }
            let key = if i == 0 { p.tile } else { TILES - 1 - p.tile };
            if best.is_none_or(|(bd, bk, _)| (d, key) < (bd, bk)) {
                best = Some((d, key, p.tile));
            }
        }
        best.map(|(_, _, t)| t)
    }

    /// Routes agent `i` toward `goal`, rebuilding the stored path only when
    /// the goal changed.
    fn move_decision(&mut self, i: usize, goal: usize) -> Decision {
        let nav = self.agents[i].nav_tile();
        if self.agents[i].path_goal != Some(goal) {
            let mut hops = Vec::new();
            if goal != nav && self.dist[goal] != u16::MAX {
                let mut cur = goal;
                while cur != nav {
                    hops.push(cur as u16);
                    cur = self.parent[cur] as usize;
                }
                hops.reverse();
            }
            let agent = &mut self.agents[i];
            agent.path = hops.into();
            agent.path_goal = Some(goal);
        }
        Decision {
            goal: Some(goal),
            fire: false,
        }
    }

    fn fire(&mut self, i: usize) {
        let (first, second) = self.agents.split_at_mut(1);
        let (attacker, defender) = if i == 0 {
            (&mut first[0], &mut second[0])
        } else {
            (&mut second[0], &mut first[0])
        };
        let d = ((attacker.fx - defender.fx).powi(2) + (attacker.fy - defender.fy).powi(2)).sqrt();
        match resolve_shot(attacker, defender, d, self.cfg.reload_time_s, &mut self.rng) {
            Ok(out) => {
                if out.hits > 0 {
                    let time = self.time;
                    self.log(|| {
                        format!(
                            "t={time:.1} p{} hit p{} for {:.1} ({} of {} bullets)",
                            i + 1,
                            2 - i,
                            out.damage,
                            out.hits,
                            out.bullets_fired
                        )
                    });
                }
            }
            Err(_) => unreachable!("fire decision checked the preconditions"),
        }
    }

    fn process_deaths(&mut self) -> Option<MatchOutcome> {
        // a simultaneous exchange can drop both players; the kill that
        // counts first (and may close out the match) is decided by a coin,
        // not by player index
        let dead = [
            self.agents[0].alive && self.agents[0].hp <= 0.0,
            self.agents[1].alive && self.agents[1].hp <= 0.0,
        ];
        let order: [usize; 2] = if dead[0] && dead[1] && self.rng.random::<f64>() < 0.5 {
            [1, 0]
        } else {
            [0, 1]
        };
        for attacker in order {
            let victim = 1 - attacker;
            if self.agents[victim].alive && self.agents[victim].hp <= 0.0 {
                self.agents[attacker].kills += 1;
                self.agents[victim].deaths += 1;
                let agent = &mut self.agents[victim];
                agent.alive = false;
                agent.respawn_timer = self.cfg.respawn_delay_s;
                agent.move_to = None;
                agent.move_progress = 0.0;
                agent.path.clear();
                agent.path_goal = None;
                let time = self.time;
                self.log(|| format!("t={time:.1} p{} killed p{}", attacker + 1, victim + 1));
                if self.agents[0].kills + self.agents[1].kills >= self.cfg.kill_limit {
                    return Some(MatchOutcome::new(
                        self.agents[0].kills,
                        self.agents[1].kills,
                        self.time,
                        true,
                    ));
                }
            }
        }
        None
    }

    /// Moves agent `i` through one tick. Returns the tile whose center was
    /// crossed and the in-tick time of the crossing, if any (the per-tick
    /// budget is below one tile, so at most one crossing happens).
    fn advance(&mut self, i: usize, goal: Option<usize>) -> Option<(usize, f64)> {
        let speed = self.agents[i].class.speed;
        let mut budget = speed * self.cfg.tick_s;
        let mut entered = None;
        let mut spent = 0.0f64;
        while budget > 1e-12 {
            if let Some(next) = self.agents[i].move_to {
                let agent = &mut self.agents[i];
                let remaining = 1.0 - agent.move_progress;
                let step = budget.min(remaining);
                agent.move_progress += step;
                budget -= step;
                spent += step;
                let (tx, ty) = coords(agent.tile);
                let (nx, ny) = coords(next);
                let t = agent.move_progress;
                agent.fx = (tx as f64 + 0.5) * (1.0 - t) + (nx as f64 + 0.5) * t;
                agent.fy = (ty as f64 + 0.5) * (1.0 - t) + (ny as f64 + 0.5) * t;
                if agent.move_progress >= 1.0 - 1e-12 {
                    agent.tile = next;
                    agent.move_to = None;
                    agent.move_progress = 0.0;
                    agent.fx = nx as f64 + 0.5;
                    agent.fy = ny as f64 + 0.5;
                    debug_assert!(entered.is_none(), "crossed two centers in one tick");
                    entered = Some((next, spent / speed));
                }
            } else {
                if goal.is_none() || goal == Some(self.agents[i].tile) {
                    break;
                }
                let agent = &mut self.agents[i];
                match agent.path.pop_front() {
                    Some(hop) => {
                        debug_assert!(
                            self.graphs[i].neighbors(agent.tile).contains(&hop),
                            "path hop must be adjacent"
                        );
                        agent.move_to = Some(hop as usize);
                        agent.move_progress = 0.0;
                    }
                    None => break,
                }
            }
        }
        entered
    }

    /// Awards live powerups to claiming agents. A powerup claimed by both
    /// agents in the same tick goes to the earlier arrival; exact ties are
    /// settled by a coin so neither player index is privileged.
    fn resolve_pickups(&mut self, claims: &[(usize, usize, f64)]) {
        for p_idx in 0..self.powerups.len() {
            if !self.powerups[p_idx].live {
                continue;
            }
            let tile = self.powerups[p_idx].tile;
            let mut claimants = claims.iter().filter(|(_, t, _)| *t == tile);
            let winner = match (claimants.next(), claimants.next()) {
                (None, _) => continue,
                (Some(&(i, _, _)), None) => i,
                (Some(&(i, _, ti)), Some(&(j, _, tj))) => {
                    if ti < tj {
                        i
                    } else if tj < ti {
                        j
                    } else if self.rng.random::<f64>() < 0.5 {
                        i
                    } else {
                        j
                    }
                }
            };
            self.award_powerup(p_idx, winner);
        }
    }

    fn award_powerup(&mut self, p_idx: usize, i: usize) {
        let p = &mut self.powerups[p_idx];
        p.live = false;
        let kind = p.kind;
        p.timer = apply_powerup(&mut self.agents[i], kind, self.cfg);
        let time = self.time;
        let (x, y) = coords(self.powerups[p_idx].tile);
        self.log(|| format!("t={time:.1} p{} picked {kind:?} at ({x},{y})", i + 1));
    }

    fn step_timers(&mut self) {
        let tick = self.cfg.tick_s;
        for i in 0..2 {
            let agent = &mut self.agents[i];
            if agent.alive {
                agent.fire_cooldown = (agent.fire_cooldown - tick).max(0.0);
                agent.double_damage_timer = (agent.double_damage_timer - tick).max(0.0);
                if agent.reload_timer > 0.0 {
                    agent.reload_timer -= tick;
                    if agent.reload_timer <= 0.0 {
                        agent.reload_timer = 0.0;
                        agent.clip = clip_rounds(&agent.class);
                    }
                }
            } else {
                agent.respawn_timer -= tick;
                if agent.respawn_timer <= 0.0 {
                    agent.respawn();
                    let time = self.time;
                    self.log(|| format!("t={time:.1} p{} respawned", i + 1));
                }
            }
        }
        for p in &mut self.powerups {
            if !p.live {
                p.timer -= tick;
                if p.timer <= 0.0 {
                    p.live = true;
                    p.timer = 0.0;
                }
            }
        }
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if let Some(events) = &mut self.events {
            events.push(line());
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::classes::{denormalize, random_class, ClassPair, ParamRanges};
    use crate::level::{generate_level, GeneratorConfig};
    use crate::rng::stream;
    use rayon::prelude::*;

    /// Bare agent for combat unit tests: hp and per-bullet damage given,
    /// everything else neutral.
    pub(crate) fn test_agent(hp: f64, damage: f64) -> AgentState {
        AgentState::spawn(
            PhysicalClass {
                hit_points: hp,
                speed: 4.0,
                damage,
                accuracy: 1.0,
                rate_of_fire: 5.0,
                clip_size: 10.0,
                bullets_per_shot: 1.0,
                range_tiles: 8.0,
            },
            tile_idx(2, 2),
        )
    }

    fn sample_pair(seed: u64) -> (PhysicalClass, PhysicalClass) {
        let ranges = ParamRanges::default();
        let mut rng = stream(seed);
        let pair = ClassPair {
            player1: random_class(&mut rng),
            player2: random_class(&mut rng),
        };
        (
            denormalize(&pair.player1, &ranges),
            denormalize(&pair.player2, &ranges),
        )
    }

    fn fixture_level() -> Level {
        generate_level(11, &GeneratorConfig::default()).unwrap()
    }

    #[test]
    fn zero_damage_classes_never_finish() {
        let level = fixture_level();
        let (mut a, mut b) = sample_pair(1);
        a.damage = 0.0;
        b.damage = 0.0;
        let cfg = MatchConfig::default();
        let out = simulate_match(&level, &a, &b, 3, &cfg).unwrap();
        assert!(!out.completed);
        assert_eq!(out.duration_s, cfg.time_limit_s);
        assert_eq!((out.kills_p1, out.kills_p2), (0, 0));
        assert_eq!(out.score, 0.5);
    }

    #[test]
    fn matches_are_bit_deterministic() {
        let level = fixture_level();
        let (a, b) = sample_pair(2);
        let cfg = MatchConfig::default();
        let o1 = simulate_match(&level, &a, &b, 77, &cfg).unwrap();
        let o2 = simulate_match(&level, &a, &b, 77, &cfg).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(o1.duration_s.to_bits(), o2.duration_s.to_bits());
        assert_eq!(o1.score.to_bits(), o2.score.to_bits());
    }

    #[test]
    fn completed_matches_reach_exactly_the_kill_limit() {
        let level = fixture_level();
        let cfg = MatchConfig::default();
        let mut completed = 0;
        for seed in 0..12u64 {
            let (a, b) = sample_pair(seed + 100);
            let out = simulate_match(&level, &a, &b, seed, &cfg).unwrap();
            assert!(out.duration_s <= cfg.time_limit_s);
            if out.completed {
                completed += 1;
                assert_eq!(out.kills_p1 + out.kills_p2, cfg.kill_limit);
            }
            assert!((0.0..=1.0).contains(&out.score));
        }
        assert!(completed > 0, "no match completed; simulator is inert");
    }

    #[test]
    fn kills_and_deaths_are_conserved() {
        // deaths of one player equal kills of the other; checked via the two
        // counters surfacing in the outcome across role-swapped runs
        let level = fixture_level();
        let cfg = MatchConfig::default();
        let (a, b) = sample_pair(42);
        let out = simulate_match(&level, &a, &b, 5, &cfg).unwrap();
        let swapped = simulate_match(&level, &b, &a, 5, &cfg).unwrap();
        // swapping classes must give a valid outcome too (not necessarily
        // mirrored: the map is not symmetric)
        assert!(out.kills_p1 + out.kills_p2 <= cfg.kill_limit);
        assert!(swapped.kills_p1 + swapped.kills_p2 <= cfg.kill_limit);
    }

    #[test]
    fn event_log_records_kills_and_pickups() {
        let level = fixture_level();
        let (a, b) = sample_pair(7);
        let cfg = MatchConfig::default();
        let (out, events) = simulate_match_logged(&level, &a, &b, 9, &cfg).unwrap();
        if out.kills_p1 + out.kills_p2 > 0 {
            assert!(events.iter().any(|e| e.contains("killed")));
        }
        // the log must not change the outcome
        let plain = simulate_match(&level, &a, &b, 9, &cfg).unwrap();
        assert_eq!(plain, out);
    }

    #[test]
    fn raising_damage_does_not_hurt_mean_score() {
        // monotone lethality: +damage for player 1, same seeds, mean score
        // must not drop by more than the noise bound
        let level = fixture_level();
        let cfg = MatchConfig::default();
        let (mut a, b) = sample_pair(3);
        a.damage = 20.0;
        let mean = |p1: &PhysicalClass, p2: &PhysicalClass| -> f64 {
            let total: f64 = (0..100u64)
                .into_par_iter()
                .map(|seed| simulate_match(&level, p1, p2, seed, &cfg).unwrap().score)
                .sum();
            total / 100.0
        };
        let base = mean(&a, &b);
        let mut stronger = a;
        stronger.damage = 45.0;
        let boosted = mean(&stronger, &b);
        assert!(
            boosted >= base - 0.05,
            "mean score dropped from {base} to {boosted} after a damage raise"
        );
    }

    #[test]
    fn invalid_level_is_a_precondition_error() {
        use crate::level::Tile;
        let mut tiles = vec![Tile::GROUND; TILES];
        tiles[tile_idx(10, 10)].elevation = 1; // unreachable first floor
        let level = Level::from_tiles(tiles, 0);
        let (a, b) = sample_pair(4);
        assert!(matches!(
            simulate_match(&level, &a, &b, 1, &MatchConfig::default()),
            Err(SimError::Level(_))
        ));
    }

    #[test]
    fn healing_is_capped_at_max_hp() {
        let cfg = MatchConfig::default();
        let mut agent = test_agent(200.0, 10.0);
        agent.hp = 200.0;
        let delay = apply_powerup(&mut agent, Entity::Healing, &cfg);
        assert_eq!(agent.hp, 200.0, "healing at full hp is a no-op");
        assert_eq!(delay, cfg.healing_respawn_s);
        agent.hp = 50.0;
        apply_powerup(&mut agent, Entity::Healing, &cfg);
        assert_eq!(agent.hp, 150.0);
        agent.hp = 150.0;
        apply_powerup(&mut agent, Entity::Healing, &cfg);
        assert_eq!(agent.hp, 200.0, "healing clamps to max");
    }

    #[test]
    fn armor_pickup_resets_to_fifty() {
        let cfg = MatchConfig::default();
        let mut agent = test_agent(200.0, 10.0);
        agent.armor = 20.0;
        let delay = apply_powerup(&mut agent, Entity::Armor, &cfg);
        assert_eq!(agent.armor, 50.0, "armor resets, it does not stack");
        assert_eq!(delay, cfg.armor_respawn_s);
    }

    #[test]
    fn double_damage_starts_the_configured_timer() {
        let cfg = MatchConfig::default();
        let mut agent = test_agent(200.0, 10.0);
        let delay = apply_powerup(&mut agent, Entity::DoubleDamage, &cfg);
        assert_eq!(agent.double_damage_timer, cfg.double_damage_duration_s);
        assert_eq!(delay, cfg.double_damage_respawn_s);
    }

    #[test]
    fn consumed_powerups_respawn_after_their_delay() {
        // lone healing tile, harmless classes: the agents keep re-collecting
        // it, and consecutive pickups of the same tile can never be closer
        // than the respawn delay
        use crate::level::{Entity as E, Tile};
        let mut tiles = vec![Tile::GROUND; TILES];
        tiles[tile_idx(10, 6)].entity = E::Healing;
        let level = Level::from_tiles(tiles, 0);
        let (mut a, mut b) = sample_pair(8);
        a.damage = 0.0;
        b.damage = 0.0;
        let cfg = MatchConfig::default();
        let (_, events) = simulate_match_logged(&level, &a, &b, 2, &cfg).unwrap();
        let times: Vec<f64> = events
            .iter()
            .filter(|e| e.contains("picked Healing at (10,6)"))
            .map(|e| {
                e.split_once("t=")
                    .and_then(|(_, rest)| rest.split_once(' '))
                    .and_then(|(t, _)| t.parse().ok())
                    .expect("event carries a time")
            })
            .collect();
        assert!(times.len() >= 3, "expected repeated pickups, got {times:?}");
        for w in times.windows(2) {
            assert!(
                w[1] - w[0] >= cfg.healing_respawn_s - 1e-9,
                "pickups {w:?} closer than the respawn delay"
            );
        }
    }

    #[test]
    fn config_validation_rejects_bad_limits() {
        let mut cfg = MatchConfig::default();
        cfg.kill_limit = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = MatchConfig::default();
        cfg.time_limit_s = 100.0;
        assert!(cfg.validate().is_err());
    }
}
