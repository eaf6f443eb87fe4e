//! Combat primitives: grid line of sight and shot resolution.

use rand::Rng;
use thiserror::Error;

use super::AgentState;
use crate::level::{Level, GRID};
use crate::rng::Stream;

/// True iff the discrete ray between the tile centers of `a` and `b`
/// crosses no second-floor (wall) tile and the endpoint elevations differ by
/// at most one.
///
/// The ray visits every tile whose square the center-to-center segment
/// touches, including both side tiles at exact corner crossings. The visited
/// set is purely geometric, so sight is symmetric in its endpoints and
/// equivariant under grid rotations.
pub fn line_of_sight(level: &Level, a: (usize, usize), b: (usize, usize)) -> bool {
    let (ea, eb) = (level.elevation(a.0, a.1), level.elevation(b.0, b.1));
    if (i32::from(ea) - i32::from(eb)).abs() > 1 {
        return false;
    }
    let blocked = |x: i32, y: i32| -> bool {
        debug_assert!((0..GRID as i32).contains(&x) && (0..GRID as i32).contains(&y));
        level.elevation(x as usize, y as usize) == 2
    };
    let (mut x, mut y) = (a.0 as i32, a.1 as i32);
    let (x1, y1) = (b.0 as i32, b.1 as i32);
    let dx = (x1 - x).abs();
    let dy = (y1 - y).abs();
    let sx = (x1 - x).signum();
    let sy = (y1 - y).signum();
    let (dx2, dy2) = (dx * 2, dy * 2);
    let mut err = dx - dy;
    loop {
        if blocked(x, y) {
            return false;
        }
        if x == x1 && y == y1 {
            return true;
        }
        match err.cmp(&0) {
            std::cmp::Ordering::Greater => {
                x += sx;
                err -= dy2;
            }
            std::cmp::Ordering::Less => {
                y += sy;
                err += dx2;
            }
            std::cmp::Ordering::Equal => {
                // exact corner: the segment touches both side tiles
                if blocked(x + sx, y) || blocked(x, y + sy) {
                    return false;
                }
                x += sx;
                y += sy;
                err += dx2 - dy2;
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShotError {
    #[error("clip is empty")]
    EmptyClip,
    #[error("weapon is cooling down")]
    CoolingDown,
    #[error("weapon is reloading")]
    Reloading,
}

/// What one trigger pull did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOutcome {
    pub bullets_fired: u32,
    pub hits: u32,
    /// Total damage rolled (after the double-damage multiplier).
    pub damage: f64,
    /// Portion soaked by armor; the rest came off hit points.
    pub absorbed: f64,
}

/// Hit-probability falloff: 1 inside weapon range, linear to 0 at twice the
/// range.
pub fn falloff(distance: f64, range: f64) -> f64 {
    if distance <= range {
        1.0
    } else {
        ((2.0 * range - distance) / range).max(0.0)
    }
}

/// Fires one shot from `attacker` at `defender` at the given distance.
///
/// Each of the weapon's bullets hits independently with probability
/// `accuracy * falloff(distance, range)`. Damage is doubled while the
/// attacker's double-damage timer runs and depletes armor before hit points.
/// One shot costs one clip round; emptying the clip starts the reload timer.
/// The caller is responsible for line of sight.
pub fn resolve_shot(
    attacker: &mut AgentState,
    defender: &mut AgentState,
    distance: f64,
    reload_time_s: f64,
    rng: &mut Stream,
) -> Result<ShotOutcome, ShotError> {
    if attacker.reload_timer > 0.0 {
        return Err(ShotError::Reloading);
    }
    if attacker.fire_cooldown > 0.0 {
        return Err(ShotError::CoolingDown);
    }
    if attacker.clip == 0 {
        return Err(ShotError::EmptyClip);
    }
    let class = &attacker.class;
    let p_hit = class.accuracy * falloff(distance, class.range_tiles);
    let per_bullet = class.damage * if attacker.double_damage_timer > 0.0 { 2.0 } else { 1.0 };
    let bullets = class.bullets_per_shot.round().max(1.0) as u32;
    let mut hits = 0;
    for _ in 0..bullets {
        if rng.random::<f64>() < p_hit {
            hits += 1;
        }
    }
    let damage = f64::from(hits) * per_bullet;
    let absorbed = damage.min(defender.armor);
    defender.armor -= absorbed;
    defender.hp -= damage - absorbed;

    attacker.clip -= 1;
    attacker.fire_cooldown = 1.0 / class.rate_of_fire;
    if attacker.clip == 0 {
        attacker.reload_timer = reload_time_s;
    }
    Ok(ShotOutcome {
        bullets_fired: bullets,
        hits,
        damage,
        absorbed,
    })
}
