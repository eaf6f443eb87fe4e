//! 8-channel binary encoding of a level.
//!
//! Channel order: ground, first floor, second floor, stairs, double damage,
//! healing, armor, cover. Elevation channels are one-hot per tile. The cover
//! channel is reserved and always zero.

use super::{coords, Entity, Level, GRID, TILES};

/// Number of channels in the stack.
pub const CHANNELS: usize = 8;
/// Bytes per bit-packed channel plane (400 bits).
pub const PLANE_BYTES: usize = TILES / 8;

pub const CH_GROUND: usize = 0;
pub const CH_FIRST: usize = 1;
pub const CH_SECOND: usize = 2;
pub const CH_STAIRS: usize = 3;
pub const CH_DOUBLE_DAMAGE: usize = 4;
pub const CH_HEALING: usize = 5;
pub const CH_ARMOR: usize = 6;
pub const CH_COVER: usize = 7;

/// Bit-packed 8x20x20 binary stack. Bit i of plane c is tile (i % 20, i / 20);
/// bits are packed LSB-first within each byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelStack {
    planes: [[u8; PLANE_BYTES]; CHANNELS],
}

impl ChannelStack {
    pub fn zeros() -> ChannelStack {
        ChannelStack {
            planes: [[0u8; PLANE_BYTES]; CHANNELS],
        }
    }

    pub fn get(&self, channel: usize, x: usize, y: usize) -> bool {
        let bit = y * GRID + x;
        self.planes[channel][bit / 8] >> (bit % 8) & 1 == 1
    }

    pub fn set(&mut self, channel: usize, x: usize, y: usize, value: bool) {
        let bit = y * GRID + x;
        if value {
            self.planes[channel][bit / 8] |= 1 << (bit % 8);
        } else {
            self.planes[channel][bit / 8] &= !(1 << (bit % 8));
        }
    }

    pub fn plane(&self, channel: usize) -> &[u8; PLANE_BYTES] {
        &self.planes[channel]
    }

    pub fn from_planes(planes: [[u8; PLANE_BYTES]; CHANNELS]) -> ChannelStack {
        ChannelStack { planes }
    }

    /// Expands to f32 in channel-major, row-major order (c * 400 + y * 20 + x),
    /// the layout the network and the flat baselines consume.
    pub fn to_f32(&self) -> Vec<f32> {
        let mut out = vec![0.0f32; CHANNELS * TILES];
        for c in 0..CHANNELS {
            for bit in 0..TILES {
                if self.planes[c][bit / 8] >> (bit % 8) & 1 == 1 {
                    out[c * TILES + bit] = 1.0;
                }
            }
        }
        out
    }

    /// One-hot check: exactly one elevation channel set per tile and the
    /// cover channel all zero.
    pub fn is_one_hot(&self) -> bool {
        for i in 0..TILES {
            let (x, y) = coords(i);
            let sum = [CH_GROUND, CH_FIRST, CH_SECOND]
                .iter()
                .filter(|&&c| self.get(c, x, y))
                .count();
            if sum != 1 || self.get(CH_COVER, x, y) {
                return false;
            }
        }
        true
    }
}

/// Encodes a level into its channel stack. Total and deterministic.
pub fn encode_level(level: &Level) -> ChannelStack {
    let mut stack = ChannelStack::zeros();
    for i in 0..TILES {
        let (x, y) = coords(i);
        let tile = level.tile_at(i);
        let elev_channel = match tile.elevation {
            0 => CH_GROUND,
            1 => CH_FIRST,
            _ => CH_SECOND,
        };
        stack.set(elev_channel, x, y, true);
        let entity_channel = match tile.entity {
            Entity::None => None,
            Entity::Stairs => Some(CH_STAIRS),
            Entity::DoubleDamage => Some(CH_DOUBLE_DAMAGE),
            Entity::Healing => Some(CH_HEALING),
            Entity::Armor => Some(CH_ARMOR),
        };
        if let Some(c) = entity_channel {
            stack.set(c, x, y, true);
        }
    }
    stack
}

#[cfg(test)]
mod tests {
    use super::super::{idx, Level, Tile, TILES};
    use super::*;

    #[test]
    fn all_ground_sets_only_channel_zero() {
        let level = Level::from_tiles(vec![Tile::GROUND; TILES], 0);
        let s = encode_level(&level);
        for y in 0..GRID {
            for x in 0..GRID {
                assert!(s.get(CH_GROUND, x, y));
                for c in 1..CHANNELS {
                    assert!(!s.get(c, x, y), "channel {c} should be empty");
                }
            }
        }
    }

    #[test]
    fn healing_entity_lands_in_channel_five() {
        let mut tiles = vec![Tile::GROUND; TILES];
        tiles[idx(3, 4)].entity = Entity::Healing;
        let level = Level::from_tiles(tiles, 0);
        let s = encode_level(&level);
        let mut ones = 0;
        for y in 0..GRID {
            for x in 0..GRID {
                if s.get(CH_HEALING, x, y) {
                    ones += 1;
                    assert_eq!((x, y), (3, 4));
                }
            }
        }
        assert_eq!(ones, 1);
    }

    #[test]
    fn one_hot_holds_by_construction() {
        let mut tiles = vec![Tile::GROUND; TILES];
        tiles[idx(7, 7)].elevation = 2;
        tiles[idx(8, 7)].elevation = 1;
        let level = Level::from_tiles(tiles, 0);
        assert!(encode_level(&level).is_one_hot());
    }

    #[test]
    fn f32_layout_is_channel_major() {
        let mut tiles = vec![Tile::GROUND; TILES];
        tiles[idx(1, 0)].entity = Entity::Armor;
        let level = Level::from_tiles(tiles, 0);
        let v = encode_level(&level).to_f32();
        assert_eq!(v.len(), 3200);
        assert_eq!(v[CH_ARMOR * TILES + 1], 1.0);
        assert_eq!(v[CH_GROUND * TILES + 1], 1.0);
        assert_eq!(v[CH_COVER * TILES..].iter().sum::<f32>(), 0.0);
    }
}
