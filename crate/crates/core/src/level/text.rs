//! Plain-text level format: 20 lines of 20 characters plus a trailing
//! newline.
//!
//! Alphabet: '.' ground, '#' second floor (wall), '=' first floor,
//! 'S' stairs on ground, 'D'/'H'/'A' double damage / healing / armor on the
//! ground floor, 'd'/'h'/'a' the same powerups on the first floor. Bases are
//! implicit (fixed corner regions) and must contain only '.'.

use super::{base_at, BaseOwner, Entity, Level, LevelError, Tile, GRID, TILES};

/// Renders a level into the text format. The seed is not part of the format.
pub fn render_level(level: &Level) -> String {
    let mut out = String::with_capacity(TILES + GRID);
    for y in 0..GRID {
        for x in 0..GRID {
            let t = level.tile(x, y);
            let c = match (t.elevation, t.entity) {
                (0, Entity::None) => '.',
                (0, Entity::Stairs) => 'S',
                (0, Entity::DoubleDamage) => 'D',
                (0, Entity::Healing) => 'H',
                (0, Entity::Armor) => 'A',
                (1, Entity::None) => '=',
                (1, Entity::DoubleDamage) => 'd',
                (1, Entity::Healing) => 'h',
                (1, Entity::Armor) => 'a',
                (2, Entity::None) => '#',
                (e, ent) => panic!("unrenderable tile ({e}, {ent:?}) at ({x},{y})"),
            };
            out.push(c);
        }
        out.push('\n');
    }
    out
}

/// Parses the text format back into a level (seed 0) and validates every
/// level invariant. Errors name the offending row and column.
pub fn parse_level(text: &str) -> Result<Level, LevelError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != GRID {
        return Err(LevelError::BadDimensions(format!(
            "expected {GRID} lines, found {}",
            lines.len()
        )));
    }
    let mut tiles = vec![Tile::GROUND; TILES];
    for (y, line) in lines.iter().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != GRID {
            return Err(LevelError::BadDimensions(format!(
                "line {y} has {} characters, expected {GRID}",
                chars.len()
            )));
        }
        for (x, c) in chars.iter().enumerate() {
            let (elevation, entity) = match c {
                '.' => (0, Entity::None),
                'S' => (0, Entity::Stairs),
                'D' => (0, Entity::DoubleDamage),
                'H' => (0, Entity::Healing),
                'A' => (0, Entity::Armor),
                '=' => (1, Entity::None),
                'd' => (1, Entity::DoubleDamage),
                'h' => (1, Entity::Healing),
                'a' => (1, Entity::Armor),
                '#' => (2, Entity::None),
                _ => {
                    return Err(LevelError::Parse {
                        row: y,
                        col: x,
                        msg: format!("unknown character {c:?}"),
                    })
                }
            };
            if base_at(x, y) != BaseOwner::None && *c != '.' {
                return Err(LevelError::Parse {
                    row: y,
                    col: x,
                    msg: format!("base regions may contain only '.', found {c:?}"),
                });
            }
            tiles[super::idx(x, y)] = Tile {
                elevation,
                entity,
                base: BaseOwner::None,
            };
        }
    }
    let level = Level::from_tiles(tiles, 0);
    level.validate()?;
    Ok(level)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_level, GeneratorConfig};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_dots_parse_to_all_ground() {
        let text = format!("{}\n", vec![".".repeat(GRID); GRID].join("\n"));
        let level = parse_level(&text).unwrap();
        assert!(level.tiles().iter().all(|t| *t == Tile::GROUND
            || (t.elevation == 0 && t.entity == Entity::None)));
        assert_eq!(render_level(&level), text);
    }

    #[test]
    fn stairs_without_adjacent_first_floor_is_a_parse_error() {
        let mut rows = vec![".".repeat(GRID); GRID];
        rows[10].replace_range(10..11, "S");
        let text = format!("{}\n", rows.join("\n"));
        let err = parse_level(&text).unwrap_err();
        match err {
            LevelError::Invariant { row, col, .. } => assert_eq!((row, col), (10, 10)),
            other => panic!("expected invariant error, got {other}"),
        }
    }

    #[test]
    fn unknown_character_names_position() {
        let mut rows = vec![".".repeat(GRID); GRID];
        rows[3].replace_range(7..8, "?");
        let text = format!("{}\n", rows.join("\n"));
        match parse_level(&text).unwrap_err() {
            LevelError::Parse { row, col, .. } => assert_eq!((row, col), (3, 7)),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn entity_in_base_is_rejected() {
        let mut rows = vec![".".repeat(GRID); GRID];
        rows[2].replace_range(2..3, "H");
        let text = format!("{}\n", rows.join("\n"));
        assert!(matches!(
            parse_level(&text).unwrap_err(),
            LevelError::Parse { row: 2, col: 2, .. }
        ));
    }

    #[test]
    fn wrong_dimensions_are_rejected() {
        assert!(matches!(
            parse_level("...\n"),
            Err(LevelError::BadDimensions(_))
        ));
        let rows = vec![".".repeat(GRID - 1); GRID];
        assert!(matches!(
            parse_level(&format!("{}\n", rows.join("\n"))),
            Err(LevelError::BadDimensions(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// Round trip through the text format is the identity on tiles.
        #[test]
        fn round_trip_on_generated_levels(seed in any::<u64>()) {
            let level = generate_level(seed, &GeneratorConfig::default()).unwrap();
            let text = render_level(&level);
            prop_assert!(text.ends_with('\n'));
            let back = parse_level(&text).unwrap();
            prop_assert_eq!(back.tiles(), level.tiles());
            prop_assert_eq!(render_level(&back), text);
        }
    }
}
