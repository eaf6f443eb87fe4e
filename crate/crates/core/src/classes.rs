//! Character-class parameter model.
//!
//! A class has 7 continuous parameters normalized to [0, 1] plus a
//! categorical weapon range (short / medium / long). [`ParamRanges`] maps the
//! normalized values to physical units for the simulator. Pairs of classes
//! flatten into a 16-gene [`Genotype`] for the genetic algorithm, with the
//! range category embedded as 0 / 0.5 / 1. Classes can also be labeled by
//! their nearest Team Fortress 2 archetype.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;

/// Number of parameters per class and genes per genotype.
pub const PARAMS_PER_CLASS: usize = 8;
pub const GENES: usize = 2 * PARAMS_PER_CLASS;
/// Gene order within one player block.
pub const PARAM_NAMES: [&str; PARAMS_PER_CLASS] = [
    "hp", "speed", "damage", "accuracy", "rof", "clip", "bullets", "range",
];
/// Index of the categorical range gene within one player block.
pub const RANGE_GENE: usize = 7;

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("parameter {name} = {value} outside [0,1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("gene {index} = {value} is not a valid range category (0, 0.5 or 1)")]
    BadRangeGene { index: usize, value: f64 },
    #[error("class parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter ranges: {0}")]
    BadRanges(String),
}

/// Weapon range category. The paper-style categorical parameter: no
/// intermediate values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeaponRange {
    Short,
    Medium,
    Long,
}

impl WeaponRange {
    pub const ALL: [WeaponRange; 3] = [WeaponRange::Short, WeaponRange::Medium, WeaponRange::Long];

    /// Numeric embedding used in genotypes, network inputs and distances.
    pub fn embed(self) -> f64 {
        match self {
            WeaponRange::Short => 0.0,
            WeaponRange::Medium => 0.5,
            WeaponRange::Long => 1.0,
        }
    }

    pub fn from_embed(v: f64) -> Result<WeaponRange, ClassError> {
        if v == 0.0 {
            Ok(WeaponRange::Short)
        } else if v == 0.5 {
            Ok(WeaponRange::Medium)
        } else if v == 1.0 {
            Ok(WeaponRange::Long)
        } else {
            Err(ClassError::BadRangeGene { index: 0, value: v })
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeaponRange::Short => "short",
            WeaponRange::Medium => "medium",
            WeaponRange::Long => "long",
        }
    }

    pub fn parse(s: &str) -> Option<WeaponRange> {
        match s {
            "short" => Some(WeaponRange::Short),
            "medium" => Some(WeaponRange::Medium),
            "long" => Some(WeaponRange::Long),
            _ => None,
        }
    }
}

/// A character class in normalized units: every continuous field in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterClass {
    pub hit_points: f64,
    pub speed: f64,
    pub damage: f64,
    pub accuracy: f64,
    pub rate_of_fire: f64,
    pub clip_size: f64,
    pub bullets_per_shot: f64,
    pub weapon_range: WeaponRange,
}

impl CharacterClass {
    /// Continuous fields in gene order (range excluded).
    pub fn continuous(&self) -> [f64; 7] {
        [
            self.hit_points,
            self.speed,
            self.damage,
            self.accuracy,
            self.rate_of_fire,
            self.clip_size,
            self.bullets_per_shot,
        ]
    }

    /// 8-vector with the range category embedded, used for genotypes and
    /// TF2 distances.
    pub fn to_vector(&self) -> [f64; PARAMS_PER_CLASS] {
        let c = self.continuous();
        [c[0], c[1], c[2], c[3], c[4], c[5], c[6], self.weapon_range.embed()]
    }

    pub fn from_vector(v: &[f64; PARAMS_PER_CLASS]) -> Result<CharacterClass, ClassError> {
        Ok(CharacterClass {
            hit_points: v[0],
            speed: v[1],
            damage: v[2],
            accuracy: v[3],
            rate_of_fire: v[4],
            clip_size: v[5],
            bullets_per_shot: v[6],
            weapon_range: WeaponRange::from_embed(v[7])?,
        })
    }

    pub fn validate(&self) -> Result<(), ClassError> {
        for (name, value) in PARAM_NAMES[..7].iter().zip(self.continuous()) {
            if !(0.0..=1.0).contains(&value) {
                return Err(ClassError::OutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// Physical ranges for denormalization. Single source of truth for the
/// normalized <-> physical mapping; all analysis is reported in normalized
/// space so these only shape the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    pub hit_points: (f64, f64),
    pub speed: (f64, f64),
    pub damage: (f64, f64),
    pub accuracy: (f64, f64),
    pub rate_of_fire: (f64, f64),
    pub clip_size: (f64, f64),
    pub bullets_per_shot: (f64, f64),
    /// Weapon range category -> distance in tiles.
    pub range_tiles: RangeTiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeTiles {
    pub short: f64,
    pub medium: f64,
    pub long: f64,
}

impl Default for RangeTiles {
    fn default() -> Self {
        RangeTiles {
            short: 4.0,
            medium: 8.0,
            long: 16.0,
        }
    }
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            hit_points: (100.0, 300.0),
            speed: (2.0, 6.0),
            damage: (1.0, 12.0),
            accuracy: (0.1, 1.0),
            rate_of_fire: (1.0, 10.0),
            clip_size: (5.0, 50.0),
            bullets_per_shot: (1.0, 4.0),
            range_tiles: RangeTiles::default(),
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<(), ClassError> {
        let pairs = [
            ("hit_points", self.hit_points),
            ("speed", self.speed),
            ("damage", self.damage),
            ("accuracy", self.accuracy),
            ("rate_of_fire", self.rate_of_fire),
            ("clip_size", self.clip_size),
            ("bullets_per_shot", self.bullets_per_shot),
        ];
        for (name, (lo, hi)) in pairs {
            if lo >= hi {
                return Err(ClassError::BadRanges(format!("{name}: min {lo} >= max {hi}")));
            }
        }
        Ok(())
    }

    pub fn tiles_for(&self, range: WeaponRange) -> f64 {
        match range {
            WeaponRange::Short => self.range_tiles.short,
            WeaponRange::Medium => self.range_tiles.medium,
            WeaponRange::Long => self.range_tiles.long,
        }
    }
}

/// A class in physical units, ready for the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalClass {
    pub hit_points: f64,
    /// tiles per second
    pub speed: f64,
    /// damage per bullet
    pub damage: f64,
    /// hit probability inside weapon range
    pub accuracy: f64,
    /// shots per second
    pub rate_of_fire: f64,
    pub clip_size: f64,
    pub bullets_per_shot: f64,
    /// full-accuracy distance in tiles
    pub range_tiles: f64,
}

fn lerp(v: f64, (lo, hi): (f64, f64)) -> f64 {
    v * (hi - lo) + lo
}

/// Linear min-max denormalization of every parameter; the range category
/// maps to its configured tile distance.
pub fn denormalize(class: &CharacterClass, ranges: &ParamRanges) -> PhysicalClass {
    PhysicalClass {
        hit_points: lerp(class.hit_points, ranges.hit_points),
        speed: lerp(class.speed, ranges.speed),
        damage: lerp(class.damage, ranges.damage),
        accuracy: lerp(class.accuracy, ranges.accuracy),
        rate_of_fire: lerp(class.rate_of_fire, ranges.rate_of_fire),
        clip_size: lerp(class.clip_size, ranges.clip_size),
        bullets_per_shot: lerp(class.bullets_per_shot, ranges.bullets_per_shot),
        range_tiles: ranges.tiles_for(class.weapon_range),
    }
}

/// Uniform random class: continuous parameters on [0, 1], range uniform over
/// the three categories. Draw order is fixed, so a given stream state always
/// produces the same class.
pub fn random_class(rng: &mut Stream) -> CharacterClass {
    CharacterClass {
        hit_points: rng.random(),
        speed: rng.random(),
        damage: rng.random(),
        accuracy: rng.random(),
        rate_of_fire: rng.random(),
        clip_size: rng.random(),
        bullets_per_shot: rng.random(),
        weapon_range: WeaponRange::ALL[rng.random_range(0..3)],
    }
}

/// Two classes about to fight: player 1 and player 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPair {
    pub player1: CharacterClass,
    pub player2: CharacterClass,
}

impl ClassPair {
    pub fn swapped(&self) -> ClassPair {
        ClassPair {
            player1: self.player2,
            player2: self.player1,
        }
    }
}

/// 16-gene flat encoding of a class pair. Genes 0..8 are player 1 in the
/// order hp, speed, damage, accuracy, rof, clip, bullets, range; genes 8..16
/// are player 2. Range genes (7 and 15) hold the 0 / 0.5 / 1 embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Genotype(pub [f64; GENES]);

impl Genotype {
    pub fn genes(&self) -> &[f64; GENES] {
        &self.0
    }

    pub fn is_range_gene(i: usize) -> bool {
        i % PARAMS_PER_CLASS == RANGE_GENE
    }

    /// Genes as f32 network input.
    pub fn to_f32(&self) -> [f32; GENES] {
        let mut out = [0.0f32; GENES];
        for (o, g) in out.iter_mut().zip(self.0.iter()) {
            *o = *g as f32;
        }
        out
    }

    pub fn validate(&self) -> Result<(), ClassError> {
        for (i, &g) in self.0.iter().enumerate() {
            if Genotype::is_range_gene(i) {
                WeaponRange::from_embed(g)
                    .map_err(|_| ClassError::BadRangeGene { index: i, value: g })?;
            } else if !(0.0..=1.0).contains(&g) {
                return Err(ClassError::OutOfRange {
                    name: PARAM_NAMES[i % PARAMS_PER_CLASS],
                    value: g,
                });
            }
        }
        Ok(())
    }
}

/// Flattens a pair into its genotype.
pub fn encode_genotype(pair: &ClassPair) -> Genotype {
    let mut genes = [0.0; GENES];
    genes[..PARAMS_PER_CLASS].copy_from_slice(&pair.player1.to_vector());
    genes[PARAMS_PER_CLASS..].copy_from_slice(&pair.player2.to_vector());
    Genotype(genes)
}

/// Rebuilds the pair from a genotype. Fails if a range gene is not one of
/// the exact category embeddings.
pub fn decode_genotype(g: &Genotype) -> Result<ClassPair, ClassError> {
    let mut p1 = [0.0; PARAMS_PER_CLASS];
    let mut p2 = [0.0; PARAMS_PER_CLASS];
    p1.copy_from_slice(&g.0[..PARAMS_PER_CLASS]);
    p2.copy_from_slice(&g.0[PARAMS_PER_CLASS..]);
    Ok(ClassPair {
        player1: CharacterClass::from_vector(&p1)?,
        player2: CharacterClass::from_vector(&p2)?,
    })
}

/// TF2 archetype labels, in the fixed tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tf2Label {
    Scout,
    Soldier,
    Pyro,
    Heavy,
    Sniper,
}

impl Tf2Label {
    pub const ALL: [Tf2Label; 5] = [
        Tf2Label::Scout,
        Tf2Label::Soldier,
        Tf2Label::Pyro,
        Tf2Label::Heavy,
        Tf2Label::Sniper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tf2Label::Scout => "scout",
            Tf2Label::Soldier => "soldier",
            Tf2Label::Pyro => "pyro",
            Tf2Label::Heavy => "heavy",
            Tf2Label::Sniper => "sniper",
        }
    }

    fn rank(self) -> usize {
        Tf2Label::ALL.iter().position(|l| *l == self).unwrap()
    }
}

/// One reference archetype: label plus 8-dimensional normalized vector with
/// the range category embedded numerically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tf2Reference {
    pub label: Tf2Label,
    pub vector: [f64; PARAMS_PER_CLASS],
}

/// Default reference table. Estimated from the archetypes, not measured
/// game data; override in the experiment config if desired.
pub fn default_tf2_references() -> Vec<Tf2Reference> {
    let entry = |label, v: [f64; 8]| Tf2Reference { label, vector: v };
    vec![
        entry(Tf2Label::Sniper, [0.3, 0.5, 1.0, 1.0, 0.05, 0.0, 0.0, 1.0]),
        entry(Tf2Label::Heavy, [1.0, 0.2, 0.35, 0.3, 1.0, 1.0, 0.3, 0.0]),
        entry(Tf2Label::Scout, [0.1, 1.0, 0.5, 0.6, 0.3, 0.1, 0.6, 0.5]),
        entry(Tf2Label::Soldier, [0.6, 0.4, 0.9, 0.7, 0.1, 0.05, 0.1, 1.0]),
        entry(Tf2Label::Pyro, [0.55, 0.5, 0.25, 0.2, 0.9, 0.8, 1.0, 0.0]),
    ]
}

/// Result of nearest-archetype matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tf2Match {
    Label(Tf2Label),
    Undefined,
}

impl Tf2Match {
    pub fn name(self) -> &'static str {
        match self {
            Tf2Match::Label(l) => l.name(),
            Tf2Match::Undefined => "undefined",
        }
    }
}

/// Default distance threshold beyond which a class counts as undefined.
pub const TF2_THRESHOLD: f64 = 1.5;

/// Labels a class by minimum Euclidean distance over the 8-dimensional
/// vectors. Ties break by the fixed label order scout, soldier, pyro, heavy,
/// sniper. Distances above `threshold` yield `Undefined`.
pub fn match_tf2(
    class: &CharacterClass,
    refs: &[Tf2Reference],
    threshold: f64,
) -> (Tf2Match, f64) {
    assert!(!refs.is_empty(), "reference table must not be empty");
    let v = class.to_vector();
    let mut best: Option<(f64, Tf2Label)> = None;
    for r in refs {
        let d = v
            .iter()
            .zip(r.vector.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let better = match best {
            None => true,
            Some((bd, bl)) => d < bd || (d == bd && r.label.rank() < bl.rank()),
        };
        if better {
            best = Some((d, r.label));
        }
    }
    let (d, label) = best.unwrap();
    if d > threshold {
        (Tf2Match::Undefined, d)
    } else {
        (Tf2Match::Label(label), d)
    }
}

/// Renders one class as a line of named fields.
pub fn render_class(class: &CharacterClass) -> String {
    format!(
        "hp={} speed={} damage={} accuracy={} rof={} clip={} bullets={} range={}",
        class.hit_points,
        class.speed,
        class.damage,
        class.accuracy,
        class.rate_of_fire,
        class.clip_size,
        class.bullets_per_shot,
        class.weapon_range.name()
    )
}

/// Parses one class line (named key=value fields in any order).
pub fn parse_class_line(line: &str, line_no: usize) -> Result<CharacterClass, ClassError> {
    let mut values = [None::<f64>; 7];
    let mut range = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| ClassError::Parse {
            line: line_no,
            msg: format!("field {field:?} is not key=value"),
        })?;
        if key == "range" {
            range = Some(WeaponRange::parse(value).ok_or_else(|| ClassError::Parse {
                line: line_no,
                msg: format!("unknown range category {value:?}"),
            })?);
            continue;
        }
        let slot = PARAM_NAMES[..7]
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| ClassError::Parse {
                line: line_no,
                msg: format!("unknown field {key:?}"),
            })?;
        let parsed: f64 = value.parse().map_err(|_| ClassError::Parse {
            line: line_no,
            msg: format!("bad number {value:?} for {key}"),
        })?;
        values[slot] = Some(parsed);
    }
    let mut v = [0.0; PARAMS_PER_CLASS];
    for (i, slot) in values.iter().enumerate() {
        v[i] = slot.ok_or_else(|| ClassError::Parse {
            line: line_no,
            msg: format!("missing field {:?}", PARAM_NAMES[i]),
        })?;
    }
    v[RANGE_GENE] = range
        .ok_or_else(|| ClassError::Parse {
            line: line_no,
            msg: "missing field \"range\"".to_string(),
        })?
        .embed();
    let class = CharacterClass::from_vector(&v)?;
    class.validate()?;
    Ok(class)
}

/// Renders a pair as a two-line class file (player 1 first).
pub fn render_pair(pair: &ClassPair) -> String {
    format!("{}\n{}\n", render_class(&pair.player1), render_class(&pair.player2))
}

/// Parses a two-class file. Lines starting with '#' are comments.
pub fn parse_pair(text: &str) -> Result<ClassPair, ClassError> {
    let classes: Vec<CharacterClass> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(no, l)| parse_class_line(l, no + 1))
        .collect::<Result<_, _>>()?;
    if classes.len() != 2 {
        return Err(ClassError::Parse {
            line: 0,
            msg: format!("expected 2 classes, found {}", classes.len()),
        });
    }
    Ok(ClassPair {
        player1: classes[0],
        player2: classes[1],
    })
}
