//! Shared fixtures for the pipeline benchmarks.

use classforge::classes::{denormalize, random_class, ParamRanges, PhysicalClass};
use classforge::level::{generate_level, GeneratorConfig, Level};
use classforge::rng::stream;

pub fn fixture_level(seed: u64) -> Level {
    generate_level(seed, &GeneratorConfig::default()).expect("benchmark level generates")
}

pub fn fixture_classes(seed: u64) -> (PhysicalClass, PhysicalClass) {
    let ranges = ParamRanges::default();
    let mut rng = stream(seed);
    (
        denormalize(&random_class(&mut rng), &ranges),
        denormalize(&random_class(&mut rng), &ranges),
    )
}
