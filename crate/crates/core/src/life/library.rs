//! Patterns and specs shipped in the repository's `assets` directory.

use super::pattern::{parse_rle, GridPattern};
use super::validate::PatternSpec;
use crate::error::{Error, Result};

macro_rules! asset {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!("../../../../assets/", $name, ".rle")),
            include_str!(concat!("../../../../assets/", $name, ".spec")),
        )
    };
}

const SHIPPED: &[(&str, &str, &str)] = &[
    asset!("glider"),
    asset!("blinker"),
    asset!("block"),
    asset!("beehive"),
    asset!("eater"),
    asset!("gosper_gun"),
    asset!("and_gate"),
    asset!("or_gate"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|(name, _, _)| *name)
}

/// Parsed pattern and spec of a shipped asset.
pub fn load(name: &str) -> Result<(GridPattern, PatternSpec)> {
    let (_, rle, spec) = SHIPPED
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| Error::validation(format!("no shipped pattern named '{name}'")))?;
    Ok((parse_rle(rle)?, PatternSpec::parse(spec)?))
}

pub fn rle_text(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _, _)| *n == name).map(|(_, rle, _)| *rle)
}
