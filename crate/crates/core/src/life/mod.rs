//! Conway's Game of Life on the grid engine: pattern I/O, an independent
//! reference simulator, pattern validation and the shipped circuit library.

pub mod library;
pub mod naive;
mod pattern;
mod sim;
mod validate;

pub use pattern::{emit_rle, parse_rle, GridPattern};
pub use sim::{run_life, run_life_with, soup_check, Arena, SoupReport};
pub use validate::{
    inject, validate_pattern, Heading, InputSite, PatternKind, PatternSpec, Rect, RowOutcome,
    TruthRow, ValidationReport, DEFAULT_MARGIN,
};
