use rayon::prelude::*;
use serde::Serialize;

use super::naive::NaiveGrid;
use super::pattern::GridPattern;
use crate::engine::{self, Capture, EvolutionTrace, StateConfig};
use crate::error::{Error, Result};
use crate::graph::{Boundary, Graph, Neighborhood};
use crate::rules::LifeRule;
use crate::seeding;

/// The finite grid a pattern runs in; the pattern's top-left cell sits at
/// `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Arena {
    pub rows: usize,
    pub cols: usize,
    pub offset: (usize, usize),
    pub boundary: Boundary,
}

impl Arena {
    pub fn new(rows: usize, cols: usize, offset: (usize, usize), boundary: Boundary) -> Self {
        Arena {
            rows,
            cols,
            offset,
            boundary,
        }
    }

    /// Dead-boundary arena with `margin` empty cells on every side.
    pub fn around(p: &GridPattern, margin: usize) -> Self {
        Arena::new(
            p.height() + 2 * margin,
            p.width() + 2 * margin,
            (margin, margin),
            Boundary::Dead,
        )
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn graph(&self) -> Result<Graph> {
        Graph::grid(self.rows, self.cols, Neighborhood::Moore8, self.boundary)
    }

    fn check_fits(&self, p: &GridPattern) -> Result<()> {
        let (r0, c0) = self.offset;
        if r0 + p.height() > self.rows || c0 + p.width() > self.cols {
            return Err(Error::validation(format!(
                "{}x{} pattern at offset ({r0}, {c0}) does not fit a {}x{} arena",
                p.width(),
                p.height(),
                self.cols,
                self.rows
            )));
        }
        Ok(())
    }

    /// Arena configuration with the pattern's cells set to 1.0.
    pub fn embed(&self, p: &GridPattern) -> Result<StateConfig> {
        self.check_fits(p)?;
        let (r0, c0) = self.offset;
        let mut values = vec![0.0; self.cells()];
        for &(r, c) in p.cells() {
            values[(r + r0) * self.cols + c + c0] = 1.0;
        }
        StateConfig::new(self.cells(), 1, values)
    }

    /// Arena-sized pattern of the cells at or above 0.5, in arena coordinates.
    pub fn extract(&self, h: &StateConfig) -> GridPattern {
        let cells = h
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= 0.5)
            .map(|(k, _)| (k / self.cols, k % self.cols));
        GridPattern::new(self.cols, self.rows, cells.collect::<Vec<_>>())
            .expect("arena indices are in bounds")
    }

    pub fn naive(&self, p: &GridPattern) -> Result<NaiveGrid> {
        self.check_fits(p)?;
        let mut g = NaiveGrid::new(self.rows, self.cols, self.boundary);
        for &(r, c) in p.cells() {
            g.alive[r + self.offset.0][c + self.offset.1] = true;
        }
        Ok(g)
    }
}

/// Runs `steps` generations of `p` inside `arena` and keeps every state.
pub fn run_life(p: &GridPattern, steps: usize, arena: &Arena) -> Result<EvolutionTrace> {
    run_life_with(p, steps, arena, Capture::All)
}

pub fn run_life_with(
    p: &GridPattern,
    steps: usize,
    arena: &Arena,
    capture: Capture,
) -> Result<EvolutionTrace> {
    let h0 = arena.embed(p)?;
    engine::evolve(&h0, &arena.graph()?, &LifeRule, steps, capture)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoupReport {
    pub soups: usize,
    pub size: usize,
    pub steps: usize,
    pub seed: u64,
    pub density: f64,
    pub boundary: Boundary,
    pub states_compared: usize,
    pub mismatched_soups: Vec<usize>,
    pub exact_fraction: f64,
}

/// Runs seeded random soups through the engine and the naive simulator and
/// compares every intermediate generation.
pub fn soup_check(
    soups: usize,
    size: usize,
    steps: usize,
    density: f64,
    boundary: Boundary,
    seed: u64,
) -> Result<SoupReport> {
    if soups == 0 || size == 0 {
        return Err(Error::validation("need at least one soup of positive size"));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::validation(format!("density must lie in [0, 1], got {density}")));
    }
    if boundary == Boundary::Toroidal && size < 3 {
        return Err(Error::validation("toroidal soups must be at least 3x3"));
    }
    let arena = Arena::new(size, size, (0, 0), boundary);
    let graph = arena.graph()?;
    let outcomes: Vec<bool> = (0..soups)
        .into_par_iter()
        .map(|k| -> Result<bool> {
            let mut rng = seeding::stream_rng(seed, k as u64);
            let soup = GridPattern::random(size, size, density, &mut rng)?;
            let mut reference = arena.naive(&soup)?;
            let mut state = arena.embed(&soup)?;
            for _ in 0..steps {
                state = engine::step(&state, &graph, &LifeRule)?;
                reference = reference.step();
                let bits: Vec<u8> = state.values().iter().map(|&v| u8::from(v >= 0.5)).collect();
                if bits != reference.to_bits() {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<_>>()?;
    let mismatched_soups: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(k, _)| k)
        .collect();
    Ok(SoupReport {
        soups,
        size,
        steps,
        seed,
        density,
        boundary,
        states_compared: soups * steps,
        exact_fraction: (soups - mismatched_soups.len()) as f64 / soups as f64,
        mismatched_soups,
    })
}
