//! Local update rules.
//!
//! A rule sees one node at a time: its own state, the states of its
//! in-neighbors (ascending index) and the corresponding edge weights. It must
//! be a pure function of those inputs; the engine relies on that to update
//! nodes in any order, on any number of threads.

mod coloring;
mod contraction;
mod identity;
mod life;
mod mpnn;

pub use coloring::{position_bias, ColoringRule, ColoringRuleConfig, COLOR_CHANNELS};
pub use contraction::LinearContraction;
pub use identity::Identity;
pub use life::LifeRule;
pub use mpnn::{Activation, AffineBlock, MpnnFunctions, MpnnRule};

use crate::error::Result;
use crate::graph::NeighborView;

/// Read-only view of the in-neighbor states of one node.
#[derive(Debug, Clone, Copy)]
pub struct NeighborStates<'a> {
    view: NeighborView<'a>,
    states: &'a [f64],
    dim: usize,
}

impl<'a> NeighborStates<'a> {
    /// `states` is the whole configuration, row-major with `dim` columns.
    pub fn new(view: NeighborView<'a>, states: &'a [f64], dim: usize) -> Self {
        NeighborStates { view, states, dim }
    }

    pub fn len(&self) -> usize {
        self.view.len()
    }

    pub fn is_empty(&self) -> bool {
        self.view.is_empty()
    }

    pub fn index(&self, k: usize) -> usize {
        self.view.sources[k]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.view.weights[k]
    }

    pub fn state(&self, k: usize) -> &'a [f64] {
        let j = self.view.sources[k];
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    /// `(source index, weight, state)` in ascending source order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, &'a [f64])> + '_ {
        (0..self.len()).map(move |k| (self.index(k), self.weight(k), self.state(k)))
    }
}

/// Everything a rule may look at when updating one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeInput<'a> {
    pub index: usize,
    pub own: &'a [f64],
    pub neighbors: NeighborStates<'a>,
}

pub trait UpdateRule: Send + Sync {
    /// State dimension `d`; `out` always has this length.
    fn dim(&self) -> usize;

    /// Writes the next state of `input.index` into `out`.
    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()>;

    /// Proven sup-metric Lipschitz constant, when the rule has one.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &str;
}

impl<R: UpdateRule + ?Sized> UpdateRule for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        (**self).apply(input, out)
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<R: UpdateRule + ?Sized> UpdateRule for Box<R> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        (**self).apply(input, out)
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::graph::Graph;

    /// Applies `rule` to node `i` of `states` on `g`.
    pub fn apply_at(rule: &dyn UpdateRule, g: &Graph, states: &[f64], i: usize) -> Vec<f64> {
        let d = rule.dim();
        let input = NodeInput {
            index: i,
            own: &states[i * d..(i + 1) * d],
            neighbors: NeighborStates::new(g.in_neighbors(i), states, d),
        };
        let mut out = vec![0.0; d];
        rule.apply(&input, &mut out).unwrap();
        out
    }
}
