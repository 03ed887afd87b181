use serde::Serialize;

use super::{NodeInput, UpdateRule};
use crate::error::{Error, Result};
use crate::seeding::{splitmix64, unit_symmetric};

pub const COLOR_CHANNELS: usize = 3;

const CLAMP: f64 = 10.0;
const POSITION_BIAS_SCALE: f64 = 0.01;
const POSITION_SALT: u64 = 0x636f_6c6f_7269_6e67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColoringRuleConfig {
    pub use_edge_weights: bool,
    pub use_position_encoding: bool,
    pub bidirectional: bool,
    pub step_size: f64,
}

impl ColoringRuleConfig {
    pub fn full(step_size: f64) -> Self {
        ColoringRuleConfig {
            use_edge_weights: true,
            use_position_encoding: true,
            bidirectional: true,
            step_size,
        }
    }

    pub fn minimal(step_size: f64) -> Self {
        ColoringRuleConfig {
            use_edge_weights: false,
            use_position_encoding: false,
            bidirectional: false,
            step_size,
        }
    }
}

/// Fixed per-node bias derived from the node index; each entry has
/// magnitude at most 0.01.
pub fn position_bias(node: usize) -> [f64; COLOR_CHANNELS] {
    let mut out = [0.0; COLOR_CHANNELS];
    let mut state = (node as u64) ^ POSITION_SALT;
    for slot in &mut out {
        state = splitmix64(state);
        *slot = POSITION_BIAS_SCALE * unit_symmetric(state);
    }
    out
}

fn softmax(h: &[f64]) -> [f64; COLOR_CHANNELS] {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e = [0.0; COLOR_CHANNELS];
    let mut total = 0.0;
    for (slot, v) in e.iter_mut().zip(h) {
        *slot = (v - max).exp();
        total += *slot;
    }
    for slot in &mut e {
        *slot /= total;
    }
    e
}

/// Pressure descent on color preference scores.
///
/// State is three scores per node. Each (counted) neighbor pushes down the
/// colors it prefers: `p = sum_j w_j softmax(h_j)`, `h' = h - eta p (+ bias)`,
/// clamped to `[-10, 10]`. With `bidirectional` off a node only listens to
/// neighbors with a smaller index.
#[derive(Debug, Clone)]
pub struct ColoringRule {
    cfg: ColoringRuleConfig,
}

impl ColoringRule {
    pub fn new(cfg: ColoringRuleConfig) -> Result<Self> {
        if !(cfg.step_size > 0.0 && cfg.step_size <= 1.0) {
            return Err(Error::validation(format!(
                "coloring step size must lie in (0, 1], got {}",
                cfg.step_size
            )));
        }
        Ok(ColoringRule { cfg })
    }

    pub fn config(&self) -> &ColoringRuleConfig {
        &self.cfg
    }
}

impl UpdateRule for ColoringRule {
    fn dim(&self) -> usize {
        COLOR_CHANNELS
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        let mut pressure = [0.0; COLOR_CHANNELS];
        for (j, w, state) in input.neighbors.iter() {
            if !self.cfg.bidirectional && j >= input.index {
                continue;
            }
            let w = if self.cfg.use_edge_weights { w } else { 1.0 };
            for (p, s) in pressure.iter_mut().zip(softmax(state)) {
                *p += w * s;
            }
        }
        let bias = if self.cfg.use_position_encoding {
            position_bias(input.index)
        } else {
            [0.0; COLOR_CHANNELS]
        };
        for c in 0..COLOR_CHANNELS {
            let next = input.own[c] - self.cfg.step_size * pressure[c] + bias[c];
            out[c] = next.clamp(-CLAMP, CLAMP);
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "coloring-pressure"
    }
}
