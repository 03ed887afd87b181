use super::{NodeInput, UpdateRule};
use crate::error::{Error, Result};

const BINARY_TOLERANCE: f64 = 1e-6;

/// Conway's B3/S23 rule on 0.0/1.0 cell states.
#[derive(Debug, Clone, Copy, Default)]
pub struct LifeRule;

fn as_bit(value: f64, what: impl FnOnce() -> String) -> Result<u32> {
    if (value - 0.0).abs() <= BINARY_TOLERANCE {
        Ok(0)
    } else if (value - 1.0).abs() <= BINARY_TOLERANCE {
        Ok(1)
    } else {
        Err(Error::Domain(format!(
            "{} has value {value}, expected 0 or 1",
            what()
        )))
    }
}

impl UpdateRule for LifeRule {
    fn dim(&self) -> usize {
        1
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        let own = as_bit(input.own[0], || format!("cell {}", input.index))?;
        let mut live = 0;
        for (j, _, state) in input.neighbors.iter() {
            live += as_bit(state[0], || {
                format!("neighbor {j} of cell {}", input.index)
            })?;
        }
        let alive = matches!((own, live), (1, 2) | (_, 3));
        out[0] = if alive { 1.0 } else { 0.0 };
        Ok(())
    }

    fn name(&self) -> &str {
        "life-b3s23"
    }
}
