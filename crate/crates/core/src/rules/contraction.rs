use super::{NodeInput, UpdateRule};
use crate::error::{Error, Result};

/// `phi(h, N) = anchor + alpha * mean({h} ∪ N)`.
///
/// Every output coordinate is `alpha` times a convex combination of input
/// coordinates plus a constant, so the sup-metric Lipschitz constant is
/// exactly `alpha`. The unique fixed point of the whole operator is the
/// constant configuration `anchor / (1 - alpha)`.
#[derive(Debug, Clone)]
pub struct LinearContraction {
    alpha: f64,
    anchor: Vec<f64>,
}

impl LinearContraction {
    pub fn new(dim: usize, alpha: f64, anchor: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::validation(format!(
                "contraction factor must lie in (0, 1), got {alpha}"
            )));
        }
        if anchor.is_empty() || anchor.len() != dim {
            return Err(Error::validation(format!(
                "anchor has length {}, expected dimension {dim} >= 1",
                anchor.len()
            )));
        }
        if anchor.iter().any(|a| !a.is_finite()) {
            return Err(Error::validation("anchor must be finite"));
        }
        Ok(LinearContraction { alpha, anchor })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// Closed-form fixed point value per channel.
    pub fn fixed_point(&self) -> Vec<f64> {
        self.anchor.iter().map(|a| a / (1.0 - self.alpha)).collect()
    }
}

impl UpdateRule for LinearContraction {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        let count = (input.neighbors.len() + 1) as f64;
        out.copy_from_slice(input.own);
        for (_, _, state) in input.neighbors.iter() {
            for (o, s) in out.iter_mut().zip(state) {
                *o += s;
            }
        }
        for (o, a) in out.iter_mut().zip(&self.anchor) {
            *o = a + self.alpha * (*o / count);
        }
        Ok(())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(self.alpha)
    }

    fn name(&self) -> &str {
        "linear-contraction"
    }
}
