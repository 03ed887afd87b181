use super::{NodeInput, UpdateRule};
use crate::error::{Error, Result};

/// `phi(h, N) = h`.
#[derive(Debug, Clone)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("identity rule needs dimension >= 1"));
        }
        Ok(Identity { dim })
    }
}

impl UpdateRule for Identity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(input.own);
        Ok(())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn name(&self) -> &str {
        "identity"
    }
}
