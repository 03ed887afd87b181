use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use super::{NodeInput, UpdateRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::validation(format!("unknown nonlinearity '{other}'"))),
        }
    }
}

/// `f(x, y) = act(L x + R y + b)` on `R^d x R^d -> R^d`.
///
/// Evaluation order is fixed: for each output row the products `L[r][k] x[k]`
/// are summed left to right starting from zero, `R[r][k] y[k]` likewise into
/// a second accumulator, and the row value is `(sum_L + sum_R) + b[r]`. Anything claiming to reproduce these blocks
/// bit-for-bit must follow the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    dim: usize,
    left: Vec<f64>,
    right: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl AffineBlock {
    pub fn new(
        dim: usize,
        left: Vec<f64>,
        right: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("affine block needs dimension >= 1"));
        }
        let square = dim * dim;
        if left.len() != square || right.len() != square || bias.len() != dim {
            return Err(Error::validation(format!(
                "affine block shapes inconsistent with d = {dim}: left {}, right {}, bias {}",
                left.len(),
                right.len(),
                bias.len()
            )));
        }
        Ok(AffineBlock {
            dim,
            left,
            right,
            bias,
            activation,
        })
    }

    fn eye(dim: usize) -> Vec<f64> {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        m
    }

    /// `f(x, y) = y`.
    pub fn second(dim: usize) -> Self {
        AffineBlock {
            dim,
            left: vec![0.0; dim * dim],
            right: Self::eye(dim),
            bias: vec![0.0; dim],
            activation: Activation::Identity,
        }
    }

    /// `f(x, y) = x`.
    pub fn first(dim: usize) -> Self {
        AffineBlock {
            dim,
            left: Self::eye(dim),
            right: vec![0.0; dim * dim],
            bias: vec![0.0; dim],
            activation: Activation::Identity,
        }
    }

    /// `f(x, y) = x + y`.
    pub fn sum(dim: usize) -> Self {
        AffineBlock {
            dim,
            left: Self::eye(dim),
            right: Self::eye(dim),
            bias: vec![0.0; dim],
            activation: Activation::Identity,
        }
    }

    /// Entries uniform in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        scale: f64,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-scale..=scale)).collect()
        };
        let left = draw(dim * dim);
        let right = draw(dim * dim);
        let bias = draw(dim);
        AffineBlock {
            dim,
            left,
            right,
            bias,
            activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (r, slot) in out.iter_mut().enumerate() {
            let row = r * d..(r + 1) * d;
            let mut acc = 0.0;
            for (w, v) in self.left[row.clone()].iter().zip(x) {
                acc += w * v;
            }
            let mut acc_right = 0.0;
            for (w, v) in self.right[row].iter().zip(y) {
                acc_right += w * v;
            }
            *slot = self.activation.apply(acc + acc_right + self.bias[r]);
        }
    }
}

/// Message function `M` and update function `U` of one MPNN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MpnnFunctions {
    pub message: AffineBlock,
    pub update: AffineBlock,
}

impl MpnnFunctions {
    pub fn new(message: AffineBlock, update: AffineBlock) -> Result<Self> {
        if message.dim != update.dim {
            return Err(Error::validation(format!(
                "message dimension {} differs from update dimension {}",
                message.dim, update.dim
            )));
        }
        Ok(MpnnFunctions { message, update })
    }

    pub fn dim(&self) -> usize {
        self.message.dim
    }

    /// `M(a, b) = a + b`, `U(a, b) = a + b`: every neighbor contributes with a
    /// positive coefficient, so information moves one hop per step.
    pub fn sum_rule(dim: usize) -> Self {
        MpnnFunctions {
            message: AffineBlock::sum(dim),
            update: AffineBlock::sum(dim),
        }
    }

    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        scale: f64,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let message = AffineBlock::random(dim, scale, activation, rng);
        let update = AffineBlock::random(dim, scale, activation, rng);
        MpnnFunctions { message, update }
    }

    /// Plain-text parameter file: a `dim d` header, then for `message` and
    /// `update` a tag line `<name> <nonlinearity>` followed by the left
    /// matrix (d rows), the right matrix (d rows) and the bias (one row).
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut out = format!("dim {d}\n");
        for (name, block) in [("message", &self.message), ("update", &self.update)] {
            let _ = writeln!(out, "{name} {}", block.activation.tag());
            for matrix in [&block.left, &block.right] {
                for row in matrix.chunks(d) {
                    out.push_str(&join_row(row));
                    out.push('\n');
                }
            }
            out.push_str(&join_row(&block.bias));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, 0, format!("unexpected end of file, expected {what}")))
        };
        let (line, header) = next("'dim d' header")?;
        let d: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["dim", v] => v
                .parse()
                .map_err(|_| Error::parse(line, 5, format!("bad dimension '{v}'")))?,
            _ => return Err(Error::parse(line, 1, "expected 'dim d'")),
        };
        if d == 0 {
            return Err(Error::parse(line, 5, "dimension must be >= 1"));
        }
        let mut blocks = Vec::new();
        for name in ["message", "update"] {
            let (line, tag) = next(name)?;
            let activation = match tag.split_whitespace().collect::<Vec<_>>()[..] {
                [n, act] if n == name => act
                    .parse()
                    .map_err(|e: Error| Error::parse(line, n.len() + 2, e.to_string()))?,
                _ => return Err(Error::parse(line, 1, format!("expected '{name} <nonlinearity>'"))),
            };
            let mut read_rows = |rows: usize| -> Result<Vec<f64>> {
                let mut values = Vec::with_capacity(rows * d);
                for _ in 0..rows {
                    let (line, row) = next("matrix row")?;
                    let parsed = parse_row(row, d, line)?;
                    values.extend(parsed);
                }
                Ok(values)
            };
            let left = read_rows(d)?;
            let right = read_rows(d)?;
            let bias = read_rows(1)?;
            blocks.push(AffineBlock::new(d, left, right, bias, activation)?);
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::parse(line, 1, "trailing content after update block"));
        }
        let update = blocks.pop().unwrap();
        let message = blocks.pop().unwrap();
        MpnnFunctions::new(message, update)
    }
}

fn join_row(row: &[f64]) -> String {
    row.iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_row(row: &str, d: usize, line: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = row
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(line, 1, format!("bad number '{t}'")))
        })
        .collect::<Result<_>>()?;
    if values.len() != d {
        return Err(Error::parse(
            line,
            1,
            format!("expected {d} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// One MPNN layer as a local rule:
/// `phi(h_i, N) = U(h_i, sum_j M(h_i, h_j))`, summed over in-neighbors in
/// ascending index order, left to right, starting from the zero vector.
#[derive(Debug, Clone)]
pub struct MpnnRule {
    fns: MpnnFunctions,
}

impl MpnnRule {
    pub fn new(fns: MpnnFunctions) -> Self {
        MpnnRule { fns }
    }

    pub fn functions(&self) -> &MpnnFunctions {
        &self.fns
    }
}

impl UpdateRule for MpnnRule {
    fn dim(&self) -> usize {
        self.fns.dim()
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        if input.own.len() != d || out.len() != d {
            return Err(Error::Domain(format!(
                "node {} has state dimension {}, rule expects {d}",
                input.index,
                input.own.len()
            )));
        }
        let mut aggregate = vec![0.0; d];
        let mut message = vec![0.0; d];
        for (_, _, neighbor) in input.neighbors.iter() {
            if neighbor.len() != d {
                return Err(Error::Domain(format!(
                    "neighbor state dimension {} differs from {d}",
                    neighbor.len()
                )));
            }
            self.fns.message.eval(input.own, neighbor, &mut message);
            for (a, m) in aggregate.iter_mut().zip(&message) {
                *a += m;
            }
        }
        self.fns.update.eval(input.own, &aggregate, out);
        Ok(())
    }

    fn name(&self) -> &str {
        "mpnn"
    }
}
