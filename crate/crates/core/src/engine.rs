//! The propagation operator: synchronous application of a local rule to every
//! node, K-step evolution, fixed-point iteration and read-out.
//!
//! Every step reads only the frozen input configuration and writes each node
//! into its own disjoint output slot, so the result does not depend on the
//! order (or the threads) in which nodes are processed.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{NeighborStates, NodeInput, UpdateRule};

/// Node updates below this many state entries run on the calling thread.
const PARALLEL_THRESHOLD: usize = 4096;

/// Per-node state vectors of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateConfig {
    nodes: usize,
    dim: usize,
    values: Vec<f64>,
}

impl StateConfig {
    pub fn new(nodes: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("state dimension must be >= 1"));
        }
        if values.len() != nodes * dim {
            return Err(Error::validation(format!(
                "expected {} values for {nodes} nodes of dimension {dim}, got {}",
                nodes * dim,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "state of node {} is not finite",
                k / dim
            )));
        }
        Ok(StateConfig { nodes, dim, values })
    }

    pub fn zeros(nodes: usize, dim: usize) -> Self {
        StateConfig {
            nodes,
            dim,
            values: vec![0.0; nodes * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::validation("rows have differing dimensions"));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Callers must keep values finite.
    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `max_i ||h_i - h'_i||_inf`.
    pub fn distance(&self, other: &StateConfig) -> f64 {
        assert_eq!(
            (self.nodes, self.dim),
            (other.nodes, other.dim),
            "distance between configurations of different shapes"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Text format: `n d` header then one line of `d` values per node,
    /// written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nodes, self.dim);
        for row in self.values.chunks(self.dim) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing 'n d' header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(hline, 1, "header must be two integers 'n d'"))?;
        let [nodes, dim] = dims[..] else {
            return Err(Error::parse(hline, 1, "header must be two integers 'n d'"));
        };
        let mut values = Vec::with_capacity(nodes * dim);
        let mut rows = 0;
        for (lineno, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(lineno, 1, "row contains a non-numeric value"))?;
            if row.len() != dim {
                return Err(Error::parse(
                    lineno,
                    1,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            values.extend(row);
            rows += 1;
        }
        if rows != nodes {
            return Err(Error::parse(
                hline,
                1,
                format!("header declares {nodes} rows, found {rows}"),
            ));
        }
        Self::new(nodes, dim, values)
    }
}

fn check_shapes(h: &StateConfig, g: &Graph, rule: &dyn UpdateRule) -> Result<()> {
    if h.nodes != g.node_count() {
        return Err(Error::validation(format!(
            "configuration has {} nodes, graph has {}",
            h.nodes,
            g.node_count()
        )));
    }
    if h.dim != rule.dim() {
        return Err(Error::validation(format!(
            "configuration dimension {} differs from rule '{}' dimension {}",
            h.dim,
            rule.name(),
            rule.dim()
        )));
    }
    Ok(())
}

fn update_node(
    h: &StateConfig,
    g: &Graph,
    rule: &dyn UpdateRule,
    i: usize,
    out: &mut [f64],
) -> Result<()> {
    let input = NodeInput {
        index: i,
        own: h.node(i),
        neighbors: NeighborStates::new(g.in_neighbors(i), &h.values, h.dim),
    };
    rule.apply(&input, out)?;
    if let Some(v) = out.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            node: i,
            message: format!("rule '{}' produced {v}", rule.name()),
        });
    }
    Ok(())
}

/// One synchronous application of `rule` to every node of `h`.
pub fn step(h: &StateConfig, g: &Graph, rule: &dyn UpdateRule) -> Result<StateConfig> {
    check_shapes(h, g, rule)?;
    let mut next = StateConfig::zeros(h.nodes, h.dim);
    let chunks = next.values.chunks_mut(h.dim).enumerate();
    if h.values.len() >= PARALLEL_THRESHOLD {
        let results: Vec<Result<()>> = next
            .values
            .par_chunks_mut(h.dim)
            .enumerate()
            .map(|(i, out)| update_node(h, g, rule, i, out))
            .collect();
        // Report the lowest failing node regardless of scheduling.
        results.into_iter().collect::<Result<()>>()?;
    } else {
        for (i, out) in chunks {
            update_node(h, g, rule, i, out)?;
        }
    }
    Ok(next)
}

/// Like [`step`] but visits nodes in the given order on the calling thread.
/// `order` must be a permutation of `0..n`.
pub fn step_in_order(
    h: &StateConfig,
    g: &Graph,
    rule: &dyn UpdateRule,
    order: &[usize],
) -> Result<StateConfig> {
    check_shapes(h, g, rule)?;
    let mut seen = vec![false; h.nodes];
    for &i in order {
        if i >= h.nodes || std::mem::replace(&mut seen[i], true) {
            return Err(Error::validation("schedule is not a permutation of the nodes"));
        }
    }
    if order.len() != h.nodes {
        return Err(Error::validation("schedule is not a permutation of the nodes"));
    }
    let mut next = StateConfig::zeros(h.nodes, h.dim);
    for &i in order {
        let d = h.dim;
        update_node(h, g, rule, i, &mut next.values[i * d..(i + 1) * d])?;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capture {
    /// Keep every intermediate configuration.
    All,
    /// Keep only the initial and final configurations.
    Endpoints,
}

/// Result of a K-step run. `step_distances[t]` is the sup distance between
/// the configurations at `t` and `t + 1`, recorded for every step.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub states: Vec<StateConfig>,
    pub step_distances: Vec<f64>,
    pub converged_at: Option<usize>,
    pub capture: Capture,
}

impl EvolutionTrace {
    pub fn initial(&self) -> &StateConfig {
        &self.states[0]
    }

    pub fn last(&self) -> &StateConfig {
        self.states.last().expect("trace always holds the initial state")
    }

    pub fn into_last(mut self) -> StateConfig {
        self.states.pop().expect("trace always holds the initial state")
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.step_distances.len()
    }

    /// Configuration at time `t`, when captured.
    pub fn at(&self, t: usize) -> Option<&StateConfig> {
        match self.capture {
            Capture::All => self.states.get(t),
            Capture::Endpoints if t == 0 => self.states.first(),
            Capture::Endpoints if t == self.steps() => self.states.last(),
            Capture::Endpoints => None,
        }
    }
}

/// Applies the operator `k` times.
pub fn evolve(
    h0: &StateConfig,
    g: &Graph,
    rule: &dyn UpdateRule,
    k: usize,
    capture: Capture,
) -> Result<EvolutionTrace> {
    check_shapes(h0, g, rule)?;
    let mut states = vec![h0.clone()];
    let mut step_distances = Vec::with_capacity(k);
    let mut current = h0.clone();
    for _ in 0..k {
        let next = step(&current, g, rule)?;
        step_distances.push(next.distance(&current));
        match capture {
            Capture::All => states.push(next.clone()),
            Capture::Endpoints => {}
        }
        current = next;
    }
    if capture == Capture::Endpoints && k > 0 {
        states.push(current);
    }
    Ok(EvolutionTrace {
        states,
        step_distances,
        converged_at: None,
        capture,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRun {
    pub state: StateConfig,
    pub steps: usize,
    pub converged: bool,
}

/// Iterates until one step moves the configuration by at most `tol`
/// (returning the configuration after that step) or `max_steps` is reached.
pub fn evolve_to_fixed_point(
    h0: &StateConfig,
    g: &Graph,
    rule: &dyn UpdateRule,
    tol: f64,
    max_steps: usize,
) -> Result<FixedPointRun> {
    evolve_to_fixed_point_traced(h0, g, rule, tol, max_steps, Capture::Endpoints).map(|trace| {
        FixedPointRun {
            steps: trace.steps(),
            converged: trace.converged_at.is_some(),
            state: trace.into_last(),
        }
    })
}

/// Fixed-point iteration that also returns the trace.
pub fn evolve_to_fixed_point_traced(
    h0: &StateConfig,
    g: &Graph,
    rule: &dyn UpdateRule,
    tol: f64,
    max_steps: usize,
    capture: Capture,
) -> Result<EvolutionTrace> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::validation(format!("tolerance must be positive, got {tol}")));
    }
    if max_steps == 0 {
        return Err(Error::validation("max_steps must be >= 1"));
    }
    check_shapes(h0, g, rule)?;
    let mut states = vec![h0.clone()];
    let mut step_distances = Vec::new();
    let mut current = h0.clone();
    let mut converged_at = None;
    for t in 0..max_steps {
        let next = step(&current, g, rule)?;
        let dist = next.distance(&current);
        step_distances.push(dist);
        if capture == Capture::All {
            states.push(next.clone());
        }
        current = next;
        if dist <= tol {
            converged_at = Some(t + 1);
            break;
        }
    }
    if capture == Capture::Endpoints {
        states.push(current);
    }
    Ok(EvolutionTrace {
        states,
        step_distances,
        converged_at,
        capture,
    })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Step budget `floor(sigmoid(theta) * k_max) + 1`, always in `[1, k_max]`.
pub fn learned_k(theta: f64, k_max: usize) -> Result<usize> {
    if !theta.is_finite() {
        return Err(Error::validation(format!("theta_k must be finite, got {theta}")));
    }
    if k_max == 0 {
        return Err(Error::validation("k_max must be >= 1"));
    }
    let scaled = (logistic(theta) * k_max as f64).floor() as usize;
    // sigmoid rounds to exactly 1.0 for large theta in floating point.
    Ok(scaled.min(k_max - 1) + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoder {
    /// Per-node index of the largest channel, lowest index on ties.
    Argmax,
    /// Per-node `1` when channel 0 is at least 0.5.
    Threshold,
    /// The final configuration itself.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Solution {
    Labels(Vec<usize>),
    Cells(Vec<u8>),
    Raw(Vec<Vec<f64>>),
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

pub fn decode(h: &StateConfig, decoder: Decoder) -> Solution {
    match decoder {
        Decoder::Argmax => Solution::Labels(h.values.chunks(h.dim).map(argmax).collect()),
        Decoder::Threshold => {
            Solution::Cells(h.values.chunks(h.dim).map(|r| u8::from(r[0] >= 0.5)).collect())
        }
        Decoder::Raw => Solution::Raw(h.values.chunks(h.dim).map(<[f64]>::to_vec).collect()),
    }
}
