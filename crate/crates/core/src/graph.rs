//! The reasoning structure: a fixed node set with (optionally weighted)
//! directed edges, stored as an in-edge CSR so that a node's update can read
//! every `j` with `(j -> i)` in ascending order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        Edge {
            source,
            target,
            weight,
        }
    }
}

impl From<(usize, usize, f64)> for Edge {
    fn from((source, target, weight): (usize, usize, f64)) -> Self {
        Edge::new(source, target, weight)
    }
}

impl From<(usize, usize)> for Edge {
    fn from((source, target): (usize, usize)) -> Self {
        Edge::new(source, target, 1.0)
    }
}

/// Immutable graph. Construct with [`Graph::new`] or one of the builders.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    directed: bool,
    edges: Vec<Edge>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    in_weights: Vec<f64>,
}

/// The in-neighbors of one node, ascending by source index.
#[derive(Debug, Clone, Copy)]
pub struct NeighborView<'a> {
    pub node: usize,
    pub sources: &'a [usize],
    pub weights: &'a [f64],
}

impl NeighborView<'_> {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.sources.iter().copied().zip(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Moore8,
    VonNeumann4,
    ChainHorizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dead,
    Toroidal,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dead" => Ok(Boundary::Dead),
            "toroidal" | "torus" => Ok(Boundary::Toroidal),
            other => Err(Error::validation(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Shortest-path based diameter; `Infinite` when some pair is unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diameter {
    Finite(usize),
    Infinite,
}

impl Diameter {
    pub fn finite(self) -> Option<usize> {
        match self {
            Diameter::Finite(d) => Some(d),
            Diameter::Infinite => None,
        }
    }
}

impl std::fmt::Display for Diameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diameter::Finite(d) => write!(f, "{d}"),
            Diameter::Infinite => f.write_str("inf"),
        }
    }
}

impl Graph {
    /// Validates and builds a graph. Undirected graphs get every missing
    /// reverse edge added with the same weight.
    pub fn new<E: Into<Edge>>(
        node_count: usize,
        edges: impl IntoIterator<Item = E>,
        directed: bool,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::validation("graph must have at least one node"));
        }
        let mut seen = HashSet::new();
        let mut list: Vec<Edge> = Vec::new();
        for (k, edge) in edges.into_iter().map(Into::into).enumerate() {
            let Edge {
                source,
                target,
                weight,
            } = edge;
            if source >= node_count || target >= node_count {
                return Err(Error::validation(format!(
                    "edge #{k} ({source}, {target}) has an endpoint outside [0, {node_count})"
                )));
            }
            if source == target {
                return Err(Error::validation(format!(
                    "edge #{k} ({source}, {target}) is a self-loop; own state is passed to the rule separately"
                )));
            }
            if !weight.is_finite() {
                return Err(Error::validation(format!(
                    "edge #{k} ({source}, {target}) has non-finite weight {weight}"
                )));
            }
            if !seen.insert((source, target)) {
                return Err(Error::validation(format!(
                    "duplicate edge ({source}, {target})"
                )));
            }
            list.push(edge);
        }
        if !directed {
            let weights: HashMap<(usize, usize), f64> = list
                .iter()
                .map(|e| ((e.source, e.target), e.weight))
                .collect();
            let mut extra = Vec::new();
            for e in &list {
                match weights.get(&(e.target, e.source)) {
                    Some(&w) if w != e.weight => {
                        return Err(Error::validation(format!(
                            "undirected edge ({}, {}) has asymmetric weights {} and {}",
                            e.source, e.target, e.weight, w
                        )));
                    }
                    Some(_) => {}
                    None => extra.push(Edge::new(e.target, e.source, e.weight)),
                }
            }
            list.extend(extra);
        }
        Ok(Self::from_validated(node_count, list, directed))
    }

    fn from_validated(node_count: usize, edges: Vec<Edge>, directed: bool) -> Self {
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&k| (edges[k].target, edges[k].source));
        let mut in_offsets = vec![0usize; node_count + 1];
        for e in &edges {
            in_offsets[e.target + 1] += 1;
        }
        for i in 0..node_count {
            in_offsets[i + 1] += in_offsets[i];
        }
        let in_sources = order.iter().map(|&k| edges[k].source).collect();
        let in_weights = order.iter().map(|&k| edges[k].weight).collect();
        Graph {
            node_count,
            directed,
            edges,
            in_offsets,
            in_sources,
            in_weights,
        }
    }

    /// A single node with no edges.
    pub fn singleton() -> Self {
        Self::from_validated(1, Vec::new(), true)
    }

    /// Rectangular cell grid; node index is `row * cols + col`. Wrapped
    /// offsets that land on the same cell twice (tiny toroidal grids) collapse
    /// to a single edge, and offsets that wrap onto the cell itself are dropped.
    pub fn grid(
        rows: usize,
        cols: usize,
        neighborhood: Neighborhood,
        boundary: Boundary,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let offsets: &[(isize, isize)] = match neighborhood {
            Neighborhood::Moore8 => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            Neighborhood::VonNeumann4 => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Neighborhood::ChainHorizontal => &[(0, -1), (0, 1)],
        };
        let (r_max, c_max) = (rows as isize, cols as isize);
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for r in 0..r_max {
            for c in 0..c_max {
                let target = (r * c_max + c) as usize;
                for &(dr, dc) in offsets {
                    let (mut nr, mut nc) = (r + dr, c + dc);
                    match boundary {
                        Boundary::Dead => {
                            if nr < 0 || nr >= r_max || nc < 0 || nc >= c_max {
                                continue;
                            }
                        }
                        Boundary::Toroidal => {
                            nr = nr.rem_euclid(r_max);
                            nc = nc.rem_euclid(c_max);
                        }
                    }
                    let source = (nr * c_max + nc) as usize;
                    if source != target && seen.insert((source, target)) {
                        edges.push(Edge::new(source, target, 1.0));
                    }
                }
            }
        }
        // Every offset set above is symmetric, so the edge set is already
        // closed under reversal.
        Ok(Self::from_validated(rows * cols, edges, false))
    }

    /// Bidirectional path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::grid(1, n, Neighborhood::ChainHorizontal, Boundary::Dead)
    }

    /// Seeded connected undirected graph: a random spanning tree (each node
    /// `k > 0` attaches to a uniform earlier node under a random relabeling)
    /// plus every other pair independently with probability `extra`.
    pub fn random_connected(n: usize, extra: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("graph must have at least one node"));
        }
        if !(0.0..=1.0).contains(&extra) {
            return Err(Error::validation(format!(
                "edge probability must lie in [0, 1], got {extra}"
            )));
        }
        let mut rng = crate::seeding::rng(seed);
        let mut label: Vec<usize> = (0..n).collect();
        label.shuffle(&mut rng);
        let mut pairs = HashSet::new();
        for k in 1..n {
            let parent = rng.gen_range(0..k);
            let (a, b) = (label[k], label[parent]);
            pairs.insert((a.min(b), a.max(b)));
        }
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(extra) {
                    pairs.insert((a, b));
                }
            }
        }
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable();
        Self::new(n, pairs, false)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Stored edges, including the reverse edges added for undirected graphs.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Each undirected edge once (`source < target`); all edges when directed.
    pub fn unique_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        let directed = self.directed;
        self.edges
            .iter()
            .filter(move |e| directed || e.source < e.target)
    }

    pub fn in_neighbors(&self, node: usize) -> NeighborView<'_> {
        let range = self.in_offsets[node]..self.in_offsets[node + 1];
        NeighborView {
            node,
            sources: &self.in_sources[range.clone()],
            weights: &self.in_weights[range],
        }
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Same node set with every edge reversed.
    pub fn reversed(&self) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.target, e.source, e.weight))
            .collect();
        Self::from_validated(self.node_count, edges, self.directed)
    }

    /// Hop distances `dist(j -> target)` for every `j`; `None` if unreachable.
    pub fn distances_to(&self, target: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        dist[target] = Some(0);
        queue.push_back(target);
        while let Some(v) = queue.pop_front() {
            let next = dist[v].unwrap() + 1;
            for &u in self.in_neighbors(v).sources {
                if dist[u].is_none() {
                    dist[u] = Some(next);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Maximum shortest directed path length over all ordered pairs.
    pub fn diameter(&self) -> Diameter {
        let mut best = 0;
        for target in 0..self.node_count {
            for d in self.distances_to(target) {
                match d {
                    Some(d) => best = best.max(d),
                    None => return Diameter::Infinite,
                }
            }
        }
        Diameter::Finite(best)
    }

    /// Serializes to the edge-list text format (`n m directed`, then one
    /// `src dst weight` line per edge; undirected edges are written once).
    pub fn to_edge_list(&self) -> String {
        let edges: Vec<&Edge> = self.unique_edges().collect();
        let mut out = format!(
            "{} {} {}\n",
            self.node_count,
            edges.len(),
            u8::from(self.directed)
        );
        for e in edges {
            let _ = writeln!(out, "{} {} {}", e.source, e.target, e.weight);
        }
        out
    }

    /// Parses the edge-list text format. `#` starts a comment; the weight
    /// column may be omitted (defaults to 1.0).
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing header 'n m directed'"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(hline, 1, "header must be 'n m directed'"));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(hline, 1, format!("bad node count '{}'", fields[0])))?;
        let m: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(hline, 1, format!("bad edge count '{}'", fields[1])))?;
        let directed = match fields[2] {
            "1" | "true" | "directed" => true,
            "0" | "false" | "undirected" => false,
            other => {
                return Err(Error::parse(
                    hline,
                    1,
                    format!("bad directed flag '{other}'"),
                ))
            }
        };
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 && f.len() != 3 {
                return Err(Error::parse(lineno, 1, "edge line must be 'src dst [weight]'"));
            }
            let src = f[0]
                .parse()
                .map_err(|_| Error::parse(lineno, 1, format!("bad source '{}'", f[0])))?;
            let dst = f[1]
                .parse()
                .map_err(|_| Error::parse(lineno, 1, format!("bad target '{}'", f[1])))?;
            let w = match f.get(2) {
                Some(w) => w
                    .parse()
                    .map_err(|_| Error::parse(lineno, 1, format!("bad weight '{w}'")))?,
                None => 1.0,
            };
            edges.push(Edge::new(src, dst, w));
        }
        if edges.len() != m {
            return Err(Error::parse(
                hline,
                1,
                format!("header declares {m} edges but {} were given", edges.len()),
            ));
        }
        Graph::new(n, edges, directed)
    }
}
