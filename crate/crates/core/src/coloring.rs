//! Graph 3-coloring bench: planted instances, per-instance metrics and the
//! six-row ablation grid.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, Capture, Decoder, Solution, StateConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{ColoringRule, ColoringRuleConfig, COLOR_CHANNELS};
use crate::seeding;

pub const ADAPTIVE_TOL: f64 = 1e-4;
pub const INIT_AMPLITUDE: f64 = 0.1;
pub const DEFAULT_STEP_SIZE: f64 = 0.2;
/// Learned step-budget parameters used by the adaptive rows.
pub const DEFAULT_THETA_K: f64 = -0.1;
pub const DEFAULT_K_MAX: usize = 20;
pub const CSV_HEADER: &str = "config,accuracy,violation_rate,convergence_steps";

const WEIGHT_RANGE: (f64, f64) = (0.5, 1.5);
const INIT_STREAM: u64 = 0x696e_6974;

#[derive(Debug, Clone, PartialEq)]
pub struct ColoringInstance {
    pub graph: Graph,
    pub witness: Vec<u8>,
}

impl ColoringInstance {
    pub fn new(graph: Graph, witness: Vec<u8>) -> Result<Self> {
        if graph.is_directed() {
            return Err(Error::validation("coloring instances must be undirected"));
        }
        if witness.len() != graph.node_count() || witness.iter().any(|&c| c as usize >= COLOR_CHANNELS) {
            return Err(Error::validation("witness must give a color in 0..3 for every node"));
        }
        if let Some(e) = graph.edges().iter().find(|e| witness[e.source] == witness[e.target]) {
            return Err(Error::validation(format!(
                "witness gives both ends of ({}, {}) color {}",
                e.source, e.target, witness[e.source]
            )));
        }
        Ok(ColoringInstance { graph, witness })
    }

    /// One color per line.
    pub fn witness_text(&self) -> String {
        let mut out = String::new();
        for c in &self.witness {
            let _ = writeln!(out, "{c}");
        }
        out
    }

    pub fn parse_witness(text: &str) -> Result<Vec<u8>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| {
                l.trim()
                    .parse()
                    .map_err(|_| Error::parse(k + 1, 1, format!("'{}' is not a color", l.trim())))
            })
            .collect()
    }
}

/// Planted 3-colorable graph: uniform witness colors, then
/// `floor(factor * n)` distinct bichromatic edges by rejection sampling
/// (capped at the number of bichromatic pairs), each with a weight drawn
/// from `[0.5, 1.5]`.
pub fn generate_3colorable(n: usize, extra_edge_factor: f64, seed: u64) -> Result<ColoringInstance> {
    if n < 3 {
        return Err(Error::validation(format!("need at least 3 nodes, got {n}")));
    }
    if !(extra_edge_factor >= 0.0 && extra_edge_factor.is_finite()) {
        return Err(Error::validation("edge factor must be non-negative"));
    }
    let mut rng = seeding::rng(seed);
    let witness: Vec<u8> = (0..n).map(|_| rng.gen_range(0..COLOR_CHANNELS as u8)).collect();
    let mut per_color = [0usize; COLOR_CHANNELS];
    for &c in &witness {
        per_color[c as usize] += 1;
    }
    let available = per_color[0] * per_color[1] + per_color[0] * per_color[2] + per_color[1] * per_color[2];
    let target = ((extra_edge_factor * n as f64).floor() as usize).min(available);
    let limit = 100 * n;
    let mut pairs = BTreeSet::new();
    let mut attempts = 0;
    while pairs.len() < target {
        attempts += 1;
        if attempts > limit {
            return Err(Error::Generation(format!(
                "placed {} of {target} edges after {limit} attempts",
                pairs.len()
            )));
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && witness[a] != witness[b] {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.gen_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1)))
        .collect();
    ColoringInstance::new(Graph::new(n, edges, false)?, witness)
}

/// How many steps a run may take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum KMode {
    /// Stop at tolerance, within a `learned_k(theta, k_max)` budget.
    Learned { theta: f64, k_max: usize },
    /// Exactly `K` steps, no early stop.
    Fixed { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub proper: bool,
    pub violation_rate: f64,
    pub steps: usize,
}

pub fn violation_rate(graph: &Graph, colors: &[usize]) -> f64 {
    let (mut total, mut bad) = (0usize, 0usize);
    for e in graph.unique_edges() {
        total += 1;
        if colors[e.source] == colors[e.target] {
            bad += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

pub fn random_init(n: usize, seed: u64) -> StateConfig {
    let mut rng = seeding::rng(seed);
    let values = (0..n * COLOR_CHANNELS)
        .map(|_| rng.gen_range(-INIT_AMPLITUDE..=INIT_AMPLITUDE))
        .collect();
    StateConfig::new(n, COLOR_CHANNELS, values).expect("finite")
}

pub fn evaluate_instance(
    inst: &ColoringInstance,
    cfg: &ColoringRuleConfig,
    k_mode: KMode,
    init_seed: u64,
) -> Result<Evaluation> {
    evaluate_from(inst, cfg, k_mode, &random_init(inst.graph.node_count(), init_seed))
}

/// [`evaluate_instance`] from a given initial configuration.
pub fn evaluate_from(
    inst: &ColoringInstance,
    cfg: &ColoringRuleConfig,
    k_mode: KMode,
    h0: &StateConfig,
) -> Result<Evaluation> {
    let rule = ColoringRule::new(*cfg)?;
    let (last, steps) = match k_mode {
        KMode::Learned { theta, k_max } => {
            let budget = engine::learned_k(theta, k_max)?;
            let run = engine::evolve_to_fixed_point(h0, &inst.graph, &rule, ADAPTIVE_TOL, budget)?;
            (run.state, run.steps)
        }
        KMode::Fixed { k } => {
            let trace = engine::evolve(h0, &inst.graph, &rule, k, Capture::Endpoints)?;
            (trace.into_last(), k)
        }
    };
    let Solution::Labels(colors) = engine::decode(&last, Decoder::Argmax) else {
        unreachable!("argmax decodes to labels")
    };
    let violation_rate = violation_rate(&inst.graph, &colors);
    Ok(Evaluation {
        proper: violation_rate == 0.0,
        violation_rate,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationConfig {
    pub name: String,
    pub rule: ColoringRuleConfig,
    pub k_mode: KMode,
}

/// The six rows of the ablation grid, in table order.
pub fn shipped_configs() -> Vec<AblationConfig> {
    let eta = DEFAULT_STEP_SIZE;
    let learned = KMode::Learned {
        theta: DEFAULT_THETA_K,
        k_max: DEFAULT_K_MAX,
    };
    let full = ColoringRuleConfig::full(eta);
    let row = |name: &str, rule, k_mode| AblationConfig {
        name: name.to_string(),
        rule,
        k_mode,
    };
    vec![
        row("Full Model", full, learned),
        row(
            "No Edge Weights",
            ColoringRuleConfig {
                use_edge_weights: false,
                ..full
            },
            learned,
        ),
        row(
            "No Position Encoding",
            ColoringRuleConfig {
                use_position_encoding: false,
                ..full
            },
            learned,
        ),
        row(
            "Unidirectional Only",
            ColoringRuleConfig {
                bidirectional: false,
                ..full
            },
            learned,
        ),
        row("Fixed K=10", full, KMode::Fixed { k: 10 }),
        row(
            "Minimal Configuration",
            ColoringRuleConfig::minimal(eta),
            KMode::Fixed { k: 20 },
        ),
    ]
}

pub fn config_by_name(name: &str) -> Result<AblationConfig> {
    shipped_configs()
        .into_iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::validation(format!("unknown ablation configuration '{name}'")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub config: String,
    pub accuracy: f64,
    pub violation_rate: f64,
    pub convergence_steps: f64,
    #[serde(skip)]
    pub evaluations: Vec<Evaluation>,
}

/// Seeds of instance `k` and of its initial state under base `seed`.
pub fn instance_seeds(seed: u64, k: usize) -> (u64, u64) {
    (
        seeding::derive_seed(seed, k as u64),
        seeding::derive_seed(seed ^ INIT_STREAM, k as u64),
    )
}

/// Evaluates every configuration on the same `instances` seeded instances
/// and initial states.
pub fn run_ablation(
    configs: &[AblationConfig],
    instances: usize,
    n: usize,
    factor: f64,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    if instances == 0 {
        return Err(Error::validation("need at least one instance"));
    }
    let problems: Vec<(ColoringInstance, StateConfig)> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let (graph_seed, init_seed) = instance_seeds(seed, k);
            Ok((generate_3colorable(n, factor, graph_seed)?, random_init(n, init_seed)))
        })
        .collect::<Result<_>>()?;
    configs
        .iter()
        .map(|cfg| {
            let evaluations: Vec<Evaluation> = problems
                .par_iter()
                .map(|(inst, h0)| evaluate_from(inst, &cfg.rule, cfg.k_mode, h0))
                .collect::<Result<_>>()?;
            let count = evaluations.len() as f64;
            Ok(AblationRow {
                config: cfg.name.clone(),
                accuracy: evaluations.iter().filter(|e| e.proper).count() as f64 / count,
                violation_rate: evaluations.iter().map(|e| e.violation_rate).sum::<f64>() / count,
                convergence_steps: evaluations.iter().map(|e| e.steps as f64).sum::<f64>() / count,
                evaluations,
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.2}",
            r.config, r.accuracy, r.violation_rate, r.convergence_steps
        );
    }
    out
}
