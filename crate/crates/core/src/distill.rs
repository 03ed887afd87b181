//! Toy embedding distillation: project teacher embeddings into state space,
//! evolve them with a small parameterized rule and fit the rule by
//! finite-difference gradient descent on the mean squared error.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, Capture, StateConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{NodeInput, UpdateRule};
use crate::seeding;

pub const DEFAULT_FD_EPS: f64 = 1e-5;

/// `n` token embeddings of width `d_teacher`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherEmbeddings {
    tokens: usize,
    width: usize,
    values: Vec<f64>,
}

impl TeacherEmbeddings {
    pub fn new(tokens: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if tokens == 0 || width == 0 || values.len() != tokens * width {
            return Err(Error::validation(format!(
                "teacher embeddings need {tokens}x{width} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("teacher embeddings must be finite"));
        }
        Ok(TeacherEmbeddings {
            tokens,
            width,
            values,
        })
    }

    /// Entries uniform in `[-1, 1]`.
    pub fn random(tokens: usize, width: usize, seed: u64) -> Result<Self> {
        let mut rng = seeding::rng(seed);
        let values = (0..tokens * width).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self::new(tokens, width, values)
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.width..(t + 1) * self.width]
    }
}

/// `d_teacher x d` matrix, row-major; a token row `e` maps to `e W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ProjectionMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::validation(format!(
                "projection needs {rows}x{cols} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("projection must be finite"));
        }
        Ok(ProjectionMap { rows, cols, values })
    }

    pub fn identity(d: usize) -> Self {
        let mut values = vec![0.0; d * d];
        for k in 0..d {
            values[k * d + k] = 1.0;
        }
        ProjectionMap {
            rows: d,
            cols: d,
            values,
        }
    }

    /// Entries uniform in `[-1, 1] / sqrt(d_teacher)`.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        let mut rng = seeding::rng(seed);
        let scale = 1.0 / (rows as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| scale * rng.gen_range(-1.0..=1.0))
            .collect();
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Row-wise `E W`, one node per token.
pub fn project(e: &TeacherEmbeddings, w: &ProjectionMap) -> Result<StateConfig> {
    if e.width != w.rows {
        return Err(Error::validation(format!(
            "embedding width {} does not match projection input {}",
            e.width, w.rows
        )));
    }
    let mut out = vec![0.0; e.tokens * w.cols];
    for t in 0..e.tokens {
        for (k, &x) in e.row(t).iter().enumerate() {
            for c in 0..w.cols {
                out[t * w.cols + c] += x * w.values[k * w.cols + c];
            }
        }
    }
    StateConfig::new(e.tokens, w.cols, out)
}

/// Mean squared entry difference.
pub fn distill_loss(h: &StateConfig, target: &StateConfig) -> Result<f64> {
    if (h.nodes(), h.dim()) != (target.nodes(), target.dim()) {
        return Err(Error::validation(format!(
            "loss needs matching shapes, got {}x{} and {}x{}",
            h.nodes(),
            h.dim(),
            target.nodes(),
            target.dim()
        )));
    }
    let sum: f64 = h
        .values()
        .iter()
        .zip(target.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / h.values().len() as f64)
}

/// `h' = (1 - beta) (A h + b) + beta * mean(neighbors)`; with no neighbors
/// the mean term is zero. Parameters are `A` (row-major), `b`, then `beta`.
#[derive(Debug, Clone)]
pub struct BlendRule {
    dim: usize,
    params: Vec<f64>,
}

impl BlendRule {
    pub fn param_count(dim: usize) -> usize {
        dim * dim + dim + 1
    }

    pub fn new(dim: usize, params: Vec<f64>) -> Result<Self> {
        if dim == 0 || params.len() != Self::param_count(dim) {
            return Err(Error::validation(format!(
                "blend rule of dimension {dim} needs {} parameters, got {}",
                Self::param_count(dim),
                params.len()
            )));
        }
        Ok(BlendRule { dim, params })
    }

    /// `A` uniform in `[-scale, scale]`, `b = 0`, `beta = 0.5`.
    pub fn random_params(dim: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = seeding::rng(seed);
        let mut p: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-scale..=scale)).collect();
        p.extend(std::iter::repeat_n(0.0, dim));
        p.push(0.5);
        p
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

impl UpdateRule for BlendRule {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, input: &NodeInput<'_>, out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        let (a, rest) = self.params.split_at(d * d);
        let (b, beta) = (&rest[..d], rest[d]);
        let mut mean = vec![0.0; d];
        for (_, _, state) in input.neighbors.iter() {
            for (m, s) in mean.iter_mut().zip(state) {
                *m += s;
            }
        }
        if !input.neighbors.is_empty() {
            let count = input.neighbors.len() as f64;
            mean.iter_mut().for_each(|m| *m /= count);
        }
        for r in 0..d {
            let mut affine = b[r];
            for c in 0..d {
                affine += a[r * d + c] * input.own[c];
            }
            out[r] = (1.0 - beta) * affine + beta * mean[r];
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "blend-affine"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistillConfig {
    pub k: usize,
    pub iters: usize,
    pub step_size: f64,
    pub fd_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossPoint {
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistillRun {
    pub curve: Vec<LossPoint>,
    pub params: Vec<f64>,
}

impl DistillRun {
    pub fn initial_loss(&self) -> f64 {
        self.curve[0].loss
    }

    pub fn final_loss(&self) -> f64 {
        self.curve.last().expect("curve is never empty").loss
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,loss,grad_norm\n");
        for p in &self.curve {
            let _ = writeln!(out, "{},{:.12e},{:.12e}", p.iteration, p.loss, p.grad_norm);
        }
        out
    }
}

/// Loss of `K` steps from `target` itself on `graph`.
pub fn objective(params: &[f64], target: &StateConfig, graph: &Graph, k: usize) -> Result<f64> {
    let rule = BlendRule::new(target.dim(), params.to_vec())?;
    let trace = engine::evolve(target, graph, &rule, k, Capture::Endpoints)?;
    distill_loss(trace.last(), target)
}

/// Central finite-difference gradient.
pub fn fd_gradient<F>(f: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..params.len())
        .into_par_iter()
        .map(|k| {
            let mut p = params.to_vec();
            p[k] = params[k] + eps;
            let up = f(&p)?;
            p[k] = params[k] - eps;
            let down = f(&p)?;
            Ok((up - down) / (2.0 * eps))
        })
        .collect()
}

/// Gradient descent on the blend rule's parameters. The curve holds the
/// loss before each update plus the final loss.
pub fn distill_demo(
    e_proj: &StateConfig,
    graph: &Graph,
    initial: &[f64],
    cfg: &DistillConfig,
) -> Result<DistillRun> {
    if cfg.iters == 0 {
        return Err(Error::validation("iters must be >= 1"));
    }
    if !(cfg.step_size >= 0.0 && cfg.fd_eps > 0.0) {
        return Err(Error::validation("step size must be >= 0 and fd_eps > 0"));
    }
    let f = |p: &[f64]| objective(p, e_proj, graph, cfg.k);
    let mut params = initial.to_vec();
    let mut curve = Vec::with_capacity(cfg.iters + 1);
    for iteration in 0..=cfg.iters {
        let diverged = |e: Error| match e {
            Error::Numeric { .. } => Error::Distill(format!("iteration {iteration}: {e}")),
            other => other,
        };
        let loss = f(&params).map_err(diverged)?;
        let grad = fd_gradient(f, &params, cfg.fd_eps).map_err(diverged)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !loss.is_finite() || !grad_norm.is_finite() {
            let param_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
            return Err(Error::Distill(format!(
                "loss {loss} / gradient norm {grad_norm} at iteration {iteration} (parameter norm {param_norm:e})"
            )));
        }
        curve.push(LossPoint {
            iteration,
            loss,
            grad_norm,
        });
        if iteration < cfg.iters {
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.step_size * g;
            }
        }
    }
    Ok(DistillRun { curve, params })
}

/// The seeded demo setup: 8 tokens, 16-wide teacher, 4-dimensional states
/// on a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoSetup {
    pub tokens: usize,
    pub teacher_width: usize,
    pub dim: usize,
    pub seed: u64,
    pub config: DistillConfig,
}

impl DemoSetup {
    pub fn shipped(seed: u64) -> Self {
        DemoSetup {
            tokens: 8,
            teacher_width: 16,
            dim: 4,
            seed,
            config: DistillConfig {
                k: 3,
                iters: 200,
                step_size: 0.2,
                fd_eps: DEFAULT_FD_EPS,
            },
        }
    }

    /// Projected targets, chain graph and initial parameters.
    pub fn materialize(&self) -> Result<(StateConfig, Graph, Vec<f64>)> {
        let teacher = TeacherEmbeddings::random(
            self.tokens,
            self.teacher_width,
            seeding::derive_seed(self.seed, 0),
        )?;
        let w = ProjectionMap::random(self.teacher_width, self.dim, seeding::derive_seed(self.seed, 1))?;
        let params = BlendRule::random_params(self.dim, 0.5, seeding::derive_seed(self.seed, 2));
        Ok((project(&teacher, &w)?, Graph::chain(self.tokens)?, params))
    }

    pub fn run(&self) -> Result<DistillRun> {
        let (target, graph, params) = self.materialize()?;
        distill_demo(&target, &graph, &params, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Identity;

    #[test]
    fn projection_examples() {
        let e = TeacherEmbeddings::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap();
        let h = project(&e, &ProjectionMap::identity(3)).unwrap();
        assert_eq!(h.values(), &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let zero = ProjectionMap::new(3, 2, vec![0.0; 6]).unwrap();
        assert_eq!(project(&e, &zero).unwrap(), StateConfig::zeros(2, 2));
        let e = TeacherEmbeddings::new(1, 2, vec![1.0, 2.0]).unwrap();
        let w = ProjectionMap::new(2, 2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(project(&e, &w).unwrap().values(), &[1.0, 4.0]);
        // Non-diagonal case fixes the orientation: [1, 2] W with W = [[1, 1], [0, 3]].
        let w = ProjectionMap::new(2, 2, vec![1.0, 1.0, 0.0, 3.0]).unwrap();
        assert_eq!(project(&e, &w).unwrap().values(), &[1.0, 7.0]);
        assert!(project(&e, &ProjectionMap::identity(3)).is_err());
    }

    #[test]
    fn loss_examples() {
        let a = StateConfig::new(1, 1, vec![3.0]).unwrap();
        let b = StateConfig::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(distill_loss(&a, &b).unwrap(), 4.0);
        assert_eq!(distill_loss(&a, &a).unwrap(), 0.0);
        assert!(distill_loss(&a, &StateConfig::zeros(2, 1)).is_err());

        let target = project(&TeacherEmbeddings::random(5, 3, 1).unwrap(), &ProjectionMap::random(3, 2, 2).unwrap())
            .unwrap();
        let g = Graph::chain(5).unwrap();
        let trace = engine::evolve(&target, &g, &Identity::new(2).unwrap(), 4, Capture::Endpoints).unwrap();
        assert_eq!(distill_loss(trace.last(), &target).unwrap(), 0.0);
    }

    #[test]
    fn blend_rule_arithmetic() {
        // d = 1: h' = (1 - beta)(a h + b) + beta mean
        let rule = BlendRule::new(1, vec![2.0, 1.0, 0.25]).unwrap();
        let g = Graph::chain(3).unwrap();
        let h = StateConfig::new(3, 1, vec![1.0, 2.0, 4.0]).unwrap();
        let out = engine::step(&h, &g, &rule).unwrap();
        assert_eq!(out.values(), &[0.75 * 3.0 + 0.25 * 2.0, 0.75 * 5.0 + 0.25 * 2.5, 0.75 * 9.0 + 0.25 * 2.0]);
        assert!(BlendRule::new(2, vec![0.0; 3]).is_err());
        assert!(BlendRule::param_count(4) <= 64);
    }

    #[test]
    fn fixed_point_teacher_is_stationary() {
        // A = 0, b = v, beta = 0 maps everything to v; a constant-v target is
        // then already optimal.
        let v = [0.3, -0.7];
        let target = StateConfig::new(4, 2, [v, v, v, v].concat()).unwrap();
        let params = vec![0.0, 0.0, 0.0, 0.0, v[0], v[1], 0.0];
        let g = Graph::chain(4).unwrap();
        let cfg = DistillConfig { k: 2, iters: 10, step_size: 0.1, fd_eps: DEFAULT_FD_EPS };
        let run = distill_demo(&target, &g, &params, &cfg).unwrap();
        for p in &run.curve {
            assert!(p.loss.abs() < 1e-20);
            assert!(p.grad_norm < 1e-9);
        }
    }

    #[test]
    fn zero_step_keeps_loss() {
        let mut setup = DemoSetup::shipped(3);
        setup.config.step_size = 0.0;
        setup.config.iters = 5;
        let run = setup.run().unwrap();
        assert!(run.curve.iter().all(|p| p.loss == run.initial_loss()));
    }

    #[test]
    fn fd_gradient_is_self_consistent() {
        let setup = DemoSetup::shipped(9);
        let (target, g, params) = setup.materialize().unwrap();
        let f = |p: &[f64]| objective(p, &target, &g, 3);
        let g1 = fd_gradient(f, &params, 1e-5).unwrap();
        let g2 = fd_gradient(f, &params, 2e-5).unwrap();
        let diff = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g1.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff <= 1e-3 * norm, "{diff} vs {norm}");
    }

    #[test]
    fn shipped_demo_halves_loss_monotonically() {
        let run = DemoSetup::shipped(1).run().unwrap();
        assert_eq!(run.curve.len(), 201);
        assert!(run.final_loss() <= 0.5 * run.initial_loss());
        assert!(run.curve.windows(2).all(|w| w[1].loss <= w[0].loss));
        assert!(run.to_csv().starts_with("iteration,loss,grad_norm\n0,"));
    }

    #[test]
    fn divergence_is_reported() {
        let mut setup = DemoSetup::shipped(1);
        setup.config.step_size = 2.0;
        assert!(matches!(setup.run(), Err(Error::Distill(_))));
    }

    #[test]
    fn rejects_bad_config() {
        let setup = DemoSetup::shipped(1);
        let (target, g, params) = setup.materialize().unwrap();
        let mut cfg = setup.config;
        cfg.iters = 0;
        assert!(distill_demo(&target, &g, &params, &cfg).is_err());
    }
}
