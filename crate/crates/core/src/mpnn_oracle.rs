//! Independent reference for one MPNN layer, an exact equivalence check
//! against the engine, and perturbation-based influence matrices.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, Capture, StateConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{AffineBlock, MpnnFunctions, MpnnRule, UpdateRule};

/// Any movement above this counts as influence.
pub const INFLUENCE_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_EPS: f64 = 1e-3;

#[allow(clippy::needless_range_loop)]
fn affine(block: &AffineBlock, x: &[f64], y: &[f64], r: usize) -> f64 {
    let d = block.dim();
    let mut left = 0.0;
    for c in 0..d {
        left += block.left()[r * d + c] * x[c];
    }
    let mut right = 0.0;
    for c in 0..d {
        right += block.right()[r * d + c] * y[c];
    }
    block.activation().apply(left + right + block.bias()[r])
}

/// `h_i' = U(h_i, sum_j M(h_i, h_j))`, written as a plain loop over the
/// edge list. Neighbors are summed in ascending index order.
pub fn reference_mpnn_step(h: &StateConfig, g: &Graph, fns: &MpnnFunctions) -> Result<StateConfig> {
    let (n, d) = (h.nodes(), h.dim());
    if n != g.node_count() || d != fns.dim() {
        return Err(Error::validation(format!(
            "state is {n}x{d}, graph has {} nodes and functions have dimension {}",
            g.node_count(),
            fns.dim()
        )));
    }
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        let mut sources: Vec<usize> = g
            .edges()
            .iter()
            .filter(|e| e.target == i)
            .map(|e| e.source)
            .collect();
        sources.sort_unstable();
        let own = h.node(i);
        let mut aggregate = vec![0.0; d];
        for &j in &sources {
            for (r, slot) in aggregate.iter_mut().enumerate() {
                *slot += affine(&fns.message, own, h.node(j), r);
            }
        }
        for r in 0..d {
            out[i * d + r] = affine(&fns.update, own, &aggregate, r);
        }
    }
    StateConfig::new(n, d, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equal: bool,
    pub max_abs_deviation: f64,
    pub steps: usize,
}

/// Runs `steps` engine steps with [`MpnnRule`] and `steps` reference steps
/// from the same start. Equality means bit-identical states.
pub fn check_equivalence(
    g: &Graph,
    fns: &MpnnFunctions,
    h0: &StateConfig,
    steps: usize,
) -> Result<EquivalenceReport> {
    check_equivalence_against(g, fns, h0, steps, reference_mpnn_step)
}

/// [`check_equivalence`] with a caller-supplied reference step.
pub fn check_equivalence_against<F>(
    g: &Graph,
    fns: &MpnnFunctions,
    h0: &StateConfig,
    steps: usize,
    reference: F,
) -> Result<EquivalenceReport>
where
    F: Fn(&StateConfig, &Graph, &MpnnFunctions) -> Result<StateConfig>,
{
    if steps == 0 {
        return Err(Error::validation("equivalence check needs at least one step"));
    }
    let rule = MpnnRule::new(fns.clone());
    let engine_out = engine::evolve(h0, g, &rule, steps, Capture::Endpoints)?.into_last();
    let mut expected = h0.clone();
    for _ in 0..steps {
        expected = reference(&expected, g, fns)?;
    }
    let equal = engine_out
        .values()
        .iter()
        .zip(expected.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok(EquivalenceReport {
        equal,
        max_abs_deviation: engine_out.distance(&expected),
        steps,
    })
}

/// Entry `(i, j)` is set when perturbing node `j` at time 0 moves node `i`
/// at time `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl InfluenceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    pub fn all(&self) -> bool {
        self.cells.iter().all(|&c| c)
    }

    /// Rows are influenced nodes, columns are perturbed sources.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for row in self.cells.chunks(self.n) {
            out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

pub fn influence_matrix(
    rule: &dyn UpdateRule,
    g: &Graph,
    h0: &StateConfig,
    steps: usize,
    eps: f64,
) -> Result<InfluenceMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::validation(format!("eps must be positive, got {eps}")));
    }
    let n = g.node_count();
    let base = engine::evolve(h0, g, rule, steps, Capture::Endpoints)?.into_last();
    let columns: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|j| -> Result<Vec<bool>> {
            let mut start = h0.clone();
            start.node_mut(j)[0] += eps;
            let moved = engine::evolve(&start, g, rule, steps, Capture::Endpoints)?.into_last();
            Ok((0..n)
                .map(|i| {
                    moved
                        .node(i)
                        .iter()
                        .zip(base.node(i))
                        .any(|(a, b)| (a - b).abs() > INFLUENCE_THRESHOLD)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut cells = vec![false; n * n];
    for (j, column) in columns.iter().enumerate() {
        for (i, &hit) in column.iter().enumerate() {
            cells[i * n + j] = hit;
        }
    }
    Ok(InfluenceMatrix { n, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Activation;
    use crate::seeding;
    use rand::Rng;

    fn scalar(values: &[f64]) -> StateConfig {
        StateConfig::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn path_sum_example() {
        let g = Graph::chain(3).unwrap();
        let fns = MpnnFunctions::new(AffineBlock::second(1), AffineBlock::sum(1)).unwrap();
        let out = reference_mpnn_step(&scalar(&[1.0, 2.0, 3.0]), &g, &fns).unwrap();
        assert_eq!(out, scalar(&[3.0, 6.0, 5.0]));
    }

    #[test]
    fn isolated_and_projection() {
        let fns = MpnnFunctions::new(AffineBlock::sum(2), AffineBlock::sum(2)).unwrap();
        let h = StateConfig::new(1, 2, vec![0.5, -1.0]).unwrap();
        assert_eq!(reference_mpnn_step(&h, &Graph::singleton(), &fns).unwrap(), h);

        let g = Graph::random_connected(5, 0.4, 2).unwrap();
        let fns = MpnnFunctions::new(AffineBlock::sum(2), AffineBlock::first(2)).unwrap();
        let h = StateConfig::new(5, 2, (0..10).map(f64::from).collect()).unwrap();
        assert_eq!(reference_mpnn_step(&h, &g, &fns).unwrap(), h);
    }

    #[test]
    fn shape_mismatch() {
        let fns = MpnnFunctions::sum_rule(2);
        assert!(reference_mpnn_step(&scalar(&[1.0]), &Graph::singleton(), &fns).is_err());
        let g = Graph::chain(2).unwrap();
        assert!(reference_mpnn_step(&StateConfig::zeros(1, 2), &g, &fns).is_err());
    }

    #[test]
    fn engine_matches_reference_bitwise() {
        for seed in 0..50u64 {
            let mut rng = seeding::stream_rng(11, seed);
            let n = rng.gen_range(1..=12);
            let d = rng.gen_range(1..=4);
            let g = Graph::random_connected(n, 0.25, seed).unwrap();
            let fns = MpnnFunctions::random(d, 0.8, Activation::Tanh, &mut rng);
            let h0 = StateConfig::new(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let t = g.diameter().finite().unwrap().max(1);
            let r = check_equivalence(&g, &fns, &h0, t).unwrap();
            assert!(r.equal, "seed {seed}");
            assert_eq!(r.max_abs_deviation, 0.0);
        }
        let fns = MpnnFunctions::random(3, 1.0, Activation::Relu, &mut seeding::rng(1));
        let h0 = StateConfig::new(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        assert!(check_equivalence(&Graph::singleton(), &fns, &h0, 5).unwrap().equal);
        assert!(check_equivalence(&Graph::singleton(), &fns, &h0, 0).is_err());
    }

    /// A reference that sums neighbors in descending order.
    fn reversed_reference(h: &StateConfig, g: &Graph, fns: &MpnnFunctions) -> Result<StateConfig> {
        let d = h.dim();
        let mut out = vec![0.0; h.nodes() * d];
        for i in 0..h.nodes() {
            let view = g.in_neighbors(i);
            let mut aggregate = vec![0.0; d];
            let mut message = vec![0.0; d];
            for &j in view.sources.iter().rev() {
                fns.message.eval(h.node(i), h.node(j), &mut message);
                for (a, m) in aggregate.iter_mut().zip(&message) {
                    *a += m;
                }
            }
            fns.update.eval(h.node(i), &aggregate, &mut out[i * d..(i + 1) * d]);
        }
        StateConfig::new(h.nodes(), d, out)
    }

    #[test]
    fn guard_detects_summation_order() {
        let g = Graph::new(4, [(1, 0), (2, 0), (3, 0)], true).unwrap();
        let fns = MpnnFunctions::new(AffineBlock::second(1), AffineBlock::sum(1)).unwrap();
        let h0 = scalar(&[0.0, 1.0, 1e16, -1e16]);
        let r = check_equivalence_against(&g, &fns, &h0, 1, reversed_reference).unwrap();
        assert!(!r.equal);
        assert_eq!(r.max_abs_deviation, 1.0);
        assert!(check_equivalence(&g, &fns, &h0, 1).unwrap().equal);
    }

    #[test]
    fn influence_examples() {
        let rule = MpnnRule::new(MpnnFunctions::sum_rule(1));
        let g = Graph::chain(3).unwrap();
        let h0 = scalar(&[0.1, 0.2, 0.3]);
        let m = influence_matrix(&rule, &g, &h0, 1, DEFAULT_EPS).unwrap();
        assert_eq!(m.to_text(), "110\n111\n011\n");
        let m = influence_matrix(&rule, &g, &h0, 0, DEFAULT_EPS).unwrap();
        assert_eq!(m.to_text(), "100\n010\n001\n");
        let m = influence_matrix(&rule, &g, &h0, 2, DEFAULT_EPS).unwrap();
        assert!(m.all());
        assert!(influence_matrix(&rule, &g, &h0, 2, 0.0).is_err());
    }

    #[test]
    fn sum_rule_reaches_everything_at_diameter() {
        for seed in 0..10 {
            let g = Graph::random_connected(9, 0.1, seed).unwrap();
            let t = g.diameter().finite().unwrap();
            let rule = MpnnRule::new(MpnnFunctions::sum_rule(2));
            let h0 = StateConfig::zeros(9, 2);
            let m = influence_matrix(&rule, &g, &h0, t, DEFAULT_EPS).unwrap();
            assert!(m.all(), "seed {seed}");
            if t > 1 {
                let m = influence_matrix(&rule, &g, &h0, t - 1, DEFAULT_EPS).unwrap();
                assert!(!m.all(), "seed {seed}");
            }
        }
    }
}
