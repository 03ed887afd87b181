//! Empirical contraction diagnostics: a sampled Lipschitz estimate for one
//! operator step, fixed-point uniqueness across random starts, and geometric
//! decay fitting on recorded trajectories.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, Capture, EvolutionTrace, StateConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::UpdateRule;
use crate::seeding;

/// Input pairs closer than this are skipped by the estimator.
pub const DEGENERATE_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub estimated_c: f64,
    /// Pairs that contributed a ratio.
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    /// Input distance of the pair that attained `estimated_c`.
    pub max_ratio_pair_distance: f64,
}

fn random_state<R: Rng>(rng: &mut R, n: usize, d: usize, amplitude: f64) -> StateConfig {
    let values = (0..n * d)
        .map(|_| rng.gen_range(-amplitude..=amplitude))
        .collect();
    StateConfig::new(n, d, values).expect("sampled values are finite")
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if amplitude > 0.0 && amplitude.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "amplitude must be positive and finite, got {amplitude}"
        )))
    }
}

/// Largest observed `d(*H, *H') / d(H, H')` over `trials` seeded random
/// pairs drawn uniformly from `[-amplitude, amplitude]`.
pub fn estimate_contraction(
    rule: &dyn UpdateRule,
    g: &Graph,
    trials: usize,
    amplitude: f64,
    seed: u64,
) -> Result<ContractionReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be >= 1"));
    }
    check_amplitude(amplitude)?;
    let (n, d) = (g.node_count(), rule.dim());
    let ratios: Vec<Option<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Option<(f64, f64)>> {
            let mut rng = seeding::stream_rng(seed, trial as u64);
            let a = random_state(&mut rng, n, d, amplitude);
            let b = random_state(&mut rng, n, d, amplitude);
            let din = a.distance(&b);
            if din < DEGENERATE_DISTANCE {
                return Ok(None);
            }
            let dout = engine::step(&a, g, rule)?.distance(&engine::step(&b, g, rule)?);
            Ok(Some((dout / din, din)))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, f64)> = None;
    let mut samples = 0;
    for (ratio, din) in ratios.into_iter().flatten() {
        samples += 1;
        if best.is_none_or(|(r, _)| ratio > r) {
            best = Some((ratio, din));
        }
    }
    let (estimated_c, max_ratio_pair_distance) = best.ok_or_else(|| {
        Error::Estimation(format!("all {trials} sampled pairs were degenerate"))
    })?;
    Ok(ContractionReport {
        estimated_c,
        samples,
        trials,
        seed,
        max_ratio_pair_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub unique: bool,
    pub max_pairwise_distance: f64,
    pub mean_steps: f64,
    pub steps: Vec<usize>,
    pub converged: Vec<bool>,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub results: Vec<StateConfig>,
}

/// Runs fixed-point iteration from `n_inits` seeded random starts and checks
/// that every result lies within `10 * tol` of every other. Non-convergence
/// is reported, not raised.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_uniqueness(
    rule: &dyn UpdateRule,
    g: &Graph,
    n_inits: usize,
    amplitude: f64,
    tol: f64,
    max_steps: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    if n_inits < 2 {
        return Err(Error::validation("need at least two initializations"));
    }
    check_amplitude(amplitude)?;
    let (n, d) = (g.node_count(), rule.dim());
    let runs: Vec<engine::FixedPointRun> = (0..n_inits)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeding::stream_rng(seed, k as u64);
            let h0 = random_state(&mut rng, n, d, amplitude);
            engine::evolve_to_fixed_point(&h0, g, rule, tol, max_steps)
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        if !run.converged {
            diagnostics.push(format!(
                "initialization {k} did not converge within {max_steps} steps"
            ));
        }
    }
    let mut max_pairwise_distance: f64 = 0.0;
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            max_pairwise_distance = max_pairwise_distance.max(runs[a].state.distance(&runs[b].state));
        }
    }
    if max_pairwise_distance > 10.0 * tol {
        diagnostics.push(format!(
            "results differ by up to {max_pairwise_distance:e} (limit {:e})",
            10.0 * tol
        ));
    }
    let steps: Vec<usize> = runs.iter().map(|r| r.steps).collect();
    let converged: Vec<bool> = runs.iter().map(|r| r.converged).collect();
    Ok(UniquenessReport {
        unique: diagnostics.is_empty(),
        max_pairwise_distance,
        mean_steps: steps.iter().sum::<usize>() as f64 / steps.len() as f64,
        steps,
        converged,
        diagnostics,
        results: runs.into_iter().map(|r| r.state).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub ratios: Vec<f64>,
    pub rate: f64,
    pub residual: f64,
}

/// Fits a geometric rate to the distances of a fully captured trace from
/// `fixed_point`. Only steps where both distances exceed `10 * tol` count.
pub fn fit_decay(trace: &EvolutionTrace, fixed_point: &StateConfig, tol: f64) -> Result<DecayFit> {
    if trace.capture != Capture::All {
        return Err(Error::Fit("trace must capture every step".into()));
    }
    let floor = 10.0 * tol;
    let distances: Vec<f64> = trace.states.iter().map(|h| h.distance(fixed_point)).collect();
    let ratios: Vec<f64> = distances
        .windows(2)
        .take_while(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.len() < 2 {
        return Err(Error::Fit(format!(
            "only {} usable ratios above the distance floor {floor:e}",
            ratios.len()
        )));
    }
    let rate = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
    let residual = ratios.iter().map(|r| (r - rate).abs()).fold(0.0, f64::max);
    Ok(DecayFit {
        ratios,
        rate,
        residual,
    })
}

/// `step,distance` rows for the recorded step distances of a trace.
pub fn step_distances_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::from("step,distance\n");
    for (t, d) in trace.step_distances.iter().enumerate() {
        out.push_str(&format!("{},{d:e}\n", t + 1));
    }
    out
}

/// Initial amplitude that makes a scalar affine contraction with factor
/// `alpha`, started at distance `amplitude` from its fixed point, stop after
/// roughly `target_steps` steps under tolerance `tol`.
pub fn calibrated_amplitude(alpha: f64, tol: f64, target_steps: usize) -> f64 {
    // Step t moves by (1 - alpha) alpha^t d0; stopping happens after the
    // first step with movement <= tol.
    tol / ((1.0 - alpha) * alpha.powi(target_steps as i32 - 1))
}
