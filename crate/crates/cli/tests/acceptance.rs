//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use aspp_core::coloring::{self, KMode};
use aspp_core::convergence;
use aspp_core::distill::{self, DemoSetup};
use aspp_core::engine::{self, Capture, StateConfig};
use aspp_core::life::{self, library};
use aspp_core::mpnn_oracle;
use aspp_core::rules::{Activation, LinearContraction, MpnnFunctions, MpnnRule};
use aspp_core::{seeding, Boundary, Graph};
use rand::Rng;

type Check = Result<String, String>;
/// Summary bytes plus every artifact as (file name, contents).
type RunOutput = (Vec<u8>, Vec<(String, Vec<u8>)>);
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(limit_s),
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn life_equivalence() -> Check {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let report = pool
        .install(|| life::soup_check(1000, 32, 10, 0.5, Boundary::Dead, 1))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(report.exact_fraction == 1.0, format!("mismatched soups {:?}", report.mismatched_soups))?;
    within(elapsed, 30)?;
    Ok(format!(
        "1000 soups x 10 steps exact, {:.1} s single-threaded",
        elapsed.as_secs_f64()
    ))
}

fn logic_gates() -> Check {
    let start = Instant::now();
    let mut notes = Vec::new();
    for name in ["and_gate", "or_gate"] {
        let (p, spec) = library::load(name).map_err(|e| e.to_string())?;
        let r = life::validate_pattern(&p, &spec, &spec.arena_for(&p)).map_err(|e| e.to_string())?;
        ensure(r.passed && r.accuracy == Some(1.0), format!("{name}: {:?}", r.details))?;
        ensure(r.rows.len() == 4, format!("{name}: {} truth-table rows", r.rows.len()))?;
        notes.push(format!("{name} accuracy 1.0"));
    }
    let (gun, spec) = library::load("gosper_gun").map_err(|e| e.to_string())?;
    let r = life::validate_pattern(&gun, &spec, &spec.arena_for(&gun)).map_err(|e| e.to_string())?;
    ensure(r.passed, format!("gun: {:?}", r.details))?;
    ensure(spec.period == 30, format!("gun period {}", spec.period))?;
    ensure(r.probe_counts.len() >= 5, format!("gun emissions {}", r.probe_counts.len()))?;
    ensure(
        r.first_detection.is_some_and(|t| t <= 60),
        format!("gun first detection {:?}", r.first_detection),
    )?;
    within(start.elapsed(), 60)?;
    notes.push(format!(
        "gun period 30 with {} emissions, first at t={}",
        r.probe_counts.len(),
        r.first_detection.unwrap()
    ));
    Ok(notes.join(", "))
}

fn contraction_sharpness() -> Check {
    let start = Instant::now();
    let graph = Graph::random_connected(10, 0.3, 5).map_err(|e| e.to_string())?;
    let isolated = Graph::singleton();
    let mut worst_gap: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.76] {
        let rule = LinearContraction::new(1, alpha, vec![0.0]).map_err(|e| e.to_string())?;
        let on_graph =
            convergence::estimate_contraction(&rule, &graph, 10_000, 1.0, 1).map_err(|e| e.to_string())?;
        ensure(
            on_graph.estimated_c <= alpha + 1e-9,
            format!("alpha {alpha}: graph estimate {}", on_graph.estimated_c),
        )?;
        let single =
            convergence::estimate_contraction(&rule, &isolated, 10_000, 1.0, 1).map_err(|e| e.to_string())?;
        let gap = (single.estimated_c - alpha).abs();
        ensure(gap <= 1e-9, format!("alpha {alpha}: isolated estimate {}", single.estimated_c))?;
        worst_gap = worst_gap.max(gap);
    }
    within(start.elapsed(), 10)?;
    Ok(format!("graph estimates <= alpha, isolated gap {worst_gap:.1e}"))
}

fn fixed_point_uniqueness() -> Check {
    let start = Instant::now();
    let (alpha, tol) = (0.76, 1e-6);
    let rule = LinearContraction::new(1, alpha, vec![0.0]).map_err(|e| e.to_string())?;
    let amplitude = convergence::calibrated_amplitude(alpha, tol, 20);
    let mut notes = Vec::new();
    for (k, n) in [1usize, 10, 50].into_iter().enumerate() {
        let g = if n == 1 {
            Graph::singleton()
        } else {
            Graph::random_connected(n, 0.2, 100 + k as u64).map_err(|e| e.to_string())?
        };
        let u = convergence::fixed_point_uniqueness(&rule, &g, 10, amplitude, tol, 1000, 7)
            .map_err(|e| e.to_string())?;
        ensure(
            u.unique && u.max_pairwise_distance <= 10.0 * tol,
            format!("n={n}: spread {}", u.max_pairwise_distance),
        )?;
        ensure(
            (10.0..=20.0).contains(&u.mean_steps),
            format!("n={n}: mean steps {}", u.mean_steps),
        )?;

        let mut rng = seeding::rng(11 + k as u64);
        let h0 = StateConfig::new(n, 1, (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .map_err(|e| e.to_string())?;
        let trace = engine::evolve(&h0, &g, &rule, 60, Capture::All).map_err(|e| e.to_string())?;
        let star = StateConfig::zeros(n, 1);
        let fit = convergence::fit_decay(&trace, &star, tol).map_err(|e| e.to_string())?;
        if n == 1 {
            ensure((fit.rate - alpha).abs() <= 0.02, format!("isolated decay rate {}", fit.rate))?;
        } else {
            ensure(fit.rate <= alpha + 0.02, format!("n={n}: decay rate {}", fit.rate))?;
        }
        notes.push(format!("n={n} mean {:.1} steps rate {:.3}", u.mean_steps, fit.rate));
    }
    within(start.elapsed(), 10)?;
    Ok(notes.join(", "))
}

fn mpnn_universality() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let mut rng = seeding::stream_rng(42, k);
        let n = rng.gen_range(1..=12);
        let d = rng.gen_range(1..=4);
        let g = Graph::random_connected(n, 0.25, seeding::derive_seed(42, k)).map_err(|e| e.to_string())?;
        let activation = if k % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let fns = MpnnFunctions::random(d, 0.8, activation, &mut rng);
        let h0 = StateConfig::new(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .map_err(|e| e.to_string())?;
        let t = g.diameter().finite().unwrap_or(0).max(1);
        let r = mpnn_oracle::check_equivalence(&g, &fns, &h0, t).map_err(|e| e.to_string())?;
        ensure(r.equal, format!("config {k}: deviation {}", r.max_abs_deviation))?;
        worst = worst.max(r.max_abs_deviation);
    }
    ensure(worst == 0.0, format!("max deviation {worst}"))?;
    let rule = MpnnRule::new(MpnnFunctions::sum_rule(1));
    for k in 0..20u64 {
        let n = 2 + (k as usize % 11);
        let g = Graph::random_connected(n, 0.15, 500 + k).map_err(|e| e.to_string())?;
        let t = g.diameter().finite().ok_or("generated graph is disconnected")?;
        let m = mpnn_oracle::influence_matrix(&rule, &g, &StateConfig::zeros(n, 1), t, 1e-3)
            .map_err(|e| e.to_string())?;
        ensure(m.all(), format!("graph {k}: influence matrix not all-true at T={t}"))?;
    }
    within(start.elapsed(), 10)?;
    Ok("50 configurations bit-identical, 20 influence matrices all-true".into())
}

fn coloring_harness() -> Check {
    let start = Instant::now();
    let configs = coloring::shipped_configs();
    let rows = coloring::run_ablation(&configs, 200, 30, 2.0, 1).map_err(|e| e.to_string())?;
    let csv = coloring::ablation_csv(&rows);
    let mut lines = csv.lines();
    ensure(
        lines.next() == Some("config,accuracy,violation_rate,convergence_steps"),
        "csv header",
    )?;
    ensure(lines.count() == 6, "csv must hold six rows")?;
    let mut fixed_min = usize::MAX;
    let mut adaptive_max = 0;
    for (cfg, row) in configs.iter().zip(&rows) {
        ensure(row.evaluations.len() == 200, format!("{}: evaluation count", cfg.name))?;
        for e in &row.evaluations {
            ensure(e.proper == (e.violation_rate == 0.0), format!("{}: proper/violation mismatch", cfg.name))?;
        }
        match cfg.k_mode {
            KMode::Fixed { k } => {
                ensure(row.evaluations.iter().all(|e| e.steps == k), format!("{}: steps != {k}", cfg.name))?;
                fixed_min = fixed_min.min(k);
            }
            KMode::Learned { .. } => {
                adaptive_max = adaptive_max.max(row.evaluations.iter().map(|e| e.steps).max().unwrap());
            }
        }
    }
    ensure(adaptive_max <= fixed_min, format!("adaptive {adaptive_max} > fixed {fixed_min}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("six rows over 200 instances, adaptive steps <= {adaptive_max}"))
}

fn distillation_arithmetic() -> Check {
    let start = Instant::now();
    let setup = DemoSetup::shipped(1);
    let (target, graph, params) = setup.materialize().map_err(|e| e.to_string())?;
    let other = target.clone();
    let shifted = StateConfig::new(
        target.nodes(),
        target.dim(),
        target.values().iter().map(|v| v + 0.5).collect(),
    )
    .map_err(|e| e.to_string())?;
    let loss = |a: &StateConfig, b: &StateConfig| distill::distill_loss(a, b).map_err(|e| e.to_string());
    ensure(loss(&target, &other)? == 0.0, "loss(h, h) != 0")?;
    ensure(loss(&target, &shifted)? == loss(&shifted, &target)?, "loss is not symmetric")?;
    ensure(loss(&target, &shifted)? == 0.25, "uniform shift 0.5 must give 0.25")?;

    let run = setup.run().map_err(|e| e.to_string())?;
    let ratio = run.final_loss() / run.initial_loss();
    ensure(run.curve.len() == 201, "curve length")?;
    ensure(ratio <= 0.5, format!("final/initial {ratio}"))?;

    let f = |p: &[f64]| distill::objective(p, &target, &graph, setup.config.k);
    let g1 = distill::fd_gradient(f, &params, 1e-5).map_err(|e| e.to_string())?;
    let g2 = distill::fd_gradient(f, &params, 2e-5).map_err(|e| e.to_string())?;
    let norm = g1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    ensure(diff <= 1e-3 * norm, format!("step-size consistency {diff} vs {norm}"))?;

    let mut rng = seeding::rng(3);
    let dir: Vec<f64> = params.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = 1e-5;
    let along = |s: f64| -> Vec<f64> { params.iter().zip(&dir).map(|(p, v)| p + s * v).collect() };
    let directional = (f(&along(h)).map_err(|e| e.to_string())? - f(&along(-h)).map_err(|e| e.to_string())?)
        / (2.0 * h);
    let projected: f64 = g1.iter().zip(&dir).map(|(g, v)| g * v).sum();
    let rel = (directional - projected).abs() / directional.abs().max(1e-12);
    ensure(rel <= 1e-3, format!("directional derivative rel error {rel}"))?;
    within(start.elapsed(), 20)?;
    Ok(format!("loss ratio {ratio:.3}, fd rel error {rel:.1e}"))
}

fn run_cli(args: &[&str], threads: &str, out: &Path) -> Result<RunOutput, String> {
    if out.exists() {
        std::fs::remove_dir_all(out).map_err(|e| e.to_string())?;
    }
    let output = Command::new(env!("CARGO_BIN_EXE_aspp"))
        .args(args)
        .arg("--threads")
        .arg(threads)
        .arg("--out")
        .arg(out)
        .env_remove("ASPP_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("{args:?} exited with {}", output.status));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .map(|entry| {
            let entry = entry.unwrap();
            (entry.file_name().to_string_lossy().into_owned(), std::fs::read(entry.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok((output.stdout, files))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let assets = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets");
    let glider = format!("{assets}/glider.rle");
    let gun = format!("{assets}/gosper_gun.rle");
    let gun_spec = format!("{assets}/gosper_gun.spec");
    let regression: Vec<Vec<&str>> = vec![
        vec!["life", "run", "--pattern", &glider, "--steps", "12"],
        vec!["life", "validate", "--pattern", &gun, "--spec", &gun_spec],
        vec!["life", "soup-check", "--soups", "100"],
        vec!["converge", "estimate", "--nodes", "10", "--trials", "2000"],
        vec!["converge", "uniqueness", "--nodes", "50"],
        vec!["converge", "decay", "--nodes", "10"],
        vec!["color", "ablate", "--instances", "40"],
        vec!["color", "gen", "--n", "25"],
        vec!["mpnn", "check", "--configs", "20"],
        vec!["mpnn", "influence", "--nodes", "9"],
        vec!["distill", "demo", "--iters", "50"],
        vec!["graph", "diameter", "--nodes", "12", "--graph-seed", "4"],
    ];
    for args in &regression {
        let out = dir.path().join("run");
        let first = run_cli(args, "1", &out)?;
        let again = run_cli(args, "1", &out)?;
        let wide = run_cli(args, "4", &out)?;
        ensure(!first.0.is_empty(), format!("{args:?}: empty summary"))?;
        ensure(first == again, format!("{args:?}: differs between identical runs"))?;
        ensure(first == wide, format!("{args:?}: differs between 1 and 4 threads"))?;
    }
    Ok(format!("{} invocations byte-identical across reruns and thread counts", regression.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("life exact-rule equivalence", life_equivalence),
        ("logic-gate truth tables", logic_gates),
        ("contraction estimator sharpness", contraction_sharpness),
        ("fixed-point uniqueness", fixed_point_uniqueness),
        ("mpnn universality", mpnn_universality),
        ("coloring harness", coloring_harness),
        ("distillation arithmetic", distillation_arithmetic),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(note) => println!("PASS {} {name}: {note}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
