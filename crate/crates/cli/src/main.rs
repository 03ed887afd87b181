mod cli;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aspp_core::coloring::{self, AblationConfig};
use aspp_core::convergence;
use aspp_core::distill::DemoSetup;
use aspp_core::engine::{self, Capture, StateConfig};
use aspp_core::life::{self, Arena, PatternSpec};
use aspp_core::mpnn_oracle;
use aspp_core::rules::{Activation, Identity, LinearContraction, MpnnFunctions, MpnnRule, UpdateRule};
use aspp_core::{seeding, Error, Graph};
use clap::Parser;
use rand::Rng;
use serde_json::{json, Value};

use cli::*;

/// Why a run did not succeed.
enum Failure {
    /// Bad invocation or unreadable inputs (exit 2).
    Usage(String),
    /// The run completed but a check failed, or the computation aborted (exit 1).
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Parse { .. } => Failure::Usage(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

type Outcome = Result<(Value, bool), Failure>;

struct Ctx {
    out: Option<PathBuf>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            fs::write(&path, contents)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn require_files(paths: &[&Path]) -> Result<(), Failure> {
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Usage(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn load_graph(args: &GraphArgs) -> Result<Graph, Failure> {
    match &args.graph {
        Some(path) => Ok(Graph::parse_edge_list(&read(path)?)?),
        None if args.nodes == 1 => Ok(Graph::singleton()),
        None => Ok(Graph::random_connected(args.nodes, args.edge_prob, args.graph_seed)?),
    }
}

fn contraction_rule(args: &ContractionArgs) -> Result<Box<dyn UpdateRule>, Failure> {
    if args.identity {
        Ok(Box::new(Identity::new(args.dim)?))
    } else {
        Ok(Box::new(LinearContraction::new(args.dim, args.alpha, vec![args.anchor; args.dim])?))
    }
}

fn fixed_point_of(args: &ContractionArgs, n: usize) -> Result<StateConfig, Failure> {
    if args.identity {
        return Err(Failure::Usage("the identity rule has no unique fixed point".into()));
    }
    let v = args.anchor / (1.0 - args.alpha);
    Ok(StateConfig::new(n, args.dim, vec![v; n * args.dim])?)
}

fn run_life(ctx: &Ctx, cmd: &LifeCommand) -> Outcome {
    match cmd {
        LifeCommand::Run {
            pattern,
            steps,
            arena,
            offset,
            boundary,
            margin,
            render,
        } => {
            require_files(&[pattern])?;
            let p = life::parse_rle(&read(pattern)?)?;
            let mut a = Arena::around(&p, *margin);
            if let Some(dims) = arena {
                a.rows = dims[0];
                a.cols = dims[1];
                a.offset = (0, 0);
            }
            if let Some(o) = offset {
                a.offset = (o[0], o[1]);
            }
            a.boundary = (*boundary).into();
            let capture = if render.is_some() { Capture::All } else { Capture::Endpoints };
            let trace = life::run_life_with(&p, *steps, &a, capture)?;
            if render.is_some() {
                for (t, h) in trace.states.iter().enumerate() {
                    eprintln!("t={t}\n{}", a.extract(h).render());
                }
            }
            let last = a.extract(trace.last());
            ctx.write("final.rle", &(life::emit_rle(&last) + "\n"))?;
            Ok((
                json!({
                    "command": "life run",
                    "pattern": p.name(),
                    "steps": steps,
                    "arena": [a.rows, a.cols],
                    "initial_population": p.population(),
                    "final_population": last.population(),
                }),
                true,
            ))
        }
        LifeCommand::Validate { pattern, spec } => {
            require_files(&[pattern, spec])?;
            let p = life::parse_rle(&read(pattern)?)?;
            let s = PatternSpec::parse(&read(spec)?)?;
            let report = life::validate_pattern(&p, &s, &s.arena_for(&p))?;
            ctx.write("report.json", &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["command"] = json!("life validate");
            Ok((summary, report.passed))
        }
        LifeCommand::SoupCheck {
            soups,
            size,
            steps,
            density,
            boundary,
            seed,
        } => {
            let report = life::soup_check(*soups, *size, *steps, *density, (*boundary).into(), *seed)?;
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["command"] = json!("life soup-check");
            Ok((summary, report.mismatched_soups.is_empty()))
        }
    }
}

fn run_converge(ctx: &Ctx, cmd: &ConvergeCommand) -> Outcome {
    match cmd {
        ConvergeCommand::Estimate {
            rule,
            graph,
            trials,
            amplitude,
            seed,
        } => {
            let g = load_graph(graph)?;
            let r = contraction_rule(rule)?;
            let report = convergence::estimate_contraction(&*r, &g, *trials, *amplitude, *seed)?;
            let bound = r.lipschitz_bound();
            let within = bound.is_none_or(|b| report.estimated_c <= b + 1e-9);
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["command"] = json!("converge estimate");
            summary["rule"] = json!(r.name());
            summary["declared_bound"] = json!(bound);
            summary["within_bound"] = json!(within);
            Ok((summary, within))
        }
        ConvergeCommand::Uniqueness {
            rule,
            graph,
            inits,
            amplitude,
            tol,
            max_steps,
            seed,
        } => {
            let g = load_graph(graph)?;
            let r = contraction_rule(rule)?;
            let amp = amplitude.unwrap_or_else(|| convergence::calibrated_amplitude(rule.alpha, *tol, 20));
            let report = convergence::fixed_point_uniqueness(&*r, &g, *inits, amp, *tol, *max_steps, *seed)?;
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["command"] = json!("converge uniqueness");
            summary["amplitude"] = json!(amp);
            Ok((summary, report.unique))
        }
        ConvergeCommand::Decay {
            rule,
            graph,
            steps,
            amplitude,
            tol,
            seed,
        } => {
            let g = load_graph(graph)?;
            let r = contraction_rule(rule)?;
            let star = fixed_point_of(rule, g.node_count())?;
            let mut rng = seeding::rng(*seed);
            let values = star
                .values()
                .iter()
                .map(|v| v + rng.gen_range(-*amplitude..=*amplitude))
                .collect();
            let h0 = StateConfig::new(g.node_count(), rule.dim, values)?;
            let trace = engine::evolve(&h0, &g, &*r, *steps, Capture::All)?;
            ctx.write("distances.csv", &convergence::step_distances_csv(&trace))?;
            let fit = convergence::fit_decay(&trace, &star, *tol)?;
            let mut summary = serde_json::to_value(&fit).expect("serializable");
            summary["command"] = json!("converge decay");
            summary["steps"] = json!(steps);
            Ok((summary, true))
        }
    }
}

fn run_color(ctx: &Ctx, cmd: &ColorCommand) -> Outcome {
    match cmd {
        ColorCommand::Ablate {
            instances,
            n,
            factor,
            seed,
            configs,
        } => {
            let chosen: Vec<AblationConfig> = if configs.is_empty() {
                coloring::shipped_configs()
            } else {
                configs
                    .iter()
                    .map(|c| coloring::config_by_name(c.trim()))
                    .collect::<Result<_, _>>()?
            };
            let rows = coloring::run_ablation(&chosen, *instances, *n, *factor, *seed)?;
            ctx.write("ablation.csv", &coloring::ablation_csv(&rows))?;
            let consistent = rows
                .iter()
                .flat_map(|r| &r.evaluations)
                .all(|e| e.proper == (e.violation_rate == 0.0));
            Ok((
                json!({
                    "command": "color ablate",
                    "instances": instances,
                    "n": n,
                    "factor": factor,
                    "seed": seed,
                    "rows": rows,
                }),
                consistent,
            ))
        }
        ColorCommand::Gen { n, factor, seed } => {
            let inst = coloring::generate_3colorable(*n, *factor, *seed)?;
            ctx.write("instance.edges", &inst.graph.to_edge_list())?;
            ctx.write("instance.witness", &inst.witness_text())?;
            Ok((
                json!({
                    "command": "color gen",
                    "nodes": n,
                    "edges": inst.graph.unique_edges().count(),
                    "seed": seed,
                }),
                true,
            ))
        }
    }
}

fn run_mpnn(ctx: &Ctx, cmd: &MpnnCommand) -> Outcome {
    match cmd {
        MpnnCommand::Check {
            configs,
            max_nodes,
            max_dim,
            seed,
            params,
            graph,
            state,
            steps,
        } => {
            if let (Some(params), Some(graph)) = (params, graph) {
                require_files(&[params, graph])?;
                let fns = MpnnFunctions::parse(&read(params)?)?;
                let g = Graph::parse_edge_list(&read(graph)?)?;
                let h0 = match state {
                    Some(path) => StateConfig::parse(&read(path)?)?,
                    None => random_state(g.node_count(), fns.dim(), &mut seeding::rng(*seed)),
                };
                let t = match steps {
                    Some(t) => *t,
                    None => diameter_steps(&g)?,
                };
                let report = mpnn_oracle::check_equivalence(&g, &fns, &h0, t)?;
                let mut summary = serde_json::to_value(report).expect("serializable");
                summary["command"] = json!("mpnn check");
                return Ok((summary, report.equal));
            }
            if *max_nodes == 0 || *max_dim == 0 || *configs == 0 {
                return Err(Failure::Usage("configs, max-nodes and max-dim must be positive".into()));
            }
            let mut worst: f64 = 0.0;
            let mut failures = Vec::new();
            let mut lines = String::from("config,nodes,dim,steps,equal,max_abs_deviation\n");
            for k in 0..*configs {
                let mut rng = seeding::stream_rng(*seed, k as u64);
                let n = rng.gen_range(1..=*max_nodes);
                let d = rng.gen_range(1..=*max_dim);
                let g = Graph::random_connected(n, 0.25, seeding::derive_seed(*seed, k as u64))?;
                let fns = MpnnFunctions::random(d, 0.8, Activation::Tanh, &mut rng);
                let h0 = random_state(n, d, &mut rng);
                let t = g.diameter().finite().unwrap_or(1).max(1);
                let r = mpnn_oracle::check_equivalence(&g, &fns, &h0, t)?;
                worst = worst.max(r.max_abs_deviation);
                if !r.equal {
                    failures.push(k);
                }
                lines.push_str(&format!("{k},{n},{d},{t},{},{:e}\n", r.equal, r.max_abs_deviation));
            }
            ctx.write("equivalence.csv", &lines)?;
            Ok((
                json!({
                    "command": "mpnn check",
                    "configs": configs,
                    "seed": seed,
                    "all_equal": failures.is_empty(),
                    "failures": failures,
                    "max_abs_deviation": worst,
                }),
                failures.is_empty(),
            ))
        }
        MpnnCommand::Influence { graph, steps, eps, dim } => {
            let g = load_graph(graph)?;
            let t = match steps {
                Some(t) => *t,
                None => diameter_steps(&g)?,
            };
            let rule = MpnnRule::new(MpnnFunctions::sum_rule(*dim));
            let h0 = StateConfig::zeros(g.node_count(), *dim);
            let m = mpnn_oracle::influence_matrix(&rule, &g, &h0, t, *eps)?;
            ctx.write("influence.txt", &m.to_text())?;
            let reachable_only = (0..g.node_count()).all(|i| {
                let dist = g.distances_to(i);
                (0..g.node_count()).all(|j| !m.get(i, j) || dist[j].is_some_and(|d| d <= t))
            });
            Ok((
                json!({
                    "command": "mpnn influence",
                    "nodes": g.node_count(),
                    "steps": t,
                    "all_true": m.all(),
                    "within_reach": reachable_only,
                }),
                reachable_only,
            ))
        }
    }
}

fn random_state<R: Rng>(n: usize, d: usize, rng: &mut R) -> StateConfig {
    StateConfig::new(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

fn diameter_steps(g: &Graph) -> Result<usize, Failure> {
    g.diameter()
        .finite()
        .map(|d| d.max(1))
        .ok_or_else(|| Failure::Usage("graph is not strongly connected; pass --steps".into()))
}

fn run_distill(ctx: &Ctx, cmd: &DistillCommand) -> Outcome {
    let DistillCommand::Demo {
        seed,
        iters,
        step_size,
        k,
        fd_eps,
    } = cmd;
    let mut setup = DemoSetup::shipped(*seed);
    setup.config.iters = *iters;
    setup.config.step_size = *step_size;
    setup.config.k = *k;
    setup.config.fd_eps = *fd_eps;
    let run = setup.run()?;
    ctx.write("loss.csv", &run.to_csv())?;
    let ratio = run.final_loss() / run.initial_loss();
    Ok((
        json!({
            "command": "distill demo",
            "seed": seed,
            "iters": iters,
            "initial_loss": run.initial_loss(),
            "final_loss": run.final_loss(),
            "ratio": ratio,
            "halved": ratio <= 0.5,
        }),
        true,
    ))
}

fn run_graph(cmd: &GraphCommand) -> Outcome {
    let GraphCommand::Diameter { graph } = cmd;
    let g = load_graph(graph)?;
    let diameter = match g.diameter().finite() {
        Some(d) => json!(d),
        None => json!("inf"),
    };
    Ok((
        json!({
            "command": "graph diameter",
            "nodes": g.node_count(),
            "diameter": diameter,
        }),
        true,
    ))
}

fn dispatch(cli: &Cli) -> Outcome {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let ctx = Ctx { out: cli.out.clone() };
    match &cli.command {
        Command::Life(c) => run_life(&ctx, c),
        Command::Converge(c) => run_converge(&ctx, c),
        Command::Color(c) => run_color(&ctx, c),
        Command::Mpnn(c) => run_mpnn(&ctx, c),
        Command::Distill(c) => run_distill(&ctx, c),
        Command::Graph(c) => run_graph(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok((summary, ok)) => {
            println!("{summary}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn errors_map_to_exit_classes() {
        assert!(matches!(Failure::from(Error::Validation("x".into())), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::Fit("x".into())), Failure::Check(_)));
    }
}
