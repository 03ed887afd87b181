use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "aspp", version, about = "Synchronous local-rule propagation on graphs")]
pub struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "ASPP_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Directory for detailed artifacts
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Game of Life patterns and circuits
    #[command(subcommand)]
    Life(LifeCommand),
    /// Contraction and fixed-point diagnostics
    #[command(subcommand)]
    Converge(ConvergeCommand),
    /// Graph 3-coloring bench
    #[command(subcommand)]
    Color(ColorCommand),
    /// Message-passing equivalence and influence checks
    #[command(subcommand)]
    Mpnn(MpnnCommand),
    /// Embedding distillation toy
    #[command(subcommand)]
    Distill(DistillCommand),
    /// Graph utilities
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Dead,
    Toroidal,
}

impl From<BoundaryArg> for aspp_core::Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Dead => aspp_core::Boundary::Dead,
            BoundaryArg::Toroidal => aspp_core::Boundary::Toroidal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Render {
    Text,
}

#[derive(Debug, Subcommand)]
pub enum LifeCommand {
    /// Evolve a pattern and write the final generation
    Run {
        /// RLE pattern file
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Arena size as ROWS COLS (default: pattern plus margin)
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"])]
        arena: Option<Vec<usize>>,
        /// Pattern offset inside the arena as ROW COL
        #[arg(long, num_args = 2, value_names = ["ROW", "COL"])]
        offset: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Dead)]
        boundary: BoundaryArg,
        /// Empty cells around the pattern when no arena is given
        #[arg(long, default_value_t = 20)]
        margin: usize,
        /// Print every generation to stderr
        #[arg(long, value_enum)]
        render: Option<Render>,
    },
    /// Check a pattern against its spec file
    Validate {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compare the engine with the reference simulator on random soups
    SoupCheck {
        #[arg(long, default_value_t = 1000)]
        soups: usize,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Dead)]
        boundary: BoundaryArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge-list file; overrides the generated graph
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Node count of the generated connected graph
    #[arg(long, default_value_t = 1)]
    pub nodes: usize,
    /// Extra-edge probability of the generated graph
    #[arg(long, default_value_t = 0.2)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
}

#[derive(Debug, Args)]
pub struct ContractionArgs {
    /// Contraction factor in (0, 1)
    #[arg(long, default_value_t = 0.76)]
    pub alpha: f64,
    /// Anchor value, repeated across every channel
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub anchor: f64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Use the identity rule instead of the contraction
    #[arg(long)]
    pub identity: bool,
}

#[derive(Debug, Subcommand)]
pub enum ConvergeCommand {
    /// Sampled contraction coefficient of one step
    Estimate {
        #[command(flatten)]
        rule: ContractionArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fixed-point iteration from several random starts
    Uniqueness {
        #[command(flatten)]
        rule: ContractionArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10)]
        inits: usize,
        /// Start amplitude (default: calibrated to a 20-step worst case)
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Geometric decay fit of one trajectory
    Decay {
        #[command(flatten)]
        rule: ContractionArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ColorCommand {
    /// Run the ablation grid and write ablation.csv
    Ablate {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated configuration names (default: all six)
        #[arg(long, value_delimiter = ',')]
        configs: Vec<String>,
    },
    /// Generate one planted instance (instance.edges, instance.witness)
    Gen {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum MpnnCommand {
    /// Engine against the reference layer on seeded random configurations
    Check {
        #[arg(long, default_value_t = 50)]
        configs: usize,
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Parameter file; checks a single configuration with --graph
        #[arg(long, requires = "graph")]
        params: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// State file for --params (default: seeded random)
        #[arg(long, requires = "params")]
        state: Option<PathBuf>,
        /// Steps for --params (default: diameter)
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Influence matrix of the sum rule (influence.txt)
    Influence {
        #[command(flatten)]
        graph: GraphArgs,
        /// Steps (default: diameter)
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum DistillCommand {
    /// Seeded gradient-descent demo (loss.csv)
    Demo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0.2)]
        step_size: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1e-5)]
        fd_eps: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Longest shortest path
    Diameter {
        #[command(flatten)]
        graph: GraphArgs,
    },
}
