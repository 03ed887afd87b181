//! Local-rule propagation on graphs: a synchronous operator engine with
//! contraction diagnostics, a message-passing equivalence oracle, Game of
//! Life pattern validation, a graph-coloring ablation bench and a small
//! distillation toy.

pub mod coloring;
pub mod convergence;
pub mod distill;
pub mod engine;
pub mod error;
pub mod graph;
pub mod life;
pub mod mpnn_oracle;
pub mod rules;
pub mod seeding;

pub use engine::{
    decode, evolve, evolve_to_fixed_point, learned_k, step, Capture, Decoder, EvolutionTrace,
    FixedPointRun, Solution, StateConfig,
};
pub use error::{Error, Result};
pub use graph::{Boundary, Diameter, Edge, Graph, Neighborhood};
pub use rules::UpdateRule;
