//! Structure-preserving layout editing for vector graphic designs.
//!
//! A [`Design`] is a canvas plus an ordered stack of image and text
//! elements. From it we extract a [`RelationGraph`] of pairwise size and
//! position relations, synthesize standardized [`EditOperation`]s, apply
//! them with a repair solver that keeps the unedited elements' relations
//! intact, and score the result with relation, operation, overlap and
//! alignment metrics.
//!
//! Module map:
//!
//! - [`design`]: document schema, ingestion, canonical emission, content sequence.
//! - [`graph`]: relation classification, graph construction, pruning, serialization.
//! - [`ops`]: operation grammar, prepared edits, synthesis for both test settings, composites.
//! - [`datagen`]: reconstruction training samples and line-delimited corpora.
//! - [`solver`]: exact application plus constraint-repair editing.
//! - [`metrics`]: Size Rel / Pos Rel / Op / Ove / Ali and corpus reports.
//! - [`backend`]: editor backends, prompt construction, model output parsing, instruction translation.
//! - [`service`]: HTTP service with persistent designs, sessions and evaluation jobs.

pub mod backend;
pub mod datagen;
pub mod design;
pub mod graph;
pub mod metrics;
pub mod ops;
pub mod service;
pub mod solver;
pub mod synthetic;

mod jsonfmt;

pub use design::{
    bounding_box, emit_design, parse_design, serialize_content_sequence, Canvas, Content, Design,
    DesignError, Element, ElementId, Geometry, Modality, Rect, TextAlign, TextAttrs,
};
pub use graph::{
    build_relation_graph, classify_position_canvas, classify_position_element, classify_size,
    remove_node_edges, serialize_graph, Edge, GraphError, NodeId, PositionRelation, Relation,
    RelationGraph, SizeRelation, DEFAULT_ALPHA,
};
pub use metrics::{
    alignment, evaluate_corpus, op_satisfaction, overlap, relation_satisfaction, EvalCase,
    EvalReport, RelationScore,
};
pub use ops::{
    compose, parse_operation, prepare_edit, print_operation, synthesize_generalization_op,
    synthesize_reconstruction_op, Action, CompositeKind, CompositeOperation, EditOperation,
    OpError, PreparedEdit, Setting,
};
pub use solver::{
    apply_operation_exact, place_new_element, residuals, solve, ConstraintResiduals, Solution,
    SolverConfig, SolverError,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random source used everywhere a deterministic draw is needed.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream seed from a base seed and a sequence of
/// indices (design number, draw number, ...). SplitMix64 finalizer.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
