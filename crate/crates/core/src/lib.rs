//! Non-destructive, equality-saturation-style optimization over a restricted
//! ANF control-flow-graph IR.
//!
//! A function is canonicalized into an [`ESequence`] and seeds an [`EPath`],
//! a set of equivalent sequences that only ever grows. Rewrite rules such as
//! loop-invariant code motion add new variants instead of replacing old ones,
//! and [`cost::extract`] picks the cheapest variant under a symbolic cost in
//! the loop trip count `N`.

pub mod analysis;
pub mod cli;
pub mod cost;
pub mod epath;
pub mod esequence;
pub mod ir;
pub mod rewrite;

pub use analysis::{Analyses, IrreducibleError, LoopRegion};
pub use epath::{EPath, InsertOutcome, Limits, RewriteEdge, SaturationReport};
pub use esequence::{Digest, ESequence};
pub use ir::{Block, BlockId, Function, Instruction, Opcode, Terminator, ValueId};
pub use rewrite::{Registry, RewriteRule};

/// Symbolic cost with `u64` coefficients.
pub type CostPoly = cost::Poly<u64>;
/// Cost table with `u64` entries.
pub type CostTable = cost::Table<u64>;
