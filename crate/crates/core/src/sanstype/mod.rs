//! SansType: a toy pseudocode-to-code task.
//!
//! Programs are drawn from a small generator of typed straight-line code over
//! `int`, `bool` and `string` variables. Each program is rendered twice: as
//! pseudocode that never mentions types, and as C++-like code that does.
//! The checker parses, typechecks and runs code against stdin/stdout tests.

mod ast;
mod check;
mod corrupt;
mod dataset;
mod parse;
mod program;
mod templates;

pub use ast::{BinOp, Code, Expr, Literal, Stmt, Type};
pub use check::{check, execute, typecheck, Outcome, TestCase, Verdict};
pub use corrupt::{corrupt, corrupt_with, targets, Corruption};
pub use dataset::{
    build_dataset, corruption_stats, generate, generate_example, generation_stats, CodeRecord, CorruptionStats,
    Dataset, DatasetConfig, DenoisingPair, Example, GenerationStats, Record,
};
pub use parse::parse;
pub use program::{
    generate_program, make_tests, random_literal, GenConfig, Init, Line, Operand, Program, Var, MAX_INT, NUM_STRINGS,
    NUM_VARS, SWAP_TEMP,
};
pub use templates::{render_pseudocode, LineKind, TemplateSet};
