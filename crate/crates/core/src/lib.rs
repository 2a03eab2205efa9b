//! Weakly supervised temporal alignment of ordered action labels.
//!
//! Given clips of interval features and, per clip, an ordered list of
//! action labels without time stamps, this crate jointly recovers the
//! interval-to-label assignment and a shared linear classifier by
//! minimizing a convex quadratic over the polytope of order-respecting
//! assignment matrices with the Frank-Wolfe algorithm, then rounding to
//! the nearest admissible assignment.

pub mod cost;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod solver;
pub mod synth;

pub use cost::{Classifier, CostKind, CostOperator};
pub use error::{Error, Result};
pub use model::{
    AnnotationSequence, AssignmentMatrix, AssignmentPath, Clip, Dataset, LabelSet, PaddingMode,
    RelaxedAssignment, Segment, BACKGROUND_NAME,
};
pub use oracle::{lmo, lmo_path, round};
pub use pipeline::{
    evaluate_alignment, split_dataset, AlignConfig, AlignmentRun, EvalReport, Split, SplitSpec,
};
pub use solver::{solve, SolveOptions, SolveResult, StepRule, TraceRecord};
pub use synth::{generate, SyntheticConfig};
