//! Verifiable rewards and policy-optimization primitives for cue-grounded
//! reasoning traces.
//!
//! The crate is organized around five subsystems:
//!
//! - [`pattern`]: lossless parser and structural validator for the
//!   `<think>/<answer>/<vcues_*>/<aha>` tag grammar emitted by reasoning
//!   models.
//! - [`reward`]: hybrid verifiable reward — per-question-type accuracy,
//!   format gating, and soft overlong length shaping.
//! - [`dapo`]: the clipped surrogate objective with group-relative
//!   advantages, token-level aggregation, dynamic sampling, and an exact
//!   analytic gradient for tabular policies.
//! - [`simenv`]: a desk-scale closed training loop over a tabular bigram
//!   policy and synthetic cue-dependent tasks, used to validate the whole
//!   stack end to end.
//! - [`dataops`]: annotation-corpus ingestion, automatic verification,
//!   selective-formatting curation, and the staged external-annotator chain.
//!
//! All scoring and objective evaluation is pure and deterministic: identical
//! inputs produce bitwise-identical outputs regardless of thread count.

pub mod dapo;

pub mod pattern;
pub mod reward;
pub mod simenv;
