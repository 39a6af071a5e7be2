//! Lossless parser and structural validator for cue-tagged reasoning traces.
//!
//! The grammar is deliberately regular: five tag kinds (`<think>`,
//! `<answer>`, `<vcues_N>`, `<aha>`, plain text), no attributes, no
//! whitespace inside delimiters, and no nesting of like tags. Anything that
//! is not an exactly-delimited known tag is plain text — model output is
//! noisy and the parser must never fail.
//!
//! Parsing is total and lossless: [`tokenize_tags`] segments arbitrary UTF-8
//! into spans that tile the input, and re-rendering the spans reproduces the
//! input byte for byte. [`parse_response`] builds the structured view on top
//! and reports violations instead of erroring, so malformed rollouts can
//! still be reward-shaped.

mod tokenizer;
mod validate;

pub use tokenizer::{render_spans, tokenize_tags, TagKind, TagSpan};
pub use validate::{
    detect_rethink_trigger, extract_answer, extract_cues, parse_response, ParsedResponse,
    PatternError, PatternReport, Violation, VisualCue,
};

use serde::{Deserialize, Serialize};

/// Default rethink-trigger sentence looked for inside the think block.
pub const DEFAULT_TRIGGER_SENTENCE: &str =
    "Let's check each visual cue and corresponding reasoning before reaching the final answer";

/// Paraphrase stems that also count as a rethink trigger.
pub const DEFAULT_TRIGGER_STEMS: [&str; 2] = ["check each visual cue", "verify the visual cues"];

/// Configuration for trigger detection and cue-numbering strictness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatternConfig {
    /// Sentence patterns that count as a rethink trigger after
    /// normalization (lowercase, punctuation stripped, whitespace
    /// collapsed). A think-block sentence triggers if it contains any of
    /// these stems. Must be non-empty when `require_trigger_tag` is false.
    pub trigger_phrases: Vec<String>,
    /// When true, only an `<aha>` span counts as the trigger and phrase
    /// matching is skipped.
    pub require_trigger_tag: bool,
    /// When true, cue repeats before the trigger and extra `<aha>` spans
    /// are violations. Data verification runs strict; reward computation
    /// does not.
    pub strict_cue_numbering: bool,
}

impl Default for PatternConfig {
    fn default() -> Self {
        let mut trigger_phrases = vec![DEFAULT_TRIGGER_SENTENCE.to_string()];
        trigger_phrases.extend(DEFAULT_TRIGGER_STEMS.iter().map(|s| s.to_string()));
        Self {
            trigger_phrases,
            require_trigger_tag: false,
            strict_cue_numbering: true,
        }
    }
}

impl PatternConfig {
    /// Strict profile used by annotation-data verification.
    pub fn strict() -> Self {
        Self::default()
    }

    /// Lenient profile used by reward computation: soft cue conventions
    /// are not penalized.
    pub fn lenient() -> Self {
        Self {
            strict_cue_numbering: false,
            ..Self::default()
        }
    }
}
