//! Hybrid verifiable reward: per-question-type accuracy, format gating,
//! and soft overlong length shaping.
//!
//! The scalar reward combines as
//!
//! ```text
//! total = w_acc * accuracy + length_penalty   when the format is valid
//! total = format_fail_reward                  otherwise
//! ```
//!
//! `is_equivalent` — the correctness predicate that drives dynamic
//! sampling — reflects answer correctness only: it is judged on the
//! extracted answer regardless of format validity or length shaping.
//!
//! All matching applies Unicode NFC first, so results are identical across
//! platforms. Token lengths are supplied by the caller; this module never
//! tokenizes.

mod math;

pub use math::{math_equivalent, normalize_math_answer, CanonicalMathValue, MathValue};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::pattern::{self, PatternConfig, PatternReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewardError {
    #[error("operation requires a {expected} record, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("math answer is empty after stripping")]
    Empty,
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

/// Question category; decides how answers are matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    MultipleChoice,
    Math,
    OpenEnded,
}

impl QuestionKind {
    fn name(self) -> &'static str {
        match self {
            QuestionKind::MultipleChoice => "multiple_choice",
            QuestionKind::Math => "math",
            QuestionKind::OpenEnded => "open_ended",
        }
    }
}

/// One answer option of a multiple-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub text: String,
}

/// The reference answer, with a canonical math form for math questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub math_value: Option<CanonicalMathValue>,
}

impl GoldAnswer {
    /// Build a gold answer for the given kind; math kinds must normalize.
    pub fn new(surface: impl Into<String>, kind: QuestionKind) -> Result<Self, RewardError> {
        let surface = surface.into();
        let math_value = match kind {
            QuestionKind::Math => Some(normalize_math_answer(&surface)?),
            _ => None,
        };
        Ok(Self {
            surface,
            math_value,
        })
    }
}

/// One question with its gold answer. Image references are opaque strings
/// passed through to external judges; nothing here decodes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub kind: QuestionKind,
    pub prompt: String,
    #[serde(default)]
    pub choices: Vec<Choice>,
    pub gold: GoldAnswer,
    #[serde(default)]
    pub image_refs: Vec<String>,
}

impl QuestionRecord {
    /// Check the structural invariants: unique choice labels, the gold
    /// label present for multiple choice, a canonical math value for math.
    pub fn validate(&self) -> Result<(), RewardError> {
        let invalid = |reason: String| RewardError::InvalidRecord {
            id: self.id.clone(),
            reason,
        };
        match self.kind {
            QuestionKind::MultipleChoice => {
                let mut labels: Vec<String> = self
                    .choices
                    .iter()
                    .map(|c| normalize_label(&c.label))
                    .collect();
                labels.sort();
                let unique = labels.windows(2).all(|w| w[0] != w[1]);
                if !unique {
                    return Err(invalid("duplicate choice labels".into()));
                }
                let gold = normalize_label(&self.gold.surface);
                if !labels.contains(&gold) {
                    return Err(invalid(format!(
                        "gold label {:?} not among choices",
                        self.gold.surface
                    )));
                }
            }
            QuestionKind::Math => {
                if self.gold.math_value.is_none() {
                    return Err(invalid("math record without canonical gold value".into()));
                }
            }
            QuestionKind::OpenEnded => {}
        }
        Ok(())
    }
}

/// Weights and thresholds of the hybrid reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub w_acc: f64,
    pub format_fail_reward: f64,
    /// Hard response-length cap in tokens.
    pub l_max: u32,
    /// Soft-punish window before the cap.
    pub l_cache: u32,
    /// Relative tolerance for float math comparisons.
    pub float_tol: f64,
    pub enable_length_shaping: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_acc: 1.0,
            format_fail_reward: -1.0,
            l_max: 4096,
            l_cache: 512,
            float_tol: 1e-6,
            enable_length_shaping: true,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if self.l_cache == 0 || self.l_cache >= self.l_max {
            return Err(RewardError::InvalidConfig(format!(
                "need 0 < l_cache < l_max, got l_cache={} l_max={}",
                self.l_cache, self.l_max
            )));
        }
        if !(self.float_tol >= 0.0) {
            return Err(RewardError::InvalidConfig(format!(
                "float_tol must be >= 0, got {}",
                self.float_tol
            )));
        }
        Ok(())
    }
}

/// Per-response reward components plus the combined scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// 0 or 1: whether the extracted answer matches the gold answer.
    pub accuracy: f64,
    pub format_ok: bool,
    /// In [-1, 0]; 0 unless the response nears or exceeds the length cap.
    pub length_penalty: f64,
    /// The scalar consumed by the surrogate objective.
    pub total: f64,
    /// The dynamic-sampling filter predicate: `accuracy == 1`.
    pub is_equivalent: bool,
}

/// 1 iff the predicted label (or full choice text) matches the gold label.
pub fn score_multiple_choice(pred: &str, record: &QuestionRecord) -> Result<u32, RewardError> {
    require_kind(record, QuestionKind::MultipleChoice)?;
    let pred_label = normalize_label(pred);
    let gold_label = normalize_label(&record.gold.surface);
    if !pred_label.is_empty() && pred_label == gold_label {
        return Ok(1);
    }
    let gold_choice = record
        .choices
        .iter()
        .find(|c| normalize_label(&c.label) == gold_label);
    if let Some(choice) = gold_choice {
        let pred_text = normalize_open_ended(pred);
        if !pred_text.is_empty() && pred_text == normalize_open_ended(&choice.text) {
            return Ok(1);
        }
    }
    Ok(0)
}

/// 1 iff the normalized forms match exactly.
pub fn score_open_ended(pred: &str, record: &QuestionRecord) -> Result<u32, RewardError> {
    require_kind(record, QuestionKind::OpenEnded)?;
    let pred = normalize_open_ended(pred);
    let gold = normalize_open_ended(&record.gold.surface);
    Ok(u32::from(!pred.is_empty() && pred == gold))
}

fn require_kind(record: &QuestionRecord, expected: QuestionKind) -> Result<(), RewardError> {
    if record.kind != expected {
        return Err(RewardError::WrongKind {
            expected: expected.name(),
            got: record.kind.name(),
        });
    }
    Ok(())
}

/// Lowercase, strip leading articles, drop punctuation, collapse whitespace.
pub fn normalize_open_ended(s: &str) -> String {
    let lowered: String = s
        .nfc()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let tokens: Vec<&str> = lowered.split_whitespace().collect();
    let mut start = 0;
    while start < tokens.len() && matches!(tokens[start], "a" | "an" | "the") {
        start += 1;
    }
    tokens[start..].join(" ")
}

/// Uppercased alphanumerics only: "(b)." becomes "B".
pub fn normalize_label(s: &str) -> String {
    s.nfc()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_uppercase())
        .collect()
}

/// Soft overlong penalty in [-1, 0]: zero through `l_max - l_cache`, a
/// linear ramp across the cache window, -1 past the cap.
pub fn overlong_penalty(response_length: u32, config: &RewardConfig) -> f64 {
    let safe = config.l_max.saturating_sub(config.l_cache);
    if response_length <= safe {
        0.0
    } else if response_length > config.l_max {
        -1.0
    } else {
        (f64::from(safe) - f64::from(response_length)) / f64::from(config.l_cache)
    }
}

/// Parse, validate, score, and shape one response. Total: malformed
/// responses get `format_fail_reward`, never an error.
///
/// Cue-numbering strictness is always relaxed here; RL rollouts are not
/// penalized for the soft cue conventions.
pub fn compute_reward(
    response_text: &str,
    token_length: u32,
    record: &QuestionRecord,
    config: &RewardConfig,
    pattern_config: &PatternConfig,
) -> RewardBreakdown {
    score_response(response_text, token_length, record, config, pattern_config).0
}

/// Like [`compute_reward`] but also returns the pattern report, for callers
/// that surface violations.
pub fn score_response(
    response_text: &str,
    token_length: u32,
    record: &QuestionRecord,
    config: &RewardConfig,
    pattern_config: &PatternConfig,
) -> (RewardBreakdown, PatternReport) {
    let lenient = PatternConfig {
        strict_cue_numbering: false,
        ..pattern_config.clone()
    };
    let (parsed, report) = pattern::parse_response(response_text, &lenient);
    let accuracy = match pattern::extract_answer(&parsed) {
        Ok(answer) => f64::from(score_answer(&answer, record, config)),
        Err(_) => 0.0,
    };
    let format_ok = report.well_formed;
    let length_penalty = if config.enable_length_shaping {
        overlong_penalty(token_length, config)
    } else {
        0.0
    };
    let total = if format_ok {
        config.w_acc * accuracy + length_penalty
    } else {
        config.format_fail_reward
    };
    let breakdown = RewardBreakdown {
        accuracy,
        format_ok,
        length_penalty,
        total,
        is_equivalent: accuracy == 1.0,
    };
    (breakdown, report)
}

fn score_answer(answer: &str, record: &QuestionRecord, config: &RewardConfig) -> u32 {
    match record.kind {
        QuestionKind::MultipleChoice => {
            score_multiple_choice(answer, record).unwrap_or(0)
        }
        QuestionKind::OpenEnded => score_open_ended(answer, record).unwrap_or(0),
        QuestionKind::Math => {
            let gold = match &record.gold.math_value {
                Some(value) => value.clone(),
                None => match normalize_math_answer(&record.gold.surface) {
                    Ok(value) => value,
                    Err(_) => return 0,
                },
            };
            match normalize_math_answer(answer) {
                Ok(pred) => u32::from(math_equivalent(&pred, &gold, config.float_tol)),
                Err(_) => 0,
            }
        }
    }
}
