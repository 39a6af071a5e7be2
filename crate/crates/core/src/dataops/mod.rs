//! Annotation-data machinery: corpus ingestion, the three automatic
//! verification checks, selective-formatting curation, and the staged
//! external-annotator chain.
//!
//! Local checks (format, answer consistency) never touch the network.
//! Everything external goes through the [`JudgeTransport`] trait so tests
//! inject mocks and batch runs stay hermetic. Curation in judge-free mode
//! is fully deterministic: same records and config, identical output bytes.

mod curate;
mod records;
mod verify;

pub use curate::{
    classify_flawed_cues, compile_training_sample, curate, render_question_prompt, CompiledSample,
    CueDiff, CurationDecision, CurationOutput, CurationReport, Evidence, FlawReport, Route,
};
pub use records::{load_records, sample_review_subset, LoadedCorpus, SkippedLine};
pub use verify::{
    annotate_chain, verify_answer_consistency, verify_coherence, verify_format, AnnotationStage,
    ChainOutcome, JudgeRequest, JudgeStats, JudgeTransport, TransportError,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::reward::{QuestionRecord, RewardError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("cannot read corpus: {0}")]
    FileUnreadable(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate record ids: {0:?}")]
    DuplicateId(Vec<String>),
    #[error("prerequisite check has not passed for record {0}")]
    PrerequisiteFailed(String),
    #[error("judge unavailable after {attempts} attempts: {last_error}")]
    JudgeUnavailable { attempts: u32, last_error: String },
    #[error("judge reply has no leading 1/0 verdict: {0:?}")]
    UnparseableVerdict(String),
    #[error("annotation stages list is empty")]
    EmptyStages,
    #[error("no stage produced a valid annotation for record {0}")]
    AllStagesFailed(String),
    #[error("record {0} was rejected; nothing to compile")]
    RejectedRoute(String),
    #[error("record {0} has no base response for the full cue-rethinking route")]
    MissingBaseResponse(String),
    #[error("assembled target failed validation: {violations:?}")]
    AssemblyInvalid { violations: Vec<String> },
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// The three automatic verification checks, in evaluation order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    FormatValidation,
    AnswerConsistency,
    ReasoningCoherence,
}

/// Outcome of one verification check on one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub check: CheckKind,
    pub passed: bool,
    /// Coded finding for local checks; the judge's rationale for coherence.
    pub detail: String,
}

/// One step of a record's annotation provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage_name: String,
    pub model_label: String,
    pub timestamp: String,
}

/// One data-pipeline item: a question, its annotated reasoning, optional
/// base-model response, provenance, and verification outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub question: QuestionRecord,
    pub annotation_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_response: Option<String>,
    #[serde(default)]
    pub stage_history: Vec<StageEntry>,
    #[serde(default)]
    pub verification: BTreeMap<CheckKind, VerificationOutcome>,
}

/// External judge endpoint settings. The auth token is referenced by
/// environment-variable name and never written to any file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeClient {
    pub endpoint: String,
    /// Verification prompt with `{question}`, `{gold}`, and `{annotation}`
    /// placeholders.
    pub template: String,
    pub timeout_secs: u64,
    pub retry_budget: u32,
    pub auth_token_env: Option<String>,
}

/// Default coherence-verification template.
pub const DEFAULT_JUDGE_TEMPLATE: &str = "You are given a question, the correct answer, and a \
candidate reasoning trace in <think>/<answer> form. Decide whether the reasoning logically \
supports the final answer. Reply with 1 if it does; otherwise reply with 0 followed by a short \
explanation.\n\nQuestion: {question}\nCorrect answer: {gold}\nResponse: {annotation}";

impl Default for JudgeClient {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            template: DEFAULT_JUDGE_TEMPLATE.to_string(),
            timeout_secs: 30,
            retry_budget: 2,
            auth_token_env: None,
        }
    }
}

/// Default system prompt prepended to compiled training samples.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are answering a visual question. Reason inside \
<think> </think> and give the final answer inside <answer> </answer>. Inside the think block, \
wrap each visual cue you rely on in <vcues_N> </vcues_N> tags numbered from 1. Before \
concluding, check that every cue supports the reasoning; if one does not, revise the cues and \
the reasoning, then conclude.";

/// Curation-pipeline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataopsConfig {
    /// Token-level Jaccard similarity below which a base cue counts as
    /// flawed.
    pub jaccard_threshold: f64,
    /// Upper bound on concurrent external calls.
    pub max_in_flight: usize,
    pub system_prompt: String,
}

impl Default for DataopsConfig {
    fn default() -> Self {
        Self {
            jaccard_threshold: 0.5,
            max_in_flight: 4,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
        }
    }
}
