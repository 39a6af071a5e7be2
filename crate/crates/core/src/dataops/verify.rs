//! The three automatic verification checks and the staged annotator chain.
//!
//! Format validation and answer consistency are local and cheap. Reasoning
//! coherence calls an external judge through [`JudgeTransport`]; the
//! transport is injectable so the whole pipeline tests hermetically.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::pattern::{self, PatternConfig};
use crate::reward::{compute_reward, RewardConfig};

use super::{AnnotationRecord, CheckKind, DataError, JudgeClient, StageEntry, VerificationOutcome};

/// Wire body for one judge or annotator call.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct JudgeRequest {
    pub template_id: String,
    pub question: String,
    pub gold: String,
    pub annotation: String,
    pub image_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("transport failure: {0}")]
    Failed(String),
    #[error("timed out after {0} seconds")]
    TimedOut(u64),
}

/// One external round trip; implementations carry endpoint, timeout, and
/// auth handling. Mock implementations drive all tests.
pub trait JudgeTransport {
    fn send(&self, request: &JudgeRequest) -> Result<String, TransportError>;
}

/// Counters across external calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct JudgeStats {
    pub calls: u32,
    pub retries: u32,
    pub failures: u32,
}

/// Passed iff the annotation parses well-formed under strict cue numbering
/// with a non-empty answer. Never calls out.
pub fn verify_format(record: &AnnotationRecord) -> VerificationOutcome {
    let (_, report) = pattern::parse_response(&record.annotation_text, &PatternConfig::strict());
    let detail = if report.well_formed {
        "ok".to_string()
    } else {
        report
            .violations
            .iter()
            .map(|v| v.code())
            .collect::<Vec<_>>()
            .join(",")
    };
    VerificationOutcome {
        check: CheckKind::FormatValidation,
        passed: report.well_formed,
        detail,
    }
}

/// Passed iff the annotation's answer is equivalent to the gold answer.
/// Requires a recorded passing format check.
pub fn verify_answer_consistency(
    record: &AnnotationRecord,
) -> Result<VerificationOutcome, DataError> {
    require_passed(record, CheckKind::FormatValidation)?;
    let breakdown = compute_reward(
        &record.annotation_text,
        0,
        &record.question,
        &RewardConfig::default(),
        &PatternConfig::strict(),
    );
    Ok(VerificationOutcome {
        check: CheckKind::AnswerConsistency,
        passed: breakdown.is_equivalent,
        detail: if breakdown.is_equivalent {
            "ok".to_string()
        } else {
            "answer_mismatch".to_string()
        },
    })
}

/// Send the record to the judge and parse the leading 1/0 verdict.
/// Requires both local checks to have passed. Transport failures are
/// retried up to the client's budget.
pub fn verify_coherence(
    record: &AnnotationRecord,
    client: &JudgeClient,
    transport: &dyn JudgeTransport,
    stats: &mut JudgeStats,
) -> Result<VerificationOutcome, DataError> {
    require_passed(record, CheckKind::FormatValidation)?;
    require_passed(record, CheckKind::AnswerConsistency)?;

    let request = JudgeRequest {
        template_id: "coherence".to_string(),
        question: record.question.prompt.clone(),
        gold: record.question.gold.surface.clone(),
        annotation: record.annotation_text.clone(),
        image_refs: record.question.image_refs.clone(),
    };
    let reply = send_with_retries(client, transport, &request, stats)?;
    let (passed, rationale) = parse_verdict(&reply)?;
    Ok(VerificationOutcome {
        check: CheckKind::ReasoningCoherence,
        passed,
        detail: rationale,
    })
}

fn require_passed(record: &AnnotationRecord, check: CheckKind) -> Result<(), DataError> {
    match record.verification.get(&check) {
        Some(outcome) if outcome.passed => Ok(()),
        _ => Err(DataError::PrerequisiteFailed(record.id.clone())),
    }
}

fn send_with_retries(
    client: &JudgeClient,
    transport: &dyn JudgeTransport,
    request: &JudgeRequest,
    stats: &mut JudgeStats,
) -> Result<String, DataError> {
    let attempts = client.retry_budget.max(1);
    let mut last_error = String::new();
    for attempt in 0..attempts {
        stats.calls += 1;
        if attempt > 0 {
            stats.retries += 1;
        }
        match transport.send(request) {
            Ok(reply) => return Ok(reply),
            Err(e) => last_error = e.to_string(),
        }
    }
    stats.failures += 1;
    Err(DataError::JudgeUnavailable {
        attempts,
        last_error,
    })
}

/// Accepts exactly a leading "1" or "0" token; the remainder is the
/// rationale.
fn parse_verdict(reply: &str) -> Result<(bool, String), DataError> {
    let trimmed = reply.trim_start();
    let mut parts = trimmed.splitn(2, char::is_whitespace);
    let verdict = parts.next().unwrap_or_default();
    let rationale = parts.next().unwrap_or_default().trim().to_string();
    match verdict {
        "1" => Ok((true, rationale)),
        "0" => Ok((false, rationale)),
        _ => Err(DataError::UnparseableVerdict(reply.to_string())),
    }
}

/// One step of the iterative annotation chain.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AnnotationStage {
    pub name: String,
    pub model_label: String,
    pub endpoint: String,
    /// Prompt template forwarded as the request's template id.
    pub template: String,
}

/// Result of running a record through the annotation chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    pub record: AnnotationRecord,
    pub warnings: Vec<String>,
    pub stats: JudgeStats,
}

/// Feed the record through each stage in order, replacing the annotation
/// with every output that passes strict format validation. A stage whose
/// output fails validation (or whose transport fails) is retried once,
/// then skipped with a recorded warning.
pub fn annotate_chain(
    record: AnnotationRecord,
    stages: &[AnnotationStage],
    transport: &dyn JudgeTransport,
) -> Result<ChainOutcome, DataError> {
    if stages.is_empty() {
        return Err(DataError::EmptyStages);
    }
    let mut record = record;
    let mut warnings = Vec::new();
    let mut stats = JudgeStats::default();
    let mut any_accepted = false;
    for stage in stages {
        let request = JudgeRequest {
            template_id: stage.template.clone(),
            question: record.question.prompt.clone(),
            gold: record.question.gold.surface.clone(),
            annotation: record.annotation_text.clone(),
            image_refs: record.question.image_refs.clone(),
        };
        let mut accepted = false;
        for attempt in 0..2 {
            stats.calls += 1;
            if attempt > 0 {
                stats.retries += 1;
            }
            let reply = match transport.send(&request) {
                Ok(reply) => reply,
                Err(e) => {
                    warnings.push(format!("stage {}: transport failed: {e}", stage.name));
                    continue;
                }
            };
            let outcome = verify_format(&AnnotationRecord {
                annotation_text: reply.clone(),
                ..record.clone()
            });
            if outcome.passed {
                record.annotation_text = reply;
                record.stage_history.push(StageEntry {
                    stage_name: stage.name.clone(),
                    model_label: stage.model_label.clone(),
                    timestamp: unix_timestamp(),
                });
                accepted = true;
                any_accepted = true;
                break;
            }
            warnings.push(format!(
                "stage {}: output failed format validation ({})",
                stage.name, outcome.detail
            ));
        }
        if !accepted {
            stats.failures += 1;
            warnings.push(format!("stage {}: skipped", stage.name));
        }
    }
    if !any_accepted {
        return Err(DataError::AllStagesFailed(record.id));
    }
    Ok(ChainOutcome {
        record,
        warnings,
        stats,
    })
}

fn unix_timestamp() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default()
}
