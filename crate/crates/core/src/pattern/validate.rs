//! Structured view and violation reporting on top of the lossless
//! segmentation.
//!
//! Everything here is best-effort: fields are populated even when the
//! response is malformed, because reward shaping needs an answer (when one
//! exists) regardless of format validity.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::tokenizer::{segment, TagKind, TagSpan};
use super::PatternConfig;

/// Coded structural findings. A response is well-formed iff none apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// An opener with no matching closer.
    UnclosedTag,
    /// A known tag pair inside a span that must hold plain text, or a
    /// think/answer block inside the think block.
    NestedTag,
    MissingThink,
    MissingAnswer,
    EmptyAnswer,
    /// First occurrences of cue indices are not exactly 1..K in order.
    CueIndexGap,
    /// A cue index repeated before any rethink trigger (strict mode only).
    CueRepeatBeforeTrigger,
    /// A closer with no opener, or a duplicate think/answer/aha block.
    StrayTag,
    /// Answer before think, or a cue/aha outside the think block.
    OrderViolation,
}

impl Violation {
    pub fn code(self) -> &'static str {
        match self {
            Violation::UnclosedTag => "unclosed_tag",
            Violation::NestedTag => "nested_tag",
            Violation::MissingThink => "missing_think",
            Violation::MissingAnswer => "missing_answer",
            Violation::EmptyAnswer => "empty_answer",
            Violation::CueIndexGap => "cue_index_gap",
            Violation::CueRepeatBeforeTrigger => "cue_repeat_before_trigger",
            Violation::StrayTag => "stray_tag",
            Violation::OrderViolation => "order_violation",
        }
    }
}

/// One `<vcues_N>` occurrence inside the think block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisualCue {
    /// The `N` in `<vcues_N>`. Valid responses number cues from 1.
    pub index: u32,
    /// Cue text between the delimiters.
    pub text: String,
    /// 1-based ordinal among cues sharing this index, in document order.
    pub occurrence: u32,
    /// Byte offset of the cue opener in the raw input.
    pub position: usize,
}

/// Best-effort structured view of a response. All offsets are into `raw`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub raw: String,
    pub think: Option<TagSpan>,
    pub answer: Option<TagSpan>,
    pub aha: Option<TagSpan>,
    /// Cues inside the (first) think block, ordered by position.
    pub cues: Vec<VisualCue>,
    /// Byte offset of the detected rethink trigger, if any.
    pub trigger_position: Option<usize>,
}

/// Validity verdicts for one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    pub well_formed: bool,
    pub violations: Vec<Violation>,
    /// Number of distinct cue indices (first occurrences).
    pub cue_count: usize,
    pub has_rethink: bool,
}

impl PatternReport {
    pub fn has(&self, violation: Violation) -> bool {
        self.violations.contains(&violation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("response has no answer block")]
    MissingAnswer,
}

/// Parse a raw response into its structured view plus a validity report.
///
/// Total: never fails on any input. Violations are reported, not thrown,
/// and the parsed view is filled in as far as the structure allows.
pub fn parse_response(text: &str, config: &PatternConfig) -> (ParsedResponse, PatternReport) {
    let seg = segment(text);
    let mut violations = Vec::new();

    for _ in &seg.dangling_opens {
        violations.push(Violation::UnclosedTag);
    }
    for _ in &seg.dangling_closes {
        violations.push(Violation::StrayTag);
    }

    let mut think = None;
    let mut answer = None;
    for span in &seg.spans {
        match span.kind {
            TagKind::Think => {
                if think.is_none() {
                    think = Some(span.clone());
                } else {
                    violations.push(Violation::StrayTag);
                }
            }
            TagKind::Answer => {
                if answer.is_none() {
                    answer = Some(span.clone());
                } else {
                    violations.push(Violation::StrayTag);
                }
            }
            // Cues and aha belong inside the think block.
            TagKind::Vcue(_) | TagKind::Aha => violations.push(Violation::OrderViolation),
            TagKind::Text => {}
        }
    }

    if think.is_none() {
        violations.push(Violation::MissingThink);
    }
    match &answer {
        None => violations.push(Violation::MissingAnswer),
        Some(span) if span.content.trim().is_empty() => violations.push(Violation::EmptyAnswer),
        Some(_) => {}
    }
    if let (Some(t), Some(a)) = (&think, &answer) {
        if a.byte_start < t.byte_end {
            violations.push(Violation::OrderViolation);
        }
        check_inner_text_block(&a.content, &mut violations);
    }

    let mut cues = Vec::new();
    let mut aha = None;
    if let Some(t) = &think {
        let base = t.byte_start + "<think>".len();
        let inner = segment(&t.content);
        for _ in &inner.dangling_opens {
            violations.push(Violation::UnclosedTag);
        }
        for _ in &inner.dangling_closes {
            violations.push(Violation::StrayTag);
        }
        let mut counts: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
        for span in &inner.spans {
            match span.kind {
                TagKind::Text => {}
                TagKind::Think | TagKind::Answer => violations.push(Violation::NestedTag),
                TagKind::Vcue(index) => {
                    check_inner_text_block(&span.content, &mut violations);
                    let occurrence = counts.entry(index).or_insert(0);
                    *occurrence += 1;
                    cues.push(VisualCue {
                        index,
                        text: span.content.clone(),
                        occurrence: *occurrence,
                        position: base + span.byte_start,
                    });
                }
                TagKind::Aha => {
                    check_inner_text_block(&span.content, &mut violations);
                    if aha.is_none() {
                        let mut rebased = span.clone();
                        rebased.byte_start += base;
                        rebased.byte_end += base;
                        aha = Some(rebased);
                    } else if config.strict_cue_numbering {
                        violations.push(Violation::StrayTag);
                    }
                }
            }
        }
    }

    let mut parsed = ParsedResponse {
        raw: text.to_string(),
        think,
        answer,
        aha,
        cues,
        trigger_position: None,
    };
    parsed.trigger_position = detect_rethink_trigger(&parsed, config);

    let first_occurrences: Vec<u32> = parsed
        .cues
        .iter()
        .filter(|c| c.occurrence == 1)
        .map(|c| c.index)
        .collect();
    let expected: Vec<u32> = (1..=first_occurrences.len() as u32).collect();
    if first_occurrences != expected {
        violations.push(Violation::CueIndexGap);
    }
    if config.strict_cue_numbering {
        for cue in parsed.cues.iter().filter(|c| c.occurrence > 1) {
            let before_trigger = match parsed.trigger_position {
                Some(pos) => cue.position < pos,
                None => true,
            };
            if before_trigger {
                violations.push(Violation::CueRepeatBeforeTrigger);
            }
        }
    }

    let report = PatternReport {
        well_formed: violations.is_empty(),
        cue_count: first_occurrences.len(),
        has_rethink: parsed.trigger_position.is_some(),
        violations,
    };
    (parsed, report)
}

/// Flag complete tag pairs inside a span that must hold plain text.
/// Dangling delimiters are left alone: answers like "x < y" are legitimate.
fn check_inner_text_block(content: &str, violations: &mut Vec<Violation>) {
    for span in segment(content).spans {
        if span.kind != TagKind::Text {
            violations.push(Violation::NestedTag);
        }
    }
}

/// Cues inside the think block, ordered by position with occurrence
/// counters filled in.
pub fn extract_cues(parsed: &ParsedResponse) -> &[VisualCue] {
    &parsed.cues
}

/// Locate the rethink trigger: an `<aha>` span wins; otherwise the first
/// think-block sentence whose normalized form contains a configured phrase
/// (unless `require_trigger_tag` disables phrase matching).
pub fn detect_rethink_trigger(parsed: &ParsedResponse, config: &PatternConfig) -> Option<usize> {
    if let Some(aha) = &parsed.aha {
        return Some(aha.byte_start);
    }
    if config.require_trigger_tag {
        return None;
    }
    let think = parsed.think.as_ref()?;
    let base = think.byte_start + "<think>".len();
    let stems: Vec<String> = config
        .trigger_phrases
        .iter()
        .map(|p| normalize_phrase(p))
        .filter(|p| !p.is_empty())
        .collect();
    for (offset, sentence) in sentences(&think.content) {
        let normalized = normalize_phrase(sentence);
        if stems.iter().any(|stem| normalized.contains(stem.as_str())) {
            return Some(base + offset);
        }
    }
    None
}

/// Split into sentences on `.`, `!`, `?`, `;`, and newlines; yields
/// (offset of first non-whitespace byte, sentence text).
fn sentences(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_inclusive(['.', '!', '?', ';', '\n'])
        .scan(0usize, |offset, chunk| {
            let start = *offset;
            *offset += chunk.len();
            let trimmed_start = start + (chunk.len() - chunk.trim_start().len());
            Some((trimmed_start, chunk))
        })
        .filter(|(_, s)| !s.trim().is_empty())
}

/// Lowercase, drop apostrophes, turn other punctuation into spaces, and
/// collapse whitespace, so phrase matching survives the usual wording jitter.
fn normalize_phrase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.nfc() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if c == '\'' || c == '\u{2019}' {
            // apostrophes vanish: "let's" matches "lets"
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The answer text, trimmed, with inner newline runs collapsed to single
/// spaces.
pub fn extract_answer(parsed: &ParsedResponse) -> Result<String, PatternError> {
    let span = parsed.answer.as_ref().ok_or(PatternError::MissingAnswer)?;
    let trimmed = span.content.trim();
    let mut out = String::with_capacity(trimmed.len());
    let mut run = String::new();
    for c in trimmed.chars() {
        if c.is_whitespace() {
            run.push(c);
        } else {
            if !run.is_empty() {
                if run.contains(['\n', '\r']) {
                    out.push(' ');
                } else {
                    out.push_str(&run);
                }
                run.clear();
            }
            out.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::PatternConfig;

    const MINIMAL: &str = "<think>a</think><answer>B</answer>";

    fn parse(text: &str) -> (ParsedResponse, PatternReport) {
        parse_response(text, &PatternConfig::default())
    }

    #[test]
    fn minimal_form_is_well_formed() {
        let (parsed, report) = parse(MINIMAL);
        assert!(report.well_formed, "{:?}", report.violations);
        assert!(!report.has_rethink);
        assert_eq!(report.cue_count, 0);
        assert_eq!(parsed.think.as_ref().unwrap().content, "a");
        assert_eq!(parsed.answer.as_ref().unwrap().content, "B");
    }

    #[test]
    fn missing_answer_reported() {
        let (_, report) = parse("<think>a</think>");
        assert!(report.has(Violation::MissingAnswer));
        assert!(!report.well_formed);
    }

    #[test]
    fn cue_index_gap_reported() {
        let text = "<think><vcues_1>a</vcues_1><vcues_3>b</vcues_3></think><answer>B</answer>";
        let (_, report) = parse(text);
        assert!(report.has(Violation::CueIndexGap));
    }

    #[test]
    fn out_of_order_first_occurrences_are_a_gap() {
        let text = "<think><vcues_2>a</vcues_2><vcues_1>b</vcues_1></think><answer>B</answer>";
        let (_, report) = parse(text);
        assert!(report.has(Violation::CueIndexGap));
    }

    #[test]
    fn cue_occurrences_count_up() {
        let text = "<think><vcues_1>a</vcues_1><vcues_2>b</vcues_2>\
                    <aha>rethink</aha><vcues_1>a'</vcues_1></think><answer>B</answer>";
        let (parsed, report) = parse(text);
        let cues = extract_cues(&parsed);
        assert_eq!(
            cues.iter().map(|c| c.index).collect::<Vec<_>>(),
            vec![1, 2, 1]
        );
        assert_eq!(
            cues.iter().map(|c| c.occurrence).collect::<Vec<_>>(),
            vec![1, 1, 2]
        );
        assert!(report.well_formed, "{:?}", report.violations);
        assert!(report.has_rethink);
        assert_eq!(report.cue_count, 2);
    }

    #[test]
    fn repeat_before_trigger_strict_only() {
        let text = "<think><vcues_1>a</vcues_1><vcues_1>b</vcues_1></think><answer>B</answer>";
        let (_, strict) = parse_response(text, &PatternConfig::strict());
        assert!(strict.has(Violation::CueRepeatBeforeTrigger));
        let (_, lenient) = parse_response(text, &PatternConfig::lenient());
        assert!(!lenient.has(Violation::CueRepeatBeforeTrigger));
        assert!(lenient.well_formed);
    }

    #[test]
    fn aha_trigger_offset() {
        let text = "<think>xx<aha>check</aha>yy</think><answer>B</answer>";
        let (parsed, report) = parse(text);
        assert_eq!(parsed.trigger_position, Some(text.find("<aha>").unwrap()));
        assert!(report.has_rethink);
    }

    #[test]
    fn sentence_trigger_offset() {
        let sentence =
            "Let's check each visual cue and corresponding reasoning before reaching the final answer";
        let text = format!("<think>First pass done. {sentence}. More.</think><answer>B</answer>");
        let (parsed, _) = parse(&text);
        assert_eq!(parsed.trigger_position, Some(text.find("Let's").unwrap()));
    }

    #[test]
    fn paraphrase_stem_triggers() {
        let text = "<think>Now, CHECK each Visual cue! ok</think><answer>B</answer>";
        let (parsed, _) = parse(text);
        assert!(parsed.trigger_position.is_some());
    }

    #[test]
    fn no_trigger_when_absent() {
        let (parsed, report) = parse(MINIMAL);
        assert_eq!(parsed.trigger_position, None);
        assert!(!report.has_rethink);
    }

    #[test]
    fn require_trigger_tag_skips_phrases() {
        let text = "<think>check each visual cue</think><answer>B</answer>";
        let config = PatternConfig {
            require_trigger_tag: true,
            ..PatternConfig::default()
        };
        let (parsed, _) = parse_response(text, &config);
        assert_eq!(parsed.trigger_position, None);
    }

    #[test]
    fn extract_answer_normalizes_whitespace() {
        let (parsed, _) = parse("<think>a</think><answer>\n B \n</answer>");
        assert_eq!(extract_answer(&parsed).unwrap(), "B");
        let (parsed, _) = parse("<think>a</think><answer>1/2</answer>");
        assert_eq!(extract_answer(&parsed).unwrap(), "1/2");
        let (parsed, _) = parse("<think>a</think><answer>two\nlines  kept</answer>");
        assert_eq!(extract_answer(&parsed).unwrap(), "two lines  kept");
        let (parsed, _) = parse("<think>a</think>");
        assert_eq!(extract_answer(&parsed), Err(PatternError::MissingAnswer));
    }

    #[test]
    fn empty_answer_flagged() {
        let (_, report) = parse("<think>a</think><answer> \n </answer>");
        assert!(report.has(Violation::EmptyAnswer));
    }

    #[test]
    fn nested_tags_flagged() {
        let text = "<think><vcues_1><vcues_2>x</vcues_2></vcues_1></think><answer>B</answer>";
        let (_, report) = parse(text);
        assert!(report.has(Violation::NestedTag));
        let text = "<think>a</think><answer><vcues_1>b</vcues_1></answer>";
        let (_, report) = parse(text);
        assert!(report.has(Violation::NestedTag));
    }

    #[test]
    fn order_violations() {
        let (_, report) = parse("<answer>B</answer><think>a</think>");
        assert!(report.has(Violation::OrderViolation));
        let (_, report) = parse("<vcues_1>x</vcues_1><think>a</think><answer>B</answer>");
        assert!(report.has(Violation::OrderViolation));
    }

    #[test]
    fn duplicate_blocks_are_stray() {
        let (_, report) = parse("<think>a</think><think>b</think><answer>B</answer>");
        assert!(report.has(Violation::StrayTag));
    }

    #[test]
    fn unclosed_tag_reported() {
        let (_, report) = parse("<think>a<vcues_1>x</think><answer>B</answer>");
        assert!(report.has(Violation::UnclosedTag));
    }

    #[test]
    fn literal_angle_brackets_in_answer_are_fine() {
        let (parsed, report) = parse("<think>a</think><answer>x < y</answer>");
        assert!(report.well_formed, "{:?}", report.violations);
        assert_eq!(extract_answer(&parsed).unwrap(), "x < y");
    }

    #[test]
    fn totality_on_arbitrary_input() {
        for text in ["", "<", "<<<>>>", "</think>", "<think>", "\u{0}<answer>"] {
            let (_, report) = parse(text);
            assert!(!report.well_formed);
        }
    }
}
