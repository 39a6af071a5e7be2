//! Line-delimited-JSON corpus ingestion.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::reward::{Choice, GoldAnswer, QuestionKind, QuestionRecord};

use super::{AnnotationRecord, DataError, StageEntry};

/// A corpus line that failed to parse, with why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line_number: usize,
    pub reason: String,
}

/// Parsed corpus plus the lines that had to be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub records: Vec<AnnotationRecord>,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Deserialize)]
struct CorpusLine {
    id: String,
    kind: QuestionKind,
    prompt: String,
    #[serde(default)]
    choices: Vec<Choice>,
    gold: String,
    #[serde(default)]
    image_refs: Vec<String>,
    annotation: String,
    #[serde(default)]
    base_response: Option<String>,
    #[serde(default)]
    stage_history: Vec<StageEntry>,
}

/// Load one record per line. Malformed lines are collected, never fatal;
/// the whole file is always consumed. Duplicate ids are a hard error.
pub fn load_records(path: &Path) -> Result<LoadedCorpus, DataError> {
    let file = std::fs::File::open(path)
        .map_err(|e| DataError::FileUnreadable(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut any_line = false;
    for (index, line) in reader.lines().enumerate() {
        let line_number = index + 1;
        let line = line
            .map_err(|e| DataError::FileUnreadable(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        any_line = true;
        match parse_line(&line) {
            Ok(record) => records.push(record),
            Err(reason) => skipped.push(SkippedLine {
                line_number,
                reason,
            }),
        }
    }
    if !any_line {
        return Err(DataError::EmptyCorpus);
    }

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for record in &records {
        *seen.entry(record.id.as_str()).or_insert(0) += 1;
    }
    let duplicates: Vec<String> = seen
        .into_iter()
        .filter(|(_, count)| *count > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    if !duplicates.is_empty() {
        return Err(DataError::DuplicateId(duplicates));
    }
    Ok(LoadedCorpus { records, skipped })
}

fn parse_line(line: &str) -> Result<AnnotationRecord, String> {
    let parsed: CorpusLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let gold = GoldAnswer::new(parsed.gold, parsed.kind).map_err(|e| e.to_string())?;
    let question = QuestionRecord {
        id: parsed.id.clone(),
        kind: parsed.kind,
        prompt: parsed.prompt,
        choices: parsed.choices,
        gold,
        image_refs: parsed.image_refs,
    };
    question.validate().map_err(|e| e.to_string())?;
    Ok(AnnotationRecord {
        id: parsed.id,
        question,
        annotation_text: parsed.annotation,
        base_response: parsed.base_response,
        stage_history: parsed.stage_history,
        verification: BTreeMap::new(),
    })
}

/// Deterministic random subset for manual review; returns indices in
/// original corpus order. `fraction` is clamped to [0, 1].
pub fn sample_review_subset(
    records: &[AnnotationRecord],
    fraction: f64,
    seed: u64,
) -> Vec<usize> {
    let fraction = fraction.clamp(0.0, 1.0);
    let take = (records.len() as f64 * fraction).ceil() as usize;
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(take).collect();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn valid_line(id: &str) -> String {
        format!(
            r#"{{"id":"{id}","kind":"multiple_choice","prompt":"Which?","choices":[{{"label":"A","text":"first"}},{{"label":"B","text":"second"}}],"gold":"B","image_refs":["img://1"],"annotation":"<think>x</think><answer>B</answer>"}}"#
        )
    }

    fn write_corpus(lines: &[String]) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(file, "{line}").unwrap();
        }
        file
    }

    #[test]
    fn partitions_by_parseability() {
        let file = write_corpus(&[
            valid_line("a"),
            "{not json".to_string(),
            valid_line("b"),
        ]);
        let corpus = load_records(file.path()).unwrap();
        assert_eq!(corpus.records.len(), 2);
        assert_eq!(corpus.skipped.len(), 1);
        assert_eq!(corpus.skipped[0].line_number, 2);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let file = write_corpus(&[]);
        assert_eq!(load_records(file.path()), Err(DataError::EmptyCorpus));
    }

    #[test]
    fn duplicate_ids_are_fatal() {
        let file = write_corpus(&[valid_line("a"), valid_line("a")]);
        match load_records(file.path()) {
            Err(DataError::DuplicateId(ids)) => assert_eq!(ids, vec!["a".to_string()]),
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_records(Path::new("/nonexistent/corpus.jsonl")).unwrap_err();
        assert!(matches!(err, DataError::FileUnreadable(_)));
    }

    #[test]
    fn math_gold_must_normalize() {
        let line = r#"{"id":"m","kind":"math","prompt":"?","gold":"  ","image_refs":[],"annotation":"<think>x</think><answer>1</answer>"}"#;
        let file = write_corpus(&[line.to_string(), valid_line("ok")]);
        let corpus = load_records(file.path()).unwrap();
        assert_eq!(corpus.records.len(), 1);
        assert_eq!(corpus.skipped.len(), 1);
    }

    #[test]
    fn mc_gold_must_be_a_choice() {
        let line = r#"{"id":"x","kind":"multiple_choice","prompt":"?","choices":[{"label":"A","text":"t"}],"gold":"Z","image_refs":[],"annotation":"a"}"#;
        let file = write_corpus(&[line.to_string(), valid_line("ok")]);
        let corpus = load_records(file.path()).unwrap();
        assert_eq!(corpus.records.len(), 1);
        assert_eq!(corpus.skipped.len(), 1);
    }

    #[test]
    fn review_subset_is_deterministic() {
        let file = write_corpus(&(0..20).map(|i| valid_line(&format!("r{i}"))).collect::<Vec<_>>());
        let corpus = load_records(file.path()).unwrap();
        let a = sample_review_subset(&corpus.records, 0.15, 7);
        let b = sample_review_subset(&corpus.records, 0.15, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3); // ceil(20 * 0.15)
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
