//! Synthetic cue-dependent tasks.
//!
//! Each task carries one feature bucket standing in for the visual cue;
//! the gold label is the identity map of the feature, so chance accuracy
//! is exactly 1/F and any accuracy above that is learned signal.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::reward::{Choice, GoldAnswer, QuestionKind, QuestionRecord};

use super::vocab::{CUE_DESCRIPTIONS, LABELS};
use super::SimError;

/// Number of feature buckets (and answer choices).
pub const NUM_FEATURES: usize = 4;

/// One synthetic task: a multiple-choice question whose answer is fully
/// determined by the feature bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub id: String,
    pub feature: usize,
    pub question: QuestionRecord,
}

/// Deterministic stratified suite: features cover [0, F) as evenly as `n`
/// allows, in a seed-shuffled order.
pub fn make_synthetic_suite(seed: u64, n: usize) -> Result<Vec<SyntheticTask>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidConfig(
            "suite size must be at least 1".into(),
        ));
    }
    let mut features: Vec<usize> = (0..n).map(|i| i % NUM_FEATURES).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    features.shuffle(&mut rng);
    Ok(features
        .into_iter()
        .enumerate()
        .map(|(i, feature)| make_task(i, feature))
        .collect())
}

fn make_task(index: usize, feature: usize) -> SyntheticTask {
    let id = format!("task-{index:03}");
    let choices: Vec<Choice> = LABELS
        .iter()
        .zip(CUE_DESCRIPTIONS)
        .map(|(label, text)| Choice {
            label: (*label).to_string(),
            text: text.to_string(),
        })
        .collect();
    let question = QuestionRecord {
        id: id.clone(),
        kind: QuestionKind::MultipleChoice,
        prompt: "Which marker is shown in the image?".to_string(),
        choices,
        gold: GoldAnswer {
            surface: LABELS[feature].to_string(),
            math_value: None,
        },
        image_refs: vec![format!("toy://marker/{feature}")],
    };
    SyntheticTask {
        id,
        feature,
        question,
    }
}

/// Question-id → feature lookup used to bind a policy to a suite.
pub fn feature_map(tasks: &[SyntheticTask]) -> BTreeMap<String, usize> {
    tasks
        .iter()
        .map(|t| (t.id.clone(), t.feature))
        .collect()
}
