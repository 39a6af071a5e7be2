//! The symbolic vocabulary of the toy environment.
//!
//! Each symbol renders to a text fragment; a response is the plain
//! concatenation of its sampled symbols' fragments. The vocabulary carries
//! just enough structure to express one well-formed response — tag openers
//! and closers, cue contents, filler reasoning, answer labels — and the
//! format reward has to shape sequences toward it.

/// Symbol indices. Keep in sync with [`ToyVocab::standard`].
pub mod symbols {
    pub const THINK_OPEN: u32 = 0;
    pub const THINK_CLOSE: u32 = 1;
    pub const ANSWER_OPEN: u32 = 2;
    pub const ANSWER_CLOSE: u32 = 3;
    pub const VCUE1_OPEN: u32 = 4;
    pub const VCUE1_CLOSE: u32 = 5;
    pub const VCUE2_OPEN: u32 = 6;
    pub const VCUE2_CLOSE: u32 = 7;
    pub const AHA_OPEN: u32 = 8;
    pub const AHA_CLOSE: u32 = 9;
    /// Cue description for feature f is `CUE_TEXT + f`.
    pub const CUE_TEXT: u32 = 10;
    /// Answer label for feature f is `LABEL + f`.
    pub const LABEL: u32 = 14;
    pub const FILLER_LOOK: u32 = 18;
    pub const FILLER_REASON: u32 = 19;
    pub const TRIGGER: u32 = 20;
    pub const FILLER_CONFIRM: u32 = 21;
    pub const SPACE: u32 = 22;
    pub const PERIOD: u32 = 23;
}

/// Ordered list of template fragments; rendering is injective per symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyVocab {
    renders: Vec<&'static str>,
}

/// Cue descriptions per feature, shared with the synthetic tasks' choices.
pub const CUE_DESCRIPTIONS: [&str; 4] = [
    "the marker is square",
    "the marker is round",
    "the marker is striped",
    "the marker is dotted",
];

/// Answer labels per feature.
pub const LABELS: [&str; 4] = ["A", "B", "C", "D"];

impl ToyVocab {
    /// The standard 24-symbol vocabulary.
    pub fn standard() -> Self {
        let renders = vec![
            "<think>",
            "</think>",
            "<answer>",
            "</answer>",
            "<vcues_1>",
            "</vcues_1>",
            "<vcues_2>",
            "</vcues_2>",
            "<aha>",
            "</aha>",
            CUE_DESCRIPTIONS[0],
            CUE_DESCRIPTIONS[1],
            CUE_DESCRIPTIONS[2],
            CUE_DESCRIPTIONS[3],
            LABELS[0],
            LABELS[1],
            LABELS[2],
            LABELS[3],
            "I examine the scene. ",
            "This points to the answer. ",
            "Let's check each visual cue and corresponding reasoning before \
             reaching the final answer. ",
            "The cue holds up. ",
            " ",
            ".",
        ];
        debug_assert_eq!(renders.len(), 24);
        Self { renders }
    }

    pub fn size(&self) -> usize {
        self.renders.len()
    }

    pub fn render_symbol(&self, symbol: u32) -> &str {
        self.renders
            .get(symbol as usize)
            .copied()
            .unwrap_or_default()
    }
}

/// Concatenate the fragment renderings of a symbol sequence. Malformed
/// sequences render malformed text; shaping that away is the trainer's job.
pub fn render_response(tokens: &[u32], vocab: &ToyVocab) -> String {
    let mut out = String::new();
    for &token in tokens {
        out.push_str(vocab.render_symbol(token));
    }
    out
}

/// The 12-symbol sequence that renders one well-formed response with a
/// single `<vcues_1>` cue and the correct label for `feature`.
pub fn golden_sequence(feature: usize) -> Vec<u32> {
    use symbols::*;
    vec![
        THINK_OPEN,
        FILLER_LOOK,
        VCUE1_OPEN,
        CUE_TEXT + feature as u32,
        VCUE1_CLOSE,
        FILLER_REASON,
        FILLER_CONFIRM,
        THINK_CLOSE,
        ANSWER_OPEN,
        LABEL + feature as u32,
        ANSWER_CLOSE,
        PERIOD,
    ]
}
