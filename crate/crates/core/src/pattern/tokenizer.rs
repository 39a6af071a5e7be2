//! Lossless tag segmentation.
//!
//! Single pass, no recursion: a lexer finds exactly-delimited tag tokens,
//! then a matcher pairs each opener with the nearest closer of the same
//! kind. Everything else — unknown tags, unmatched delimiters, malformed
//! indices — stays plain text.

use std::collections::{BTreeMap, VecDeque};

/// The five span kinds of the tag grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TagKind {
    Think,
    Answer,
    /// A tagged visual cue; the index is the `N` in `<vcues_N>`.
    Vcue(u32),
    Aha,
    Text,
}

/// One contiguous piece of the input.
///
/// For tag kinds, `byte_start..byte_end` covers the delimiters and
/// `content` is the inner text; for `Text` the two coincide. Spans are
/// non-overlapping, sorted by `byte_start`, and tile the input, so
/// [`render_spans`] reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSpan {
    pub kind: TagKind,
    pub byte_start: usize,
    pub byte_end: usize,
    pub content: String,
}

impl TagSpan {
    /// Re-render this span exactly as it appeared in the input.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.byte_end - self.byte_start);
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self.kind {
            TagKind::Text => out.push_str(&self.content),
            TagKind::Think => {
                out.push_str("<think>");
                out.push_str(&self.content);
                out.push_str("</think>");
            }
            TagKind::Answer => {
                out.push_str("<answer>");
                out.push_str(&self.content);
                out.push_str("</answer>");
            }
            TagKind::Aha => {
                out.push_str("<aha>");
                out.push_str(&self.content);
                out.push_str("</aha>");
            }
            TagKind::Vcue(index) => {
                out.push_str("<vcues_");
                out.push_str(&index.to_string());
                out.push('>');
                out.push_str(&self.content);
                out.push_str("</vcues_");
                out.push_str(&index.to_string());
                out.push('>');
            }
        }
    }
}

/// Concatenate the verbatim renderings of a span list.
pub fn render_spans(spans: &[TagSpan]) -> String {
    let mut out = String::new();
    for span in spans {
        span.render_into(&mut out);
    }
    out
}

/// Segment raw text into an ordered, lossless span list.
///
/// Total: never fails on any UTF-8 input. Unknown angle-bracket sequences,
/// unmatched openers, and stray closers all become plain text.
pub fn tokenize_tags(text: &str) -> Vec<TagSpan> {
    segment(text).spans
}

/// Tag name as it appears in a delimiter, used during lexing/matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum TagName {
    Think,
    Answer,
    Aha,
    Vcue(u32),
}

impl TagName {
    fn kind(self) -> TagKind {
        match self {
            TagName::Think => TagKind::Think,
            TagName::Answer => TagKind::Answer,
            TagName::Aha => TagKind::Aha,
            TagName::Vcue(i) => TagKind::Vcue(i),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum LexKind {
    Open(TagName),
    Close(TagName),
}

#[derive(Debug, Clone, Copy)]
struct Lexeme {
    kind: LexKind,
    start: usize,
    end: usize,
}

/// Segmentation result with the delimiters that failed to pair up; the
/// validator turns those into violations.
pub(crate) struct Segmentation {
    pub spans: Vec<TagSpan>,
    /// Openers with no matching closer, as (name, byte offset).
    pub dangling_opens: Vec<(TagName, usize)>,
    /// Closers with no matching opener, as (name, byte offset).
    pub dangling_closes: Vec<(TagName, usize)>,
}

pub(crate) fn segment(text: &str) -> Segmentation {
    let lexemes = lex(text);

    // Queue of closer lexeme indices per tag name, so each opener finds its
    // closer in amortized constant time instead of rescanning.
    let mut closers: BTreeMap<TagName, VecDeque<usize>> = BTreeMap::new();
    for (i, lexeme) in lexemes.iter().enumerate() {
        if let LexKind::Close(name) = lexeme.kind {
            closers.entry(name).or_default().push_back(i);
        }
    }

    let mut spans = Vec::new();
    let mut dangling_opens = Vec::new();
    let mut dangling_closes = Vec::new();
    let mut text_start = 0usize;
    let mut li = 0usize;
    while li < lexemes.len() {
        let lexeme = lexemes[li];
        match lexeme.kind {
            LexKind::Close(name) => {
                // Reached at top level: no opener claimed it.
                dangling_closes.push((name, lexeme.start));
                li += 1;
            }
            LexKind::Open(name) => {
                let queue = closers.entry(name).or_default();
                while queue.front().is_some_and(|&c| c <= li) {
                    queue.pop_front();
                }
                match queue.pop_front() {
                    Some(cj) => {
                        let close = lexemes[cj];
                        push_text(&mut spans, text, text_start, lexeme.start);
                        spans.push(TagSpan {
                            kind: name.kind(),
                            byte_start: lexeme.start,
                            byte_end: close.end,
                            content: text[lexeme.end..close.start].to_string(),
                        });
                        text_start = close.end;
                        li = cj + 1;
                    }
                    None => {
                        dangling_opens.push((name, lexeme.start));
                        li += 1;
                    }
                }
            }
        }
    }
    push_text(&mut spans, text, text_start, text.len());

    Segmentation {
        spans,
        dangling_opens,
        dangling_closes,
    }
}

fn push_text(spans: &mut Vec<TagSpan>, text: &str, start: usize, end: usize) {
    if start < end {
        spans.push(TagSpan {
            kind: TagKind::Text,
            byte_start: start,
            byte_end: end,
            content: text[start..end].to_string(),
        });
    }
}

fn lex(text: &str) -> Vec<Lexeme> {
    let bytes = text.as_bytes();
    let mut lexemes = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        match lex_tag_at(bytes, i) {
            Some(lexeme) => {
                i = lexeme.end;
                lexemes.push(lexeme);
            }
            None => i += 1,
        }
    }
    lexemes
}

/// Try to read one exactly-delimited tag starting at `start` (a `<`).
fn lex_tag_at(bytes: &[u8], start: usize) -> Option<Lexeme> {
    let mut pos = start + 1;
    let closing = bytes.get(pos) == Some(&b'/');
    if closing {
        pos += 1;
    }
    let name = lex_name(bytes, &mut pos)?;
    if bytes.get(pos) != Some(&b'>') {
        return None;
    }
    let end = pos + 1;
    let kind = if closing {
        LexKind::Close(name)
    } else {
        LexKind::Open(name)
    };
    Some(Lexeme { kind, start, end })
}

fn lex_name(bytes: &[u8], pos: &mut usize) -> Option<TagName> {
    for (literal, name) in [
        (&b"think"[..], TagName::Think),
        (&b"answer"[..], TagName::Answer),
        (&b"aha"[..], TagName::Aha),
    ] {
        if bytes[*pos..].starts_with(literal) {
            *pos += literal.len();
            return Some(name);
        }
    }
    if bytes[*pos..].starts_with(b"vcues_") {
        let digits_start = *pos + b"vcues_".len();
        let mut digits_end = digits_start;
        while bytes.get(digits_end).is_some_and(u8::is_ascii_digit) {
            digits_end += 1;
        }
        let digits = &bytes[digits_start..digits_end];
        if digits.is_empty() || (digits.len() > 1 && digits[0] == b'0') {
            return None;
        }
        // Safe: digits is pure ASCII.
        let index: u32 = std::str::from_utf8(digits).ok()?.parse().ok()?;
        *pos = digits_end;
        return Some(TagName::Vcue(index));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(spans: &[TagSpan]) -> Vec<TagKind> {
        spans.iter().map(|s| s.kind).collect()
    }

    #[test]
    fn minimal_valid_form() {
        let spans = tokenize_tags("<think>a</think><answer>B</answer>");
        assert_eq!(kinds(&spans), vec![TagKind::Think, TagKind::Answer]);
        assert_eq!(spans[0].content, "a");
        assert_eq!(spans[1].content, "B");
    }

    #[test]
    fn empty_input() {
        assert!(tokenize_tags("").is_empty());
    }

    #[test]
    fn single_cue_segmentation() {
        let spans = tokenize_tags("x <vcues_1>red sign</vcues_1> y");
        assert_eq!(
            kinds(&spans),
            vec![TagKind::Text, TagKind::Vcue(1), TagKind::Text]
        );
        assert_eq!(spans[0].content, "x ");
        assert_eq!(spans[1].content, "red sign");
        assert_eq!(spans[2].content, " y");
    }

    #[test]
    fn unknown_tags_stay_text() {
        let spans = tokenize_tags("<bold>x</bold>");
        assert_eq!(kinds(&spans), vec![TagKind::Text]);
        assert_eq!(spans[0].content, "<bold>x</bold>");
    }

    #[test]
    fn unmatched_delimiters_stay_text() {
        let spans = tokenize_tags("<think>no closer");
        assert_eq!(kinds(&spans), vec![TagKind::Text]);
        let spans = tokenize_tags("no opener</answer>");
        assert_eq!(kinds(&spans), vec![TagKind::Text]);
    }

    #[test]
    fn vcue_index_grammar() {
        assert_eq!(
            kinds(&tokenize_tags("<vcues_0>x</vcues_0>")),
            vec![TagKind::Vcue(0)]
        );
        // Leading zeros are not canonical digits, so not a tag.
        assert_eq!(
            kinds(&tokenize_tags("<vcues_01>x</vcues_01>")),
            vec![TagKind::Text]
        );
        // Index overflow falls back to text.
        assert_eq!(
            kinds(&tokenize_tags("<vcues_4294967296>x</vcues_4294967296>")),
            vec![TagKind::Text]
        );
        // Closer index must match the opener.
        let spans = tokenize_tags("<vcues_1>x</vcues_2>");
        assert_eq!(kinds(&spans), vec![TagKind::Text]);
    }

    #[test]
    fn mismatched_pair_spans_verbatim() {
        let input = "<vcues_1>a</vcues_2>b</vcues_1>";
        let spans = tokenize_tags(input);
        assert_eq!(kinds(&spans), vec![TagKind::Vcue(1)]);
        assert_eq!(spans[0].content, "a</vcues_2>b");
        assert_eq!(render_spans(&spans), input);
    }

    #[test]
    fn roundtrip_samples() {
        for input in [
            "",
            "plain",
            "<think>a</think><answer>B</answer>",
            "x <vcues_1>red sign</vcues_1> y",
            "<think>a<think>b</think>c</think>",
            "< think><THINK><vcues_>$<vcues_1x>",
            "nested <vcues_3><vcues_3>deep</vcues_3></vcues_3>",
            "unicode ❄ <answer>α</answer> 日本語",
        ] {
            assert_eq!(render_spans(&tokenize_tags(input)), input, "{input:?}");
        }
    }

    #[test]
    fn spans_tile_input() {
        let input = "a<think>b</think>c<answer>d</answer>";
        let spans = tokenize_tags(input);
        let mut cursor = 0;
        for span in &spans {
            assert_eq!(span.byte_start, cursor);
            assert!(span.byte_end > span.byte_start);
            cursor = span.byte_end;
        }
        assert_eq!(cursor, input.len());
    }

    #[test]
    fn pathological_opener_run_is_linear_and_total() {
        let input = "<think>".repeat(20_000);
        let spans = tokenize_tags(&input);
        assert_eq!(render_spans(&spans), input);
    }
}
