//! Rule-based sentence splitting with abbreviation and number guards.

use std::ops::Range;

/// One sentence and its byte span in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub text: String,
    pub span: Range<usize>,
}

/// Words that end with a period without ending a sentence. Lowercased,
/// period excluded. Single letters are guarded separately (initials, "U.S.").
const ABBREVIATIONS: &[&str] = &[
    "inc", "corp", "co", "ltd", "llc", "plc", "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st",
    "no", "vs", "etc", "approx", "fig", "vol", "jan", "feb", "mar", "apr", "jun", "jul", "aug",
    "sep", "sept", "oct", "nov", "dec", "e.g", "i.e", "u.s", "u.k",
];

fn is_abbreviation(word: &str) -> bool {
    let w = word.to_ascii_lowercase();
    if w.len() == 1 && w.chars().all(|c| c.is_ascii_alphabetic()) {
        return true;
    }
    ABBREVIATIONS.contains(&w.as_str())
}

/// The word immediately before byte index `i`, including internal periods so
/// "e.g." and "U.S." survive as single tokens.
fn word_before(text: &str, i: usize) -> &str {
    let bytes = text.as_bytes();
    let mut start = i;
    while start > 0 {
        let c = bytes[start - 1] as char;
        if c.is_ascii_alphanumeric() || c == '.' || c == '&' || c == '\'' {
            start -= 1;
        } else {
            break;
        }
    }
    text[start..i].trim_matches('.')
}

/// Splits text into sentences on terminal punctuation.
///
/// A period is a boundary only when it is not between two digits, the word
/// before it is not a known abbreviation or single letter, and the next
/// non-space character starts an uppercase or digit token (or the text ends).
/// Spans index into the original text; concatenating spans and the gaps
/// between them reconstructs the input.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    let bytes = text.as_bytes();
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;

    let push = |s: usize, e: usize, out: &mut Vec<SentenceSpan>| {
        if e > s {
            out.push(SentenceSpan {
                text: text[s..e].to_string(),
                span: s..e,
            });
        }
    };

    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if start.is_none() && !c.is_whitespace() {
            start = Some(i);
        }
        let terminal = matches!(c, '.' | '!' | '?');
        if terminal && start.is_some() {
            let prev_digit = i > 0 && (bytes[i - 1] as char).is_ascii_digit();
            let next_digit = i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit();
            let decimal_guard = c == '.' && prev_digit && next_digit;
            let abbrev_guard = c == '.' && is_abbreviation(word_before(text, i));

            // consume any run of closing punctuation (e.g. `."`, `.)`)
            let mut end = i + 1;
            while end < bytes.len() && matches!(bytes[end] as char, '"' | '\'' | ')' | ']') {
                end += 1;
            }
            let mut j = end;
            while j < bytes.len() && (bytes[j] as char).is_whitespace() {
                j += 1;
            }
            let at_eof = j >= bytes.len();
            let next_starts_sentence = at_eof || {
                let nc = text[j..].chars().next().unwrap();
                nc.is_uppercase() || nc.is_ascii_digit() || nc == '"' || nc == '('
            };
            let boundary = if c == '.' {
                !decimal_guard && !abbrev_guard && (j > end || at_eof) && next_starts_sentence
            } else {
                at_eof || j > end
            };
            if boundary {
                push(start.unwrap(), end, &mut sentences);
                start = None;
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        // trailing text without terminal punctuation
        let e = text.trim_end().len();
        push(s, e.max(s), &mut sentences);
    }
    sentences
}
