//! Locating classifier-returned segment strings inside their source sentence.
//!
//! The classification prompt returns strings, not offsets, so each string is
//! matched back to a character span: exact match after whitespace
//! normalization first, then a best contiguous word-window match accepted at
//! normalized similarity >= 0.85. Strings that cannot be located are reported
//! as failures, never guessed.

use super::{ClassifiedSentence, Segment, SegmentLabel};

pub const FUZZY_SIMILARITY_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentFailure {
    pub label: SegmentLabel,
    pub returned_text: String,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureReason {
    /// No exact or fuzzy match reached the similarity threshold.
    NotFound,
    /// Matched, but an earlier-starting (or longer) segment claimed the span.
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentOutcome {
    pub segments: Vec<Segment>,
    pub failures: Vec<AlignmentFailure>,
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Finds `needle` in `haystack` treating every whitespace run as equivalent.
/// Returns the byte range in the original haystack.
fn find_normalized(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let needle = normalize(needle);
    if needle.is_empty() {
        return None;
    }
    let hay: Vec<(usize, char)> = haystack.char_indices().collect();
    let ned: Vec<char> = needle.chars().collect();
    'outer: for start_idx in 0..hay.len() {
        if hay[start_idx].1.is_whitespace() {
            continue;
        }
        let mut hi = start_idx;
        let mut ni = 0;
        while ni < ned.len() {
            if hi >= hay.len() {
                continue 'outer;
            }
            let hc = hay[hi].1;
            let nc = ned[ni];
            if nc == ' ' {
                // one needle space consumes a whole whitespace run
                if !hc.is_whitespace() {
                    continue 'outer;
                }
                while hi < hay.len() && hay[hi].1.is_whitespace() {
                    hi += 1;
                }
                ni += 1;
            } else if hc == nc {
                hi += 1;
                ni += 1;
            } else {
                continue 'outer;
            }
        }
        let end = if hi < hay.len() {
            hay[hi].0
        } else {
            haystack.len()
        };
        return Some((hay[start_idx].0, end));
    }
    None
}

/// Best word-aligned window by normalized Levenshtein similarity.
fn fuzzy_find(haystack: &str, needle: &str) -> Option<(usize, usize, f64)> {
    let norm_needle = normalize(needle);
    if norm_needle.is_empty() {
        return None;
    }
    // word start/end byte offsets
    let mut words: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in haystack.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                words.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        words.push((s, haystack.len()));
    }
    let needle_words = norm_needle.split(' ').count();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..words.len() {
        // windows within +/- 2 words of the needle length keep this cheap
        let lo = needle_words.saturating_sub(2).max(1);
        let hi = needle_words + 2;
        for len in lo..=hi {
            if i + len > words.len() {
                break;
            }
            let (s, e) = (words[i].0, words[i + len - 1].1);
            let candidate = normalize(&haystack[s..e]);
            let sim = strsim::normalized_levenshtein(&candidate, &norm_needle);
            let better = match best {
                None => sim >= FUZZY_SIMILARITY_THRESHOLD,
                Some((bs, be, bsim)) => {
                    sim >= FUZZY_SIMILARITY_THRESHOLD
                        && (sim > bsim || (sim == bsim && (s, usize::MAX - (e - s)) < (bs, usize::MAX - (be - bs))))
                }
            };
            if better {
                best = Some((s, e, sim));
            }
        }
    }
    best
}

/// Aligns every classified string of one sentence to report-level spans.
///
/// `sentence_offset` is the sentence's start byte in the full report.
/// Overlaps between located segments are resolved earliest-start-then-longest;
/// losers are reported as failures.
pub fn align_segments(
    sentence: &str,
    sentence_offset: usize,
    sentence_index: usize,
    classified: &ClassifiedSentence,
) -> AlignmentOutcome {
    let mut located: Vec<Segment> = Vec::new();
    let mut failures = Vec::new();
    for (label, strings) in classified.by_label() {
        for s in strings {
            if normalize(s).is_empty() {
                continue;
            }
            let found = find_normalized(sentence, s)
                .or_else(|| fuzzy_find(sentence, s).map(|(a, b, _)| (a, b)));
            match found {
                Some((start, end)) => located.push(Segment {
                    label,
                    text: sentence[start..end].to_string(),
                    start: sentence_offset + start,
                    end: sentence_offset + end,
                    sentence_index,
                }),
                None => failures.push(AlignmentFailure {
                    label,
                    returned_text: s.clone(),
                    reason: FailureReason::NotFound,
                }),
            }
        }
    }
    // earliest start wins; on equal starts the longer segment wins
    located.sort_by_key(|s| (s.start, usize::MAX - (s.end - s.start)));
    let mut kept: Vec<Segment> = Vec::new();
    for seg in located {
        if kept.last().is_none_or(|last| seg.start >= last.end) {
            kept.push(seg);
        } else {
            failures.push(AlignmentFailure {
                label: seg.label,
                returned_text: seg.text,
                reason: FailureReason::Overlap,
            });
        }
    }
    AlignmentOutcome {
        segments: kept,
        failures,
    }
}
