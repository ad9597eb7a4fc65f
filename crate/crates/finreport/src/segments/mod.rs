//! Segment-source classification of report sentences and everything built on
//! top of it: span alignment, highlighted rendering, and category statistics.

mod align;
mod classify;
mod html;
mod split;

pub use align::{align_segments, AlignmentFailure, AlignmentOutcome};
pub use classify::{
    build_classification_prompt, classify_sentence, parse_classification, ClassifiedSentence,
    CLASSIFICATION_TEMPLATE,
};
pub use html::render_html;
pub use split::{split_sentences, SentenceSpan};

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source category of a report segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentLabel {
    /// Directly cites values, dates, or trends from the input series.
    Dr,
    /// Inference from the observed data alone.
    Fi,
    /// Context from outside the input series.
    Ek,
}

impl SegmentLabel {
    pub const ALL: [SegmentLabel; 3] = [SegmentLabel::Dr, SegmentLabel::Fi, SegmentLabel::Ek];

    pub fn index(self) -> usize {
        match self {
            SegmentLabel::Dr => 0,
            SegmentLabel::Fi => 1,
            SegmentLabel::Ek => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentLabel::Dr => "DR",
            SegmentLabel::Fi => "FI",
            SegmentLabel::Ek => "EK",
        }
    }

    pub fn css_class(self) -> &'static str {
        match self {
            SegmentLabel::Dr => "dr",
            SegmentLabel::Fi => "fi",
            SegmentLabel::Ek => "ek",
        }
    }

    pub fn parse(s: &str) -> Option<SegmentLabel> {
        match s {
            "DR" | "dr" => Some(SegmentLabel::Dr),
            "FI" | "fi" => Some(SegmentLabel::Fi),
            "EK" | "ek" => Some(SegmentLabel::Ek),
            _ => None,
        }
    }
}

/// One labeled character span of a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: SegmentLabel,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub sentence_index: usize,
}

impl Segment {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// Labeled, pairwise-disjoint spans over one report, sorted by start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedReport {
    pub report_id: String,
    pub segments: Vec<Segment>,
    /// Residual character ranges not covered by any segment.
    pub uncovered_spans: Vec<(usize, usize)>,
}

impl SegmentedReport {
    /// Sorts segments, checks the non-overlap invariant against the report
    /// text, and derives the uncovered residue.
    pub fn assemble(
        report_id: impl Into<String>,
        report_text: &str,
        mut segments: Vec<Segment>,
    ) -> Result<Self> {
        segments.sort_by_key(|s| (s.start, s.end));
        let mut prev_end = 0usize;
        let mut uncovered = Vec::new();
        for s in &segments {
            if s.start >= s.end || s.end > report_text.len() {
                return Err(Error::InvalidConfig(format!(
                    "segment span {}..{} outside report of length {}",
                    s.start,
                    s.end,
                    report_text.len()
                )));
            }
            if s.start < prev_end {
                return Err(Error::InvalidConfig(format!(
                    "overlapping segments at {}..{}",
                    s.start, s.end
                )));
            }
            if s.start > prev_end {
                uncovered.push((prev_end, s.start));
            }
            prev_end = s.end;
        }
        if prev_end < report_text.len() {
            uncovered.push((prev_end, report_text.len()));
        }
        Ok(Self {
            report_id: report_id.into(),
            segments,
            uncovered_spans: uncovered,
        })
    }

    /// Fraction of report characters covered by segments.
    pub fn coverage(&self, report_len: usize) -> f64 {
        if report_len == 0 {
            return 1.0;
        }
        let covered: usize = self.segments.iter().map(|s| s.end - s.start).sum();
        covered as f64 / report_len as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// CSV for manual review: predicted label per segment with an empty gold
    /// column and a needs_split flag column for the annotator.
    pub fn annotation_review_csv(reports: &[&SegmentedReport]) -> String {
        let mut out =
            String::from("report_id,sentence_index,start,end,segment,predicted_label,gold_label,needs_split\n");
        for r in reports {
            for s in &r.segments {
                out.push_str(&format!(
                    "{},{},{},{},\"{}\",{},,\n",
                    r.report_id,
                    s.sentence_index,
                    s.start,
                    s.end,
                    s.text.replace('"', "\"\""),
                    s.label.as_str()
                ));
            }
        }
        out
    }
}

/// Per-label average segment length (words) and share of segment count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    /// Average words per segment; `None` when the label never occurs.
    pub avg_len_words: [Option<f64>; 3],
    /// Proportion of segments per label; zero for absent labels.
    pub proportions: [f64; 3],
    pub segment_count: usize,
}

pub fn category_stats(reports: &[&SegmentedReport]) -> Result<CategoryStats> {
    let mut counts = [0usize; 3];
    let mut words = [0usize; 3];
    let mut total = 0usize;
    for r in reports {
        for s in &r.segments {
            counts[s.label.index()] += 1;
            words[s.label.index()] += s.word_count();
            total += 1;
        }
    }
    if reports.is_empty() {
        return Err(Error::Metric("category stats over empty collection".into()));
    }
    let avg_len_words = std::array::from_fn(|i| {
        (counts[i] > 0).then(|| words[i] as f64 / counts[i] as f64)
    });
    let proportions = std::array::from_fn(|i| {
        if total == 0 {
            0.0
        } else {
            counts[i] as f64 / total as f64
        }
    });
    Ok(CategoryStats {
        avg_len_words,
        proportions,
        segment_count: total,
    })
}

/// Dated per-label segment proportions, optionally smoothed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalSeries {
    pub dates: Vec<NaiveDate>,
    /// Rows aligned with `dates`; columns ordered DR, FI, EK.
    pub proportions: Vec<[f64; 3]>,
}

impl TemporalSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_end_date,dr,fi,ek\n");
        for (d, p) in self.dates.iter().zip(&self.proportions) {
            out.push_str(&format!("{},{:.6},{:.6},{:.6}\n", d, p[0], p[1], p[2]));
        }
        out
    }
}

/// Per-window-end-date label proportions with centered moving-average
/// smoothing; edges average over the neighbors that exist.
pub fn temporal_proportions(
    dated: &[(NaiveDate, &SegmentedReport)],
    smoothing_width: usize,
) -> Result<TemporalSeries> {
    if dated.is_empty() {
        return Err(Error::Metric("temporal proportions over empty input".into()));
    }
    if smoothing_width == 0 || smoothing_width % 2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "smoothing width must be odd and >= 1, got {smoothing_width}"
        )));
    }
    let mut by_date: BTreeMap<NaiveDate, [usize; 3]> = BTreeMap::new();
    for (date, report) in dated {
        let entry = by_date.entry(*date).or_default();
        for s in &report.segments {
            entry[s.label.index()] += 1;
        }
    }
    let dates: Vec<NaiveDate> = by_date.keys().copied().collect();
    let raw: Vec<[f64; 3]> = by_date
        .values()
        .map(|counts| {
            let total: usize = counts.iter().sum();
            if total == 0 {
                [0.0; 3]
            } else {
                std::array::from_fn(|i| counts[i] as f64 / total as f64)
            }
        })
        .collect();
    let half = smoothing_width / 2;
    let smoothed: Vec<[f64; 3]> = (0..raw.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(raw.len() - 1);
            let span = (hi - lo + 1) as f64;
            std::array::from_fn(|c| raw[lo..=hi].iter().map(|row| row[c]).sum::<f64>() / span)
        })
        .collect();
    Ok(TemporalSeries {
        dates,
        proportions: smoothed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(label: SegmentLabel, text: &str, start: usize) -> Segment {
        Segment {
            label,
            text: text.to_string(),
            start,
            end: start + text.len(),
            sentence_index: 0,
        }
    }

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn assemble_sorts_and_derives_uncovered() {
        let text = "abcdef ghij";
        let b = seg(SegmentLabel::Fi, "ghij", 7);
        let a = seg(SegmentLabel::Dr, "abc", 0);
        let r = SegmentedReport::assemble("r1", text, vec![b, a]).unwrap();
        assert_eq!(r.segments[0].start, 0);
        assert_eq!(r.uncovered_spans, vec![(3, 7)]);
    }

    #[test]
    fn assemble_rejects_overlap() {
        let text = "abcdefgh";
        let a = seg(SegmentLabel::Dr, "abcde", 0);
        let b = seg(SegmentLabel::Fi, "defgh", 3);
        assert!(SegmentedReport::assemble("r1", text, vec![a, b]).is_err());
    }

    #[test]
    fn category_stats_hand_count() {
        let text = "one two three four five six seven eight nine ten";
        let a = seg(SegmentLabel::Dr, "one two three four", 0);
        let b = seg(SegmentLabel::Fi, "five six seven eight nine ten", 19);
        let r = SegmentedReport::assemble("r1", text, vec![a, b]).unwrap();
        let stats = category_stats(&[&r]).unwrap();
        assert_eq!(stats.proportions, [0.5, 0.5, 0.0]);
        assert_eq!(stats.avg_len_words[0], Some(4.0));
        assert_eq!(stats.avg_len_words[1], Some(6.0));
        assert_eq!(stats.avg_len_words[2], None);
    }

    #[test]
    fn category_stats_single_label_and_sum_to_one() {
        let text = "alpha beta";
        let r = SegmentedReport::assemble(
            "r",
            text,
            vec![seg(SegmentLabel::Ek, "alpha beta", 0)],
        )
        .unwrap();
        let stats = category_stats(&[&r]).unwrap();
        assert_eq!(stats.proportions[2], 1.0);
        assert!((stats.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(category_stats(&[]).is_err());
    }

    #[test]
    fn temporal_single_date_identity() {
        let text = "x y";
        let r =
            SegmentedReport::assemble("r", text, vec![seg(SegmentLabel::Dr, "x y", 0)]).unwrap();
        let ts = temporal_proportions(&[(date("2020-01-31"), &r)], 3).unwrap();
        assert_eq!(ts.dates.len(), 1);
        assert_eq!(ts.proportions[0], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn temporal_constant_is_smoothing_fixed_point() {
        let text = "x y";
        let r =
            SegmentedReport::assemble("r", text, vec![seg(SegmentLabel::Fi, "x y", 0)]).unwrap();
        let dated: Vec<_> = (1..=5)
            .map(|m| (NaiveDate::from_ymd_opt(2020, m, 1).unwrap(), &r))
            .collect();
        let ts = temporal_proportions(&dated, 3).unwrap();
        for row in &ts.proportions {
            assert_eq!(*row, [0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn temporal_width_one_preserves_raw_values() {
        let t1 = "a b c d e";
        // date 1: 1 DR of 5 segments? Build 2 reports with different mixes.
        let r1 = SegmentedReport::assemble(
            "r1",
            t1,
            vec![
                seg(SegmentLabel::Dr, "a", 0),
                seg(SegmentLabel::Fi, "b", 2),
                seg(SegmentLabel::Fi, "c", 4),
                seg(SegmentLabel::Fi, "d", 6),
                seg(SegmentLabel::Fi, "e", 8),
            ],
        )
        .unwrap();
        let r2 = SegmentedReport::assemble(
            "r2",
            t1,
            vec![
                seg(SegmentLabel::Dr, "a", 0),
                seg(SegmentLabel::Dr, "b", 2),
                seg(SegmentLabel::Fi, "c", 4),
                seg(SegmentLabel::Fi, "d", 6),
                seg(SegmentLabel::Fi, "e", 8),
            ],
        )
        .unwrap();
        let ts = temporal_proportions(
            &[(date("2020-01-31"), &r1), (date("2020-02-29"), &r2)],
            1,
        )
        .unwrap();
        assert!((ts.proportions[0][0] - 0.2).abs() < 1e-12);
        assert!((ts.proportions[1][0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn temporal_rejects_even_width_and_empty() {
        let text = "x";
        let r =
            SegmentedReport::assemble("r", text, vec![seg(SegmentLabel::Dr, "x", 0)]).unwrap();
        assert!(temporal_proportions(&[(date("2020-01-01"), &r)], 2).is_err());
        assert!(temporal_proportions(&[], 3).is_err());
    }
}
