//! Rubric-based report scoring through an evaluator model.
//!
//! Three criteria — consistency, coherence, fluency — each scored 1-5 by a
//! dedicated prompt. Chat APIs expose no token probabilities, so instead of
//! probability-weighted scores each criterion is sampled `n_samples` times
//! and summarized by mean and population standard deviation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, ContentPart, Gateway};
use crate::prompt::ReportType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Consistency,
    Coherence,
    Fluency,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Consistency, Criterion::Coherence, Criterion::Fluency];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Consistency => "Consistency",
            Criterion::Coherence => "Coherence",
            Criterion::Fluency => "Fluency",
        }
    }

    fn needs_source(self) -> bool {
        !matches!(self, Criterion::Fluency)
    }
}

/// Data blocks the consistency and coherence prompts embed.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBlock {
    /// `Date       Close` table.
    pub close_block: String,
    /// Indicator table, present when the report under evaluation used one.
    pub indicator_block: Option<String>,
}

const CONSISTENCY_CRITERIA: &str = "Consistency (1-5) - The factual alignment between the financial report and the time series data. A factually consistent report accurately reflects the trends, values, and key events present in the time series without introducing information not supported by it. Reports that contain hallucinated facts (i.e., statements that introduce or infer information not present in the time series) should be penalized.";

const CONSISTENCY_STEPS: &str = "1. Read the Time Series: Examine the time series data to understand the key facts, trends, and details it presents.
2. Read the Financial Report: Review the report and compare its content to the time series data. Identify any statements that do not align with the data or introduce unsupported information.
3. Assign a score for consistency based on the Evaluation Criteria.";

const COHERENCE_CRITERIA: &str = "Coherence (1-5) - The degree to which the report is logically organized and well-structured. The report should clearly present the insights from both the time series data and the technical indicators in a way that builds sentence by sentence into a coherent body of information. The report should not feel like a disjointed collection of statements but should present a logical progression of ideas and insights, where each sentence and paragraph naturally follows from the previous ones.";

const COHERENCE_STEPS: &str = "1. Examine the Time Series and Technical Indicators: Carefully review both the time series data and the technical indicators. Identify the main trends, signals, and key points in the data.
2. Read the Financial Report: Read the financial report and assess its logical flow and structure. Check if the report covers the key trends and points from the time series and technical indicators in a clear, organized, and logical manner. Look for a smooth progression of information, where each insight follows naturally from the previous one.
3. Assign a score for coherence on a scale of 1 to 5, where 1 is the lowest and 5 is the highest based on the Evaluation Criteria.";

const FLUENCY_CRITERIA: &str = "Fluency (1-5) - The readability and naturalness of the language used in the report. A fluent report should be free from grammatical errors, awkward phrasing, and unnatural language. It should read smoothly and be easy to understand.";

const FLUENCY_BREAKDOWN: &str = "- 1 = The report is highly unnatural with significant grammar and phrasing issues.
- 2 = The report has major fluency problems, with noticeable awkwardness and errors.
- 3 = The report is somewhat fluent, but with some noticeable issues.
- 4 = The report is mostly fluent, with only a few minor issues.
- 5 = The report is fully fluent, with natural and smooth language.";

const FLUENCY_STEPS: &str = "1. Read the Report Carefully: Pay close attention to the language used, including grammar, phrasing, and overall readability.
2. Identify Language Issues: Look for any grammatical errors, awkward sentences, or unnatural phrasing that may hinder the readability of the report.
3. Assign a score for Fluency on a scale of 1 to 5, where 1 is the lowest and 5 is the highest based on the Evaluation Criteria.";

/// Builds the evaluation prompt for one criterion.
///
/// Consistency and coherence require the source data; fluency takes the
/// report alone. When the source carries an indicator table it is appended
/// under the conditional `Technical Indicators` heading.
pub fn build_eval_prompt(
    criterion: Criterion,
    report_text: &str,
    source: Option<&SourceBlock>,
) -> Result<String> {
    if criterion.needs_source() && source.is_none() {
        return Err(Error::Prompt(format!(
            "{} evaluation needs the source data block",
            criterion.as_str()
        )));
    }
    let prompt = match criterion {
        Criterion::Consistency | Criterion::Coherence => {
            let source = source.expect("checked above");
            let (criteria, steps, label) = if criterion == Criterion::Consistency {
                (CONSISTENCY_CRITERIA, CONSISTENCY_STEPS, "- Consistency:")
            } else {
                (COHERENCE_CRITERIA, COHERENCE_STEPS, "- Coherence:")
            };
            let mut input = format!("Time series data:\n{}", source.close_block.trim_end());
            if let Some(ind) = &source.indicator_block {
                input.push_str(&format!(
                    "\n\nTechnical Indicators (if analyzing reports with technical indicators)\n{}",
                    ind.trim_end()
                ));
            }
            format!(
                "Task:\nYour task is to rate the report on one metric.\n\nEvaluation Criteria:\n{criteria}\n\nEvaluation Steps:\n{steps}\n\nInput:\n{input}\n\nFinancial report:\n{report_text}\n\nEvaluation Form (Scores ONLY):\n\n{label}"
            )
        }
        Criterion::Fluency => format!(
            "Task:\nYour task is to evaluate the report on one metric.\n\nEvaluation Criteria:\n{FLUENCY_CRITERIA}\n\nScore Breakdown:\n{FLUENCY_BREAKDOWN}\n\nEvaluation Steps:\n{FLUENCY_STEPS}\n\nInput:\nFinancial report:\n{report_text}\n\nEvaluation Form (Scores ONLY):\n\n- Fluency (1-5):"
        ),
    };
    Ok(prompt)
}

/// Extracts the first integer score from evaluator output, tolerating label
/// prefixes like `- Consistency: 4` or `Fluency (1-5): 5`. Values outside
/// 1-5 are rejected.
pub fn parse_score(completion: &str) -> Result<u8> {
    // scale annotations would otherwise win the "first integer" scan
    let cleaned = completion.replace("(1-5)", "").replace("1-5", "");
    let mut digits = String::new();
    for c in cleaned.chars() {
        if c.is_ascii_digit() {
            digits.push(c);
        } else if !digits.is_empty() {
            break;
        }
    }
    if digits.is_empty() {
        return Err(Error::ScoreNotFound {
            snippet: completion.chars().take(80).collect(),
        });
    }
    let value: i64 = digits.parse().map_err(|_| Error::ScoreNotFound {
        snippet: completion.chars().take(80).collect(),
    })?;
    if !(1..=5).contains(&value) {
        return Err(Error::ScoreOutOfRange { value });
    }
    Ok(value as u8)
}

/// Integer samples for one criterion with their population statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub criterion: Criterion,
    pub samples: Vec<u8>,
    pub mean: f64,
    pub std: f64,
}

impl EvalScore {
    pub fn from_samples(criterion: Criterion, samples: Vec<u8>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples {
                criterion: criterion.as_str().into(),
                detail: "no successful samples".into(),
            });
        }
        if let Some(bad) = samples.iter().find(|s| !(1..=5).contains(*s)) {
            return Err(Error::ScoreOutOfRange { value: *bad as i64 });
        }
        let (mean, std) = mean_std(samples.iter().map(|s| *s as f64));
        Ok(Self {
            criterion,
            samples,
            mean,
            std,
        })
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEvaluation {
    pub report_id: String,
    /// One entry per criterion, ordered consistency, coherence, fluency.
    pub scores: Vec<EvalScore>,
    pub evaluator_model_id: String,
    /// Per-sample failures that were skipped (unparseable completions etc.).
    pub diagnostics: Vec<String>,
}

impl ReportEvaluation {
    pub fn score(&self, criterion: Criterion) -> &EvalScore {
        self.scores
            .iter()
            .find(|s| s.criterion == criterion)
            .expect("all criteria present")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSettings<'a> {
    pub evaluator_model: &'a str,
    pub n_samples: usize,
    pub temperature: f64,
}

/// Scores one report on all three criteria.
///
/// Each criterion issues `n_samples` evaluator calls. A sample whose
/// completion cannot be parsed is recorded as a diagnostic and skipped; at
/// least one sample per criterion must succeed.
pub fn evaluate_report(
    gateway: &Gateway,
    settings: EvalSettings<'_>,
    report_id: &str,
    report_text: &str,
    source: &SourceBlock,
) -> Result<ReportEvaluation> {
    if settings.n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
    }
    let mut scores = Vec::with_capacity(3);
    let mut diagnostics = Vec::new();
    for criterion in Criterion::ALL {
        let prompt = build_eval_prompt(
            criterion,
            report_text,
            criterion.needs_source().then_some(source),
        )?;
        let mut samples = Vec::with_capacity(settings.n_samples);
        let mut last_error = String::new();
        for sample_idx in 0..settings.n_samples {
            let request = ChatRequest {
                model_id: settings.evaluator_model.to_string(),
                parts: vec![ContentPart::Text(prompt.clone())],
                temperature: settings.temperature,
                max_tokens: 16,
                request_tag: format!("eval-{}-{sample_idx}", criterion.as_str().to_lowercase()),
            };
            match gateway.complete(&request).and_then(|r| parse_score(&r.text)) {
                Ok(score) => samples.push(score),
                Err(e) => {
                    last_error = e.to_string();
                    diagnostics.push(format!(
                        "{report_id}/{}: sample {sample_idx} failed: {e}",
                        criterion.as_str()
                    ));
                }
            }
        }
        if samples.is_empty() {
            return Err(Error::NoSamples {
                criterion: criterion.as_str().into(),
                detail: last_error,
            });
        }
        scores.push(EvalScore::from_samples(criterion, samples)?);
    }
    Ok(ReportEvaluation {
        report_id: report_id.to_string(),
        scores,
        evaluator_model_id: settings.evaluator_model.to_string(),
        diagnostics,
    })
}

/// One summary cell group: per-criterion mean and std over report means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub report_type: ReportType,
    pub model: String,
    pub n_reports: usize,
    /// Ordered consistency, coherence, fluency; each (mean, std).
    pub cells: [(f64, f64); 3],
}

/// Groups evaluations by (report type, generator model) and aggregates each
/// criterion over the per-report mean scores.
pub fn aggregate(items: &[(ReportType, String, ReportEvaluation)]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(ReportType, String), Vec<&ReportEvaluation>> = BTreeMap::new();
    for (rt, model, eval) in items {
        groups.entry((*rt, model.clone())).or_default().push(eval);
    }
    groups
        .into_iter()
        .map(|((report_type, model), evals)| {
            let cells = std::array::from_fn(|i| {
                let criterion = Criterion::ALL[i];
                mean_std(evals.iter().map(move |e| e.score(criterion).mean))
            });
            SummaryRow {
                report_type,
                model,
                n_reports: evals.len(),
                cells,
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "report_type,model,n_reports,con_mean,con_std,coh_mean,coh_std,flu_mean,flu_std\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            r.report_type,
            r.model,
            r.n_reports,
            r.cells[0].0,
            r.cells[0].1,
            r.cells[1].0,
            r.cells[1].1,
            r.cells[2].0,
            r.cells[2].1,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendConfig, BackendKind, Gateway, RetryPolicy};

    fn source() -> SourceBlock {
        SourceBlock {
            close_block: "Date       Close\n2020-04-28 8607.7\n".into(),
            indicator_block: None,
        }
    }

    #[test]
    fn fluency_prompt_contains_breakdown_text() {
        let p = build_eval_prompt(Criterion::Fluency, "A report.", None).unwrap();
        assert!(p.contains("The report is fully fluent"));
        assert!(p.ends_with("- Fluency (1-5):"));
        assert!(p.contains("Your task is to evaluate the report on one metric."));
    }

    #[test]
    fn consistency_without_indicators_has_no_indicator_heading() {
        let p = build_eval_prompt(Criterion::Consistency, "A report.", Some(&source())).unwrap();
        assert!(p.contains("2020-04-28 8607.7"));
        assert!(!p.contains("Technical Indicators"));
        assert!(p.ends_with("- Consistency:"));
    }

    #[test]
    fn coherence_with_indicators_includes_conditional_heading() {
        let mut s = source();
        s.indicator_block = Some("Date        SMA_50\n2020-04-28  8210.1\n".into());
        let p = build_eval_prompt(Criterion::Coherence, "A report.", Some(&s)).unwrap();
        assert!(p.contains("Technical Indicators (if analyzing reports with technical indicators)"));
        assert!(p.contains("8210.1"));
        assert!(p.ends_with("- Coherence:"));
    }

    #[test]
    fn source_is_required_for_consistency_and_coherence() {
        assert!(build_eval_prompt(Criterion::Consistency, "r", None).is_err());
        assert!(build_eval_prompt(Criterion::Coherence, "r", None).is_err());
    }

    #[test]
    fn parse_score_accepts_common_shapes() {
        assert_eq!(parse_score("- Consistency: 4").unwrap(), 4);
        assert_eq!(parse_score("4").unwrap(), 4);
        assert_eq!(parse_score("Fluency (1-5): 5").unwrap(), 5);
        assert_eq!(parse_score("Coherence: 3 out of 5").unwrap(), 3);
    }

    #[test]
    fn parse_score_rejects_out_of_range_and_missing() {
        assert!(matches!(
            parse_score("Score: 7"),
            Err(Error::ScoreOutOfRange { value: 7 })
        ));
        assert!(matches!(parse_score("45"), Err(Error::ScoreOutOfRange { .. })));
        assert!(matches!(parse_score("no score here"), Err(Error::ScoreNotFound { .. })));
    }

    #[test]
    fn eval_score_statistics() {
        let s = EvalScore::from_samples(Criterion::Consistency, vec![4, 5, 4, 5]).unwrap();
        assert_eq!(s.mean, 4.5);
        assert_eq!(s.std, 0.5);
        let single = EvalScore::from_samples(Criterion::Fluency, vec![3]).unwrap();
        assert_eq!(single.std, 0.0);
        assert!(EvalScore::from_samples(Criterion::Fluency, vec![]).is_err());
        assert!(EvalScore::from_samples(Criterion::Fluency, vec![9]).is_err());
    }

    struct ConstantBackend(&'static str);
    impl crate::gateway::ChatBackend for ConstantBackend {
        fn id(&self) -> &str {
            "constant"
        }
        fn supports_images(&self) -> bool {
            false
        }
        fn complete(&self, _request: &ChatRequest) -> crate::error::Result<crate::gateway::ChatResponse> {
            Ok(crate::gateway::ChatResponse {
                text: self.0.into(),
                token_usage: None,
                backend_id: "constant".into(),
                latency: std::time::Duration::ZERO,
            })
        }
    }

    #[test]
    fn constant_evaluator_gives_mean_3_std_0() {
        let gw = Gateway::new(Box::new(ConstantBackend("3")), 2).unwrap();
        let settings = EvalSettings {
            evaluator_model: "judge",
            n_samples: 4,
            temperature: 0.0,
        };
        let eval = evaluate_report(&gw, settings, "r1", "Report text.", &source()).unwrap();
        for s in &eval.scores {
            assert_eq!(s.mean, 3.0);
            assert_eq!(s.std, 0.0);
            assert_eq!(s.samples.len(), 4);
        }
        assert!(eval.diagnostics.is_empty());
    }

    #[test]
    fn unparseable_samples_are_diagnosed_but_not_fatal_if_any_succeed() {
        // Completion carries a score after noise; all samples succeed.
        let gw = Gateway::new(Box::new(ConstantBackend("nonsense with no digits")), 2).unwrap();
        let settings = EvalSettings {
            evaluator_model: "judge",
            n_samples: 2,
            temperature: 0.0,
        };
        let err = evaluate_report(&gw, settings, "r1", "Report.", &source()).unwrap_err();
        assert!(matches!(err, Error::NoSamples { .. }));
    }

    #[test]
    fn mock_backend_end_to_end_evaluation() {
        let gw = Gateway::from_config(&BackendConfig {
            kind: BackendKind::Mock { seed: 5 },
            max_concurrency: 2,
            retry: RetryPolicy::default(),
        })
        .unwrap();
        let settings = EvalSettings {
            evaluator_model: "mock-judge",
            n_samples: 3,
            temperature: 0.0,
        };
        let eval = evaluate_report(&gw, settings, "r1", "The index rose.", &source()).unwrap();
        assert_eq!(eval.scores.len(), 3);
        for s in &eval.scores {
            assert!(s.samples.iter().all(|v| (1..=5).contains(v)));
            assert!((1.0..=5.0).contains(&s.mean));
            assert!(s.std >= 0.0);
        }
    }

    #[test]
    fn aggregate_singleton_and_pair() {
        let gw = Gateway::new(Box::new(ConstantBackend("4")), 2).unwrap();
        let settings = EvalSettings {
            evaluator_model: "judge",
            n_samples: 1,
            temperature: 0.0,
        };
        let e1 = evaluate_report(&gw, settings, "a", "Text.", &source()).unwrap();
        let gw3 = Gateway::new(Box::new(ConstantBackend("3")), 2).unwrap();
        let e2 = evaluate_report(&gw3, settings, "b", "Text.", &source()).unwrap();
        let rows = aggregate(&[
            (ReportType::Short, "m1".into(), e1),
            (ReportType::Short, "m1".into(), e2),
        ]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_reports, 2);
        // means 4 and 3 -> 3.5 +/- 0.5
        assert_eq!(rows[0].cells[0], (3.5, 0.5));
        let csv = summary_csv(&rows);
        assert!(csv.starts_with("report_type,model,n_reports,con_mean"));
        assert!(csv.contains("short,m1,2,3.5000,0.5000"));
    }

    #[test]
    fn aggregate_groups_cover_every_pair_present() {
        let gw = Gateway::new(Box::new(ConstantBackend("5")), 2).unwrap();
        let settings = EvalSettings {
            evaluator_model: "judge",
            n_samples: 1,
            temperature: 0.0,
        };
        let e = |id: &str| evaluate_report(&gw, settings, id, "T.", &source()).unwrap();
        let rows = aggregate(&[
            (ReportType::Short, "m1".into(), e("a")),
            (ReportType::Ti, "m1".into(), e("b")),
            (ReportType::Short, "m2".into(), e("c")),
        ]);
        let keys: Vec<_> = rows.iter().map(|r| (r.report_type, r.model.clone())).collect();
        assert_eq!(
            keys,
            vec![
                (ReportType::Short, "m1".to_string()),
                (ReportType::Short, "m2".to_string()),
                (ReportType::Ti, "m1".to_string()),
            ]
        );
    }
}
