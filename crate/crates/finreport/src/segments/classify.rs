//! Sentence-level segment classification through a chat backend.

use serde::Deserialize;

use super::SegmentLabel;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, ContentPart, Gateway};

/// Classification instruction; `{{sentence}}` is replaced per call.
pub const CLASSIFICATION_TEMPLATE: &str = "Please categorize the following text into three categories:

1. Direct reference: Segments that directly mention numerical values or trends from the input time series data.
2. Financial interpretation: Segments that infer or conclude based on the observed data without external knowledge.
3. External knowledge: Segments that provide context or explanations using knowledge outside the observed time series data.

Segments should be non-overlapping.

Return the categorized segments in the following JSON format:

{'direct_reference': ['segment1', 'segment2', ...], 'financial_interpretation': ['segment1', 'segment2', ...], 'external_knowledge': ['segment1', 'segment2', ...]}

Text: {{sentence}}";

pub fn build_classification_prompt(sentence: &str) -> String {
    CLASSIFICATION_TEMPLATE.replace("{{sentence}}", sentence)
}

/// Strict classifier output: exactly the three category keys, each a list of
/// segment strings. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifiedSentence {
    #[serde(default)]
    pub direct_reference: Vec<String>,
    #[serde(default)]
    pub financial_interpretation: Vec<String>,
    #[serde(default)]
    pub external_knowledge: Vec<String>,
}

impl ClassifiedSentence {
    pub fn by_label(&self) -> [(SegmentLabel, &Vec<String>); 3] {
        [
            (SegmentLabel::Dr, &self.direct_reference),
            (SegmentLabel::Fi, &self.financial_interpretation),
            (SegmentLabel::Ek, &self.external_knowledge),
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.direct_reference.is_empty()
            && self.financial_interpretation.is_empty()
            && self.external_knowledge.is_empty()
    }
}

/// Parses the completion as strict JSON, tolerating a Markdown code fence
/// around it but nothing else.
pub fn parse_classification(completion: &str) -> Result<ClassifiedSentence> {
    let trimmed = strip_code_fence(completion.trim());
    serde_json::from_str(trimmed).map_err(|e| Error::ClassificationJson(e.to_string()))
}

fn strip_code_fence(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    let rest = rest.trim_start_matches(['\r', '\n']);
    rest.strip_suffix("```").map(str::trim_end).unwrap_or(s)
}

/// Classifies one sentence. On unparseable output the request is retried once
/// with an explicit JSON reminder; a second failure is returned to the caller.
pub fn classify_sentence(
    gateway: &Gateway,
    model_id: &str,
    sentence: &str,
) -> Result<ClassifiedSentence> {
    let prompt = build_classification_prompt(sentence);
    let request = ChatRequest {
        model_id: model_id.to_string(),
        parts: vec![ContentPart::Text(prompt.clone())],
        temperature: 0.0,
        max_tokens: 1024,
        request_tag: "classify".into(),
    };
    let response = gateway.complete(&request)?;
    match parse_classification(&response.text) {
        Ok(c) => Ok(c),
        Err(_) => {
            let retry = ChatRequest {
                parts: vec![ContentPart::Text(format!(
                    "{prompt}\n\nRespond with the JSON object only, using double quotes."
                ))],
                request_tag: "classify-retry".into(),
                ..request
            };
            let response = gateway.complete(&retry)?;
            parse_classification(&response.text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_substitutes_sentence() {
        let p = build_classification_prompt("The index fell.");
        assert!(p.ends_with("Text: The index fell."));
        assert!(!p.contains("{{sentence}}"));
        assert!(p.starts_with("Please categorize the following text"));
    }

    #[test]
    fn parses_all_three_keys() {
        let c = parse_classification(
            r#"{"direct_reference": ["a"], "financial_interpretation": [], "external_knowledge": ["b", "c"]}"#,
        )
        .unwrap();
        assert_eq!(c.direct_reference, vec!["a"]);
        assert!(c.financial_interpretation.is_empty());
        assert_eq!(c.external_knowledge.len(), 2);
    }

    #[test]
    fn missing_keys_default_to_empty() {
        let c = parse_classification(r#"{"direct_reference": ["a"]}"#).unwrap();
        assert!(c.financial_interpretation.is_empty());
        assert!(c.external_knowledge.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_classification(r#"{"direct_reference": [], "speculation": ["x"]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn single_quotes_are_invalid_json() {
        assert!(parse_classification("{'direct_reference': ['a']}").is_err());
    }

    #[test]
    fn code_fence_is_tolerated() {
        let c = parse_classification(
            "```json\n{\"direct_reference\": [\"a\"], \"financial_interpretation\": [], \"external_knowledge\": []}\n```",
        )
        .unwrap();
        assert_eq!(c.direct_reference, vec!["a"]);
    }
}
