//! Data model and ingestion for multimodal NER / relation extraction corpora.
//!
//! Samples are pre-tokenized. NER samples carry per-token BIO tags; RE samples
//! carry a relation label plus head/tail entity spans. Everything here is a
//! pure function over immutable samples and safe to share across threads.

mod bio;
mod loader;
mod metrics;

pub use bio::{bio_decode, bio_encode, repair_bio, validate_bio};
pub use loader::{load_labels, load_mner, load_mre, write_mner, write_mre, MnerCorpus};
pub use metrics::{relation_f1, span_f1, F1Report, RelationLabels};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("sample {id}: {msg}")]
    Invalid { id: String, msg: String },
    #[error("pred/gold length mismatch: {pred} vs {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("unknown relation label {0:?} (not in label vocabulary)")]
    UnknownLabel(String),
}

/// Which extraction task a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Ner,
    Re,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Ner => write!(f, "NER"),
            Task::Re => write!(f, "RE"),
        }
    }
}

/// A token span `[start, end)` with an entity type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub label: String,
}

impl Span {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Self {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Surface form of the span inside `tokens`, joined by single spaces.
    pub fn surface(&self, tokens: &[String]) -> String {
        tokens[self.start..self.end].join(" ")
    }
}

/// One text(+image) example with gold labels for NER or RE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    /// Filled in by the knowledge stage; not part of the gold annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner_tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_span: Option<Span>,
}

impl Sample {
    pub fn ner(id: impl Into<String>, tokens: Vec<String>, tags: Vec<String>) -> Self {
        Self {
            id: id.into(),
            tokens,
            image_ref: None,
            caption: None,
            task: Task::Ner,
            ner_tags: Some(tags),
            relation: None,
            head_span: None,
            tail_span: None,
        }
    }

    pub fn re(
        id: impl Into<String>,
        tokens: Vec<String>,
        relation: impl Into<String>,
        head: Span,
        tail: Span,
    ) -> Self {
        Self {
            id: id.into(),
            tokens,
            image_ref: None,
            caption: None,
            task: Task::Re,
            ner_tags: None,
            relation: Some(relation.into()),
            head_span: Some(head),
            tail_span: Some(tail),
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Gold spans of an NER sample (empty for RE samples).
    pub fn gold_spans(&self) -> Vec<Span> {
        match &self.ner_tags {
            Some(tags) => bio_decode(tags),
            None => Vec::new(),
        }
    }

    /// Checks every structural invariant. Tags must already be valid BIO;
    /// use [`repair_bio`] first for raw data.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |msg: String| CorpusError::Invalid {
            id: self.id.clone(),
            msg,
        };
        if self.tokens.is_empty() {
            return Err(invalid("empty token list".into()));
        }
        match self.task {
            Task::Ner => {
                let tags = self
                    .ner_tags
                    .as_ref()
                    .ok_or_else(|| invalid("NER sample without tags".into()))?;
                if tags.len() != self.tokens.len() {
                    return Err(invalid(format!(
                        "{} tags for {} tokens",
                        tags.len(),
                        self.tokens.len()
                    )));
                }
                validate_bio(tags).map_err(invalid)?;
            }
            Task::Re => {
                if self.relation.is_none() {
                    return Err(invalid("RE sample without relation".into()));
                }
                for (name, span) in [("head", &self.head_span), ("tail", &self.tail_span)] {
                    let span = span
                        .as_ref()
                        .ok_or_else(|| invalid(format!("RE sample without {name} span")))?;
                    if span.is_empty() || span.end > self.tokens.len() {
                        return Err(invalid(format!(
                            "{name} span [{}, {}) out of range for {} tokens",
                            span.start,
                            span.end,
                            self.tokens.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ner_sample_validates() {
        let s = Sample::ner(
            "a",
            vec!["Harry".into(), "Potter".into()],
            vec!["B-PER".into(), "I-PER".into()],
        );
        s.validate().unwrap();
        assert_eq!(s.gold_spans(), vec![Span::new(0, 2, "PER")]);
    }

    #[test]
    fn tag_length_mismatch_rejected() {
        let s = Sample::ner("a", vec!["x".into(), "y".into()], vec!["O".into()]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn re_span_out_of_range_rejected() {
        let s = Sample::re(
            "r",
            vec!["a".into(), "b".into()],
            "/per/per/peer",
            Span::new(5, 6, "PER"),
            Span::new(1, 2, "PER"),
        );
        assert!(s.validate().is_err());
    }

    #[test]
    fn empty_tokens_rejected() {
        let s = Sample::ner("e", vec![], vec![]);
        assert!(s.validate().is_err());
    }
}
