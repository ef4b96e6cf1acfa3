//! Micro-averaged exact-match F1 for entity spans and relation labels.

use super::{CorpusError, Span};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Precision / recall / F1 with the underlying counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl F1Report {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

impl std::fmt::Display for F1Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F1={:.4} (tp={} fp={} fn={})",
            self.precision, self.recall, self.f1, self.tp, self.fp, self.fn_
        )
    }
}

/// Micro-averaged exact-match span F1. A predicted span counts as a true
/// positive iff an identical (start, end, type) triple exists in the gold
/// set of the same sample; duplicates must match one-to-one.
pub fn span_f1(pred: &[Vec<Span>], gold: &[Vec<Span>]) -> Result<F1Report, CorpusError> {
    if pred.len() != gold.len() {
        return Err(CorpusError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        let mut remaining: HashMap<&Span, u64> = HashMap::new();
        for span in g {
            *remaining.entry(span).or_default() += 1;
        }
        for span in p {
            match remaining.get_mut(span) {
                Some(count) if *count > 0 => {
                    *count -= 1;
                    tp += 1;
                }
                _ => fp += 1,
            }
        }
        fn_ += remaining.values().sum::<u64>();
    }
    Ok(F1Report::from_counts(tp, fp, fn_))
}

/// Relation label vocabulary with a designated negative class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationLabels {
    pub labels: Vec<String>,
    pub negative: String,
}

impl RelationLabels {
    pub fn new(labels: Vec<String>) -> Self {
        Self {
            labels,
            negative: "None".to_string(),
        }
    }

    pub fn with_negative(mut self, negative: impl Into<String>) -> Self {
        self.negative = negative.into();
        self
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

/// Micro F1 over relation labels, treating the negative class as "no
/// relation": predicting it never scores, missing a positive costs recall.
pub fn relation_f1(
    pred: &[String],
    gold: &[String],
    labels: &RelationLabels,
) -> Result<F1Report, CorpusError> {
    if pred.len() != gold.len() {
        return Err(CorpusError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    for label in pred.iter().chain(gold) {
        if !labels.contains(label) {
            return Err(CorpusError::UnknownLabel(label.clone()));
        }
    }
    let neg = &labels.negative;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        let pred_pos = p != neg;
        let gold_pos = g != neg;
        match (pred_pos, gold_pos) {
            (true, true) if p == g => tp += 1,
            (true, true) => {
                fp += 1;
                fn_ += 1;
            }
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(F1Report::from_counts(tp, fp, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(v: &[(usize, usize, &str)]) -> Vec<Span> {
        v.iter().map(|&(s, e, t)| Span::new(s, e, t)).collect()
    }

    #[test]
    fn perfect_prediction() {
        let gold = vec![spans(&[(0, 2, "PER"), (3, 4, "LOC")]), spans(&[(1, 2, "ORG")])];
        let r = span_f1(&gold, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.tp, 3);
    }

    #[test]
    fn empty_prediction_is_zero() {
        let gold = vec![spans(&[(0, 2, "PER"), (3, 4, "LOC"), (5, 6, "ORG")])];
        let pred = vec![vec![]];
        let r = span_f1(&pred, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.fn_, 3);
    }

    #[test]
    fn hand_counted_case() {
        // tp=1, fp=0, fn=1 → P=1.0, R=0.5, F1=2/3
        let pred = vec![spans(&[(0, 2, "PER")])];
        let gold = vec![spans(&[(0, 2, "PER"), (3, 4, "LOC")])];
        let r = span_f1(&pred, &gold).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn type_mismatch_counts_both_ways() {
        let pred = vec![spans(&[(0, 2, "LOC")])];
        let gold = vec![spans(&[(0, 2, "PER")])];
        let r = span_f1(&pred, &gold).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(span_f1(&[vec![]], &[]).is_err());
    }

    fn rel_labels() -> RelationLabels {
        RelationLabels::new(vec![
            "None".into(),
            "/per/per/peer".into(),
            "/per/loc/place_of_birth".into(),
            "/org/org/subsidiary".into(),
        ])
    }

    #[test]
    fn relation_all_correct() {
        let gold: Vec<String> = vec!["/per/per/peer".into(), "/org/org/subsidiary".into()];
        let r = relation_f1(&gold, &gold, &rel_labels()).unwrap();
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn relation_all_none_predicted() {
        let pred: Vec<String> = vec!["None".into(), "None".into()];
        let gold: Vec<String> = vec!["/per/per/peer".into(), "/org/org/subsidiary".into()];
        let r = relation_f1(&pred, &gold, &rel_labels()).unwrap();
        assert_eq!(r.f1, 0.0);
        assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 2));
    }

    #[test]
    fn relation_hand_counted_case() {
        // 4 samples, 2 tp / 1 fp / 1 fn → P=2/3, R=2/3, F1=2/3
        let gold: Vec<String> = vec![
            "/per/per/peer".into(),
            "/org/org/subsidiary".into(),
            "None".into(),
            "/per/loc/place_of_birth".into(),
        ];
        let pred: Vec<String> = vec![
            "/per/per/peer".into(),
            "/org/org/subsidiary".into(),
            "/per/per/peer".into(),
            "None".into(),
        ];
        let r = relation_f1(&pred, &gold, &rel_labels()).unwrap();
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn relation_unknown_label_is_error() {
        let pred: Vec<String> = vec!["/bogus".into()];
        let gold: Vec<String> = vec!["None".into()];
        assert!(matches!(
            relation_f1(&pred, &gold, &rel_labels()),
            Err(CorpusError::UnknownLabel(_))
        ));
    }
}
