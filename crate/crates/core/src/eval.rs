//! Multi-label metrics over truth/prediction label matrices.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::post::argmax;
use crate::scalar::Scalar;
use crate::schema::{LabelVector, MAIN_RANGE, NUM_LABELS, REASON_RANGE};

pub type LabelMatrix = [LabelVector];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("truth has {truth} rows but predictions have {pred}")]
    Shape { truth: usize, pred: usize },
    #[error("column range {0:?} exceeds the label width")]
    Columns(Range<usize>),
    #[error("metric needs at least one row")]
    Empty,
}

fn same_shape(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<(), MetricError> {
    if truth.len() != pred.len() {
        return Err(MetricError::Shape {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    Ok(())
}

fn columns_ok(cols: &Range<usize>) -> Result<(), MetricError> {
    if cols.start > cols.end || cols.end > NUM_LABELS {
        return Err(MetricError::Columns(cols.clone()));
    }
    Ok(())
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

/// True positives, false positives and false negatives pooled over cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PooledCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl PooledCounts {
    pub fn precision<T: Scalar>(&self) -> T {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall<T: Scalar>(&self) -> T {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// 2TP / (2TP + FP + FN), which equals 2PR/(P+R) whenever P+R > 0.
    pub fn f1<T: Scalar>(&self) -> T {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn prf<T: Scalar>(&self) -> Prf<T> {
        Prf {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

pub fn pooled_counts(
    truth: &LabelMatrix,
    pred: &LabelMatrix,
    cols: Range<usize>,
) -> Result<PooledCounts, MetricError> {
    same_shape(truth, pred)?;
    columns_ok(&cols)?;
    let mut c = PooledCounts::default();
    for (t, p) in truth.iter().zip(pred) {
        for j in cols.clone() {
            match (t.get(j), p.get(j)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(c)
}

pub fn micro_prf<T: Scalar>(
    truth: &LabelMatrix,
    pred: &LabelMatrix,
    cols: Range<usize>,
) -> Result<Prf<T>, MetricError> {
    Ok(pooled_counts(truth, pred, cols)?.prf())
}

fn main_argmax(v: &LabelVector) -> usize {
    argmax(&v.flags()[MAIN_RANGE])
}

/// Fraction of rows whose argmax over the main-decision columns agrees.
pub fn main_accuracy<T: Scalar>(truth: &LabelMatrix, pred: &LabelMatrix) -> Result<T, MetricError> {
    same_shape(truth, pred)?;
    let hits = truth
        .iter()
        .zip(pred)
        .filter(|(t, p)| main_argmax(t) == main_argmax(p))
        .count();
    Ok(ratio(hits, truth.len()))
}

pub fn avg_tag_count<T: Scalar>(m: &LabelMatrix, cols: Range<usize>) -> Result<T, MetricError> {
    if m.is_empty() {
        return Err(MetricError::Empty);
    }
    columns_ok(&cols)?;
    let total: usize = m.iter().map(|v| v.count_in(cols.clone())).sum();
    Ok(ratio(total, m.len()))
}

/// Test-set report; JSON keys are the conventional metric row names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "Main Decision Accuracy (Argmax)")]
    pub main_accuracy: f64,
    #[serde(rename = "Main Decision F1 (Argmax)")]
    pub main_f1: f64,
    #[serde(rename = "F1-micro (Overall)")]
    pub overall_f1: f64,
    #[serde(rename = "Precision-micro (Overall)")]
    pub overall_precision: f64,
    #[serde(rename = "Recall-micro (Overall)")]
    pub overall_recall: f64,
    /// Every label thresholded independently at the sigmoid threshold.
    #[serde(rename = "F1-micro (Overall, Raw Threshold)", skip_serializing_if = "Option::is_none", default)]
    pub overall_f1_raw: Option<f64>,
    #[serde(rename = "F1-micro (Reason Tags Only, Processed)")]
    pub reason_f1: f64,
    #[serde(rename = "Avg. Predicted Reason Tags")]
    pub avg_predicted_tags: f64,
    #[serde(rename = "Avg. True Reason Tags")]
    pub avg_true_tags: f64,
    #[serde(rename = "Samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub logits_sha256: Option<String>,
    pub threshold: f64,
}

impl MetricsReport {
    /// `pred` holds post-processed predictions; `raw` optionally holds the
    /// unconstrained per-label thresholded predictions.
    pub fn compute(
        truth: &LabelMatrix,
        pred: &LabelMatrix,
        raw: Option<&LabelMatrix>,
    ) -> Result<Self, MetricError> {
        if truth.is_empty() {
            return Err(MetricError::Empty);
        }
        let overall = pooled_counts(truth, pred, 0..NUM_LABELS)?;
        let overall_f1_raw = match raw {
            Some(r) => Some(pooled_counts(truth, r, 0..NUM_LABELS)?.f1()),
            None => None,
        };
        Ok(MetricsReport {
            main_accuracy: main_accuracy(truth, pred)?,
            main_f1: pooled_counts(truth, pred, MAIN_RANGE)?.f1(),
            overall_f1: overall.f1(),
            overall_precision: overall.precision(),
            overall_recall: overall.recall(),
            overall_f1_raw,
            reason_f1: pooled_counts(truth, pred, REASON_RANGE)?.f1(),
            avg_predicted_tags: avg_tag_count(pred, REASON_RANGE)?,
            avg_true_tags: avg_tag_count(truth, REASON_RANGE)?,
            samples: truth.len(),
            provenance: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bits: &[usize]) -> LabelVector {
        LabelVector::from_indices(bits.iter().copied())
    }

    #[test]
    fn perfect_agreement() {
        let m = vec![row(&[0, 5, 9]), row(&[2, 7, 12, 40])];
        let p: Prf<f64> = micro_prf(&m, &m, 0..41).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        assert_eq!(main_accuracy::<f64>(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn hand_pooled_toy() {
        let truth = vec![row(&[0, 1]), row(&[1, 2])];
        let pred = vec![row(&[0]), row(&[1])];
        let c = pooled_counts(&truth, &pred, 0..3).unwrap();
        assert_eq!(c, PooledCounts { tp: 2, fp: 0, fn_: 2 });
        let p: Prf<f64> = c.prf();
        assert_eq!(p.precision, 1.0);
        assert_eq!(p.recall, 0.5);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn flipped_decision_halves_accuracy() {
        let truth = vec![row(&[0]), row(&[1])];
        let pred = vec![row(&[0]), row(&[3])];
        assert_eq!(main_accuracy::<f64>(&truth, &pred).unwrap(), 0.5);
    }

    #[test]
    fn zero_denominators() {
        let z = vec![LabelVector::zeros()];
        let p: Prf<f32> = micro_prf(&z, &z, 0..41).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        let a = vec![row(&[0])];
        assert_eq!(
            micro_prf::<f64>(&a, &[], 0..41).unwrap_err(),
            MetricError::Shape { truth: 1, pred: 0 }
        );
        assert!(matches!(micro_prf::<f64>(&a, &a, 0..42), Err(MetricError::Columns(_))));
        assert_eq!(avg_tag_count::<f64>(&[], 4..41), Err(MetricError::Empty));
    }

    #[test]
    fn avg_tags() {
        let m = vec![row(&[0, 4, 9, 14, 17, 20, 23, 26, 29, 32])];
        assert_eq!(avg_tag_count::<f64>(&m, 4..41).unwrap(), 9.0);
    }

    #[test]
    fn report_json_keys() {
        let m = vec![row(&[0, 4, 9, 14, 17, 20, 23, 26, 29, 32])];
        let r = MetricsReport::compute(&m, &m, None).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["Main Decision Accuracy (Argmax)"], 1.0);
        assert_eq!(j["F1-micro (Reason Tags Only, Processed)"], 1.0);
        assert_eq!(j["Avg. True Reason Tags"], 9.0);
        assert!(j.get("F1-micro (Overall, Raw Threshold)").is_none());
    }
}
