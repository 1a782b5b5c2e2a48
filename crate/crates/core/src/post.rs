//! Turns 41 raw logits into a structurally valid assessment.
//!
//! The main decision and each exclusive group take the argmax of their
//! logits (lowest index wins ties); independent tags are active when their
//! sigmoid probability is strictly above the threshold.

use std::ops::Range;

use thiserror::Error;

use crate::oracle;
use crate::scalar::{sigmoid, Scalar};
use crate::schema::{
    DecisionClass, GroupTags, IndependentTags, LabelSchema, LabelVector, Violation, NUM_GROUPS,
    NUM_LABELS,
};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PostError {
    #[error("expected {NUM_LABELS} logits, got {0}")]
    Length(usize),
    #[error("logit {index} is not finite")]
    NonFinite { index: usize },
    #[error("threshold {0} is outside (0, 1)")]
    Threshold(f64),
    #[error("label vector is not a valid assessment: {0}")]
    Invalid(#[from] Violation),
}

/// 41 finite scores, index-aligned with the label schema.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector<T>(Vec<T>);

impl<T: Scalar> LogitVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, PostError> {
        if values.len() != NUM_LABELS {
            return Err(PostError::Length(values.len()));
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(PostError::NonFinite { index });
        }
        Ok(LogitVector(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.0.iter().map(|&x| sigmoid(x)).collect()
    }
}

/// Post-processed classifier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Assessment {
    pub decision: DecisionClass,
    pub groups: GroupTags,
    pub independents: IndependentTags,
}

impl Assessment {
    pub fn to_label_vector(&self) -> LabelVector {
        oracle::to_label_vector(self.decision, &self.groups, self.independents)
    }

    pub fn from_label_vector(v: &LabelVector, schema: &LabelSchema) -> Result<Self, PostError> {
        schema.validate(v)?;
        let first = |r: Range<usize>| r.clone().find(|&i| v.get(i)).expect("validated") - r.start;
        let decision = DecisionClass::from_index(first(schema.main_range())).expect("validated");
        let offsets: [usize; NUM_GROUPS] = std::array::from_fn(|g| first(schema.groups()[g].clone()));
        let groups = GroupTags::from_offsets(offsets).expect("validated");
        let mut bits = 0u8;
        for (k, i) in schema.independents().enumerate() {
            if v.get(i) {
                bits |= 1 << k;
            }
        }
        Ok(Assessment {
            decision,
            groups,
            independents: IndependentTags::from_bits(bits).expect("four independents"),
        })
    }

    /// The oracle's ground-truth assessment of a scenario.
    pub fn from_oracle(s: &crate::scenario::Scenario, t: &oracle::BandThresholds) -> Self {
        let (decision, groups, independents) = oracle::assess(s, t);
        Assessment {
            decision,
            groups,
            independents,
        }
    }

    pub fn tag_names(&self) -> Vec<&'static str> {
        self.to_label_vector()
            .active()
            .skip(1)
            .map(|i| crate::schema::LABEL_NAMES[i])
            .collect()
    }
}

/// Offset of the largest value in `xs`; the earliest maximum wins.
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn decide<T: Scalar>(
    logits: &LogitVector<T>,
    schema: &LabelSchema,
    threshold: T,
) -> Result<Assessment, PostError> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(PostError::Threshold(threshold.as_f64()));
    }
    let x = logits.values();
    let decision = DecisionClass::from_index(argmax(&x[schema.main_range()])).expect("4 mains");
    let offsets: [usize; NUM_GROUPS] = std::array::from_fn(|g| argmax(&x[schema.groups()[g].clone()]));
    let groups = GroupTags::from_offsets(offsets).expect("group argmax within size");
    let mut bits = 0u8;
    for (k, i) in schema.independents().enumerate() {
        if sigmoid(x[i]) > threshold {
            bits |= 1 << k;
        }
    }
    Ok(Assessment {
        decision,
        groups,
        independents: IndependentTags::from_bits(bits).expect("four independents"),
    })
}

/// Validates raw values and post-processes them in one step.
pub fn decide_raw<T: Scalar>(values: &[T], threshold: T) -> Result<Assessment, PostError> {
    let logits = LogitVector::new(values.to_vec())?;
    decide(&logits, &crate::schema::canonical_schema(), threshold)
}

/// Per-label sigmoid thresholding with no structural constraints.
pub fn threshold_all<T: Scalar>(logits: &LogitVector<T>, threshold: T) -> LabelVector {
    LabelVector::from_indices(
        logits
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &x)| sigmoid(x) > threshold)
            .map(|(i, _)| i),
    )
}
