//! The fixed 41-label universe.
//!
//! Indices 0..4 are the main decisions, 4..37 hold nine mutually exclusive
//! reason-tag groups (sizes 5, 5, 3, 3, 3, 3, 3, 3, 5) and 37..41 are the
//! independent tags. The ordering is a file contract: dataset labels and
//! imported logits are both index-aligned with [`LABEL_NAMES`].

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub const NUM_LABELS: usize = 41;
pub const NUM_MAIN: usize = 4;
pub const NUM_GROUPS: usize = 9;
pub const NUM_INDEPENDENT: usize = 4;

pub const MAIN_RANGE: Range<usize> = 0..4;
pub const REASON_RANGE: Range<usize> = 4..41;
pub const INDEPENDENT_RANGE: Range<usize> = 37..41;

pub const GROUP_SIZES: [usize; NUM_GROUPS] = [5, 5, 3, 3, 3, 3, 3, 3, 5];

pub const LABEL_NAMES: [&str; NUM_LABELS] = [
    "Execute_Handover_Optimal",
    "Reject_Handover_Current_BS_Better",
    "Reject_Handover_Target_Signal_Too_Weak",
    "Question_Handover_Conflicting_Data",
    "RT_Target_Excellent_Signal_RSRP",
    "RT_Target_Good_Signal_RSRP",
    "RT_Target_Mediocre_Signal_RSRP",
    "RT_Target_Poor_Signal_RSRP",
    "RT_Target_VeryPoor_Signal_RSRP",
    "RT_Current_Excellent_Signal_RSRP",
    "RT_Current_Good_Signal_RSRP",
    "RT_Current_Mediocre_Signal_RSRP",
    "RT_Current_Poor_Signal_RSRP",
    "RT_Current_VeryPoor_Signal_RSRP",
    "RT_Target_CQI_High",
    "RT_Target_CQI_Medium",
    "RT_Target_CQI_Low",
    "RT_Current_CQI_High",
    "RT_Current_CQI_Medium",
    "RT_Current_CQI_Low",
    "RT_Clear_Target_Advantage_RSRP",
    "RT_Similar_RSRP",
    "RT_Clear_Current_Advantage_RSRP",
    "RT_High_Speed_UAV",
    "RT_Medium_Speed_UAV",
    "RT_Low_Speed_UAV",
    "RT_Buffer_Critical_Low",
    "RT_Buffer_Sufficient",
    "RT_Buffer_High",
    "RT_Mission_Low_Latency",
    "RT_Mission_Standard",
    "RT_Mission_High_Throughput",
    "RT_Neighbor_Signal_Excellent",
    "RT_Neighbor_Signal_Good",
    "RT_Neighbor_Signal_Mediocre",
    "RT_Neighbor_Signal_Poor",
    "RT_Neighbor_Signal_VeryPoor",
    "RT_Neighbor_Is_Stronger_Alternative",
    "RT_Conflicting_CQI_RSRP_Target",
    "RT_Conflicting_CQI_RSRP_Current",
    "RT_Unclear_Benefit_Due_To_Buffer_Mission",
];

macro_rules! indexed_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_index(i: usize) -> Option<Self> {
                Self::ALL.get(i).copied()
            }
        }
    };
}

indexed_enum!(
    /// The four exclusive handover actions, in label order.
    DecisionClass {
        ExecuteOptimal,
        RejectCurrentBetter,
        RejectTargetWeak,
        QuestionConflict,
    }
);

impl DecisionClass {
    pub fn name(self) -> &'static str {
        LABEL_NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        LABEL_NAMES[MAIN_RANGE]
            .iter()
            .position(|n| *n == name)
            .and_then(Self::from_index)
    }
}

impl fmt::Display for DecisionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

indexed_enum!(
    /// Mutually exclusive reason-tag groups, in label order.
    TagGroup {
        TargetRsrp,
        CurrentRsrp,
        TargetCqi,
        CurrentCqi,
        Advantage,
        Speed,
        Buffer,
        Mission,
        NeighborRsrp,
    }
);

impl TagGroup {
    pub fn range(self) -> Range<usize> {
        let start = NUM_MAIN + GROUP_SIZES[..self.index()].iter().sum::<usize>();
        start..start + GROUP_SIZES[self.index()]
    }

    pub fn size(self) -> usize {
        GROUP_SIZES[self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            TagGroup::TargetRsrp => "TargetRSRP",
            TagGroup::CurrentRsrp => "CurrentRSRP",
            TagGroup::TargetCqi => "TargetCQI",
            TagGroup::CurrentCqi => "CurrentCQI",
            TagGroup::Advantage => "Advantage",
            TagGroup::Speed => "Speed",
            TagGroup::Buffer => "Buffer",
            TagGroup::Mission => "Mission",
            TagGroup::NeighborRsrp => "NeighborRSRP",
        }
    }
}

indexed_enum!(RsrpBand { Excellent, Good, Mediocre, Poor, VeryPoor });
indexed_enum!(CqiBand { High, Medium, Low });
indexed_enum!(Advantage { ClearTarget, Similar, ClearCurrent });
indexed_enum!(SpeedBand { High, Medium, Low });
indexed_enum!(BufferBand { CriticalLow, Sufficient, High });
indexed_enum!(
    /// Mission priority of the UAV.
    Mission {
        LowLatency,
        Standard,
        HighThroughput,
    }
);

/// One selected tag per exclusive group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupTags {
    pub target_rsrp: RsrpBand,
    pub current_rsrp: RsrpBand,
    pub target_cqi: CqiBand,
    pub current_cqi: CqiBand,
    pub advantage: Advantage,
    pub speed: SpeedBand,
    pub buffer: BufferBand,
    pub mission: Mission,
    pub neighbor_rsrp: RsrpBand,
}

impl GroupTags {
    /// Position of the selected tag inside each group, in group order.
    pub fn offsets(&self) -> [usize; NUM_GROUPS] {
        [
            self.target_rsrp.index(),
            self.current_rsrp.index(),
            self.target_cqi.index(),
            self.current_cqi.index(),
            self.advantage.index(),
            self.speed.index(),
            self.buffer.index(),
            self.mission.index(),
            self.neighbor_rsrp.index(),
        ]
    }

    pub fn from_offsets(o: [usize; NUM_GROUPS]) -> Option<Self> {
        Some(GroupTags {
            target_rsrp: RsrpBand::from_index(o[0])?,
            current_rsrp: RsrpBand::from_index(o[1])?,
            target_cqi: CqiBand::from_index(o[2])?,
            current_cqi: CqiBand::from_index(o[3])?,
            advantage: Advantage::from_index(o[4])?,
            speed: SpeedBand::from_index(o[5])?,
            buffer: BufferBand::from_index(o[6])?,
            mission: Mission::from_index(o[7])?,
            neighbor_rsrp: RsrpBand::from_index(o[8])?,
        })
    }

    /// Absolute label index of the tag selected in `group`.
    pub fn label_index(&self, group: TagGroup) -> usize {
        group.range().start + self.offsets()[group.index()]
    }

    pub fn label_name(&self, group: TagGroup) -> &'static str {
        LABEL_NAMES[self.label_index(group)]
    }
}

/// Bitmask over the four independent tags (bit i ↔ label 37 + i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IndependentTags(u8);

impl IndependentTags {
    pub const NEIGHBOR_STRONGER: IndependentTags = IndependentTags(1);
    pub const CONFLICT_TARGET: IndependentTags = IndependentTags(1 << 1);
    pub const CONFLICT_CURRENT: IndependentTags = IndependentTags(1 << 2);
    pub const UNCLEAR_BENEFIT: IndependentTags = IndependentTags(1 << 3);

    pub const fn empty() -> Self {
        IndependentTags(0)
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits < 16).then_some(IndependentTags(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, other: IndependentTags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: IndependentTags) {
        self.0 |= other.0;
    }

    pub fn set(&mut self, other: IndependentTags, on: bool) {
        if on {
            self.0 |= other.0;
        } else {
            self.0 &= !other.0;
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Absolute label indices of the active tags, ascending.
    pub fn label_indices(self) -> impl Iterator<Item = usize> {
        (0..NUM_INDEPENDENT)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(|i| INDEPENDENT_RANGE.start + i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("label vector has {0} entries, expected {NUM_LABELS}")]
    Length(usize),
    #[error("label flag at index {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: i64 },
    #[error("unknown label name {0:?}")]
    UnknownLabel(String),
}

/// First structural constraint a label vector breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("no main decision label is set")]
    NoMainDecision,
    #[error("{0} main decision labels are set")]
    MultipleMainDecisions(usize),
    #[error("group {} has no active tag", .0.name())]
    EmptyGroup(TagGroup),
    #[error("group {name} has {count} active tags", name = .0.name(), count = .1)]
    CrowdedGroup(TagGroup, usize),
}

/// A 41-flag multi-hot vector, one bit per label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelVector(u64);

impl LabelVector {
    pub const fn zeros() -> Self {
        LabelVector(0)
    }

    /// Builds a vector from 0/1 flags; any other length or value is rejected.
    pub fn from_flags<I: Into<i64> + Copy>(flags: &[I]) -> Result<Self, SchemaError> {
        if flags.len() != NUM_LABELS {
            return Err(SchemaError::Length(flags.len()));
        }
        let mut v = LabelVector::zeros();
        for (i, f) in flags.iter().enumerate() {
            match (*f).into() {
                0 => {}
                1 => v.set(i, true),
                value => return Err(SchemaError::NotBinary { index: i, value }),
            }
        }
        Ok(v)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = LabelVector::zeros();
        for i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < NUM_LABELS, "label index {i} out of range");
        self.0 & (1 << i) != 0
    }

    pub fn set(&mut self, i: usize, on: bool) {
        assert!(i < NUM_LABELS, "label index {i} out of range");
        if on {
            self.0 |= 1 << i;
        } else {
            self.0 &= !(1 << i);
        }
    }

    pub fn flags(&self) -> [u8; NUM_LABELS] {
        std::array::from_fn(|i| self.get(i) as u8)
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn count_in(&self, range: Range<usize>) -> usize {
        range.filter(|&i| self.get(i)).count()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_LABELS).filter(move |&i| self.get(i))
    }

    /// Lowest active main-decision index, if any.
    pub fn decision(&self) -> Option<DecisionClass> {
        MAIN_RANGE
            .into_iter()
            .find(|&i| self.get(i))
            .and_then(DecisionClass::from_index)
    }
}

impl fmt::Debug for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.active().map(|i| LABEL_NAMES[i]))
            .finish()
    }
}

/// The label universe with its partition into decisions, groups and independents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    labels: &'static [&'static str],
    main_count: usize,
    groups: [Range<usize>; NUM_GROUPS],
    independents: Range<usize>,
}

pub fn canonical_schema() -> LabelSchema {
    LabelSchema {
        labels: &LABEL_NAMES,
        main_count: NUM_MAIN,
        groups: std::array::from_fn(|g| TagGroup::ALL[g].range()),
        independents: INDEPENDENT_RANGE,
    }
}

impl Default for LabelSchema {
    fn default() -> Self {
        canonical_schema()
    }
}

impl LabelSchema {
    pub fn labels(&self) -> &[&'static str] {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn main_count(&self) -> usize {
        self.main_count
    }

    pub fn main_range(&self) -> Range<usize> {
        0..self.main_count
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn independents(&self) -> Range<usize> {
        self.independents.clone()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, SchemaError> {
        self.labels
            .iter()
            .position(|l| *l == name)
            .ok_or_else(|| SchemaError::UnknownLabel(name.to_string()))
    }

    pub fn validate(&self, v: &LabelVector) -> Result<(), Violation> {
        match v.count_in(self.main_range()) {
            0 => return Err(Violation::NoMainDecision),
            1 => {}
            n => return Err(Violation::MultipleMainDecisions(n)),
        }
        for (g, range) in self.groups.iter().enumerate() {
            let group = TagGroup::ALL[g];
            match v.count_in(range.clone()) {
                0 => return Err(Violation::EmptyGroup(group)),
                1 => {}
                n => return Err(Violation::CrowdedGroup(group, n)),
            }
        }
        Ok(())
    }

    /// JSON export consumed by external trainers: ordered names plus boundaries.
    pub fn to_json(&self) -> serde_json::Value {
        let groups: Vec<_> = TagGroup::ALL
            .iter()
            .zip(&self.groups)
            .map(|(g, r)| json!({ "name": g.name(), "start": r.start, "end": r.end }))
            .collect();
        json!({
            "num_labels": self.len(),
            "labels": self.labels,
            "main": { "start": 0, "end": self.main_count },
            "groups": groups,
            "independents": { "start": self.independents.start, "end": self.independents.end },
        })
    }
}

/// Validates against the canonical schema.
pub fn validate(v: &LabelVector) -> Result<(), Violation> {
    canonical_schema().validate(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_d() -> LabelVector {
        let s = canonical_schema();
        let names = [
            "Reject_Handover_Current_BS_Better",
            "RT_Target_Poor_Signal_RSRP",
            "RT_Current_Good_Signal_RSRP",
            "RT_Target_CQI_Low",
            "RT_Current_CQI_High",
            "RT_Clear_Current_Advantage_RSRP",
            "RT_Low_Speed_UAV",
            "RT_Buffer_High",
            "RT_Mission_Standard",
            "RT_Neighbor_Signal_Good",
        ];
        LabelVector::from_indices(names.iter().map(|n| s.index_of(n).unwrap()))
    }

    #[test]
    fn canonical_counts() {
        let s = canonical_schema();
        assert_eq!(s.len(), 41);
        assert_eq!(s.main_count(), 4);
        assert_eq!(s.groups().len(), 9);
        assert_eq!(s.labels()[2], "Reject_Handover_Target_Signal_Too_Weak");
        let sizes: Vec<usize> = s.groups().iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![5, 5, 3, 3, 3, 3, 3, 3, 5]);
        assert_eq!(sizes.iter().sum::<usize>() + s.independents().len() + s.main_count(), 41);
    }

    #[test]
    fn ranges_tile_reason_columns() {
        let s = canonical_schema();
        let mut next = s.main_count();
        for r in s.groups() {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, 37);
        assert_eq!(s.independents(), 37..41);
    }

    #[test]
    fn index_lookup() {
        let s = canonical_schema();
        assert_eq!(s.index_of("Execute_Handover_Optimal").unwrap(), 0);
        assert_eq!(s.index_of("RT_Similar_RSRP").unwrap(), 21);
        assert_eq!(
            s.index_of("RT_Bogus"),
            Err(SchemaError::UnknownLabel("RT_Bogus".into()))
        );
        for (i, name) in s.labels().iter().enumerate() {
            assert_eq!(s.index_of(name).unwrap(), i);
        }
    }

    #[test]
    fn validate_cases() {
        assert_eq!(validate(&LabelVector::zeros()), Err(Violation::NoMainDecision));
        assert_eq!(validate(&example_d()), Ok(()));

        let mut v = example_d();
        v.set(TagGroup::Buffer.range().start, true);
        assert_eq!(validate(&v), Err(Violation::CrowdedGroup(TagGroup::Buffer, 2)));

        let mut v = example_d();
        v.set(0, true);
        assert_eq!(validate(&v), Err(Violation::MultipleMainDecisions(2)));

        let mut v = example_d();
        v.set(TagGroup::NeighborRsrp.range().start + 1, false);
        assert_eq!(validate(&v), Err(Violation::EmptyGroup(TagGroup::NeighborRsrp)));

        // independents are free
        let mut v = example_d();
        for i in INDEPENDENT_RANGE {
            v.set(i, true);
        }
        assert_eq!(validate(&v), Ok(()));
    }

    #[test]
    fn flag_lengths_are_checked() {
        assert_eq!(LabelVector::from_flags(&[0u8; 40]), Err(SchemaError::Length(40)));
        let mut flags = [0u8; 41];
        flags[5] = 2;
        assert_eq!(
            LabelVector::from_flags(&flags),
            Err(SchemaError::NotBinary { index: 5, value: 2 })
        );
        let v = example_d();
        assert_eq!(LabelVector::from_flags(&v.flags()).unwrap(), v);
    }

    #[test]
    fn group_tag_offsets_roundtrip() {
        let offsets = [4, 1, 2, 0, 1, 2, 0, 2, 3];
        let tags = GroupTags::from_offsets(offsets).unwrap();
        assert_eq!(tags.offsets(), offsets);
        assert_eq!(tags.label_name(TagGroup::TargetRsrp), "RT_Target_VeryPoor_Signal_RSRP");
        assert_eq!(tags.label_name(TagGroup::Mission), "RT_Mission_High_Throughput");
        assert!(GroupTags::from_offsets([5, 0, 0, 0, 0, 0, 0, 0, 0]).is_none());
    }

    #[test]
    fn schema_json_export() {
        let j = canonical_schema().to_json();
        assert_eq!(j["labels"].as_array().unwrap().len(), 41);
        assert_eq!(j["groups"][8]["name"], "NeighborRSRP");
        assert_eq!(j["groups"][8]["end"], 37);
    }
}
