//! Deterministic ground-truth labeler.
//!
//! RSRP comparisons are made on values rounded to hundredths of a dB, so a
//! difference of exactly 10.00 dB is never pushed over a margin by
//! floating-point noise.

use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;
use crate::schema::{
    Advantage, BufferBand, CqiBand, DecisionClass, GroupTags, IndependentTags, LabelVector,
    Mission, RsrpBand, SpeedBand,
};

pub const ORACLE_VERSION: &str = "oracle-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandThresholds {
    /// Lower edges (dBm) of excellent, good, mediocre and poor; below the last is very poor.
    pub rsrp_edges: [f64; 4],
    pub cqi_high: u32,
    pub cqi_medium: u32,
    /// dB the target must lead or trail the serving cell by to be a clear advantage.
    pub advantage_margin: f64,
    pub speed_high: u32,
    pub speed_medium: u32,
    pub buffer_high: u32,
    pub buffer_sufficient: u32,
    /// Weak target: rsrp strictly below this and cqi at most `weak_target_cqi`.
    pub weak_target_rsrp: f64,
    pub weak_target_cqi: u32,
    pub neighbor_margin: f64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds {
            rsrp_edges: [-70.0, -85.0, -95.0, -110.0],
            cqi_high: 12,
            cqi_medium: 7,
            advantage_margin: 10.0,
            speed_high: 25,
            speed_medium: 15,
            buffer_high: 40,
            buffer_sufficient: 20,
            weak_target_rsrp: -100.0,
            weak_target_cqi: 4,
            neighbor_margin: 10.0,
        }
    }
}

impl BandThresholds {
    pub fn validate(&self) -> Result<(), String> {
        let e = self.rsrp_edges;
        if !(e[0] > e[1] && e[1] > e[2] && e[2] > e[3]) {
            return Err(format!("rsrp edges must be strictly decreasing: {e:?}"));
        }
        if self.cqi_high <= self.cqi_medium {
            return Err("cqi_high must exceed cqi_medium".into());
        }
        if self.speed_high <= self.speed_medium {
            return Err("speed_high must exceed speed_medium".into());
        }
        if self.buffer_high <= self.buffer_sufficient {
            return Err("buffer_high must exceed buffer_sufficient".into());
        }
        let finite = [self.advantage_margin, self.neighbor_margin, self.weak_target_rsrp];
        if finite.iter().any(|x| !x.is_finite()) || e.iter().any(|x| !x.is_finite()) {
            return Err("thresholds must be finite".into());
        }
        if self.advantage_margin < 0.0 || self.neighbor_margin < 0.0 {
            return Err("margins must be nonnegative".into());
        }
        Ok(())
    }

    pub fn rsrp_band(&self, rsrp: f64) -> RsrpBand {
        let x = centi(rsrp);
        let e = self.rsrp_edges.map(centi);
        if x >= e[0] {
            RsrpBand::Excellent
        } else if x >= e[1] {
            RsrpBand::Good
        } else if x >= e[2] {
            RsrpBand::Mediocre
        } else if x >= e[3] {
            RsrpBand::Poor
        } else {
            RsrpBand::VeryPoor
        }
    }

    pub fn cqi_band(&self, cqi: u32) -> CqiBand {
        if cqi >= self.cqi_high {
            CqiBand::High
        } else if cqi >= self.cqi_medium {
            CqiBand::Medium
        } else {
            CqiBand::Low
        }
    }

    pub fn speed_band(&self, speed: u32) -> SpeedBand {
        if speed >= self.speed_high {
            SpeedBand::High
        } else if speed >= self.speed_medium {
            SpeedBand::Medium
        } else {
            SpeedBand::Low
        }
    }

    pub fn buffer_band(&self, buffer: u32) -> BufferBand {
        if buffer >= self.buffer_high {
            BufferBand::High
        } else if buffer >= self.buffer_sufficient {
            BufferBand::Sufficient
        } else {
            BufferBand::CriticalLow
        }
    }

    pub fn advantage(&self, s: &Scenario) -> Advantage {
        let delta = centi(s.target.rsrp) - centi(s.serving.rsrp);
        let margin = centi(self.advantage_margin);
        if delta > margin {
            Advantage::ClearTarget
        } else if delta < -margin {
            Advantage::ClearCurrent
        } else {
            Advantage::Similar
        }
    }
}

/// Value in hundredths, rounded to the nearest integer.
fn centi(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

pub fn band_tags(s: &Scenario, t: &BandThresholds) -> GroupTags {
    GroupTags {
        target_rsrp: t.rsrp_band(s.target.rsrp),
        current_rsrp: t.rsrp_band(s.serving.rsrp),
        target_cqi: t.cqi_band(s.target.cqi),
        current_cqi: t.cqi_band(s.serving.cqi),
        advantage: t.advantage(s),
        speed: t.speed_band(s.speed),
        buffer: t.buffer_band(s.buffer),
        mission: s.mission,
        neighbor_rsrp: t.rsrp_band(s.neighbor.rsrp),
    }
}

fn conflicting(rsrp: RsrpBand, cqi: CqiBand) -> bool {
    use RsrpBand::*;
    match rsrp {
        Excellent | Good => cqi == CqiBand::Low,
        Poor | VeryPoor => cqi == CqiBand::High,
        Mediocre => false,
    }
}

pub fn independent_tags(s: &Scenario, bands: &GroupTags, t: &BandThresholds) -> IndependentTags {
    let mut tags = IndependentTags::empty();
    let margin = centi(t.neighbor_margin);
    let neighbor = centi(s.neighbor.rsrp);
    tags.set(
        IndependentTags::NEIGHBOR_STRONGER,
        neighbor >= centi(s.serving.rsrp) + margin && neighbor >= centi(s.target.rsrp) + margin,
    );
    tags.set(
        IndependentTags::CONFLICT_TARGET,
        conflicting(bands.target_rsrp, bands.target_cqi),
    );
    tags.set(
        IndependentTags::CONFLICT_CURRENT,
        conflicting(bands.current_rsrp, bands.current_cqi),
    );
    let starved = bands.buffer == BufferBand::CriticalLow && bands.mission == Mission::HighThroughput;
    let rushed = bands.mission == Mission::LowLatency
        && bands.speed == SpeedBand::High
        && bands.advantage == Advantage::Similar;
    tags.set(IndependentTags::UNCLEAR_BENEFIT, starved || rushed);
    tags
}

/// First matching rule wins: weak target, conflict, clear target advantage, stay.
pub fn main_decision(
    s: &Scenario,
    bands: &GroupTags,
    independents: IndependentTags,
    t: &BandThresholds,
) -> DecisionClass {
    if centi(s.target.rsrp) < centi(t.weak_target_rsrp) && s.target.cqi <= t.weak_target_cqi {
        DecisionClass::RejectTargetWeak
    } else if independents.contains(IndependentTags::CONFLICT_TARGET)
        || independents.contains(IndependentTags::UNCLEAR_BENEFIT)
    {
        DecisionClass::QuestionConflict
    } else if bands.advantage == Advantage::ClearTarget {
        DecisionClass::ExecuteOptimal
    } else {
        DecisionClass::RejectCurrentBetter
    }
}

/// Full oracle output in structured form.
pub fn assess(s: &Scenario, t: &BandThresholds) -> (DecisionClass, GroupTags, IndependentTags) {
    let bands = band_tags(s, t);
    let independents = independent_tags(s, &bands, t);
    let decision = main_decision(s, &bands, independents, t);
    (decision, bands, independents)
}

pub fn to_label_vector(
    decision: DecisionClass,
    bands: &GroupTags,
    independents: IndependentTags,
) -> LabelVector {
    let mut v = LabelVector::zeros();
    v.set(decision.index(), true);
    for g in crate::schema::TagGroup::ALL {
        v.set(bands.label_index(*g), true);
    }
    for i in independents.label_indices() {
        v.set(i, true);
    }
    v
}

pub fn label_with(s: &Scenario, t: &BandThresholds) -> LabelVector {
    let (d, b, i) = assess(s, t);
    to_label_vector(d, &b, i)
}

/// Labels with the default thresholds.
pub fn label(s: &Scenario) -> LabelVector {
    label_with(s, &BandThresholds::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BsMeasurement;

    fn bs(bs_id: u32, rsrp: f64, rsrq: f64, cqi: u32) -> BsMeasurement {
        BsMeasurement { bs_id, rsrp, rsrq, cqi }
    }

    fn base() -> Scenario {
        Scenario {
            speed: 10,
            buffer: 50,
            mission: Mission::Standard,
            serving: bs(1, -80.0, -10.0, 10),
            target: bs(2, -80.0, -10.0, 10),
            neighbor: bs(3, -100.0, -10.0, 10),
        }
    }

    #[test]
    fn advantage_margin_is_exclusive() {
        let t = BandThresholds::default();
        let mut s = base();
        assert_eq!(t.advantage(&s), Advantage::Similar);
        s.target.rsrp = -70.0;
        assert_eq!(t.advantage(&s), Advantage::Similar);
        s.target.rsrp = -69.99;
        assert_eq!(t.advantage(&s), Advantage::ClearTarget);
        s.target.rsrp = -90.0;
        assert_eq!(t.advantage(&s), Advantage::Similar);
        s.target.rsrp = -90.01;
        assert_eq!(t.advantage(&s), Advantage::ClearCurrent);
        // 10.00 dB apart but not exactly representable
        s.serving.rsrp = -98.62;
        s.target.rsrp = -88.62;
        assert_eq!(t.advantage(&s), Advantage::Similar);
    }

    #[test]
    fn band_edges() {
        let t = BandThresholds::default();
        let cases = [
            (-70.0, RsrpBand::Excellent),
            (-70.01, RsrpBand::Good),
            (-85.0, RsrpBand::Good),
            (-85.01, RsrpBand::Mediocre),
            (-95.0, RsrpBand::Mediocre),
            (-109.81, RsrpBand::Poor),
            (-110.0, RsrpBand::Poor),
            (-110.01, RsrpBand::VeryPoor),
        ];
        for (x, b) in cases {
            assert_eq!(t.rsrp_band(x), b, "rsrp {x}");
        }
        assert_eq!(t.cqi_band(12), CqiBand::High);
        assert_eq!(t.cqi_band(11), CqiBand::Medium);
        assert_eq!(t.cqi_band(7), CqiBand::Medium);
        assert_eq!(t.cqi_band(6), CqiBand::Low);
        assert_eq!(t.speed_band(25), SpeedBand::High);
        assert_eq!(t.speed_band(24), SpeedBand::Medium);
        assert_eq!(t.speed_band(14), SpeedBand::Low);
        assert_eq!(t.buffer_band(40), BufferBand::High);
        assert_eq!(t.buffer_band(39), BufferBand::Sufficient);
        assert_eq!(t.buffer_band(19), BufferBand::CriticalLow);
    }

    #[test]
    fn weak_target_uses_inclusive_cqi_bound() {
        let t = BandThresholds::default();
        let mut s = base();
        s.target = bs(2, -105.0, -14.0, 4);
        let (d, _, _) = assess(&s, &t);
        assert_eq!(d, DecisionClass::RejectTargetWeak);
        s.target.cqi = 5;
        assert_ne!(assess(&s, &t).0, DecisionClass::RejectTargetWeak);
        s.target = bs(2, -100.0, -14.0, 1);
        assert_ne!(assess(&s, &t).0, DecisionClass::RejectTargetWeak);
    }

    #[test]
    fn unclear_benefit_branches() {
        let t = BandThresholds::default();
        let mut s = base();
        s.buffer = 5;
        s.mission = Mission::HighThroughput;
        assert!(assess(&s, &t).2.contains(IndependentTags::UNCLEAR_BENEFIT));
        assert_eq!(assess(&s, &t).0, DecisionClass::QuestionConflict);

        let mut s = base();
        s.speed = 30;
        s.mission = Mission::LowLatency;
        assert!(assess(&s, &t).2.contains(IndependentTags::UNCLEAR_BENEFIT));
        s.target.rsrp = -60.0;
        assert!(!assess(&s, &t).2.contains(IndependentTags::UNCLEAR_BENEFIT));
    }

    #[test]
    fn current_conflict_does_not_question() {
        let t = BandThresholds::default();
        let mut s = base();
        s.serving.cqi = 2;
        let (d, _, ind) = assess(&s, &t);
        assert!(ind.contains(IndependentTags::CONFLICT_CURRENT));
        assert_eq!(d, DecisionClass::RejectCurrentBetter);
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let t = BandThresholds {
            rsrp_edges: [-70.0, -95.0, -85.0, -110.0],
            ..BandThresholds::default()
        };
        assert!(t.validate().is_err());
        let t = BandThresholds {
            cqi_medium: 12,
            ..BandThresholds::default()
        };
        assert!(t.validate().is_err());
        assert!(BandThresholds::default().validate().is_ok());
    }
}
