//! Numeric scenario features with train-split standardization.
//!
//! Every encoding starts with the 18 base dimensions below, z-scored with
//! training-split statistics. [`Encoding::Thermometer`] appends, for each of
//! the 15 numeric base fields, one bit per unit step across the field's legal
//! range (`x >= k` for every integer `k` above the lower limit).

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::scenario::{Scenario, BUFFER_LIMITS, CQI_LIMITS, RSRP_LIMITS, RSRQ_LIMITS, SPEED_LIMITS};
use crate::schema::Mission;

/// speed, buffer; rsrp/rsrq/cqi for serving, target, neighbor; three RSRP
/// deltas; target-serving CQI delta; mission one-hot.
pub const BASE_DIM: usize = 18;
pub const NUMERIC_DIM: usize = 15;
pub const ONE_HOT: std::ops::Range<usize> = 15..18;

pub const BASE_NAMES: [&str; BASE_DIM] = [
    "speed",
    "buffer",
    "serving_rsrp",
    "serving_rsrq",
    "serving_cqi",
    "target_rsrp",
    "target_rsrq",
    "target_cqi",
    "neighbor_rsrp",
    "neighbor_rsrq",
    "neighbor_cqi",
    "delta_rsrp_target_serving",
    "delta_rsrp_neighbor_serving",
    "delta_rsrp_neighbor_target",
    "delta_cqi_target_serving",
    "mission_low_latency",
    "mission_standard",
    "mission_high_throughput",
];

const fn span(l: (f64, f64)) -> (i32, i32) {
    (l.0 as i32, l.1 as i32)
}

const fn uspan(l: (u32, u32)) -> (i32, i32) {
    (l.0 as i32, l.1 as i32)
}

const RSRP_DELTA: (i32, i32) = (span(RSRP_LIMITS).0 - span(RSRP_LIMITS).1, span(RSRP_LIMITS).1 - span(RSRP_LIMITS).0);
const CQI_DELTA: (i32, i32) = (uspan(CQI_LIMITS).0 - uspan(CQI_LIMITS).1, uspan(CQI_LIMITS).1 - uspan(CQI_LIMITS).0);

/// Integer grid `(lo, hi)` of each numeric base field.
pub const GRID: [(i32, i32); NUMERIC_DIM] = [
    uspan(SPEED_LIMITS),
    uspan(BUFFER_LIMITS),
    span(RSRP_LIMITS),
    span(RSRQ_LIMITS),
    uspan(CQI_LIMITS),
    span(RSRP_LIMITS),
    span(RSRQ_LIMITS),
    uspan(CQI_LIMITS),
    span(RSRP_LIMITS),
    span(RSRQ_LIMITS),
    uspan(CQI_LIMITS),
    RSRP_DELTA,
    RSRP_DELTA,
    RSRP_DELTA,
    CQI_DELTA,
];

const fn thermometer_bits() -> usize {
    let mut n = 0;
    let mut d = 0;
    while d < NUMERIC_DIM {
        n += (GRID[d].1 - GRID[d].0) as usize;
        d += 1;
    }
    n
}

pub const THERMOMETER_BITS: usize = thermometer_bits();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    /// The 18 z-scored base dimensions.
    Standardized,
    /// Base dimensions followed by unit-step thermometer bits.
    Thermometer,
}

impl Encoding {
    pub fn dim(self) -> usize {
        match self {
            Encoding::Standardized => BASE_DIM,
            Encoding::Thermometer => BASE_DIM + THERMOMETER_BITS,
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Encoding::Standardized => 0,
            Encoding::Thermometer => 1,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(Encoding::Standardized),
            1 => Some(Encoding::Thermometer),
            _ => None,
        }
    }
}

pub type FeatureVector<T> = Vec<T>;

/// Unscaled base features.
pub fn raw_features<T: Scalar>(s: &Scenario) -> [T; BASE_DIM] {
    raw_f64(s).map(T::lit)
}

fn raw_f64(s: &Scenario) -> [f64; BASE_DIM] {
    let (sv, tg, nb) = (&s.serving, &s.target, &s.neighbor);
    [
        s.speed as f64,
        s.buffer as f64,
        sv.rsrp,
        sv.rsrq,
        sv.cqi as f64,
        tg.rsrp,
        tg.rsrq,
        tg.cqi as f64,
        nb.rsrp,
        nb.rsrq,
        nb.cqi as f64,
        tg.rsrp - sv.rsrp,
        nb.rsrp - sv.rsrp,
        nb.rsrp - tg.rsrp,
        tg.cqi as f64 - sv.cqi as f64,
        (s.mission == Mission::LowLatency) as u8 as f64,
        (s.mission == Mission::Standard) as u8 as f64,
        (s.mission == Mission::HighThroughput) as u8 as f64,
    ]
}

/// Per-dimension centering and scaling of the base dimensions; one-hot
/// dimensions pass through.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
    /// Dimensions whose training variance was zero and are scaled by 1.
    pub constant_dims: Vec<usize>,
}

impl<T: Scalar> FeatureStats<T> {
    pub fn identity() -> Self {
        FeatureStats {
            mean: vec![T::zero(); BASE_DIM],
            scale: vec![T::one(); BASE_DIM],
            constant_dims: Vec::new(),
        }
    }

    /// Mean and population standard deviation over `scenarios`.
    pub fn fit<'a>(scenarios: impl IntoIterator<Item = &'a Scenario>) -> Self {
        let rows: Vec<[f64; BASE_DIM]> = scenarios.into_iter().map(raw_f64).collect();
        let mut stats = Self::identity();
        if rows.is_empty() {
            return stats;
        }
        let n = rows.len() as f64;
        for d in 0..NUMERIC_DIM {
            let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
            stats.mean[d] = T::lit(mean);
            if var > 0.0 {
                stats.scale[d] = T::lit(var.sqrt());
            } else {
                stats.constant_dims.push(d);
            }
        }
        stats
    }

    pub fn apply(&self, raw: &[T; BASE_DIM]) -> [T; BASE_DIM] {
        std::array::from_fn(|d| (raw[d] - self.mean[d]) / self.scale[d])
    }
}

pub fn featurize<T: Scalar>(s: &Scenario, stats: &FeatureStats<T>, encoding: Encoding) -> FeatureVector<T> {
    let raw = raw_f64(s);
    let mut out = Vec::with_capacity(encoding.dim());
    out.extend(stats.apply(&raw.map(T::lit)));
    if encoding == Encoding::Thermometer {
        for (d, &(lo, hi)) in GRID.iter().enumerate() {
            out.extend((lo + 1..=hi).map(|k| if raw[d] >= k as f64 { T::one() } else { T::zero() }));
        }
    }
    out
}
