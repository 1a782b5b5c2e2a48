//! Scenario types and the seeded scenario generator.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{self, BandThresholds};
use crate::schema::{DecisionClass, LabelVector, Mission, NUM_MAIN};

pub const RSRP_LIMITS: (f64, f64) = (-130.0, -50.0);
pub const RSRQ_LIMITS: (f64, f64) = (-25.0, -3.0);
pub const CQI_LIMITS: (u32, u32) = (1, 15);
pub const SPEED_LIMITS: (u32, u32) = (0, 40);
pub const BUFFER_LIMITS: (u32, u32) = (0, 100);
pub const BS_ID_LIMITS: (u32, u32) = (1, 10);

/// Hard cap on candidate draws for one dataset.
pub const MAX_DRAWS: u64 = 10_000_000;

const CHUNK_DRAWS: usize = 1024;
const CHUNKS_PER_ROUND: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsMeasurement {
    pub bs_id: u32,
    /// dBm
    pub rsrp: f64,
    /// dB
    pub rsrq: f64,
    pub cqi: u32,
}

/// One handover assessment instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// m/s
    pub speed: u32,
    /// percent
    pub buffer: u32,
    pub mission: Mission,
    pub serving: BsMeasurement,
    pub target: BsMeasurement,
    pub neighbor: BsMeasurement,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field} = {value} is outside [{min}, {max}]")]
pub struct RangeError {
    pub field: String,
    pub value: String,
    pub min: String,
    pub max: String,
}

impl RangeError {
    fn new(field: impl Into<String>, value: impl ToString, min: impl ToString, max: impl ToString) -> Self {
        RangeError {
            field: field.into(),
            value: value.to_string(),
            min: min.to_string(),
            max: max.to_string(),
        }
    }
}

fn check<T: PartialOrd + ToString>(field: &str, v: T, (min, max): (T, T)) -> Result<(), RangeError> {
    // NaN fails both comparisons and is reported as out of range
    if v >= min && v <= max {
        Ok(())
    } else {
        Err(RangeError::new(field, v, min, max))
    }
}

impl BsMeasurement {
    pub fn validate(&self, role: &str) -> Result<(), RangeError> {
        check(&format!("{role}.bs_id"), self.bs_id, BS_ID_LIMITS)?;
        check(&format!("{role}.rsrp"), self.rsrp, RSRP_LIMITS)?;
        check(&format!("{role}.rsrq"), self.rsrq, RSRQ_LIMITS)?;
        check(&format!("{role}.cqi"), self.cqi, CQI_LIMITS)
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), RangeError> {
        check("speed", self.speed, SPEED_LIMITS)?;
        check("buffer", self.buffer, BUFFER_LIMITS)?;
        self.serving.validate("serving")?;
        self.target.validate("target")?;
        self.neighbor.validate("neighbor")?;
        let ids = [self.serving.bs_id, self.target.bs_id, self.neighbor.bs_id];
        if ids[0] == ids[1] || ids[0] == ids[2] || ids[1] == ids[2] {
            return Err(RangeError::new("bs_id", format!("{ids:?}"), "pairwise", "distinct"));
        }
        Ok(())
    }

    fn key(&self) -> ScenarioKey {
        let m = |b: &BsMeasurement| (b.bs_id, b.rsrp.to_bits(), b.rsrq.to_bits(), b.cqi);
        ScenarioKey(
            self.speed,
            self.buffer,
            self.mission,
            [m(&self.serving), m(&self.target), m(&self.neighbor)],
        )
    }
}

#[derive(Hash, PartialEq, Eq)]
struct ScenarioKey(u32, u32, Mission, [(u32, u64, u64, u32); 3]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub min: T,
    pub max: T,
}

impl<T> Interval<T> {
    pub const fn new(min: T, max: T) -> Self {
        Interval { min, max }
    }
}

/// Sampling ranges; every range must lie inside the legal scenario limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    pub rsrp: Interval<f64>,
    pub rsrq: Interval<f64>,
    pub cqi: Interval<u32>,
    pub speed: Interval<u32>,
    pub buffer: Interval<u32>,
    /// ids are drawn from 1..=num_bs
    pub num_bs: u32,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            rsrp: Interval::new(-120.0, -60.0),
            rsrq: Interval::new(-20.0, -5.0),
            cqi: Interval::new(1, 15),
            speed: Interval::new(0, 40),
            buffer: Interval::new(0, 100),
            num_bs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("count must be positive")]
    ZeroCount,
    #[error("class mix weights must be nonnegative and sum to 1 (got {0:?})")]
    ClassMix([f64; NUM_MAIN]),
    #[error("degenerate range for {field}: min {min} > max {max}")]
    Degenerate { field: &'static str, min: String, max: String },
    #[error("sampling range for {0} leaves the legal limits")]
    OutsideLimits(&'static str),
    #[error("need between 3 and 10 base stations, got {0}")]
    BaseStations(u32),
    #[error("thresholds: {0}")]
    Thresholds(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    /// Target share of each main decision, in label order.
    #[serde(default = "default_mix")]
    pub class_mix: [f64; NUM_MAIN],
    #[serde(default)]
    pub ranges: ParamRanges,
    #[serde(default)]
    pub thresholds: BandThresholds,
}

fn default_mix() -> [f64; NUM_MAIN] {
    [0.25; NUM_MAIN]
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            count: 5000,
            class_mix: default_mix(),
            ranges: ParamRanges::default(),
            thresholds: BandThresholds::default(),
        }
    }
}

fn interval_ok<T: PartialOrd + ToString + Copy>(
    field: &'static str,
    r: Interval<T>,
    limits: (T, T),
) -> Result<(), ConfigError> {
    // NaN bounds compare as None and are rejected too
    if !matches!(r.min.partial_cmp(&r.max), Some(Ordering::Less | Ordering::Equal)) {
        return Err(ConfigError::Degenerate {
            field,
            min: r.min.to_string(),
            max: r.max.to_string(),
        });
    }
    if r.min < limits.0 || r.max > limits.1 {
        return Err(ConfigError::OutsideLimits(field));
    }
    Ok(())
}

impl ParamRanges {
    pub fn validate(&self) -> Result<(), ConfigError> {
        interval_ok("rsrp", self.rsrp, RSRP_LIMITS)?;
        interval_ok("rsrq", self.rsrq, RSRQ_LIMITS)?;
        interval_ok("cqi", self.cqi, CQI_LIMITS)?;
        interval_ok("speed", self.speed, SPEED_LIMITS)?;
        interval_ok("buffer", self.buffer, BUFFER_LIMITS)?;
        if !(3..=BS_ID_LIMITS.1).contains(&self.num_bs) {
            return Err(ConfigError::BaseStations(self.num_bs));
        }
        Ok(())
    }
}

impl GenConfig {
    pub fn with_seed_count(seed: u64, count: usize) -> Self {
        GenConfig {
            seed,
            count,
            ..GenConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(ConfigError::ZeroCount);
        }
        let sum: f64 = self.class_mix.iter().sum();
        if self.class_mix.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::ClassMix(self.class_mix));
        }
        self.ranges.validate()?;
        self.thresholds.validate().map_err(ConfigError::Thresholds)
    }

    /// Per-class sample counts: largest-remainder apportionment of `count`.
    pub fn quotas(&self) -> [usize; NUM_MAIN] {
        let exact: Vec<f64> = self.class_mix.iter().map(|w| w * self.count as f64).collect();
        let mut quotas: [usize; NUM_MAIN] = std::array::from_fn(|c| exact[c].floor() as usize);
        let mut left = self.count - quotas.iter().sum::<usize>().min(self.count);
        let mut order: Vec<usize> = (0..NUM_MAIN).filter(|&c| self.class_mix[c] > 0.0).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &c in order.iter().cycle() {
            if left == 0 {
                break;
            }
            quotas[c] += 1;
            left -= 1;
        }
        quotas
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn draw_measurement<R: Rng>(rng: &mut R, bs_id: u32, r: &ParamRanges) -> BsMeasurement {
    BsMeasurement {
        bs_id,
        rsrp: round2(rng.gen_range(r.rsrp.min..=r.rsrp.max)),
        rsrq: round2(rng.gen_range(r.rsrq.min..=r.rsrq.max)),
        cqi: rng.gen_range(r.cqi.min..=r.cqi.max),
    }
}

/// Draws one scenario uniformly from `ranges`.
pub fn sample_scenario<R: Rng>(rng: &mut R, ranges: &ParamRanges) -> Scenario {
    let speed = rng.gen_range(ranges.speed.min..=ranges.speed.max);
    let buffer = rng.gen_range(ranges.buffer.min..=ranges.buffer.max);
    let mission = Mission::ALL[rng.gen_range(0..Mission::ALL.len())];
    let ids = index::sample(rng, ranges.num_bs as usize, 3);
    let id = |k: usize| ids.index(k) as u32 + 1;
    let serving = draw_measurement(rng, id(0), ranges);
    let target = draw_measurement(rng, id(1), ranges);
    let neighbor = draw_measurement(rng, id(2), ranges);
    Scenario {
        speed,
        buffer,
        mission,
        serving,
        target,
        neighbor,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("class {class} still needs {missing} samples after {draws} draws")]
    Exhausted {
        class: DecisionClass,
        missing: usize,
        draws: u64,
    },
}

/// Deterministic substream `chunk` of the generator seeded with `seed`.
fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Generates `config.count` unique labeled scenarios whose decision mix
/// follows the per-class quotas.
///
/// Candidates are drawn in fixed-size chunks, one rng substream per chunk,
/// labeled in parallel and merged in chunk order, so the output is the same
/// for any thread count.
pub fn generate_dataset(config: &GenConfig) -> Result<Vec<(Scenario, LabelVector)>, GenerateError> {
    config.validate()?;
    let quotas = config.quotas();
    let mut filled = [0usize; NUM_MAIN];
    let mut seen = HashSet::with_capacity(config.count);
    let mut out = Vec::with_capacity(config.count);
    let mut next_chunk = 0u64;
    let mut draws = 0u64;

    while out.len() < config.count {
        if draws >= MAX_DRAWS {
            let (class, missing) = (0..NUM_MAIN)
                .map(|c| (c, quotas[c] - filled[c]))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("four classes");
            return Err(GenerateError::Exhausted {
                class: DecisionClass::ALL[class],
                missing,
                draws,
            });
        }
        let round: Vec<Vec<(Scenario, LabelVector)>> = (next_chunk..next_chunk + CHUNKS_PER_ROUND)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = substream(config.seed, chunk);
                (0..CHUNK_DRAWS)
                    .map(|_| {
                        let s = sample_scenario(&mut rng, &config.ranges);
                        let v = oracle::label_with(&s, &config.thresholds);
                        (s, v)
                    })
                    .collect()
            })
            .collect();
        next_chunk += CHUNKS_PER_ROUND;

        for (s, v) in round.into_iter().flatten() {
            if out.len() == config.count || draws >= MAX_DRAWS {
                break;
            }
            draws += 1;
            let class = v.decision().expect("oracle sets a decision").index();
            if filled[class] < quotas[class] && seen.insert(s.key()) {
                filled[class] += 1;
                out.push((s, v));
            }
        }
    }
    Ok(out)
}
