//! JSON-lines dataset files, stratified splitting and the logits interchange.
//!
//! A dataset file starts with one `{"header": ...}` line carrying the full
//! generator config, followed by one record per line. Logits files carry one
//! `{"id": .., "logits": [41 numbers]}` object per line and no header.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{self, ORACLE_VERSION};
use crate::post::LogitVector;
use crate::scenario::{GenConfig, Scenario};
use crate::schema::{DecisionClass, LabelVector, LABEL_NAMES, NUM_LABELS, NUM_MAIN};
use crate::text;

pub const DATASET_FORMAT: &str = "uav-handover-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("record {id}: {message}")]
    Integrity { id: u64, message: String },
    #[error("class {class} has {count} samples; stratification needs at least 2")]
    Stratification { class: DecisionClass, count: usize },
    #[error("split ratio {0} is outside (0, 1)")]
    Ratio(f64),
    #[error("line {line}: logits for unknown id {id}")]
    UnknownId { line: usize, id: u64 },
    #[error("line {line}: duplicate logits for id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("line {line}: id {id} has {count} logits, expected {NUM_LABELS}")]
    WrongCount { line: usize, id: u64, count: usize },
    #[error("line {line}: id {id} has a non-finite logit")]
    NonFinite { line: usize, id: u64 },
    #[error("no logits for dataset id {0}")]
    MissingId(u64),
}

impl DatasetError {
    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub ratio: f64,
    pub seed: u64,
    /// "train" or "test"
    pub part: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub oracle_version: String,
    pub sampling: String,
    pub generator: GenConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitInfo>,
}

impl DatasetHeader {
    pub fn new(generator: GenConfig) -> Self {
        DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            oracle_version: ORACLE_VERSION.into(),
            sampling: "uniform".into(),
            generator,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub scenario: Scenario,
    pub text: String,
    pub labels: Vec<u8>,
    pub decision: String,
    pub tags: Vec<String>,
}

impl DatasetRecord {
    pub fn new(id: u64, scenario: Scenario, labels: LabelVector) -> Self {
        let decision = labels.decision().expect("oracle labels carry a decision");
        DatasetRecord {
            id,
            scenario,
            text: text::render(&scenario),
            labels: labels.flags().to_vec(),
            decision: decision.name().to_string(),
            tags: labels
                .active()
                .filter(|&i| i >= NUM_MAIN)
                .map(|i| LABEL_NAMES[i].to_string())
                .collect(),
        }
    }

    pub fn label_vector(&self) -> LabelVector {
        LabelVector::from_flags(&self.labels).expect("validated on read")
    }

    pub fn class(&self) -> DecisionClass {
        self.label_vector().decision().expect("validated on read")
    }

    /// Checks every record invariant against the oracle configured by `header`.
    pub fn check(&self, header: &DatasetHeader) -> Result<(), DatasetError> {
        let fail = |message: String| DatasetError::Integrity { id: self.id, message };
        self.scenario.validate().map_err(|e| fail(e.to_string()))?;
        if self.text != text::render(&self.scenario) {
            return Err(fail("text does not match the rendered scenario".into()));
        }
        let labels = LabelVector::from_flags(&self.labels).map_err(|e| fail(e.to_string()))?;
        let expected = oracle::label_with(&self.scenario, &header.generator.thresholds);
        if labels != expected {
            return Err(fail(format!("labels {labels:?} disagree with oracle {expected:?}")));
        }
        let canonical = DatasetRecord::new(self.id, self.scenario, labels);
        if self.decision != canonical.decision {
            return Err(fail(format!("decision {:?} does not match labels", self.decision)));
        }
        if self.tags != canonical.tags {
            return Err(fail("tag names do not match labels".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DatasetHeader,
}

impl Dataset {
    /// Labeled pairs from the generator, numbered from 0.
    pub fn from_generated(config: GenConfig, data: &[(Scenario, LabelVector)]) -> Self {
        Dataset {
            header: DatasetHeader::new(config),
            records: data
                .iter()
                .enumerate()
                .map(|(i, (s, v))| DatasetRecord::new(i as u64, *s, *v))
                .collect(),
        }
    }

    pub fn generate(config: &GenConfig) -> Result<Self, crate::scenario::GenerateError> {
        let data = crate::scenario::generate_dataset(config)?;
        Ok(Self::from_generated(config.clone(), &data))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        self.records.iter().map(|r| r.scenario).collect()
    }

    pub fn labels(&self) -> Vec<LabelVector> {
        self.records.iter().map(DatasetRecord::label_vector).collect()
    }

    pub fn pairs(&self) -> Vec<(Scenario, LabelVector)> {
        self.records.iter().map(|r| (r.scenario, r.label_vector())).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = HeaderLine {
            header: self.header.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| DatasetError::Malformed { line: 1, message: e.to_string() })?;
                serde_json::from_str::<HeaderLine>(&line)
                    .map_err(|e| DatasetError::Malformed {
                        line: 1,
                        message: format!("bad header: {e}"),
                    })?
                    .header
            }
            None => {
                return Err(DatasetError::Malformed {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
            return Err(DatasetError::Malformed {
                line: 1,
                message: format!("unsupported format {} v{}", header.format, header.version),
            });
        }
        if header.oracle_version != ORACLE_VERSION {
            return Err(DatasetError::Malformed {
                line: 1,
                message: format!("unsupported oracle {}", header.oracle_version),
            });
        }
        let mut records = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in lines {
            let no = i + 1;
            let line = line.map_err(|e| DatasetError::Malformed { line: no, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DatasetRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
                line: no,
                message: e.to_string(),
            })?;
            if !ids.insert(rec.id) {
                return Err(DatasetError::Integrity {
                    id: rec.id,
                    message: "duplicate id".into(),
                });
            }
            rec.check(&header)?;
            records.push(rec);
        }
        Ok(Dataset { header, records })
    }
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let f = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    ds.write_to(BufWriter::new(f)).map_err(|e| DatasetError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let f = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    Dataset::read_from(BufReader::new(f))
}

/// Per-class partition: each class contributes round(n * ratio) samples to
/// train (at least one to each side), chosen by a seeded shuffle. Both parts
/// keep the input order.
pub fn split_stratified(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::Ratio(ratio));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_MAIN];
    for (i, r) in ds.records.iter().enumerate() {
        by_class[r.class().index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.records.len()];
    for (c, members) in by_class.iter_mut().enumerate() {
        match members.len() {
            0 => continue,
            1 => {
                return Err(DatasetError::Stratification {
                    class: DecisionClass::ALL[c],
                    count: 1,
                })
            }
            n => {
                members.shuffle(&mut rng);
                let k = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
                for &i in &members[..k] {
                    in_train[i] = true;
                }
            }
        }
    }
    let part = |want: bool, name: &str| {
        let mut header = ds.header.clone();
        header.split = Some(SplitInfo {
            ratio,
            seed,
            part: name.into(),
        });
        Dataset {
            header,
            records: ds
                .records
                .iter()
                .zip(&in_train)
                .filter(|(_, &t)| t == want)
                .map(|(r, _)| r.clone())
                .collect(),
        }
    };
    Ok((part(true, "train"), part(false, "test")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsRecord {
    pub id: u64,
    pub logits: Vec<f64>,
}

impl LogitsRecord {
    pub fn logit_vector(&self) -> LogitVector<f64> {
        LogitVector::new(self.logits.clone()).expect("validated on read")
    }
}

pub fn write_logits<W: Write>(records: &[LogitsRecord], mut w: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads logits and aligns them with the dataset's record order.
pub fn read_logits_from<R: BufRead>(r: R, ds: &Dataset) -> Result<Vec<LogitsRecord>, DatasetError> {
    let position: HashMap<u64, usize> = ds.records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut slots: Vec<Option<LogitsRecord>> = vec![None; ds.records.len()];
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| DatasetError::Malformed { line: no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogitsRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: no,
            message: e.to_string(),
        })?;
        let slot = *position
            .get(&rec.id)
            .ok_or(DatasetError::UnknownId { line: no, id: rec.id })?;
        if slots[slot].is_some() {
            return Err(DatasetError::DuplicateId { line: no, id: rec.id });
        }
        if rec.logits.len() != NUM_LABELS {
            return Err(DatasetError::WrongCount {
                line: no,
                id: rec.id,
                count: rec.logits.len(),
            });
        }
        if rec.logits.iter().any(|x| !x.is_finite()) {
            return Err(DatasetError::NonFinite { line: no, id: rec.id });
        }
        slots[slot] = Some(rec);
    }
    slots
        .into_iter()
        .zip(&ds.records)
        .map(|(s, r)| s.ok_or(DatasetError::MissingId(r.id)))
        .collect()
}

pub fn read_logits(path: &Path, ds: &Dataset) -> Result<Vec<LogitsRecord>, DatasetError> {
    let f = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_logits_from(BufReader::new(f), ds)
}
