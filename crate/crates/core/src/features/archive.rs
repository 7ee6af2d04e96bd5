//! Pooled-feature archives: an FSEQ matrix with one row per record, plus a
//! sidecar manifest (`<archive>.jsonl`) aligning rows to records.

use std::path::{Path, PathBuf};

use super::fseq::{self, read_fseq};
use super::manifest::{read_manifest, write_manifest, Label, SampleRecord};
use super::pooling::stat_pool;
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PooledSet {
    pub records: Vec<SampleRecord>,
    pub values: Matrix<f32>,
}

pub fn sidecar_path(archive: &Path) -> PathBuf {
    let mut s = archive.as_os_str().to_owned();
    s.push(".jsonl");
    PathBuf::from(s)
}

impl PooledSet {
    pub fn new(records: Vec<SampleRecord>, values: Matrix<f32>) -> Result<Self> {
        if records.len() != values.rows() {
            return Err(Error::Shape {
                op: "pooled set",
                left: (records.len(), 1),
                right: values.shape(),
            });
        }
        Ok(PooledSet { records, values })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label.index()).collect()
    }

    pub fn filter(&self, keep: impl Fn(&SampleRecord) -> bool) -> PooledSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.records[i])).collect();
        PooledSet {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            values: self.values.select_rows(&idx),
        }
    }

    pub fn only_label(&self, label: Label) -> PooledSet {
        self.filter(|r| r.label == label)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fseq::write_matrix(&self.values, path)?;
        write_manifest(&sidecar_path(path), &self.records)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let values = read_fseq(path)?.values;
        let sidecar = sidecar_path(path);
        let records = read_manifest(&sidecar)?;
        if records.len() != values.rows() {
            return Err(Error::Parse {
                path: sidecar,
                line: records.len(),
                message: format!(
                    "sidecar has {} records but archive has {} rows",
                    records.len(),
                    values.rows()
                ),
            });
        }
        Ok(PooledSet { records, values })
    }
}

/// Pools every record's FSEQ file. Relative paths resolve against `base`.
pub fn pool_records(records: &[SampleRecord], base: &Path) -> Result<PooledSet> {
    if records.is_empty() {
        return Err(Error::EmptyInput("manifest has no records to pool".into()));
    }
    let mut data = Vec::new();
    let mut dims = None;
    for rec in records {
        let p = base.join(&rec.path);
        let mut seq = read_fseq(&p)?;
        seq.utterance_id = rec.utterance_id.clone();
        match dims {
            None => dims = Some(seq.dims()),
            Some(d) if d != seq.dims() => {
                return Err(Error::Shape {
                    op: "pool (mixed feature dims)",
                    left: (1, d),
                    right: (1, seq.dims()),
                })
            }
            _ => {}
        }
        data.extend(stat_pool(&seq)?.values);
    }
    let d = 2 * dims.unwrap_or(0);
    let values = Matrix::from_vec(records.len(), d, data)?;
    PooledSet::new(records.to_vec(), values)
}
