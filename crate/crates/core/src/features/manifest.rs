//! Line-delimited JSON manifests of sample records.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The closed label set: ten command words in their canonical order, then `unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
    Up,
    Down,
    Left,
    Right,
    On,
    Off,
    Stop,
    Go,
    Unknown,
}

impl Label {
    pub const ALL: [Label; 11] = [
        Label::Yes,
        Label::No,
        Label::Up,
        Label::Down,
        Label::Left,
        Label::Right,
        Label::On,
        Label::Off,
        Label::Stop,
        Label::Go,
        Label::Unknown,
    ];

    pub const COUNT: usize = Self::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "yes",
            Label::No => "no",
            Label::Up => "up",
            Label::Down => "down",
            Label::Left => "left",
            Label::Right => "right",
            Label::On => "on",
            Label::Off => "off",
            Label::Stop => "stop",
            Label::Go => "go",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Real,
    Synthetic,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Real => "real",
            Domain::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub utterance_id: String,
    pub label: Label,
    pub domain: Domain,
    pub split: Split,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_2: Option<String>,
}

impl SampleRecord {
    pub fn validate(&self) -> Result<()> {
        if self.path.is_empty() {
            return Err(Error::Config(format!(
                "record {:?} has an empty path",
                self.utterance_id
            )));
        }
        Ok(())
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization is infallible")
    }
}

/// Parses one manifest line.
pub fn parse_line(line: &str) -> std::result::Result<SampleRecord, String> {
    let rec: SampleRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    rec.validate().map_err(|e| e.to_string())?;
    Ok(rec)
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_line(&line).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", r.to_line()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
