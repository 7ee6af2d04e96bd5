//! ASR-agreement filtering of synthesized speech and the generation loop
//! that drives it.

pub mod engine;
pub mod generation;
pub mod voice;

pub use engine::{CommandRecognizer, CommandSynthesizer, CommandTemplate, Recognizer, Synthesizer};
pub use generation::{run_generation_loop, GenerationJob, JobStatus, LoopConfig, LoopOutcome, LoopReport};
pub use voice::{Donor, VoicePool};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases, keeps only `[a-z0-9' ]`, trims and collapses whitespace runs.
pub fn normalize_transcript(s: &str) -> String {
    let lowered = s.to_lowercase();
    let kept: String = lowered
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '\'' || *c == ' ')
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Checks that a target is a single, already-normalized word.
pub fn validate_target(target: &str) -> Result<()> {
    if target.is_empty() || normalize_transcript(target) != target || target.contains(' ') {
        return Err(Error::Config(format!(
            "target {target:?} must be one normalized word"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptPair {
    pub asr_1: String,
    pub asr_2: String,
}

impl TranscriptPair {
    pub fn new(asr_1: impl Into<String>, asr_2: impl Into<String>) -> Self {
        TranscriptPair {
            asr_1: asr_1.into(),
            asr_2: asr_2.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Reject,
}

/// How many recognizers must agree with the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsrMode {
    #[default]
    Dual,
    /// Ablation: only the first recognizer is consulted.
    Single,
}

/// Keep iff both normalized transcripts equal the target exactly.
pub fn agreement_filter(target: &str, t: &TranscriptPair) -> Decision {
    filter_with_mode(target, t, AsrMode::Dual)
}

pub fn filter_with_mode(target: &str, t: &TranscriptPair, mode: AsrMode) -> Decision {
    let first = normalize_transcript(&t.asr_1) == target;
    let keep = match mode {
        AsrMode::Dual => first && normalize_transcript(&t.asr_2) == target,
        AsrMode::Single => first,
    };
    if keep {
        Decision::Keep
    } else {
        Decision::Reject
    }
}
