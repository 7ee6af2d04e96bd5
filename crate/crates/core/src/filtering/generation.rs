use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{Recognizer, Synthesizer};
use super::voice::VoicePool;
use super::{filter_with_mode, validate_target, AsrMode, Decision, TranscriptPair};
use crate::error::{Error, Result};
use crate::features::{Domain, Label, SampleRecord, Split};

pub const DEFAULT_MAX_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub max_attempts: usize,
    pub asr_mode: AsrMode,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Kept,
    Rejected,
    Exhausted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub index: usize,
    pub target_word: String,
    pub attempt: usize,
    pub status: JobStatus,
    /// Donor utterance used by each attempt, in order.
    pub donors: Vec<String>,
    pub transcripts: Vec<TranscriptPair>,
    pub error: Option<String>,
}

impl GenerationJob {
    pub fn voice_donor_id(&self) -> Option<&str> {
        self.donors.last().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordReport {
    pub requested: usize,
    pub kept: usize,
    pub exhausted: usize,
    pub failed: usize,
    pub attempts: usize,
    pub rejected_attempts: usize,
    /// `kept_at_attempt[i]` = jobs kept on attempt `i + 1`.
    pub kept_at_attempt: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub max_attempts: usize,
    pub words: BTreeMap<String, WordReport>,
    pub total: WordReport,
}

impl LoopReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub kept: Vec<SampleRecord>,
    pub jobs: Vec<GenerationJob>,
    pub report: LoopReport,
}

impl LoopOutcome {
    /// Tab-separated per-job table, one row per job in index order.
    pub fn write_job_table(&self, path: &Path) -> Result<()> {
        let mut out = String::from("job\tword\tstatus\tattempts\tdonors\terror\n");
        for j in &self.jobs {
            let status = serde_json::to_value(j.status).expect("status serializes");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                j.index,
                j.target_word,
                status.as_str().unwrap_or_default(),
                j.attempt,
                j.donors.join(","),
                j.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ")
            ));
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Draw voice → synthesize → transcribe twice → filter, redrawing a fresh
/// voice after each rejection until `max_attempts` is spent.
///
/// Engine failures mark the job failed and the loop moves on.
pub fn run_generation_loop<R: Rng + ?Sized>(
    targets: &[(String, usize)],
    pool: &mut VoicePool,
    synth: &mut dyn Synthesizer,
    asr_1: &mut dyn Recognizer,
    asr_2: &mut dyn Recognizer,
    cfg: &LoopConfig,
    rng: &mut R,
) -> Result<LoopOutcome> {
    if targets.iter().all(|(_, n)| *n == 0) {
        return Err(Error::EmptyInput("no samples requested".into()));
    }
    if cfg.max_attempts == 0 {
        return Err(Error::Config("max_attempts must be at least 1".into()));
    }
    for (word, _) in targets {
        validate_target(word)?;
    }
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;

    let mut report = LoopReport {
        max_attempts: cfg.max_attempts,
        ..LoopReport::default()
    };
    let mut jobs = Vec::new();
    let mut kept = Vec::new();

    for (word, count) in targets {
        for _ in 0..*count {
            let index = jobs.len();
            let mut job = GenerationJob {
                index,
                target_word: word.clone(),
                attempt: 0,
                status: JobStatus::Pending,
                donors: Vec::new(),
                transcripts: Vec::new(),
                error: None,
            };
            let kept_path = run_job(&mut job, pool, synth, asr_1, asr_2, cfg, rng);
            if let Some(path) = kept_path {
                let t = job.transcripts.last().cloned();
                kept.push(SampleRecord {
                    utterance_id: format!("synth_{word}_{index:06}"),
                    label: word.parse().unwrap_or(Label::Unknown),
                    domain: Domain::Synthetic,
                    split: Split::Train,
                    path: path.to_string_lossy().into_owned(),
                    transcript_1: t.as_ref().map(|t| t.asr_1.clone()),
                    transcript_2: t.map(|t| t.asr_2),
                });
            }
            tally(&mut report, &job, cfg.max_attempts);
            jobs.push(job);
        }
    }
    Ok(LoopOutcome { kept, jobs, report })
}

fn run_job<R: Rng + ?Sized>(
    job: &mut GenerationJob,
    pool: &mut VoicePool,
    synth: &mut dyn Synthesizer,
    asr_1: &mut dyn Recognizer,
    asr_2: &mut dyn Recognizer,
    cfg: &LoopConfig,
    rng: &mut R,
) -> Option<PathBuf> {
    while job.attempt < cfg.max_attempts {
        job.attempt += 1;
        let attempt = (|| -> Result<(Decision, PathBuf)> {
            let donor = pool.sample(rng)?;
            job.donors.push(donor.utterance_id.clone());
            let out = cfg
                .out_dir
                .join(format!("{}_{:06}_a{}.wav", job.target_word, job.index, job.attempt));
            synth.synthesize(&job.target_word, &donor.path, &out)?;
            let pair = TranscriptPair {
                asr_1: asr_1.transcribe(&out)?,
                asr_2: match cfg.asr_mode {
                    AsrMode::Dual => asr_2.transcribe(&out)?,
                    AsrMode::Single => String::new(),
                },
            };
            let decision = filter_with_mode(&job.target_word, &pair, cfg.asr_mode);
            job.transcripts.push(pair);
            Ok((decision, out))
        })();
        match attempt {
            Ok((Decision::Keep, out)) => {
                job.status = JobStatus::Kept;
                return Some(out);
            }
            Ok((Decision::Reject, out)) => {
                job.status = JobStatus::Rejected;
                let _ = fs::remove_file(out);
            }
            Err(e) => {
                job.status = JobStatus::Failed;
                job.error = Some(e.to_string());
                return None;
            }
        }
    }
    job.status = JobStatus::Exhausted;
    None
}

fn tally(report: &mut LoopReport, job: &GenerationJob, max_attempts: usize) {
    for w in [report.words.entry(job.target_word.clone()).or_default(), &mut report.total] {
        if w.kept_at_attempt.is_empty() {
            w.kept_at_attempt = vec![0; max_attempts];
        }
        w.requested += 1;
        w.attempts += job.attempt;
        match job.status {
            JobStatus::Kept => {
                w.kept += 1;
                w.kept_at_attempt[job.attempt - 1] += 1;
                w.rejected_attempts += job.attempt - 1;
            }
            JobStatus::Exhausted => {
                w.exhausted += 1;
                w.rejected_attempts += job.attempt;
            }
            _ => {
                w.failed += 1;
                w.rejected_attempts += job.attempt.saturating_sub(1);
            }
        }
    }
}
