use std::collections::HashSet;
use std::fs;
use std::path::Path;

use featgan::features::{Domain, Label};
use featgan::filtering::{
    run_generation_loop, CommandRecognizer, CommandSynthesizer, CommandTemplate, Donor, JobStatus, LoopConfig,
    Recognizer, Synthesizer, VoicePool,
};
use featgan::filtering::AsrMode;
use featgan::seed;
use featgan::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct EchoSynth;

impl Synthesizer for EchoSynth {
    fn synthesize(&mut self, text: &str, _voice: &str, out: &Path) -> Result<()> {
        fs::write(out, text).map_err(|e| Error::External(e.to_string()))
    }
}

struct EchoAsr;

impl Recognizer for EchoAsr {
    fn transcribe(&mut self, audio: &Path) -> Result<String> {
        fs::read_to_string(audio).map_err(|e| Error::External(e.to_string()))
    }
}

/// Hears the wrong word with probability `p`.
struct FlakyAsr {
    p: f64,
    rng: ChaCha8Rng,
}

impl Recognizer for FlakyAsr {
    fn transcribe(&mut self, audio: &Path) -> Result<String> {
        let text = fs::read_to_string(audio).map_err(|e| Error::External(e.to_string()))?;
        Ok(if self.rng.gen_bool(self.p) { format!("{text}s") } else { text })
    }
}

struct BrokenAsr;

impl Recognizer for BrokenAsr {
    fn transcribe(&mut self, _audio: &Path) -> Result<String> {
        Err(Error::External("model crashed".into()))
    }
}

fn pool(n: usize) -> VoicePool {
    VoicePool::new(
        (0..n)
            .map(|i| Donor {
                utterance_id: format!("cv_{i:05}"),
                speaker_id: format!("spk{}", i % 97),
                path: format!("voices/{i}.wav"),
            })
            .collect(),
    )
    .unwrap()
}

fn cfg(dir: &Path, max_attempts: usize) -> LoopConfig {
    LoopConfig {
        max_attempts,
        asr_mode: AsrMode::Dual,
        out_dir: dir.to_path_buf(),
    }
}

#[test]
fn echo_stubs_keep_everything_on_first_attempt() {
    let dir = tempfile::tempdir().unwrap();
    let targets = vec![("yes".to_string(), 3), ("bed".to_string(), 2)];
    let out = run_generation_loop(
        &targets,
        &mut pool(10),
        &mut EchoSynth,
        &mut EchoAsr,
        &mut EchoAsr,
        &cfg(dir.path(), 8),
        &mut seed::rng(1),
    )
    .unwrap();
    assert_eq!(out.kept.len(), 5);
    assert!(out.jobs.iter().all(|j| j.status == JobStatus::Kept && j.attempt == 1));
    assert_eq!(out.report.total.kept_at_attempt[0], 5);
    assert_eq!(out.kept[3].label, Label::Unknown);
    assert_eq!(out.kept[0].transcript_1.as_deref(), Some("yes"));
}

#[test]
fn one_job_per_word_yields_two_synthetic_records() {
    let dir = tempfile::tempdir().unwrap();
    let targets = vec![("yes".to_string(), 1), ("no".to_string(), 1)];
    let out = run_generation_loop(
        &targets,
        &mut pool(4),
        &mut EchoSynth,
        &mut EchoAsr,
        &mut EchoAsr,
        &cfg(dir.path(), 8),
        &mut seed::rng(2),
    )
    .unwrap();
    assert_eq!(out.kept.len(), 2);
    assert!(out.kept.iter().all(|r| r.domain == Domain::Synthetic));
    assert_eq!(out.kept[0].label, Label::Yes);
    assert_eq!(out.kept[1].label, Label::No);
}

#[test]
fn report_counts_and_donor_uniqueness() {
    let dir = tempfile::tempdir().unwrap();
    let targets = vec![("up".to_string(), 40), ("down".to_string(), 40)];
    let mut flaky = FlakyAsr {
        p: 0.6,
        rng: seed::rng(77),
    };
    let out = run_generation_loop(
        &targets,
        &mut pool(400),
        &mut EchoSynth,
        &mut EchoAsr,
        &mut flaky,
        &cfg(dir.path(), 3),
        &mut seed::rng(3),
    )
    .unwrap();
    for w in out.report.words.values().chain([&out.report.total]) {
        assert_eq!(w.kept + w.exhausted + w.failed, w.requested);
        assert!(w.attempts >= w.kept);
        assert_eq!(w.kept_at_attempt.iter().sum::<usize>(), w.kept);
    }
    let mut seen = HashSet::new();
    for r in &out.kept {
        let job: usize = r.utterance_id.rsplit('_').next().unwrap().parse().unwrap();
        assert!(seen.insert(out.jobs[job].voice_donor_id().unwrap().to_string()));
        assert!(Path::new(&r.path).exists());
    }
    let all: Vec<&String> = out.jobs.iter().flat_map(|j| &j.donors).collect();
    assert_eq!(all.len(), all.iter().collect::<HashSet<_>>().len());
    // rejected attempts leave no audio behind
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), out.kept.len());
}

#[test]
fn engine_failures_are_recorded_and_loop_continues() {
    let dir = tempfile::tempdir().unwrap();
    let targets = vec![("go".to_string(), 3)];
    let out = run_generation_loop(
        &targets,
        &mut pool(10),
        &mut EchoSynth,
        &mut EchoAsr,
        &mut BrokenAsr,
        &cfg(dir.path(), 4),
        &mut seed::rng(4),
    )
    .unwrap();
    assert_eq!(out.jobs.len(), 3);
    assert!(out.jobs.iter().all(|j| j.status == JobStatus::Failed));
    assert!(out.jobs[0].error.as_deref().unwrap().contains("model crashed"));
    assert_eq!(out.report.total.failed, 3);
}

#[test]
fn pool_exhaustion_fails_remaining_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let targets = vec![("stop".to_string(), 4)];
    let out = run_generation_loop(
        &targets,
        &mut pool(2),
        &mut EchoSynth,
        &mut EchoAsr,
        &mut EchoAsr,
        &cfg(dir.path(), 2),
        &mut seed::rng(5),
    )
    .unwrap();
    assert_eq!(out.kept.len(), 2);
    assert_eq!(out.report.total.failed, 2);
    assert!(out.jobs[3].error.as_deref().unwrap().contains("exhausted"));
}

#[test]
fn same_seed_same_manifest() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let targets = vec![("left".to_string(), 20)];
        let mut flaky = FlakyAsr {
            p: 0.5,
            rng: seed::rng(9),
        };
        let out = run_generation_loop(
            &targets,
            &mut pool(200),
            &mut EchoSynth,
            &mut EchoAsr,
            &mut flaky,
            &cfg(dir.path(), 4),
            &mut seed::rng(10),
        )
        .unwrap();
        out.jobs
            .iter()
            .map(|j| (j.donors.clone(), j.status))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_targets_are_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["go go", "Yes", ""] {
        let err = run_generation_loop(
            &[(bad.to_string(), 1)],
            &mut pool(2),
            &mut EchoSynth,
            &mut EchoAsr,
            &mut EchoAsr,
            &cfg(dir.path(), 2),
            &mut seed::rng(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{bad:?}: {err}");
    }
}

#[cfg(unix)]
#[test]
fn external_command_stubs_follow_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let synth_sh = dir.path().join("synth.sh");
    let asr_sh = dir.path().join("asr.sh");
    let bad_sh = dir.path().join("bad.sh");
    fs::write(&synth_sh, "printf '%s' \"$1\" > \"$3\"\n").unwrap();
    fs::write(&asr_sh, "echo 'loading model...'\ncat \"$1\"\necho\n").unwrap();
    fs::write(&bad_sh, "echo 'CUDA out of memory' >&2\nexit 2\n").unwrap();
    let out_dir = dir.path().join("audio");

    let mut synth = CommandSynthesizer {
        template: CommandTemplate::parse(&format!("sh {} {{text}} {{voice_path}} {{out_path}}", synth_sh.display())).unwrap(),
    };
    let asr = || CommandRecognizer {
        template: CommandTemplate::parse(&format!("sh {} {{in_path}}", asr_sh.display())).unwrap(),
    };
    let out = run_generation_loop(
        &[("yes".to_string(), 2)],
        &mut pool(5),
        &mut synth,
        &mut asr(),
        &mut asr(),
        &cfg(&out_dir, 3),
        &mut seed::rng(6),
    )
    .unwrap();
    assert_eq!(out.kept.len(), 2);
    assert_eq!(fs::read_to_string(&out.kept[0].path).unwrap(), "yes");

    let mut bad = CommandRecognizer {
        template: CommandTemplate::parse(&format!("sh {} {{in_path}}", bad_sh.display())).unwrap(),
    };
    let out = run_generation_loop(
        &[("yes".to_string(), 1)],
        &mut pool(5),
        &mut synth,
        &mut asr(),
        &mut bad,
        &cfg(&out_dir, 3),
        &mut seed::rng(7),
    )
    .unwrap();
    assert_eq!(out.jobs[0].status, JobStatus::Failed);
    assert!(out.jobs[0].error.as_deref().unwrap().contains("CUDA out of memory"));

    let table = dir.path().join("jobs.tsv");
    out.write_job_table(&table).unwrap();
    let text = fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("0\tyes\tfailed\t1\t"));
}
