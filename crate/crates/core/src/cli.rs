//! Command-line front end: one subcommand per pipeline stage.
//!
//! Every subcommand accepts `--config <file.toml>`; flags override file
//! values and the merged result is written next to the outputs as
//! `<subcommand>.config.toml`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{separability_probe, write_scatter, PcaModel, ProbeConfig, ProbeSpace, ScatterPoint};
use crate::classifier::{evaluate, multi_seed_report, train_head, Evaluation, HeadTrainConfig, LinearHead};
use crate::cyclegan::{train, CycleGanModel, CycleGanTrainConfig};
use crate::error::{Error, Result};
use crate::features::{
    pool_records, read_manifest, write_fseq, write_manifest, Domain, Label, PooledSet, SampleRecord,
};
use crate::filtering::{
    run_generation_loop, AsrMode, CommandRecognizer, CommandSynthesizer, CommandTemplate, LoopConfig, VoicePool,
};
use crate::mfcc::{mfcc, AudioClip, MfccConfig};
use crate::nn::Matrix;
use crate::{seed, VERSION};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_FILE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const THREADS_VAR: &str = "FEATGAN_THREADS";

#[derive(Parser)]
#[command(name = "featgan", version, about = "Feature-space tools for synthetic speech command data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an MFCC sequence for every clip in a manifest.
    Mfcc(MfccArgs),
    /// Statistic-pool every sequence in a manifest into one archive.
    Pool(PoolArgs),
    /// Synthesize, transcribe twice and keep clips both recognizers agree on.
    FilterLoop(FilterLoopArgs),
    /// Train the synthetic→real CycleGAN on pooled vectors.
    TrainCyclegan(TrainCycleganArgs),
    /// Map pooled synthetic vectors into the real domain.
    Transform(TransformArgs),
    /// Train the linear keyword head.
    TrainHead(TrainHeadArgs),
    /// Accuracy and confusion matrix of a head on a test archive.
    Eval(EvalArgs),
    /// Two-domain PCA scatter (table, SVG and metadata).
    Pca(PcaArgs),
    /// Held-out real-vs-synthetic separability.
    Probe(ProbeArgs),
    /// Mean ± std accuracy over several eval outputs.
    Report(ReportArgs),
}

#[derive(Args)]
struct MfccArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest of WAV clips.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest of FSEQ sequences.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Archive path; the record sidecar is written to `<out>.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterLoopArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Donor manifest (JSON lines with utterance_id, speaker_id, path).
    #[arg(long)]
    voices: Option<PathBuf>,
    /// Synthesizer command template using {text}, {voice_path}, {out_path}.
    #[arg(long)]
    tts: Option<String>,
    /// First recognizer command template using {in_path}.
    #[arg(long = "asr-1")]
    asr_1: Option<String>,
    #[arg(long = "asr-2")]
    asr_2: Option<String>,
    /// Requested clips per word, as WORD=COUNT; repeatable.
    #[arg(long = "word", value_name = "WORD=COUNT")]
    words: Vec<String>,
    #[arg(long)]
    max_attempts: Option<usize>,
    /// dual or single.
    #[arg(long)]
    asr_mode: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainCycleganArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Synthetic pool: manifest (.jsonl) or pooled archive.
    #[arg(long)]
    synth: Option<PathBuf>,
    /// Real pool: manifest (.jsonl) or pooled archive.
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda_cyc: Option<f64>,
    #[arg(long)]
    lambda_id: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Train only on this label, or `all`.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainHeadArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    /// CycleGAN applied to the training vectors.
    #[arg(long)]
    gan: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    head: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Directory for eval.json and confusion.tsv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Real archive followed by synthetic archive.
    #[arg(long = "in", num_args = 2, value_names = ["REAL", "SYNTH"])]
    input: Vec<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    synth: Option<PathBuf>,
    /// raw or pca2.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optional JSON result path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// eval.json files, one per run.
    inputs: Vec<PathBuf>,
    /// Optional JSON summary path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MfccRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    mfcc: MfccConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PoolRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FilterLoopRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    voices: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asr_1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asr_2: Option<String>,
    max_attempts: usize,
    asr_mode: AsrMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    seed: u64,
    words: BTreeMap<String, usize>,
}

impl Default for FilterLoopRun {
    fn default() -> Self {
        FilterLoopRun {
            voices: None,
            tts: None,
            asr_1: None,
            asr_2: None,
            max_attempts: crate::filtering::generation::DEFAULT_MAX_ATTEMPTS,
            asr_mode: AsrMode::Dual,
            out_dir: None,
            seed: 0,
            words: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainCycleganRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    real: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    hidden: usize,
    label: String,
    train: CycleGanTrainConfig,
}

impl Default for TrainCycleganRun {
    fn default() -> Self {
        TrainCycleganRun {
            synth: None,
            real: None,
            out: None,
            hidden: crate::cyclegan::NetDims::default().hidden,
            label: Label::Unknown.as_str().to_string(),
            train: CycleGanTrainConfig::default(),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TransformRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainHeadRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gan: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    head: HeadTrainConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    head: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PcaRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    real: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<PathBuf>,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_prefix: Option<PathBuf>,
}

impl Default for PcaRun {
    fn default() -> Self {
        PcaRun {
            real: None,
            synth: None,
            k: 2,
            out_prefix: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProbeRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    real: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<PathBuf>,
    space: ProbeSpace,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    probe: ProbeConfig,
}

impl Default for ProbeRun {
    fn default() -> Self {
        ProbeRun {
            real: None,
            synth: None,
            space: ProbeSpace::Raw,
            out: None,
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReportRun {
    inputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

/// Exit status for a failed run: 3 for a missing file, 4 for configuration
/// violations, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        e if e.category() == "config" => EXIT_CONFIG,
        _ => 1,
    }
}

/// Value of `FEATGAN_THREADS`, default 1.
pub fn threads() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_VAR} must be a positive integer, got {s:?}"))),
        },
    }
}

fn dispatch(command: Command) -> Result<()> {
    let threads = threads()?;
    match command {
        Command::Mfcc(a) => run_mfcc(a, threads),
        Command::Pool(a) => run_pool(a, threads),
        Command::FilterLoop(a) => run_filter_loop(a, threads),
        Command::TrainCyclegan(a) => run_train_cyclegan(a, threads),
        Command::Transform(a) => run_transform(a, threads),
        Command::TrainHead(a) => run_train_head(a, threads),
        Command::Eval(a) => run_eval(a, threads),
        Command::Pca(a) => run_pca(a, threads),
        Command::Probe(a) => run_probe(a, threads),
        Command::Report(a) => run_report(a, threads),
    }
}

fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| {
        Error::Config(format!("{}: {}", path.display(), e.message().replace('\n', " ")))
    })
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn need<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Config(format!("missing required setting `{key}` (flag or config key)")))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the merged config as `<dir>/<name>.config.toml`, headed by the
/// toolkit version and thread cap as comments so the file stays loadable.
fn write_resolved<C: Serialize>(dir: &Path, name: &str, cfg: &C, threads: usize) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let body = toml::to_string(cfg).map_err(|e| Error::Config(format!("config does not serialize: {e}")))?;
    let text = format!("# {VERSION}\n# {THREADS_VAR} = {threads}\n{body}");
    write_text(&dir.join(format!("{name}.config.toml")), &text)
}

/// Loads a pooled set from an archive, or pools a `.jsonl` manifest of
/// sequences on the fly.
fn load_pooled(path: &Path) -> Result<PooledSet> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        pool_records(&read_manifest(path)?, &parent_dir(path))
    } else {
        PooledSet::load(path)
    }
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn run_mfcc(a: MfccArgs, threads: usize) -> Result<()> {
    let mut cfg: MfccRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.input, a.input);
    set_opt(&mut cfg.out_dir, a.out_dir);
    cfg.mfcc.validate()?;
    let input = need(&cfg.input, "input")?;
    let out_dir = need(&cfg.out_dir, "out_dir")?;
    let records = read_manifest(input)?;
    if records.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no records", input.display())));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let base = parent_dir(input);
    let mut out_records = Vec::with_capacity(records.len());
    for rec in &records {
        let clip = AudioClip::read_wav(&base.join(&rec.path))?;
        let mut seq = mfcc(&clip, &cfg.mfcc)?;
        seq.utterance_id = rec.utterance_id.clone();
        let name = format!("{}.fseq", file_stem(&rec.utterance_id));
        write_fseq(&seq, &out_dir.join(&name))?;
        out_records.push(SampleRecord { path: name, ..rec.clone() });
    }
    write_manifest(&out_dir.join("manifest.jsonl"), &out_records)?;
    write_resolved(out_dir, "mfcc", &cfg, threads)?;
    println!("wrote {} sequences to {}", out_records.len(), out_dir.display());
    Ok(())
}

fn run_pool(a: PoolArgs, threads: usize) -> Result<()> {
    let mut cfg: PoolRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.input, a.input);
    set_opt(&mut cfg.out, a.out);
    let input = need(&cfg.input, "input")?;
    let out = need(&cfg.out, "out")?;
    let set = pool_records(&read_manifest(input)?, &parent_dir(input))?;
    set.save(out)?;
    write_resolved(&parent_dir(out), "pool", &cfg, threads)?;
    println!("pooled {} records into {}×{}", set.len(), set.len(), set.dims());
    Ok(())
}

fn parse_word(spec: &str) -> Result<(String, usize)> {
    let bad = || Error::Config(format!("--word expects WORD=COUNT, got {spec:?}"));
    let (w, n) = spec.split_once('=').ok_or_else(bad)?;
    Ok((w.trim().to_string(), n.trim().parse().map_err(|_| bad())?))
}

fn parse_asr_mode(s: &str) -> Result<AsrMode> {
    match s {
        "dual" => Ok(AsrMode::Dual),
        "single" => Ok(AsrMode::Single),
        _ => Err(Error::Config(format!("asr mode must be dual or single, got {s:?}"))),
    }
}

fn run_filter_loop(a: FilterLoopArgs, threads: usize) -> Result<()> {
    let mut cfg: FilterLoopRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.voices, a.voices);
    set_opt(&mut cfg.tts, a.tts);
    set_opt(&mut cfg.asr_1, a.asr_1);
    set_opt(&mut cfg.asr_2, a.asr_2);
    set(&mut cfg.max_attempts, a.max_attempts);
    set(&mut cfg.asr_mode, a.asr_mode.as_deref().map(parse_asr_mode).transpose()?);
    set_opt(&mut cfg.out_dir, a.out_dir);
    set(&mut cfg.seed, a.seed);
    for w in &a.words {
        let (word, n) = parse_word(w)?;
        cfg.words.insert(word, n);
    }

    let out_dir = need(&cfg.out_dir, "out_dir")?.clone();
    let mut synth = CommandSynthesizer {
        template: CommandTemplate::parse(need(&cfg.tts, "tts")?)?,
    };
    let mut asr_1 = CommandRecognizer {
        template: CommandTemplate::parse(need(&cfg.asr_1, "asr_1")?)?,
    };
    let mut asr_2 = CommandRecognizer {
        template: match cfg.asr_mode {
            AsrMode::Dual => CommandTemplate::parse(need(&cfg.asr_2, "asr_2")?)?,
            AsrMode::Single => CommandTemplate::parse(cfg.asr_2.as_deref().unwrap_or("true {in_path}"))?,
        },
    };
    let mut pool = VoicePool::load(need(&cfg.voices, "voices")?)?;
    let targets: Vec<(String, usize)> = cfg.words.iter().map(|(w, n)| (w.clone(), *n)).collect();
    let loop_cfg = LoopConfig {
        max_attempts: cfg.max_attempts,
        asr_mode: cfg.asr_mode,
        out_dir: out_dir.clone(),
    };
    let mut rng = seed::rng(seed::stage_seed(cfg.seed, "filter/voices"));
    let outcome = run_generation_loop(&targets, &mut pool, &mut synth, &mut asr_1, &mut asr_2, &loop_cfg, &mut rng)?;

    write_manifest(&out_dir.join("kept.jsonl"), &outcome.kept)?;
    write_text(&out_dir.join("report.json"), &outcome.report.to_json())?;
    outcome.write_job_table(&out_dir.join("jobs.tsv"))?;
    write_resolved(&out_dir, "filter-loop", &cfg, threads)?;
    let t = &outcome.report.total;
    println!(
        "kept {} of {} jobs ({} exhausted, {} failed, {} attempts)",
        t.kept, t.requested, t.exhausted, t.failed, t.attempts
    );
    Ok(())
}

fn select_label(set: PooledSet, label: &str) -> Result<PooledSet> {
    if label == "all" {
        return Ok(set);
    }
    Ok(set.only_label(label.parse::<Label>()?))
}

fn run_train_cyclegan(a: TrainCycleganArgs, threads: usize) -> Result<()> {
    let mut cfg: TrainCycleganRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.synth, a.synth);
    set_opt(&mut cfg.real, a.real);
    set_opt(&mut cfg.out, a.out);
    set(&mut cfg.hidden, a.hidden);
    set(&mut cfg.label, a.label);
    set(&mut cfg.train.epochs, a.epochs);
    set(&mut cfg.train.batch, a.batch);
    set(&mut cfg.train.lr, a.lr);
    set(&mut cfg.train.lambda_cyc, a.lambda_cyc);
    set(&mut cfg.train.lambda_id, a.lambda_id);
    set(&mut cfg.train.seed, a.seed);
    cfg.train.validate()?;
    if cfg.hidden == 0 {
        return Err(Error::Config("hidden width must be at least 1".into()));
    }
    let out = need(&cfg.out, "out")?;
    let synth = select_label(load_pooled(need(&cfg.synth, "synth")?)?, &cfg.label)?;
    let real = select_label(load_pooled(need(&cfg.real, "real")?)?, &cfg.label)?;
    if synth.is_empty() || real.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no {} vectors to train on ({} synthetic, {} real)",
            cfg.label,
            synth.len(),
            real.len()
        )));
    }
    let mut model = CycleGanModel::init(&synth.values, &real.values, cfg.hidden, cfg.train.clone())?;
    let report = train(&mut model, &synth.values, &real.values)?;
    model.save(out)?;
    let dir = parent_dir(out);
    write_text(&out.with_extension("history.tsv"), &report.table())?;
    write_resolved(&dir, "train-cyclegan", &cfg, threads)?;
    if let Some(e) = report.aborted {
        return Err(e);
    }
    if let Some(last) = report.history.last() {
        println!("epoch {}: total {:.6}", last.epoch, last.generator.total);
    }
    Ok(())
}

fn run_transform(a: TransformArgs, threads: usize) -> Result<()> {
    let mut cfg: TransformRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.model, a.model);
    set_opt(&mut cfg.input, a.input);
    set_opt(&mut cfg.out, a.out);
    let out = need(&cfg.out, "out")?;
    let model = CycleGanModel::load(need(&cfg.model, "model")?)?;
    let set = load_pooled(need(&cfg.input, "input")?)?;
    let moved = model.transform_set(&set)?;
    moved.save(out)?;
    write_resolved(&parent_dir(out), "transform", &cfg, threads)?;
    println!("transformed {} vectors", moved.len());
    Ok(())
}

fn run_train_head(a: TrainHeadArgs, threads: usize) -> Result<()> {
    let mut cfg: TrainHeadRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.train, a.train);
    set_opt(&mut cfg.valid, a.valid);
    set_opt(&mut cfg.gan, a.gan);
    set_opt(&mut cfg.out, a.out);
    set(&mut cfg.head.epochs, a.epochs);
    set(&mut cfg.head.lr, a.lr);
    set(&mut cfg.head.batch, a.batch);
    set(&mut cfg.head.seed, a.seed);
    let out = need(&cfg.out, "out")?;
    let train_set = load_pooled(need(&cfg.train, "train")?)?;
    let valid = load_pooled(need(&cfg.valid, "valid")?)?;
    let gan = cfg.gan.as_deref().map(CycleGanModel::load).transpose()?;
    let (head, report) = train_head(&train_set, &valid, &cfg.head, gan.as_ref())?;
    head.save(out)?;
    write_text(&out.with_extension("history.tsv"), &report.table())?;
    write_resolved(&parent_dir(out), "train-head", &cfg, threads)?;
    let best = report.history.iter().find(|m| m.epoch == report.best_epoch);
    match best {
        Some(m) => println!("best epoch {}: valid accuracy {:.4}", m.epoch, m.valid_accuracy),
        None => println!("best epoch 0: initialization kept"),
    }
    Ok(())
}

fn run_eval(a: EvalArgs, threads: usize) -> Result<()> {
    let mut cfg: EvalRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.head, a.head);
    set_opt(&mut cfg.test, a.test);
    set_opt(&mut cfg.out_dir, a.out_dir);
    let head = LinearHead::load(need(&cfg.head, "head")?)?;
    let test = load_pooled(need(&cfg.test, "test")?)?;
    let ev = evaluate(&head, &test)?;
    println!("accuracy\t{:.6}\t({}/{})", ev.accuracy, ev.correct, ev.total);
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = serde_json::to_string_pretty(&ev).expect("evaluation serializes");
        write_text(&dir.join("eval.json"), &json)?;
        write_text(&dir.join("confusion.tsv"), &ev.confusion_table())?;
        write_resolved(dir, "eval", &cfg, threads)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PcaMeta<'a> {
    version: &'a str,
    fit_on: &'a str,
    k: usize,
    real_points: usize,
    synthetic_points: usize,
    eigenvalues: &'a [f64],
    explained_ratio: &'a [f64],
    total_variance: f64,
}

fn run_pca(a: PcaArgs, threads: usize) -> Result<()> {
    let mut cfg: PcaRun = load_config(a.config.as_deref())?;
    if let [real, synth] = a.input.as_slice() {
        cfg.real = Some(real.clone());
        cfg.synth = Some(synth.clone());
    }
    set(&mut cfg.k, a.k);
    set_opt(&mut cfg.out_prefix, a.out_prefix);
    if cfg.k < 2 {
        return Err(Error::Config(format!("the scatter needs k ≥ 2, got {}", cfg.k)));
    }
    let prefix = need(&cfg.out_prefix, "out_prefix")?;
    let real = load_pooled(need(&cfg.real, "real")?)?;
    let synth = load_pooled(need(&cfg.synth, "synth")?)?;
    let union = Matrix::vstack(&[&real.values, &synth.values])?;
    let pca = PcaModel::fit(&union, cfg.k)?;
    let proj = pca.project(&union)?;
    let points: Vec<ScatterPoint> = real
        .records
        .iter()
        .map(|r| (r, Domain::Real))
        .chain(synth.records.iter().map(|r| (r, Domain::Synthetic)))
        .enumerate()
        .map(|(i, (r, domain))| ScatterPoint {
            x: proj.get(i, 0),
            y: proj.get(i, 1),
            domain,
            label: r.label,
        })
        .collect();
    let title = format!(
        "PCA of {} real and {} synthetic vectors ({:.1}% + {:.1}% variance)",
        real.len(),
        synth.len(),
        100.0 * pca.explained_ratio[0],
        100.0 * pca.explained_ratio[1]
    );
    write_scatter(&points, prefix, &title)?;
    let meta = PcaMeta {
        version: VERSION,
        fit_on: "union",
        k: cfg.k,
        real_points: real.len(),
        synthetic_points: synth.len(),
        eigenvalues: &pca.eigenvalues,
        explained_ratio: &pca.explained_ratio,
        total_variance: pca.total_variance,
    };
    let mut meta_path = prefix.as_os_str().to_owned();
    meta_path.push(".meta.json");
    write_text(Path::new(&meta_path), &serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
    write_resolved(&parent_dir(prefix), "pca", &cfg, threads)?;
    println!(
        "explained variance: {}",
        pca.explained_ratio.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ")
    );
    Ok(())
}

fn run_probe(a: ProbeArgs, threads: usize) -> Result<()> {
    let mut cfg: ProbeRun = load_config(a.config.as_deref())?;
    set_opt(&mut cfg.real, a.real);
    set_opt(&mut cfg.synth, a.synth);
    set(&mut cfg.space, a.space.as_deref().map(str::parse).transpose()?);
    set(&mut cfg.probe.seed, a.seed);
    set_opt(&mut cfg.out, a.out);
    let real = load_pooled(need(&cfg.real, "real")?)?;
    let synth = load_pooled(need(&cfg.synth, "synth")?)?;
    let r = separability_probe(&real.values, &synth.values, cfg.space, &cfg.probe)?;
    println!("balanced_accuracy\t{:.6}", r.balanced_accuracy);
    println!("real_recall\t{:.6}", r.real_recall);
    println!("synthetic_recall\t{:.6}", r.synthetic_recall);
    if let Some(out) = &cfg.out {
        write_text(out, &serde_json::to_string_pretty(&r).expect("probe result serializes"))?;
        write_resolved(&parent_dir(out), "probe", &cfg, threads)?;
    }
    Ok(())
}

fn run_report(a: ReportArgs, threads: usize) -> Result<()> {
    let mut cfg: ReportRun = load_config(a.config.as_deref())?;
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs;
    }
    set_opt(&mut cfg.out, a.out);
    let mut accuracies = Vec::with_capacity(cfg.inputs.len());
    println!("run\taccuracy");
    for path in &cfg.inputs {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ev: Evaluation = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        println!("{}\t{:.6}", path.display(), ev.accuracy);
        accuracies.push(ev.accuracy);
    }
    let summary = multi_seed_report(&accuracies)?;
    println!("mean ± std\t{summary}");
    if let Some(out) = &cfg.out {
        write_text(out, &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
        write_resolved(&parent_dir(out), "report", &cfg, threads)?;
    }
    Ok(())
}
