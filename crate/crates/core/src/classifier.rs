//! Single-linear-layer classification head over pooled vectors.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cyclegan::CycleGanModel;
use crate::error::{Error, FormatError, Result};
use crate::features::{Label, PooledSet};
use crate::nn::{cross_entropy, Activation, AdamConfig, AdamState, Checkpoint, LinearLayer, Matrix, ParamRef, Params, Record};
use crate::seed;

/// Linear map from pooled features to one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub layer: LinearLayer<f32>,
    /// Class names in logit order.
    pub classes: Vec<String>,
}

impl LinearHead {
    /// Head over the eleven command classes.
    pub fn new<R: Rng + ?Sized>(features: usize, rng: &mut R) -> Self {
        LinearHead {
            layer: LinearLayer::new(features, Label::COUNT, rng),
            classes: Label::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        }
    }

    pub fn features(&self) -> usize {
        self.layer.in_dim()
    }

    pub fn logits(&self, x: &Matrix<f32>) -> Result<Matrix<f32>> {
        self.layer.apply(x)
    }

    /// Arg-max class per row; ties go to the lowest index.
    pub fn predict(&self, x: &Matrix<f32>) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = HeadMeta {
            kind: HEAD_KIND.into(),
            version: crate::VERSION.into(),
            classes: self.classes.clone(),
        };
        Checkpoint {
            records: vec![Record::Linear {
                activation: Activation::Identity,
                layer: self.layer.clone(),
            }],
            metadata: serde_json::to_string(&meta).expect("metadata serializes"),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> std::result::Result<Self, FormatError> {
        let bad = FormatError::Malformed;
        let meta: HeadMeta = serde_json::from_str(&ckpt.metadata).map_err(|e| bad(format!("head metadata: {e}")))?;
        if meta.kind != HEAD_KIND {
            return Err(bad(format!("not a linear head checkpoint (kind {:?})", meta.kind)));
        }
        let mut records = ckpt.records.into_iter();
        match (records.next(), records.next()) {
            (
                Some(Record::Linear {
                    activation: Activation::Identity,
                    layer,
                }),
                None,
            ) if layer.out_dim() == meta.classes.len() => Ok(LinearHead {
                layer,
                classes: meta.classes,
            }),
            _ => Err(bad("expected one identity linear record sized to the class table".into())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?).map_err(|e| Error::format(path, e))
    }
}

const HEAD_KIND: &str = "linear_head";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadMeta {
    kind: String,
    version: String,
    classes: Vec<String>,
}

impl Params<f32> for LinearHead {
    fn params_mut(&mut self) -> Vec<ParamRef<'_, f32>> {
        let LinearLayer {
            weight,
            bias,
            grad_weight,
            grad_bias,
            ..
        } = &mut self.layer;
        vec![
            ParamRef {
                name: "head.weight".into(),
                value: weight,
                grad: grad_weight,
            },
            ParamRef {
                name: "head.bias".into(),
                value: bias,
                grad: grad_bias,
            },
        ]
    }

    fn zero_grad(&mut self) {
        self.layer.zero_grad();
    }
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        HeadTrainConfig {
            epochs: 30,
            lr: 5e-3,
            batch: 128,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainReport {
    pub history: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
}

impl HeadTrainReport {
    pub fn table(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tvalid_accuracy\n");
        for m in &self.history {
            out.push_str(&format!("{}\t{:.6}\t{:.6}\n", m.epoch, m.train_loss, m.valid_accuracy));
        }
        out
    }
}

/// Applies the frozen synthetic→real generator when `gan` is set.
pub fn maybe_transform(values: &Matrix<f32>, gan: Option<&CycleGanModel>) -> Result<Matrix<f32>> {
    match gan {
        Some(g) => g.transform(values),
        None => Ok(values.clone()),
    }
}

/// Softmax cross-entropy with Adam at a fixed learning rate. Training inputs
/// pass through `gan` when given; validation inputs stay raw. The head from
/// the epoch with the best validation accuracy is returned.
pub fn train_head(
    train: &PooledSet,
    valid: &PooledSet,
    cfg: &HeadTrainConfig,
    gan: Option<&CycleGanModel>,
) -> Result<(LinearHead, HeadTrainReport)> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::EmptyInput("train and validation sets must be non-empty".into()));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) || cfg.batch == 0 {
        return Err(Error::Config(format!(
            "head training needs lr > 0 and batch ≥ 1 (lr {}, batch {})",
            cfg.lr, cfg.batch
        )));
    }
    if valid.dims() != train.dims() {
        return Err(Error::Shape {
            op: "train_head",
            left: (valid.len(), valid.dims()),
            right: (train.len(), train.dims()),
        });
    }
    let x = maybe_transform(&train.values, gan)?;
    let labels = train.labels();
    let mut head = LinearHead::new(train.dims(), &mut seed::rng(seed::stage_seed(cfg.seed, "head/init")));
    let mut rng = seed::rng(seed::stage_seed(cfg.seed, "head/batches"));
    let mut adam = AdamState::new(cfg.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = head.clone();
    let mut report = HeadTrainReport {
        history: Vec::with_capacity(cfg.epochs),
        best_epoch: 0,
    };
    let mut best_acc = f64::NEG_INFINITY;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let xb = x.select_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            head.zero_grad();
            let logits = head.layer.apply(&xb)?;
            let (loss, grad) = cross_entropy(&logits, &yb)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("head loss at epoch {epoch}")));
            }
            head.layer.backprop(&xb, &grad)?;
            adam.step(&mut head, cfg.lr)?;
            loss_sum += loss as f64 * chunk.len() as f64;
        }
        let acc = evaluate(&head, valid)?.accuracy;
        report.history.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            valid_accuracy: acc,
        });
        if acc > best_acc {
            best_acc = acc;
            best.clone_from(&head);
            report.best_epoch = epoch;
        }
    }
    Ok((best, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub classes: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    /// Tab-separated confusion matrix with class names on both axes.
    pub fn confusion_table(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            out.push_str(c);
            for v in row {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy and confusion matrix of `head` on `test`, inputs used as given.
pub fn evaluate(head: &LinearHead, test: &PooledSet) -> Result<Evaluation> {
    evaluate_values(head, &test.values, &test.labels())
}

pub fn evaluate_values(head: &LinearHead, values: &Matrix<f32>, labels: &[usize]) -> Result<Evaluation> {
    if values.rows() == 0 {
        return Err(Error::EmptyInput("empty test set".into()));
    }
    let k = head.classes.len();
    let pred = head.predict(values)?;
    let mut confusion = vec![vec![0usize; k]; k];
    let mut correct = 0;
    for (&t, &p) in labels.iter().zip(&pred) {
        if t >= k {
            return Err(Error::InvalidClass { index: t, classes: k });
        }
        confusion[t][p] += 1;
        correct += usize::from(t == p);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / values.rows() as f64,
        correct,
        total: values.rows(),
        classes: head.classes.clone(),
        confusion,
    })
}

/// Mean and sample standard deviation of accuracies over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn multi_seed_report(accuracies: &[f64]) -> Result<SeedSummary> {
    if accuracies.len() < 2 {
        return Err(Error::Degenerate(format!(
            "standard deviation needs at least 2 runs, got {}",
            accuracies.len()
        )));
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SeedSummary {
        runs: accuracies.len(),
        mean,
        std: var.sqrt(),
    })
}

/// Percentages with two decimals, e.g. `96.11 ± 0.08`.
impl fmt::Display for SeedSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}
