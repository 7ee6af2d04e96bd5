use serde::{Deserialize, Serialize};

use super::loss::{discriminator_backward, GeneratorPass, Lambdas, LossTerms};
use super::model::{CycleGanModel, Networks};
use crate::batching::BatchSampler;
use crate::error::{Error, Result};
use crate::features::DEFAULT_MARGIN;
use crate::nn::{AdamConfig, AdamState, Matrix, Params};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleGanTrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub lambda_cyc: f64,
    pub lambda_id: f64,
    pub seed: u64,
    /// Scaler margin: scaled features live in `[−1+m, 1−m]`.
    pub margin: f32,
    pub adam: AdamConfig,
}

impl Default for CycleGanTrainConfig {
    fn default() -> Self {
        CycleGanTrainConfig {
            epochs: 200,
            batch: 128,
            lr: 1e-5,
            lambda_cyc: 10.0,
            lambda_id: 0.5,
            seed: 0,
            margin: DEFAULT_MARGIN,
            adam: AdamConfig::default(),
        }
    }
}

impl CycleGanTrainConfig {
    pub fn lambdas(&self) -> Lambdas {
        Lambdas {
            cyc: self.lambda_cyc,
            id: self.lambda_id,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lambdas().validate()?;
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Mean of every loss over the iterations of one epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub d_a: f64,
    pub d_b: f64,
    #[serde(flatten)]
    pub generator: LossTerms,
}

impl EpochLosses {
    pub const HEADER: &'static str = "epoch\td_a\td_b\tgan_a\tgan_b\tcyc_a\tcyc_b\tid_a\tid_b\ttotal";

    pub fn table_row(&self) -> String {
        let mut row = format!("{}\t{:.6}\t{:.6}", self.epoch, self.d_a, self.d_b);
        for (_, v) in self.generator.named() {
            row.push_str(&format!("\t{v:.6}"));
        }
        row
    }
}

#[derive(Debug)]
pub struct TrainReport {
    pub history: Vec<EpochLosses>,
    /// Set when training stopped on a non-finite loss; the model then holds
    /// the parameters from the end of the last completed epoch.
    pub aborted: Option<Error>,
}

impl TrainReport {
    pub fn table(&self) -> String {
        let mut out = String::from(EpochLosses::HEADER);
        out.push('\n');
        for e in &self.history {
            out.push_str(&e.table_row());
            out.push('\n');
        }
        out
    }
}

struct Optimizers {
    g_a: AdamState<f32>,
    g_b: AdamState<f32>,
    d_a: AdamState<f32>,
    d_b: AdamState<f32>,
}

/// Trains on raw (unscaled) pools; the model's scaler maps them into the
/// generator range first.
///
/// Each iteration draws independent batches from both pools, takes one Adam
/// step on both discriminators, then one on both generators.
pub fn train(model: &mut CycleGanModel, pool_a: &Matrix<f32>, pool_b: &Matrix<f32>) -> Result<TrainReport> {
    train_observed(model, pool_a, pool_b, |_, _| {})
}

/// [`train`] with `observe` called after every completed epoch.
pub fn train_observed(
    model: &mut CycleGanModel,
    pool_a: &Matrix<f32>,
    pool_b: &Matrix<f32>,
    mut observe: impl FnMut(&EpochLosses, &CycleGanModel),
) -> Result<TrainReport> {
    let cfg = model.config.clone();
    cfg.validate()?;
    if pool_a.rows() == 0 || pool_b.rows() == 0 {
        return Err(Error::EmptyInput("cyclegan pools must be non-empty".into()));
    }
    let a_all = model.scaler.scale(pool_a)?;
    let b_all = model.scaler.scale(pool_b)?;
    let lambdas = cfg.lambdas();
    let mut rng = seed::rng(seed::stage_seed(cfg.seed, "cyclegan/batches"));
    let mut sample_a = BatchSampler::new(a_all.rows(), cfg.batch);
    let mut sample_b = BatchSampler::new(b_all.rows(), cfg.batch);
    let iterations = pool_a.rows().max(pool_b.rows()).div_ceil(cfg.batch);
    let mut opt = Optimizers {
        g_a: AdamState::new(cfg.adam),
        g_b: AdamState::new(cfg.adam),
        d_a: AdamState::new(cfg.adam),
        d_b: AdamState::new(cfg.adam),
    };

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut last_good = model.nets.clone();
    for epoch in 1..=cfg.epochs {
        let mut acc = EpochLosses {
            epoch,
            ..EpochLosses::default()
        };
        for _ in 0..iterations {
            let a = a_all.select_rows(&sample_a.next_batch(&mut rng));
            let b = b_all.select_rows(&sample_b.next_batch(&mut rng));
            match step(&mut model.nets, &mut opt, &a, &b, lambdas, cfg.lr) {
                Ok((d, g)) => {
                    acc.d_a += d.d_a;
                    acc.d_b += d.d_b;
                    for (slot, v) in terms_mut(&mut acc.generator).into_iter().zip(g.named()) {
                        *slot += v.1;
                    }
                }
                Err(e @ Error::NonFinite(_)) => {
                    model.nets = last_good;
                    return Ok(TrainReport {
                        history,
                        aborted: Some(Error::NonFinite(format!("{e} at epoch {epoch}"))),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let n = iterations as f64;
        acc.d_a /= n;
        acc.d_b /= n;
        for slot in terms_mut(&mut acc.generator) {
            *slot /= n;
        }
        history.push(acc);
        if !model.nets.is_finite() {
            model.nets = last_good;
            return Ok(TrainReport {
                history,
                aborted: Some(Error::NonFinite(format!("parameters after epoch {epoch}"))),
            });
        }
        last_good.clone_from(&model.nets);
        observe(history.last().expect("pushed above"), model);
    }
    Ok(TrainReport { history, aborted: None })
}

fn terms_mut(t: &mut LossTerms) -> [&mut f64; 7] {
    [
        &mut t.gan_a,
        &mut t.gan_b,
        &mut t.cyc_a,
        &mut t.cyc_b,
        &mut t.id_a,
        &mut t.id_b,
        &mut t.total,
    ]
}

fn step(
    nets: &mut Networks<f32>,
    opt: &mut Optimizers,
    a: &Matrix<f32>,
    b: &Matrix<f32>,
    lambdas: Lambdas,
    lr: f64,
) -> Result<(super::DiscriminatorLosses, LossTerms)> {
    let pass = GeneratorPass::run(nets, a, b)?;
    nets.d_a.zero_grad();
    nets.d_b.zero_grad();
    let d = discriminator_backward(nets, &pass)?;
    opt.d_a.step(&mut nets.d_a, lr)?;
    opt.d_b.step(&mut nets.d_b, lr)?;

    nets.g_a.zero_grad();
    nets.g_b.zero_grad();
    let g = pass.backward(nets, lambdas)?;
    opt.g_a.step(&mut nets.g_a, lr)?;
    opt.g_b.step(&mut nets.g_b, lr)?;
    Ok((d, g))
}
