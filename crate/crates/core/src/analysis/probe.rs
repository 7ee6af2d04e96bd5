use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pca::PcaModel;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, AdamConfig, AdamState, LinearLayer, Matrix, ParamRef, Params};
use crate::seed;

pub const MIN_PROBE_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeSpace {
    Raw,
    Pca2,
}

impl FromStr for ProbeSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ProbeSpace::Raw),
            "pca2" => Ok(ProbeSpace::Pca2),
            _ => Err(Error::Config(format!("probe space must be raw or pca2, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub train_fraction: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            train_fraction: 0.8,
            epochs: 200,
            lr: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub space: ProbeSpace,
    pub balanced_accuracy: f64,
    /// Held-out recall on real vectors.
    pub real_recall: f64,
    /// Held-out recall on synthetic vectors.
    pub synthetic_recall: f64,
    pub train_points: usize,
    pub test_points: usize,
}

struct Probe(LinearLayer<f32>);

impl Params<f32> for Probe {
    fn params_mut(&mut self) -> Vec<ParamRef<'_, f32>> {
        let LinearLayer {
            weight,
            bias,
            grad_weight,
            grad_bias,
            ..
        } = &mut self.0;
        vec![
            ParamRef {
                name: "probe.weight".into(),
                value: weight,
                grad: grad_weight,
            },
            ParamRef {
                name: "probe.bias".into(),
                value: bias,
                grad: grad_bias,
            },
        ]
    }

    fn zero_grad(&mut self) {
        self.0.zero_grad();
    }
}

/// Per-column standardization fitted on `train` (zero-variance columns are
/// only centered).
fn standardize(train: &Matrix<f32>, test: &Matrix<f32>) -> (Matrix<f32>, Matrix<f32>) {
    let (n, d) = train.shape();
    let mut mean = vec![0.0f64; d];
    let mut sq = vec![0.0f64; d];
    for r in 0..n {
        for (j, v) in train.row(r).iter().enumerate() {
            mean[j] += *v as f64;
            sq[j] += (*v as f64).powi(2);
        }
    }
    let stats: Vec<(f64, f64)> = mean
        .iter()
        .zip(&sq)
        .map(|(s, q)| {
            let m = s / n as f64;
            let sd = (q / n as f64 - m * m).max(0.0).sqrt();
            (m, if sd > 1e-12 { sd } else { 1.0 })
        })
        .collect();
    let apply = |m: &Matrix<f32>| {
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (v, (mu, sd)) in out.row_mut(r).iter_mut().zip(&stats) {
                *v = ((*v as f64 - mu) / sd) as f32;
            }
        }
        out
    };
    (apply(train), apply(test))
}

/// Held-out balanced accuracy of a linear real-vs-synthetic classifier.
///
/// Each set is shuffled and split by `train_fraction`; in `pca2` space the
/// PCA is fitted on the training union only.
pub fn separability_probe(
    real: &Matrix<f32>,
    synth: &Matrix<f32>,
    space: ProbeSpace,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    for (name, m) in [("real", real), ("synthetic", synth)] {
        if m.rows() < MIN_PROBE_POINTS {
            return Err(Error::EmptyInput(format!(
                "probe needs at least {MIN_PROBE_POINTS} {name} vectors, got {}",
                m.rows()
            )));
        }
    }
    if real.cols() != synth.cols() {
        return Err(Error::Shape {
            op: "separability_probe",
            left: real.shape(),
            right: synth.shape(),
        });
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction {} outside (0, 1)", cfg.train_fraction)));
    }
    let mut rng = seed::rng(seed::stage_seed(cfg.seed, "probe/split"));
    let mut split = |m: &Matrix<f32>| {
        let mut idx: Vec<usize> = (0..m.rows()).collect();
        idx.shuffle(&mut rng);
        let cut = ((m.rows() as f64 * cfg.train_fraction).round() as usize).clamp(1, m.rows() - 1);
        (m.select_rows(&idx[..cut]), m.select_rows(&idx[cut..]))
    };
    let (real_tr, real_te) = split(real);
    let (synth_tr, synth_te) = split(synth);
    let mut train = Matrix::vstack(&[&real_tr, &synth_tr])?;
    let mut test = Matrix::vstack(&[&real_te, &synth_te])?;
    let train_labels: Vec<usize> = (0..train.rows()).map(|i| usize::from(i >= real_tr.rows())).collect();

    if space == ProbeSpace::Pca2 {
        let pca = PcaModel::fit(&train, 2.min(train.cols()))?;
        train = pca.project(&train)?.cast();
        test = pca.project(&test)?.cast();
    }
    let (train, test) = standardize(&train, &test);

    let mut probe = Probe(LinearLayer::new(train.cols(), 2, &mut seed::rng(seed::stage_seed(cfg.seed, "probe/init"))));
    let mut adam = AdamState::new(AdamConfig::default());
    for epoch in 0..cfg.epochs {
        probe.zero_grad();
        let logits = probe.0.apply(&train)?;
        let (loss, grad) = cross_entropy(&logits, &train_labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("probe loss at epoch {epoch}")));
        }
        probe.0.backprop(&train, &grad)?;
        adam.step(&mut probe, cfg.lr)?;
    }

    let logits = probe.0.apply(&test)?;
    let mut hits = [0usize; 2];
    for r in 0..test.rows() {
        let truth = usize::from(r >= real_te.rows());
        let row = logits.row(r);
        let pred = usize::from(row[1] > row[0]);
        hits[truth] += usize::from(pred == truth);
    }
    let real_recall = hits[0] as f64 / real_te.rows() as f64;
    let synthetic_recall = hits[1] as f64 / synth_te.rows() as f64;
    Ok(ProbeResult {
        space,
        balanced_accuracy: 0.5 * (real_recall + synthetic_recall),
        real_recall,
        synthetic_recall,
        train_points: train.rows(),
        test_points: test.rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn gaussian(rows: usize, cols: usize, shift: f32, seed: u64) -> Matrix<f32> {
        let mut rng = crate::seed::rng(seed);
        let n = Normal::new(0.0f32, 1.0).unwrap();
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|i| n.sample(&mut rng) + if i % cols == 0 { shift } else { 0.0 }).collect())
            .unwrap()
    }

    #[test]
    fn separated_clouds_are_detected_in_both_spaces() {
        let (r, s) = (gaussian(100, 10, 0.0, 1), gaussian(80, 10, 10.0, 2));
        for space in [ProbeSpace::Raw, ProbeSpace::Pca2] {
            let res = separability_probe(&r, &s, space, &ProbeConfig::default()).unwrap();
            assert!(res.balanced_accuracy >= 0.99, "{res:?}");
            assert_eq!(res.train_points + res.test_points, 180);
        }
    }

    #[test]
    fn identical_distributions_are_near_chance() {
        let pool = gaussian(1200, 8, 0.0, 3);
        let (r, s) = pool.split_rows(600);
        let res = separability_probe(&r, &s, ProbeSpace::Raw, &ProbeConfig::default()).unwrap();
        assert!((res.balanced_accuracy - 0.5).abs() < 0.1, "{res:?}");
    }

    #[test]
    fn too_few_points_or_bad_space_is_an_error() {
        let r = gaussian(19, 4, 0.0, 4);
        assert!(matches!(
            separability_probe(&r, &gaussian(30, 4, 0.0, 5), ProbeSpace::Raw, &ProbeConfig::default()),
            Err(Error::EmptyInput(_))
        ));
        assert!("pca3".parse::<ProbeSpace>().is_err());
        assert_eq!("pca2".parse::<ProbeSpace>().unwrap(), ProbeSpace::Pca2);
    }
}
