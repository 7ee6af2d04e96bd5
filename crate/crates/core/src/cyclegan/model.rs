use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::CycleGanTrainConfig;
use crate::error::{Error, FormatError, Result};
use crate::features::{FeatureScaler, PooledSet};
use crate::nn::{Activation, Checkpoint, Matrix, Mlp, ParamRef, Params, Record, Scalar};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDims {
    pub features: usize,
    pub hidden: usize,
}

impl Default for NetDims {
    fn default() -> Self {
        NetDims {
            features: 1536,
            hidden: 512,
        }
    }
}

const GEN_ACTS: [Activation; 3] = [Activation::Relu, Activation::Relu, Activation::Tanh];
const DISC_ACTS: [Activation; 3] = [Activation::Relu, Activation::Relu, Activation::Sigmoid];

/// The four networks of the adversarial pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Networks<T: Scalar = f32> {
    pub g_a: Mlp<T>,
    pub g_b: Mlp<T>,
    pub d_a: Mlp<T>,
    pub d_b: Mlp<T>,
}

impl<T: Scalar> Networks<T> {
    pub fn new<R: Rng + ?Sized>(dims: NetDims, rng: &mut R) -> Result<Self> {
        if dims.features == 0 || dims.hidden == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let (f, h) = (dims.features, dims.hidden);
        Ok(Networks {
            g_a: Mlp::new(&[f, h, h, f], &GEN_ACTS, rng)?,
            g_b: Mlp::new(&[f, h, h, f], &GEN_ACTS, rng)?,
            d_a: Mlp::new(&[f, h, h, 1], &DISC_ACTS, rng)?,
            d_b: Mlp::new(&[f, h, h, 1], &DISC_ACTS, rng)?,
        })
    }

    pub fn features(&self) -> usize {
        self.g_a.in_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.features();
        for (name, net, out) in [
            ("g_a", &self.g_a, f),
            ("g_b", &self.g_b, f),
            ("d_a", &self.d_a, 1),
            ("d_b", &self.d_b, 1),
        ] {
            if net.in_dim() != f || net.out_dim() != out {
                return Err(Error::Config(format!(
                    "{name} is {}→{}, expected {f}→{out}",
                    net.in_dim(),
                    net.out_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Networks<U> {
        Networks {
            g_a: self.g_a.cast(),
            g_b: self.g_b.cast(),
            d_a: self.d_a.cast(),
            d_b: self.d_b.cast(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.g_a.is_finite() && self.g_b.is_finite() && self.d_a.is_finite() && self.d_b.is_finite()
    }

    fn named_mut(&mut self) -> [(&'static str, &mut Mlp<T>); 4] {
        [
            ("g_a", &mut self.g_a),
            ("g_b", &mut self.g_b),
            ("d_a", &mut self.d_a),
            ("d_b", &mut self.d_b),
        ]
    }
}

/// Parameters are named `<net>.layer<i>.<weight|bias>`.
impl<T: Scalar> Params<T> for Networks<T> {
    fn params_mut(&mut self) -> Vec<ParamRef<'_, T>> {
        self.named_mut()
            .into_iter()
            .flat_map(|(net, mlp)| {
                mlp.params_mut().into_iter().map(move |p| ParamRef {
                    name: format!("{net}.{}", p.name),
                    ..p
                })
            })
            .collect()
    }

    fn zero_grad(&mut self) {
        for (_, m) in self.named_mut() {
            m.zero_grad();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleGanModel {
    pub nets: Networks<f32>,
    pub scaler: FeatureScaler,
    pub config: CycleGanTrainConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    kind: String,
    version: String,
    networks: Vec<String>,
    layers: Vec<usize>,
    margin: f32,
    config: CycleGanTrainConfig,
}

const KIND: &str = "cyclegan";
const NET_ORDER: [&str; 4] = ["g_a", "g_b", "d_a", "d_b"];

impl CycleGanModel {
    /// Fits the scaler on `pool_a ∪ pool_b` and initializes the networks from
    /// the config seed.
    pub fn init(pool_a: &Matrix<f32>, pool_b: &Matrix<f32>, hidden: usize, config: CycleGanTrainConfig) -> Result<Self> {
        if pool_a.rows() == 0 || pool_b.rows() == 0 {
            return Err(Error::EmptyInput("cyclegan pools must be non-empty".into()));
        }
        let union = Matrix::vstack(&[pool_a, pool_b])?;
        let scaler = FeatureScaler::fit(&union, config.margin)?;
        let mut rng = seed::rng(seed::stage_seed(config.seed, "cyclegan/init"));
        let dims = NetDims {
            features: pool_a.cols(),
            hidden,
        };
        Self::new(Networks::new(dims, &mut rng)?, scaler, config)
    }

    pub fn new(nets: Networks<f32>, scaler: FeatureScaler, config: CycleGanTrainConfig) -> Result<Self> {
        nets.validate()?;
        if scaler.dims() != nets.features() {
            return Err(Error::Shape {
                op: "cyclegan scaler",
                left: (1, scaler.dims()),
                right: (1, nets.features()),
            });
        }
        Ok(CycleGanModel { nets, scaler, config })
    }

    pub fn dims(&self) -> NetDims {
        NetDims {
            features: self.nets.features(),
            hidden: self.nets.g_a.layers()[0].out_dim(),
        }
    }

    /// `unscale(G_A(scale(v)))` for every row of `raw`.
    pub fn transform(&self, raw: &Matrix<f32>) -> Result<Matrix<f32>> {
        transform_with(&self.scaler, raw, |s| self.nets.g_a.predict(s))
    }

    pub fn transform_set(&self, set: &PooledSet) -> Result<PooledSet> {
        PooledSet::new(set.records.clone(), self.transform(&set.values)?)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut records = Vec::new();
        let nets = [&self.nets.g_a, &self.nets.g_b, &self.nets.d_a, &self.nets.d_b];
        for net in nets {
            for (layer, act) in net.layers().iter().zip(net.activations()) {
                records.push(Record::Linear {
                    activation: *act,
                    layer: layer.clone(),
                });
            }
        }
        records.push(Record::Vector(self.scaler.min.clone()));
        records.push(Record::Vector(self.scaler.max.clone()));
        let meta = Meta {
            kind: KIND.into(),
            version: crate::VERSION.into(),
            networks: NET_ORDER.iter().map(|s| s.to_string()).collect(),
            layers: nets.iter().map(|n| n.layers().len()).collect(),
            margin: self.scaler.margin,
            config: self.config.clone(),
        };
        Checkpoint {
            records,
            metadata: serde_json::to_string(&meta).expect("metadata serializes"),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> std::result::Result<Self, FormatError> {
        let bad = |m: String| FormatError::Malformed(m);
        let meta: Meta = serde_json::from_str(&ckpt.metadata).map_err(|e| bad(format!("cyclegan metadata: {e}")))?;
        if meta.kind != KIND || meta.networks != NET_ORDER || meta.layers.len() != 4 {
            return Err(bad(format!("not a cyclegan checkpoint (kind {:?})", meta.kind)));
        }
        let mut records = ckpt.records.into_iter();
        let mut nets = Vec::with_capacity(4);
        for &count in &meta.layers {
            let mut layers = Vec::with_capacity(count);
            let mut acts = Vec::with_capacity(count);
            for _ in 0..count {
                match records.next() {
                    Some(Record::Linear { activation, layer }) => {
                        layers.push(layer);
                        acts.push(activation);
                    }
                    _ => return Err(bad("missing linear record".into())),
                }
            }
            nets.push(Mlp::from_layers(layers, acts).map_err(|e| bad(e.to_string()))?);
        }
        let (min, max) = match (records.next(), records.next(), records.next()) {
            (Some(Record::Vector(min)), Some(Record::Vector(max)), None) => (min, max),
            _ => return Err(bad("scaler missing".into())),
        };
        if min.len() != max.len() {
            return Err(bad("scaler min/max length differ".into()));
        }
        let mut it = nets.into_iter();
        let nets = Networks {
            g_a: it.next().unwrap(),
            g_b: it.next().unwrap(),
            d_a: it.next().unwrap(),
            d_b: it.next().unwrap(),
        };
        let scaler = FeatureScaler {
            min,
            max,
            margin: meta.margin,
        };
        Self::new(nets, scaler, meta.config).map_err(|e| bad(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?).map_err(|e| Error::format(path, e))
    }
}

/// Applies a scaled-space map between [`FeatureScaler::scale`] and
/// [`FeatureScaler::unscale`].
pub fn transform_with(
    scaler: &FeatureScaler,
    raw: &Matrix<f32>,
    map: impl Fn(&Matrix<f32>) -> Result<Matrix<f32>>,
) -> Result<Matrix<f32>> {
    let mapped = map(&scaler.scale(raw)?)?;
    if mapped.shape() != raw.shape() {
        return Err(Error::Shape {
            op: "transform",
            left: mapped.shape(),
            right: raw.shape(),
        });
    }
    scaler.unscale(&mapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LinearLayer;
    use rand_distr::{Distribution, Normal};

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
        let mut rng = crate::seed::rng(seed);
        let n = Normal::new(0.0f32, 2.0).unwrap();
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| n.sample(&mut rng)).collect()).unwrap()
    }

    fn tiny_model() -> CycleGanModel {
        let cfg = CycleGanTrainConfig {
            seed: 11,
            ..CycleGanTrainConfig::default()
        };
        CycleGanModel::init(&random(20, 6, 1), &random(30, 6, 2), 5, cfg).unwrap()
    }

    #[test]
    fn identity_stub_transform_is_lossless() {
        let v = random(8, 6, 3);
        let scaler = FeatureScaler::fit(&v, 0.05).unwrap();
        let out = transform_with(&scaler, &v, |s| Ok(s.clone())).unwrap();
        for (a, b) in out.data().iter().zip(v.data()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn batch_transform_equals_single_rows() {
        let m = tiny_model();
        let v = random(7, 6, 4);
        let batch = m.transform(&v).unwrap();
        for r in 0..v.rows() {
            let single = m.transform(&v.select_rows(&[r])).unwrap();
            for (a, b) in single.row(0).iter().zip(batch.row(r)) {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn generator_and_discriminator_ranges() {
        let m = tiny_model();
        let x = random(50, 6, 5).map(|v| v * 100.0);
        let g = m.nets.g_a.predict(&x).unwrap();
        assert!(g.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        let d = m.nets.d_a.predict(&random(50, 6, 6)).unwrap();
        assert!(d.data().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = tiny_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gan.fgnn");
        m.save(&path).unwrap();
        let back = CycleGanModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_checkpoint().records.len(), 14);
    }

    #[test]
    fn checkpoint_without_scaler_is_rejected() {
        let mut ckpt = tiny_model().to_checkpoint();
        ckpt.records.truncate(12);
        let err = CycleGanModel::from_checkpoint(ckpt).unwrap_err();
        assert!(err.to_string().contains("scaler missing"), "{err}");
    }

    #[test]
    fn mismatched_networks_are_rejected() {
        let mut m = tiny_model();
        let mut rng = crate::seed::rng(0);
        m.nets.d_b = Mlp::from_layers(vec![LinearLayer::new(6, 2, &mut rng)], vec![Activation::Sigmoid]).unwrap();
        assert!(CycleGanModel::new(m.nets, m.scaler, m.config).is_err());
    }

    #[test]
    fn parameter_names_are_prefixed() {
        let mut m = tiny_model();
        let names: Vec<String> = m.nets.params_mut().into_iter().map(|p| p.name).collect();
        assert_eq!(names.len(), 24);
        assert_eq!(names[0], "g_a.layer0.weight");
        assert_eq!(names[23], "d_b.layer2.bias");
    }
}
