//! FGNN model checkpoints.
//!
//! ```text
//! "FGNN" | version u32 | record count u32 | records... | metadata length u32 | metadata (UTF-8)
//! linear record: tag 1 | activation u32 | in u32 | out u32 | weight out·in f32 | bias out f32
//! vector record: tag 2 | len u32 | len f32
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::activation::Activation;
use super::linear::LinearLayer;
use super::matrix::Matrix;
use crate::binio::{checked_u32, put_f32s, put_u32, Reader};
use crate::error::{Error, FormatError, Result};

pub const MAGIC: &[u8; 4] = b"FGNN";
pub const VERSION: u32 = 1;

const TAG_LINEAR: u32 = 1;
const TAG_VECTOR: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Linear {
        activation: Activation,
        layer: LinearLayer<f32>,
    },
    Vector(Vec<f32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub records: Vec<Record>,
    /// Trailing metadata block, JSON by convention.
    pub metadata: String,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> std::result::Result<Vec<u8>, FormatError> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, checked_u32(self.records.len(), "record count")?);
        for rec in &self.records {
            match rec {
                Record::Linear { activation, layer } => {
                    put_u32(&mut out, TAG_LINEAR);
                    put_u32(&mut out, activation.tag());
                    put_u32(&mut out, checked_u32(layer.in_dim(), "in_dim")?);
                    put_u32(&mut out, checked_u32(layer.out_dim(), "out_dim")?);
                    put_f32s(&mut out, layer.weight.data());
                    put_f32s(&mut out, layer.bias.data());
                }
                Record::Vector(values) => {
                    put_u32(&mut out, TAG_VECTOR);
                    put_u32(&mut out, checked_u32(values.len(), "vector length")?);
                    put_f32s(&mut out, values);
                }
            }
        }
        put_u32(&mut out, checked_u32(self.metadata.len(), "metadata length")?);
        out.extend_from_slice(self.metadata.as_bytes());
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(buf);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let count = r.u32()?;
        let mut records = Vec::new();
        for i in 0..count {
            let tag = r.u32()?;
            match tag {
                TAG_LINEAR => {
                    let act_tag = r.u32()?;
                    let activation = Activation::from_tag(act_tag).ok_or_else(|| {
                        FormatError::Malformed(format!("record {i}: unknown activation tag {act_tag}"))
                    })?;
                    let in_dim = r.u32()? as u64;
                    let out_dim = r.u32()? as u64;
                    let n = in_dim
                        .checked_mul(out_dim)
                        .ok_or_else(|| FormatError::Overflow(format!("{out_dim}x{in_dim} weight")))?;
                    let w = r.f32_vec(n)?;
                    let b = r.f32_vec(out_dim)?;
                    let weight = Matrix::from_vec(out_dim as usize, in_dim as usize, w)
                        .map_err(|e| FormatError::Malformed(e.to_string()))?;
                    let bias = Matrix::from_vec(out_dim as usize, 1, b)
                        .map_err(|e| FormatError::Malformed(e.to_string()))?;
                    let layer = LinearLayer::from_parts(weight, bias)
                        .map_err(|e| FormatError::Malformed(e.to_string()))?;
                    records.push(Record::Linear { activation, layer });
                }
                TAG_VECTOR => {
                    let n = r.u32()? as u64;
                    records.push(Record::Vector(r.f32_vec(n)?));
                }
                other => {
                    return Err(FormatError::Malformed(format!(
                        "record {i}: unknown kind tag {other}"
                    )))
                }
            }
        }
        let meta_len = r.u32()? as usize;
        let meta = r.take(meta_len)?;
        let metadata = String::from_utf8(meta.to_vec())
            .map_err(|_| FormatError::Malformed("metadata is not UTF-8".into()))?;
        if r.remaining() != 0 {
            return Err(FormatError::Malformed(format!(
                "{} trailing bytes after metadata",
                r.remaining()
            )));
        }
        Ok(Checkpoint { records, metadata })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes().map_err(|e| Error::format(path, e))?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes).map_err(|e| Error::format(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut layer = LinearLayer::<f32>::new(5, 3, &mut rng);
        layer.bias.data_mut()[1] = -0.0;
        layer.bias.data_mut()[2] = f32::MIN_POSITIVE;
        Checkpoint {
            records: vec![
                Record::Linear {
                    activation: Activation::Tanh,
                    layer,
                },
                Record::Vector(vec![1.5, -2.25, 1e-30]),
            ],
            metadata: r#"{"kind":"test","note":"ü"}"#.into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.metadata, ck.metadata);
    }

    #[test]
    fn header_corruptions_map_to_error_kinds() {
        let bytes = sample().to_bytes().unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(FormatError::BadMagic { .. })));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(Checkpoint::from_bytes(&bad), Err(FormatError::UnsupportedVersion(9)));

        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(FormatError::Truncated { .. })
        ));

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(FormatError::Malformed(_))));

        // weight byte count overflows u64
        let mut bad = bytes.clone();
        bad[20..24].copy_from_slice(&u32::MAX.to_le_bytes());
        bad[24..28].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(FormatError::Overflow(_))));

        let mut bad = bytes.clone();
        bad[20..24].copy_from_slice(&1_000_000u32.to_le_bytes());
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(FormatError::Truncated { .. })));
    }
}
