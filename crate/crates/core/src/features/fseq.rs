//! FSEQ feature-sequence files.
//!
//! `"FSEQ"` | version u32 = 1 | T u32 | D u32 | T·D f32, frame-major. Little-endian.

use std::fs;
use std::path::Path;

use crate::binio::{checked_u32, put_f32s, put_u32, Reader};
use crate::error::{Error, FormatError, Result};
use crate::nn::Matrix;

pub const MAGIC: &[u8; 4] = b"FSEQ";
pub const VERSION: u32 = 1;

/// A `T×D` sequence of frame-level features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    pub values: Matrix<f32>,
}

impl FeatureSequence {
    pub fn new(utterance_id: impl Into<String>, values: Matrix<f32>) -> Self {
        FeatureSequence {
            utterance_id: utterance_id.into(),
            values,
        }
    }

    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    pub fn dims(&self) -> usize {
        self.values.cols()
    }
}

pub fn encode(values: &Matrix<f32>) -> std::result::Result<Vec<u8>, FormatError> {
    let mut out = Vec::with_capacity(16 + values.data().len() * 4);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, checked_u32(values.rows(), "frames")?);
    put_u32(&mut out, checked_u32(values.cols(), "dims")?);
    put_f32s(&mut out, values.data());
    Ok(out)
}

pub fn decode(buf: &[u8]) -> std::result::Result<Matrix<f32>, FormatError> {
    let mut r = Reader::new(buf);
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let frames = r.u32()? as u64;
    let dims = r.u32()? as u64;
    if frames == 0 || dims == 0 {
        return Err(FormatError::Malformed(format!(
            "empty sequence ({frames} frames x {dims} dims)"
        )));
    }
    let count = frames
        .checked_mul(dims)
        .ok_or_else(|| FormatError::Overflow(format!("{frames} frames x {dims} dims")))?;
    let data = r.f32_vec(count)?;
    if r.remaining() != 0 {
        return Err(FormatError::Malformed(format!(
            "{} trailing bytes after payload",
            r.remaining()
        )));
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::Malformed(format!(
            "non-finite value at frame {}, dim {}",
            pos as u64 / dims,
            pos as u64 % dims
        )));
    }
    Matrix::from_vec(frames as usize, dims as usize, data).map_err(|e| FormatError::Malformed(e.to_string()))
}

/// Reads an FSEQ file; the utterance id defaults to the file stem.
pub fn read_fseq(path: &Path) -> Result<FeatureSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let values = decode(&bytes).map_err(|e| Error::format(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FeatureSequence::new(id, values))
}

pub fn write_fseq(seq: &FeatureSequence, path: &Path) -> Result<()> {
    write_matrix(&seq.values, path)
}

pub fn write_matrix(values: &Matrix<f32>, path: &Path) -> Result<()> {
    if values.rows() == 0 || values.cols() == 0 {
        return Err(Error::EmptyInput(format!("refusing to write empty FSEQ {}", path.display())));
    }
    let bytes = encode(values).map_err(|e| Error::format(path, e))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn random_sequence_round_trips_bit_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let data: Vec<f32> = (0..7 * 64).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let m = Matrix::from_vec(7, 64, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("utt_01.fseq");
        write_fseq(&FeatureSequence::new("utt_01", m.clone()), &p).unwrap();
        let back = read_fseq(&p).unwrap();
        assert_eq!(back.utterance_id, "utt_01");
        let a: Vec<u32> = m.data().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.values.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(fs::read(&p).unwrap().len(), 16 + 7 * 64 * 4);
    }

    #[test]
    fn corrupt_magic() {
        let mut bytes = encode(&Matrix::filled(2, 2, 1.0)).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(FormatError::BadMagic { .. })));
        assert!(matches!(decode(b"FS"), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn header_claims_more_frames_than_present() {
        let mut bytes = encode(&Matrix::filled(2, 3, 1.0)).unwrap();
        bytes[8..12].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(FormatError::Truncated { .. })));
    }

    #[test]
    fn frame_dim_product_overflow() {
        let mut bytes = encode(&Matrix::filled(1, 1, 1.0)).unwrap();
        bytes[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        bytes[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(FormatError::Overflow(_))));
    }

    #[test]
    fn other_malformations() {
        let mut bytes = encode(&Matrix::filled(1, 2, 1.0)).unwrap();
        bytes[4] = 2;
        assert_eq!(decode(&bytes), Err(FormatError::UnsupportedVersion(2)));

        let mut bytes = encode(&Matrix::filled(1, 2, 1.0)).unwrap();
        bytes.extend_from_slice(&[0, 0]);
        assert!(matches!(decode(&bytes), Err(FormatError::Malformed(_))));

        let bytes = encode(&Matrix::filled(1, 2, f32::NAN)).unwrap();
        assert!(matches!(decode(&bytes), Err(FormatError::Malformed(_))));

        let mut bytes = encode(&Matrix::filled(1, 2, 1.0)).unwrap();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode(&bytes[..16]), Err(FormatError::Malformed(_))));
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact(t in 1usize..6, d in 1usize..9, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f32> = (0..t * d).map(|_| f32::from_bits(rng.gen::<u32>() & 0xbf7f_ffff)).collect();
            let m = Matrix::from_vec(t, d, data).unwrap();
            let back = decode(&encode(&m).unwrap()).unwrap();
            let a: Vec<u32> = m.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
