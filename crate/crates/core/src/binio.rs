//! Little-endian helpers shared by the FSEQ and FGNN formats.

use crate::error::FormatError;

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated {
                needed: (self.pos + n) as u64,
                available: self.buf.len() as u64,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<(), FormatError> {
        let found = match self.take(4) {
            Ok(b) => [b[0], b[1], b[2], b[3]],
            Err(_) => {
                let mut found = [0u8; 4];
                let n = self.remaining();
                found[..n].copy_from_slice(&self.buf[self.pos..]);
                found
            }
        };
        if &found != expected {
            return Err(FormatError::BadMagic {
                expected: *expected,
                found,
            });
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Reads `count` floats after checking the payload is long enough, so a
    /// lying header fails before any allocation.
    pub fn f32_vec(&mut self, count: u64) -> Result<Vec<f32>, FormatError> {
        let bytes = count
            .checked_mul(4)
            .filter(|&b| b <= usize::MAX as u64)
            .ok_or_else(|| FormatError::Overflow(format!("{count} floats")))?;
        let raw = self.take(bytes as usize)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, vals: &[f32]) {
    out.reserve(vals.len() * 4);
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn checked_u32(v: usize, what: &str) -> Result<u32, FormatError> {
    u32::try_from(v).map_err(|_| FormatError::Overflow(format!("{what} = {v} exceeds u32")))
}
