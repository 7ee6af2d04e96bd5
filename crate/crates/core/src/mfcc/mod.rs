//! MFCC front end: pre-emphasis, Hann-windowed frames, magnitude FFT,
//! mel filterbank, natural log and orthonormal DCT-II.

pub mod fft;
pub mod filterbank;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl AudioClip {
    /// Reads a mono WAV file (integer PCM or float) into `[-1, 1]` samples.
    pub fn read_wav(path: &Path) -> Result<Self> {
        let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::Config(format!(
                "{}: expected mono audio, found {} channels",
                path.display(),
                spec.channels
            )));
        }
        let samples = match spec.sample_format {
            hound::SampleFormat::Float => reader
                .samples::<f32>()
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| wav_error(path, e))?,
            hound::SampleFormat::Int => {
                let full = (1i64 << (spec.bits_per_sample - 1)) as f32;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f32 / full))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| wav_error(path, e))?
            }
        };
        Ok(AudioClip {
            sample_rate: spec.sample_rate,
            samples,
        })
    }

    /// Writes 32-bit float mono WAV.
    pub fn write_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
        for &s in &self.samples {
            w.write_sample(s).map_err(|e| wav_error(path, e))?;
        }
        w.finalize().map_err(|e| wav_error(path, e))
    }
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub n_coeffs: usize,
    pub n_mels: usize,
    pub frame_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub pre_emphasis: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 16_000,
            n_coeffs: 64,
            n_mels: 64,
            frame_length: 400,
            hop: 160,
            fft_size: 512,
            fmin: 0.0,
            fmax: 8000.0,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        let bins = self.fft_size / 2 + 1;
        let fail = |m: String| Err(Error::Config(m));
        if !self.fft_size.is_power_of_two() {
            return fail(format!("fft_size {} must be a power of two", self.fft_size));
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels || self.n_mels > bins {
            return fail(format!(
                "need 0 < n_coeffs ({}) <= n_mels ({}) <= fft_size/2+1 ({bins})",
                self.n_coeffs, self.n_mels
            ));
        }
        if self.frame_length == 0 || self.frame_length > self.fft_size || self.hop == 0 {
            return fail(format!(
                "need 0 < frame_length ({}) <= fft_size ({}) and hop > 0",
                self.frame_length, self.fft_size
            ));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= self.sample_rate as f64 / 2.0) {
            return fail(format!(
                "need 0 <= fmin ({}) < fmax ({}) <= sample_rate/2",
                self.fmin, self.fmax
            ));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return fail("log_floor must be positive".into());
        }
        Ok(())
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_length {
            0
        } else {
            1 + (len - self.frame_length) / self.hop
        }
    }
}

/// Precomputed window, filterbank and DCT for one configuration.
pub struct MfccExtractor {
    cfg: MfccConfig,
    window: Vec<f64>,
    filterbank: Matrix<f64>,
    dct: Matrix<f64>,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.frame_length;
        // periodic Hann
        let window = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let filterbank = filterbank::mel_filterbank(
            cfg.n_mels,
            cfg.fft_size,
            cfg.sample_rate as f64,
            cfg.fmin,
            cfg.fmax,
        );
        let dct = filterbank::dct_matrix(cfg.n_coeffs, cfg.n_mels);
        Ok(MfccExtractor {
            cfg,
            window,
            filterbank,
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &Matrix<f64> {
        &self.filterbank
    }

    fn check_clip(&self, clip: &AudioClip) -> Result<()> {
        if clip.sample_rate != self.cfg.sample_rate {
            return Err(Error::Config(format!(
                "clip sample rate {} differs from configured {}",
                clip.sample_rate, self.cfg.sample_rate
            )));
        }
        if clip.samples.len() < self.cfg.frame_length {
            return Err(Error::EmptyInput(format!(
                "clip of {} samples is shorter than one {}-sample frame",
                clip.samples.len(),
                self.cfg.frame_length
            )));
        }
        Ok(())
    }

    /// Mel filterbank energies `[T × n_mels]` before the log.
    pub fn mel_energies(&self, clip: &AudioClip) -> Result<Matrix<f64>> {
        self.check_clip(clip)?;
        let c = &self.cfg;
        let x: Vec<f64> = clip.samples.iter().map(|&s| s as f64).collect();
        let mut emph = Vec::with_capacity(x.len());
        emph.push(x[0]);
        emph.extend(x.windows(2).map(|w| w[1] - c.pre_emphasis * w[0]));

        let frames = c.frame_count(x.len());
        let bins = c.fft_size / 2 + 1;
        let mut mags = Matrix::zeros(frames, bins);
        let mut frame = vec![0.0; c.frame_length];
        for t in 0..frames {
            let start = t * c.hop;
            for ((f, &s), &w) in frame.iter_mut().zip(&emph[start..start + c.frame_length]).zip(&self.window) {
                *f = s * w;
            }
            let spec = fft::real_spectrum(&frame, c.fft_size)?;
            for (m, s) in mags.row_mut(t).iter_mut().zip(spec) {
                *m = s.abs();
            }
        }
        mags.matmul_nt(&self.filterbank)
    }

    /// `[T × n_coeffs]` MFCCs with `T = 1 + ⌊(len − frame_length)/hop⌋`.
    pub fn compute(&self, clip: &AudioClip) -> Result<Matrix<f32>> {
        let floor = self.cfg.log_floor;
        let log_mel = self.mel_energies(clip)?.map(|e| e.max(floor).ln());
        let coeffs = log_mel.matmul_nt(&self.dct)?;
        Ok(coeffs.cast())
    }
}

pub fn mfcc(clip: &AudioClip, cfg: &MfccConfig) -> Result<FeatureSequence> {
    let values = MfccExtractor::new(cfg.clone())?.compute(clip)?;
    Ok(FeatureSequence::new(String::new(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, amp: f64, len: usize) -> AudioClip {
        AudioClip {
            sample_rate: 16_000,
            samples: (0..len)
                .map(|n| (amp * (2.0 * std::f64::consts::PI * freq * n as f64 / 16_000.0).sin()) as f32)
                .collect(),
        }
    }

    #[test]
    fn frame_count_without_padding() {
        let cfg = MfccConfig::default();
        assert_eq!(cfg.frame_count(16_000), 98);
        assert_eq!(cfg.frame_count(400), 1);
        assert_eq!(cfg.frame_count(399), 0);
        let out = mfcc(&sine(440.0, 0.5, 16_000), &cfg).unwrap();
        assert_eq!((out.frames(), out.dims()), (98, 64));
    }

    #[test]
    fn silence_is_a_constant_spectrum() {
        let cfg = MfccConfig::default();
        let clip = AudioClip {
            sample_rate: 16_000,
            samples: vec![0.0; 1600],
        };
        let out = mfcc(&clip, &cfg).unwrap();
        let c0 = (64f64).sqrt() * cfg.log_floor.ln();
        for t in 0..out.frames() {
            let row = out.values.row(t);
            assert!((row[0] as f64 - c0).abs() < 1e-3);
            assert!(row[1..].iter().all(|v| v.abs() < 1e-4));
        }
    }

    #[test]
    fn one_khz_tone_peaks_in_nearest_filter() {
        let ex = MfccExtractor::new(MfccConfig::default()).unwrap();
        let energies = ex.mel_energies(&sine(1000.0, 0.5, 4000)).unwrap();
        let centers = filterbank::mel_centers(64, 0.0, 8000.0);
        let nearest = (0..64)
            .min_by(|&a, &b| (centers[a] - 1000.0).abs().total_cmp(&(centers[b] - 1000.0).abs()))
            .unwrap();
        for t in 0..energies.rows() {
            let row = energies.row(t);
            let argmax = (0..64).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn gain_shifts_only_c0() {
        let cfg = MfccConfig::default();
        let clip: AudioClip = AudioClip {
            sample_rate: 16_000,
            samples: (0..3200)
                .map(|n| {
                    let t = n as f64 / 16_000.0;
                    (0.1 * (2.0 * std::f64::consts::PI * 300.0 * t).sin()
                        + 0.05 * (2.0 * std::f64::consts::PI * 2300.0 * t).sin()
                        + 0.02 * ((n * 7919 % 1000) as f64 / 500.0 - 1.0)) as f32
                })
                .collect(),
        };
        let loud = AudioClip {
            sample_rate: 16_000,
            samples: clip.samples.iter().map(|s| s * 10.0).collect(),
        };
        let a = mfcc(&clip, &cfg).unwrap().values;
        let b = mfcc(&loud, &cfg).unwrap().values;
        let shift = 8.0 * 10f64.ln();
        for t in 0..a.rows() {
            assert!(((b.get(t, 0) - a.get(t, 0)) as f64 - shift).abs() < 1e-3);
            for k in 1..64 {
                assert!((b.get(t, k) - a.get(t, k)).abs() < 1e-3, "frame {t} coeff {k}");
            }
        }
    }

    #[test]
    fn rejects_short_clips_and_bad_configs() {
        let cfg = MfccConfig::default();
        assert!(matches!(mfcc(&sine(100.0, 1.0, 399), &cfg), Err(Error::EmptyInput(_))));
        let bad = MfccConfig {
            n_coeffs: 80,
            ..MfccConfig::default()
        };
        assert!(matches!(mfcc(&sine(100.0, 1.0, 800), &bad), Err(Error::Config(_))));
        let bad = MfccConfig {
            fmax: 9000.0,
            ..MfccConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let clip = sine(440.0, 0.3, 1000);
        clip.write_wav(&p).unwrap();
        assert_eq!(AudioClip::read_wav(&p).unwrap(), clip);
    }
}
