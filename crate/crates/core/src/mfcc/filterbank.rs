//! HTK-scale triangular mel filters and the orthonormal DCT-II.

use crate::nn::Matrix;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Centre frequencies (Hz) of `n_mels` filters equally spaced on the mel scale.
pub fn mel_centers(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    mel_edges(n_mels, fmin, fmax)[1..=n_mels].to_vec()
}

fn mel_edges(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// `[n_mels × (fft_size/2 + 1)]` filter weights, peak 1, no area normalization.
pub fn mel_filterbank(n_mels: usize, fft_size: usize, sample_rate: f64, fmin: f64, fmax: f64) -> Matrix<f64> {
    let bins = fft_size / 2 + 1;
    let edges = mel_edges(n_mels, fmin, fmax);
    let mut fb = Matrix::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * sample_rate / fft_size as f64;
            let rise = (f - left) / (center - left);
            let fall = (right - f) / (right - center);
            fb.set(m, k, rise.min(fall).max(0.0));
        }
    }
    fb
}

/// Orthonormal DCT-II as an `[n_out × n_in]` matrix: `c = M·x`.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(n_out, n_in);
    let n = n_in as f64;
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for i in 0..n_in {
            let angle = std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n);
            m.set(k, i, scale * angle.cos());
        }
    }
    m
}
