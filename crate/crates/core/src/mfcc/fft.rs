//! In-place iterative radix-2 FFT.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Forward DFT, `X[k] = Σ x[n]·e^{−2πikn/N}`, for power-of-two `N`.
pub fn fft_in_place(buf: &mut [Complex]) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(Error::Config(format!("fft size {n} is not a power of two")));
    }
    if n <= 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let angle = -2.0 * std::f64::consts::PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let (s, c) = (angle * k as f64).sin_cos();
                let a = buf[start + k];
                let b = buf[start + k + half];
                let t = Complex::new(b.re * c - b.im * s, b.re * s + b.im * c);
                buf[start + k] = Complex::new(a.re + t.re, a.im + t.im);
                buf[start + k + half] = Complex::new(a.re - t.re, a.im - t.im);
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Spectrum of a real signal zero-padded to `size`; returns bins `0..=size/2`.
pub fn real_spectrum(signal: &[f64], size: usize) -> Result<Vec<Complex>> {
    if signal.len() > size {
        return Err(Error::Config(format!(
            "frame of {} samples exceeds fft size {size}",
            signal.len()
        )));
    }
    let mut buf = vec![Complex::default(); size];
    for (b, &s) in buf.iter_mut().zip(signal) {
        b.re = s;
    }
    fft_in_place(&mut buf)?;
    buf.truncate(size / 2 + 1);
    Ok(buf)
}
