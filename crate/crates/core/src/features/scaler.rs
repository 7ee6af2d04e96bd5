use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

pub const DEFAULT_MARGIN: f32 = 0.05;

/// Per-dimension min-max map into `[−1+m, 1−m]`.
///
/// Dimensions with `max == min` scale to 0 and unscale back to the constant.
/// Values outside the fitted range extrapolate linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f32>,
    pub max: Vec<f32>,
    pub margin: f32,
}

impl FeatureScaler {
    /// Fits over the rows of `pool`.
    pub fn fit(pool: &Matrix<f32>, margin: f32) -> Result<Self> {
        if pool.rows() == 0 {
            return Err(Error::EmptyInput("fit_scaler over an empty pool".into()));
        }
        if !(0.0..1.0).contains(&margin) {
            return Err(Error::Config(format!("scaler margin {margin} outside [0, 1)")));
        }
        let mut min = pool.row(0).to_vec();
        let mut max = min.clone();
        for r in 1..pool.rows() {
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(pool.row(r)) {
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        Ok(FeatureScaler { min, max, margin })
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dims() {
            return Err(Error::Shape {
                op: "scale",
                left: (1, cols),
                right: (1, self.dims()),
            });
        }
        Ok(())
    }

    fn half_width(&self) -> f64 {
        1.0 - self.margin as f64
    }

    pub fn scale_vec(&self, v: &[f32]) -> Result<Vec<f32>> {
        self.check(v.len())?;
        let hw = self.half_width();
        Ok(v.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                if hi > lo {
                    let (x, lo, hi) = (x as f64, lo as f64, hi as f64);
                    (-hw + (x - lo) / (hi - lo) * 2.0 * hw) as f32
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn unscale_vec(&self, s: &[f32]) -> Result<Vec<f32>> {
        self.check(s.len())?;
        let hw = self.half_width();
        Ok(s.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&y, (&lo, &hi))| {
                if hi > lo {
                    let (y, lo, hi) = (y as f64, lo as f64, hi as f64);
                    (lo + (y + hw) / (2.0 * hw) * (hi - lo)) as f32
                } else {
                    lo
                }
            })
            .collect())
    }

    pub fn scale(&self, m: &Matrix<f32>) -> Result<Matrix<f32>> {
        self.map_rows(m, Self::scale_vec)
    }

    pub fn unscale(&self, m: &Matrix<f32>) -> Result<Matrix<f32>> {
        self.map_rows(m, Self::unscale_vec)
    }

    fn map_rows(
        &self,
        m: &Matrix<f32>,
        f: impl Fn(&Self, &[f32]) -> Result<Vec<f32>>,
    ) -> Result<Matrix<f32>> {
        self.check(m.cols())?;
        let mut data = Vec::with_capacity(m.data().len());
        for r in 0..m.rows() {
            data.extend(f(self, m.row(r))?);
        }
        Matrix::from_vec(m.rows(), m.cols(), data)
    }
}
