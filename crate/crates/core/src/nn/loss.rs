//! Losses with mean reduction. Each returns the scalar loss together with
//! `∂loss/∂pred`.

use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    L1,
    /// Softmax cross-entropy; the target matrix holds one-hot rows.
    CrossEntropy,
}

impl LossKind {
    pub fn compute<T: Scalar>(self, pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
        match self {
            LossKind::Mse => mse(pred, target),
            LossKind::L1 => l1(pred, target),
            LossKind::CrossEntropy => {
                pred.check_same_shape(target, "cross_entropy")?;
                let labels = one_hot_to_labels(target)?;
                cross_entropy(pred, &labels)
            }
        }
    }
}

fn element_count<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    let n = m.rows() * m.cols();
    if n == 0 {
        return Err(Error::EmptyInput("loss over an empty batch".into()));
    }
    Ok(T::from_f64(n as f64))
}

/// Mean squared error over all elements.
pub fn mse<T: Scalar>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    pred.check_same_shape(target, "mse")?;
    let n = element_count(pred)?;
    let two = T::from_f64(2.0);
    let mut sum = T::zero();
    let grad = pred.zip_map(target, "mse", |p, t| {
        let d = p - t;
        two * d / n
    })?;
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        sum = sum + d * d;
    }
    Ok((sum / n, grad))
}

/// Mean absolute error over all elements; the subgradient at zero is zero.
pub fn l1<T: Scalar>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    pred.check_same_shape(target, "l1")?;
    let n = element_count(pred)?;
    let mut sum = T::zero();
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        sum = sum + (p - t).abs();
    }
    let grad = pred.zip_map(target, "l1", |p, t| {
        let d = p - t;
        if d > T::zero() {
            T::one() / n
        } else if d < T::zero() {
            -T::one() / n
        } else {
            T::zero()
        }
    })?;
    Ok((sum / n, grad))
}

/// Row-wise softmax, shifted by the row maximum for stability.
pub fn softmax<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z = z + *v;
        }
        for v in row.iter_mut() {
            *v = *v / z;
        }
    }
    out
}

/// Softmax cross-entropy averaged over rows; `labels[i]` is the class of row `i`.
pub fn cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
    if labels.len() != logits.rows() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    if logits.rows() == 0 {
        return Err(Error::EmptyInput("cross_entropy over an empty batch".into()));
    }
    let classes = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidClass {
            index: bad,
            classes,
        });
    }
    let b = T::from_f64(logits.rows() as f64);
    let mut grad = softmax(logits);
    let mut total = T::zero();
    for (r, &label) in labels.iter().enumerate() {
        // log-sum-exp form keeps the loss finite even when the softmax underflows
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = row.iter().map(|&v| (v - max).exp()).fold(T::zero(), |a, e| a + e).ln() + max;
        total = total + (lse - row[label]);
        let g = grad.row_mut(r);
        g[label] = g[label] - T::one();
        for v in g.iter_mut() {
            *v = *v / b;
        }
    }
    Ok((total / b, grad))
}

fn one_hot_to_labels<T: Scalar>(target: &Matrix<T>) -> Result<Vec<usize>> {
    (0..target.rows())
        .map(|r| {
            let row = target.row(r);
            let ones: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == T::one())
                .map(|(i, _)| i)
                .collect();
            let zeros = row.iter().filter(|&&v| v == T::zero()).count();
            if ones.len() == 1 && zeros + 1 == row.len() {
                Ok(ones[0])
            } else {
                Err(Error::InvalidClass {
                    index: ones.first().copied().unwrap_or(row.len()),
                    classes: row.len(),
                })
            }
        })
        .collect()
}
