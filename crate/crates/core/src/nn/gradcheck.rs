//! Central finite-difference gradient verification in 64-bit.
//!
//! Relative error of an analytic gradient tensor `a` against its numeric
//! estimate `n` is `‖a − n‖₂ / max(‖a‖₂ + ‖n‖₂, 1e-12)`; a report keeps the
//! worst tensor.

use super::matrix::Matrix;
use super::mlp::Params;

/// Step used for every finite-difference check in the toolkit.
pub const FD_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: String,
    pub entries: usize,
}

impl GradCheckReport {
    pub fn empty() -> Self {
        GradCheckReport {
            max_rel_error: 0.0,
            worst: String::new(),
            entries: 0,
        }
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.entries += other.entries;
        if other.max_rel_error >= self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
    }
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    diff / (na + nn).max(1e-12)
}

/// Copies the accumulated gradients of `model`, in parameter order.
pub fn snapshot_grads<M: Params<f64> + ?Sized>(model: &mut M) -> Vec<(String, Vec<f64>)> {
    model
        .params_mut()
        .into_iter()
        .map(|p| (p.name, p.grad.data().to_vec()))
        .collect()
}

/// Numeric gradient of `loss` with respect to every parameter of `model`.
pub fn numeric_param_grads<M, F>(model: &mut M, eps: f64, loss: F) -> Vec<Vec<f64>>
where
    M: Params<f64> + ?Sized,
    F: Fn(&M) -> f64,
{
    let sizes: Vec<usize> = model
        .params_mut()
        .iter()
        .map(|p| p.value.data().len())
        .collect();
    let mut out = Vec::with_capacity(sizes.len());
    for (pi, &n) in sizes.iter().enumerate() {
        let mut grads = Vec::with_capacity(n);
        for j in 0..n {
            let orig = set_param(model, pi, j, None);
            set_param(model, pi, j, Some(orig + eps));
            let plus = loss(model);
            set_param(model, pi, j, Some(orig - eps));
            let minus = loss(model);
            set_param(model, pi, j, Some(orig));
            grads.push((plus - minus) / (2.0 * eps));
        }
        out.push(grads);
    }
    out
}

fn set_param<M: Params<f64> + ?Sized>(model: &mut M, pi: usize, j: usize, value: Option<f64>) -> f64 {
    let mut params = model.params_mut();
    let slot = &mut params[pi].value.data_mut()[j];
    let old = *slot;
    if let Some(v) = value {
        *slot = v;
    }
    old
}

/// Numeric gradient of `f` with respect to the entries of `x`.
pub fn numeric_input_grad<F>(x: &Matrix<f64>, eps: f64, f: F) -> Matrix<f64>
where
    F: Fn(&Matrix<f64>) -> f64,
{
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for j in 0..x.data().len() {
        let orig = probe.data()[j];
        probe.data_mut()[j] = orig + eps;
        let plus = f(&probe);
        probe.data_mut()[j] = orig - eps;
        let minus = f(&probe);
        probe.data_mut()[j] = orig;
        grad.data_mut()[j] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// Compares analytic parameter gradients (from [`snapshot_grads`]) with numeric ones.
pub fn compare(label: &str, analytic: &[(String, Vec<f64>)], numeric: &[Vec<f64>]) -> GradCheckReport {
    let mut report = GradCheckReport::empty();
    for ((name, a), n) in analytic.iter().zip(numeric) {
        let err = relative_error(a, n);
        report.entries += a.len();
        if err >= report.max_rel_error {
            report.max_rel_error = err;
            report.worst = format!("{label}/{name}");
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_of_identical_vectors_is_zero() {
        assert_eq!(relative_error(&[1.0, -2.0], &[1.0, -2.0]), 0.0);
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn numeric_input_gradient_of_quadratic() {
        let x = Matrix::from_vec(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let g = numeric_input_grad(&x, FD_EPS, |m| m.data().iter().map(|v| v * v).sum());
        for (gv, xv) in g.data().iter().zip(x.data()) {
            assert!((gv - 2.0 * xv).abs() < 1e-9);
        }
    }
}
