use rand::Rng;

use super::matrix::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Dense affine layer `y = x·Wᵀ + b` with `W: [out×in]` and `b: [out×1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer<T: Scalar = f32> {
    pub weight: Matrix<T>,
    pub bias: Matrix<T>,
    pub grad_weight: Matrix<T>,
    pub grad_bias: Matrix<T>,
    cached_input: Option<Matrix<T>>,
}

impl<T: Scalar> LinearLayer<T> {
    /// Fan-in uniform init in `[-sqrt(1/in), +sqrt(1/in)]`, zero biases.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = (1.0 / in_dim.max(1) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| T::from_f64(rng.gen_range(-bound..=bound)))
            .collect();
        let weight = Matrix::from_vec(out_dim, in_dim, data).expect("sized above");
        Self::from_parts(weight, Matrix::zeros(out_dim, 1)).expect("consistent shapes")
    }

    pub fn from_parts(weight: Matrix<T>, bias: Matrix<T>) -> Result<Self> {
        if bias.shape() != (weight.rows(), 1) {
            return Err(Error::Shape {
                op: "linear bias",
                left: weight.shape(),
                right: bias.shape(),
            });
        }
        Ok(LinearLayer {
            grad_weight: Matrix::zeros(weight.rows(), weight.cols()),
            grad_bias: Matrix::zeros(bias.rows(), 1),
            weight,
            bias,
            cached_input: None,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Forward pass without touching the cache.
    pub fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.in_dim() {
            return Err(Error::Shape {
                op: "linear_forward",
                left: x.shape(),
                right: self.weight.shape(),
            });
        }
        let mut out = x.matmul_nt(&self.weight)?;
        let b = self.bias.data();
        for r in 0..out.rows() {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(b) {
                *o = *o + bv;
            }
        }
        Ok(out)
    }

    /// Accumulates `∂L/∂W` and `∂L/∂b` for the given input into the layer's
    /// gradient buffers and returns `∂L/∂x`.
    pub fn backprop(&mut self, input: &Matrix<T>, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        if grad_out.shape() != (input.rows(), self.out_dim()) {
            return Err(Error::Shape {
                op: "linear_backward",
                left: grad_out.shape(),
                right: (input.rows(), self.out_dim()),
            });
        }
        grad_out.matmul_tn_acc(input, &mut self.grad_weight)?;
        let gb = self.grad_bias.data_mut();
        for r in 0..grad_out.rows() {
            for (g, &v) in gb.iter_mut().zip(grad_out.row(r)) {
                *g = *g + v;
            }
        }
        grad_out.matmul(&self.weight)
    }

    /// Gradient with respect to the input only; parameter gradients are left alone.
    pub fn backprop_input(&self, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        grad_out.matmul(&self.weight)
    }

    /// Forward pass that caches its input for a following [`backward`](Self::backward).
    pub fn forward(&mut self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let out = self.apply(x)?;
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    /// Consumes the cached input; calling it twice without a forward in between
    /// is a [`Error::StaleCache`].
    pub fn backward(&mut self, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        let input = self.cached_input.take().ok_or(Error::StaleCache)?;
        self.backprop(&input, grad_out)
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    pub fn cast<U: Scalar>(&self) -> LinearLayer<U> {
        LinearLayer::from_parts(self.weight.cast(), self.bias.cast()).expect("same shapes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(w: Vec<f32>, rows: usize, cols: usize, b: Vec<f32>) -> LinearLayer<f32> {
        LinearLayer::from_parts(
            Matrix::from_vec(rows, cols, w).unwrap(),
            Matrix::from_vec(rows, 1, b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_weights_pass_input_through() {
        let l = layer(vec![1.0, 0.0, 0.0, 1.0], 2, 2, vec![0.0, 0.0]);
        let x = Matrix::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(l.apply(&x).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn hand_computed_forward() {
        let l = layer(vec![1.0, 2.0, 3.0, 4.0], 2, 2, vec![1.0, 1.0]);
        let x = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(l.apply(&x).unwrap().data(), &[4.0, 8.0]);
    }

    #[test]
    fn zero_input_yields_bias_rows() {
        let l = layer(vec![0.3; 6], 3, 2, vec![7.0, -1.0, 0.5]);
        let x = Matrix::zeros(4, 2);
        let y = l.apply(&x).unwrap();
        for r in 0..4 {
            assert_eq!(y.row(r), &[7.0, -1.0, 0.5]);
        }
    }

    #[test]
    fn backward_without_forward_is_stale() {
        let mut l = layer(vec![1.0; 4], 2, 2, vec![0.0; 2]);
        let g = Matrix::zeros(1, 2);
        assert!(matches!(l.backward(&g), Err(Error::StaleCache)));
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        l.forward(&x).unwrap();
        l.backward(&g).unwrap();
        assert!(matches!(l.backward(&g), Err(Error::StaleCache)));
    }

    #[test]
    fn mse_weight_gradient_matches_closed_form() {
        // L = mean over B·out of (ŷ − y)²  ⇒  ∂L/∂W = 2/(B·out)·(ŷ − y)ᵀx
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = LinearLayer::<f64>::new(3, 2, &mut rng);
        let x = Matrix::from_vec(4, 3, (0..12).map(|v| v as f64 * 0.1 - 0.4).collect()).unwrap();
        let y = Matrix::from_vec(4, 2, (0..8).map(|v| (v as f64).cos()).collect()).unwrap();
        let pred = l.forward(&x).unwrap();
        let n = (pred.rows() * pred.cols()) as f64;
        let diff = pred.zip_map(&y, "diff", |a, b| a - b).unwrap();
        let grad = diff.map(|d| 2.0 * d / n);
        l.backward(&grad).unwrap();
        let mut expect = diff.transpose().matmul(&x).unwrap();
        expect.scale_in_place(2.0 / n);
        for (a, b) in l.grad_weight.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut l = LinearLayer::<f32>::new(4, 3, &mut rng);
        let x = Matrix::filled(2, 4, 0.7);
        l.forward(&x).unwrap();
        l.backward(&Matrix::zeros(2, 3)).unwrap();
        assert!(l.grad_weight.data().iter().all(|&g| g == 0.0));
        assert!(l.grad_bias.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = LinearLayer::<f32>::new(16, 8, &mut rng);
        let bound = (1.0f32 / 16.0).sqrt();
        assert!(l.weight.data().iter().all(|w| w.abs() <= bound));
        assert!(l.bias.data().iter().all(|&b| b == 0.0));
    }
}
