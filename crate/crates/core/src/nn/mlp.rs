use rand::Rng;

use super::activation::Activation;
use super::linear::LinearLayer;
use super::matrix::{Matrix, Scalar};
use crate::error::{Error, Result};

/// A trainable parameter tensor paired with its accumulated gradient.
pub struct ParamRef<'a, T: Scalar> {
    pub name: String,
    pub value: &'a mut Matrix<T>,
    pub grad: &'a Matrix<T>,
}

/// Anything that exposes its parameters in a fixed order.
pub trait Params<T: Scalar> {
    fn params_mut(&mut self) -> Vec<ParamRef<'_, T>>;
    fn zero_grad(&mut self);
}

/// Sequential stack of linear layers, each followed by its own activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T: Scalar = f32> {
    layers: Vec<LinearLayer<T>>,
    activations: Vec<Activation>,
}

/// Intermediate values of one forward pass, needed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Trace<T: Scalar> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
    output: Matrix<T>,
}

impl<T: Scalar> Trace<T> {
    pub fn output(&self) -> &Matrix<T> {
        &self.output
    }

    pub fn into_output(self) -> Matrix<T> {
        self.output
    }

    /// Pre-activations of every layer, in order.
    pub fn pre_activations(&self) -> &[Matrix<T>] {
        &self.pre
    }
}

impl<T: Scalar> Mlp<T> {
    /// `dims = [in, h1, ..., out]`, one activation per layer.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "mlp needs one activation per layer: {} dims, {} activations",
                dims.len(),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| LinearLayer::new(w[0], w[1], rng))
            .collect();
        Ok(Mlp {
            layers,
            activations: activations.to_vec(),
        })
    }

    pub fn from_layers(layers: Vec<LinearLayer<T>>, activations: Vec<Activation>) -> Result<Self> {
        if layers.is_empty() || layers.len() != activations.len() {
            return Err(Error::Config("mlp layer/activation count mismatch".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::Shape {
                    op: "mlp chain",
                    left: w[0].weight.shape(),
                    right: w[1].weight.shape(),
                });
            }
        }
        Ok(Mlp {
            layers,
            activations,
        })
    }

    pub fn layers(&self) -> &[LinearLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LinearLayer<T>] {
        &mut self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Inference-only forward pass.
    pub fn predict(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut h = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let z = layer.apply(&h)?;
            h = act.forward(&z);
        }
        Ok(h)
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Trace<T>> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let z = layer.apply(&h)?;
            let y = act.forward(&z);
            inputs.push(h);
            pre.push(z);
            h = y;
        }
        Ok(Trace {
            inputs,
            pre,
            output: h,
        })
    }

    fn check_trace(&self, trace: &Trace<T>, grad_out: &Matrix<T>) -> Result<()> {
        if trace.pre.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        if grad_out.shape() != trace.output.shape() {
            return Err(Error::Shape {
                op: "mlp_backward",
                left: grad_out.shape(),
                right: trace.output.shape(),
            });
        }
        Ok(())
    }

    /// Backpropagates `grad_out`, accumulating parameter gradients, and
    /// returns the gradient with respect to the network input.
    pub fn backward(&mut self, trace: &Trace<T>, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_trace(trace, grad_out)?;
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let y = if i + 1 < self.layers.len() {
                &trace.inputs[i + 1]
            } else {
                &trace.output
            };
            self.activations[i].backward_in_place(&trace.pre[i], y, &mut g);
            g = self.layers[i].backprop(&trace.inputs[i], &g)?;
        }
        Ok(g)
    }

    /// Like [`backward`](Self::backward) but leaves parameter gradients untouched.
    pub fn backward_input(&self, trace: &Trace<T>, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_trace(trace, grad_out)?;
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let y = if i + 1 < self.layers.len() {
                &trace.inputs[i + 1]
            } else {
                &trace.output
            };
            self.activations[i].backward_in_place(&trace.pre[i], y, &mut g);
            g = self.layers[i].backprop_input(&g)?;
        }
        Ok(g)
    }

    /// Smallest |pre-activation| feeding a ReLU over the rows of `x`;
    /// infinite when the network has no ReLU.
    pub fn relu_margin(&self, x: &Matrix<T>) -> Result<f64> {
        let trace = self.forward(x)?;
        Ok(trace
            .pre
            .iter()
            .zip(&self.activations)
            .filter(|(_, a)| **a == Activation::Relu)
            .flat_map(|(z, _)| z.data().iter().map(|v| v.as_f64().abs()))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.data().len())
            .sum()
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            layers: self.layers.iter().map(LinearLayer::cast).collect(),
            activations: self.activations.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.is_finite())
    }
}

impl<T: Scalar> Params<T> for Mlp<T> {
    fn params_mut(&mut self) -> Vec<ParamRef<'_, T>> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let LinearLayer {
                weight,
                bias,
                grad_weight,
                grad_bias,
                ..
            } = layer;
            out.push(ParamRef {
                name: format!("layer{i}.weight"),
                value: weight,
                grad: grad_weight,
            });
            out.push(ParamRef {
                name: format!("layer{i}.bias"),
                value: bias,
                grad: grad_bias,
            });
        }
        out
    }

    fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(LinearLayer::zero_grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn predict_matches_trace_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::<f32>::new(
            &[5, 4, 3],
            &[Activation::Relu, Activation::Tanh],
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_vec(2, 5, (0..10).map(|v| v as f32 * 0.1).collect()).unwrap();
        assert_eq!(net.predict(&x).unwrap(), *net.forward(&x).unwrap().output());
    }

    #[test]
    fn backward_input_matches_full_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::<f64>::new(
            &[3, 4, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_vec(2, 3, vec![0.2, -0.5, 1.0, 0.3, 0.1, -0.7]).unwrap();
        let t = net.forward(&x).unwrap();
        let g = Matrix::filled(2, 1, 1.0);
        let a = net.backward_input(&t, &g).unwrap();
        let b = net.backward(&t, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_bias_network_without_activation_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::<f32>::new(&[4, 3], &[Activation::Identity], &mut rng).unwrap();
        let x = Matrix::from_vec(1, 4, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let y = Matrix::from_vec(1, 4, vec![-0.3, 0.9, 0.1, 1.5]).unwrap();
        let (alpha, beta) = (1.7f32, -0.4f32);
        let combo = x.zip_map(&y, "combo", |a, b| alpha * a + beta * b).unwrap();
        let lhs = net.predict(&combo).unwrap();
        let fx = net.predict(&x).unwrap();
        let fy = net.predict(&y).unwrap();
        for i in 0..3 {
            let rhs = alpha * fx.data()[i] + beta * fy.data()[i];
            assert!((lhs.data()[i] - rhs).abs() < 1e-5);
        }
    }

    #[test]
    fn relu_margin_reports_closest_kink() {
        let l = LinearLayer::from_parts(
            Matrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap(),
            Matrix::from_vec(2, 1, vec![0.25, 0.0]).unwrap(),
        )
        .unwrap();
        let net = Mlp::<f64>::from_layers(vec![l], vec![Activation::Relu]).unwrap();
        let x = Matrix::from_vec(2, 1, vec![0.5, -0.1]).unwrap();
        assert!((net.relu_margin(&x).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn outputs_stay_finite_for_bounded_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = Mlp::<f32>::new(
            &[6, 8, 8, 6],
            &[Activation::Relu, Activation::Relu, Activation::Tanh],
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_vec(3, 6, (0..18).map(|v| (v as f32 - 9.0) * 111.0).collect()).unwrap();
        let t = net.forward(&x).unwrap();
        assert!(t.output().is_finite());
        let g = net.backward(&t, &Matrix::filled(3, 6, 1.0)).unwrap();
        assert!(g.is_finite());
    }
}
