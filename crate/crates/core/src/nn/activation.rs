use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Scalar};

/// Elementwise non-linearity applied after a linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> u32 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            _ => return None,
        })
    }

    #[inline]
    pub fn apply_scalar<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x < T::zero() {
                    T::zero()
                } else {
                    x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => {
                // Split on sign so exp never overflows.
                if x >= T::zero() {
                    T::one() / (T::one() + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (T::one() + e)
                }
            }
        }
    }

    pub fn forward<T: Scalar>(self, x: &Matrix<T>) -> Matrix<T> {
        match self {
            Activation::Identity => x.clone(),
            _ => x.map(|v| self.apply_scalar(v)),
        }
    }

    /// Derivative of the activation expressed through the pre-activation `z`
    /// and the activation output `y`, multiplied into `grad`.
    pub fn backward_in_place<T: Scalar>(self, z: &Matrix<T>, y: &Matrix<T>, grad: &mut Matrix<T>) {
        let g = grad.data_mut();
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (gv, &zv) in g.iter_mut().zip(z.data()) {
                    if zv <= T::zero() {
                        *gv = T::zero();
                    }
                }
            }
            Activation::Tanh => {
                for (gv, &yv) in g.iter_mut().zip(y.data()) {
                    *gv = *gv * (T::one() - yv * yv);
                }
            }
            Activation::Sigmoid => {
                for (gv, &yv) in g.iter_mut().zip(y.data()) {
                    *gv = *gv * yv * (T::one() - yv);
                }
            }
        }
    }
}
