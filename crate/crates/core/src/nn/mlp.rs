//! Multilayer perceptrons with explicit forward activations and reverse-mode
//! gradients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Matrix, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }
}

/// Affine map `x·W + b` followed by an activation. `weights` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn input_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_width(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients laid out exactly like the [`Mlp`] they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<DenseGrad>,
}

impl Mlp {
    /// Validates that consecutive layers chain and biases match their layer.
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.output_width() {
                return Err(Error::dim(
                    format!("layer {k} bias"),
                    layer.output_width(),
                    layer.bias.len(),
                ));
            }
            if let Some(next) = layers.get(k + 1) {
                if next.input_width() != layer.output_width() {
                    return Err(Error::dim(
                        format!("layer {} input", k + 1),
                        layer.output_width(),
                        next.input_width(),
                    ));
                }
            }
        }
        Ok(Mlp { layers })
    }

    /// Uniform `±sqrt(6/(fan_in+fan_out))` weights, zero biases. `widths`
    /// lists the input width followed by each layer's output width; the last
    /// layer uses `output`, all others `hidden`.
    pub fn init<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(widths, hidden, output, |fan_in, fan_out, data| {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in data {
                *w = rng.gen_range(-limit..=limit);
            }
        })
    }

    /// Same structure as [`Mlp::init`] with every parameter zero.
    pub fn zeros(widths: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        Self::build(widths, hidden, output, |_, _, _| {})
    }

    fn build(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        mut fill: impl FnMut(usize, usize, &mut [f64]),
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("an MLP needs an input and an output width".into()));
        }
        if let Some(k) = widths.iter().position(|&w| w == 0) {
            return Err(Error::Config(format!("MLP width {k} is zero")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let mut weights = Matrix::zeros(w[0], w[1]);
                fill(w[0], w[1], weights.as_mut_slice());
                Dense {
                    weights,
                    bias: vec![0.0; w[1]],
                    activation: if k == last { output } else { hidden },
                }
            })
            .collect();
        Mlp::new(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    /// Returns `[input, a_1, …, a_L]`; the last entry is the network output.
    pub fn forward(&self, input: &Matrix) -> Result<Vec<Matrix>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for (k, layer) in self.layers.iter().enumerate() {
            let x = &acts[k];
            if x.cols() != layer.input_width() {
                return Err(Error::dim(format!("layer {k} input"), layer.input_width(), x.cols()));
            }
            let mut z = x.matmul(&layer.weights)?;
            z.add_row_vector(&layer.bias)?;
            let act = layer.activation;
            if act != Activation::Identity {
                z.map_inplace(|v| act.apply(v));
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Output only.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        let mut acts = self.forward(input)?;
        Ok(acts.pop().expect("forward yields at least one activation"))
    }

    pub fn backward(&self, activations: &[Matrix], grad_output: &Matrix) -> Result<MlpGrads> {
        self.backward_impl(activations, grad_output, false).map(|(g, _)| g)
    }

    /// Like [`Mlp::backward`], also returning `∂L/∂input`.
    pub fn backward_with_input_grad(
        &self,
        activations: &[Matrix],
        grad_output: &Matrix,
    ) -> Result<(MlpGrads, Matrix)> {
        self.backward_impl(activations, grad_output, true)
            .map(|(g, dx)| (g, dx.expect("input gradient requested")))
    }

    fn backward_impl(
        &self,
        activations: &[Matrix],
        grad_output: &Matrix,
        want_input_grad: bool,
    ) -> Result<(MlpGrads, Option<Matrix>)> {
        if activations.len() != self.layers.len() + 1 {
            return Err(Error::Protocol(format!(
                "expected {} activations for a {}-layer MLP, got {}",
                self.layers.len() + 1,
                self.layers.len(),
                activations.len()
            )));
        }
        let out = &activations[self.layers.len()];
        if grad_output.rows() != out.rows() || grad_output.cols() != out.cols() {
            return Err(Error::dim("output gradient", out.cols(), grad_output.cols()));
        }
        let mut grads: Vec<DenseGrad> = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.clone();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if layer.activation == Activation::Relu {
                let post = &activations[k + 1];
                for (d, &a) in delta.as_mut_slice().iter_mut().zip(post.as_slice()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &activations[k];
            let dw = input.t_matmul(&delta)?;
            let db = delta.column_sums();
            if k > 0 || want_input_grad {
                delta = delta.matmul_t(&layer.weights)?;
            }
            grads.push(DenseGrad {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        let input_grad = if want_input_grad { Some(delta) } else { None };
        Ok((MlpGrads { layers: grads }, input_grad))
    }
}

impl MlpGrads {
    /// Zero gradients shaped like `mlp`.
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp
                .layers()
                .iter()
                .map(|l| DenseGrad {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }
}

impl ParamSet for Mlp {
    fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl ParamSet for MlpGrads {
    fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_diff_check, Coordinates};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weights: Matrix, activation: Activation) -> Mlp {
        let out = weights.cols();
        Mlp::new(vec![Dense {
            weights,
            bias: vec![0.0; out],
            activation,
        }])
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = single(Matrix::identity(2), Activation::Identity);
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn relu_layer_clamps_negatives() {
        let net = single(Matrix::identity(2), Activation::Relu);
        let x = Matrix::from_rows(&[[-3.0, 4.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap().as_slice(), &[0.0, 4.0]);
    }

    #[test]
    fn forward_matches_straight_line_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::init(&[4, 5, 3, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.3, -1.2, 0.7, 2.0], [1.0, 0.5, -0.5, 0.0]]).unwrap();
        let got = net.predict(&x).unwrap();

        for b in 0..2 {
            let mut h: Vec<f64> = x.row(b).to_vec();
            for layer in net.layers() {
                let mut next = Vec::new();
                for j in 0..layer.output_width() {
                    let mut z = layer.bias[j];
                    for (i, hi) in h.iter().enumerate() {
                        z += hi * layer.weights.get(i, j);
                    }
                    if layer.activation == Activation::Relu && z < 0.0 {
                        z = 0.0;
                    }
                    next.push(z);
                }
                h = next;
            }
            for (j, want) in h.iter().enumerate() {
                assert!((got.get(b, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = single(Matrix::identity(2), Activation::Identity);
        let x = Matrix::zeros(1, 3);
        assert!(matches!(
            net.forward(&x),
            Err(Error::Dimension { ref context, .. }) if context.contains("layer 0")
        ));
    }

    #[test]
    fn linear_layer_gradient_is_input_transpose() {
        let w = Matrix::from_rows(&[[0.5], [-1.5], [2.0]]).unwrap();
        let net = single(w, Activation::Identity);
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let acts = net.forward(&x).unwrap();
        let g = net.backward(&acts, &Matrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        assert_eq!(g.layers[0].weights.as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::init(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[1.0, -1.0, 0.5]]).unwrap();
        let acts = net.forward(&x).unwrap();
        let g = net.backward(&acts, &Matrix::zeros(1, 2)).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_rejects_wrong_activation_count() {
        let net = single(Matrix::identity(2), Activation::Identity);
        let x = Matrix::zeros(1, 2);
        let acts = net.forward(&x).unwrap();
        assert!(matches!(
            net.backward(&acts[..1], &Matrix::zeros(1, 2)),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = Mlp::init(&[3, 6, 5, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.2, -0.4, 1.1], [-0.9, 0.3, 0.8], [0.5, 0.5, -0.5]]).unwrap();
        // L = 0.5·Σ out² so ∂L/∂out = out.
        let loss = |p: &Mlp| -> Result<f64> {
            let y = p.predict(&x)?;
            Ok(0.5 * y.as_slice().iter().map(|v| v * v).sum::<f64>())
        };
        let acts = net.forward(&x).unwrap();
        let grads = net.backward(&acts, acts.last().unwrap()).unwrap();
        let err = finite_diff_check(loss, &net, &grads, 1e-6, Coordinates::All).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn input_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::init(&[2, 4, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.7, -0.2]]).unwrap();
        let acts = net.forward(&x).unwrap();
        let (_, dx) = net
            .backward_with_input_grad(&acts, &Matrix::from_rows(&[[1.0]]).unwrap())
            .unwrap();
        for i in 0..2 {
            let h = 1e-6;
            let mut xp = x.clone();
            xp.set(0, i, x.get(0, i) + h);
            let mut xm = x.clone();
            xm.set(0, i, x.get(0, i) - h);
            let cd = (net.predict(&xp).unwrap().get(0, 0) - net.predict(&xm).unwrap().get(0, 0))
                / (2.0 * h);
            assert!((cd - dx.get(0, i)).abs() < 1e-8);
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::init(&[8, 6], Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = Mlp::init(&[8, 6], Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let limit = libm::sqrt(6.0 / 14.0);
        assert!(a.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
        assert!(a.layers()[0].bias.iter().all(|&b| b == 0.0));
    }
}
