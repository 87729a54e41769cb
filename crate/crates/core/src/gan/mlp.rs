//! Fully-connected networks with explicit forward traces and backprop.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::GanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    /// `tanh` followed by `(t + 1) / 2`, mapping onto `[0, 1]`.
    TanhUnit,
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::TanhUnit => "tanh_unit",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [Activation::Identity, Activation::Relu, Activation::TanhUnit, Activation::Sigmoid]
            .into_iter()
            .find(|a| a.tag() == tag)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::TanhUnit => (x.tanh() + 1.0) / 2.0,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative with respect to the pre-activation.
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::TanhUnit => {
                let t = x.tanh();
                (1.0 - t * t) / 2.0
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn pre_activation(&self, input: &Array2<f64>) -> Array2<f64> {
        input.dot(&self.weights.t()) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Dense>,
}

/// Gradients laid out like the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

/// Intermediate values from a forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    /// Pre-activation of the last layer (logits for a sigmoid head).
    pub fn last_pre(&self) -> &Array2<f64> {
        self.pre.last().expect("at least one layer")
    }
}

impl MlpParams {
    pub fn new(layers: Vec<Dense>) -> Result<Self, GanError> {
        if layers.is_empty() {
            return Err(GanError::Config("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(GanError::Config(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() || l.inputs() == 0 || l.outputs() == 0 {
                return Err(GanError::Config(format!("layer {i} has inconsistent shapes")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(GanError::Config(format!("layer {i} holds non-finite parameters")));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Uniform ±1/√fan_in weights, zero biases. `dims` lists every layer
    /// width from input to output; hidden layers use ReLU.
    pub fn init(dims: &[usize], output: Activation, rng: &mut impl Rng) -> Result<Self, GanError> {
        Self::build(dims, output, |fan_in| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            rng.random_range(-bound..=bound)
        })
    }

    pub fn zeros(dims: &[usize], output: Activation) -> Result<Self, GanError> {
        Self::build(dims, output, |_| 0.0)
    }

    fn build(dims: &[usize], output: Activation, mut weight: impl FnMut(usize) -> f64) -> Result<Self, GanError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(GanError::Config(format!("invalid layer widths {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense {
                weights: Array2::from_shape_simple_fn((w[1], w[0]), || weight(w[0])),
                bias: Array1::zeros(w[1]),
                activation: if i == last { output } else { Activation::Relu },
            })
            .collect();
        MlpParams::new(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().expect("non-empty").activation
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), GanError> {
        if x.ncols() != self.input_dim() {
            return Err(GanError::Dimension { expected: self.input_dim(), found: x.ncols() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>, GanError> {
        self.check_input(x)?;
        let mut act = x.clone();
        for l in &self.layers {
            act = l.pre_activation(&act).mapv_into(|v| l.activation.apply(v));
        }
        Ok(act)
    }

    pub fn forward_trace(&self, x: &Array2<f64>) -> Result<ForwardTrace, GanError> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.clone();
        for l in &self.layers {
            let z = l.pre_activation(&act);
            let next = z.mapv(|v| l.activation.apply(v));
            inputs.push(act);
            pre.push(z);
            act = next;
        }
        Ok(ForwardTrace { inputs, pre, output: act })
    }

    /// Backpropagates `delta`, the loss gradient with respect to the last
    /// layer's pre-activation, returning parameter gradients and the
    /// gradient with respect to the network input.
    pub fn backward_from_pre(&self, trace: &ForwardTrace, delta: Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = delta;
        for (i, l) in self.layers.iter().enumerate().rev() {
            let dw = delta.t().dot(&trace.inputs[i]);
            let db = delta.sum_axis(Axis(0));
            let d_input = delta.dot(&l.weights);
            grads.push((dw, db));
            delta = if i > 0 {
                let prev = &self.layers[i - 1];
                let mut d = d_input;
                d.zip_mut_with(&trace.pre[i - 1], |g, &z| *g *= prev.activation.derivative(z));
                d
            } else {
                d_input
            };
        }
        grads.reverse();
        (MlpGrads { layers: grads }, delta)
    }

    /// Like [`Self::backward_from_pre`] but starting from the gradient with
    /// respect to the network output.
    pub fn backward_from_output(&self, trace: &ForwardTrace, d_output: Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let act = self.output_activation();
        let mut delta = d_output;
        delta.zip_mut_with(trace.last_pre(), |g, &z| *g *= act.derivative(z));
        self.backward_from_pre(trace, delta)
    }

    pub fn sgd_step(&mut self, grads: &MlpGrads, learning_rate: f64) {
        for (l, (dw, db)) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.scaled_add(-learning_rate, dw);
            l.bias.scaled_add(-learning_rate, db);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn locate(&self, mut index: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if index < l.weights.len() {
                return (li, Some((index / l.inputs(), index % l.inputs())), 0);
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return (li, None, index);
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter access: per layer, weights row-major then biases.
    pub fn param(&self, index: usize) -> f64 {
        match self.locate(index) {
            (li, Some(rc), _) => self.layers[li].weights[rc],
            (li, None, b) => self.layers[li].bias[b],
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        match self.locate(index) {
            (li, Some(rc), _) => self.layers[li].weights[rc] = value,
            (li, None, b) => self.layers[li].bias[b] = value,
        }
    }
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            layers: params
                .layers()
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }

    /// Same flat ordering as [`MlpParams::param`].
    pub fn get(&self, mut index: usize) -> f64 {
        for (w, b) in &self.layers {
            if index < w.len() {
                return w.as_slice().expect("standard layout")[index];
            }
            index -= w.len();
            if index < b.len() {
                return b[index];
            }
            index -= b.len();
        }
        panic!("gradient index out of range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn activations() {
        assert_eq!(Activation::TanhUnit.apply(0.0), 0.5);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert!((sigmoid(3.0) - 0.952_574_126_822_433_4).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        for tag in ["identity", "relu", "tanh_unit", "sigmoid"] {
            assert_eq!(Activation::from_tag(tag).unwrap().tag(), tag);
        }
    }

    #[test]
    fn shape_checks() {
        assert!(MlpParams::zeros(&[3], Activation::Sigmoid).is_err());
        assert!(MlpParams::zeros(&[3, 0, 1], Activation::Sigmoid).is_err());
        let p = MlpParams::zeros(&[3, 4, 1], Activation::Sigmoid).unwrap();
        assert_eq!(p.num_params(), 3 * 4 + 4 + 4 + 1);
        let err = p.forward(&Array2::zeros((2, 5))).unwrap_err();
        assert_eq!(err, GanError::Dimension { expected: 3, found: 5 });
        let bad = vec![
            Dense { weights: Array2::zeros((4, 3)), bias: Array1::zeros(4), activation: Activation::Relu },
            Dense { weights: Array2::zeros((1, 5)), bias: Array1::zeros(1), activation: Activation::Sigmoid },
        ];
        assert!(MlpParams::new(bad).is_err());
    }

    #[test]
    fn flat_indexing_matches_layout() {
        let mut rng = crate::rng::seeded(1);
        let mut p = MlpParams::init(&[2, 3, 1], Activation::Sigmoid, &mut rng).unwrap();
        assert_eq!(p.param(1), p.layers()[0].weights[[0, 1]]);
        assert_eq!(p.param(6), p.layers()[0].bias[0]);
        assert_eq!(p.param(9), p.layers()[1].weights[[0, 0]]);
        p.set_param(12, 7.0);
        assert_eq!(p.layers()[1].bias[0], 7.0);
        let g = MlpGrads::zeros_like(&p);
        assert_eq!(g.get(12), 0.0);
    }

    #[test]
    fn init_bounds_and_zero_bias() {
        let mut rng = crate::rng::seeded(3);
        let p = MlpParams::init(&[16, 8, 2], Activation::TanhUnit, &mut rng).unwrap();
        assert!(p.layers()[0].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(p.layers()[1].weights.iter().all(|w| w.abs() <= 1.0 / 8f64.sqrt()));
        assert!(p.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn single_layer_evaluation() {
        let layer = Dense { weights: array![[1.0, 0.0]], bias: array![0.0], activation: Activation::Sigmoid };
        let p = MlpParams::new(vec![layer]).unwrap();
        let out = p.forward(&array![[3.0, 5.0]]).unwrap();
        assert!((out[[0, 0]] - 0.952_574_126_822_433_4).abs() < 1e-12);
    }
}
