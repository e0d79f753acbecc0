//! A small convolutional regressor with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`; each layer owns a contiguous
//! slice laid out as weights followed by biases. Convolution weights are
//! `[out][in][ky][kx]`, dense weights `[out][in]`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::state::{NetState, STATE_CHANNELS, STATE_SIDE};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    /// Valid (unpadded) 2-D convolution over square inputs.
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        in_size: usize,
    },
    Dense { inputs: usize, outputs: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub layer: Layer,
    pub relu: bool,
}

impl Layer {
    pub fn out_size(&self) -> usize {
        match *self {
            Layer::Conv {
                kernel,
                stride,
                in_size,
                ..
            } => (in_size - kernel) / stride + 1,
            Layer::Dense { .. } => 1,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            Layer::Conv {
                in_channels,
                in_size,
                ..
            } => in_channels * in_size * in_size,
            Layer::Dense { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            Layer::Conv { out_channels, .. } => out_channels * self.out_size() * self.out_size(),
            Layer::Dense { outputs, .. } => outputs,
        }
    }

    pub fn weight_count(&self) -> usize {
        match *self {
            Layer::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel * kernel,
            Layer::Dense { inputs, outputs } => inputs * outputs,
        }
    }

    pub fn bias_count(&self) -> usize {
        match *self {
            Layer::Conv { out_channels, .. } => out_channels,
            Layer::Dense { outputs, .. } => outputs,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    fn fan_in(&self) -> usize {
        match *self {
            Layer::Conv {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel * kernel,
            Layer::Dense { inputs, .. } => inputs,
        }
    }

    /// Unrolls a conv input into `[in][ky][kx]` rows of `out_size²` patch values.
    fn im2col(&self, input: &[f64]) -> Vec<f64> {
        let Layer::Conv {
            in_channels,
            kernel,
            stride,
            in_size,
            ..
        } = *self
        else {
            unreachable!("im2col on a dense layer")
        };
        let os = self.out_size();
        let patches = os * os;
        let mut cols = vec![0.0; in_channels * kernel * kernel * patches];
        let mut row = cols.chunks_exact_mut(patches);
        for i in 0..in_channels {
            for ky in 0..kernel {
                for kx in 0..kernel {
                    let dst = row.next().unwrap();
                    for y in 0..os {
                        let src = i * in_size * in_size + (y * stride + ky) * in_size + kx;
                        for x in 0..os {
                            dst[y * os + x] = input[src + x * stride];
                        }
                    }
                }
            }
        }
        cols
    }

    fn forward(&self, p: &[f64], input: &[f64], out: &mut [f64]) {
        let (w, b) = p.split_at(self.weight_count());
        match *self {
            Layer::Conv { out_channels, .. } => {
                let cols = self.im2col(input);
                let patches = self.out_size() * self.out_size();
                let k_len = self.fan_in();
                for o in 0..out_channels {
                    let dst = &mut out[o * patches..(o + 1) * patches];
                    dst.fill(b[o]);
                    for (k, col) in cols.chunks_exact(patches).enumerate() {
                        axpy(w[o * k_len + k], col, dst);
                    }
                }
            }
            Layer::Dense { inputs, outputs } => {
                for o in 0..outputs {
                    out[o] = b[o] + dot(&w[o * inputs..(o + 1) * inputs], input);
                }
            }
        }
    }

    /// Accumulates parameter gradients into `grad` and, when `din` is given,
    /// writes the gradient with respect to the input.
    fn backward(&self, p: &[f64], input: &[f64], dout: &[f64], grad: &mut [f64], din: Option<&mut [f64]>) {
        let wc = self.weight_count();
        let w = &p[..wc];
        let (gw, gb) = grad.split_at_mut(wc);
        match *self {
            Layer::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                in_size,
            } => {
                let os = self.out_size();
                let patches = os * os;
                let k_len = self.fan_in();
                let cols = self.im2col(input);
                let mut dcols = din.is_some().then(|| vec![0.0; cols.len()]);
                for o in 0..out_channels {
                    let g = &dout[o * patches..(o + 1) * patches];
                    if g.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    gb[o] += g.iter().sum::<f64>();
                    for (k, col) in cols.chunks_exact(patches).enumerate() {
                        gw[o * k_len + k] += dot(g, col);
                    }
                    if let Some(dc) = dcols.as_mut() {
                        for (k, dcol) in dc.chunks_exact_mut(patches).enumerate() {
                            axpy(w[o * k_len + k], g, dcol);
                        }
                    }
                }
                if let (Some(d), Some(dc)) = (din, dcols) {
                    d.fill(0.0);
                    let mut rows = dc.chunks_exact(patches);
                    for i in 0..in_channels {
                        for ky in 0..kernel {
                            for kx in 0..kernel {
                                let src = rows.next().unwrap();
                                for y in 0..os {
                                    let base = i * in_size * in_size + (y * stride + ky) * in_size + kx;
                                    for x in 0..os {
                                        d[base + x * stride] += src[y * os + x];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Layer::Dense { inputs, outputs } => {
                let mut din = din;
                if let Some(d) = din.as_deref_mut() {
                    d.fill(0.0);
                }
                for o in 0..outputs {
                    let g = dout[o];
                    if g == 0.0 {
                        continue;
                    }
                    gb[o] += g;
                    let row = o * inputs;
                    axpy(g, input, &mut gw[row..row + inputs]);
                    if let Some(d) = din.as_deref_mut() {
                        axpy(g, &w[row..row + inputs], d);
                    }
                }
            }
        }
    }
}

/// `y += a·x`.
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Dot product with four running sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// conv 8@5×5/2 → conv 16@3×3/2 → conv 32@3×3/2 → dense 64 → dense 1, ReLU
/// after every layer but the last.
pub fn value_net_layers() -> Vec<LayerSpec> {
    let conv1 = Layer::Conv {
        in_channels: STATE_CHANNELS,
        out_channels: 8,
        kernel: 5,
        stride: 2,
        in_size: STATE_SIDE,
    };
    let conv2 = Layer::Conv {
        in_channels: 8,
        out_channels: 16,
        kernel: 3,
        stride: 2,
        in_size: conv1.out_size(),
    };
    let conv3 = Layer::Conv {
        in_channels: 16,
        out_channels: 32,
        kernel: 3,
        stride: 2,
        in_size: conv2.out_size(),
    };
    let dense1 = Layer::Dense {
        inputs: conv3.output_len(),
        outputs: 64,
    };
    let dense2 = Layer::Dense {
        inputs: 64,
        outputs: 1,
    };
    [conv1, conv2, conv3, dense1, dense2]
        .into_iter()
        .enumerate()
        .map(|(i, layer)| LayerSpec { layer, relu: i < 4 })
        .collect()
}

/// Network parameters plus the layer manifest they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
    /// Network outputs are multiplied by this to give a future return in cells.
    label_scale: f64,
}

impl ModelWeights {
    pub fn new(layers: Vec<LayerSpec>, params: Vec<f64>, label_scale: f64) -> Result<Self> {
        check_layer_chain(&layers)?;
        let expected: usize = layers.iter().map(|l| l.layer.param_count()).sum();
        if params.len() != expected {
            return Err(Error::Contract(format!(
                "manifest needs {expected} parameters, got {}",
                params.len()
            )));
        }
        if let Some(bad) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("parameter {bad}")));
        }
        if !(label_scale.is_finite() && label_scale > 0.0) {
            return Err(Error::Config(format!("label scale {label_scale} must be positive")));
        }
        Ok(Self {
            layers,
            params,
            label_scale,
        })
    }

    pub fn zeros(layers: Vec<LayerSpec>, label_scale: f64) -> Result<Self> {
        let n = layers.iter().map(|l| l.layer.param_count()).sum();
        Self::new(layers, vec![0.0; n], label_scale)
    }

    /// He-uniform weights, zero biases.
    pub fn init(layers: Vec<LayerSpec>, label_scale: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut params = Vec::new();
        for spec in &layers {
            let bound = (6.0 / spec.layer.fan_in() as f64).sqrt();
            params.extend((0..spec.layer.weight_count()).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, spec.layer.bias_count()));
        }
        Self::new(layers, params, label_scale)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn label_scale(&self) -> f64 {
        self.label_scale
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].layer.input_len()
    }

    /// `[start, end)` of each layer's parameter slice.
    pub fn layer_ranges(&self) -> Vec<(usize, usize)> {
        let mut at = 0;
        self.layers
            .iter()
            .map(|l| {
                let r = (at, at + l.layer.param_count());
                at = r.1;
                r
            })
            .collect()
    }

    /// Runs the network and returns every layer's post-activation output;
    /// the last entry holds the scalar output.
    pub fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for (i, spec) in self.layers.iter().enumerate() {
            let n = spec.layer.param_count();
            let mut out = vec![0.0; spec.layer.output_len()];
            let x = if i == 0 { input } else { acts[i - 1].as_slice() };
            spec.layer.forward(&self.params[offset..offset + n], x, &mut out);
            if spec.relu {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
            offset += n;
        }
        acts
    }

    /// Raw (normalized-scale) network output.
    pub fn output(&self, input: &[f64]) -> f64 {
        self.activations(input).last().expect("network has layers")[0]
    }

    /// Adds `d_output · ∂output/∂θ` to `grad` for the forward pass in `acts`.
    pub fn backward(&self, input: &[f64], acts: &[Vec<f64>], d_output: f64, grad: &mut [f64]) {
        let ranges = self.layer_ranges();
        let mut dout = vec![d_output];
        for i in (0..self.layers.len()).rev() {
            let spec = &self.layers[i];
            if spec.relu {
                for (d, a) in dout.iter_mut().zip(&acts[i]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let (lo, hi) = ranges[i];
            let x = if i == 0 { input } else { &acts[i - 1] };
            if i == 0 {
                spec.layer.backward(&self.params[lo..hi], x, &dout, &mut grad[lo..hi], None);
            } else {
                let mut din = vec![0.0; spec.layer.input_len()];
                spec.layer.backward(&self.params[lo..hi], x, &dout, &mut grad[lo..hi], Some(&mut din));
                dout = din;
            }
        }
    }

    /// Rounds every parameter to the nearest `f32`, the precision of the
    /// weights file.
    pub fn quantize_f32(&mut self) {
        self.params.iter_mut().for_each(|p| *p = *p as f32 as f64);
    }
}

fn check_layer_chain(layers: &[LayerSpec]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for pair in layers.windows(2) {
        if pair[0].layer.output_len() != pair[1].layer.input_len() {
            return Err(Error::Config(format!(
                "layer output {} does not feed input {}",
                pair[0].layer.output_len(),
                pair[1].layer.input_len()
            )));
        }
    }
    if layers.last().unwrap().layer.output_len() != 1 {
        return Err(Error::Config("network must end in a single output".into()));
    }
    Ok(())
}

pub fn state_to_input(state: &NetState) -> Vec<f64> {
    state.as_slice().iter().map(|&v| v as f64).collect()
}

/// Predicted future return for `state`, in cells.
pub fn forward(weights: &ModelWeights, state: &NetState) -> Result<f64> {
    if state.as_slice().len() != weights.input_len() {
        return Err(Error::Contract(format!(
            "state has {} values, network expects {}",
            state.as_slice().len(),
            weights.input_len()
        )));
    }
    let y = weights.output(&state_to_input(state)) * weights.label_scale();
    if !y.is_finite() {
        return Err(Error::Numeric("network output".into()));
    }
    Ok(y)
}
