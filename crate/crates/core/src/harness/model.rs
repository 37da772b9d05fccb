//! A minimal fully-convolutional model with hand-derived gradients:
//! four 3×3 convolutions (3→16→16→16→C) with rectified-linear units
//! between them, reflect padding, no downsampling. Parameters and all
//! accumulations are f64.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{LogitMap, Tensor};
use crate::stats::reflect_index;

const KERNEL: usize = 3;

/// One 3×3 convolution layer; weights are `[out][in][ky][kx]` flattened.
#[derive(Debug, Clone)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    fn init(in_channels: usize, out_channels: usize, rng: &mut ChaCha8Rng) -> Self {
        // uniform scaled by fan-in
        let fan_in = (in_channels * KERNEL * KERNEL) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let weights = (0..out_channels * in_channels * KERNEL * KERNEL)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        let bias = (0..out_channels).map(|_| rng.random_range(-bound..bound)).collect();
        ConvLayer {
            in_channels,
            out_channels,
            weights,
            bias,
        }
    }

    #[inline]
    fn weight_index(&self, out_c: usize, in_c: usize, ky: usize, kx: usize) -> usize {
        ((out_c * self.in_channels + in_c) * KERNEL + ky) * KERNEL + kx
    }
}

/// Gradients with the same shapes as the layer parameters.
#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub layers: Vec<LayerGradients>,
}

/// Cached per-layer inputs and pre-activations from a forward pass.
pub struct ForwardCache {
    /// inputs[l] is the input tensor of layer l (inputs[0] is the image)
    inputs: Vec<Tensor>,
    /// pre-activation outputs of every layer
    pre_activations: Vec<Tensor>,
}

impl ForwardCache {
    /// Sign pattern of every rectified pre-activation. Finite-difference
    /// probes compare patterns at θ±ε: a flip means the probe straddles a
    /// rectifier kink and the central difference is not a valid oracle
    /// there.
    pub fn relu_signs(&self) -> Vec<bool> {
        let n = self.pre_activations.len();
        let mut signs = Vec::new();
        for z in &self.pre_activations[..n.saturating_sub(1)] {
            signs.extend(z.as_slice().iter().map(|&v| v > 0.0));
        }
        signs
    }
}

#[derive(Debug, Clone)]
pub struct TinyFcn {
    pub layers: Vec<ConvLayer>,
    pub class_count: usize,
}

/// Copy a plane into a (h+2)×(w+2) buffer with symmetric reflection.
fn pad_plane(src: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let pw = w + 2;
    for pr in 0..h + 2 {
        let sr = reflect_index(pr as isize - 1, h);
        let src_row = &src[sr * w..(sr + 1) * w];
        let dst_row = &mut out[pr * pw..(pr + 1) * pw];
        dst_row[0] = src_row[reflect_index(-1, w)];
        dst_row[1..=w].copy_from_slice(src_row);
        dst_row[w + 1] = src_row[reflect_index(w as isize, w)];
    }
}

/// Adjoint of `pad_plane`: fold a padded gradient buffer back onto the
/// un-padded plane.
fn unpad_fold(padded: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let pw = w + 2;
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for pr in 0..h + 2 {
        let sr = reflect_index(pr as isize - 1, h);
        for pc in 0..pw {
            let sc = reflect_index(pc as isize - 1, w);
            out[sr * w + sc] += padded[pr * pw + pc];
        }
    }
}

impl TinyFcn {
    /// Seeded construction with the standard widths 3→16→16→16→C.
    pub fn new(class_count: usize, seed: u64) -> Result<Self> {
        Self::with_widths(class_count, &[3, 16, 16, 16], seed)
    }

    pub fn with_widths(class_count: usize, widths: &[usize], seed: u64) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::InvalidArgument("class_count must be >= 1".into()));
        }
        if widths.is_empty() {
            return Err(Error::InvalidArgument("at least one layer required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for i in 0..widths.len() {
            let in_c = widths[i];
            let out_c = if i + 1 < widths.len() { widths[i + 1] } else { class_count };
            layers.push(ConvLayer::init(in_c, out_c, &mut rng));
        }
        Ok(TinyFcn {
            layers,
            class_count,
        })
    }

    pub fn from_layers(layers: Vec<ConvLayer>) -> Result<Self> {
        let class_count = layers
            .last()
            .ok_or_else(|| Error::InvalidArgument("no layers".into()))?
            .out_channels;
        Ok(TinyFcn {
            layers,
            class_count,
        })
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    fn conv_forward(&self, layer: &ConvLayer, input: &Tensor) -> Tensor {
        let (h, w) = (input.height(), input.width());
        let pw = w + 2;
        let mut out = Tensor::zeros(h, w, layer.out_channels);
        let mut padded = vec![0.0f64; (h + 2) * pw];
        for in_c in 0..layer.in_channels {
            pad_plane(input.plane_slice(in_c), h, w, &mut padded);
            for out_c in 0..layer.out_channels {
                let dst = out.plane_slice_mut(out_c);
                for ky in 0..KERNEL {
                    for kx in 0..KERNEL {
                        let wv = layer.weights[layer.weight_index(out_c, in_c, ky, kx)];
                        for r in 0..h {
                            let src = &padded[(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                            let dst_row = &mut dst[r * w..(r + 1) * w];
                            for c in 0..w {
                                dst_row[c] += wv * src[c];
                            }
                        }
                    }
                }
            }
        }
        for out_c in 0..layer.out_channels {
            let b = layer.bias[out_c];
            for v in out.plane_slice_mut(out_c) {
                *v += b;
            }
        }
        out
    }

    /// Forward pass; the cache holds everything backward needs.
    pub fn forward(&self, image: &Tensor) -> Result<(LogitMap, ForwardCache)> {
        if image.channels() != self.input_channels() {
            return Err(Error::shape(
                "TinyFcn::forward",
                format!("{} input channels", self.input_channels()),
                image.shape_string(),
            ));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = image.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(current.clone());
            let z = self.conv_forward(layer, &current);
            pre_activations.push(z.clone());
            current = if i + 1 < self.layers.len() {
                let mut a = z;
                for v in a.as_mut_slice() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                a
            } else {
                z
            };
        }
        let logits = LogitMap::new(current)?;
        Ok((logits, ForwardCache {
            inputs,
            pre_activations,
        }))
    }

    /// Backward pass from the loss gradient w.r.t. the logits.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Tensor) -> Result<ModelGradients> {
        let mut grads: Vec<LayerGradients> = self
            .layers
            .iter()
            .map(|l| LayerGradients {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();

        let mut delta = grad_logits.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // non-last layers: gradient through the rectifier
            if l + 1 < self.layers.len() {
                let z = &cache.pre_activations[l];
                for (d, &zv) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &cache.inputs[l];
            let (h, w) = (input.height(), input.width());
            let pw = w + 2;
            let g = &mut grads[l];

            // bias gradient
            for out_c in 0..layer.out_channels {
                g.bias[out_c] = delta.plane_slice(out_c).iter().sum();
            }

            // weight gradient and input gradient
            let mut padded = vec![0.0f64; (h + 2) * pw];
            let mut grad_padded = vec![0.0f64; (h + 2) * pw];
            let mut grad_input = Tensor::zeros(h, w, layer.in_channels);
            for in_c in 0..layer.in_channels {
                pad_plane(input.plane_slice(in_c), h, w, &mut padded);
                grad_padded.fill(0.0);
                for out_c in 0..layer.out_channels {
                    let dplane = delta.plane_slice(out_c);
                    for ky in 0..KERNEL {
                        for kx in 0..KERNEL {
                            let mut acc = 0.0;
                            let wv = layer.weights[layer.weight_index(out_c, in_c, ky, kx)];
                            for r in 0..h {
                                let src = &padded[(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                                let drow = &dplane[r * w..(r + 1) * w];
                                let gp = &mut grad_padded
                                    [(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                                for c in 0..w {
                                    acc += drow[c] * src[c];
                                    gp[c] += wv * drow[c];
                                }
                            }
                            g.weights[layer.weight_index(out_c, in_c, ky, kx)] += acc;
                        }
                    }
                }
                unpad_fold(&grad_padded, h, w, grad_input.plane_slice_mut(in_c));
            }
            if l > 0 {
                delta = grad_input;
            }
        }
        Ok(ModelGradients { layers: grads })
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat read access for finite-difference probes and checkpoints.
    pub fn parameter(&self, index: usize) -> f64 {
        let mut i = index;
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                return layer.bias[i];
            }
            i -= layer.bias.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn set_parameter(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                layer.weights[i] = value;
                return;
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                layer.bias[i] = value;
                return;
            }
            i -= layer.bias.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn gradient_at(grads: &ModelGradients, index: usize) -> f64 {
        let mut i = index;
        for layer in &grads.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                return layer.bias[i];
            }
            i -= layer.bias.len();
        }
        panic!("gradient index {index} out of range");
    }
}
