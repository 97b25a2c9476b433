use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;

pub const MLP_DEPTH: usize = 4;

/// `y = W x + b` with `W` stored as `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseLayer {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    /// He-uniform weights, zero bias.
    pub fn he_uniform(input: usize, output: usize, rng: &mut impl rand::Rng) -> Self {
        let bound = (6.0 / input.max(1) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((output, input), || rng.random_range(-bound..bound));
        DenseLayer {
            weights,
            bias: Array1::zeros(output),
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Four dense layers, ReLU between them, identity output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Inputs seen by each layer during a forward pass. `inputs[l]` is the
/// post-activation output of layer `l - 1` (or the network input).
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// `widths = [input, hidden1, hidden2, hidden3, output]`.
    pub fn new(widths: [usize; MLP_DEPTH + 1], seed: Seed) -> Self {
        let mut rng = seed.rng();
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer::he_uniform(w[0], w[1], &mut rng))
            .collect();
        Mlp { layers }
    }

    pub fn zeros(widths: [usize; MLP_DEPTH + 1]) -> Self {
        Mlp {
            layers: widths.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.len() != MLP_DEPTH {
            return Err(Error::Shape(format!("an MLP has {MLP_DEPTH} layers, got {}", layers.len())));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_width() {
                return Err(Error::Shape(format!("layer {i}: bias length {} for {} outputs", l.bias.len(), l.output_width())));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].output_width() != w[1].input_width() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].output_width(),
                    i + 1,
                    w[1].input_width()
                )));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[MLP_DEPTH - 1].output_width()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.input_width()
            )));
        }
        Ok(())
    }

    fn affine(layer: &DenseLayer, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&layer.weights.t());
        z += &layer.bias;
        z
    }

    /// Batched forward pass keeping what [`Mlp::backward`] needs.
    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(MLP_DEPTH);
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Self::affine(layer, &h);
            if i + 1 < MLP_DEPTH {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(h);
            h = z;
        }
        Ok((h, MlpCache { inputs }))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = Self::affine(&self.layers[0], x);
        for layer in &self.layers[1..] {
            h.mapv_inplace(|v| v.max(0.0));
            h = Self::affine(layer, &h);
        }
        Ok(h)
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.predict(&x)?.into_raw_vec_and_offset().0)
    }

    /// Gradients of a scalar loss with respect to every parameter, given
    /// `grad_out = dL/d(output)` for the cached batch. Also returns the
    /// gradient with respect to the network input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Array2<f64>) -> Result<(Mlp, Array2<f64>)> {
        if cache.inputs.len() != MLP_DEPTH {
            return Err(Error::Shape("forward cache is incomplete".into()));
        }
        let rows = cache.inputs[0].nrows();
        if grad_out.dim() != (rows, self.output_width()) {
            return Err(Error::Shape(format!(
                "upstream gradient {:?} does not match output ({rows}, {})",
                grad_out.dim(),
                self.output_width()
            )));
        }
        let mut grads = Vec::with_capacity(MLP_DEPTH);
        let mut g = grad_out.to_owned();
        for l in (0..MLP_DEPTH).rev() {
            let input = &cache.inputs[l];
            let dw = g.t().dot(input).as_standard_layout().into_owned();
            let db = g.sum_axis(Axis(0));
            let mut dx = g.dot(&self.layers[l].weights);
            if l > 0 {
                ndarray::Zip::from(&mut dx).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            grads.push(DenseLayer { weights: dw, bias: db });
            g = dx;
        }
        grads.reverse();
        Ok((Mlp { layers: grads }, g))
    }

    /// Parameter tensors in a fixed order: W1, b1, W2, b2, ...
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("contiguous"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("contiguous"),
                ]
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn to_record(&self) -> MlpRecord {
        MlpRecord {
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    rows: l.output_width(),
                    cols: l.input_width(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &MlpRecord) -> Result<Self> {
        let layers = rec
            .layers
            .iter()
            .map(|l| {
                let weights = Array2::from_shape_vec((l.rows, l.cols), l.weights.clone())
                    .map_err(|e| Error::Shape(format!("layer weights: {e}")))?;
                Ok(DenseLayer {
                    weights,
                    bias: Array1::from(l.bias.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_layers(layers)
    }
}

/// Checkpoint form of one layer: shape plus row-major weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpRecord {
    pub layers: Vec<LayerRecord>,
}
