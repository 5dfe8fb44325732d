use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::layer::{self, BnCache, ConvGeom, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// Result of a backward pass: gradient aligned with [`Model::params`] and the
/// gradient with respect to the batch that was fed to `forward`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Tensor,
}

#[derive(Debug, Clone)]
pub(crate) enum LayerCache {
    Input(Vec<f64>),
    Bn(BnCache),
    Relu(Vec<f64>),
}

#[derive(Debug, Clone)]
pub(crate) struct Cache {
    batch: usize,
    layers: Vec<LayerCache>,
}

impl Cache {
    /// Pre-activation values of every ReLU, in layer order.
    pub(crate) fn relu_inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().filter_map(|c| match c {
            LayerCache::Relu(x) => Some(x.as_slice()),
            _ => None,
        })
    }
}

/// A feed-forward stack of [`LayerSpec`]s with a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Model {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    /// Per-sample input shape of each layer, followed by the output shape.
    shapes: Vec<Vec<usize>>,
    params: Vec<f64>,
    param_offsets: Vec<usize>,
    running: Vec<f64>,
    running_offsets: Vec<usize>,
    mode: Mode,
    seed: u64,
    cache: Option<Cache>,
}

impl Model {
    /// Builds a model with freshly initialized parameters: weights and biases
    /// uniform in `±1/sqrt(fan_in)`, batchnorm scale 1 and shift 0.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let mut model = Self::skeleton(input_shape, layers, seed)?;
        let mut rng = rng::stream(seed, Stream::Init, 0);
        for (i, spec) in model.layers.iter().enumerate() {
            let p = &mut model.params[model.param_offsets[i]..model.param_offsets[i + 1]];
            match spec {
                LayerSpec::Linear { .. } | LayerSpec::Conv2d { .. } => {
                    let bound = 1.0 / (spec.fan_in() as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                    p.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
                }
                LayerSpec::BatchNorm { features, .. } => {
                    p[..*features].fill(1.0);
                }
                LayerSpec::Relu => {}
            }
        }
        Ok(model)
    }

    /// Builds a model around existing parameters and running statistics.
    pub fn from_parts(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        seed: u64,
        params: Vec<f64>,
        running: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self::skeleton(input_shape, layers, seed)?;
        if params.len() != model.params.len() || running.len() != model.running.len() {
            return Err(Error::ModelFormat(format!(
                "expected {} params and {} running stats, got {} and {}",
                model.params.len(),
                model.running.len(),
                params.len(),
                running.len()
            )));
        }
        if !params.iter().chain(&running).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        model.params = params;
        model.running = running;
        Ok(model)
    }

    fn skeleton(input_shape: Vec<usize>, layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layer list"));
        }
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Config(format!("bad input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, spec) in layers.iter().enumerate() {
            let cur = shapes.last().expect("non-empty");
            let next = spec.output_shape(cur).ok_or_else(|| Error::Shape {
                layer: i,
                expected: expected_input(spec, cur),
                got: cur.clone(),
            })?;
            shapes.push(next);
        }
        let mut param_offsets = vec![0];
        let mut running_offsets = vec![0];
        for spec in &layers {
            param_offsets.push(param_offsets.last().unwrap() + spec.param_count());
            running_offsets.push(running_offsets.last().unwrap() + spec.running_count());
        }
        let mut running = vec![0.0; *running_offsets.last().unwrap()];
        for (i, spec) in layers.iter().enumerate() {
            if let LayerSpec::BatchNorm { features, .. } = spec {
                running[running_offsets[i] + features..running_offsets[i + 1]].fill(1.0);
            }
        }
        Ok(Self {
            input_shape,
            params: vec![0.0; *param_offsets.last().unwrap()],
            layers,
            shapes,
            param_offsets,
            running,
            running_offsets,
            mode: Mode::Train,
            seed,
            cache: None,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn output_dim(&self) -> usize {
        self.shapes.last().unwrap().iter().product()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Batchnorm running means and variances, layer by layer.
    pub fn running_stats(&self) -> &[f64] {
        &self.running
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.cache = None;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Snaps parameters and running statistics to `f32` precision, which is
    /// what the model file stores.
    pub fn round_to_f32(&mut self) {
        for v in self.params.iter_mut().chain(self.running.iter_mut()) {
            *v = *v as f32 as f64;
        }
    }

    /// Forward pass honouring the current mode. In train mode batch
    /// statistics are used, running statistics are updated and activations
    /// are cached for [`Model::backward`].
    pub fn forward(&mut self, batch: &Tensor) -> Result<Tensor> {
        match self.mode {
            Mode::Eval => self.infer(batch),
            Mode::Train => {
                let (out, cache) = self.run(&self.params, batch)?;
                for (i, spec) in self.layers.iter().enumerate() {
                    if let (LayerSpec::BatchNorm { momentum, .. }, LayerCache::Bn(bn)) =
                        (spec, &cache.layers[i])
                    {
                        let r = &mut self.running
                            [self.running_offsets[i]..self.running_offsets[i + 1]];
                        layer::bn_update_running(r, bn, *momentum);
                    }
                }
                self.cache = Some(cache);
                Ok(out)
            }
        }
    }

    /// Eval-mode forward pass. Pure, so it can be shared across threads.
    pub fn infer(&self, batch: &Tensor) -> Result<Tensor> {
        self.check_batch(batch)?;
        let mut x = batch.data().to_vec();
        for (i, spec) in self.layers.iter().enumerate() {
            let p = self.layer_params(&self.params, i);
            x = match *spec {
                LayerSpec::Linear {
                    in_features,
                    out_features,
                } => layer::linear_forward(&x, in_features, out_features, p),
                LayerSpec::Conv2d { .. } => layer::conv_forward(&x, self.geom(i), p),
                LayerSpec::BatchNorm { features, eps, .. } => {
                    let r = &self.running[self.running_offsets[i]..self.running_offsets[i + 1]];
                    layer::bn_forward_eval(&x, features, self.spatial(i), p, r, eps)
                }
                LayerSpec::Relu => {
                    x.iter_mut().for_each(|v| *v = v.max(0.0));
                    x
                }
            };
        }
        self.finish(batch.rows(), x)
    }

    /// Train-mode forward with explicit parameters; returns output and cache.
    pub(crate) fn run(&self, params: &[f64], batch: &Tensor) -> Result<(Tensor, Cache)> {
        self.check_batch(batch)?;
        let mut x = batch.data().to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.iter().enumerate() {
            let p = self.layer_params(params, i);
            let (y, c) = match *spec {
                LayerSpec::Linear {
                    in_features,
                    out_features,
                } => {
                    let y = layer::linear_forward(&x, in_features, out_features, p);
                    (y, LayerCache::Input(x))
                }
                LayerSpec::Conv2d { .. } => {
                    let y = layer::conv_forward(&x, self.geom(i), p);
                    (y, LayerCache::Input(x))
                }
                LayerSpec::BatchNorm { features, eps, .. } => {
                    let (y, bn) = layer::bn_forward_train(&x, features, self.spatial(i), p, eps);
                    (y, LayerCache::Bn(bn))
                }
                LayerSpec::Relu => {
                    let y = x.iter().map(|v| v.max(0.0)).collect();
                    (y, LayerCache::Relu(x))
                }
            };
            caches.push(c);
            x = y;
        }
        let out = self.finish(batch.rows(), x)?;
        Ok((
            out,
            Cache {
                batch: batch.rows(),
                layers: caches,
            },
        ))
    }

    /// Gradient of the loss with respect to parameters and input, given the
    /// gradient with respect to the output of the last train-mode forward.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Gradients> {
        let cache = self.cache.take().ok_or(Error::NoForwardCache)?;
        let (params, dx) = self.backward_with(&self.params, &cache, upstream, true)?;
        let mut shape = vec![cache.batch];
        shape.extend_from_slice(&self.input_shape);
        Ok(Gradients {
            params,
            input: Tensor::from_parts(shape, dx),
        })
    }

    /// Like [`Model::backward`] but skips the input gradient.
    pub fn backward_params(&mut self, upstream: &Tensor) -> Result<Vec<f64>> {
        let cache = self.cache.take().ok_or(Error::NoForwardCache)?;
        Ok(self.backward_with(&self.params, &cache, upstream, false)?.0)
    }

    pub(crate) fn backward_with(
        &self,
        params: &[f64],
        cache: &Cache,
        upstream: &Tensor,
        want_input: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let expected = [cache.batch, self.output_dim()];
        if upstream.shape().iter().product::<usize>() != expected.iter().product::<usize>()
            || upstream.rows() != cache.batch
        {
            return Err(Error::Shape {
                layer: self.layers.len(),
                expected: expected.to_vec(),
                got: upstream.shape().to_vec(),
            });
        }
        let mut grad = vec![0.0; params.len()];
        let mut dy = upstream.data().to_vec();
        for i in (0..self.layers.len()).rev() {
            let p = self.layer_params(params, i);
            let want_dx = want_input || i > 0;
            let (g, dx) = match (&self.layers[i], &cache.layers[i]) {
                (
                    LayerSpec::Linear {
                        in_features,
                        out_features,
                    },
                    LayerCache::Input(x),
                ) => layer::linear_backward(x, &dy, *in_features, *out_features, p, want_dx),
                (LayerSpec::Conv2d { .. }, LayerCache::Input(x)) => {
                    layer::conv_backward(x, &dy, self.geom(i), p, want_dx)
                }
                (LayerSpec::BatchNorm { features, .. }, LayerCache::Bn(bn)) => {
                    layer::bn_backward(&dy, *features, self.spatial(i), p, bn)
                }
                (LayerSpec::Relu, LayerCache::Relu(x)) => {
                    let dx = dy
                        .iter()
                        .zip(x)
                        .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                        .collect();
                    (Vec::new(), dx)
                }
                _ => unreachable!("cache kind always matches layer kind"),
            };
            grad[self.param_offsets[i]..self.param_offsets[i + 1]].copy_from_slice(&g);
            dy = dx;
        }
        if !grad.iter().chain(&dy).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("backward pass".into()));
        }
        Ok((grad, dy))
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.shape()[1..] != self.input_shape[..] {
            let mut expected = vec![batch.rows()];
            expected.extend_from_slice(&self.input_shape);
            return Err(Error::Shape {
                layer: 0,
                expected,
                got: batch.shape().to_vec(),
            });
        }
        if !batch.is_finite() {
            return Err(Error::NonFinite("input batch".into()));
        }
        Ok(())
    }

    fn finish(&self, rows: usize, x: Vec<f64>) -> Result<Tensor> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("forward pass".into()));
        }
        Ok(Tensor::from_parts(vec![rows, self.output_dim()], x))
    }

    fn layer_params<'a>(&self, params: &'a [f64], i: usize) -> &'a [f64] {
        &params[self.param_offsets[i]..self.param_offsets[i + 1]]
    }

    fn spatial(&self, i: usize) -> usize {
        self.shapes[i][1..].iter().product()
    }

    fn geom(&self, i: usize) -> ConvGeom {
        let LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } = self.layers[i]
        else {
            unreachable!()
        };
        let (inp, out) = (&self.shapes[i], &self.shapes[i + 1]);
        ConvGeom {
            ic: in_channels,
            oc: out_channels,
            k: kernel,
            stride,
            pad: padding,
            h: inp[1],
            w: inp[2],
            oh: out[1],
            ow: out[2],
        }
    }
}

fn expected_input(spec: &LayerSpec, got: &[usize]) -> Vec<usize> {
    match *spec {
        LayerSpec::Linear { in_features, .. } => vec![in_features],
        LayerSpec::Conv2d { in_channels, .. } => {
            let mut e = vec![in_channels];
            e.extend(got.iter().skip(1).take(2));
            e
        }
        LayerSpec::BatchNorm { features, .. } => vec![features],
        LayerSpec::Relu => got.to_vec(),
    }
}
