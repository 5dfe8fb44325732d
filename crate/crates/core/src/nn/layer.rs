use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One stage of the embedding network.
///
/// Shapes are per batch element. `Linear` flattens whatever it receives,
/// `Conv2d` needs `[channels, height, width]`, and `BatchNorm` normalizes
/// per feature on `[features]` inputs or per channel on `[channels, h, w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Linear {
        in_features: usize,
        out_features: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    BatchNorm {
        features: usize,
        momentum: f64,
        eps: f64,
    },
    Relu,
}

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

impl LayerSpec {
    pub fn linear(in_features: usize, out_features: usize) -> Self {
        LayerSpec::Linear {
            in_features,
            out_features,
        }
    }

    pub fn conv2d(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    pub fn batchnorm(features: usize) -> Self {
        LayerSpec::BatchNorm {
            features,
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn relu() -> Self {
        LayerSpec::Relu
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Linear {
                in_features,
                out_features,
            } => in_features * out_features + out_features,
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel * kernel + out_channels,
            LayerSpec::BatchNorm { features, .. } => 2 * features,
            LayerSpec::Relu => 0,
        }
    }

    /// Running mean and variance slots (batchnorm only).
    pub fn running_count(&self) -> usize {
        match *self {
            LayerSpec::BatchNorm { features, .. } => 2 * features,
            _ => 0,
        }
    }

    pub(crate) fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Linear { in_features, .. } => in_features,
            LayerSpec::Conv2d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    /// Per-sample output shape, or `None` if `input` is incompatible.
    pub fn output_shape(&self, input: &[usize]) -> Option<Vec<usize>> {
        match *self {
            LayerSpec::Linear {
                in_features,
                out_features,
            } => (input.iter().product::<usize>() == in_features).then(|| vec![out_features]),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let [c, h, w] = *input else { return None };
                if c != in_channels || stride == 0 || kernel == 0 {
                    return None;
                }
                let oh = (h + 2 * padding).checked_sub(kernel)? / stride + 1;
                let ow = (w + 2 * padding).checked_sub(kernel)? / stride + 1;
                Some(vec![out_channels, oh, ow])
            }
            LayerSpec::BatchNorm { features, .. } => match input {
                [f] if *f == features => Some(input.to_vec()),
                [c, _, _] if *c == features => Some(input.to_vec()),
                _ => None,
            },
            LayerSpec::Relu => Some(input.to_vec()),
        }
    }
}

/// Dot product with a fixed eight-way accumulation order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

// ---------------------------------------------------------------- linear

pub(crate) fn linear_forward(
    x: &[f64],
    in_f: usize,
    out_f: usize,
    params: &[f64],
) -> Vec<f64> {
    let (w, b) = params.split_at(in_f * out_f);
    let n = x.len() / in_f;
    let mut y = vec![0.0; n * out_f];
    y.par_chunks_mut(out_f)
        .zip(x.par_chunks(in_f))
        .for_each(|(yr, xr)| {
            for (o, yo) in yr.iter_mut().enumerate() {
                *yo = b[o] + dot(&w[o * in_f..(o + 1) * in_f], xr);
            }
        });
    y
}

/// Returns `(param_grad, input_grad)`.
pub(crate) fn linear_backward(
    x: &[f64],
    dy: &[f64],
    in_f: usize,
    out_f: usize,
    params: &[f64],
    want_dx: bool,
) -> (Vec<f64>, Vec<f64>) {
    let w = &params[..in_f * out_f];
    let n = x.len() / in_f;
    let mut grad = vec![0.0; in_f * out_f + out_f];
    let (dw, db) = grad.split_at_mut(in_f * out_f);
    dw.par_chunks_mut(in_f)
        .zip(db.par_iter_mut())
        .enumerate()
        .for_each(|(o, (dwr, dbo))| {
            for s in 0..n {
                let g = dy[s * out_f + o];
                if g != 0.0 {
                    axpy(g, &x[s * in_f..(s + 1) * in_f], dwr);
                    *dbo += g;
                }
            }
        });
    let mut dx = Vec::new();
    if want_dx {
        dx = vec![0.0; n * in_f];
        dx.par_chunks_mut(in_f)
            .zip(dy.par_chunks(out_f))
            .for_each(|(dxr, dyr)| {
                for (o, &g) in dyr.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, &w[o * in_f..(o + 1) * in_f], dxr);
                    }
                }
            });
    }
    (grad, dx)
}

// ---------------------------------------------------------------- conv2d

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub ic: usize,
    pub oc: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub h: usize,
    pub w: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeom {
    fn patch_len(&self) -> usize {
        self.ic * self.k * self.k
    }

    fn in_len(&self) -> usize {
        self.ic * self.h * self.w
    }

    fn out_len(&self) -> usize {
        self.oc * self.oh * self.ow
    }

    /// Rows are output positions, columns are `(channel, ky, kx)` taps.
    fn im2col(&self, x: &[f64]) -> Vec<f64> {
        let r = self.patch_len();
        let mut col = vec![0.0; self.oh * self.ow * r];
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let row = &mut col[(oy * self.ow + ox) * r..][..r];
                for c in 0..self.ic {
                    for ky in 0..self.k {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        for kx in 0..self.k {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix < 0 || ix >= self.w as isize {
                                continue;
                            }
                            row[(c * self.k + ky) * self.k + kx] =
                                x[(c * self.h + iy as usize) * self.w + ix as usize];
                        }
                    }
                }
            }
        }
        col
    }

    fn col2im_add(&self, dcol: &[f64], dx: &mut [f64]) {
        let r = self.patch_len();
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let row = &dcol[(oy * self.ow + ox) * r..][..r];
                for c in 0..self.ic {
                    for ky in 0..self.k {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        for kx in 0..self.k {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix < 0 || ix >= self.w as isize {
                                continue;
                            }
                            dx[(c * self.h + iy as usize) * self.w + ix as usize] +=
                                row[(c * self.k + ky) * self.k + kx];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_forward(x: &[f64], g: ConvGeom, params: &[f64]) -> Vec<f64> {
    let r = g.patch_len();
    let (w, b) = params.split_at(g.oc * r);
    let n = x.len() / g.in_len();
    let mut y = vec![0.0; n * g.out_len()];
    let npos = g.oh * g.ow;
    y.par_chunks_mut(g.out_len())
        .zip(x.par_chunks(g.in_len()))
        .for_each(|(ys, xs)| {
            let col = g.im2col(xs);
            for o in 0..g.oc {
                let wr = &w[o * r..(o + 1) * r];
                for p in 0..npos {
                    ys[o * npos + p] = b[o] + dot(wr, &col[p * r..(p + 1) * r]);
                }
            }
        });
    y
}

pub(crate) fn conv_backward(
    x: &[f64],
    dy: &[f64],
    g: ConvGeom,
    params: &[f64],
    want_dx: bool,
) -> (Vec<f64>, Vec<f64>) {
    let r = g.patch_len();
    let w = &params[..g.oc * r];
    let n = x.len() / g.in_len();
    let npos = g.oh * g.ow;
    let mut grad = vec![0.0; g.oc * r + g.oc];
    let mut dx = if want_dx { vec![0.0; x.len()] } else { Vec::new() };
    let mut dcol = vec![0.0; npos * r];
    for s in 0..n {
        let xs = &x[s * g.in_len()..(s + 1) * g.in_len()];
        let dys = &dy[s * g.out_len()..(s + 1) * g.out_len()];
        let col = g.im2col(xs);
        let (dw, db) = grad.split_at_mut(g.oc * r);
        for o in 0..g.oc {
            let dwr = &mut dw[o * r..(o + 1) * r];
            for p in 0..npos {
                let d = dys[o * npos + p];
                if d != 0.0 {
                    axpy(d, &col[p * r..(p + 1) * r], dwr);
                    db[o] += d;
                }
            }
        }
        if want_dx {
            dcol.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..npos {
                let dr = &mut dcol[p * r..(p + 1) * r];
                for o in 0..g.oc {
                    let d = dys[o * npos + p];
                    if d != 0.0 {
                        axpy(d, &w[o * r..(o + 1) * r], dr);
                    }
                }
            }
            g.col2im_add(&dcol, &mut dx[s * g.in_len()..(s + 1) * g.in_len()]);
        }
    }
    (grad, dx)
}

// ------------------------------------------------------------- batchnorm

/// Batch statistics and normalized activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct BnCache {
    pub x_hat: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

/// Layout is `[n][c][spatial]`; statistics run over `n * spatial`.
pub(crate) fn bn_forward_train(
    x: &[f64],
    c: usize,
    spatial: usize,
    params: &[f64],
    eps: f64,
) -> (Vec<f64>, BnCache) {
    let (gamma, beta) = params.split_at(c);
    let n = x.len() / (c * spatial);
    let m = (n * spatial) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * spatial;
            mean[ch] += x[base..base + spatial].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * spatial;
            var[ch] += x[base..base + spatial]
                .iter()
                .map(|v| (v - mean[ch]) * (v - mean[ch]))
                .sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= m);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut x_hat = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * spatial;
            for i in base..base + spatial {
                let xh = (x[i] - mean[ch]) * inv_std[ch];
                x_hat[i] = xh;
                y[i] = gamma[ch] * xh + beta[ch];
            }
        }
    }
    let cache = BnCache {
        x_hat,
        inv_std,
        mean,
        var,
        count: n * spatial,
    };
    (y, cache)
}

pub(crate) fn bn_forward_eval(
    x: &[f64],
    c: usize,
    spatial: usize,
    params: &[f64],
    running: &[f64],
    eps: f64,
) -> Vec<f64> {
    let (gamma, beta) = params.split_at(c);
    let (rmean, rvar) = running.split_at(c);
    let scale: Vec<f64> = (0..c).map(|ch| gamma[ch] / (rvar[ch] + eps).sqrt()).collect();
    let mut y = vec![0.0; x.len()];
    for (i, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
        let ch = (i / spatial) % c;
        *yi = (xi - rmean[ch]) * scale[ch] + beta[ch];
    }
    y
}

/// Running variance uses the unbiased batch variance.
pub(crate) fn bn_update_running(running: &mut [f64], cache: &BnCache, momentum: f64) {
    let c = cache.mean.len();
    let m = cache.count as f64;
    let unbias = if cache.count > 1 { m / (m - 1.0) } else { 1.0 };
    let (rmean, rvar) = running.split_at_mut(c);
    for ch in 0..c {
        rmean[ch] = (1.0 - momentum) * rmean[ch] + momentum * cache.mean[ch];
        rvar[ch] = (1.0 - momentum) * rvar[ch] + momentum * cache.var[ch] * unbias;
    }
}

pub(crate) fn bn_backward(
    dy: &[f64],
    c: usize,
    spatial: usize,
    params: &[f64],
    cache: &BnCache,
) -> (Vec<f64>, Vec<f64>) {
    let gamma = &params[..c];
    let n = dy.len() / (c * spatial);
    let m = (n * spatial) as f64;
    let mut grad = vec![0.0; 2 * c];
    let (dgamma, dbeta) = grad.split_at_mut(c);
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * spatial;
            for i in base..base + spatial {
                dgamma[ch] += dy[i] * cache.x_hat[i];
                dbeta[ch] += dy[i];
            }
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * spatial;
            let k = gamma[ch] * cache.inv_std[ch] / m;
            for i in base..base + spatial {
                dx[i] = k * (m * dy[i] - dbeta[ch] - cache.x_hat[i] * dgamma[ch]);
            }
        }
    }
    (grad, dx)
}
