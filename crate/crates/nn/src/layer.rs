use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::loss::softmax;

/// Negative-side slope of [`Activation::LeakyRelu`].
pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
    Softmax,
}

/// One entry of a network's layer stack.
///
/// Every layer maps a batch of flat feature rows to another batch of flat rows;
/// convolution and pooling interpret a row as `[channels, height, width]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Valid (unpadded) stride-1 convolution with a square kernel.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        height: usize,
        width: usize,
    },
    /// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
    MaxPool2d {
        channels: usize,
        height: usize,
        width: usize,
    },
    Activation(Activation),
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs }
    }

    pub fn act(a: Activation) -> Self {
        LayerSpec::Activation(a)
    }

    /// `(input width, output width)`; `None` for size-preserving activations.
    pub fn widths(&self) -> Option<Result<(usize, usize)>> {
        let dims = |parts: &[usize]| {
            parts
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| NnError::InvalidLayers(format!("{self} overflows")))
        };
        Some(match *self {
            LayerSpec::Dense { inputs, outputs } => Ok((inputs, outputs)),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                height,
                width,
            } => {
                if kernel == 0 || kernel > height || kernel > width {
                    return Some(Err(NnError::InvalidLayers(format!(
                        "kernel {kernel} does not fit {height}x{width}"
                    ))));
                }
                let oh = height - kernel + 1;
                let ow = width - kernel + 1;
                dims(&[in_channels, height, width])
                    .and_then(|i| dims(&[out_channels, oh, ow]).map(|o| (i, o)))
            }
            LayerSpec::MaxPool2d {
                channels,
                height,
                width,
            } => {
                if height < 2 || width < 2 {
                    return Some(Err(NnError::InvalidLayers(format!(
                        "cannot pool {height}x{width}"
                    ))));
                }
                dims(&[channels, height, width])
                    .and_then(|i| dims(&[channels, height / 2, width / 2]).map(|o| (i, o)))
            }
            LayerSpec::Activation(_) => return None,
        })
    }

    pub fn param_count(&self) -> Result<usize> {
        let overflow = || NnError::InvalidLayers(format!("{self} parameter count overflows"));
        match *self {
            LayerSpec::Dense { inputs, outputs } => inputs
                .checked_mul(outputs)
                .and_then(|w| w.checked_add(outputs))
                .ok_or_else(overflow),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels
                .checked_mul(in_channels)
                .and_then(|v| v.checked_mul(kernel))
                .and_then(|v| v.checked_mul(kernel))
                .and_then(|v| v.checked_add(out_channels))
                .ok_or_else(overflow),
            LayerSpec::MaxPool2d { .. } | LayerSpec::Activation(_) => Ok(0),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Dense { inputs, outputs } => write!(f, "dense {inputs} {outputs}"),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                height,
                width,
            } => write!(
                f,
                "conv2d {in_channels} {out_channels} {kernel} {height} {width}"
            ),
            LayerSpec::MaxPool2d {
                channels,
                height,
                width,
            } => write!(f, "maxpool2d {channels} {height} {width}"),
            LayerSpec::Activation(a) => f.write_str(match a {
                Activation::Identity => "identity",
                Activation::Relu => "relu",
                Activation::LeakyRelu => "leaky_relu",
                Activation::Softmax => "softmax",
            }),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let kind = it
            .next()
            .ok_or_else(|| NnError::InvalidLayers("empty layer line".into()))?;
        let nums: Vec<usize> = it
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| NnError::InvalidLayers(format!("bad number {t:?} in {s:?}")))
            })
            .collect::<Result<_>>()?;
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(NnError::InvalidLayers(format!(
                    "{kind} takes {n} arguments, got {}",
                    nums.len()
                )))
            }
        };
        let spec = match kind {
            "dense" => {
                arity(2)?;
                LayerSpec::dense(nums[0], nums[1])
            }
            "conv2d" => {
                arity(5)?;
                LayerSpec::Conv2d {
                    in_channels: nums[0],
                    out_channels: nums[1],
                    kernel: nums[2],
                    height: nums[3],
                    width: nums[4],
                }
            }
            "maxpool2d" => {
                arity(3)?;
                LayerSpec::MaxPool2d {
                    channels: nums[0],
                    height: nums[1],
                    width: nums[2],
                }
            }
            "identity" | "relu" | "leaky_relu" | "softmax" => {
                arity(0)?;
                LayerSpec::Activation(match kind {
                    "identity" => Activation::Identity,
                    "relu" => Activation::Relu,
                    "leaky_relu" => Activation::LeakyRelu,
                    _ => Activation::Softmax,
                })
            }
            other => return Err(NnError::InvalidLayers(format!("unknown layer {other:?}"))),
        };
        Ok(spec)
    }
}

/// A layer placed in a network: its spec plus resolved widths and parameter slot.
#[derive(Clone, Debug)]
pub(crate) struct Layer {
    pub spec: LayerSpec,
    pub in_width: usize,
    pub out_width: usize,
    pub offset: usize,
    pub param_count: usize,
}

/// Per-layer scratch kept between forward and backward.
#[derive(Clone, Debug, Default)]
pub(crate) struct Scratch {
    pub argmax: Vec<usize>,
}

impl Layer {
    /// `x` is `[batch, in_width]`; returns `[batch, out_width]`.
    pub fn forward(&self, params: &[f64], x: &[f64], batch: usize, scratch: &mut Scratch) -> Vec<f64> {
        let p = &params[self.offset..self.offset + self.param_count];
        match self.spec {
            LayerSpec::Dense { inputs, outputs } => {
                let (w, bias) = p.split_at(inputs * outputs);
                let mut out = Vec::with_capacity(batch * outputs);
                for b in 0..batch {
                    let start = out.len();
                    out.extend_from_slice(bias);
                    let row = &mut out[start..];
                    for (i, &xv) in x[b * inputs..(b + 1) * inputs].iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let wrow = &w[i * outputs..(i + 1) * outputs];
                        for (o, &wv) in row.iter_mut().zip(wrow) {
                            *o += xv * wv;
                        }
                    }
                }
                out
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                height,
                width,
            } => {
                let (oh, ow) = (height - kernel + 1, width - kernel + 1);
                let (w, bias) = p.split_at(out_channels * in_channels * kernel * kernel);
                let mut out = vec![0.0; batch * self.out_width];
                for b in 0..batch {
                    let xin = &x[b * self.in_width..(b + 1) * self.in_width];
                    let yout = &mut out[b * self.out_width..(b + 1) * self.out_width];
                    for oc in 0..out_channels {
                        let plane = &mut yout[oc * oh * ow..(oc + 1) * oh * ow];
                        plane.fill(bias[oc]);
                        for c in 0..in_channels {
                            let xc = &xin[c * height * width..(c + 1) * height * width];
                            let wk = &w[(oc * in_channels + c) * kernel * kernel..][..kernel * kernel];
                            for ki in 0..kernel {
                                for kj in 0..kernel {
                                    let wv = wk[ki * kernel + kj];
                                    for r in 0..oh {
                                        let src = &xc[(r + ki) * width + kj..][..ow];
                                        let dst = &mut plane[r * ow..(r + 1) * ow];
                                        for (d, &s) in dst.iter_mut().zip(src) {
                                            *d += wv * s;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                out
            }
            LayerSpec::MaxPool2d {
                channels,
                height,
                width,
            } => {
                let (oh, ow) = (height / 2, width / 2);
                let mut out = Vec::with_capacity(batch * self.out_width);
                scratch.argmax.clear();
                for b in 0..batch {
                    let base = b * self.in_width;
                    for c in 0..channels {
                        for r in 0..oh {
                            for q in 0..ow {
                                let mut best = base + c * height * width + 2 * r * width + 2 * q;
                                for (dr, dq) in [(0, 1), (1, 0), (1, 1)] {
                                    let idx = base + c * height * width + (2 * r + dr) * width + 2 * q + dq;
                                    if x[idx] > x[best] {
                                        best = idx;
                                    }
                                }
                                out.push(x[best]);
                                scratch.argmax.push(best);
                            }
                        }
                    }
                }
                out
            }
            LayerSpec::Activation(a) => match a {
                Activation::Identity => x.to_vec(),
                Activation::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
                Activation::LeakyRelu => x
                    .iter()
                    .map(|&v| if v > 0.0 { v } else { LEAKY_RELU_SLOPE * v })
                    .collect(),
                Activation::Softmax => x.chunks(self.in_width).flat_map(softmax).collect(),
            },
        }
    }

    /// Accumulates parameter gradients into `grad` (full-length buffer) and returns
    /// the gradient with respect to the layer input when `want_input` is set.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        batch: usize,
        scratch: &Scratch,
        grad: &mut [f64],
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let p = &params[self.offset..self.offset + self.param_count];
        let g = &mut grad[self.offset..self.offset + self.param_count];
        match self.spec {
            LayerSpec::Dense { inputs, outputs } => {
                let (w, _) = p.split_at(inputs * outputs);
                let (gw, gb) = g.split_at_mut(inputs * outputs);
                for b in 0..batch {
                    let dyr = &dy[b * outputs..(b + 1) * outputs];
                    for (gbv, &d) in gb.iter_mut().zip(dyr) {
                        *gbv += d;
                    }
                    for (i, &xv) in x[b * inputs..(b + 1) * inputs].iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        for (gv, &d) in gw[i * outputs..(i + 1) * outputs].iter_mut().zip(dyr) {
                            *gv += xv * d;
                        }
                    }
                }
                want_input.then(|| {
                    let mut dx = vec![0.0; batch * inputs];
                    for b in 0..batch {
                        let dyr = &dy[b * outputs..(b + 1) * outputs];
                        for (i, dxv) in dx[b * inputs..(b + 1) * inputs].iter_mut().enumerate() {
                            *dxv = w[i * outputs..(i + 1) * outputs]
                                .iter()
                                .zip(dyr)
                                .map(|(a, b)| a * b)
                                .sum();
                        }
                    }
                    dx
                })
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                height,
                width,
            } => {
                let (oh, ow) = (height - kernel + 1, width - kernel + 1);
                let nw = out_channels * in_channels * kernel * kernel;
                let (w, _) = p.split_at(nw);
                let (gw, gb) = g.split_at_mut(nw);
                let mut dx = want_input.then(|| vec![0.0; batch * self.in_width]);
                for b in 0..batch {
                    let xin = &x[b * self.in_width..(b + 1) * self.in_width];
                    let dyo = &dy[b * self.out_width..(b + 1) * self.out_width];
                    for oc in 0..out_channels {
                        let plane = &dyo[oc * oh * ow..(oc + 1) * oh * ow];
                        gb[oc] += plane.iter().sum::<f64>();
                        for c in 0..in_channels {
                            let xc = &xin[c * height * width..(c + 1) * height * width];
                            let kbase = (oc * in_channels + c) * kernel * kernel;
                            for ki in 0..kernel {
                                for kj in 0..kernel {
                                    let mut acc = 0.0;
                                    for r in 0..oh {
                                        let src = &xc[(r + ki) * width + kj..][..ow];
                                        let d = &plane[r * ow..(r + 1) * ow];
                                        acc += src.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
                                    }
                                    gw[kbase + ki * kernel + kj] += acc;
                                    if let Some(dx) = dx.as_mut() {
                                        let wv = w[kbase + ki * kernel + kj];
                                        let dxc = &mut dx[b * self.in_width + c * height * width..]
                                            [..height * width];
                                        for r in 0..oh {
                                            let dst = &mut dxc[(r + ki) * width + kj..][..ow];
                                            let d = &plane[r * ow..(r + 1) * ow];
                                            for (t, &dv) in dst.iter_mut().zip(d) {
                                                *t += wv * dv;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                dx
            }
            LayerSpec::MaxPool2d { .. } => want_input.then(|| {
                let mut dx = vec![0.0; batch * self.in_width];
                for (&idx, &d) in scratch.argmax.iter().zip(dy) {
                    dx[idx] += d;
                }
                dx
            }),
            LayerSpec::Activation(a) => want_input.then(|| match a {
                Activation::Identity => dy.to_vec(),
                Activation::Relu => x
                    .iter()
                    .zip(dy)
                    .map(|(&v, &d)| if v > 0.0 { d } else { 0.0 })
                    .collect(),
                Activation::LeakyRelu => x
                    .iter()
                    .zip(dy)
                    .map(|(&v, &d)| if v > 0.0 { d } else { LEAKY_RELU_SLOPE * d })
                    .collect(),
                Activation::Softmax => {
                    let mut dx = Vec::with_capacity(dy.len());
                    for (yr, dr) in y.chunks(self.in_width).zip(dy.chunks(self.in_width)) {
                        let dot: f64 = yr.iter().zip(dr).map(|(a, b)| a * b).sum();
                        dx.extend(yr.iter().zip(dr).map(|(&yv, &dv)| yv * (dv - dot)));
                    }
                    dx
                }
            }),
        }
    }
}
