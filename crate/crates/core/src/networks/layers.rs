//! Parameterized building blocks. Layers hold only names and sizes; weights
//! live in a [`ParamStore`] so one layer description serves any precision.

use adasr_tensor::{Conv2dOptions, Element, ParamStore, Tensor};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub const LEAKY_SLOPE: f64 = 0.2;
pub const NORM_EPS: f64 = 1e-5;

/// Gain that keeps activation variance through a leaky ReLU.
pub fn leaky_gain() -> f64 {
    (2.0 / (1.0 + LEAKY_SLOPE * LEAKY_SLOPE)).sqrt()
}

/// `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// shorter), scaled by `gain`. Row-major.
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Vec<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    let a = DMatrix::<f64>::from_fn(long, short, |_, _| rng.sample(StandardNormal));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..short {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let v = if rows >= cols { q[(i, j)] } else { q[(j, i)] };
            out.push(gain * v);
        }
    }
    out
}

fn to_elements<T: Element>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::of).collect()
}

/// How a layer's weights start out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Orthogonal(f64),
    Zeros,
}

#[derive(Clone, Debug)]
pub struct Conv {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub init: Init,
}

impl Conv {
    /// Stride-1 convolution with size-preserving padding.
    pub fn new(name: impl Into<String>, in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            name: name.into(),
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            padding: kernel / 2,
            init: Init::Orthogonal(leaky_gain()),
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        let fan_in = self.in_channels * self.kernel * self.kernel;
        let shape = [self.out_channels, self.in_channels, self.kernel, self.kernel];
        match self.init {
            Init::Orthogonal(gain) => {
                let w = orthogonal(self.out_channels, fan_in, gain, rng);
                store.insert(self.weight_name(), to_elements(w), &shape);
            }
            Init::Zeros => store.zeros(self.weight_name(), &shape),
        }
        store.zeros(self.bias_name(), &[self.out_channels]);
    }

    pub fn forward<T: Element>(&self, store: &ParamStore<T>, x: &Tensor<T>) -> Tensor<T> {
        x.conv2d(
            store.get(&self.weight_name()),
            Some(store.get(&self.bias_name())),
            Conv2dOptions::new(self.stride, self.padding),
        )
    }
}

/// Dense layer on `[B, in]` inputs.
#[derive(Clone, Debug)]
pub struct Linear {
    pub name: String,
    pub in_features: usize,
    pub out_features: usize,
    pub init: Init,
}

impl Linear {
    pub fn new(name: impl Into<String>, in_features: usize, out_features: usize) -> Self {
        Self { name: name.into(), in_features, out_features, init: Init::Orthogonal(leaky_gain()) }
    }

    pub fn init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        let name = format!("{}.weight", self.name);
        match self.init {
            Init::Orthogonal(gain) => {
                // stored as [in, out] so the forward pass is x @ W
                let w = orthogonal(self.out_features, self.in_features, gain, rng);
                let mut t = vec![0.0; w.len()];
                for o in 0..self.out_features {
                    for i in 0..self.in_features {
                        t[i * self.out_features + o] = w[o * self.in_features + i];
                    }
                }
                store.insert(name, to_elements(t), &[self.in_features, self.out_features]);
            }
            Init::Zeros => store.zeros(name, &[self.in_features, self.out_features]),
        }
        store.zeros(format!("{}.bias", self.name), &[self.out_features]);
    }

    pub fn forward<T: Element>(&self, store: &ParamStore<T>, x: &Tensor<T>) -> Tensor<T> {
        x.matmul(store.get(&format!("{}.weight", self.name)))
            .add(store.get(&format!("{}.bias", self.name)))
    }
}

pub fn lrelu<T: Element>(x: &Tensor<T>) -> Tensor<T> {
    x.leaky_relu(LEAKY_SLOPE)
}

/// Convolution, per-instance normalization, leaky ReLU.
pub fn conv_norm_act<T: Element>(conv: &Conv, store: &ParamStore<T>, x: &Tensor<T>) -> Tensor<T> {
    lrelu(&conv.forward(store, x).instance_norm(NORM_EPS))
}
