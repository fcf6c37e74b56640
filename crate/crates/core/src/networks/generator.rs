use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::encoder::AppearanceFeatures;
use super::layers::{lrelu, Conv, Init, NORM_EPS};
use crate::motion_field::batched::{apply_occlusion, resize_map};
use crate::{Error, Result};

/// Spatially adaptive modulation: `norm(x) * (1 + gamma(s)) + beta(s)` with
/// `gamma`, `beta` predicted from a conditioning map `s`.
#[derive(Clone, Debug)]
struct Modulation {
    shared: Conv,
    gamma: Conv,
    beta: Conv,
}

impl Modulation {
    fn new(prefix: &str, channels: usize, cond_channels: usize, hidden: usize) -> Self {
        Self {
            shared: Conv::new(format!("{prefix}.shared"), cond_channels, hidden, 3),
            gamma: Conv::new(format!("{prefix}.gamma"), hidden, channels, 3).init(Init::Zeros),
            beta: Conv::new(format!("{prefix}.beta"), hidden, channels, 3).init(Init::Zeros),
        }
    }

    fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for c in [&self.shared, &self.gamma, &self.beta] {
            c.register(store, rng);
        }
    }

    fn forward<T: Element>(&self, store: &ParamStore<T>, x: &Tensor<T>, cond: &Tensor<T>) -> Tensor<T> {
        let a = lrelu(&self.shared.forward(store, cond));
        let gamma = self.gamma.forward(store, &a);
        let beta = self.beta.forward(store, &a);
        x.instance_norm(NORM_EPS).mul(&gamma.add_scalar(1.0)).add(&beta)
    }
}

/// Residual block: `x + conv(lrelu(modulate(x, cond)))`.
#[derive(Clone, Debug)]
struct ModulatedBlock {
    modulation: Modulation,
    conv: Conv,
}

impl ModulatedBlock {
    fn new(prefix: &str, channels: usize, cond_channels: usize) -> Self {
        Self {
            modulation: Modulation::new(&format!("{prefix}.mod"), channels, cond_channels, channels.min(64)),
            conv: Conv::new(format!("{prefix}.conv"), channels, channels, 3),
        }
    }

    fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        self.modulation.register(store, rng);
        self.conv.register(store, rng);
    }

    fn forward<T: Element>(&self, store: &ParamStore<T>, x: &Tensor<T>, cond: &Tensor<T>) -> Tensor<T> {
        x.add(&self.conv.forward(store, &lrelu(&self.modulation.forward(store, x, cond))))
    }
}

/// Decoder from warped appearance features to an RGB frame. Modulation at
/// each scale is conditioned on the warped map of that scale.
#[derive(Clone, Debug)]
pub struct Generator {
    inp: Conv,
    deep: [ModulatedBlock; 2],
    up1: Conv,
    mid: ModulatedBlock,
    up2: Conv,
    top: ModulatedBlock,
    out: Conv,
}

impl Generator {
    /// `channels` are the encoder map widths from full resolution down.
    pub fn new(prefix: &str, channels: [usize; 3]) -> Self {
        let [c0, c1, c2] = channels;
        Self {
            inp: Conv::new(format!("{prefix}.inp"), c2, c2, 3),
            deep: [
                ModulatedBlock::new(&format!("{prefix}.deep0"), c2, c2),
                ModulatedBlock::new(&format!("{prefix}.deep1"), c2, c2),
            ],
            up1: Conv::new(format!("{prefix}.up1"), c2, c1, 3),
            mid: ModulatedBlock::new(&format!("{prefix}.mid"), c1, c1),
            up2: Conv::new(format!("{prefix}.up2"), c1, c0, 3),
            top: ModulatedBlock::new(&format!("{prefix}.top"), c0, c0),
            out: Conv::new(format!("{prefix}.out"), c0, 3, 3).init(Init::Orthogonal(1.0)),
        }
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        self.inp.register(store, rng);
        for b in &self.deep {
            b.register(store, rng);
        }
        self.up1.register(store, rng);
        self.mid.register(store, rng);
        self.up2.register(store, rng);
        self.top.register(store, rng);
        self.out.register(store, rng);
    }

    /// Masks every warped map with the occlusion map (resampled per scale)
    /// and decodes a `[B, 3, R, R]` image in `[0, 1]`.
    pub fn forward<T: Element>(
        &self,
        store: &ParamStore<T>,
        warped: &AppearanceFeatures<T>,
        occlusion: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        if warped.maps.len() != 3 {
            return Err(Error::Shape(format!("generator expects 3 feature maps, got {}", warped.maps.len())));
        }
        let masked: Vec<Tensor<T>> = warped
            .maps
            .iter()
            .map(|m| apply_occlusion(m, &resize_map(occlusion, m.dim(2), m.dim(3))))
            .collect::<Result<_>>()?;
        let [m0, m1, m2] = [&masked[0], &masked[1], &masked[2]];
        let mut x = self.inp.forward(store, m2);
        for b in &self.deep {
            x = b.forward(store, &x, m2);
        }
        x = self.up1.forward(store, &lrelu(&x).resize_bilinear(m1.dim(2), m1.dim(3)));
        x = self.mid.forward(store, &x, m1);
        x = self.up2.forward(store, &lrelu(&x).resize_bilinear(m0.dim(2), m0.dim(3)));
        x = self.top.forward(store, &x, m0);
        Ok(self.out.forward(store, &lrelu(&x)).sigmoid())
    }
}
