use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::layers::{conv_norm_act, lrelu, Conv};

/// Multi-scale appearance maps ordered from full resolution down to the
/// motion-field resolution.
#[derive(Clone, Debug)]
pub struct AppearanceFeatures<T: Element = f32> {
    pub maps: Vec<Tensor<T>>,
}

impl<T: Element> AppearanceFeatures<T> {
    pub fn deepest(&self) -> &Tensor<T> {
        self.maps.last().expect("encoder produces at least one map")
    }

    pub fn all_finite(&self) -> bool {
        self.maps.iter().all(|m| m.all_finite())
    }
}

/// Normalization-free-of-batch-statistics encoder: full, half and quarter
/// resolution maps.
#[derive(Clone, Debug)]
pub struct AppearanceEncoder {
    stem: Conv,
    down1: Conv,
    down2: Conv,
    refine: Conv,
}

impl AppearanceEncoder {
    pub fn new(prefix: &str, base: usize) -> Self {
        Self {
            stem: Conv::new(format!("{prefix}.stem"), 3, base, 3),
            down1: Conv::new(format!("{prefix}.down1"), base, 2 * base, 3).stride(2),
            down2: Conv::new(format!("{prefix}.down2"), 2 * base, 4 * base, 3).stride(2),
            refine: Conv::new(format!("{prefix}.refine"), 4 * base, 4 * base, 3),
        }
    }

    /// Channel counts of the maps, in output order.
    pub fn channels(&self) -> [usize; 3] {
        [self.stem.out_channels, self.down1.out_channels, self.down2.out_channels]
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for c in [&self.stem, &self.down1, &self.down2, &self.refine] {
            c.register(store, rng);
        }
    }

    pub fn forward<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> AppearanceFeatures<T> {
        let x = image.mul_scalar(2.0).add_scalar(-1.0);
        let f0 = lrelu(&self.stem.forward(store, &x));
        let f1 = conv_norm_act(&self.down1, store, &f0);
        let d2 = conv_norm_act(&self.down2, store, &f1);
        let f2 = d2.add(&conv_norm_act(&self.refine, store, &d2));
        AppearanceFeatures { maps: vec![f0, f1, f2] }
    }
}
