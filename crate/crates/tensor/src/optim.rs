//! First-order optimizers over a [`ParamStore`].

use std::collections::BTreeMap;

use crate::{Element, ParamStore};

/// Adaptive-moment optimizer with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<T: Element = f32> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: AdamState<T>,
}

/// Moment estimates and step count, keyed by parameter name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState<T: Element = f32> {
    pub step: u64,
    pub first: BTreeMap<String, Vec<T>>,
    pub second: BTreeMap<String, Vec<T>>,
}

impl<T: Element> Adam<T> {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            state: AdamState {
                step: 0,
                first: BTreeMap::new(),
                second: BTreeMap::new(),
            },
        }
    }

    pub fn state(&self) -> &AdamState<T> {
        &self.state
    }

    pub fn set_state(&mut self, state: AdamState<T>) {
        self.state = state;
    }

    /// Applies one update to every parameter that has a gradient.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &BTreeMap<String, Vec<T>>) {
        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let step_size = T::of(self.lr / bc1);
        let inv_bc2 = T::of(1.0 / bc2);
        let eps = T::of(self.eps);
        for (name, g) in grads {
            let Some(current) = params.try_get(name) else { continue };
            let n = current.numel();
            assert_eq!(g.len(), n, "gradient size mismatch for `{name}`");
            let m = self.state.first.entry(name.clone()).or_insert_with(|| vec![T::zero(); n]);
            let v = self.state.second.entry(name.clone()).or_insert_with(|| vec![T::zero(); n]);
            let mut values = current.to_vec();
            for i in 0..n {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                values[i] -= step_size * m[i] / ((v[i] * inv_bc2).sqrt() + eps);
            }
            params.set_values(name, values);
        }
    }
}

/// Global L2 norm of a gradient collection.
pub fn grad_norm<T: Element>(grads: &BTreeMap<String, Vec<T>>) -> f64 {
    grads
        .values()
        .flat_map(|g| g.iter())
        .map(|v| v.as_f64() * v.as_f64())
        .sum::<f64>()
        .sqrt()
}

/// Rescales gradients so their global norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_grad_norm<T: Element>(grads: &mut BTreeMap<String, Vec<T>>, max_norm: f64) -> f64 {
    let norm = grad_norm(grads);
    if norm > max_norm && norm.is_finite() {
        let scale = T::of(max_norm / norm);
        grads.values_mut().flat_map(|g| g.iter_mut()).for_each(|v| *v *= scale);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    #[test]
    fn adam_minimizes_quadratic() {
        let mut store = ParamStore::<f64>::new();
        store.insert("x", vec![3.0, -2.0], &[2]);
        let mut opt = Adam::new(0.1, 0.9, 0.999);
        for _ in 0..500 {
            let x = store.get("x").clone();
            let loss = x.square().sum();
            let grads = store.named_grads(&loss.backward());
            opt.step(&mut store, &grads);
        }
        for v in store.get("x").data() {
            assert!(v.abs() < 1e-2, "{v}");
        }
    }

    #[test]
    fn zero_lr_keeps_weights() {
        let mut store = ParamStore::<f64>::new();
        store.insert("w", vec![0.5, 0.25], &[2]);
        let before = store.get("w").to_vec();
        let mut opt = Adam::new(0.0, 0.5, 0.999);
        let loss = store.get("w").mul(&Tensor::from_f64s(&[3.0, 4.0], &[2])).sum();
        let grads = store.named_grads(&loss.backward());
        opt.step(&mut store, &grads);
        assert_eq!(store.get("w").to_vec(), before);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), vec![3.0f64, 4.0]);
        let before = clip_grad_norm(&mut g, 1.0);
        assert_eq!(before, 5.0);
        assert!((grad_norm(&g) - 1.0).abs() < 1e-12);
    }
}
