use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Element, Gradients, Tensor};

/// Named parameter collection. Names are dotted paths such as
/// `encoder.stem.weight`; iteration order is lexicographic.
#[derive(Clone, Default)]
pub struct ParamStore<T: Element = f32> {
    params: BTreeMap<String, Tensor<T>>,
}

impl<T: Element> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: BTreeMap::new() }
    }

    /// Registers (or replaces) a trainable tensor.
    pub fn insert(&mut self, name: impl Into<String>, data: Vec<T>, shape: &[usize]) {
        self.params.insert(name.into(), Tensor::param(data, shape));
    }

    /// Registers an existing tensor as is, keeping its place in any graph.
    pub fn insert_tensor(&mut self, name: impl Into<String>, tensor: Tensor<T>) {
        self.params.insert(name.into(), tensor);
    }

    /// Registers a tensor that never receives gradients.
    pub fn insert_constant(&mut self, name: impl Into<String>, data: Vec<T>, shape: &[usize]) {
        self.params.insert(name.into(), Tensor::from_vec(data, shape));
    }

    /// Panics when `name` is not registered; network code treats that as a bug.
    pub fn get(&self, name: &str) -> &Tensor<T> {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` is not registered"))
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.params.values().map(|t| t.numel()).sum()
    }

    /// Parameters whose name starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a Tensor<T>)> {
        self.iter().filter(move |(k, _)| k.starts_with(prefix))
    }

    /// Replaces the values of an existing parameter, keeping its shape.
    pub fn set_values(&mut self, name: &str, data: Vec<T>) {
        let shape = self.get(name).shape().to_vec();
        self.params.insert(name.to_string(), Tensor::param(data, &shape));
    }

    /// Gradients of every registered parameter that received one.
    pub fn named_grads(&self, grads: &Gradients<T>) -> BTreeMap<String, Vec<T>> {
        self.params
            .iter()
            .filter_map(|(k, t)| grads.get_slice(t).map(|g| (k.clone(), g.to_vec())))
            .collect()
    }

    /// Inserts a zero-initialized parameter.
    pub fn zeros(&mut self, name: impl Into<String>, shape: &[usize]) {
        let n = shape.iter().product();
        self.insert(name, vec![T::zero(); n], shape);
    }

    /// Inserts a parameter filled with `N(0, std^2)` draws.
    pub fn normal(&mut self, name: impl Into<String>, shape: &[usize], std: f64, rng: &mut impl Rng) {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| T::of(std * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        self.insert(name, data, shape);
    }
}
