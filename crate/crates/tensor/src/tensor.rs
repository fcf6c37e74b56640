use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::shape::numel;
use crate::Element;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` without recording any graph; results are plain values.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|g| g.replace(false)));
    f()
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Maps the output gradient to one optional gradient per parent.
///
/// Arguments: output gradient, output values, parents, which parents need a gradient.
pub(crate) type BackwardFn<T> =
    dyn Fn(&[T], &[T], &[Tensor<T>], &[bool]) -> Vec<Option<Vec<T>>> + Send + Sync;

struct GradFn<T: Element> {
    parents: Vec<Tensor<T>>,
    backward: Box<BackwardFn<T>>,
}

struct Node<T: Element> {
    id: u64,
    data: Arc<Vec<T>>,
    shape: Vec<usize>,
    requires_grad: bool,
    grad_fn: Option<GradFn<T>>,
}

/// Dense row-major tensor with an optional autodiff history.
///
/// Cloning is cheap: clones share storage and graph position.
pub struct Tensor<T: Element = f32>(Arc<Node<T>>);

impl<T: Element> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<T: Element> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview: Vec<T> = self.0.data.iter().take(8).copied().collect();
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .field("data", &preview)
            .finish()
    }
}

impl<T: Element> Tensor<T> {
    fn leaf(data: Arc<Vec<T>>, shape: Vec<usize>, requires_grad: bool) -> Self {
        assert_eq!(
            data.len(),
            numel(&shape),
            "data length {} does not match shape {shape:?}",
            data.len()
        );
        Self(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            data,
            shape,
            requires_grad,
            grad_fn: None,
        }))
    }

    pub fn from_vec(data: Vec<T>, shape: &[usize]) -> Self {
        Self::leaf(Arc::new(data), shape.to_vec(), false)
    }

    pub fn from_f64s(values: &[f64], shape: &[usize]) -> Self {
        Self::from_vec(values.iter().map(|&v| T::of(v)).collect(), shape)
    }

    pub fn full(value: T, shape: &[usize]) -> Self {
        Self::from_vec(vec![value; numel(shape)], shape)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(T::zero(), shape)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(T::one(), shape)
    }

    pub fn scalar(value: T) -> Self {
        Self::from_vec(vec![value], &[])
    }

    /// A leaf that accumulates gradients.
    pub fn param(data: Vec<T>, shape: &[usize]) -> Self {
        Self::leaf(Arc::new(data), shape.to_vec(), true)
    }

    /// Same values as a fresh gradient-tracking leaf.
    pub fn requires_grad(&self) -> Self {
        Self::leaf(Arc::clone(&self.0.data), self.0.shape.clone(), true)
    }

    /// Same values, cut from the graph.
    pub fn detach(&self) -> Self {
        if !self.0.requires_grad {
            return self.clone();
        }
        Self::leaf(Arc::clone(&self.0.data), self.0.shape.clone(), false)
    }

    /// Builds an op output. The backward closure is dropped when no parent
    /// tracks gradients or recording is disabled.
    pub(crate) fn from_op(
        data: Vec<T>,
        shape: Vec<usize>,
        parents: Vec<Tensor<T>>,
        backward: Box<BackwardFn<T>>,
    ) -> Self {
        let track = is_grad_enabled() && parents.iter().any(|p| p.0.requires_grad);
        if !track {
            return Self::leaf(Arc::new(data), shape, false);
        }
        assert_eq!(data.len(), numel(&shape));
        Self(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            data: Arc::new(data),
            shape,
            requires_grad: true,
            grad_fn: Some(GradFn { parents, backward }),
        }))
    }

    /// A view with a new shape sharing the same storage.
    pub(crate) fn with_shared_data(
        &self,
        shape: Vec<usize>,
        backward: Box<BackwardFn<T>>,
    ) -> Self {
        let track = is_grad_enabled() && self.0.requires_grad;
        Self(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            data: Arc::clone(&self.0.data),
            shape,
            requires_grad: track,
            grad_fn: track.then(|| GradFn {
                parents: vec![self.clone()],
                backward,
            }),
        }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.0.shape[axis]
    }

    pub fn numel(&self) -> usize {
        self.0.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.0.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.data.to_vec()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.0.data.iter().map(|v| v.as_f64()).collect()
    }

    pub fn tracks_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.is_none()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.0.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.0.data.iter().all(|v| v.is_finite())
    }

    /// Converts the element type; the result is a detached leaf.
    pub fn cast<U: Element>(&self) -> Tensor<U> {
        Tensor::from_vec(self.0.data.iter().map(|v| U::of(v.as_f64())).collect(), self.shape())
    }

    /// Reverse-mode sweep from this scalar.
    pub fn backward(&self) -> Gradients<T> {
        assert_eq!(self.numel(), 1, "backward() needs a scalar, got {:?}", self.shape());
        self.backward_with(vec![T::one()])
    }

    /// Reverse-mode sweep seeded with an explicit output gradient.
    pub fn backward_with(&self, seed: Vec<T>) -> Gradients<T> {
        assert_eq!(seed.len(), self.numel());
        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        if !self.0.requires_grad {
            return Gradients { grads };
        }
        let order = self.topological_order();
        grads.insert(self.0.id, seed);
        for node in order.iter().rev() {
            let Some(gf) = &node.0.grad_fn else {
                continue;
            };
            let Some(grad) = grads.remove(&node.0.id) else {
                continue;
            };
            let needs: Vec<bool> = gf.parents.iter().map(|p| p.0.requires_grad).collect();
            let parent_grads = (gf.backward)(&grad, &node.0.data, &gf.parents, &needs);
            debug_assert_eq!(parent_grads.len(), gf.parents.len());
            for ((parent, pg), need) in gf.parents.iter().zip(parent_grads).zip(needs) {
                let Some(pg) = pg else { continue };
                if !need {
                    continue;
                }
                debug_assert_eq!(pg.len(), parent.numel());
                match grads.get_mut(&parent.0.id) {
                    Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, b)| *a += *b),
                    None => {
                        grads.insert(parent.0.id, pg);
                    }
                }
            }
        }
        Gradients { grads }
    }

    fn topological_order(&self) -> Vec<Tensor<T>> {
        let mut order = Vec::new();
        let mut visited = HashSet::new();
        let mut stack: Vec<(Tensor<T>, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.0.id);
        while let Some((node, child)) = stack.pop() {
            let parents = node.0.grad_fn.as_ref().map(|g| g.parents.as_slice()).unwrap_or(&[]);
            if child < parents.len() {
                let next = parents[child].clone();
                stack.push((node, child + 1));
                if next.0.requires_grad && visited.insert(next.0.id) {
                    stack.push((next, 0));
                }
            } else {
                order.push(node);
            }
        }
        order
    }
}

/// Gradients of leaf tensors, keyed by tensor identity.
pub struct Gradients<T: Element> {
    grads: HashMap<u64, Vec<T>>,
}

impl<T: Element> Gradients<T> {
    pub fn get(&self, tensor: &Tensor<T>) -> Option<Tensor<T>> {
        self.grads
            .get(&tensor.id())
            .map(|g| Tensor::from_vec(g.clone(), tensor.shape()))
    }

    pub fn get_slice(&self, tensor: &Tensor<T>) -> Option<&[T]> {
        self.grads.get(&tensor.id()).map(|g| g.as_slice())
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}
