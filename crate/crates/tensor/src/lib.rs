//! A compact reverse-mode automatic differentiation engine over dense,
//! row-major CPU tensors.
//!
//! The engine builds a dynamic graph as operations are applied: every
//! [`Tensor`] produced by a differentiable op remembers its parents and a
//! closure that maps the output gradient onto parent gradients. Calling
//! [`Tensor::backward`] on a scalar walks the graph in reverse topological
//! order and returns the [`Gradients`] of every leaf that requires them.
//!
//! Image tensors use the `[N, C, H, W]` layout. Sampling grids and flow
//! fields use `[N, H, W, 2]` with `(x, y)` in normalized coordinates, where
//! `-1` and `+1` address the centers of the first and last pixel.
//!
//! Everything is single threaded and bit-reproducible for identical inputs.

mod element;
pub mod gradcheck;
mod ops;
pub mod optim;
mod params;
mod shape;
mod tensor;

pub use element::Element;
pub use ops::conv::Conv2dOptions;
pub use params::ParamStore;
pub use tensor::{is_grad_enabled, no_grad, Gradients, Tensor};
