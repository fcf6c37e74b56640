use crate::shape::{expand, numel, sum_to_shape};
use crate::{Element, Tensor};

impl<T: Element> Tensor<T> {
    /// Sum of all elements (shape `[]`).
    pub fn sum(&self) -> Tensor<T> {
        let total = self.data().iter().copied().sum::<T>();
        let n = self.numel();
        Tensor::from_op(
            vec![total],
            vec![],
            vec![self.clone()],
            Box::new(move |g, _, _, _| vec![Some(vec![g[0]; n])]),
        )
    }

    pub fn mean(&self) -> Tensor<T> {
        let n = self.numel().max(1);
        self.sum().mul_scalar(1.0 / n as f64)
    }

    /// Sums over `axes`, keeping them with length 1.
    pub fn sum_axes(&self, axes: &[usize]) -> Tensor<T> {
        let in_shape = self.shape().to_vec();
        let mut out_shape = in_shape.clone();
        for &a in axes {
            assert!(a < in_shape.len(), "axis {a} out of range for {in_shape:?}");
            out_shape[a] = 1;
        }
        let data = sum_to_shape(self.data(), &in_shape, &out_shape);
        let bw_out = out_shape.clone();
        Tensor::from_op(
            data,
            out_shape,
            vec![self.clone()],
            Box::new(move |g, _, _, _| vec![Some(expand(g, &bw_out, &in_shape))]),
        )
    }

    pub fn mean_axes(&self, axes: &[usize]) -> Tensor<T> {
        let count: usize = axes.iter().map(|&a| self.dim(a)).product();
        self.sum_axes(axes).mul_scalar(1.0 / count.max(1) as f64)
    }

    /// Maximum over one axis (kept with length 1), without gradient.
    pub fn max_axis_detached(&self, axis: usize) -> Tensor<T> {
        let shape = self.shape();
        let outer: usize = shape[..axis].iter().product();
        let len = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![T::neg_infinity(); outer * inner];
        let d = self.data();
        for o in 0..outer {
            for l in 0..len {
                let base = (o * len + l) * inner;
                for i in 0..inner {
                    let v = d[base + i];
                    let slot = &mut out[o * inner + i];
                    if v > *slot {
                        *slot = v;
                    }
                }
            }
        }
        let mut out_shape = shape.to_vec();
        out_shape[axis] = 1;
        debug_assert_eq!(numel(&out_shape), out.len());
        Tensor::from_vec(out, &out_shape)
    }

    /// Softmax along `axis`.
    pub fn softmax(&self, axis: usize) -> Tensor<T> {
        let shifted = self.sub(&self.max_axis_detached(axis));
        let e = shifted.exp();
        e.div(&e.sum_axes(&[axis]))
    }
}
