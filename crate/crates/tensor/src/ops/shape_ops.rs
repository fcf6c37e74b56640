use crate::shape::{contiguous_strides, expand, numel, sum_to_shape};
use crate::{Element, Tensor};

impl<T: Element> Tensor<T> {
    pub fn reshape(&self, shape: &[usize]) -> Tensor<T> {
        assert_eq!(
            numel(shape),
            self.numel(),
            "cannot reshape {:?} into {shape:?}",
            self.shape()
        );
        self.with_shared_data(
            shape.to_vec(),
            Box::new(|g, _, _, _| vec![Some(g.to_vec())]),
        )
    }

    /// Materialized broadcast to `shape`.
    pub fn broadcast_to(&self, shape: &[usize]) -> Tensor<T> {
        let in_shape = self.shape().to_vec();
        let out_shape = shape.to_vec();
        let data = expand(self.data(), &in_shape, &out_shape);
        Tensor::from_op(
            data,
            out_shape.clone(),
            vec![self.clone()],
            Box::new(move |g, _, _, _| vec![Some(sum_to_shape(g, &out_shape, &in_shape))]),
        )
    }

    /// Reorders axes: output axis `i` is input axis `axes[i]`.
    pub fn permute(&self, axes: &[usize]) -> Tensor<T> {
        let rank = self.rank();
        assert_eq!(axes.len(), rank);
        let in_shape = self.shape().to_vec();
        let out_shape: Vec<usize> = axes.iter().map(|&a| in_shape[a]).collect();
        let data = permute_data(self.data(), &in_shape, axes);
        let mut inverse = vec![0; rank];
        for (i, &a) in axes.iter().enumerate() {
            inverse[a] = i;
        }
        let bw_shape = out_shape.clone();
        Tensor::from_op(
            data,
            out_shape,
            vec![self.clone()],
            Box::new(move |g, _, _, _| vec![Some(permute_data(g, &bw_shape, &inverse))]),
        )
    }

    /// Slice `[start, start + len)` along `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Tensor<T> {
        let shape = self.shape().to_vec();
        assert!(start + len <= shape[axis], "narrow out of range on {shape:?}");
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let full = shape[axis];
        let d = self.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * full + start) * inner;
            data.extend_from_slice(&d[base..base + len * inner]);
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        Tensor::from_op(
            data,
            out_shape,
            vec![self.clone()],
            Box::new(move |g, _, _, _| {
                let mut gi = vec![T::zero(); outer * full * inner];
                for o in 0..outer {
                    let base = (o * full + start) * inner;
                    gi[base..base + len * inner]
                        .copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                }
                vec![Some(gi)]
            }),
        )
    }

    /// Concatenates along `axis`; all other dims must agree.
    pub fn cat(tensors: &[Tensor<T>], axis: usize) -> Tensor<T> {
        assert!(!tensors.is_empty(), "cat of zero tensors");
        let first = tensors[0].shape().to_vec();
        for t in tensors {
            assert_eq!(t.rank(), first.len());
            for (i, (&a, &b)) in t.shape().iter().zip(&first).enumerate() {
                assert!(i == axis || a == b, "cat shape mismatch {:?} vs {first:?}", t.shape());
            }
        }
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let lens: Vec<usize> = tensors.iter().map(|t| t.dim(axis)).collect();
        let total: usize = lens.iter().sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (t, &l) in tensors.iter().zip(&lens) {
                let chunk = l * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut out_shape = first;
        out_shape[axis] = total;
        Tensor::from_op(
            data,
            out_shape,
            tensors.to_vec(),
            Box::new(move |g, _, _, needs| {
                let mut grads: Vec<Vec<T>> =
                    lens.iter().map(|&l| Vec::with_capacity(outer * l * inner)).collect();
                let mut pos = 0;
                for _ in 0..outer {
                    for (gi, &l) in grads.iter_mut().zip(&lens) {
                        gi.extend_from_slice(&g[pos..pos + l * inner]);
                        pos += l * inner;
                    }
                }
                grads
                    .into_iter()
                    .zip(needs)
                    .map(|(gi, &n)| n.then_some(gi))
                    .collect()
            }),
        )
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(tensors: &[Tensor<T>]) -> Tensor<T> {
        let mut shape = vec![1];
        shape.extend_from_slice(tensors[0].shape());
        let expanded: Vec<Tensor<T>> = tensors.iter().map(|t| t.reshape(&shape)).collect();
        Tensor::cat(&expanded, 0)
    }

    /// Picks index `i` along `axis`, removing that axis.
    pub fn select(&self, axis: usize, i: usize) -> Tensor<T> {
        let mut shape = self.shape().to_vec();
        shape.remove(axis);
        self.narrow(axis, i, 1).reshape(&shape)
    }
}

fn permute_data<T: Element>(data: &[T], shape: &[usize], axes: &[usize]) -> Vec<T> {
    let in_strides = contiguous_strides(shape);
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let strides: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
    let zeros = vec![0; shape.len()];
    let mut out = Vec::with_capacity(data.len());
    crate::shape::for_each_broadcast(&out_shape, &strides, &zeros, |_, o, _| out.push(data[o]));
    out
}
