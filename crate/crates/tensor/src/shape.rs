//! Broadcasting and strided-iteration helpers.

use crate::Element;

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn contiguous_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Numpy-style broadcast of two shapes; panics when incompatible.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Vec<usize> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = dim_from_right(a, rank - 1 - i);
        let db = dim_from_right(b, rank - 1 - i);
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => panic!("shapes {a:?} and {b:?} cannot be broadcast together"),
        };
    }
    out
}

fn dim_from_right(shape: &[usize], from_right: usize) -> usize {
    if from_right < shape.len() {
        shape[shape.len() - 1 - from_right]
    } else {
        1
    }
}

/// Strides of `shape` viewed inside the broadcast `out` shape (0 on broadcast axes).
pub(crate) fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let own = contiguous_strides(shape);
    let offset = out.len() - shape.len();
    (0..out.len())
        .map(|i| {
            if i < offset || shape[i - offset] == 1 {
                0
            } else {
                own[i - offset]
            }
        })
        .collect()
}

/// Calls `f(out_index, offset_a, offset_b)` for every element of `out`, in order.
pub(crate) fn for_each_broadcast(
    out: &[usize],
    strides_a: &[usize],
    strides_b: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let total = numel(out);
    if total == 0 {
        return;
    }
    if out.is_empty() {
        f(0, 0, 0);
        return;
    }
    let rank = out.len();
    let inner = out[rank - 1];
    let (ia, ib) = (strides_a[rank - 1], strides_b[rank - 1]);
    let mut counter = vec![0usize; rank - 1];
    let (mut base_a, mut base_b) = (0usize, 0usize);
    let mut index = 0;
    loop {
        for j in 0..inner {
            f(index, base_a + j * ia, base_b + j * ib);
            index += 1;
        }
        // odometer over the outer axes
        let mut axis = rank - 1;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            counter[axis] += 1;
            base_a += strides_a[axis];
            base_b += strides_b[axis];
            if counter[axis] < out[axis] {
                break;
            }
            base_a -= strides_a[axis] * out[axis];
            base_b -= strides_b[axis] * out[axis];
            counter[axis] = 0;
        }
    }
}

pub(crate) fn broadcast_binary<T: Element>(
    a: &[T],
    shape_a: &[usize],
    b: &[T],
    shape_b: &[usize],
    out_shape: &[usize],
    op: impl Fn(T, T) -> T,
) -> Vec<T> {
    if shape_a == out_shape && shape_b == out_shape {
        return a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect();
    }
    if shape_a == out_shape && b.len() == 1 {
        let y = b[0];
        return a.iter().map(|&x| op(x, y)).collect();
    }
    let sa = broadcast_strides(shape_a, out_shape);
    let sb = broadcast_strides(shape_b, out_shape);
    let mut out = Vec::with_capacity(numel(out_shape));
    for_each_broadcast(out_shape, &sa, &sb, |_, oa, ob| out.push(op(a[oa], b[ob])));
    out
}

/// Materializes `data` (of `shape`) broadcast to `out_shape`.
pub(crate) fn expand<T: Element>(data: &[T], shape: &[usize], out_shape: &[usize]) -> Vec<T> {
    if shape == out_shape {
        return data.to_vec();
    }
    let s = broadcast_strides(shape, out_shape);
    let zeros = vec![0; out_shape.len()];
    let mut out = Vec::with_capacity(numel(out_shape));
    for_each_broadcast(out_shape, &s, &zeros, |_, o, _| out.push(data[o]));
    out
}

/// Sums `grad` (of `grad_shape`) down to `target` by reducing broadcast axes.
pub(crate) fn sum_to_shape<T: Element>(grad: &[T], grad_shape: &[usize], target: &[usize]) -> Vec<T> {
    if grad_shape == target {
        return grad.to_vec();
    }
    let s = broadcast_strides(target, grad_shape);
    let zeros = vec![0; grad_shape.len()];
    let mut out = vec![T::zero(); numel(target)];
    for_each_broadcast(grad_shape, &s, &zeros, |i, o, _| out[o] += grad[i]);
    out
}
