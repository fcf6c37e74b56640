use crate::element::gemm;
use crate::{Element, Tensor};

impl<T: Element> Tensor<T> {
    /// Matrix product over the last two axes. Leading axes are batch axes and
    /// must match, except that a rank-2 right operand is shared by every batch.
    pub fn matmul(&self, rhs: &Tensor<T>) -> Tensor<T> {
        let (a_shape, b_shape) = (self.shape().to_vec(), rhs.shape().to_vec());
        assert!(a_shape.len() >= 2 && b_shape.len() >= 2, "matmul needs rank >= 2");
        let (m, k) = (a_shape[a_shape.len() - 2], a_shape[a_shape.len() - 1]);
        let (k2, n) = (b_shape[b_shape.len() - 2], b_shape[b_shape.len() - 1]);
        assert_eq!(k, k2, "matmul inner dims differ: {a_shape:?} x {b_shape:?}");
        let batch_dims = &a_shape[..a_shape.len() - 2];
        let batch: usize = batch_dims.iter().product();
        let shared_b = b_shape.len() == 2;
        if !shared_b {
            assert_eq!(&b_shape[..b_shape.len() - 2], batch_dims, "matmul batch dims differ");
        }
        let b_step = if shared_b { 0 } else { k * n };
        let mut out = vec![T::zero(); batch * m * n];
        let (ad, bd) = (self.data(), rhs.data());
        for i in 0..batch {
            gemm(
                m,
                k,
                n,
                &ad[i * m * k..],
                false,
                &bd[i * b_step..],
                false,
                &mut out[i * m * n..],
                false,
            );
        }
        let mut out_shape = batch_dims.to_vec();
        out_shape.extend_from_slice(&[m, n]);
        Tensor::from_op(
            out,
            out_shape,
            vec![self.clone(), rhs.clone()],
            Box::new(move |g, _, parents, needs| {
                let (ad, bd) = (parents[0].data(), parents[1].data());
                let ga = needs[0].then(|| {
                    let mut ga = vec![T::zero(); batch * m * k];
                    for i in 0..batch {
                        // dA = G * B^T
                        gemm(m, n, k, &g[i * m * n..], false, &bd[i * b_step..], true, &mut ga[i * m * k..], false);
                    }
                    ga
                });
                let gb = needs[1].then(|| {
                    let mut gb = vec![T::zero(); if shared_b { k * n } else { batch * k * n }];
                    for i in 0..batch {
                        // dB = A^T * G
                        gemm(
                            k,
                            m,
                            n,
                            &ad[i * m * k..],
                            true,
                            &g[i * m * n..],
                            false,
                            &mut gb[i * b_step..],
                            shared_b && i > 0,
                        );
                    }
                    gb
                });
                vec![ga, gb]
            }),
        )
    }

    /// Swaps the last two axes.
    pub fn transpose_last(&self) -> Tensor<T> {
        let r = self.rank();
        let mut axes: Vec<usize> = (0..r).collect();
        axes.swap(r - 2, r - 1);
        self.permute(&axes)
    }
}
