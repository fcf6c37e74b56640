use crate::{Element, Tensor};

impl<T: Element> Tensor<T> {
    /// Per-sample, per-channel normalization over the spatial axes of an
    /// `[N, C, H, W]` tensor. Carries no learned or running statistics.
    pub fn instance_norm(&self, eps: f64) -> Tensor<T> {
        let s = self.shape();
        assert_eq!(s.len(), 4, "instance_norm expects NCHW, got {s:?}");
        let planes = s[0] * s[1];
        let hw = s[2] * s[3];
        let inv_hw = T::of(1.0 / hw as f64);
        let d = self.data();
        let mut out = vec![T::zero(); d.len()];
        let mut inv_std = vec![T::zero(); planes];
        for p in 0..planes {
            let x = &d[p * hw..(p + 1) * hw];
            let mean = x.iter().copied().sum::<T>() * inv_hw;
            let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_hw;
            let is = (var + T::of(eps)).sqrt().recip();
            inv_std[p] = is;
            for (o, &v) in out[p * hw..(p + 1) * hw].iter_mut().zip(x) {
                *o = (v - mean) * is;
            }
        }
        Tensor::from_op(
            out,
            s.to_vec(),
            vec![self.clone()],
            Box::new(move |g, y, _, _| {
                let mut gi = vec![T::zero(); g.len()];
                for p in 0..planes {
                    let gp = &g[p * hw..(p + 1) * hw];
                    let yp = &y[p * hw..(p + 1) * hw];
                    let mean_g = gp.iter().copied().sum::<T>() * inv_hw;
                    let mean_gy = gp.iter().zip(yp).map(|(&a, &b)| a * b).sum::<T>() * inv_hw;
                    for ((o, &gv), &yv) in gi[p * hw..(p + 1) * hw].iter_mut().zip(gp).zip(yp) {
                        *o = inv_std[p] * (gv - mean_g - yv * mean_gy);
                    }
                }
                vec![Some(gi)]
            }),
        )
    }
}
