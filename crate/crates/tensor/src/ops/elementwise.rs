use crate::shape::{broadcast_binary, broadcast_shape, sum_to_shape};
use crate::{Element, Tensor};

impl<T: Element> Tensor<T> {
    /// Pointwise map with derivative `dfdx(x, y)` where `y = f(x)`.
    pub fn map(
        &self,
        f: impl Fn(T) -> T,
        dfdx: impl Fn(T, T) -> T + Send + Sync + 'static,
    ) -> Tensor<T> {
        let data: Vec<T> = self.data().iter().map(|&x| f(x)).collect();
        Tensor::from_op(
            data,
            self.shape().to_vec(),
            vec![self.clone()],
            Box::new(move |g, out, parents, _| {
                let x = parents[0].data();
                vec![Some(
                    g.iter()
                        .zip(x)
                        .zip(out)
                        .map(|((&g, &x), &y)| g * dfdx(x, y))
                        .collect(),
                )]
            }),
        )
    }

    pub fn neg(&self) -> Tensor<T> {
        self.map(|x| -x, |_, _| -T::one())
    }

    pub fn exp(&self) -> Tensor<T> {
        self.map(|x| x.exp(), |_, y| y)
    }

    pub fn ln(&self) -> Tensor<T> {
        self.map(|x| x.ln(), |x, _| x.recip())
    }

    pub fn sqrt(&self) -> Tensor<T> {
        self.map(|x| x.sqrt(), |_, y| T::of(0.5) / y)
    }

    pub fn square(&self) -> Tensor<T> {
        self.map(|x| x * x, |x, _| x + x)
    }

    pub fn powf(&self, p: f64) -> Tensor<T> {
        let pt = T::of(p);
        self.map(move |x| x.powf(pt), move |x, _| pt * x.powf(pt - T::one()))
    }

    /// Absolute value; the subgradient at zero is zero.
    pub fn abs(&self) -> Tensor<T> {
        self.map(|x| x.abs(), |x, _| sign(x))
    }

    pub fn relu(&self) -> Tensor<T> {
        self.map(
            |x| if x > T::zero() { x } else { T::zero() },
            |x, _| if x > T::zero() { T::one() } else { T::zero() },
        )
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor<T> {
        let s = T::of(slope);
        self.map(
            move |x| if x > T::zero() { x } else { x * s },
            move |x, _| if x > T::zero() { T::one() } else { s },
        )
    }

    pub fn sigmoid(&self) -> Tensor<T> {
        self.map(
            |x| T::one() / (T::one() + (-x).exp()),
            |_, y| y * (T::one() - y),
        )
    }

    pub fn tanh(&self) -> Tensor<T> {
        self.map(|x| x.tanh(), |_, y| T::one() - y * y)
    }

    pub fn sin(&self) -> Tensor<T> {
        self.map(|x| x.sin(), |x, _| x.cos())
    }

    pub fn cos(&self) -> Tensor<T> {
        self.map(|x| x.cos(), |x, _| -x.sin())
    }

    /// Clamps into `[lo, hi]`; gradient passes only strictly inside the range.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor<T> {
        let (lo, hi) = (T::of(lo), T::of(hi));
        self.map(
            move |x| x.max(lo).min(hi),
            move |x, _| if x > lo && x < hi { T::one() } else { T::zero() },
        )
    }

    pub fn add_scalar(&self, c: f64) -> Tensor<T> {
        let c = T::of(c);
        self.map(move |x| x + c, |_, _| T::one())
    }

    pub fn mul_scalar(&self, c: f64) -> Tensor<T> {
        let c = T::of(c);
        self.map(move |x| x * c, move |_, _| c)
    }

    pub fn add(&self, other: &Tensor<T>) -> Tensor<T> {
        binary(self, other, |a, b| a + b, |g, _, _| g, |g, _, _| g)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Tensor<T> {
        binary(self, other, |a, b| a - b, |g, _, _| g, |g, _, _| -g)
    }

    pub fn mul(&self, other: &Tensor<T>) -> Tensor<T> {
        binary(self, other, |a, b| a * b, |g, _, b| g * b, |g, a, _| g * a)
    }

    pub fn div(&self, other: &Tensor<T>) -> Tensor<T> {
        binary(
            self,
            other,
            |a, b| a / b,
            |g, _, b| g / b,
            |g, a, b| -g * a / (b * b),
        )
    }
}

fn sign<T: Element>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Broadcasting binary op. `da(g, a, b)` / `db(g, a, b)` give the local
/// gradient contributions at each output element.
fn binary<T: Element>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
    da: fn(T, T, T) -> T,
    db: fn(T, T, T) -> T,
) -> Tensor<T> {
    let out_shape = broadcast_shape(a.shape(), b.shape());
    let data = broadcast_binary(a.data(), a.shape(), b.data(), b.shape(), &out_shape, f);
    let shape_for_bw = out_shape.clone();
    Tensor::from_op(
        data,
        out_shape,
        vec![a.clone(), b.clone()],
        Box::new(move |g, _, parents, needs| {
            let (a, b) = (&parents[0], &parents[1]);
            let local = |d: fn(T, T, T) -> T, target: &[usize]| {
                if a.shape() == shape_for_bw.as_slice() && b.shape() == shape_for_bw.as_slice() {
                    let (ad, bd) = (a.data(), b.data());
                    return (0..g.len()).map(|i| d(g[i], ad[i], bd[i])).collect();
                }
                let mut full = Vec::with_capacity(g.len());
                let mut k = 0;
                let sa = crate::shape::broadcast_strides(a.shape(), &shape_for_bw);
                let sb = crate::shape::broadcast_strides(b.shape(), &shape_for_bw);
                let (ad, bd) = (a.data(), b.data());
                crate::shape::for_each_broadcast(&shape_for_bw, &sa, &sb, |_, oa, ob| {
                    full.push(d(g[k], ad[oa], bd[ob]));
                    k += 1;
                });
                sum_to_shape(&full, &shape_for_bw, target)
            };
            vec![
                needs[0].then(|| local(da, a.shape())),
                needs[1].then(|| local(db, b.shape())),
            ]
        }),
    )
}
