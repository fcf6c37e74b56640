//! Central finite-difference checks of analytic gradients.

use rand::Rng;

use crate::Tensor;

/// Outcome of comparing analytic and numeric partial derivatives.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub passed: usize,
    pub worst_relative_error: f64,
}

impl GradCheckReport {
    pub fn pass_fraction(&self) -> f64 {
        if self.checked == 0 {
            return 0.0;
        }
        self.passed as f64 / self.checked as f64
    }
}

/// Relative error with an absolute floor so coordinates whose true
/// derivative is zero are judged on absolute agreement.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Samples `samples` coordinates uniformly over all `inputs` and compares the
/// backward-pass gradient with `(f(x + h) - f(x - h)) / 2h`.
pub fn check<F>(
    f: F,
    inputs: &[Tensor<f64>],
    h: f64,
    samples: usize,
    tolerance: f64,
    rng: &mut impl Rng,
) -> GradCheckReport
where
    F: Fn(&[Tensor<f64>]) -> Tensor<f64>,
{
    let tracked: Vec<Tensor<f64>> = inputs.iter().map(|t| t.detach().requires_grad()).collect();
    let grads = f(&tracked).backward();
    let analytic: Vec<Vec<f64>> = tracked
        .iter()
        .map(|t| grads.get(t).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.numel()]))
        .collect();
    let total: usize = inputs.iter().map(|t| t.numel()).sum();
    assert!(total > 0, "nothing to check");
    let mut report = GradCheckReport { checked: 0, passed: 0, worst_relative_error: 0.0 };
    for _ in 0..samples {
        let mut flat = rng.gen_range(0..total);
        let mut which = 0;
        while flat >= inputs[which].numel() {
            flat -= inputs[which].numel();
            which += 1;
        }
        let eval = |delta: f64| {
            let perturbed: Vec<Tensor<f64>> = inputs
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    if i != which {
                        return t.detach();
                    }
                    let mut v = t.to_vec();
                    v[flat] += delta;
                    Tensor::from_vec(v, t.shape())
                })
                .collect();
            crate::no_grad(|| f(&perturbed).item())
        };
        let numeric = (eval(h) - eval(-h)) / (2.0 * h);
        let err = relative_error(analytic[which][flat], numeric, 1e-6);
        report.checked += 1;
        if err < tolerance {
            report.passed += 1;
        }
        report.worst_relative_error = report.worst_relative_error.max(err);
    }
    report
}
