use std::collections::BTreeMap;
use std::fmt::Write as _;

use adasr_tensor::{Element, Tensor};
use serde::Serialize;

use super::LossWeights;
use crate::{Error, Result};

/// The weighted generator-side loss families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Keypoint,
    HeadPose,
    Expression,
    Equivariance,
    Deformation,
    Perceptual,
    Adversarial,
    FeatureMatching,
}

impl LossFamily {
    pub const ALL: [LossFamily; 8] = [
        LossFamily::Keypoint,
        LossFamily::HeadPose,
        LossFamily::Expression,
        LossFamily::Equivariance,
        LossFamily::Deformation,
        LossFamily::Perceptual,
        LossFamily::Adversarial,
        LossFamily::FeatureMatching,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Keypoint => "keypoint",
            LossFamily::HeadPose => "head_pose",
            LossFamily::Expression => "expression",
            LossFamily::Equivariance => "equivariance",
            LossFamily::Deformation => "deformation",
            LossFamily::Perceptual => "perceptual",
            LossFamily::Adversarial => "adversarial",
            LossFamily::FeatureMatching => "feature_matching",
        }
    }

    pub fn weight(self, w: &LossWeights) -> f64 {
        match self {
            LossFamily::Keypoint => w.keypoint,
            LossFamily::HeadPose => w.head_pose,
            LossFamily::Expression => w.expression,
            LossFamily::Equivariance => w.equivariance,
            LossFamily::Deformation => w.deformation,
            LossFamily::Perceptual => w.perceptual,
            LossFamily::Adversarial => w.adversarial,
            LossFamily::FeatureMatching => w.feature_matching,
        }
    }
}

/// Unweighted family values; `None` marks a family that could not be
/// computed (for example pose terms without a pose oracle).
pub type LossTerms<T> = BTreeMap<LossFamily, Option<Tensor<T>>>;

/// Per-family values, weighted total and the discriminator objective.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossReport {
    pub values: BTreeMap<LossFamily, f64>,
    pub missing: Vec<LossFamily>,
    pub total: f64,
    /// Discriminator hinge loss, when a discriminator step ran.
    pub discriminator: Option<f64>,
}

impl LossReport {
    pub fn value(&self, family: LossFamily) -> Option<f64> {
        self.values.get(&family).copied()
    }

    pub fn csv_header() -> String {
        let mut s = String::from("step");
        for f in LossFamily::ALL {
            s.push(',');
            s.push_str(f.name());
        }
        s.push_str(",total,discriminator");
        s
    }

    /// Missing families are written as empty cells.
    pub fn csv_row(&self, step: u64) -> String {
        let mut s = step.to_string();
        for f in LossFamily::ALL {
            s.push(',');
            if let Some(v) = self.value(f) {
                write!(s, "{v}").expect("write to string");
            }
        }
        write!(s, ",{}", self.total).expect("write to string");
        s.push(',');
        if let Some(d) = self.discriminator {
            write!(s, "{d}").expect("write to string");
        }
        s
    }

    /// Element-wise mean of several reports (families present in all).
    pub fn average(reports: &[LossReport]) -> Option<LossReport> {
        let n = reports.len() as f64;
        let first = reports.first()?;
        let mut out = first.clone();
        for (f, v) in out.values.iter_mut() {
            *v = reports.iter().map(|r| r.value(*f).unwrap_or(0.0)).sum::<f64>() / n;
        }
        out.total = reports.iter().map(|r| r.total).sum::<f64>() / n;
        out.discriminator = first.discriminator.map(|_| reports.iter().filter_map(|r| r.discriminator).sum::<f64>() / n);
        Some(out)
    }
}

/// Weighted sum of the available families. Absent families contribute 0
/// and are listed in [`LossReport::missing`]; NaN in any family is an
/// error naming it.
pub fn total_loss<T: Element>(terms: &LossTerms<T>, weights: &LossWeights) -> Result<(Tensor<T>, LossReport)> {
    let mut total = Tensor::scalar(T::zero());
    let mut report = LossReport { values: BTreeMap::new(), missing: Vec::new(), total: 0.0, discriminator: None };
    for family in LossFamily::ALL {
        match terms.get(&family) {
            Some(Some(t)) => {
                if t.numel() != 1 {
                    return Err(Error::Shape(format!("{} loss is not a scalar: {:?}", family.name(), t.shape())));
                }
                let v = t.item().as_f64();
                if !v.is_finite() {
                    return Err(Error::Numeric(format!("{} loss is {v}", family.name())));
                }
                report.values.insert(family, v);
                let w = family.weight(weights);
                if w != 0.0 {
                    total = total.add(&t.reshape(&[]).mul_scalar(w));
                }
            }
            _ => report.missing.push(family),
        }
    }
    report.total = total.item().as_f64();
    Ok((total, report))
}
