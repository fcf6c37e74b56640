use adasr_core::metrics::{
    aed, akd, evaluate, fid, mse, psnr, psnr_from_mse, ssim, ssim_gray, Animator, EmbeddingOracle, EvalItem,
    KeypointOracle, Oracles, PyramidEmbedding, PSNR_CAP_DB,
};
use adasr_core::{Error, Frame, FrameSequence, Result};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_frame(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Frame {
    Frame::from_fn(h, w, |_, _, _| rng.gen()).unwrap()
}

fn noisy(f: &Frame, amp: f32, rng: &mut ChaCha8Rng) -> Frame {
    Frame::from_fn(f.height(), f.width(), |c, y, x| (f.get(c, y, x) + rng.gen_range(-amp..=amp)).clamp(0.0, 1.0)).unwrap()
}

#[test]
fn psnr_closed_forms() {
    let a = Frame::filled(16, 16, [0.0; 3]).unwrap();
    let b = Frame::filled(16, 16, [0.5; 3]).unwrap();
    assert!((psnr(&a, &b).unwrap() - 6.0206).abs() < 1e-4);
    assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
    let c = Frame::filled(16, 32, [0.5; 3]).unwrap();
    assert!(matches!(psnr(&a, &c), Err(Error::Shape(_))));
}

#[test]
fn psnr_matches_direct_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_frame(32, 16, &mut rng);
    let b = noisy(&a, 0.1, &mut rng);
    let n = a.data().len() as f64;
    let direct: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / n;
    assert!((psnr(&a, &b).unwrap() - 10.0 * (1.0 / direct).log10()).abs() < 1e-6);
    assert!((mse(&a, &b).unwrap() - direct).abs() < 1e-15);
}

#[test]
fn psnr_decreases_with_noise_amplitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = Frame::from_fn(32, 32, |_, _, _| rng.gen_range(0.25..0.75)).unwrap();
    // one shared noise pattern scaled up keeps the comparison strict
    let pattern: Vec<f32> = (0..a.data().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut last = f64::INFINITY;
    for amp in [0.01f32, 0.02, 0.05, 0.1, 0.2] {
        let b = Frame::new(32, 32, a.data().iter().zip(&pattern).map(|(v, p)| v + amp * p).collect()).unwrap();
        let p = psnr(&a, &b).unwrap();
        assert!(p < last, "{amp}: {p} !< {last}");
        last = p;
    }
    assert_eq!(psnr_from_mse(0.0), PSNR_CAP_DB);
}

#[test]
fn ssim_self_and_anticorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_frame(16, 32, &mut rng);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    let bin: Vec<f64> = (0..32 * 32).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect();
    let inv: Vec<f64> = bin.iter().map(|v| 1.0 - v).collect();
    assert!(ssim_gray(&bin, &inv, 32, 32).unwrap() < 0.0);
}

#[test]
fn ssim_too_small_is_config_error() {
    let a = vec![0.3; 10 * 32];
    assert!(matches!(ssim_gray(&a, &a, 10, 32), Err(Error::Config { .. })));
}

/// Direct 2-D window sums with an unnormalized-then-normalized kernel built
/// independently of the library.
fn reference_ssim(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    let n = 11usize;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (dy, dx) = (i as f64 - 5.0, j as f64 - 5.0);
            k[i * n + j] = (-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5)).exp();
        }
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y in 0..=h - n {
        for x in 0..=w - n {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let (p, q, wt) = (a[(y + i) * w + x + j], b[(y + i) * w + x + j], k[i * n + j]);
                    ma += wt * p;
                    mb += wt * q;
                    saa += wt * p * p;
                    sbb += wt * q * q;
                    sab += wt * p * q;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..3 {
        let (h, w) = (rng.gen_range(11..30), rng.gen_range(11..30));
        let a: Vec<f64> = (0..h * w).map(|_| rng.gen()).collect();
        let b: Vec<f64> = a.iter().map(|v| (v + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0)).collect();
        let got = ssim_gray(&a, &b, h, w).unwrap();
        let want = reference_ssim(&a, &b, h, w);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

fn gaussian_rows(n: usize, d: usize, shift: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|i| rng.sample::<f64, _>(StandardNormal) + shift[i]).collect())
        .collect()
}

#[test]
fn fid_identical_sets_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = gaussian_rows(200, 6, &[0.0; 6], &mut rng);
    assert!(fid(&x, &x).unwrap().abs() < 1e-6);
}

#[test]
fn fid_mean_shift_matches_squared_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let v = [1.0, -2.0, 0.5, 1.5];
    let expected: f64 = v.iter().map(|x| x * x).sum();
    let a = gaussian_rows(10_000, 4, &[0.0; 4], &mut rng);
    let b = gaussian_rows(10_000, 4, &v, &mut rng);
    let got = fid(&a, &b).unwrap();
    assert!((got - expected).abs() / expected < 0.05, "{got} vs {expected}");
}

#[test]
fn fid_symmetric_and_shape_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = gaussian_rows(300, 5, &[0.0; 5], &mut rng);
    let b = gaussian_rows(250, 5, &[0.3, 0.0, -0.2, 0.0, 0.1], &mut rng);
    assert!((fid(&a, &b).unwrap() - fid(&b, &a).unwrap()).abs() < 1e-6);
    let c = gaussian_rows(10, 4, &[0.0; 4], &mut rng);
    assert!(matches!(fid(&a, &c), Err(Error::Shape(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn fid_invariant_under_row_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = gaussian_rows(40, 3, &[0.0; 3], &mut rng);
        let mut b = gaussian_rows(40, 3, &[0.5, 0.0, 0.0], &mut rng);
        let before = fid(&a, &b).unwrap();
        use rand::seq::SliceRandom;
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        prop_assert!((fid(&a, &b).unwrap() - before).abs() < 1e-8);
    }

    #[test]
    fn psnr_and_ssim_are_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_frame(16, 16, &mut rng);
        let b = random_frame(16, 16, &mut rng);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&a, &b).unwrap());
        prop_assert_eq!(ssim(&a, &b).unwrap(), ssim(&a, &b).unwrap());
        let s = ssim(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }
}

/// Landmarks read off the top-left pixel: `(64 r + j, 64 g + 2 j)`.
struct PixelLandmarks;

impl KeypointOracle for PixelLandmarks {
    fn landmarks(&self, f: &Frame) -> Result<Vec<[f64; 2]>> {
        let (r, g) = (f.get(0, 0, 0) as f64 * 64.0, f.get(1, 0, 0) as f64 * 64.0);
        Ok((0..4).map(|j| [r + j as f64, g + 2.0 * j as f64]).collect())
    }
}

/// Mean pixel value per channel.
struct MeanColor;

impl EmbeddingOracle for MeanColor {
    fn embed(&self, f: &Frame) -> Result<Vec<f64>> {
        let plane = f.height() * f.width();
        Ok((0..3).map(|c| f.data()[c * plane..(c + 1) * plane].iter().map(|v| *v as f64).sum::<f64>() / plane as f64).collect())
    }
}

fn constant_clip(colors: &[[f32; 3]]) -> FrameSequence {
    FrameSequence::new(colors.iter().map(|c| Frame::filled(16, 16, *c).unwrap()).collect(), 25.0).unwrap()
}

#[test]
fn akd_closed_forms() {
    // multiples of 1/64 keep pixel positions exact in f32
    let base = [16.0 / 64.0, 20.0 / 64.0, 0.0];
    let shifted = [19.0 / 64.0, 24.0 / 64.0, 0.0];
    let reference = constant_clip(&[base, base, base, base]);
    assert_eq!(akd(&PixelLandmarks, &reference, &reference).unwrap(), 0.0);
    let all = constant_clip(&[shifted, shifted, shifted, shifted]);
    assert_eq!(akd(&PixelLandmarks, &all, &reference).unwrap(), 5.0);
    let half = constant_clip(&[shifted, base, shifted, base]);
    assert_eq!(akd(&PixelLandmarks, &half, &reference).unwrap(), 2.5);
    let short = constant_clip(&[base]);
    assert!(matches!(akd(&PixelLandmarks, &short, &reference), Err(Error::Shape(_))));
}

#[test]
fn aed_closed_form_and_order_invariance() {
    let g = constant_clip(&[[0.2, 0.3, 0.4], [0.5, 0.5, 0.5], [0.1, 0.1, 0.1]]);
    assert_eq!(aed(&MeanColor, &g, &g).unwrap(), 0.0);
    let r = constant_clip(&[[0.3, 0.4, 0.5], [0.6, 0.6, 0.6], [0.2, 0.2, 0.2]]);
    let got = aed(&MeanColor, &g, &r).unwrap();
    assert!((got - 3f64.sqrt() * 0.1).abs() < 1e-6, "{got}");
    let perm = |s: &FrameSequence| {
        let f = s.frames();
        FrameSequence::new(vec![f[2].clone(), f[0].clone(), f[1].clone()], 25.0).unwrap()
    };
    let r2 = constant_clip(&[[0.9, 0.3, 0.4], [0.5, 0.0, 0.5], [0.1, 0.7, 0.1]]);
    let a = aed(&MeanColor, &g, &r2).unwrap();
    let b = aed(&MeanColor, &perm(&g), &perm(&r2)).unwrap();
    assert!((a - b).abs() < 1e-12);
}

/// Returns the reference clip it was built with, ignoring its inputs.
struct Replay;

impl Animator for Replay {
    fn animate(&self, _source: &Frame, driving: &FrameSequence) -> Result<FrameSequence> {
        Ok(driving.clone())
    }
}

fn items(rng: &mut ChaCha8Rng) -> Vec<EvalItem> {
    (0..2)
        .map(|_| {
            let frames: Vec<Frame> = (0..3).map(|_| random_frame(32, 32, rng)).collect();
            let clip = FrameSequence::new(frames, 25.0).unwrap();
            EvalItem { source: clip.frames()[0].clone(), driving: clip.clone(), reference: clip }
        })
        .collect()
}

#[test]
fn evaluate_identity_stub_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data = items(&mut rng);
    let oracles = Oracles {
        keypoints: Some(Box::new(PixelLandmarks)),
        identity: Some(Box::new(MeanColor)),
        distribution: Box::new(PyramidEmbedding::new()),
    };
    let report = evaluate(&Replay, &data, &oracles).unwrap();
    assert_eq!(report.psnr_db, PSNR_CAP_DB);
    assert!((report.ssim - 1.0).abs() < 1e-9);
    assert!(report.fid.abs() < 1e-6, "{}", report.fid);
    assert_eq!(report.akd, Some(0.0));
    assert_eq!(report.aed, Some(0.0));
    assert_eq!(report.sample_count, 6);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["akd", "psnr_db", "ssim", "fid", "aed"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn evaluate_without_oracles_reports_absent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = items(&mut rng);
    let oracles = Oracles { keypoints: None, identity: None, distribution: Box::new(MeanColor) };
    let report = evaluate(&Replay, &data, &oracles).unwrap();
    assert_eq!(report.akd, None);
    assert_eq!(report.aed, None);
    assert!(matches!(evaluate(&Replay, &[], &oracles), Err(Error::Config { .. })));
}
