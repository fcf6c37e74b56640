use adasr_core::losses::terms;
use adasr_core::losses::{
    adversarial_losses, deformation_loss, equivariance_loss, expression_loss, keypoint_loss, perceptual_loss,
    pose_loss, total_loss, LossFamily, LossReport, LossTerms, LossWeights, ThinPlateSpline, CONTROL_GRID,
    CONTROL_SIGMA,
};
use adasr_core::motion_field::{canonical_to_posed, Keypoint, KeypointSet, KeypointTensors, MotionParams, MotionTensors};
use adasr_core::networks::{
    soft_argmax, DiscriminatorOutput, FeatureExtractor, KeypointDetector, MultiScaleDiscriminator,
};
use adasr_core::{Error, Frame};
use adasr_tensor::{gradcheck, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 200;
const H: f64 = 1e-5;
const TOL: f64 = 1e-2;
const MIN_PASS: f64 = 0.95;

fn random(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec((0..n).map(|_| rng.gen_range(lo..hi)).collect(), shape)
}

fn assert_gradients(name: &str, f: impl Fn(&[Tensor<f64>]) -> Tensor<f64>, inputs: &[Tensor<f64>], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = gradcheck::check(f, inputs, H, SAMPLES, TOL, &mut rng);
    assert!(
        r.pass_fraction() >= MIN_PASS,
        "{name}: {}/{} coordinates within tolerance (worst {:.3e})",
        r.passed,
        r.checked,
        r.worst_relative_error
    );
}

fn kp(points: &[[f64; 3]]) -> KeypointSet {
    KeypointSet::new(points.iter().map(|p| Keypoint::new(p[0], p[1], p[2])).collect(), None).unwrap()
}

fn motion(euler: [f64; 3], k: usize, delta: f64) -> MotionParams {
    MotionParams::from_euler(euler, [0.0; 3], vec![[delta; 3]; k]).unwrap()
}

#[test]
fn keypoint_loss_closed_forms() {
    let a = kp(&[[0.1, 0.2, 0.3], [-0.5, 0.0, 0.1]]);
    assert_eq!(keypoint_loss(&a, &a).unwrap(), 0.0);
    let p = kp(&[[0.0, 0.0, 0.0]]);
    let q = kp(&[[3.0, 4.0, 0.0]]);
    assert!((keypoint_loss(&p, &q).unwrap() - 5.0).abs() < 1e-12);
    let two = kp(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    let moved = kp(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    assert!((keypoint_loss(&two, &moved).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(keypoint_loss(&p, &two), Err(Error::Shape(_))));
    assert_eq!(keypoint_loss(&a, &moved).unwrap(), keypoint_loss(&moved, &a).unwrap());
}

#[test]
fn pose_and_expression_closed_forms() {
    let a = motion([0.1, -0.2, 0.3], 15, 0.0);
    assert_eq!(pose_loss(&a, &a).unwrap(), 0.0);
    assert_eq!(expression_loss(&a, &a).unwrap(), 0.0);
    let b = motion([0.3, -0.2, 0.3], 15, 0.0);
    assert!((pose_loss(&a, &b).unwrap() - 0.2 / 3.0).abs() < 1e-9);
    let mut c = a.clone();
    c.deltas[7][1] = 0.3;
    assert!((expression_loss(&a, &c).unwrap() - 0.3 / 45.0).abs() < 1e-12);
}

#[test]
fn deformation_loss_closed_forms() {
    let canonical = kp(&[[0.1, 0.2, 0.0], [-0.3, 0.4, 0.2]]);
    let mp = motion([0.2, 0.1, -0.1], 2, 0.0);
    let posed = canonical_to_posed(&canonical, &mp).unwrap();
    assert!(deformation_loss(&canonical, &mp, &posed, 0.1).unwrap().abs() < 1e-12);
    // with deltas of 0.1 everywhere the detected set is the transformed set,
    // so only the prior remains
    let mp_delta = motion([0.2, 0.1, -0.1], 2, 0.1);
    let posed_delta = canonical_to_posed(&canonical, &mp_delta).unwrap();
    let lambda = 0.7;
    let v = deformation_loss(&canonical, &mp_delta, &posed_delta, lambda).unwrap();
    assert!((v - 0.1 * lambda).abs() < 1e-12, "{v}");
    let other = kp(&[[0.9, -0.9, 0.5], [0.0, 0.0, 0.0]]);
    assert!(deformation_loss(&canonical, &mp_delta, &other, lambda).unwrap() >= 0.0);
    assert!(matches!(deformation_loss(&canonical, &mp, &kp(&[[0.0; 3]]), 0.1), Err(Error::Shape(_))));
}

fn frame(seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::from_fn(32, 32, |_, _, _| rng.gen()).unwrap()
}

/// Detector for the equivariance checks: soft-argmax over the red channel,
/// cold enough that a unit-height blob swamps any constant background.
fn blob_detector(img: &Tensor<f64>) -> adasr_core::Result<Tensor<f64>> {
    let red = img.narrow(1, 0, 1);
    Ok(soft_argmax(&red, 0.01).0)
}

#[test]
fn equivariance_identity_is_exactly_zero_for_any_detector() {
    let det = KeypointDetector::new("kp", 5, 0.1, false);
    let mut store = ParamStore::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    det.register(&mut store, &mut rng);
    let learned = |img: &Tensor<f64>| Ok(det.forward(&store, img).keypoints.positions());
    for seed in 0..3 {
        let f = frame(seed);
        assert_eq!(equivariance_loss(learned, &f, &ThinPlateSpline::identity()).unwrap(), 0.0);
        assert_eq!(equivariance_loss(blob_detector, &f, &ThinPlateSpline::identity()).unwrap(), 0.0);
    }
}

#[test]
fn covariant_detector_under_translation_is_zero() {
    // a Gaussian blob well inside the image; shifting by whole pixels keeps
    // the sampled image exact
    let blob = Frame::from_fn(32, 32, |c, y, x| {
        let d2 = (x as f32 - 15.0).powi(2) + (y as f32 - 13.0).powi(2);
        if c == 0 {
            (-d2 / 4.0).exp()
        } else {
            0.0
        }
    })
    .unwrap();
    let step = 2.0 / 31.0;
    for (dx, dy) in [(2.0, 0.0), (-3.0, 1.0), (1.0, -2.0)] {
        let tps = ThinPlateSpline::translation(dx * step, dy * step);
        let v = equivariance_loss(blob_detector, &blob, &tps).unwrap();
        assert!(v < 1e-9, "shift ({dx}, {dy}): {v}");
    }
}

#[test]
fn random_detector_random_warp_is_positive() {
    let det = KeypointDetector::new("kp", 5, 0.1, false);
    let mut store = ParamStore::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    det.register(&mut store, &mut rng);
    let learned = |img: &Tensor<f64>| Ok(det.forward(&store, img).keypoints.positions());
    let f = frame(5);
    for draw in 0..100 {
        let tps = ThinPlateSpline::random(CONTROL_GRID, CONTROL_SIGMA, &mut rng).unwrap();
        let v = equivariance_loss(learned, &f, &tps).unwrap();
        assert!(v > 0.0, "draw {draw}: {v}");
    }
}

#[test]
fn perceptual_loss_properties() {
    let ex = FeatureExtractor::<f32>::new();
    let a = frame(1);
    let b = frame(2);
    assert_eq!(perceptual_loss(&ex, &a, &a).unwrap(), 0.0);
    assert_eq!(perceptual_loss(&ex, &a, &b).unwrap(), perceptual_loss(&ex, &b, &a).unwrap());
    // pred = target + eps * noise, noise kept away from the [0, 1] clamp
    let target = Frame::from_fn(32, 32, |c, y, x| 0.3 + 0.4 * ((c + 2 * y + 3 * x) % 11) as f32 / 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise: Vec<f32> = (0..3 * 32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let losses: Vec<f64> = [0.01f32, 0.05, 0.1]
        .iter()
        .map(|eps| {
            let data = target.data().iter().zip(&noise).map(|(t, n)| t + eps * n).collect();
            perceptual_loss(&ex, &Frame::new(32, 32, data).unwrap(), &target).unwrap()
        })
        .collect();
    assert!(losses[0] < losses[1] && losses[1] < losses[2], "{losses:?}");
    assert!(matches!(perceptual_loss(&ex, &a, &Frame::filled(48, 48, [0.0; 3]).unwrap()), Err(Error::Shape(_))));
}

fn constant_logits(v: f64) -> DiscriminatorOutput<f64> {
    DiscriminatorOutput {
        logits: vec![Tensor::full(v, &[2, 1, 4, 4]), Tensor::full(v, &[2, 1, 2, 2])],
        features: vec![vec![Tensor::full(v, &[2, 3, 4, 4])], vec![Tensor::full(v, &[2, 3, 2, 2])]],
    }
}

#[test]
fn hinge_closed_forms() {
    let zero = constant_logits(0.0);
    assert_eq!(terms::discriminator_hinge_loss(&zero, &zero).item(), 2.0);
    assert_eq!(terms::generator_hinge_loss(&zero).item(), 0.0);
    let d = terms::discriminator_hinge_loss(&constant_logits(2.0), &constant_logits(-2.0)).item();
    assert_eq!(d, 0.0);
    let disc = MultiScaleDiscriminator::new("d", 2);
    let mut store = ParamStore::<f32>::new();
    disc.register(&mut store, &mut ChaCha8Rng::seed_from_u64(0));
    let a = frame(7);
    let same = adversarial_losses(&disc, &store, &a, &a).unwrap();
    assert_eq!(same.feature_matching, 0.0);
    let other = adversarial_losses(&disc, &store, &a, &frame(8)).unwrap();
    assert!(other.feature_matching > 0.0);
}

#[test]
fn total_loss_is_linear_and_flags_missing() {
    let w = LossWeights::default();
    let mut terms: LossTerms<f64> = LossTerms::new();
    for f in LossFamily::ALL {
        terms.insert(f, Some(Tensor::scalar(0.0)));
    }
    assert_eq!(total_loss(&terms, &w).unwrap().1.total, 0.0);
    let mut single: LossTerms<f64> = LossTerms::new();
    single.insert(LossFamily::Perceptual, Some(Tensor::scalar(1.0)));
    single.insert(LossFamily::HeadPose, None);
    let (_, r) = total_loss(&single, &w).unwrap();
    assert_eq!(r.total, 10.0);
    assert!(r.missing.contains(&LossFamily::HeadPose) && r.missing.contains(&LossFamily::Keypoint));
    assert_eq!(r.value(LossFamily::HeadPose), None);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mixed: LossTerms<f64> = LossTerms::new();
    for f in LossFamily::ALL {
        mixed.insert(f, Some(Tensor::scalar(rng.gen_range(0.0..3.0))));
    }
    let t1 = total_loss(&mixed, &w).unwrap().1.total;
    let t2 = total_loss(&mixed, &w.scaled(2.0)).unwrap().1.total;
    assert!((t2 - 2.0 * t1).abs() < 1e-12);

    mixed.insert(LossFamily::Equivariance, Some(Tensor::scalar(f64::NAN)));
    match total_loss(&mixed, &w) {
        Err(Error::Numeric(msg)) => assert!(msg.contains("equivariance"), "{msg}"),
        other => panic!("expected a numeric error, got {other:?}"),
    }
}

#[test]
fn csv_rows_match_header() {
    let mut terms: LossTerms<f64> = LossTerms::new();
    terms.insert(LossFamily::Keypoint, Some(Tensor::scalar(0.5)));
    let (_, mut r) = total_loss(&terms, &LossWeights::default()).unwrap();
    r.discriminator = Some(1.5);
    let header = LossReport::csv_header();
    let row = r.csv_row(3);
    assert_eq!(header.split(',').count(), row.split(',').count());
    assert!(row.starts_with("3,0.5,,"));
}

// gradient checks: float64 analytic gradients vs central differences

fn random_keypoints(b: usize, k: usize, rng: &mut ChaCha8Rng) -> (Tensor<f64>, Tensor<f64>) {
    (random(&[b, k, 3], -0.8, 0.8, rng), random(&[b, k, 2, 2], -1.0, 1.0, rng).add(&Tensor::from_f64s(&[1.5, 0.0, 0.0, 1.5], &[2, 2])))
}

#[test]
fn keypoint_pose_expression_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = random(&[2, 5, 3], -1.0, 1.0, &mut rng);
    let b = random(&[2, 5, 3], -1.0, 1.0, &mut rng);
    assert_gradients(
        "keypoint",
        |t| {
            let ka = KeypointTensors { points: t[0].clone(), jacobians: None };
            let kb = KeypointTensors { points: t[1].clone(), jacobians: None };
            terms::keypoint_loss(&ka, &kb).unwrap()
        },
        &[a, b],
        11,
    );
    let ea = random(&[3, 3], -1.0, 1.0, &mut rng);
    let eb = random(&[3, 3], -1.0, 1.0, &mut rng);
    assert_gradients("head pose", |t| terms::pose_loss(&t[0], &t[1]).unwrap(), &[ea, eb], 12);
    let da = random(&[2, 15, 3], -1.0, 1.0, &mut rng);
    let db = random(&[2, 15, 3], -1.0, 1.0, &mut rng);
    assert_gradients("expression", |t| terms::expression_loss(&t[0], &t[1]).unwrap(), &[da, db], 13);
}

#[test]
fn deformation_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (canon, jc) = random_keypoints(2, 4, &mut rng);
    let (det, jd) = random_keypoints(2, 4, &mut rng);
    let euler = random(&[2, 3], -0.6, 0.6, &mut rng);
    let trans = random(&[2, 3], -0.3, 0.3, &mut rng);
    let deltas = random(&[2, 4, 3], -0.2, 0.2, &mut rng);
    assert_gradients(
        "deformation",
        |t| {
            let c = KeypointTensors { points: t[0].clone(), jacobians: Some(t[1].clone()) };
            let d = KeypointTensors { points: t[2].clone(), jacobians: Some(t[3].clone()) };
            let mp = MotionTensors {
                rotation: adasr_core::motion_field::batched::rotation_from_euler(&t[4]),
                translation: t[5].clone(),
                deltas: t[6].clone(),
                euler: Some(t[4].clone()),
            };
            terms::deformation_loss(&c, &mp, &d, 0.1).unwrap()
        },
        &[canon, jc, det, jd, euler, trans, deltas],
        21,
    );
}

#[test]
fn equivariance_gradients() {
    let det = KeypointDetector::new("kp", 3, 0.1, false);
    let mut store = ParamStore::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    det.register(&mut store, &mut rng);
    let tps = ThinPlateSpline::random(CONTROL_GRID, CONTROL_SIGMA, &mut rng).unwrap();
    let images = random(&[1, 3, 16, 16], 0.0, 1.0, &mut rng);
    // gradient with respect to the detector's score head and the image
    let w = store.get("kp.heat.weight").detach();
    assert_gradients(
        "equivariance",
        |t| {
            let mut s = store.clone();
            s.insert_tensor("kp.heat.weight", t[1].clone());
            let detect = |img: &Tensor<f64>| Ok(det.forward(&s, img).keypoints.positions());
            terms::equivariance_loss(detect, &t[0], &tps).unwrap()
        },
        &[images, w],
        31,
    );
}

#[test]
fn perceptual_gradients() {
    let ex = FeatureExtractor::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let pred = random(&[1, 3, 16, 16], 0.0, 1.0, &mut rng);
    let target = random(&[1, 3, 16, 16], 0.0, 1.0, &mut rng);
    assert_gradients("perceptual", |t| terms::perceptual_loss(&ex, &t[0], &t[1]).unwrap(), &[pred, target], 41);
}

#[test]
fn adversarial_and_feature_matching_gradients() {
    let disc = MultiScaleDiscriminator::new("d", 2);
    let mut store = ParamStore::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    disc.register(&mut store, &mut rng);
    let real = random(&[1, 3, 16, 16], 0.0, 1.0, &mut rng);
    let fake = random(&[1, 3, 16, 16], 0.0, 1.0, &mut rng);
    assert_gradients(
        "generator hinge",
        |t| terms::generator_hinge_loss(&disc.forward(&store, &t[0])),
        &[fake.clone()],
        51,
    );
    assert_gradients(
        "discriminator hinge",
        |t| terms::discriminator_hinge_loss(&disc.forward(&store, &t[0]), &disc.forward(&store, &t[1])),
        &[real.clone(), fake.clone()],
        52,
    );
    assert_gradients(
        "feature matching",
        |t| terms::feature_matching_loss(&disc.forward(&store, &real), &disc.forward(&store, &t[0])),
        &[fake],
        53,
    );
}
