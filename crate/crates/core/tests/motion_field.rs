use adasr_core::motion_field::{
    self, batched, canonical_to_posed, difference_heatmaps, gaussian_heatmap, posed_to_canonical,
    rotation_from_euler, sparse_motion, Keypoint, KeypointSet, KeypointTensors, MotionParams, IDENTITY2, IDENTITY3,
};
use adasr_tensor::{gradcheck, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coord(i: usize, n: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (n - 1) as f64
}

fn shift_flow(h: usize, w: usize, dx: i64, dy: i64) -> Tensor<f64> {
    let mut v = Vec::with_capacity(h * w * 2);
    for y in 0..h {
        for x in 0..w {
            v.push(coord(x, w) + 2.0 * dx as f64 / (w - 1) as f64);
            v.push(coord(y, h) + 2.0 * dy as f64 / (h - 1) as f64);
        }
    }
    Tensor::from_vec(v, &[h, w, 2])
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), shape)
}

#[test]
fn integer_shift_warp_matches_index_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (c, h, w) = (3, 9, 11);
    let feats = random_tensor(&[c, h, w], &mut rng);
    for dx in -2i64..=2 {
        for dy in -2i64..=2 {
            let out = motion_field::warp(&feats, &shift_flow(h, w, dx, dy)).unwrap();
            let (o, f) = (out.data(), feats.data());
            for ch in 0..c {
                for y in 0..h as i64 {
                    for x in 0..w as i64 {
                        let (sy, sx) = (y + dy, x + dx);
                        if sy < 0 || sx < 0 || sy >= h as i64 || sx >= w as i64 {
                            continue;
                        }
                        let got = o[(ch * h + y as usize) * w + x as usize];
                        let want = f[(ch * h + sy as usize) * w + sx as usize];
                        assert!((got - want).abs() <= 1e-6, "shift ({dx},{dy}) at ({x},{y}): {got} vs {want}");
                    }
                }
            }
        }
    }
}

#[test]
fn identity_and_constant_warps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let feats = random_tensor(&[2, 8, 8], &mut rng);
    let id = Tensor::<f64>::identity_grid(1, 8, 8).reshape(&[8, 8, 2]);
    let out = motion_field::warp(&feats, &id).unwrap();
    for (a, b) in out.data().iter().zip(feats.data()) {
        assert!((a - b).abs() <= 1e-6);
    }
    let constant = Tensor::<f64>::full(0.37, &[2, 8, 8]);
    let flow = random_tensor(&[8, 8, 2], &mut rng);
    for v in motion_field::warp(&constant, &flow).unwrap().data() {
        assert!((v - 0.37).abs() < 1e-12);
    }
    assert!(motion_field::warp(&feats, &Tensor::<f64>::zeros(&[8, 8, 3])).is_err());
}

#[test]
fn occlusion_scales_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let feats = random_tensor(&[3, 4, 4], &mut rng);
    let ones = motion_field::apply_occlusion(&feats, &Tensor::ones(&[4, 4])).unwrap();
    assert_eq!(ones.to_vec(), feats.to_vec());
    let zeros = motion_field::apply_occlusion(&feats, &Tensor::zeros(&[4, 4])).unwrap();
    assert!(zeros.data().iter().all(|&v| v == 0.0));
    let half = motion_field::apply_occlusion(&feats, &Tensor::full(0.5, &[1, 4, 4])).unwrap();
    for (a, b) in half.data().iter().zip(feats.data()) {
        assert_eq!(*a, b * 0.5);
    }
    assert!(motion_field::apply_occlusion(&feats, &Tensor::ones(&[5, 4])).is_err());
}

#[test]
fn dense_motion_closed_forms() {
    let (k1, h, w) = (6, 5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let flows = random_tensor(&[k1, h, w, 2], &mut rng);
    let equal = Tensor::<f64>::zeros(&[k1, h, w]);
    for v in motion_field::dense_motion_weights(&equal).data() {
        assert!((v - 1.0 / k1 as f64).abs() < 1e-12);
    }
    // saturated background logit selects the identity field
    let mut sat = vec![0.0; k1 * h * w];
    sat[..h * w].iter_mut().for_each(|v| *v = 50.0);
    let mut fields = flows.to_vec();
    let id = Tensor::<f64>::identity_grid(1, h, w).to_vec();
    fields[..h * w * 2].copy_from_slice(&id);
    let flow = motion_field::combine_dense_motion(
        &Tensor::from_vec(sat, &[k1, h, w]),
        &Tensor::from_vec(fields, &[k1, h, w, 2]),
    )
    .unwrap();
    for (a, b) in flow.data().iter().zip(&id) {
        assert!((a - b).abs() < 1e-6);
    }
    // two fields at equal weight average to identity + d/2
    let d = [0.3, -0.2];
    let shifted: Vec<f64> = id.chunks(2).flat_map(|p| [p[0] + d[0], p[1] + d[1]]).collect();
    let pair = Tensor::from_vec([id.clone(), shifted].concat(), &[2, h, w, 2]);
    let flow = motion_field::combine_dense_motion(&Tensor::zeros(&[2, h, w]), &pair).unwrap();
    for (i, v) in flow.data().iter().enumerate() {
        assert!((v - (id[i] + d[i % 2] / 2.0)).abs() < 1e-12);
    }
    let nan = Tensor::from_vec(vec![f64::NAN; k1 * h * w], &[k1, h, w]);
    assert!(motion_field::combine_dense_motion(&nan, &flows).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_weights_partition_unity(seed in any::<u64>(), k in prop::sample::select(vec![1usize, 5, 15])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = Tensor::<f32>::from_vec(
            (0..(k + 1) * 6 * 6).map(|_| rng.gen_range(-20.0f32..20.0)).collect(),
            &[k + 1, 6, 6],
        );
        let wts = motion_field::dense_motion_weights(&logits);
        for p in 0..36 {
            let s: f32 = (0..=k).map(|j| wts.data()[j * 36 + p]).sum();
            prop_assert!((s - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn posed_round_trip_recovers_canonical(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..k).map(|_| Keypoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5))).collect();
        let jac = (0..k).map(|_| [[rng.gen_range(0.5..1.5), rng.gen_range(-0.3..0.3)], [rng.gen_range(-0.3..0.3), rng.gen_range(0.5..1.5)]]).collect();
        let set = KeypointSet::new(pts, Some(jac)).unwrap();
        let euler = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mp = MotionParams::from_euler(euler, [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 0.1], vec![[0.0; 3]; k]).unwrap();
        let back = posed_to_canonical(&canonical_to_posed(&set, &mp).unwrap(), &mp).unwrap();
        for (a, b) in back.points.iter().zip(&set.points) {
            prop_assert!((a.x - b.x).abs() < 1e-5 && (a.y - b.y).abs() < 1e-5 && (a.depth - b.depth).abs() < 1e-5);
        }
        for (a, b) in back.jacobians.unwrap().iter().zip(set.jacobians.as_ref().unwrap()) {
            for i in 0..2 { for j in 0..2 { prop_assert!((a[i][j] - b[i][j]).abs() < 1e-5); } }
        }
    }
}

#[test]
fn canonical_to_posed_closed_forms() {
    let set = KeypointSet::new(vec![Keypoint::new(0.3, -0.4, 0.2), Keypoint::new(-0.1, 0.5, -0.3)], Some(vec![IDENTITY2; 2]))
        .unwrap();
    assert_eq!(canonical_to_posed(&set, &MotionParams::identity(2)).unwrap(), set);

    let origin = KeypointSet::new(vec![Keypoint::new(0.0, 0.0, 0.0)], None).unwrap();
    let shift = MotionParams::new(IDENTITY3, [0.5, 0.0, 0.0], vec![[0.0; 3]]).unwrap();
    let moved = canonical_to_posed(&origin, &shift).unwrap();
    assert_eq!(moved.points[0], Keypoint::new(0.5, 0.0, 0.0));

    let unit_x = KeypointSet::new(vec![Keypoint::new(1.0, 0.0, 0.0)], None).unwrap();
    let quarter = MotionParams::new(rotation_from_euler(std::f64::consts::FRAC_PI_2, 0.0, 0.0), [0.0; 3], vec![[0.0; 3]])
        .unwrap();
    let p = canonical_to_posed(&unit_x, &quarter).unwrap().points[0];
    assert!(p.x.abs() < 1e-6 && (p.y - 1.0).abs() < 1e-6 && p.depth.abs() < 1e-6);

    let skew = [[1.0, 0.2, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    assert!(MotionParams::new(skew, [0.0; 3], vec![[0.0; 3]]).is_err());
    assert!(canonical_to_posed(&set, &MotionParams::identity(3)).is_err());
}

#[test]
fn sparse_motion_cases() {
    let (h, w) = (6, 7);
    let id = Tensor::<f64>::identity_grid(1, h, w).to_vec();
    let kp = KeypointSet::new(
        vec![Keypoint::new(0.3, -0.2, 0.1), Keypoint::new(-0.5, 0.4, 0.0), Keypoint::new(0.0, 0.9, 0.3)],
        Some(vec![IDENTITY2; 3]),
    )
    .unwrap();
    let fields = sparse_motion(&kp, &kp, (h, w)).unwrap();
    assert_eq!(fields.shape(), &[4, h, w, 2]);
    for f in fields.data().chunks(h * w * 2) {
        assert_eq!(f, id.as_slice());
    }

    let src = KeypointSet::new(vec![Keypoint::new(0.2, 0.0, 0.0)], Some(vec![IDENTITY2])).unwrap();
    let drv = KeypointSet::new(vec![Keypoint::new(-0.2, 0.0, 0.0)], Some(vec![IDENTITY2])).unwrap();
    let f = sparse_motion(&src, &drv, (h, w)).unwrap();
    for (i, v) in f.data()[h * w * 2..].iter().enumerate() {
        let expected = id[i] + if i % 2 == 0 { 0.4 } else { 0.0 };
        assert!((v - expected).abs() < 1e-12);
    }

    // first-order formula evaluated directly at random lattice points
    let two = KeypointSet::new(vec![Keypoint::new(0.0, 0.0, 0.0)], Some(vec![[[2.0, 0.0], [0.0, 2.0]]])).unwrap();
    let one = KeypointSet::new(vec![Keypoint::new(0.0, 0.0, 0.0)], Some(vec![IDENTITY2])).unwrap();
    let f = sparse_motion(&two, &one, (h, w)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let (y, x) = (rng.gen_range(0..h), rng.gen_range(0..w));
        let z = [coord(x, w), coord(y, h)];
        let o = (h * w + y * w + x) * 2;
        assert!((f.data()[o] - 2.0 * z[0]).abs() < 1e-12 && (f.data()[o + 1] - 2.0 * z[1]).abs() < 1e-12);
    }

    let singular = KeypointSet::new(vec![Keypoint::new(0.0, 0.0, 0.0)], Some(vec![[[1.0, 2.0], [2.0, 4.0]]])).unwrap();
    let err = sparse_motion(&one, &singular, (h, w)).unwrap_err().to_string();
    assert!(err.contains("keypoint 0"), "{err}");
}

#[test]
fn heatmap_closed_forms() {
    let sigma = 0.1;
    let (h, w) = (21, 21);
    let kp = KeypointSet::new(vec![Keypoint::new(0.0, 0.0, 0.0), Keypoint::new(0.0, 0.0, 0.5)], None).unwrap();
    let maps = gaussian_heatmap(&kp, (h, w), sigma).unwrap();
    let at = |k: usize, y: usize, x: usize| maps.data()[(k * h + y) * w + x];
    assert_eq!(at(0, 10, 10), 1.0);
    // lattice spacing is 0.1 = sigma
    assert!((at(0, 10, 11) - (-0.5f64).exp()).abs() < 1e-12);
    assert_eq!(maps.data()[..h * w], maps.data()[h * w..]);
    assert!(gaussian_heatmap(&kp, (h, w), 0.0).is_err());

    let same = difference_heatmaps(&kp, &kp, (h, w), sigma).unwrap();
    assert!(same.data().iter().all(|&v| v == 0.0));
    let src = KeypointSet::new(vec![Keypoint::new(-0.8, -0.8, 0.0)], None).unwrap();
    let drv = KeypointSet::new(vec![Keypoint::new(0.8, 0.8, 0.0)], None).unwrap();
    let d = difference_heatmaps(&src, &drv, (h, w), 0.05).unwrap();
    let closed = |dist2: f64| (-dist2 / (2.0 * 0.05 * 0.05)).exp();
    let peak_drv = d.data()[18 * w + 18];
    let peak_src = d.data()[2 * w + 2];
    assert!((peak_drv - (1.0 - closed(2.0 * 1.6 * 1.6))).abs() < 1e-12);
    assert!((peak_src - (closed(2.0 * 1.6 * 1.6) - 1.0)).abs() < 1e-12);
    assert!(d.data().iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn motion_chain_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (b, k, h, w) = (1, 3, 5, 6);
    let src = random_tensor(&[b, k, 3], &mut rng).mul_scalar(0.6);
    let drv = random_tensor(&[b, k, 3], &mut rng).mul_scalar(0.6);
    let jac = random_tensor(&[b, k, 2, 2], &mut rng).mul_scalar(0.2).add(&Tensor::from_f64s(&[1.0, 0.0, 0.0, 1.0], &[2, 2]));
    let logits = random_tensor(&[b, k + 1, h, w], &mut rng);
    let feats = random_tensor(&[b, 2, 7, 7], &mut rng);
    let probe = random_tensor(&[b, 2, h, w], &mut rng);
    let f = |t: &[Tensor<f64>]| {
        let s = KeypointTensors { points: t[0].clone(), jacobians: Some(t[2].clone()) };
        let d = KeypointTensors { points: t[1].clone(), jacobians: Some(t[2].mul_scalar(0.9)) };
        let fields = batched::sparse_motion(&s, &d, h, w).unwrap();
        let heat = batched::difference_heatmaps(&s, &d, h, w, 0.3).unwrap();
        let mixed = t[3].add(&Tensor::cat(&[Tensor::zeros(&[b, 1, h, w]), heat], 1));
        let (flow, _) = batched::combine_dense_motion(&mixed, &fields).unwrap();
        batched::warp(&t[4], &flow.mul_scalar(0.8)).unwrap().mul(&probe).sum()
    };
    let report = gradcheck::check(f, &[src, drv, jac, logits, feats], 1e-5, 200, 1e-2, &mut rng);
    assert!(report.pass_fraction() >= 0.95, "{report:?}");
}
