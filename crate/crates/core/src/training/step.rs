use std::collections::BTreeMap;

use adasr_tensor::optim::clip_grad_norm;
use adasr_tensor::{no_grad, ParamStore, Tensor};
use rand::Rng;

use super::batch::Batch;
use super::state::TrainState;
use crate::losses::terms;
use crate::losses::{total_loss, LossFamily, LossReport, LossTerms, ThinPlateSpline, CONTROL_GRID, CONTROL_SIGMA};
use crate::media_io::Frame;
use crate::motion_field::MotionTensors;
use crate::networks::ForwardOutput;
use crate::seeds::rng_for;
use crate::{Error, Result};

/// Source, driving and target frames of every generator pass in a step.
#[derive(Clone, Debug)]
pub struct Pairings<'a> {
    pub sources: Vec<&'a Frame>,
    pub drivings: Vec<&'a Frame>,
    pub targets: Vec<&'a Frame>,
    /// High-quality ground truth shown to the discriminator as real.
    pub reals: Vec<&'a Frame>,
}

/// Every pair contributes `source_lq -> target_hq`. With a teacher target
/// it also contributes `source_hq -> target_sh`; otherwise an undegraded
/// `source_hq -> target_hq` pass is added with probability `hq_probability`.
pub fn pairings(batch: &Batch, hq_probability: f64) -> Pairings<'_> {
    let mut p = Pairings { sources: Vec::new(), drivings: Vec::new(), targets: Vec::new(), reals: Vec::new() };
    let mut push = |s, d, t, r| {
        p.sources.push(s);
        p.drivings.push(d);
        p.targets.push(t);
        p.reals.push(r);
    };
    for (i, pair) in batch.pairs.iter().enumerate() {
        push(&pair.source_lq, &pair.driving, &pair.target_hq, &pair.target_hq);
        match &pair.target_sh {
            Some(sh) => push(&pair.source_hq, &pair.driving, sh, &pair.target_hq),
            None => {
                let mut rng = rng_for(batch.seed, &[i as u64, 3]);
                if rng.gen_bool(hq_probability) {
                    push(&pair.source_hq, &pair.driving, &pair.target_hq, &pair.target_hq);
                }
            }
        }
    }
    p
}

/// Runs the whole generator on batched frames.
pub fn forward_batch(state: &TrainState, sources: &[&Frame], drivings: &[&Frame]) -> Result<ForwardOutput<f32>> {
    let s = Frame::batch(sources)?;
    let d = Frame::batch(drivings)?;
    state.networks.forward(&state.weights.generator, &s, &d)
}

/// Animates one source with one driving frame; returns the output frame and
/// the intermediates.
pub fn forward_pipeline(state: &TrainState, source: &Frame, driving: &Frame) -> Result<(Frame, ForwardOutput<f32>)> {
    let out = no_grad(|| forward_batch(state, &[source], &[driving]))?;
    Ok((Frame::from_tensor(&out.output, 0)?, out))
}

fn constant_copy(store: &ParamStore<f32>) -> ParamStore<f32> {
    let mut out = ParamStore::new();
    for (k, v) in store.iter() {
        out.insert_constant(k, v.to_vec(), v.shape());
    }
    out
}

fn check_grads(grads: &BTreeMap<String, Vec<f32>>, what: &str, seed: u64) -> Result<()> {
    if let Some((name, _)) = grads.iter().find(|(_, g)| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric(format!("non-finite {what} gradient in `{name}` (batch seed {seed})")));
    }
    Ok(())
}

/// One discriminator update followed by one generator update.
pub fn train_step(state: &mut TrainState, batch: &Batch) -> Result<LossReport> {
    let seed = batch.seed;
    let with_seed = |e: Error| match e {
        Error::Numeric(msg) => Error::Numeric(format!("{msg} (batch seed {seed})")),
        other => other,
    };
    let cfg = state.config.clone();
    let p = pairings(batch, cfg.training.hq_probability);
    let nets = state.networks.clone();
    let g_store = state.weights.generator.clone();
    let sources = Frame::batch(&p.sources)?;
    let drivings = Frame::batch(&p.drivings)?;
    let targets = Frame::batch(&p.targets)?;
    let reals = Frame::batch(&p.reals)?;

    let fwd = nets.forward(&g_store, &sources, &drivings).map_err(with_seed)?;
    let pred = &fwd.output;
    if !pred.all_finite() {
        return Err(Error::Numeric(format!("non-finite generator output (batch seed {seed})")));
    }

    // discriminator: real ground truth against detached predictions
    let d_loss = {
        let d_store = &state.weights.discriminator;
        let real = nets.discriminator.forward(d_store, &reals);
        let fake = nets.discriminator.forward(d_store, &pred.detach());
        terms::discriminator_hinge_loss(&real, &fake)
    };
    let d_value = d_loss.item() as f64;
    if !d_value.is_finite() {
        return Err(Error::Numeric(format!("discriminator loss is {d_value} (batch seed {seed})")));
    }
    let mut d_grads = state.weights.discriminator.named_grads(&d_loss.backward());
    check_grads(&d_grads, "discriminator", seed)?;
    clip_grad_norm(&mut d_grads, cfg.optimizer.grad_clip_norm);
    state.discriminator_optimizer.step(&mut state.weights.discriminator, &d_grads);

    // generator objective against the updated, frozen discriminator
    let d_frozen = constant_copy(&state.weights.discriminator);
    let real_d = no_grad(|| nets.discriminator.forward(&d_frozen, &targets));
    let fake_d = nets.discriminator.forward(&d_frozen, pred);
    let mut t: LossTerms<f32> = LossTerms::new();
    t.insert(LossFamily::Perceptual, Some(terms::perceptual_loss(&state.extractor, pred, &targets)?));
    t.insert(LossFamily::Adversarial, Some(terms::generator_hinge_loss(&fake_d)));
    t.insert(LossFamily::FeatureMatching, Some(terms::feature_matching_loss(&real_d, &fake_d)));

    let target_kp = no_grad(|| nets.detector.forward(&g_store, &targets)).keypoints;
    let pred_kp = nets.detector.forward(&g_store, pred).keypoints;
    t.insert(LossFamily::Keypoint, Some(terms::keypoint_loss(&pred_kp, &target_kp)?));

    let detected_driving = nets.detector.forward(&g_store, &drivings).keypoints;
    t.insert(
        LossFamily::Deformation,
        Some(terms::deformation_loss(
            &fwd.canonical_keypoints,
            &fwd.driving_motion,
            &detected_driving,
            cfg.loss_weights.expression_prior,
        )?),
    );

    let mut tps_rng = rng_for(seed, &[u64::MAX, 4]);
    let tps = ThinPlateSpline::random(CONTROL_GRID, CONTROL_SIGMA, &mut tps_rng)?;
    let detect = |img: &Tensor<f32>| Ok(nets.detector.forward(&g_store, img).keypoints.positions());
    t.insert(LossFamily::Equivariance, Some(terms::equivariance_loss(detect, &drivings, &tps)?));

    match &state.pose_oracle {
        Some(oracle) => {
            let params = p.targets.iter().map(|f| oracle.estimate(f)).collect::<Result<Vec<_>>>()?;
            let reference = MotionTensors::<f32>::from_params(&params)?;
            let predicted = nets.pose.forward(&g_store, pred);
            let euler = predicted.euler.as_ref().expect("pose head predicts angles");
            let ref_euler = reference.euler.as_ref().expect("angles derived from rotations");
            t.insert(LossFamily::HeadPose, Some(terms::pose_loss(euler, ref_euler)?));
            t.insert(LossFamily::Expression, Some(terms::expression_loss(&predicted.deltas, &reference.deltas)?));
        }
        None => {
            t.insert(LossFamily::HeadPose, None);
            t.insert(LossFamily::Expression, None);
        }
    }

    let (total, mut report) = total_loss(&t, &cfg.loss_weights).map_err(with_seed)?;
    let mut g_grads = g_store.named_grads(&total.backward());
    check_grads(&g_grads, "generator", seed)?;
    clip_grad_norm(&mut g_grads, cfg.optimizer.grad_clip_norm);
    state.generator_optimizer.step(&mut state.weights.generator, &g_grads);
    state.step += 1;
    report.discriminator = Some(d_value);
    Ok(report)
}
