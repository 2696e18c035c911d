//! Scripted synthetic motions.
//!
//! A tiny forward-kinematics model over the canonical skeleton, used to build
//! fixtures with known joint angles (arm curls, reaches, knee bends) and to
//! generate random corpora for property tests.

use nalgebra::{Rotation3, Unit};
use rand::Rng;

use crate::motion::{Frame, MotionSequence, Vec3};
use crate::skeleton::Joint;

const UPPER_ARM: f64 = 0.28;
const FOREARM: f64 = 0.25;
const THIGH: f64 = 0.37;
const SHANK: f64 = 0.39;

/// The documented T-pose: facing `+z`, left side toward `+x`, arms horizontal.
pub fn t_pose() -> Frame {
    use Joint::*;
    let mut frame = Frame([Vec3::zeros(); 22]);
    let mut set = |j: Joint, x: f64, y: f64, z: f64| {
        frame[j] = Vec3::new(x, y, z);
        if j.mirror() != j {
            frame[j.mirror()] = Vec3::new(-x, y, z);
        }
    };
    set(Pelvis, 0.0, 0.93, 0.0);
    set(LeftHip, 0.06, 0.84, 0.0);
    set(Spine1, 0.0, 1.03, -0.01);
    set(LeftKnee, 0.1, 0.47, 0.0);
    set(Spine2, 0.0, 1.16, -0.01);
    set(LeftAnkle, 0.09, 0.08, -0.03);
    set(Spine3, 0.0, 1.22, 0.0);
    set(LeftFoot, 0.11, 0.02, 0.09);
    set(Neck, 0.0, 1.44, -0.01);
    set(LeftCollar, 0.08, 1.36, 0.0);
    set(Head, 0.0, 1.6, 0.04);
    set(LeftShoulder, 0.18, 1.4, 0.0);
    set(LeftElbow, 0.46, 1.4, 0.0);
    set(LeftWrist, 0.71, 1.4, 0.0);
    frame
}

/// Joint-space description of one pose. Angles are in degrees; index 0 is
/// the left side, index 1 the right side.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseParams {
    /// Interior elbow angle (180 = straight).
    pub elbow: [f64; 2],
    /// Interior knee angle (180 = straight).
    pub knee: [f64; 2],
    /// Upper-arm abduction away from the body (0 = hanging, 90 = horizontal).
    pub arm_raise: [f64; 2],
    /// Upper-arm flexion toward the front.
    pub arm_forward: [f64; 2],
    /// Thigh flexion toward the front.
    pub hip_forward: [f64; 2],
    /// Forward pitch of the upper body about the pelvis.
    pub lean: f64,
    /// Sideways roll of the upper body about the pelvis (positive leans right).
    pub side_lean: f64,
    /// Whole-body turn about the vertical axis (positive is counter-clockwise from above).
    pub yaw: f64,
    /// Whole-body translation.
    pub offset: Vec3,
}

impl Default for PoseParams {
    fn default() -> Self {
        PoseParams {
            elbow: [171.0, 171.0],
            knee: [176.0, 176.0],
            arm_raise: [7.0, 7.0],
            arm_forward: [0.0, 0.0],
            hip_forward: [0.0, 0.0],
            lean: 0.0,
            side_lean: 0.0,
            yaw: 0.0,
            offset: Vec3::zeros(),
        }
    }
}

fn rot(axis: Vec3, degrees: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), degrees.to_radians())
}

/// Direction of a distal segment making `interior` degrees with `proximal`
/// (pointing from the joint back toward the parent), bent toward `bend_toward`.
fn bent_direction(proximal: Vec3, interior: f64, bend_toward: Vec3) -> Vec3 {
    let u = proximal.normalize();
    let mut axis = u.cross(&bend_toward);
    if axis.norm() < 1e-9 {
        axis = Vec3::x();
    }
    rot(axis, interior) * u
}

/// Builds a frame from joint-space parameters.
pub fn pose(params: &PoseParams) -> Frame {
    use Joint::*;
    let mut frame = t_pose();
    let down = Vec3::new(0.0, -1.0, 0.0);

    for (k, (shoulder, elbow, wrist)) in [(LeftShoulder, LeftElbow, LeftWrist), (RightShoulder, RightElbow, RightWrist)]
        .into_iter()
        .enumerate()
    {
        let outward = if k == 0 { 1.0 } else { -1.0 };
        let upper = rot(Vec3::z(), outward * params.arm_raise[k]) * (rot(Vec3::x(), -params.arm_forward[k]) * down);
        frame[elbow] = frame[shoulder] + upper * UPPER_ARM;
        let fore = bent_direction(-upper, params.elbow[k], Vec3::z());
        frame[wrist] = frame[elbow] + fore * FOREARM;
    }

    let rest = t_pose();
    for (k, (hip, knee, ankle, foot)) in [
        (LeftHip, LeftKnee, LeftAnkle, LeftFoot),
        (RightHip, RightKnee, RightAnkle, RightFoot),
    ]
    .into_iter()
    .enumerate()
    {
        let thigh = rot(Vec3::x(), -params.hip_forward[k]) * down;
        frame[knee] = frame[hip] + thigh * THIGH;
        let shank = bent_direction(-thigh, params.knee[k], -Vec3::z());
        frame[ankle] = frame[knee] + shank * SHANK;
        let rest_shank = (rest[ankle] - rest[knee]).normalize();
        let turn = Rotation3::rotation_between(&rest_shank, &shank).unwrap_or_else(Rotation3::identity);
        frame[foot] = frame[ankle] + turn * (rest[foot] - rest[ankle]);
    }

    let pelvis = frame[Pelvis];
    let upper_body = [
        Spine1,
        Spine2,
        Spine3,
        Neck,
        Head,
        LeftCollar,
        RightCollar,
        LeftShoulder,
        RightShoulder,
        LeftElbow,
        RightElbow,
        LeftWrist,
        RightWrist,
    ];
    if params.lean != 0.0 || params.side_lean != 0.0 {
        let tilt = rot(Vec3::z(), params.side_lean) * rot(Vec3::x(), params.lean);
        for j in upper_body {
            frame[j] = pelvis + tilt * (frame[j] - pelvis);
        }
    }
    let turn = rot(Vec3::y(), params.yaw);
    frame.map(|p| pelvis + turn * (p - pelvis) + params.offset)
}

/// Linear interpolation between two parameter sets.
pub fn lerp(a: &PoseParams, b: &PoseParams, t: f64) -> PoseParams {
    let mix = |x: f64, y: f64| x + (y - x) * t;
    let mix2 = |x: [f64; 2], y: [f64; 2]| [mix(x[0], y[0]), mix(x[1], y[1])];
    PoseParams {
        elbow: mix2(a.elbow, b.elbow),
        knee: mix2(a.knee, b.knee),
        arm_raise: mix2(a.arm_raise, b.arm_raise),
        arm_forward: mix2(a.arm_forward, b.arm_forward),
        hip_forward: mix2(a.hip_forward, b.hip_forward),
        lean: mix(a.lean, b.lean),
        side_lean: mix(a.side_lean, b.side_lean),
        yaw: mix(a.yaw, b.yaw),
        offset: a.offset + (b.offset - a.offset) * t,
    }
}

/// Piecewise-linear keyframe animation: `(frame index, params)` pairs with
/// increasing frame indices; frames beyond the last key hold it.
pub fn keyframed(fps: f64, total: usize, keys: &[(usize, PoseParams)]) -> MotionSequence {
    assert!(!keys.is_empty());
    let frames = (0..total)
        .map(|f| {
            let params = match keys.iter().position(|(k, _)| *k > f) {
                Some(0) => keys[0].1.clone(),
                Some(i) => {
                    let (f0, p0) = &keys[i - 1];
                    let (f1, p1) = &keys[i];
                    lerp(p0, p1, (f - f0) as f64 / (f1 - f0) as f64)
                }
                None => keys[keys.len() - 1].1.clone(),
            };
            pose(&params)
        })
        .collect();
    MotionSequence::new(fps, frames).expect("synthetic motion is valid")
}

fn side_index(joint: Joint) -> usize {
    match joint {
        Joint::LeftElbow | Joint::LeftKnee => 0,
        Joint::RightElbow | Joint::RightKnee => 1,
        other => panic!("{other} is not an elbow or knee"),
    }
}

/// Elbow angle ramping linearly from 180 to 40 degrees over `frames` frames.
pub fn arm_curl(elbow: Joint, frames: usize) -> MotionSequence {
    let k = side_index(elbow);
    let frames = (0..frames)
        .map(|f| {
            let mut params = PoseParams::default();
            params.elbow[k] = 180.0 - 140.0 * f as f64 / (frames - 1) as f64;
            pose(&params)
        })
        .collect();
    MotionSequence::new(20.0, frames).expect("synthetic motion is valid")
}

/// A static pose held for `frames` frames.
pub fn still(params: &PoseParams, frames: usize) -> MotionSequence {
    MotionSequence::new(20.0, vec![pose(params); frames]).expect("synthetic motion is valid")
}

/// Random smooth motion: each joint parameter follows a sum of two sinusoids,
/// plus a slow body turn and drift.
pub fn random_motion<R: Rng>(rng: &mut R, frames: usize, fps: f64) -> MotionSequence {
    let mut wave = |center: f64, amplitude: f64| {
        let a1 = rng.random_range(0.0..amplitude);
        let a2 = rng.random_range(0.0..amplitude * 0.5);
        let w1 = rng.random_range(0.2..1.5) * std::f64::consts::TAU;
        let w2 = rng.random_range(0.5..3.0) * std::f64::consts::TAU;
        let p1 = rng.random_range(0.0..std::f64::consts::TAU);
        let p2 = rng.random_range(0.0..std::f64::consts::TAU);
        move |t: f64| center + a1 * (w1 * t + p1).sin() + a2 * (w2 * t + p2).sin()
    };
    let elbows = [wave(110.0, 60.0), wave(110.0, 60.0)];
    let knees = [wave(140.0, 35.0), wave(140.0, 35.0)];
    let raise = [wave(40.0, 40.0), wave(40.0, 40.0)];
    let forward = [wave(30.0, 40.0), wave(30.0, 40.0)];
    let hips = [wave(15.0, 25.0), wave(15.0, 25.0)];
    let lean = wave(5.0, 15.0);
    let side = wave(0.0, 10.0);
    let yaw = wave(0.0, 120.0);
    let dx = wave(0.0, 1.0);
    let dz = wave(0.0, 1.0);
    let frames = (0..frames)
        .map(|f| {
            let t = f as f64 / fps;
            pose(&PoseParams {
                elbow: [elbows[0](t).clamp(20.0, 180.0), elbows[1](t).clamp(20.0, 180.0)],
                knee: [knees[0](t).clamp(60.0, 180.0), knees[1](t).clamp(60.0, 180.0)],
                arm_raise: [raise[0](t).clamp(0.0, 170.0), raise[1](t).clamp(0.0, 170.0)],
                arm_forward: [forward[0](t), forward[1](t)],
                hip_forward: [hips[0](t).clamp(-20.0, 90.0), hips[1](t).clamp(-20.0, 90.0)],
                lean: lean(t),
                side_lean: side(t),
                yaw: yaw(t),
                offset: Vec3::new(dx(t), 0.0, dz(t)),
            })
        })
        .collect();
    MotionSequence::new(fps, frames).expect("synthetic motion is valid")
}
