//! Per-frame categorical pose descriptors ("posecodes").

use std::fmt;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::motion::{Frame, MotionSequence, Vec3};
use crate::noise::{Domain, NoiseConfig};
use crate::skeleton::Joint;

pub const ANGLE_LABELS: [&str; 6] = [
    "straight",
    "slightly bent",
    "partially bent",
    "bent at a right angle",
    "almost completely bent",
    "completely bent",
];
pub const DISTANCE_LABELS: [&str; 4] = ["close", "shoulder width", "spread", "wide apart"];
pub const PITCH_ROLL_LABELS: [&str; 2] = ["vertical", "horizontal"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn component(self, v: &Vec3) -> f64 {
        match self {
            Axis::X => v.x,
            Axis::Y => v.y,
            Axis::Z => v.z,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionReference {
    /// Joint minus root, in the same frame.
    RootRelative,
    /// Joint minus its own frame-0 position.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PosecodeKind {
    Angle,
    Distance,
    RelativePosition { axis: Axis },
    PitchRoll,
    GroundContact,
    /// Root rotation relative to frame 0 about `axis` (x pitch, y yaw, z roll).
    Orientation { axis: Axis },
    Position { axis: Axis, reference: PositionReference },
}

impl PosecodeKind {
    pub fn arity(self) -> usize {
        match self {
            PosecodeKind::Angle => 3,
            PosecodeKind::Distance | PosecodeKind::RelativePosition { .. } | PosecodeKind::PitchRoll => 2,
            PosecodeKind::GroundContact | PosecodeKind::Orientation { .. } | PosecodeKind::Position { .. } => 1,
        }
    }

    pub fn axis(self) -> Option<Axis> {
        match self {
            PosecodeKind::RelativePosition { axis }
            | PosecodeKind::Orientation { axis }
            | PosecodeKind::Position { axis, .. } => Some(axis),
            _ => None,
        }
    }

    /// Human-readable name of a category ordinal.
    pub fn label(self, ordinal: i32) -> String {
        let named = |labels: &[&str]| {
            usize::try_from(ordinal)
                .ok()
                .and_then(|i| labels.get(i))
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("#{ordinal}"))
        };
        match self {
            PosecodeKind::Angle => named(&ANGLE_LABELS),
            PosecodeKind::Distance => named(&DISTANCE_LABELS),
            PosecodeKind::RelativePosition { axis } => named(&relative_position_labels(axis)),
            PosecodeKind::PitchRoll => named(&PITCH_ROLL_LABELS),
            PosecodeKind::GroundContact => named(&["on the ground"]),
            PosecodeKind::Orientation { .. } => format!("sector {ordinal:+}"),
            PosecodeKind::Position { .. } => format!("step {ordinal:+}"),
        }
    }
}

/// `[negative side, positive side]` labels of a relative-position axis.
pub fn relative_position_labels(axis: Axis) -> [&'static str; 2] {
    match axis {
        Axis::X => ["right of", "left of"],
        Axis::Y => ["below", "above"],
        Axis::Z => ["behind", "in front of"],
    }
}

fn root_joints() -> Vec<Joint> {
    vec![Joint::ROOT]
}

/// One configured posecode: a kind applied to a joint tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PosecodeInstance {
    #[serde(flatten)]
    pub kind: PosecodeKind,
    #[serde(default = "root_joints")]
    pub joints: Vec<Joint>,
}

impl PosecodeInstance {
    pub fn new(kind: PosecodeKind, joints: &[Joint]) -> Self {
        PosecodeInstance {
            kind,
            joints: joints.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.joints.len() != self.kind.arity() {
            return Err(format!(
                "{:?} takes {} joint(s), got {}",
                self.kind,
                self.kind.arity(),
                self.joints.len()
            ));
        }
        for (i, a) in self.joints.iter().enumerate() {
            if self.joints[i + 1..].contains(a) {
                return Err(format!("{:?} repeats joint {a}", self.kind));
            }
        }
        match self.kind {
            PosecodeKind::Orientation { .. } if self.joints[0] != Joint::ROOT => {
                Err("orientation posecodes are defined on the root only".into())
            }
            PosecodeKind::Position {
                reference: PositionReference::RootRelative,
                ..
            } if self.joints[0] == Joint::ROOT => Err("root-relative position of the root is always zero".into()),
            _ => Ok(()),
        }
    }

    /// The joint a caption talks about: the vertex of an angle, otherwise the first joint.
    pub fn focus(&self) -> Joint {
        match self.kind {
            PosecodeKind::Angle => self.joints[1],
            _ => self.joints[0],
        }
    }

    /// Second joint of pairwise kinds (distance, relative position).
    pub fn counterpart(&self) -> Option<Joint> {
        match self.kind {
            PosecodeKind::Distance | PosecodeKind::RelativePosition { .. } => Some(self.joints[1]),
            _ => None,
        }
    }

    /// Same kind on the mirrored joints.
    pub fn mirrored(&self) -> PosecodeInstance {
        PosecodeInstance {
            kind: self.kind,
            joints: self.joints.iter().map(|j| j.mirror()).collect(),
        }
    }
}

impl fmt::Display for PosecodeInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PosecodeKind::Angle => "angle".to_string(),
            PosecodeKind::Distance => "distance".to_string(),
            PosecodeKind::RelativePosition { axis } => format!("relative-position-{axis}"),
            PosecodeKind::PitchRoll => "pitch-roll".to_string(),
            PosecodeKind::GroundContact => "ground-contact".to_string(),
            PosecodeKind::Orientation { axis } => format!("orientation-{axis}"),
            PosecodeKind::Position { axis, reference } => match reference {
                PositionReference::RootRelative => format!("position-{axis}-root-relative"),
                PositionReference::Global => format!("position-{axis}-global"),
            },
        };
        let joints: Vec<&str> = self.joints.iter().map(|j| j.name()).collect();
        write!(f, "{kind}({})", joints.join(","))
    }
}

/// Numeric edges of every posecode classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosecodeThresholds {
    /// Ascending lower edges (degrees) of completely bent .. straight; see [`classify_angle`].
    pub angle_edges: [f64; 5],
    /// Ascending shoulder-width ratios separating close / shoulder width / spread / wide apart.
    pub distance_edges: [f64; 3],
    pub relative_position_band: f64,
    pub vertical_cone: f64,
    pub horizontal_cone: f64,
    pub ground_epsilon: f64,
    pub orientation_sector: f64,
    pub position_step: f64,
    pub position_max_bin: i32,
}

impl Default for PosecodeThresholds {
    fn default() -> Self {
        PosecodeThresholds {
            angle_edges: [45.0, 75.0, 105.0, 135.0, 160.0],
            distance_edges: [0.5, 1.5, 2.5],
            relative_position_band: 0.05,
            vertical_cone: 25.0,
            horizontal_cone: 65.0,
            ground_epsilon: 0.05,
            orientation_sector: 45.0,
            position_step: 0.15,
            position_max_bin: 5,
        }
    }
}

impl PosecodeThresholds {
    pub fn validate(&self) -> Result<(), String> {
        let ascending = |xs: &[f64]| xs.windows(2).all(|w| w[0] < w[1]) && xs.iter().all(|x| x.is_finite());
        if !ascending(&self.angle_edges) {
            return Err("posecode.angle_edges must be strictly ascending".into());
        }
        if !ascending(&self.distance_edges) {
            return Err("posecode.distance_edges must be strictly ascending".into());
        }
        for (name, v) in [
            ("relative_position_band", self.relative_position_band),
            ("ground_epsilon", self.ground_epsilon),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("posecode.{name} must be non-negative"));
            }
        }
        for (name, v) in [
            ("orientation_sector", self.orientation_sector),
            ("position_step", self.position_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("posecode.{name} must be positive"));
            }
        }
        if !(0.0 <= self.vertical_cone && self.vertical_cone <= self.horizontal_cone && self.horizontal_cone <= 90.0) {
            return Err("posecode cones must satisfy 0 <= vertical_cone <= horizontal_cone <= 90".into());
        }
        if self.position_max_bin < 1 {
            return Err("posecode.position_max_bin must be at least 1".into());
        }
        Ok(())
    }
}

/// Interior angle at `joints[1]` between the rays toward `joints[0]` and
/// `joints[2]`, in degrees. `None` when a ray has zero length.
pub fn measure_angle(frame: &Frame, joints: [Joint; 3]) -> Option<f64> {
    let a = frame[joints[0]] - frame[joints[1]];
    let b = frame[joints[2]] - frame[joints[1]];
    if a.norm() < 1e-12 || b.norm() < 1e-12 {
        return None;
    }
    Some(a.cross(&b).norm().atan2(a.dot(&b)).to_degrees())
}

/// Ordinal 0 (straight) .. 5 (completely bent).
pub fn classify_angle(degrees: f64, thresholds: &PosecodeThresholds) -> i32 {
    thresholds.angle_edges.iter().filter(|&&edge| edge > degrees).count() as i32
}

/// Ordinal 0 (close) .. 3 (wide apart) of `distance / shoulder_width`.
pub fn classify_distance(distance: f64, shoulder_width: f64, thresholds: &PosecodeThresholds) -> i32 {
    let ratio = distance / shoulder_width;
    thresholds.distance_edges.iter().filter(|&&edge| edge <= ratio).count() as i32
}

/// Sign of `delta = a - b` along the axis; `None` inside the ignore band.
/// Ordinal 1 is the positive side (left of / above / in front of).
pub fn classify_relative_position(delta: f64, thresholds: &PosecodeThresholds) -> Option<i32> {
    if delta > thresholds.relative_position_band {
        Some(1)
    } else if delta < -thresholds.relative_position_band {
        Some(0)
    } else {
        None
    }
}

/// Acute angle between a segment and the vertical axis, in degrees.
pub fn segment_inclination(top: Vec3, bottom: Vec3) -> Option<f64> {
    let d = top - bottom;
    if d.norm() < 1e-12 {
        return None;
    }
    Some(d.x.hypot(d.z).atan2(d.y.abs()).to_degrees())
}

/// Ordinal 0 (vertical) or 1 (horizontal); `None` in between.
pub fn classify_pitch_roll(inclination: f64, thresholds: &PosecodeThresholds) -> Option<i32> {
    if inclination < thresholds.vertical_cone {
        Some(0)
    } else if inclination > thresholds.horizontal_cone {
        Some(1)
    } else {
        None
    }
}

/// `Some(0)` ("on the ground") when the clearance is strictly below epsilon.
pub fn detect_ground_contact(joint_y: f64, ground_y: f64, thresholds: &PosecodeThresholds) -> Option<i32> {
    (joint_y - ground_y < thresholds.ground_epsilon).then_some(0)
}

/// Signed 45-degree sector (by default) nearest to `degrees`.
pub fn classify_orientation(degrees: f64, thresholds: &PosecodeThresholds) -> i32 {
    (degrees / thresholds.orientation_sector).round() as i32
}

/// Signed displacement bin, rounded half away from zero and clipped.
pub fn classify_position(displacement: f64, thresholds: &PosecodeThresholds) -> i32 {
    let bin = (displacement / thresholds.position_step).round();
    let max = thresholds.position_max_bin as f64;
    bin.clamp(-max, max) as i32
}

/// Orthonormal body frame (columns: left, up, forward) built from the hips
/// and the spine. `None` when the hips coincide or the spine lies along them.
pub fn body_frame(frame: &Frame) -> Option<Matrix3<f64>> {
    let left = frame[Joint::LeftHip] - frame[Joint::RightHip];
    let up = frame[Joint::Spine3] - frame[Joint::Pelvis];
    let forward = left.cross(&up);
    if left.norm() < 1e-9 || forward.norm() < 1e-9 {
        return None;
    }
    let left = left.normalize();
    let forward = forward.normalize();
    let up = forward.cross(&left);
    Some(Matrix3::from_columns(&[left, up, forward]))
}

/// Decomposes `rotation = R_y(yaw) R_x(pitch) R_z(roll)`; returns degrees
/// indexed by axis: `[pitch (x), yaw (y), roll (z)]`.
pub fn yaw_pitch_roll(rotation: &Matrix3<f64>) -> [f64; 3] {
    let r = rotation;
    let pitch = (-r[(1, 2)]).clamp(-1.0, 1.0).asin();
    let yaw = r[(0, 2)].atan2(r[(2, 2)]);
    let roll = r[(1, 0)].atan2(r[(1, 1)]);
    [pitch.to_degrees(), yaw.to_degrees(), roll.to_degrees()]
}

/// Per-frame root rotation angles relative to frame 0 (degrees, indexed by
/// axis x/y/z), with yaw and roll unwrapped so continuous turns keep counting.
pub fn root_orientation_series(seq: &MotionSequence) -> Vec<Option<[f64; 3]>> {
    let reference = body_frame(&seq.frames()[0]);
    let mut previous: Option<[f64; 3]> = None;
    seq.frames()
        .iter()
        .map(|frame| {
            let (Some(r0), Some(rt)) = (reference, body_frame(frame)) else {
                return None;
            };
            let mut angles = yaw_pitch_roll(&(rt * r0.transpose()));
            if let Some(prev) = previous {
                for axis in [1, 2] {
                    let step = wrap_degrees(angles[axis] - prev[axis]);
                    angles[axis] = prev[axis] + step;
                }
            }
            previous = Some(angles);
            Some(angles)
        })
        .collect()
}

fn wrap_degrees(d: f64) -> f64 {
    let wrapped = d.rem_euclid(360.0);
    if wrapped > 180.0 {
        wrapped - 360.0
    } else if wrapped == 180.0 && d < 0.0 {
        -180.0
    } else {
        wrapped
    }
}

/// Category sequence of one posecode instance. `None` marks ignored frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosecodeTimeline {
    pub instance_index: usize,
    pub instance: PosecodeInstance,
    pub categories: Vec<Option<i32>>,
}

impl PosecodeTimeline {
    pub fn label(&self, ordinal: i32) -> String {
        self.instance.kind.label(ordinal)
    }

    /// Ordered label list for bounded kinds; empty for signed kinds.
    pub fn category_names(&self) -> Vec<&'static str> {
        match self.instance.kind {
            PosecodeKind::Angle => ANGLE_LABELS.to_vec(),
            PosecodeKind::Distance => DISTANCE_LABELS.to_vec(),
            PosecodeKind::RelativePosition { axis } => relative_position_labels(axis).to_vec(),
            PosecodeKind::PitchRoll => PITCH_ROLL_LABELS.to_vec(),
            PosecodeKind::GroundContact => vec!["on the ground"],
            PosecodeKind::Orientation { .. } | PosecodeKind::Position { .. } => Vec::new(),
        }
    }
}

/// Sequence-wide quantities shared by all classifiers.
struct SequenceContext {
    shoulder_width: f64,
    ground_y: f64,
    orientation: Vec<Option<[f64; 3]>>,
}

impl SequenceContext {
    fn new(seq: &MotionSequence, instances: &[PosecodeInstance]) -> Self {
        let first = &seq.frames()[0];
        let shoulder_width = (first[Joint::LeftShoulder] - first[Joint::RightShoulder]).norm().max(1e-9);
        let ground_y = seq
            .frames()
            .iter()
            .flat_map(|f| f.0.iter().map(|p| p.y))
            .fold(f64::INFINITY, f64::min);
        let orientation = if instances
            .iter()
            .any(|i| matches!(i.kind, PosecodeKind::Orientation { .. }))
        {
            root_orientation_series(seq)
        } else {
            Vec::new()
        };
        SequenceContext {
            shoulder_width,
            ground_y,
            orientation,
        }
    }
}

fn classify_frame(
    seq: &MotionSequence,
    ctx: &SequenceContext,
    instance: &PosecodeInstance,
    index: usize,
    frame_index: usize,
    thresholds: &PosecodeThresholds,
    noise: &NoiseConfig,
) -> Option<i32> {
    let frame = &seq.frames()[frame_index];
    let jitter = noise.standard_normal(Domain::Posecode, index, frame_index);
    let angle_noise = jitter * noise.angle_sigma;
    let length_noise = jitter * noise.distance_sigma;
    let j = &instance.joints;
    match instance.kind {
        PosecodeKind::Angle => {
            let deg = measure_angle(frame, [j[0], j[1], j[2]])?;
            Some(classify_angle(deg + angle_noise, thresholds))
        }
        PosecodeKind::Distance => {
            let dist = (frame[j[0]] - frame[j[1]]).norm();
            Some(classify_distance((dist + length_noise).max(0.0), ctx.shoulder_width, thresholds))
        }
        PosecodeKind::RelativePosition { axis } => {
            let delta = axis.component(&(frame[j[0]] - frame[j[1]]));
            classify_relative_position(delta + length_noise, thresholds)
        }
        PosecodeKind::PitchRoll => {
            let inclination = segment_inclination(frame[j[0]], frame[j[1]])?;
            classify_pitch_roll(inclination + angle_noise, thresholds)
        }
        PosecodeKind::GroundContact => detect_ground_contact(frame[j[0]].y + length_noise, ctx.ground_y, thresholds),
        PosecodeKind::Orientation { axis } => {
            let angles = ctx.orientation[frame_index]?;
            let deg = match axis {
                Axis::X => angles[0],
                Axis::Y => angles[1],
                Axis::Z => angles[2],
            };
            Some(classify_orientation(deg + angle_noise, thresholds))
        }
        PosecodeKind::Position { axis, reference } => {
            let displacement = match reference {
                PositionReference::RootRelative => axis.component(&(frame[j[0]] - frame[Joint::ROOT])),
                PositionReference::Global => axis.component(&(frame[j[0]] - seq.frames()[0][j[0]])),
            };
            Some(classify_position(displacement + length_noise, thresholds))
        }
    }
}

/// One timeline per instance. Each `(instance, frame)` pair draws its own
/// noise sample, so the result does not depend on evaluation order.
pub fn extract_posecode_timelines(
    seq: &MotionSequence,
    instances: &[PosecodeInstance],
    thresholds: &PosecodeThresholds,
    noise: &NoiseConfig,
) -> Vec<PosecodeTimeline> {
    let ctx = SequenceContext::new(seq, instances);
    instances
        .par_iter()
        .enumerate()
        .map(|(index, instance)| PosecodeTimeline {
            instance_index: index,
            instance: instance.clone(),
            categories: (0..seq.len())
                .map(|f| classify_frame(seq, &ctx, instance, index, f, thresholds, noise))
                .collect(),
        })
        .collect()
}
