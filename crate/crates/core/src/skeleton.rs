//! The canonical 22-joint body skeleton (SMPL-H body subset, HumanML3D order).
//!
//! Coordinates are meters with `y` up. A normalized body faces `+z` and its
//! left side lies toward `+x`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const JOINT_COUNT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Pelvis,
    LeftHip,
    RightHip,
    Spine1,
    LeftKnee,
    RightKnee,
    Spine2,
    LeftAnkle,
    RightAnkle,
    Spine3,
    LeftFoot,
    RightFoot,
    Neck,
    LeftCollar,
    RightCollar,
    Head,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Center,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Pelvis,
        Joint::LeftHip,
        Joint::RightHip,
        Joint::Spine1,
        Joint::LeftKnee,
        Joint::RightKnee,
        Joint::Spine2,
        Joint::LeftAnkle,
        Joint::RightAnkle,
        Joint::Spine3,
        Joint::LeftFoot,
        Joint::RightFoot,
        Joint::Neck,
        Joint::LeftCollar,
        Joint::RightCollar,
        Joint::Head,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
    ];

    pub const ROOT: Joint = Joint::Pelvis;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Joint> {
        Self::ALL.get(index).copied()
    }

    /// Identifier used in motion and config files.
    pub fn name(self) -> &'static str {
        match self {
            Joint::Pelvis => "pelvis",
            Joint::LeftHip => "left_hip",
            Joint::RightHip => "right_hip",
            Joint::Spine1 => "spine1",
            Joint::LeftKnee => "left_knee",
            Joint::RightKnee => "right_knee",
            Joint::Spine2 => "spine2",
            Joint::LeftAnkle => "left_ankle",
            Joint::RightAnkle => "right_ankle",
            Joint::Spine3 => "spine3",
            Joint::LeftFoot => "left_foot",
            Joint::RightFoot => "right_foot",
            Joint::Neck => "neck",
            Joint::LeftCollar => "left_collar",
            Joint::RightCollar => "right_collar",
            Joint::Head => "head",
            Joint::LeftShoulder => "left_shoulder",
            Joint::RightShoulder => "right_shoulder",
            Joint::LeftElbow => "left_elbow",
            Joint::RightElbow => "right_elbow",
            Joint::LeftWrist => "left_wrist",
            Joint::RightWrist => "right_wrist",
        }
    }

    /// Side-free body-part noun used in captions. Wrists read as hands.
    pub fn part_noun(self) -> &'static str {
        match self {
            Joint::Pelvis => "pelvis",
            Joint::LeftHip | Joint::RightHip => "hip",
            Joint::Spine1 => "lower back",
            Joint::Spine2 => "middle back",
            Joint::Spine3 => "upper back",
            Joint::LeftKnee | Joint::RightKnee => "knee",
            Joint::LeftAnkle | Joint::RightAnkle => "ankle",
            Joint::LeftFoot | Joint::RightFoot => "foot",
            Joint::Neck => "neck",
            Joint::LeftCollar | Joint::RightCollar => "collarbone",
            Joint::Head => "head",
            Joint::LeftShoulder | Joint::RightShoulder => "shoulder",
            Joint::LeftElbow | Joint::RightElbow => "elbow",
            Joint::LeftWrist | Joint::RightWrist => "hand",
        }
    }

    /// Plural of [`Joint::part_noun`], used for symmetric pairs.
    pub fn part_noun_plural(self) -> &'static str {
        match self.part_noun() {
            "foot" => "feet",
            "hip" => "hips",
            "knee" => "knees",
            "ankle" => "ankles",
            "collarbone" => "collarbones",
            "shoulder" => "shoulders",
            "elbow" => "elbows",
            "hand" => "hands",
            other => other,
        }
    }

    /// Caption name, e.g. "left hand" for the left wrist.
    pub fn display_name(self) -> String {
        match self.side() {
            Side::Left => format!("left {}", self.part_noun()),
            Side::Right => format!("right {}", self.part_noun()),
            Side::Center => self.part_noun().to_string(),
        }
    }

    pub fn side(self) -> Side {
        let name = self.name();
        if name.starts_with("left_") {
            Side::Left
        } else if name.starts_with("right_") {
            Side::Right
        } else {
            Side::Center
        }
    }

    /// The joint on the opposite side of the body; midline joints map to themselves.
    pub fn mirror(self) -> Joint {
        use Joint::*;
        match self {
            LeftHip => RightHip,
            RightHip => LeftHip,
            LeftKnee => RightKnee,
            RightKnee => LeftKnee,
            LeftAnkle => RightAnkle,
            RightAnkle => LeftAnkle,
            LeftFoot => RightFoot,
            RightFoot => LeftFoot,
            LeftCollar => RightCollar,
            RightCollar => LeftCollar,
            LeftShoulder => RightShoulder,
            RightShoulder => LeftShoulder,
            LeftElbow => RightElbow,
            RightElbow => LeftElbow,
            LeftWrist => RightWrist,
            RightWrist => LeftWrist,
            other => other,
        }
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Joint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Joint::ALL
            .iter()
            .copied()
            .find(|j| j.name() == s)
            .ok_or_else(|| Error::UnknownJoint(s.to_string()))
    }
}

/// A named group of joints that can be described as one body part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityGroup {
    pub name: String,
    pub joints: Vec<Joint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonSpec {
    pub joints: Vec<Joint>,
    pub symmetry_pairs: Vec<(Joint, Joint)>,
    pub entity_groups: Vec<EntityGroup>,
}

impl Default for SkeletonSpec {
    fn default() -> Self {
        use Joint::*;
        let symmetry_pairs = Joint::ALL
            .iter()
            .copied()
            .filter(|j| j.side() == Side::Left)
            .map(|j| (j, j.mirror()))
            .collect();
        let group = |name: &str, joints: &[Joint]| EntityGroup {
            name: name.to_string(),
            joints: joints.to_vec(),
        };
        SkeletonSpec {
            joints: Joint::ALL.to_vec(),
            symmetry_pairs,
            entity_groups: vec![
                group("left arm", &[LeftShoulder, LeftElbow, LeftWrist]),
                group("right arm", &[RightShoulder, RightElbow, RightWrist]),
                group("left leg", &[LeftHip, LeftKnee, LeftAnkle, LeftFoot]),
                group("right leg", &[RightHip, RightKnee, RightAnkle, RightFoot]),
                group("torso", &[Pelvis, Spine1, Spine2, Spine3]),
            ],
        }
    }
}

impl SkeletonSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.joints.len() != JOINT_COUNT {
            return Err(Error::Invalid(format!(
                "skeleton must have {JOINT_COUNT} joints, found {}",
                self.joints.len()
            )));
        }
        for &(left, right) in &self.symmetry_pairs {
            if left.side() != Side::Left || left.mirror() != right {
                return Err(Error::Invalid(format!(
                    "symmetry pair ({left}, {right}) does not map a left joint to its right counterpart"
                )));
            }
        }
        for group in &self.entity_groups {
            if group.joints.is_empty() {
                return Err(Error::Invalid(format!("entity group {:?} is empty", group.name)));
            }
            if let Some(j) = group.joints.iter().find(|j| !self.joints.contains(j)) {
                return Err(Error::Invalid(format!(
                    "entity group {:?} references unknown joint {j}",
                    group.name
                )));
            }
        }
        Ok(())
    }

    /// The entity group containing `joint`, if any.
    pub fn entity_of(&self, joint: Joint) -> Option<&EntityGroup> {
        self.entity_groups.iter().find(|g| g.joints.contains(&joint))
    }

    pub fn entity(&self, name: &str) -> Option<&EntityGroup> {
        self.entity_groups.iter().find(|g| g.name == name)
    }
}
