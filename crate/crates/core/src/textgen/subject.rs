//! Choosing the acting joint of a two-joint motioncode.

use serde::{Deserialize, Serialize};

use crate::motion::MotionSequence;
use crate::motioncode::Motioncode;
use crate::skeleton::Joint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectMode {
    SingleJoint,
    Mutual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectChoice {
    pub mode: SubjectMode,
    pub joint: Option<Joint>,
    pub share: f64,
}

/// Decides from the two joints' travel distances alone. `share` is the
/// larger distance over the sum; at or above `threshold` the farther-moving
/// joint becomes the subject, otherwise both are (ties go to `a`).
pub fn choose_subject(a: (Joint, f64), b: (Joint, f64), threshold: f64) -> SubjectChoice {
    let total = a.1 + b.1;
    if !(total > 0.0) {
        return SubjectChoice {
            mode: SubjectMode::Mutual,
            joint: None,
            share: 0.5,
        };
    }
    let (lead, d) = if b.1 > a.1 { b } else { a };
    let share = d / total;
    if share >= threshold {
        SubjectChoice {
            mode: SubjectMode::SingleJoint,
            joint: Some(lead),
            share,
        }
    } else {
        SubjectChoice {
            mode: SubjectMode::Mutual,
            joint: None,
            share,
        }
    }
}

/// Straight-line travel of `joint` between two frames.
pub fn travel(seq: &MotionSequence, joint: Joint, t_start: usize, t_end: usize) -> f64 {
    (seq.position(t_end, joint) - seq.position(t_start, joint)).norm()
}

/// Subject of a two-joint motioncode over its interval; `None` for codes
/// that do not relate two joints.
pub fn select_subject(code: &Motioncode, seq: &MotionSequence, threshold: f64) -> Option<SubjectChoice> {
    let b = code.instance.counterpart()?;
    let a = code.instance.joints[0];
    let da = travel(seq, a, code.t_start, code.t_end);
    let db = travel(seq, b, code.t_start, code.t_end);
    Some(choose_subject((a, da), (b, db), threshold))
}
