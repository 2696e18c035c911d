//! Motion segmentation over posecode timelines and motioncode attributes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::motion::MotionSequence;
use crate::noise::{Domain, NoiseConfig};
use crate::posecode::{Axis, PosecodeInstance, PosecodeKind, PosecodeTimeline};

/// One detected run of same-direction category transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub t_start: usize,
    pub t_end: usize,
    /// +1 or -1.
    pub direction: i32,
    pub start_category: i32,
    pub end_category: i32,
}

impl MotionSegment {
    pub fn frames(&self) -> usize {
        self.t_end - self.t_start
    }
}

/// Segmentation knobs, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationParams {
    /// Frames a new category must persist before the change counts.
    pub min_run: usize,
    /// Segments with fewer counted transitions are dropped.
    pub min_transitions: u32,
    /// Longest stay in an intermediate category that still continues a segment.
    pub max_range: usize,
}

/// Stable runs `(category, first, last)` in the index space of observed
/// (non-ignored) frames, after hysteresis: runs shorter than `min_run` are
/// absorbed into the preceding stable category, and everything before the
/// first long-enough run takes that run's category.
fn stable_runs(observed: &[i32], min_run: usize) -> Vec<(i32, usize, usize)> {
    let mut raw: Vec<(i32, usize, usize)> = Vec::new();
    for (k, &c) in observed.iter().enumerate() {
        match raw.last_mut() {
            Some(run) if run.0 == c => run.2 = k,
            _ => raw.push((c, k, k)),
        }
    }
    let min_run = min_run.max(1);
    let Some(first) = raw.iter().position(|r| r.2 - r.1 + 1 >= min_run) else {
        return Vec::new();
    };
    let mut stable = raw[first].0;
    let mut merged: Vec<(i32, usize, usize)> = Vec::new();
    for (i, &(c, a, b)) in raw.iter().enumerate() {
        let c = if i < first {
            stable
        } else if b - a + 1 >= min_run {
            stable = c;
            c
        } else {
            stable
        };
        match merged.last_mut() {
            Some(run) if run.0 == c => run.2 = b,
            _ => merged.push((c, a, b)),
        }
    }
    merged
}

/// Splits a category sequence into motion segments.
///
/// Ignored frames (`None`) are skipped, so a change across them is measured
/// between the flanking categories. A segment starts `min_run` observed
/// frames before its first counted change and ends on the frame confirming
/// its last change; it is closed by a direction flip or by a stay longer than
/// `max_range` frames in an intermediate category. Segment starts are clipped
/// to the previous segment's end so intervals never overlap.
pub fn detect_motion_segments(categories: &[Option<i32>], params: SegmentationParams) -> Vec<MotionSegment> {
    let (frames, observed): (Vec<usize>, Vec<i32>) = categories
        .iter()
        .enumerate()
        .filter_map(|(f, c)| c.map(|c| (f, c)))
        .unzip();
    let min_run = params.min_run.max(1);
    let runs = stable_runs(&observed, min_run);
    if runs.len() < 2 {
        return Vec::new();
    }

    // Groups of consecutive run indices: transition i goes from runs[i] to runs[i + 1].
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for i in 0..runs.len() - 1 {
        let sign = (runs[i + 1].0 - runs[i].0).signum();
        if let Some(group) = groups.last_mut() {
            let prev_sign = (runs[i].0 - runs[i - 1].0).signum();
            let (_, a, b) = runs[i];
            let stay = frames[b] - frames[a] + 1;
            if prev_sign == sign && stay <= params.max_range {
                group.1 = i;
                continue;
            }
        }
        groups.push((i, i));
    }

    let mut segments = Vec::new();
    let mut previous_end = 0;
    for (first, last) in groups {
        let k_first = runs[first + 1].1;
        let k_last = runs[last + 1].1;
        let t_start = frames[k_first - min_run].max(previous_end);
        let t_end = frames[k_last + min_run - 1];
        previous_end = t_end;
        let start_category = runs[first].0;
        let end_category = runs[last + 1].0;
        let transitions = (end_category - start_category).unsigned_abs();
        if transitions < params.min_transitions.max(1) {
            continue;
        }
        segments.push(MotionSegment {
            t_start,
            t_end,
            direction: (end_category - start_category).signum(),
            start_category,
            end_category,
        });
    }
    segments
}

/// Signed sum of counted category changes between the segment's start and
/// end, after the same hysteresis used for detection.
pub fn compute_spatial_attribute(segment: &MotionSegment, timeline: &PosecodeTimeline, min_run: usize) -> i32 {
    let (frames, observed): (Vec<usize>, Vec<i32>) = timeline
        .categories
        .iter()
        .enumerate()
        .filter_map(|(f, c)| c.map(|c| (f, c)))
        .unzip();
    let runs = stable_runs(&observed, min_run);
    let category_at = |frame: usize| {
        runs.iter()
            .take_while(|r| frames[r.1] <= frame)
            .last()
            .map(|r| r.0)
    };
    let mut sum = 0;
    let mut previous = category_at(segment.t_start);
    for run in runs.iter().filter(|r| frames[r.1] > segment.t_start && frames[r.1] <= segment.t_end) {
        if let Some(p) = previous {
            sum += run.0 - p;
        }
        previous = Some(run.0);
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityClass {
    VerySlow,
    Slow,
    Moderate,
    Fast,
    VeryFast,
}

impl VelocityClass {
    pub const ALL: [VelocityClass; 5] = [
        VelocityClass::VerySlow,
        VelocityClass::Slow,
        VelocityClass::Moderate,
        VelocityClass::Fast,
        VelocityClass::VeryFast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VelocityClass::VerySlow => "very slow",
            VelocityClass::Slow => "slow",
            VelocityClass::Moderate => "moderate",
            VelocityClass::Fast => "fast",
            VelocityClass::VeryFast => "very fast",
        }
    }

    pub fn from_name(name: &str) -> Option<VelocityClass> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityClass {
    Stationary,
    Slight,
    Moderate,
    Significant,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 4] = [
        IntensityClass::Stationary,
        IntensityClass::Slight,
        IntensityClass::Moderate,
        IntensityClass::Significant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntensityClass::Stationary => "stationary",
            IntensityClass::Slight => "slight",
            IntensityClass::Moderate => "moderate",
            IntensityClass::Significant => "significant",
        }
    }

    pub fn from_name(name: &str) -> Option<IntensityClass> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotioncodeConfig {
    pub min_run: usize,
    pub min_transitions: u32,
    pub max_range_seconds: f64,
    /// Ascending edges in transitions per second between the five velocity classes.
    pub velocity_edges: [f64; 4],
    /// Smallest |M_S| for slight, moderate and significant.
    pub intensity_edges: [u32; 3],
}

impl Default for MotioncodeConfig {
    fn default() -> Self {
        MotioncodeConfig {
            min_run: 3,
            min_transitions: 1,
            max_range_seconds: 1.0,
            velocity_edges: [0.5, 1.5, 3.0, 6.0],
            intensity_edges: [1, 2, 3],
        }
    }
}

impl MotioncodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_run == 0 {
            return Err("motioncode.min_run must be at least 1".into());
        }
        if self.min_transitions == 0 {
            return Err("motioncode.min_transitions must be at least 1".into());
        }
        if !(self.max_range_seconds.is_finite() && self.max_range_seconds > 0.0) {
            return Err("motioncode.max_range_seconds must be positive".into());
        }
        let e = &self.velocity_edges;
        if !(e.iter().all(|x| x.is_finite() && *x > 0.0) && e.windows(2).all(|w| w[0] < w[1])) {
            return Err("motioncode.velocity_edges must be positive and strictly ascending".into());
        }
        let i = &self.intensity_edges;
        if !(i[0] >= 1 && i[0] < i[1] && i[1] < i[2]) {
            return Err("motioncode.intensity_edges must be strictly ascending and start at 1 or more".into());
        }
        Ok(())
    }

    pub fn segmentation(&self, fps: f64) -> SegmentationParams {
        SegmentationParams {
            min_run: self.min_run,
            min_transitions: self.min_transitions,
            max_range: ((self.max_range_seconds * fps).round() as usize).max(1),
        }
    }

    pub fn intensity(&self, magnitude: u32) -> IntensityClass {
        let [slight, moderate, significant] = self.intensity_edges;
        if magnitude >= significant {
            IntensityClass::Significant
        } else if magnitude >= moderate {
            IntensityClass::Moderate
        } else if magnitude >= slight {
            IntensityClass::Slight
        } else {
            IntensityClass::Stationary
        }
    }
}

/// `M_V = |M_S| / (T_e - T_s)` in transitions per frame, and its class from
/// `M_V * fps` against `edges` scaled by `edge_scale`.
pub fn compute_velocity_attribute(
    spatial: i32,
    t_start: usize,
    t_end: usize,
    fps: f64,
    edges: &[f64; 4],
    edge_scale: f64,
) -> (f64, VelocityClass) {
    assert!(t_end > t_start, "segment must span at least one frame");
    let velocity = spatial.unsigned_abs() as f64 / (t_end - t_start) as f64;
    let per_second = velocity * fps;
    let class = edges.iter().filter(|&&e| e * edge_scale <= per_second).count();
    (velocity, VelocityClass::ALL[class])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Angular,
    Proximity,
    SpatialRelation,
    Displacement,
    Rotation,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Angular,
        Family::Proximity,
        Family::SpatialRelation,
        Family::Displacement,
        Family::Rotation,
    ];

    pub fn of(kind: PosecodeKind) -> Option<Family> {
        match kind {
            PosecodeKind::Angle => Some(Family::Angular),
            PosecodeKind::Distance => Some(Family::Proximity),
            PosecodeKind::RelativePosition { .. } => Some(Family::SpatialRelation),
            PosecodeKind::Position { .. } => Some(Family::Displacement),
            PosecodeKind::Orientation { .. } => Some(Family::Rotation),
            PosecodeKind::PitchRoll | PosecodeKind::GroundContact => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Angular => "angular",
            Family::Proximity => "proximity",
            Family::SpatialRelation => "spatial-relation",
            Family::Displacement => "displacement",
            Family::Rotation => "rotation",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn has_intensity(self) -> bool {
        self != Family::SpatialRelation
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `[negative, positive]` direction labels of a family on an axis.
pub fn direction_labels(family: Family, axis: Option<Axis>) -> [&'static str; 2] {
    match (family, axis) {
        (Family::Angular, _) => ["extending", "bending"],
        (Family::Proximity, _) => ["closing", "spreading"],
        (Family::SpatialRelation, Some(Axis::X)) => ["left-to-right", "right-to-left"],
        (Family::SpatialRelation, Some(Axis::Y)) => ["above-to-below", "below-to-above"],
        (Family::SpatialRelation, _) => ["front-to-behind", "behind-to-front"],
        (Family::Displacement, Some(Axis::X)) => ["rightward", "leftward"],
        (Family::Displacement, Some(Axis::Y)) => ["downward", "upward"],
        (Family::Displacement, _) => ["backward", "forward"],
        (Family::Rotation, Some(Axis::X)) => ["leaning backward", "leaning forward"],
        (Family::Rotation, Some(Axis::Y)) => ["turning clockwise", "turning counter-clockwise"],
        (Family::Rotation, _) => ["leaning left", "leaning right"],
    }
}

/// Every `(family, label)` pair a motioncode can carry.
pub fn all_direction_labels() -> Vec<(Family, &'static str)> {
    let mut out = Vec::new();
    for family in Family::ALL {
        for axis in [Some(Axis::X), Some(Axis::Y), Some(Axis::Z)] {
            for label in direction_labels(family, axis) {
                if !out.contains(&(family, label)) {
                    out.push((family, label));
                }
            }
        }
    }
    out
}

/// Whether mirroring the body swaps the two direction labels.
pub fn mirror_flips_direction(family: Family, axis: Option<Axis>) -> bool {
    match family {
        Family::SpatialRelation | Family::Displacement => axis == Some(Axis::X),
        // Pitch keeps its sense; yaw and roll reverse.
        Family::Rotation => axis != Some(Axis::X),
        Family::Angular | Family::Proximity => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motioncode {
    pub family: Family,
    pub instance_index: usize,
    pub instance: PosecodeInstance,
    pub t_start: usize,
    pub t_end: usize,
    pub spatial: i32,
    pub velocity: f64,
    pub velocity_class: VelocityClass,
    pub intensity: Option<IntensityClass>,
    pub direction_label: String,
    pub start_category: i32,
    pub end_category: i32,
}

impl Motioncode {
    pub fn magnitude(&self) -> u32 {
        self.spatial.unsigned_abs()
    }

    pub fn duration(&self) -> usize {
        self.t_end - self.t_start
    }

    pub fn direction(&self) -> i32 {
        self.spatial.signum()
    }
}

impl fmt::Display for Motioncode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} [{}, {}) M_S={:+}",
            self.family, self.instance, self.direction_label, self.t_start, self.t_end, self.spatial
        )
    }
}

/// Runs segmentation on every timeline that maps to a motioncode family and
/// labels the segments. Output is ordered by instance index, then start frame.
pub fn build_motioncodes(
    timelines: &[PosecodeTimeline],
    seq: &MotionSequence,
    config: &MotioncodeConfig,
    noise: &NoiseConfig,
) -> Vec<Motioncode> {
    let params = config.segmentation(seq.fps());
    let mut codes = Vec::new();
    for timeline in timelines {
        let Some(family) = Family::of(timeline.instance.kind) else {
            continue;
        };
        for segment in detect_motion_segments(&timeline.categories, params) {
            let spatial = segment.end_category - segment.start_category;
            let jitter = noise.standard_normal(Domain::VelocityEdges, timeline.instance_index, segment.t_start);
            let edge_scale = (1.0 + noise.velocity_sigma * jitter).max(0.1);
            let (velocity, velocity_class) = compute_velocity_attribute(
                spatial,
                segment.t_start,
                segment.t_end,
                seq.fps(),
                &config.velocity_edges,
                edge_scale,
            );
            let labels = direction_labels(family, timeline.instance.kind.axis());
            codes.push(Motioncode {
                family,
                instance_index: timeline.instance_index,
                instance: timeline.instance.clone(),
                t_start: segment.t_start,
                t_end: segment.t_end,
                spatial,
                velocity,
                velocity_class,
                intensity: family.has_intensity().then(|| config.intensity(spatial.unsigned_abs())),
                direction_label: labels[usize::from(spatial > 0)].to_string(),
                start_category: segment.start_category,
                end_category: segment.end_category,
            });
        }
    }
    codes.sort_by_key(|c| (c.instance_index, c.t_start));
    codes
}
