//! Motion sequences: parsing, validation, normalization and mirroring.

use std::fmt;
use std::io::{BufRead, Cursor};
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use log::warn;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Joint, JOINT_COUNT};

pub type Vec3 = Vector3<f64>;

/// Frame rate assumed for flat-csv files that do not declare one.
pub const DEFAULT_CSV_FPS: f64 = 20.0;

/// Hip-line length (projected on the ground plane) below which the facing
/// direction of frame 0 is considered undefined.
const DEGENERATE_HIP_LINE: f64 = 1e-9;

/// One pose: a position per canonical joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(pub [Vec3; JOINT_COUNT]);

impl Frame {
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Frame {
        Frame(std::array::from_fn(|i| f(&self.0[i])))
    }
}

impl Index<Joint> for Frame {
    type Output = Vec3;

    fn index(&self, joint: Joint) -> &Vec3 {
        &self.0[joint.index()]
    }
}

impl IndexMut<Joint> for Frame {
    fn index_mut(&mut self, joint: Joint) -> &mut Vec3 {
        &mut self.0[joint.index()]
    }
}

/// A validated joint trajectory. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    fps: f64,
    frames: Vec<Frame>,
    normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MotionFormat {
    #[default]
    #[serde(rename = "canonical-json")]
    CanonicalJson,
    #[serde(rename = "flat-csv")]
    FlatCsv,
}

impl MotionFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MotionFormat::CanonicalJson => "json",
            MotionFormat::FlatCsv => "csv",
        }
    }
}

impl FromStr for MotionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical-json" => Ok(MotionFormat::CanonicalJson),
            "flat-csv" => Ok(MotionFormat::FlatCsv),
            other => Err(Error::Config(format!(
                "unknown motion format {other:?} (expected canonical-json or flat-csv)"
            ))),
        }
    }
}

impl fmt::Display for MotionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionFormat::CanonicalJson => "canonical-json",
            MotionFormat::FlatCsv => "flat-csv",
        })
    }
}

impl MotionSequence {
    pub fn new(fps: f64, frames: Vec<Frame>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::parse("fps", "fps must be positive"));
        }
        if frames.len() < 2 {
            return Err(Error::parse(
                "frames",
                format!("sequence needs at least 2 frames, found {}", frames.len()),
            ));
        }
        for (f, frame) in frames.iter().enumerate() {
            for joint in Joint::ALL {
                let p = frame[joint];
                if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                    return Err(Error::parse(
                        format!("frame {f}, joint {joint}"),
                        "non-finite coordinate",
                    ));
                }
            }
        }
        Ok(MotionSequence {
            fps,
            frames,
            normalized: false,
        })
    }

    /// Builds a sequence from a row-major `F x 22 x 3` buffer.
    pub fn from_flat(fps: f64, data: &[f64], frame_count: usize) -> Result<Self> {
        let expected = frame_count * JOINT_COUNT * 3;
        if data.len() != expected {
            return Err(Error::Invalid(format!(
                "buffer holds {} values, expected {frame_count} x {JOINT_COUNT} x 3 = {expected}",
                data.len()
            )));
        }
        let frames = data
            .chunks_exact(JOINT_COUNT * 3)
            .map(|chunk| {
                Frame(std::array::from_fn(|j| {
                    Vec3::new(chunk[3 * j], chunk[3 * j + 1], chunk[3 * j + 2])
                }))
            })
            .collect();
        MotionSequence::new(fps, frames)
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn position(&self, frame: usize, joint: Joint) -> Vec3 {
        self.frames[frame][joint]
    }

    /// Same positions, with the normalized flag cleared.
    pub fn into_raw(mut self) -> Self {
        self.normalized = false;
        self
    }

    /// Applies `p -> R_y(angle) p + translation` to every joint of every frame.
    pub fn rigidly_transformed(&self, yaw_radians: f64, translation: Vec3) -> MotionSequence {
        let (s, c) = yaw_radians.sin_cos();
        let frames = self
            .frames
            .iter()
            .map(|frame| {
                frame.map(|p| {
                    Vec3::new(c * p.x + s * p.z, p.y, -s * p.x + c * p.z) + translation
                })
            })
            .collect();
        MotionSequence {
            fps: self.fps,
            frames,
            normalized: false,
        }
    }

    /// Frames in reverse order.
    pub fn reversed(&self) -> MotionSequence {
        MotionSequence {
            fps: self.fps,
            frames: self.frames.iter().rev().cloned().collect(),
            normalized: self.normalized,
        }
    }

    /// Flattened row-major `F x 22 x 3` copy of the positions.
    pub fn to_flat(&self) -> Vec<f64> {
        self.frames
            .iter()
            .flat_map(|f| f.0.iter().flat_map(|p| [p.x, p.y, p.z]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub sequence: MotionSequence,
    /// Set when the frame-0 hips coincide and the facing rotation was skipped.
    pub warning: Option<String>,
}

/// Moves the frame-0 root onto the vertical axis and turns the body so that
/// it faces `+z` at frame 0. Heights are left untouched.
pub fn normalize_sequence(seq: &MotionSequence) -> Normalized {
    let first = &seq.frames[0];
    let root = first[Joint::ROOT];
    let translate = root.x != 0.0 || root.z != 0.0;

    let hip_line = first[Joint::LeftHip] - first[Joint::RightHip];
    // Facing direction is the hip line crossed with +y: (-hz, 0, hx).
    let (fx, fz) = (-hip_line.z, hip_line.x);
    let length = fx.hypot(fz);

    let mut warning = None;
    let rotation = if length < DEGENERATE_HIP_LINE {
        let message = "frame 0 hips coincide; facing direction undefined, rotation skipped".to_string();
        warn!("{message}");
        warning = Some(message);
        None
    } else {
        let (s, c) = (fx / length, fz / length);
        if s.abs() < 1e-12 && c > 0.0 {
            None
        } else {
            Some((s, c))
        }
    };

    let frames = seq
        .frames
        .iter()
        .map(|frame| {
            frame.map(|p| {
                let q = if translate {
                    Vec3::new(p.x - root.x, p.y, p.z - root.z)
                } else {
                    *p
                };
                match rotation {
                    // R_y by the angle taking (s, c) onto (0, 1).
                    Some((s, c)) => Vec3::new(c * q.x - s * q.z, q.y, s * q.x + c * q.z),
                    None => q,
                }
            })
        })
        .collect();

    Normalized {
        sequence: MotionSequence {
            fps: seq.fps,
            frames,
            normalized: true,
        },
        warning,
    }
}

/// Reflects the sequence through the sagittal plane (`x -> -x`) and swaps
/// left/right joint channels.
pub fn mirror_sequence(seq: &MotionSequence) -> MotionSequence {
    let frames = seq
        .frames
        .iter()
        .map(|frame| {
            Frame(std::array::from_fn(|i| {
                let source = frame[Joint::ALL[i].mirror()];
                Vec3::new(-source.x, source.y, source.z)
            }))
        })
        .collect();
    MotionSequence {
        fps: seq.fps,
        frames,
        normalized: seq.normalized,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalFile {
    fps: f64,
    joints: Vec<String>,
    frames: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    unit_scale: Option<f64>,
}

#[derive(Serialize)]
struct CanonicalFileOut<'a> {
    fps: f64,
    joints: Vec<&'a str>,
    frames: Vec<Vec<[f64; 3]>>,
}

pub fn parse_motion_file(bytes: &[u8], format: MotionFormat) -> Result<MotionSequence> {
    match format {
        MotionFormat::CanonicalJson => parse_canonical_json(bytes),
        MotionFormat::FlatCsv => parse_flat_csv(bytes),
    }
}

fn check_unit_scale(scale: f64) -> Result<f64> {
    if scale.is_finite() && scale > 0.0 {
        Ok(scale)
    } else {
        Err(Error::parse("unit_scale", "unit_scale must be positive"))
    }
}

fn parse_canonical_json(bytes: &[u8]) -> Result<MotionSequence> {
    let file: CanonicalFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;

    if !(file.fps.is_finite() && file.fps > 0.0) {
        return Err(Error::parse("fps", "fps must be positive"));
    }
    let scale = check_unit_scale(file.unit_scale.unwrap_or(1.0))?;

    if file.joints.len() != JOINT_COUNT {
        return Err(Error::parse(
            "joints",
            format!("joint count {} \u{2260} {JOINT_COUNT}", file.joints.len()),
        ));
    }
    // Column permutation from file order to canonical order.
    let mut column_of = [usize::MAX; JOINT_COUNT];
    for (col, name) in file.joints.iter().enumerate() {
        let joint: Joint = name
            .parse()
            .map_err(|_| Error::parse(format!("joints[{col}]"), format!("unknown joint {name:?}")))?;
        if column_of[joint.index()] != usize::MAX {
            return Err(Error::parse(format!("joints[{col}]"), format!("duplicate joint {name:?}")));
        }
        column_of[joint.index()] = col;
    }

    let mut frames = Vec::with_capacity(file.frames.len());
    for (f, rows) in file.frames.iter().enumerate() {
        if rows.len() != JOINT_COUNT {
            return Err(Error::parse(
                format!("frame {f}"),
                format!("joint count {} \u{2260} {JOINT_COUNT}", rows.len()),
            ));
        }
        for (col, triple) in rows.iter().enumerate() {
            if triple.len() != 3 {
                return Err(Error::parse(
                    format!("frame {f}, joint {}", file.joints[col]),
                    format!("expected 3 coordinates, found {}", triple.len()),
                ));
            }
            if let Some(v) = triple.iter().find(|v| !v.is_finite()) {
                return Err(Error::parse(
                    format!("frame {f}, joint {}", file.joints[col]),
                    format!("non-finite value {v}"),
                ));
            }
        }
        frames.push(Frame(std::array::from_fn(|j| {
            let t = &rows[column_of[j]];
            Vec3::new(t[0], t[1], t[2]) * scale
        })));
    }
    MotionSequence::new(file.fps, frames)
}

/// Reads leading `# key: value` comment lines of a flat-csv file.
fn csv_header_fields(bytes: &[u8]) -> Result<(f64, f64)> {
    let mut fps = DEFAULT_CSV_FPS;
    let mut scale = 1.0;
    for (n, line) in Cursor::new(bytes).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(format!("line {}", n + 1), e.to_string()))?;
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            break;
        };
        let Some((key, value)) = comment.split_once(':') else {
            continue;
        };
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("line {}", n + 1), format!("{}: {e}", key.trim())))
        };
        match key.trim() {
            "fps" => fps = parse(value)?,
            "unit_scale" => scale = parse(value)?,
            _ => {}
        }
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::parse("fps", "fps must be positive"));
    }
    Ok((fps, check_unit_scale(scale)?))
}

fn parse_flat_csv(bytes: &[u8]) -> Result<MotionSequence> {
    let (fps, scale) = csv_header_fields(bytes)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["frame", "joint", "x", "y", "z"] {
        return Err(Error::parse("header", "expected header row `frame,joint,x,y,z`"));
    }

    let mut frames: Vec<Frame> = Vec::new();
    let mut current: Vec<Vec3> = Vec::with_capacity(JOINT_COUNT);
    let mut current_frame = 0usize;

    let flush = |frames: &mut Vec<Frame>, current: &mut Vec<Vec3>, index: usize| -> Result<()> {
        if current.len() != JOINT_COUNT {
            return Err(Error::parse(
                format!("frame {index}"),
                format!("joint count {} \u{2260} {JOINT_COUNT}", current.len()),
            ));
        }
        frames.push(Frame(std::array::from_fn(|j| current[j])));
        current.clear();
        Ok(())
    };

    for (row, record) in reader.records().enumerate() {
        let location = |msg: &str| format!("row {} ({msg})", row + 1);
        let record = record.map_err(|e| Error::parse(location("syntax"), e.to_string()))?;
        if record.len() != 5 {
            return Err(Error::parse(location("fields"), format!("expected 5 fields, found {}", record.len())));
        }
        let frame: usize = record[0]
            .parse()
            .map_err(|_| Error::parse(location("frame"), format!("bad frame index {:?}", &record[0])))?;
        if frame != current_frame {
            if frame != current_frame + 1 {
                return Err(Error::parse(
                    location("frame"),
                    format!("rows must be sorted by frame; expected frame {} or {}, found {frame}", current_frame, current_frame + 1),
                ));
            }
            flush(&mut frames, &mut current, current_frame)?;
            current_frame = frame;
        }
        let expected = Joint::ALL
            .get(current.len())
            .ok_or_else(|| Error::parse(format!("frame {frame}"), format!("joint count exceeds {JOINT_COUNT}")))?;
        if &record[1] != expected.name() {
            return Err(Error::parse(
                format!("frame {frame}, row {}", row + 1),
                format!("expected joint {expected}, found {:?}", &record[1]),
            ));
        }
        let mut xyz = [0.0; 3];
        for (k, slot) in xyz.iter_mut().enumerate() {
            let field = &record[2 + k];
            let value: f64 = field
                .parse()
                .map_err(|_| Error::parse(format!("frame {frame}, joint {expected}"), format!("bad number {field:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(
                    format!("frame {frame}, joint {expected}"),
                    format!("non-finite value {value}"),
                ));
            }
            *slot = value * scale;
        }
        current.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    if !current.is_empty() {
        flush(&mut frames, &mut current, current_frame)?;
    }
    MotionSequence::new(fps, frames)
}

/// Serializes a sequence in the canonical JSON layout.
pub fn to_canonical_json(seq: &MotionSequence) -> String {
    let out = CanonicalFileOut {
        fps: seq.fps,
        joints: Joint::ALL.iter().map(|j| j.name()).collect(),
        frames: seq
            .frames
            .iter()
            .map(|f| f.0.iter().map(|p| [p.x, p.y, p.z]).collect())
            .collect(),
    };
    serde_json::to_string(&out).expect("motion serialization cannot fail")
}

/// Serializes a sequence as flat csv, with the frame rate in a leading comment.
pub fn to_flat_csv(seq: &MotionSequence) -> String {
    let mut out = format!("# fps: {}\nframe,joint,x,y,z\n", seq.fps);
    for (f, frame) in seq.frames.iter().enumerate() {
        for joint in Joint::ALL {
            let p = frame[joint];
            out.push_str(&format!("{f},{},{},{},{}\n", joint.name(), p.x, p.y, p.z));
        }
    }
    out
}
