//! Rule-based motion captioning from 3D joint trajectories.
//!
//! A sequence is normalized, reduced to per-frame posecode categories,
//! segmented into motioncodes, filtered, aggregated into caption items and
//! rendered from a template library. Every random choice is drawn from a
//! seeded, keyed stream, so a fixed seed reproduces a caption exactly.
//!
//! ```
//! use motionscript::{caption_sequence, synth, Joint, PipelineConfig};
//!
//! let seq = synth::arm_curl(Joint::RightElbow, 40);
//! let doc = caption_sequence(&seq, &PipelineConfig::default(), 7).unwrap();
//! assert!(doc.text.contains("elbow"));
//! ```

pub mod aggregate;
pub mod config;
pub mod error;
pub mod motion;
pub mod motioncode;
pub mod noise;
pub mod pipeline;
pub mod posecode;
pub mod skeleton;
pub mod synth;
pub mod textgen;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use motion::{MotionFormat, MotionSequence};
pub use pipeline::{caption_sequence, run_pipeline, Captioner, RunReport};
pub use skeleton::Joint;
pub use textgen::CaptionDocument;
