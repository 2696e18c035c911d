//! Caption text: subject choice, pose injection and template rendering.

mod cover;
mod render;
mod subject;
mod templates;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use cover::{candidate_weight, choose_pose_injection, greedy_weighted_cover, CoverResult, InjectionChoice, PoseCandidate};
pub use render::{
    conjugate, eligible_candidates, plan_injections, render_caption, CaptionDocument, InjectedPose, ItemInjection,
    PoseState,
};
pub use subject::{choose_subject, select_subject, travel, SubjectChoice, SubjectMode};
pub use templates::{TemplateLibrary, DEFAULT_TEMPLATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextgenConfig {
    /// Travel share at which one joint of a pair becomes the subject.
    pub subject_threshold: f64,
    pub start_injection_probability: f64,
    pub end_injection_probability: f64,
    /// Template library file; the bundled library when absent.
    pub templates: Option<PathBuf>,
}

impl Default for TextgenConfig {
    fn default() -> Self {
        TextgenConfig {
            subject_threshold: 0.6,
            start_injection_probability: 0.5,
            end_injection_probability: 0.3,
            templates: None,
        }
    }
}

impl TextgenConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("subject_threshold", self.subject_threshold),
            ("start_injection_probability", self.start_injection_probability),
            ("end_injection_probability", self.end_injection_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("textgen.{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}
