//! The sentence template library and its text format.

use std::collections::BTreeMap;

use crate::aggregate::Relation;
use crate::error::{Error, Result};
use crate::motioncode::{all_direction_labels, Family, IntensityClass, VelocityClass};

pub const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.txt");

pub const SLOT_SUBJECT: &str = "⟨subject⟩";
pub const SLOT_VERB: &str = "⟨verb⟩";
pub const SLOT_INTENSITY: &str = "⟨intensity⟩";
pub const SLOT_VELOCITY: &str = "⟨velocity⟩";
pub const SLOT_CONNECTIVE: &str = "⟨connective⟩";
pub const SLOT_POSE: &str = "⟨pose⟩";
pub const SLOT_MOTION: &str = "⟨motion⟩";
pub const SLOT_OBJECT: &str = "⟨object⟩";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Verb(Family, String),
    Intensity(IntensityClass),
    Velocity(VelocityClass),
    Connective(Relation),
    Clause,
    PoseToMotion,
    MotionToPose,
}

impl Section {
    fn parse(header: &str) -> Option<Section> {
        let words: Vec<&str> = header.split_whitespace().collect();
        match words.as_slice() {
            ["verb", family, label @ ..] if !label.is_empty() => {
                Some(Section::Verb(Family::from_name(family)?, label.join(" ")))
            }
            ["intensity", rest @ ..] => IntensityClass::from_name(&rest.join(" ")).map(Section::Intensity),
            ["velocity", rest @ ..] => VelocityClass::from_name(&rest.join(" ")).map(Section::Velocity),
            ["connective", rest @ ..] => Relation::from_name(&rest.join(" ")).map(Section::Connective),
            ["clause"] => Some(Section::Clause),
            ["pose-to-motion"] => Some(Section::PoseToMotion),
            ["motion-to-pose"] => Some(Section::MotionToPose),
            _ => None,
        }
    }

    fn allowed_slots(&self) -> &'static [&'static str] {
        match self {
            Section::Verb(..) => &[SLOT_OBJECT],
            Section::Clause => &[SLOT_CONNECTIVE, SLOT_SUBJECT, SLOT_VERB, SLOT_INTENSITY, SLOT_VELOCITY],
            Section::PoseToMotion | Section::MotionToPose => &[SLOT_POSE, SLOT_MOTION],
            _ => &[],
        }
    }

    fn required_slots(&self) -> &'static [&'static str] {
        match self {
            Section::Clause => &[SLOT_SUBJECT, SLOT_VERB],
            Section::PoseToMotion | Section::MotionToPose => &[SLOT_POSE, SLOT_MOTION],
            _ => &[],
        }
    }
}

/// Every `⟨...⟩` marker in a line.
fn slots(line: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = line;
    while let Some(open) = rest.find('⟨') {
        let after = &rest[open..];
        let close = after.find('⟩').ok_or_else(|| format!("unclosed slot marker in {line:?}"))?;
        out.push(&after[..close + '⟩'.len_utf8()]);
        rest = &after[close + '⟩'.len_utf8()..];
    }
    if rest.contains('⟩') {
        return Err(format!("stray slot marker in {line:?}"));
    }
    Ok(out)
}

/// Phrase lists for every part of a caption, validated on load so rendering
/// never meets a missing entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLibrary {
    sections: BTreeMap<Section, Vec<String>>,
}

impl TemplateLibrary {
    pub fn parse(text: &str) -> Result<TemplateLibrary> {
        let mut sections: BTreeMap<Section, Vec<String>> = BTreeMap::new();
        let mut current: Option<Section> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let location = format!("line {}", n + 1);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let section = Section::parse(header)
                    .ok_or_else(|| Error::Template(format!("{location}: unknown section [{header}]")))?;
                sections.entry(section.clone()).or_default();
                current = Some(section);
                continue;
            }
            let Some(section) = current.as_ref() else {
                return Err(Error::Template(format!("{location}: phrase outside any section")));
            };
            let found = slots(line).map_err(|e| Error::Template(format!("{location}: {e}")))?;
            for slot in &found {
                if !section.allowed_slots().contains(slot) {
                    return Err(Error::Template(format!("{location}: slot {slot} has no filler here")));
                }
            }
            for slot in section.required_slots() {
                if !found.contains(slot) {
                    return Err(Error::Template(format!("{location}: missing slot {slot}")));
                }
            }
            sections.get_mut(section).expect("inserted at header").push(line.to_string());
        }
        let library = TemplateLibrary { sections };
        library.validate()?;
        Ok(library)
    }

    pub fn load(path: &std::path::Path) -> Result<TemplateLibrary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TemplateLibrary::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let mut required: Vec<(Section, String)> = all_direction_labels()
            .into_iter()
            .map(|(f, l)| (Section::Verb(f, l.to_string()), format!("verb {} {l}", f.name())))
            .collect();
        for i in [IntensityClass::Slight, IntensityClass::Moderate, IntensityClass::Significant] {
            required.push((Section::Intensity(i), format!("intensity {}", i.name())));
        }
        for v in VelocityClass::ALL {
            required.push((Section::Velocity(v), format!("velocity {}", v.name())));
        }
        for r in Relation::ALL {
            required.push((Section::Connective(r), format!("connective {}", r.name())));
        }
        required.push((Section::Clause, "clause".into()));
        required.push((Section::PoseToMotion, "pose-to-motion".into()));
        required.push((Section::MotionToPose, "motion-to-pose".into()));
        for (section, name) in required {
            if self.sections.get(&section).is_none_or(|v| v.is_empty()) {
                return Err(Error::Template(format!("section [{name}] needs at least one phrase")));
            }
        }
        Ok(())
    }

    fn get(&self, section: &Section) -> &[String] {
        self.sections.get(section).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn verbs(&self, family: Family, label: &str) -> &[String] {
        self.get(&Section::Verb(family, label.to_string()))
    }

    pub fn intensity(&self, class: IntensityClass) -> &[String] {
        self.get(&Section::Intensity(class))
    }

    pub fn velocity(&self, class: VelocityClass) -> &[String] {
        self.get(&Section::Velocity(class))
    }

    pub fn connectives(&self, relation: Relation) -> &[String] {
        self.get(&Section::Connective(relation))
    }

    pub fn clauses(&self) -> &[String] {
        self.get(&Section::Clause)
    }

    pub fn pose_to_motion(&self) -> &[String] {
        self.get(&Section::PoseToMotion)
    }

    pub fn motion_to_pose(&self) -> &[String] {
        self.get(&Section::MotionToPose)
    }
}

impl Default for TemplateLibrary {
    fn default() -> Self {
        TemplateLibrary::parse(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}
