//! Turning aggregated motions into text.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cover::{choose_pose_injection, InjectionChoice, PoseCandidate};
use super::templates::*;
use crate::aggregate::{join_and, AggregatedMotion, Clause, Relation, Subject};
use crate::motioncode::{Family, IntensityClass, Motioncode};
use crate::posecode::{relative_position_labels, Axis, PosecodeKind, PosecodeTimeline, ANGLE_LABELS};
use crate::skeleton::Joint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoseState {
    Start,
    End,
}

/// Pose statements chosen for one caption item.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemInjection {
    pub start: Option<InjectionChoice>,
    pub end: Option<InjectionChoice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedPose {
    pub item: usize,
    pub state: PoseState,
    pub description: String,
    pub joints: Vec<Joint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionDocument {
    pub text: String,
    /// One fragment per caption item, in order.
    pub sentences: Vec<String>,
    pub injected_posecodes: Vec<InjectedPose>,
    pub seed: u64,
    pub no_salient_motion: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<serde_json::Value>,
}

fn describe_pose(kind: PosecodeKind, joints: &[Joint], category: i32) -> Option<String> {
    let name = |j: Joint| format!("the {}", j.display_name());
    let c = usize::try_from(category).ok()?;
    Some(match kind {
        PosecodeKind::Angle => format!("{} is {}", name(joints[1]), ANGLE_LABELS.get(c)?),
        PosecodeKind::Distance => match c {
            0 => format!("{} is close to {}", name(joints[0]), name(joints[1])),
            1 => format!("{} and {} are shoulder width apart", name(joints[0]), name(joints[1])),
            2 => format!("{} and {} are spread apart", name(joints[0]), name(joints[1])),
            3 => format!("{} and {} are wide apart", name(joints[0]), name(joints[1])),
            _ => return None,
        },
        PosecodeKind::RelativePosition { axis } => {
            let relation = match (axis, relative_position_labels(axis).get(c)?) {
                (Axis::X, label) => format!("to the {label}"),
                (_, label) => label.to_string(),
            };
            format!("{} is {relation} {}", name(joints[0]), name(joints[1]))
        }
        _ => return None,
    })
}

fn eligible_kind(family: Family, kind: PosecodeKind) -> bool {
    matches!(
        (family, kind),
        (Family::Angular, PosecodeKind::Angle)
            | (Family::Proximity, PosecodeKind::Distance)
            | (Family::SpatialRelation, PosecodeKind::RelativePosition { .. })
    )
}

/// Joints a pose statement about this instance speaks for.
fn covered_joints(kind: PosecodeKind, joints: &[Joint]) -> Vec<Joint> {
    match kind {
        PosecodeKind::Angle => vec![joints[1]],
        _ => joints.to_vec(),
    }
}

/// Non-ignored posecodes of the clause's kind at `frame`, plus "both ..."
/// statements where mirrored angle posecodes agree.
pub fn eligible_candidates(timelines: &[PosecodeTimeline], family: Family, frame: usize) -> Vec<PoseCandidate> {
    let mut out = Vec::new();
    let mut angles: Vec<(Joint, i32)> = Vec::new();
    for tl in timelines {
        let kind = tl.instance.kind;
        if !eligible_kind(family, kind) {
            continue;
        }
        let Some(category) = tl.categories.get(frame).copied().flatten() else {
            continue;
        };
        if let Some(description) = describe_pose(kind, &tl.instance.joints, category) {
            out.push(PoseCandidate {
                description,
                joints: covered_joints(kind, &tl.instance.joints),
            });
        }
        if kind == PosecodeKind::Angle {
            angles.push((tl.instance.joints[1], category));
        }
    }
    for &(j, c) in &angles {
        if j.mirror() != j && angles.contains(&(j.mirror(), c)) && j < j.mirror() {
            out.push(PoseCandidate {
                description: format!("both {} are {}", j.part_noun_plural(), ANGLE_LABELS[c as usize]),
                joints: vec![j, j.mirror()],
            });
        }
    }
    out
}

fn clause_targets(clause: &Clause, codes: &[Motioncode]) -> BTreeSet<Joint> {
    clause
        .members
        .iter()
        .flat_map(|&m| covered_joints(codes[m].instance.kind, &codes[m].instance.joints))
        .collect()
}

/// Decides per item whether to inject its start and end poses and picks
/// the statements by weighted set cover.
pub fn plan_injections<R: Rng>(
    items: &[AggregatedMotion],
    codes: &[Motioncode],
    timelines: &[PosecodeTimeline],
    p_start: f64,
    p_end: f64,
    rng: &mut R,
) -> Vec<ItemInjection> {
    items
        .iter()
        .map(|item| {
            let inject_start = rng.random_bool(p_start);
            let inject_end = rng.random_bool(p_end);
            let pick = |clause: &Clause, frame: usize| {
                let targets = clause_targets(clause, codes);
                let choice = choose_pose_injection(&targets, &eligible_candidates(timelines, clause.family, frame));
                (!choice.selected.is_empty()).then_some(choice)
            };
            let first = &item.clauses[0];
            let last = item.clauses.last().expect("non-empty");
            let start_frame = first.members.iter().map(|&m| codes[m].t_start).min().expect("non-empty");
            let end_frame = last.members.iter().map(|&m| codes[m].t_end).max().expect("non-empty");
            ItemInjection {
                start: if inject_start { pick(first, start_frame) } else { None },
                end: if inject_end { pick(last, end_frame) } else { None },
            }
        })
        .collect()
}

fn choose<'a, R: Rng>(options: &'a [String], rng: &mut R) -> &'a str {
    &options[rng.random_range(0..options.len())]
}

/// Third-person singular of the first word of a verb phrase.
pub fn conjugate(phrase: &str, singular: bool) -> String {
    if !singular {
        return phrase.to_string();
    }
    let (verb, rest) = phrase.split_once(' ').map_or((phrase, ""), |(v, r)| (v, r));
    let inflected = if ["s", "sh", "ch", "x", "z", "o"].iter().any(|e| verb.ends_with(e)) {
        format!("{verb}es")
    } else if verb.len() > 1
        && verb.ends_with('y')
        && !matches!(verb.as_bytes()[verb.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u')
    {
        format!("{}ies", &verb[..verb.len() - 1])
    } else {
        format!("{verb}s")
    };
    if rest.is_empty() {
        inflected
    } else {
        format!("{inflected} {rest}")
    }
}

fn subject_text<R: Rng>(subject: &Subject, templates: &TemplateLibrary, rng: &mut R) -> String {
    match subject {
        Subject::Compound { parts } => {
            let mut text = parts[0].subject.phrase();
            for w in parts.windows(2) {
                let relation = Relation::between(w[0].bin, w[1].bin);
                if relation == Relation::Simultaneous {
                    text.push_str(&format!(" and {}", w[1].subject.phrase()));
                } else {
                    let connective = choose(templates.connectives(relation), rng);
                    text.push_str(&format!(" and, {connective}, {}", w[1].subject.phrase()));
                }
            }
            text
        }
        other => other.phrase(),
    }
}

fn squeeze(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").replace(" ,", ",").replace(" .", ".")
}

fn render_clause<R: Rng>(
    clause: &Clause,
    connective: &str,
    subject: &str,
    templates: &TemplateLibrary,
    rng: &mut R,
) -> String {
    let skeleton = choose(templates.clauses(), rng).to_string();
    let object = match clause.object {
        Some(j) => format!("the {}", j.display_name()),
        None => ["each other", "one another"][rng.random_range(0..2)].to_string(),
    };
    let verb = choose(templates.verbs(clause.family, &clause.direction_label), rng).replace(SLOT_OBJECT, &object);
    let verb = conjugate(&verb, !clause.subject.is_plural());
    let intensity = match clause.intensity {
        Some(IntensityClass::Stationary) | None => String::new(),
        Some(class) => choose(templates.intensity(class), rng).to_string(),
    };
    let velocity = choose(templates.velocity(clause.velocity_class), rng).to_string();
    squeeze(
        &skeleton
            .replace(SLOT_CONNECTIVE, connective)
            .replace(SLOT_SUBJECT, subject)
            .replace(SLOT_VERB, &verb)
            .replace(SLOT_INTENSITY, &intensity)
            .replace(SLOT_VELOCITY, &velocity),
    )
}

/// Capitalizes each sentence and terminates the text with a period.
fn finish_sentences(text: &str) -> String {
    let mut out = text
        .split(". ")
        .map(|s| {
            let mut chars = s.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(". ");
    if !out.ends_with('.') {
        out.push('.');
    }
    out
}

fn render_item<R: Rng>(
    item: &AggregatedMotion,
    injection: &ItemInjection,
    templates: &TemplateLibrary,
    rng: &mut R,
) -> String {
    let lead = item.lead.map(|r| choose(templates.connectives(r), rng).to_string());
    let pronoun = if item.clauses[0].subject.is_plural() { "they" } else { "it" };
    let mut motion = String::new();
    for (k, clause) in item.clauses.iter().enumerate() {
        if k == 0 {
            let connective = match (&lead, &injection.start) {
                (Some(l), None) => format!("{l},"),
                _ => String::new(),
            };
            let subject = subject_text(&clause.subject, templates, rng);
            motion = render_clause(clause, &connective, &subject, templates, rng);
            continue;
        }
        let relation = item.clause_relations[k - 1];
        if relation == Relation::Simultaneous {
            motion.push(' ');
            motion.push_str(&render_clause(clause, "and", "", templates, rng));
        } else {
            let connective = format!("{},", choose(templates.connectives(relation), rng));
            motion.push_str(". ");
            motion.push_str(&render_clause(clause, &connective, pronoun, templates, rng));
        }
    }
    let describe = |choice: &InjectionChoice| {
        let parts: Vec<String> = choice.selected.iter().map(|c| c.description.clone()).collect();
        join_and(&parts)
    };
    if let Some(start) = &injection.start {
        motion = choose(templates.pose_to_motion(), rng)
            .replace(SLOT_POSE, &describe(start))
            .replace(SLOT_MOTION, &motion);
        if let Some(l) = &lead {
            motion = format!("{l}, {motion}");
        }
    }
    if let Some(end) = &injection.end {
        motion = choose(templates.motion_to_pose(), rng)
            .replace(SLOT_POSE, &describe(end))
            .replace(SLOT_MOTION, &motion);
    }
    finish_sentences(&squeeze(&motion))
}

/// Renders ordered caption items into one caption. An empty item list gives
/// an empty text flagged as having no salient motion.
pub fn render_caption<R: Rng>(
    items: &[AggregatedMotion],
    injections: &[ItemInjection],
    templates: &TemplateLibrary,
    seed: u64,
    rng: &mut R,
) -> CaptionDocument {
    let mut sentences = Vec::new();
    let mut injected = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let injection = injections.get(i).cloned().unwrap_or_default();
        for (state, choice) in [(PoseState::Start, &injection.start), (PoseState::End, &injection.end)] {
            for c in choice.iter().flat_map(|c| c.selected.iter()) {
                injected.push(InjectedPose {
                    item: i,
                    state,
                    description: c.description.clone(),
                    joints: c.joints.clone(),
                });
            }
        }
        sentences.push(render_item(item, &injection, templates, rng));
    }
    CaptionDocument {
        text: sentences.join(" "),
        no_salient_motion: sentences.is_empty(),
        sentences,
        injected_posecodes: injected,
        seed,
        intermediate: None,
    }
}
