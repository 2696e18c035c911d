//! Time binning and merging of selected motioncodes into caption items.

pub(crate) mod selection;

pub use selection::{select_motioncodes, Combination, SalienceStats, SelectionConfig};

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::motioncode::{direction_labels, mirror_flips_direction, Family, IntensityClass, Motioncode, VelocityClass};
use crate::noise::splitmix64;
use crate::posecode::{Axis, PosecodeKind};
use crate::skeleton::{Joint, Side, SkeletonSpec};
use crate::textgen::{SubjectChoice, SubjectMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationConfig {
    pub t_w_seconds: f64,
    pub t_range_bins: usize,
    pub p_rule: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            t_w_seconds: 0.5,
            t_range_bins: 2,
            p_rule: 0.75,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t_w_seconds.is_finite() && self.t_w_seconds > 0.0) {
            return Err("aggregation.t_w_seconds must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_rule) {
            return Err("aggregation.p_rule must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Bin width in frames, at least one.
    pub fn bin_width(&self, fps: f64) -> usize {
        ((self.t_w_seconds * fps).round() as usize).max(1)
    }
}

pub fn bin_of(t_start: usize, t_w: usize) -> usize {
    t_start / t_w
}

/// Groups code indices by bin `n`, where `n * t_w <= T_s < (n + 1) * t_w`.
pub fn assign_bins(codes: &[Motioncode], t_w: usize) -> BTreeMap<usize, Vec<usize>> {
    assert!(t_w >= 1, "bin width must be at least one frame");
    let mut bins: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, code) in codes.iter().enumerate() {
        bins.entry(bin_of(code.t_start, t_w)).or_default().push(i);
    }
    bins
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Simultaneous,
    ImmediatelyAfter,
    FewSecondsLater,
    AMomentBefore,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Simultaneous,
        Relation::ImmediatelyAfter,
        Relation::FewSecondsLater,
        Relation::AMomentBefore,
    ];

    /// Relation of something in bin `next` to something in bin `previous`.
    pub fn between(previous: usize, next: usize) -> Relation {
        match next.checked_sub(previous) {
            None => Relation::AMomentBefore,
            Some(0) => Relation::Simultaneous,
            Some(1) => Relation::ImmediatelyAfter,
            Some(_) => Relation::FewSecondsLater,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Simultaneous => "simultaneous",
            Relation::ImmediatelyAfter => "immediately-after",
            Relation::FewSecondsLater => "few-seconds-later",
            Relation::AMomentBefore => "a-moment-before",
        }
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Singleton,
    Symmetry,
    Entity,
    Interpretation,
    Keypoint,
    Timecode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundPart {
    pub subject: Subject,
    pub bin: usize,
}

/// Who performs a clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Subject {
    Joint { joint: Joint },
    /// The root: displacement and rotation of the whole body.
    Body,
    /// A symmetric pair described with a plural noun.
    Both { left: Joint, right: Joint },
    Entity { name: String, joints: Vec<Joint> },
    /// Two joints moving relative to each other with neither dominating.
    Mutual { a: Joint, b: Joint },
    Compound { parts: Vec<CompoundPart> },
}

impl Subject {
    /// Joints the subject stands for, sorted.
    pub fn joints(&self) -> Vec<Joint> {
        let mut out = match self {
            Subject::Joint { joint } => vec![*joint],
            Subject::Body => vec![Joint::ROOT],
            Subject::Both { left, right } => vec![*left, *right],
            Subject::Entity { joints, .. } => joints.clone(),
            Subject::Mutual { a, b } => vec![*a, *b],
            Subject::Compound { parts } => parts.iter().flat_map(|p| p.subject.joints()).collect(),
        };
        out.sort();
        out.dedup();
        out
    }

    pub fn is_plural(&self) -> bool {
        matches!(self, Subject::Both { .. } | Subject::Mutual { .. } | Subject::Compound { .. })
    }

    /// Noun phrase without temporal connectives, e.g. "the elbows".
    pub fn phrase(&self) -> String {
        match self {
            Subject::Joint { joint } => format!("the {}", joint.display_name()),
            Subject::Body => "the body".to_string(),
            Subject::Both { left, .. } => format!("the {}", left.part_noun_plural()),
            Subject::Entity { name, .. } => format!("the {name}"),
            Subject::Mutual { a, b } => format!("the {} and the {}", a.display_name(), b.display_name()),
            Subject::Compound { parts } => {
                let names: Vec<String> = parts.iter().map(|p| p.subject.phrase()).collect();
                join_and(&names)
            }
        }
    }
}

pub(crate) fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// One verb phrase of a caption item, covering one or more motioncodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    /// Indices into the selected motioncode list.
    pub members: Vec<usize>,
    pub subject: Subject,
    /// Counterpart joint of proximity and spatial-relation codes.
    pub object: Option<Joint>,
    pub family: Family,
    pub axis: Option<Axis>,
    pub direction_label: String,
    pub intensity: Option<IntensityClass>,
    pub velocity_class: VelocityClass,
    pub bin: usize,
    /// Earliest start frame among the members.
    #[serde(default)]
    pub start: usize,
    pub rules: Vec<Rule>,
}

type ActionKey = (Family, String, Option<IntensityClass>);

impl Clause {
    fn action(&self) -> ActionKey {
        (self.family, self.direction_label.clone(), self.intensity)
    }

    fn first(&self) -> usize {
        self.members[0]
    }
}

/// Builds one clause per motioncode, applying the subject choices of
/// two-joint codes. When the second joint of a relative-position code is
/// chosen, the relation is read from its side and the label reverses.
pub fn initial_clauses(codes: &[Motioncode], subjects: &[Option<SubjectChoice>], t_w: usize) -> Vec<Clause> {
    codes
        .iter()
        .enumerate()
        .map(|(i, code)| {
            let axis = code.instance.kind.axis();
            let mut label = code.direction_label.clone();
            let (subject, object) = match (subjects.get(i).copied().flatten(), code.instance.counterpart()) {
                (Some(choice), Some(other)) => {
                    let first = code.instance.joints[0];
                    match (choice.mode, choice.joint) {
                        (SubjectMode::SingleJoint, Some(j)) if j == other => {
                            if code.family == Family::SpatialRelation {
                                let [neg, pos] = direction_labels(code.family, axis);
                                label = if label == neg { pos } else { neg }.to_string();
                            }
                            (Subject::Joint { joint: other }, Some(first))
                        }
                        (SubjectMode::SingleJoint, _) => (Subject::Joint { joint: first }, Some(other)),
                        (SubjectMode::Mutual, _) => (Subject::Mutual { a: first, b: other }, None),
                    }
                }
                (_, Some(other)) => (
                    Subject::Joint {
                        joint: code.instance.joints[0],
                    },
                    Some(other),
                ),
                (_, None) => {
                    let focus = code.instance.focus();
                    let whole_body = matches!(code.instance.kind, PosecodeKind::Orientation { .. })
                        || (code.family == Family::Displacement && focus == Joint::ROOT);
                    if whole_body {
                        (Subject::Body, None)
                    } else {
                        (Subject::Joint { joint: focus }, None)
                    }
                }
            };
            Clause {
                members: vec![i],
                subject,
                object,
                family: code.family,
                axis,
                direction_label: label,
                intensity: code.intensity,
                velocity_class: code.velocity_class,
                bin: bin_of(code.t_start, t_w),
                start: code.t_start,
                rules: Vec::new(),
            }
        })
        .collect()
}

/// Merged clauses report the faster of their speeds.
fn merge_into(target: &mut Clause, other: Clause, rule: Rule) {
    target.velocity_class = target.velocity_class.max(other.velocity_class);
    target.members.extend(other.members);
    target.bin = target.bin.min(other.bin);
    target.start = target.start.min(other.start);
    for r in other.rules {
        if !target.rules.contains(&r) {
            target.rules.push(r);
        }
    }
    if !target.rules.contains(&rule) {
        target.rules.push(rule);
    }
}

fn subject_tag(subject: &Subject) -> u64 {
    match subject {
        Subject::Joint { .. } => 0,
        Subject::Body => 1,
        Subject::Both { .. } => 2,
        Subject::Entity { .. } => 3,
        Subject::Mutual { .. } => 4,
        Subject::Compound { .. } => 5,
    }
}

fn fold(h: u64, v: u64) -> u64 {
    splitmix64(h ^ v)
}

fn fold_str(h: u64, s: &str) -> u64 {
    s.bytes().fold(h, |h, b| fold(h, u64::from(b)))
}

/// Hash of a clause that its mirror image shares: the lesser of the hashes of
/// the clause as is and reflected left to right.
fn neutral_key(c: &Clause) -> u64 {
    let describe = |mirror: bool| {
        let side = |j: Joint| if mirror { j.mirror() } else { j };
        let mut joints: Vec<usize> = c.subject.joints().into_iter().map(|j| side(j).index()).collect();
        joints.sort();
        let mut label = c.direction_label.as_str();
        if mirror && mirror_flips_direction(c.family, c.axis) {
            let [neg, pos] = direction_labels(c.family, c.axis);
            label = if label == neg { pos } else { neg };
        }
        let mut h = fold(subject_tag(&c.subject), c.family as u64);
        h = fold(h, c.axis.map_or(3, |a| a as u64));
        h = fold(h, c.intensity.map_or(9, |i| i as u64));
        h = fold(h, c.velocity_class as u64);
        h = fold(h, c.bin as u64);
        h = fold(h, c.object.map_or(99, |o| side(o).index() as u64));
        h = fold_str(h, label);
        joints.into_iter().fold(h, |h, j| fold(h, j as u64))
    };
    describe(false).min(describe(true))
}

/// Whether a rule applies, decided by hashing `keys` with the rule's base draw
/// so the outcome depends on what is merged rather than on list order.
fn applies(base: u64, rule: Rule, keys: &[u64], p_rule: f64) -> bool {
    let h = keys.iter().fold(fold(base, rule as u64), |h, &k| fold(h, k));
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    u < p_rule
}

fn canonical_order(clauses: &mut [Clause]) {
    clauses.sort_by_cached_key(|c| (c.bin, c.start, neutral_key(c), c.first()));
}

/// Same-bin pairs of mirrored joints doing the same thing become one plural subject.
pub fn aggregate_symmetry<R: Rng>(mut clauses: Vec<Clause>, p_rule: f64, rng: &mut R) -> Vec<Clause> {
    let base: u64 = rng.random();
    canonical_order(&mut clauses);
    let mut slots: Vec<Option<Clause>> = clauses.into_iter().map(Some).collect();
    for i in 0..slots.len() {
        let Some(Subject::Joint { joint: left }) = slots[i].as_ref().map(|c| c.subject.clone()) else {
            continue;
        };
        if left.side() != Side::Left {
            continue;
        }
        let u = slots[i].clone().expect("checked above");
        if u.object.is_some_and(|o| o.side() != Side::Center) {
            continue;
        }
        let partner = (0..slots.len()).find(|&j| {
            j != i
                && slots[j].as_ref().is_some_and(|v| {
                    v.bin == u.bin
                        && v.subject == Subject::Joint { joint: left.mirror() }
                        && v.action() == u.action()
                        && v.object == u.object
                })
        });
        if let Some(j) = partner {
            let keys = [neutral_key(&u), neutral_key(slots[j].as_ref().expect("partner exists"))];
            if applies(base, Rule::Symmetry, &[keys[0].min(keys[1]), keys[0].max(keys[1])], p_rule) {
                let v = slots[j].take().expect("partner exists");
                let u = slots[i].as_mut().expect("checked above");
                u.subject = Subject::Both {
                    left,
                    right: left.mirror(),
                };
                merge_into(u, v, Rule::Symmetry);
            }
        }
    }
    let mut out: Vec<Clause> = slots.into_iter().flatten().collect();
    canonical_order(&mut out);
    out
}

/// Same-bin joints of one entity group doing the same thing toward the same
/// object are described as the entity.
pub fn aggregate_entity<R: Rng>(
    mut clauses: Vec<Clause>,
    skeleton: &SkeletonSpec,
    p_rule: f64,
    rng: &mut R,
) -> Vec<Clause> {
    let base: u64 = rng.random();
    canonical_order(&mut clauses);
    let mut groups: BTreeMap<(usize, String, ActionKey, Option<Joint>), Vec<usize>> = BTreeMap::new();
    for (i, c) in clauses.iter().enumerate() {
        if let Subject::Joint { joint } = c.subject {
            if let Some(group) = skeleton.entity_of(joint) {
                if c.object.is_some_and(|o| group.joints.contains(&o)) {
                    continue;
                }
                groups
                    .entry((c.bin, group.name.clone(), c.action(), c.object))
                    .or_default()
                    .push(i);
            }
        }
    }
    let mut slots: Vec<Option<Clause>> = clauses.into_iter().map(Some).collect();
    for ((_, name, _, _), indices) in groups {
        let distinct: BTreeSet<Joint> = indices
            .iter()
            .filter_map(|&i| match slots[i].as_ref()?.subject {
                Subject::Joint { joint } => Some(joint),
                _ => None,
            })
            .collect();
        if distinct.len() < 2 {
            continue;
        }
        let mut keys: Vec<u64> = indices.iter().filter_map(|&i| slots[i].as_ref().map(neutral_key)).collect();
        keys.sort();
        if !applies(base, Rule::Entity, &keys, p_rule) {
            continue;
        }
        let head = indices[0];
        for &i in &indices[1..] {
            let other = slots[i].take().expect("each clause is in one group");
            merge_into(slots[head].as_mut().expect("head kept"), other, Rule::Entity);
        }
        slots[head].as_mut().expect("head kept").subject = Subject::Entity {
            name,
            joints: distinct.into_iter().collect(),
        };
    }
    let mut out: Vec<Clause> = slots.into_iter().flatten().collect();
    canonical_order(&mut out);
    out
}

/// Clauses with the same action on disjoint joints within `t_range` bins of
/// the first one share one compound subject.
pub fn aggregate_interpretation<R: Rng>(mut clauses: Vec<Clause>, t_range: usize, p_rule: f64, rng: &mut R) -> Vec<Clause> {
    let base: u64 = rng.random();
    canonical_order(&mut clauses);
    let eligible = |c: &Clause| !matches!(c.subject, Subject::Mutual { .. } | Subject::Body);
    let mut slots: Vec<Option<Clause>> = clauses.into_iter().map(Some).collect();
    for i in 0..slots.len() {
        let Some(u) = slots[i].clone() else { continue };
        if !eligible(&u) {
            continue;
        }
        let mut covered: BTreeSet<Joint> = u.subject.joints().into_iter().collect();
        let mut parts = vec![CompoundPart {
            subject: u.subject.clone(),
            bin: u.bin,
        }];
        let mut merged = Vec::new();
        for j in i + 1..slots.len() {
            let Some(v) = slots[j].as_ref() else { continue };
            if v.bin > u.bin + t_range {
                break;
            }
            let joints = v.subject.joints();
            if eligible(v)
                && v.action() == u.action()
                && v.object == u.object
                && joints.iter().all(|j| !covered.contains(j))
                && u.object.is_none_or(|o| !joints.contains(&o))
                && applies(base, Rule::Interpretation, &[neutral_key(&u), neutral_key(v)], p_rule)
            {
                covered.extend(joints);
                parts.push(CompoundPart {
                    subject: v.subject.clone(),
                    bin: v.bin,
                });
                merged.push(j);
            }
        }
        if merged.is_empty() {
            continue;
        }
        let mut head = slots[i].take().expect("present");
        for j in merged {
            let v = slots[j].take().expect("present");
            merge_into(&mut head, v, Rule::Interpretation);
        }
        head.subject = Subject::Compound { parts };
        slots[i] = Some(head);
    }
    let mut out: Vec<Clause> = slots.into_iter().flatten().collect();
    canonical_order(&mut out);
    out
}

/// One caption item: a chain of clauses about the same subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMotion {
    pub clauses: Vec<Clause>,
    /// Relation of each clause to the one before it.
    pub clause_relations: Vec<Relation>,
    /// All member motioncode indices, clause by clause.
    pub members: Vec<usize>,
    /// Relation of each member to the previous member.
    pub relation_tags: Vec<Relation>,
    pub subject_phrase: String,
    pub rule_trace: Vec<Rule>,
    pub bin_anchor: usize,
    pub last_bin: usize,
    /// Relation to the previous item once ordered.
    pub lead: Option<Relation>,
}

impl AggregatedMotion {
    fn from_clauses(clauses: Vec<Clause>, codes: &[Motioncode], t_w: usize) -> Self {
        let clause_relations = clauses.windows(2).map(|w| Relation::between(w[0].bin, w[1].bin)).collect();
        let members: Vec<usize> = clauses.iter().flat_map(|c| c.members.iter().copied()).collect();
        let bins: Vec<usize> = members.iter().map(|&m| bin_of(codes[m].t_start, t_w)).collect();
        let relation_tags = bins.windows(2).map(|w| Relation::between(w[0], w[1])).collect();
        let mut rule_trace: Vec<Rule> = Vec::new();
        for r in clauses.iter().flat_map(|c| c.rules.iter().copied()) {
            if !rule_trace.contains(&r) {
                rule_trace.push(r);
            }
        }
        if clauses.len() > 1 {
            rule_trace.push(Rule::Keypoint);
        }
        if rule_trace.is_empty() {
            rule_trace.push(Rule::Singleton);
        }
        AggregatedMotion {
            subject_phrase: clauses[0].subject.phrase(),
            bin_anchor: *bins.iter().min().expect("non-empty"),
            last_bin: *bins.iter().max().expect("non-empty"),
            clauses,
            clause_relations,
            members,
            relation_tags,
            rule_trace,
            lead: None,
        }
    }
}

/// Chains clauses about the same joints. A chain keeps growing while the
/// next clause on those joints starts within `t_range` bins of the chain's
/// latest clause.
pub fn aggregate_keypoint<R: Rng>(
    mut clauses: Vec<Clause>,
    codes: &[Motioncode],
    t_w: usize,
    t_range: usize,
    p_rule: f64,
    rng: &mut R,
) -> Vec<AggregatedMotion> {
    let base: u64 = rng.random();
    canonical_order(&mut clauses);
    let mut slots: Vec<Option<Clause>> = clauses.into_iter().map(Some).collect();
    let mut out = Vec::new();
    for i in 0..slots.len() {
        let Some(head) = slots[i].take() else { continue };
        let key = head.subject.joints();
        let head_key = neutral_key(&head);
        let mut last_bin = head.bin;
        let mut chain = vec![head];
        for j in i + 1..slots.len() {
            let Some(v) = slots[j].as_ref() else { continue };
            if v.subject.joints() != key {
                continue;
            }
            if v.bin > last_bin + t_range {
                break;
            }
            if applies(base, Rule::Keypoint, &[head_key, neutral_key(v)], p_rule) {
                let v = slots[j].take().expect("present");
                last_bin = v.bin;
                chain.push(v);
            }
        }
        out.push(AggregatedMotion::from_clauses(chain, codes, t_w));
    }
    out
}

/// Sorts items by their first bin and tags each with its relation to the
/// latest bin described by earlier items. Items sharing a first bin follow
/// the first of them simultaneously. When an earlier chain ran past that bin
/// the whole group gets a back reference.
pub fn order_timecodes(mut items: Vec<AggregatedMotion>) -> Vec<AggregatedMotion> {
    items.sort_by_cached_key(|m| {
        let first = &m.clauses[0];
        (m.bin_anchor, first.start, neutral_key(first), m.members.iter().copied().min())
    });
    let mut clock: Option<usize> = None;
    let mut group_start = 0;
    while group_start < items.len() {
        let anchor = items[group_start].bin_anchor;
        let group_end = group_start + items[group_start..].iter().take_while(|m| m.bin_anchor == anchor).count();
        let lead = clock.map(|c| Relation::between(c, anchor));
        for (k, item) in items[group_start..group_end].iter_mut().enumerate() {
            item.lead = if k == 0 { lead } else { Some(Relation::Simultaneous) };
            if lead == Some(Relation::AMomentBefore) && !item.rule_trace.contains(&Rule::Timecode) {
                item.rule_trace.retain(|r| *r != Rule::Singleton);
                item.rule_trace.push(Rule::Timecode);
            }
            clock = Some(clock.map_or(item.last_bin, |c| c.max(item.last_bin)));
        }
        group_start = group_end;
    }
    items
}

/// Full aggregation: symmetry, entity, interpretation, keypoint, then timecode ordering.
pub fn aggregate<R: Rng>(
    codes: &[Motioncode],
    subjects: &[Option<SubjectChoice>],
    skeleton: &SkeletonSpec,
    config: &AggregationConfig,
    fps: f64,
    rng: &mut R,
) -> Vec<AggregatedMotion> {
    let t_w = config.bin_width(fps);
    let clauses = initial_clauses(codes, subjects, t_w);
    let clauses = aggregate_symmetry(clauses, config.p_rule, rng);
    let clauses = aggregate_entity(clauses, skeleton, config.p_rule, rng);
    let clauses = aggregate_interpretation(clauses, config.t_range_bins, config.p_rule, rng);
    let items = aggregate_keypoint(clauses, codes, t_w, config.t_range_bins, config.p_rule, rng);
    order_timecodes(items)
}
