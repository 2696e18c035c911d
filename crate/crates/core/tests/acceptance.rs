//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails. Run with `cargo test -p motionscript --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use motionscript::aggregate::{bin_of, AggregatedMotion, Relation, Rule, Subject};
use motionscript::motion::{mirror_sequence, normalize_sequence, to_canonical_json, Frame, Vec3};
use motionscript::motioncode::{
    build_motioncodes, compute_velocity_attribute, detect_motion_segments, Family, MotionSegment, Motioncode, SegmentationParams,
    VelocityClass,
};
use motionscript::noise::NoiseConfig;
use motionscript::posecode::{extract_posecode_timelines, Axis, PosecodeKind};
use motionscript::synth::{self, PoseParams};
use motionscript::textgen::{choose_subject, greedy_weighted_cover, select_subject, SubjectMode};
use motionscript::{run_pipeline, Captioner, Joint, MotionSequence, PipelineConfig};

type Check = fn() -> Result<String, String>;

fn main() {
    let checks: [(&str, Option<Duration>, Check); 10] = [
        ("velocity formula", Some(Duration::from_secs(1)), velocity_formula),
        ("segmentation oracle", Some(Duration::from_secs(30)), segmentation_oracle),
        ("spatial-relation magnitude", None, spatial_relation_bound),
        ("time binning", None, binning),
        ("worked examples", Some(Duration::from_secs(5)), worked_examples),
        ("subject selection", None, subject_selection),
        ("set cover", Some(Duration::from_secs(10)), set_cover),
        ("mirror metamorphic", None, mirror_metamorphic),
        ("rigid invariance", None, rigid_invariance),
        ("end-to-end determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn quiet_config() -> PipelineConfig {
    PipelineConfig {
        noise: NoiseConfig::off(),
        ..PipelineConfig::default()
    }
}

// ---------------------------------------------------------------------------

const VELOCITY_TOLERANCE: f64 = 1e-12;

fn velocity_formula() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let edges = [0.5, 1.5, 3.0, 6.0];
    for _ in 0..1000 {
        let spatial = rng.random_range(-12..=12);
        let t_start = rng.random_range(0..2000usize);
        let t_end = t_start + rng.random_range(1..400usize);
        let fps = rng.random_range(10.0..60.0);
        let (v, class) = compute_velocity_attribute(spatial, t_start, t_end, fps, &edges, 1.0);
        let expected = f64::from(spatial).abs() / (t_end - t_start) as f64;
        ensure((v - expected).abs() <= VELOCITY_TOLERANCE, || {
            format!("M_S={spatial} [{t_start},{t_end}): got {v}, expected {expected}")
        })?;
        let per_second = expected * fps;
        let oracle = if per_second < 0.5 {
            VelocityClass::VerySlow
        } else if per_second < 1.5 {
            VelocityClass::Slow
        } else if per_second < 3.0 {
            VelocityClass::Moderate
        } else if per_second < 6.0 {
            VelocityClass::Fast
        } else {
            VelocityClass::VeryFast
        };
        ensure(class == oracle, || format!("{per_second}/s classed {class:?}, expected {oracle:?}"))?;
    }
    Ok(format!("1000 cases within {VELOCITY_TOLERANCE:e}"))
}

// ---------------------------------------------------------------------------

/// Per-frame hysteresis: a category becomes current only after holding for
/// `min_run` observed frames. Returns the observed frame indices and the
/// confirmed changes `(first observed index of the new run, from, to)`.
fn oracle_changes(categories: &[Option<i32>], min_run: usize) -> (Vec<usize>, Vec<(usize, i32, i32)>) {
    let frames: Vec<usize> = (0..categories.len()).filter(|&f| categories[f].is_some()).collect();
    let values: Vec<i32> = frames.iter().map(|&f| categories[f].unwrap()).collect();
    let mut current: Option<i32> = None;
    let mut changes = Vec::new();
    let mut k = 0;
    while k < values.len() {
        let mut end = k;
        while end + 1 < values.len() && values[end + 1] == values[k] {
            end += 1;
        }
        if end - k + 1 >= min_run {
            match current {
                Some(c) if c != values[k] => changes.push((k, c, values[k])),
                _ => {}
            }
            current = Some(values[k]);
        }
        k = end + 1;
    }
    (frames, changes)
}

/// Enumerates every window of consecutive changes and keeps the maximal ones
/// whose changes share a sign and whose intermediate stays fit in `max_range`.
fn oracle_segments(categories: &[Option<i32>], p: SegmentationParams) -> Vec<MotionSegment> {
    let min_run = p.min_run.max(1);
    let (frames, changes) = oracle_changes(categories, min_run);
    let n = changes.len();
    let linked = |i: usize| {
        // change i and i + 1 belong together
        let same_sign = (changes[i].2 - changes[i].1).signum() == (changes[i + 1].2 - changes[i + 1].1).signum();
        let stay = frames[changes[i + 1].0 - 1] - frames[changes[i].0] + 1;
        same_sign && stay <= p.max_range
    };
    let valid = |a: usize, b: usize| (a..b).all(linked);
    let mut windows = Vec::new();
    for a in 0..n {
        for b in a..n {
            let maximal = valid(a, b) && (a == 0 || !valid(a - 1, b)) && (b + 1 == n || !valid(a, b + 1));
            if maximal {
                windows.push((a, b));
            }
        }
    }
    let mut out = Vec::new();
    let mut previous_end = 0;
    for (a, b) in windows {
        let t_start = frames[changes[a].0 - min_run].max(previous_end);
        let t_end = frames[changes[b].0 + min_run - 1];
        previous_end = t_end;
        let (start, end) = (changes[a].1, changes[b].2);
        if (end - start).unsigned_abs() < p.min_transitions.max(1) {
            continue;
        }
        out.push(MotionSegment {
            t_start,
            t_end,
            direction: (end - start).signum(),
            start_category: start,
            end_category: end,
        });
    }
    out
}

fn segmentation_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut segments = 0;
    for case in 0..10_000 {
        let len = rng.random_range(0..=50usize);
        let k = rng.random_range(1..=6);
        let mut seq = Vec::with_capacity(len);
        while seq.len() < len {
            let c = rng.random_range(0..k);
            for _ in 0..rng.random_range(1..=7) {
                seq.push((!rng.random_bool(0.05)).then_some(c));
            }
        }
        seq.truncate(len);
        let p = SegmentationParams {
            min_run: rng.random_range(1..=4),
            min_transitions: rng.random_range(1..=3),
            max_range: rng.random_range(1..=10),
        };
        let got = detect_motion_segments(&seq, p);
        let want = oracle_segments(&seq, p);
        ensure(got == want, || format!("case {case} {seq:?} {p:?}\n got {got:?}\nwant {want:?}"))?;
        segments += want.len();
    }
    Ok(format!("10000 sequences, {segments} segments"))
}

// ---------------------------------------------------------------------------

fn spatial_relation_bound() -> Result<String, String> {
    let config = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut seen = 0;
    for i in 0..500u64 {
        let frames = rng.random_range(20..100);
        let seq = normalize_sequence(&synth::random_motion(&mut rng, frames, 20.0)).sequence;
        let noise = NoiseConfig {
            seed: i,
            ..config.noise.clone()
        };
        let timelines = extract_posecode_timelines(&seq, &config.posecode.instances, &config.posecode.thresholds, &noise);
        for code in build_motioncodes(&timelines, &seq, &config.motioncode, &noise) {
            if code.family == Family::SpatialRelation {
                seen += 1;
                ensure(code.spatial.abs() == 1, || format!("motion {i}: {code}"))?;
            }
        }
    }
    ensure(seen > 0, || "no spatial-relation codes in the corpus".into())?;
    Ok(format!("{seen} spatial-relation codes over 500 noisy motions"))
}

fn dump_codes(dump: &Option<serde_json::Value>, key: &str) -> Result<Vec<Motioncode>, String> {
    let value = dump.as_ref().and_then(|d| d.get(key)).ok_or("missing dump")?;
    serde_json::from_value(value.clone()).map_err(|e| e.to_string())
}

fn dump_items(dump: &Option<serde_json::Value>) -> Result<Vec<AggregatedMotion>, String> {
    let value = dump.as_ref().and_then(|d| d.get("aggregation")).ok_or("missing dump")?;
    serde_json::from_value(value.clone()).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------

fn binning() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut edges = 0;
    for i in 0..10_000 {
        let t_w = rng.random_range(1..=40usize);
        let t_s = if i % 4 == 0 {
            edges += 1;
            t_w * rng.random_range(0..50usize)
        } else {
            rng.random_range(0..2000usize)
        };
        let n = (0..).find(|&n| n * t_w <= t_s && t_s < (n + 1) * t_w).unwrap();
        ensure(bin_of(t_s, t_w) == n, || format!("T_s={t_s} T_w={t_w}: got {}, expected {n}", bin_of(t_s, t_w)))?;
    }
    Ok(format!("10000 pairs, {edges} on bin edges"))
}

// ---------------------------------------------------------------------------

fn example_captioner() -> Captioner {
    let mut config = PipelineConfig {
        emit_intermediate: true,
        ..quiet_config()
    };
    config.aggregation.p_rule = 1.0;
    Captioner::new(config).expect("default config is valid")
}

fn example_items(captioner: &Captioner, seq: &MotionSequence) -> Result<Vec<AggregatedMotion>, String> {
    ensure(seq.len() < 100, || format!("example has {} frames", seq.len()))?;
    dump_items(&captioner.caption(seq, 1).intermediate)
}

/// Squat of depth `h` with the left arm placed by `lean`, `forward` and `raise`,
/// lowered so the feet stay on the standing floor.
fn crouch(h: f64, lean: f64, forward: f64, raise: f64) -> PoseParams {
    let mut p = PoseParams {
        lean,
        arm_forward: [forward, 0.0],
        arm_raise: [raise, 7.0],
        knee: [180.0 - 2.0 * h, 180.0 - 2.0 * h],
        hip_forward: [h, h],
        ..PoseParams::default()
    };
    let feet = synth::pose(&p)[Joint::RightFoot].y;
    p.offset = Vec3::new(0.0, synth::pose(&PoseParams::default())[Joint::RightFoot].y - feet, 0.0);
    p
}

fn worked_examples() -> Result<String, String> {
    let captioner = example_captioner();

    // (a) both elbows bend together
    let rest = PoseParams {
        elbow: [170.0, 170.0],
        ..PoseParams::default()
    };
    let bent = PoseParams {
        elbow: [60.0, 60.0],
        ..rest.clone()
    };
    let items = example_items(&captioner, &synth::keyframed(20.0, 40, &[(5, rest), (25, bent)]))?;
    let elbows = Subject::Both {
        left: Joint::LeftElbow,
        right: Joint::RightElbow,
    };
    ensure(
        items.iter().any(|m| {
            m.rule_trace.contains(&Rule::Symmetry)
                && m.clauses.iter().any(|c| c.subject == elbows && c.direction_label == "bending")
        }),
        || "(a) no symmetric elbow clause".into(),
    )?;

    // (b) left elbow and left hand close on the right foot
    let seq = synth::keyframed(20.0, 40, &[(5, crouch(80.0, 0.0, 0.0, 100.0)), (10, crouch(80.0, 80.0, 40.0, -20.0))]);
    let items = example_items(&captioner, &seq)?;
    ensure(
        items.iter().any(|m| {
            m.rule_trace.contains(&Rule::Entity)
                && m.clauses.iter().any(|c| {
                    matches!(&c.subject, Subject::Entity { name, joints }
                        if name == "left arm" && joints.contains(&Joint::LeftElbow) && joints.contains(&Joint::LeftWrist))
                        && c.object == Some(Joint::RightFoot)
                        && c.direction_label == "closing"
                })
        }),
        || "(b) no left arm entity clause".into(),
    )?;

    // (c) right elbow bends with the arm spreading out, then extends
    let down = PoseParams::default();
    let up = PoseParams {
        elbow: [171.0, 60.0],
        arm_raise: [7.0, 80.0],
        ..PoseParams::default()
    };
    let seq = synth::keyframed(20.0, 70, &[(3, down.clone()), (18, up.clone()), (24, up), (40, down)]);
    let items = example_items(&captioner, &seq)?;
    let right_elbow = Subject::Joint { joint: Joint::RightElbow };
    ensure(
        items.iter().any(|m| {
            let labels: Vec<&str> = m.clauses.iter().map(|c| c.direction_label.as_str()).collect();
            m.rule_trace.contains(&Rule::Keypoint)
                && m.clauses.iter().all(|c| c.subject == right_elbow)
                && labels == ["bending", "extending"]
                && m.clause_relations == [Relation::FewSecondsLater]
        }),
        || "(c) no right elbow chain with a later connective".into(),
    )?;

    // (d) elbow chain over six bins with a knee bend inside it
    let e0 = PoseParams::default();
    let e1 = PoseParams {
        elbow: [171.0, 130.0],
        ..PoseParams::default()
    };
    let key = |f: usize, p: &PoseParams, knee: bool| {
        let mut p = p.clone();
        if knee {
            p.knee = [176.0, 100.0];
        }
        (f, p)
    };
    let keys = [
        key(2, &e0, false),
        key(5, &e1, false),
        key(16, &e1, false),
        key(26, &e1, true),
        key(29, &e0, true),
        key(44, &e0, true),
        key(47, &e1, true),
        key(54, &e1, true),
        key(57, &e0, true),
    ];
    let items = example_items(&captioner, &synth::keyframed(20.0, 90, &keys))?;
    let chain = items
        .iter()
        .find(|m| m.clauses.len() >= 4 && m.clauses.iter().all(|c| c.subject == right_elbow))
        .ok_or("(d) no right elbow chain")?;
    ensure(chain.last_bin - chain.bin_anchor + 1 == 6, || {
        format!("(d) chain spans bins {}..={}", chain.bin_anchor, chain.last_bin)
    })?;
    let knee = items
        .iter()
        .find(|m| m.clauses.iter().any(|c| c.subject == Subject::Joint { joint: Joint::RightKnee }))
        .ok_or("(d) no knee item")?;
    ensure(knee.bin_anchor == chain.bin_anchor + 1, || format!("(d) knee at bin {}", knee.bin_anchor))?;
    // items opening in the same bin share the lead of the first of them
    let opener = items.iter().find(|m| m.bin_anchor == knee.bin_anchor).expect("knee is one");
    ensure(
        opener.lead == Some(Relation::AMomentBefore) && knee.rule_trace.contains(&Rule::Timecode),
        || format!("(d) bin lead {:?}, knee rules {:?}", opener.lead, knee.rule_trace),
    )?;

    Ok("symmetry, entity, keypoint and timecode examples".into())
}

// ---------------------------------------------------------------------------

const SUBJECT_THRESHOLD: f64 = 0.6;

fn subject_selection() -> Result<String, String> {
    let (a, b) = (Joint::LeftWrist, Joint::RightWrist);
    let single = choose_subject((a, 0.7), (b, 0.3), SUBJECT_THRESHOLD);
    ensure(single.mode == SubjectMode::SingleJoint && single.joint == Some(a), || {
        format!("0.7/0.3 gave {single:?}")
    })?;
    let mutual = choose_subject((a, 0.5), (b, 0.5), SUBJECT_THRESHOLD);
    ensure(mutual.mode == SubjectMode::Mutual, || format!("0.5/0.5 gave {mutual:?}"))?;

    // The same through measured travel on a sequence.
    let start = synth::t_pose();
    let moved = |da: f64, db: f64| {
        let mut end: Frame = start.clone();
        end[a] += Vec3::new(0.0, 0.0, da);
        end[b] += Vec3::new(0.0, 0.0, db);
        MotionSequence::new(20.0, vec![start.clone(), end]).unwrap()
    };
    let code = Motioncode {
        family: Family::Proximity,
        instance_index: 0,
        instance: motionscript::posecode::PosecodeInstance::new(PosecodeKind::Distance, &[a, b]),
        t_start: 0,
        t_end: 1,
        spatial: 1,
        velocity: 1.0,
        velocity_class: VelocityClass::Fast,
        intensity: None,
        direction_label: "spreading".into(),
        start_category: 0,
        end_category: 1,
    };
    let measured = select_subject(&code, &moved(0.7, 0.3), SUBJECT_THRESHOLD).ok_or("no subject")?;
    ensure(measured.mode == SubjectMode::SingleJoint && measured.joint == Some(a), || {
        format!("0.7 m/0.3 m gave {measured:?}")
    })?;
    let measured = select_subject(&code, &moved(0.5, 0.5), SUBJECT_THRESHOLD).ok_or("no subject")?;
    ensure(measured.mode == SubjectMode::Mutual, || format!("0.5 m/0.5 m gave {measured:?}"))?;
    Ok(format!("threshold {SUBJECT_THRESHOLD}"))
}

// ---------------------------------------------------------------------------

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

fn set_cover() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut worst: f64 = 1.0;
    let cases = 20_000;
    for case in 0..cases {
        let n = rng.random_range(1..=8u32);
        let targets: BTreeSet<u32> = (0..n).collect();
        let m = rng.random_range(1..=10usize);
        // element n stands for a joint outside the target set
        let candidates: Vec<(BTreeSet<u32>, u64)> = (0..m)
            .map(|_| {
                let mut set: BTreeSet<u32> = (0..=n).filter(|_| rng.random_bool(0.3)).collect();
                if set.is_empty() {
                    set.insert(rng.random_range(0..=n));
                }
                (set, rng.random_range(1..=9))
            })
            .collect();
        let coverable: BTreeSet<u32> = targets
            .iter()
            .copied()
            .filter(|t| candidates.iter().any(|(s, _)| s.contains(t)))
            .collect();

        let masks: Vec<u32> = candidates.iter().map(|(set, _)| set.iter().fold(0, |m, &t| m | 1 << t)).collect();
        let need: u32 = coverable.iter().fold(0, |m, &t| m | 1 << t);
        let mut optimum = u64::MAX;
        for pick in 0u32..1 << m {
            let (mut covered, mut weight) = (0u32, 0u64);
            for i in (0..m).filter(|i| pick >> i & 1 == 1) {
                covered |= masks[i];
                weight += candidates[i].1;
            }
            if covered & need == need {
                optimum = optimum.min(weight);
            }
        }

        let result = greedy_weighted_cover(&targets, &candidates);
        let weight: u64 = result.chosen.iter().map(|&i| candidates[i].1).sum();
        let uncovered: BTreeSet<u32> = targets.difference(&coverable).copied().collect();
        ensure(result.uncovered == uncovered, || {
            format!("case {case}: left {:?} uncovered, expected {uncovered:?}", result.uncovered)
        })?;
        if coverable.is_empty() {
            ensure(weight == 0, || format!("case {case}: picked sets with nothing to cover"))?;
            continue;
        }
        let bound = harmonic(coverable.len()) * optimum as f64;
        ensure(weight as f64 <= bound + 1e-9, || {
            format!("case {case}: weight {weight} > H({})·{optimum}", coverable.len())
        })?;
        worst = worst.max(weight as f64 / optimum as f64);
    }
    Ok(format!("{cases} instances, worst ratio to optimum {worst:.3}"))
}

// ---------------------------------------------------------------------------

fn flip_label(label: &str) -> String {
    let pairs = [
        ("left-to-right", "right-to-left"),
        ("rightward", "leftward"),
        ("turning clockwise", "turning counter-clockwise"),
        ("leaning left", "leaning right"),
    ];
    for (a, b) in pairs {
        if label == a {
            return b.to_string();
        }
        if label == b {
            return a.to_string();
        }
    }
    label.to_string()
}

/// Whether reflecting the body through its sagittal plane swaps the label.
fn flips(family: Family, axis: Option<Axis>) -> bool {
    matches!(
        (family, axis),
        (Family::SpatialRelation, Some(Axis::X))
            | (Family::Displacement, Some(Axis::X))
            | (Family::Rotation, Some(Axis::Y))
            | (Family::Rotation, Some(Axis::Z))
    )
}

fn reverse_relation(label: &str) -> String {
    let pairs = [
        ("left-to-right", "right-to-left"),
        ("above-to-below", "below-to-above"),
        ("front-to-behind", "behind-to-front"),
    ];
    for (a, b) in pairs {
        if label == a {
            return b.to_string();
        }
        if label == b {
            return a.to_string();
        }
    }
    label.to_string()
}

/// Side-neutral description of a motioncode; `mirror` reflects it first.
fn code_key(code: &Motioncode, mirror: bool) -> String {
    let mut joints: Vec<Joint> = code.instance.joints.iter().map(|&j| if mirror { j.mirror() } else { j }).collect();
    let mut label = code.direction_label.clone();
    if mirror && flips(code.family, code.instance.kind.axis()) {
        label = flip_label(&label);
    }
    match code.instance.kind {
        PosecodeKind::Distance => joints.sort(),
        PosecodeKind::RelativePosition { .. } if joints[0] > joints[1] => {
            joints.swap(0, 1);
            label = reverse_relation(&label);
        }
        _ => {}
    }
    let names: Vec<&str> = joints.iter().map(|j| j.name()).collect();
    format!(
        "{:?} {} {label} [{}, {}) |{}| {:?} {:?}",
        code.instance.kind,
        names.join(","),
        code.t_start,
        code.t_end,
        code.magnitude(),
        code.velocity_class,
        code.intensity
    )
}

fn mirror_subject(subject: &Subject) -> Subject {
    match subject {
        Subject::Joint { joint } => Subject::Joint { joint: joint.mirror() },
        Subject::Body => Subject::Body,
        Subject::Both { left, right } => Subject::Both { left: *left, right: *right },
        Subject::Entity { name, joints } => {
            let name = if let Some(rest) = name.strip_prefix("left ") {
                format!("right {rest}")
            } else if let Some(rest) = name.strip_prefix("right ") {
                format!("left {rest}")
            } else {
                name.clone()
            };
            let mut joints: Vec<Joint> = joints.iter().map(|j| j.mirror()).collect();
            joints.sort();
            Subject::Entity { name, joints }
        }
        Subject::Mutual { a, b } => {
            let (a, b) = (a.mirror(), b.mirror());
            Subject::Mutual { a: a.min(b), b: a.max(b) }
        }
        Subject::Compound { parts } => {
            let mut parts = parts.clone();
            for p in &mut parts {
                p.subject = mirror_subject(&p.subject);
            }
            Subject::Compound { parts }
        }
    }
}

fn subject_key(subject: &Subject) -> String {
    match subject {
        Subject::Mutual { a, b } => format!("mutual {}+{}", a.min(b).name(), a.max(b).name()),
        Subject::Compound { parts } => {
            let mut keys: Vec<String> = parts.iter().map(|p| format!("{}@{}", subject_key(&p.subject), p.bin)).collect();
            keys.sort();
            format!("compound [{}]", keys.join("; "))
        }
        other => serde_json::to_string(other).unwrap(),
    }
}

fn item_key(item: &AggregatedMotion, mirror: bool) -> String {
    let mut clauses: Vec<String> = item
        .clauses
        .iter()
        .map(|c| {
            let subject = if mirror { mirror_subject(&c.subject) } else { c.subject.clone() };
            let object = c.object.map(|o| if mirror { o.mirror() } else { o });
            let label = if mirror && flips(c.family, c.axis) {
                flip_label(&c.direction_label)
            } else {
                c.direction_label.clone()
            };
            format!(
                "{} {label} {:?} @{} {:?} {:?}",
                subject_key(&subject),
                object.map(|o| o.name()),
                c.bin,
                c.intensity,
                c.velocity_class
            )
        })
        .collect();
    clauses.sort();
    let mut rules = item.rule_trace.clone();
    rules.sort();
    format!("[{}..{}] {rules:?} {}", item.bin_anchor, item.last_bin, clauses.join(" | "))
}

fn multiset(keys: impl IntoIterator<Item = String>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for k in keys {
        *out.entry(k).or_insert(0) += 1;
    }
    out
}

fn diff(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> String {
    let only = |x: &BTreeMap<String, usize>, y: &BTreeMap<String, usize>| {
        x.iter()
            .filter(|(k, n)| y.get(*k) != Some(n))
            .map(|(k, n)| format!("{n}x {k}"))
            .take(4)
            .collect::<Vec<_>>()
            .join("\n    ")
    };
    format!("original only:\n    {}\nmirrored only:\n    {}", only(a, b), only(b, a))
}

const MIRROR_MOTIONS: u64 = 200;

fn mirror_metamorphic() -> Result<String, String> {
    let captioner = Captioner::new(PipelineConfig {
        emit_intermediate: true,
        ..quiet_config()
    })
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut codes_seen = 0;
    for i in 0..MIRROR_MOTIONS {
        let frames = rng.random_range(30..100);
        let seq = synth::random_motion(&mut rng, frames, 20.0);
        let original = captioner.caption(&seq, 5).intermediate;
        let mirrored = captioner.caption(&mirror_sequence(&seq), 5).intermediate;
        for key in ["motioncodes", "selected"] {
            let a = multiset(dump_codes(&original, key)?.iter().map(|c| code_key(c, true)));
            let b = multiset(dump_codes(&mirrored, key)?.iter().map(|c| code_key(c, false)));
            ensure(a == b, || format!("motion {i} {key}:\n  {}", diff(&a, &b)))?;
            if key == "motioncodes" {
                codes_seen += a.values().sum::<usize>();
            }
        }
        let a = multiset(dump_items(&original)?.iter().map(|m| item_key(m, true)));
        let b = multiset(dump_items(&mirrored)?.iter().map(|m| item_key(m, false)));
        ensure(a == b, || format!("motion {i} aggregation:\n  {}", diff(&a, &b)))?;
    }
    Ok(format!("{MIRROR_MOTIONS} motions, {codes_seen} motioncodes"))
}

// ---------------------------------------------------------------------------

fn rigid_invariance() -> Result<String, String> {
    let captioner = Captioner::new(quiet_config()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut described = 0;
    for i in 0..100u64 {
        let frames = rng.random_range(20..100);
        let seq = synth::random_motion(&mut rng, frames, 20.0);
        let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let shift = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
        let a = captioner.caption(&seq, i).text;
        let b = captioner.caption(&seq.rigidly_transformed(yaw, shift), i).text;
        ensure(a == b, || format!("motion {i}, yaw {yaw:.3}:\n  {a}\n  {b}"))?;
        described += usize::from(!a.is_empty());
    }
    Ok(format!("100 motions, {described} non-empty captions"))
}

// ---------------------------------------------------------------------------

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

const TEN_SECONDS_LIMIT: Duration = Duration::from_secs(1);

fn determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let inputs: Vec<PathBuf> = (0..6)
        .map(|i| {
            let seq = synth::random_motion(&mut rng, 60 + 20 * i, 20.0);
            let path = tmp.path().join(format!("motion{i}.json"));
            fs::write(&path, to_canonical_json(&seq)).unwrap();
            path
        })
        .collect();
    let mut trees = Vec::new();
    for run in 0..2 {
        let config = PipelineConfig {
            seed: 2024,
            captions_per_motion: 3,
            emit_intermediate: true,
            output_dir: tmp.path().join(format!("run{run}")),
            ..PipelineConfig::default()
        };
        let captioner = Captioner::new(config).map_err(|e| e.to_string())?;
        let report = run_pipeline(&captioner, &inputs, None).map_err(|e| e.to_string())?;
        ensure(report.succeeded(), || format!("run {run} failed: {:?}", report.errors))?;
        trees.push(read_tree(&tmp.path().join(format!("run{run}"))));
    }
    ensure(trees[0].len() == 36, || format!("{} output files", trees[0].len()))?;
    ensure(trees[0] == trees[1], || "output trees differ".into())?;

    let captioner = Captioner::new(PipelineConfig::default()).map_err(|e| e.to_string())?;
    let seq = synth::random_motion(&mut rng, 200, 20.0);
    let start = Instant::now();
    let doc = captioner.caption(&seq, 9);
    let elapsed = start.elapsed();
    ensure(elapsed < TEN_SECONDS_LIMIT, || format!("10 s motion took {elapsed:.2?}"))?;
    ensure(!doc.text.is_empty(), || "10 s motion gave no caption".into())?;
    Ok(format!("{} identical files, 10 s motion in {elapsed:.2?}", trees[0].len()))
}
