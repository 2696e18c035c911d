//! Greedy weighted set cover for pose injection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::skeleton::Joint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverResult<T> {
    /// Indices of chosen candidates, in pick order.
    pub chosen: Vec<usize>,
    pub uncovered: BTreeSet<T>,
}

/// Repeatedly takes the candidate with the best ratio of newly covered
/// targets to weight, until every coverable target is covered. Ratios are
/// compared by cross-multiplication; ties go to the earlier candidate.
/// Weights must be positive.
pub fn greedy_weighted_cover<T: Ord + Clone>(targets: &BTreeSet<T>, candidates: &[(BTreeSet<T>, u64)]) -> CoverResult<T> {
    let mut uncovered = targets.clone();
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, u64, u64)> = None;
        for (i, (set, weight)) in candidates.iter().enumerate() {
            assert!(*weight > 0, "cover weights must be positive");
            if chosen.contains(&i) {
                continue;
            }
            let gain = set.iter().filter(|t| uncovered.contains(t)).count() as u64;
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, g, w)) => gain * w > g * weight,
            };
            if better {
                best = Some((i, gain, *weight));
            }
        }
        let Some((i, _, _)) = best else { break };
        chosen.push(i);
        for t in &candidates[i].0 {
            uncovered.remove(t);
        }
    }
    CoverResult { chosen, uncovered }
}

/// A static pose statement that could be injected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseCandidate {
    pub description: String,
    pub joints: Vec<Joint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionChoice {
    pub selected: Vec<PoseCandidate>,
    pub uncovered: Vec<Joint>,
}

/// Weight of a candidate: one plus the joints it mentions outside the targets.
pub fn candidate_weight(targets: &BTreeSet<Joint>, candidate: &PoseCandidate) -> u64 {
    1 + candidate.joints.iter().filter(|j| !targets.contains(j)).count() as u64
}

/// Picks pose statements covering the target joints with as few unrelated
/// joints as possible.
pub fn choose_pose_injection(targets: &BTreeSet<Joint>, eligible: &[PoseCandidate]) -> InjectionChoice {
    let sets: Vec<(BTreeSet<Joint>, u64)> = eligible
        .iter()
        .map(|c| (c.joints.iter().copied().collect(), candidate_weight(targets, c)))
        .collect();
    let result = greedy_weighted_cover(targets, &sets);
    InjectionChoice {
        selected: result.chosen.iter().map(|&i| eligible[i].clone()).collect(),
        uncovered: result.uncovered.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[u8]) -> BTreeSet<u8> {
        xs.iter().copied().collect()
    }

    #[test]
    fn exact_candidate_alone() {
        let targets: BTreeSet<Joint> = [Joint::LeftElbow].into();
        let exact = PoseCandidate {
            description: "the left elbow is straight".into(),
            joints: vec![Joint::LeftElbow],
        };
        let both = PoseCandidate {
            description: "both elbows are straight".into(),
            joints: vec![Joint::LeftElbow, Joint::RightElbow],
        };
        let choice = choose_pose_injection(&targets, &[both.clone(), exact.clone()]);
        assert_eq!(choice.selected, vec![exact]);
        let choice = choose_pose_injection(&targets, &[both.clone()]);
        assert_eq!(choice.selected, vec![both]);
        assert!(choice.uncovered.is_empty());
    }

    #[test]
    fn empty_eligible_set_leaves_everything_uncovered() {
        let targets: BTreeSet<Joint> = [Joint::LeftElbow, Joint::LeftWrist].into();
        let choice = choose_pose_injection(&targets, &[]);
        assert!(choice.selected.is_empty());
        assert_eq!(choice.uncovered, vec![Joint::LeftElbow, Joint::LeftWrist]);
    }

    #[test]
    fn three_targets_four_candidates() {
        let candidates = vec![(set(&[0, 1]), 2), (set(&[1, 2]), 2), (set(&[0]), 1), (set(&[2]), 1)];
        let result = greedy_weighted_cover(&set(&[0, 1, 2]), &candidates);
        assert_eq!(result.chosen, vec![0, 3]);
        assert!(result.uncovered.is_empty());
    }

    proptest! {
        #[test]
        fn covers_everything_coverable(
            targets in prop::collection::btree_set(0u8..8, 0..8),
            candidates in prop::collection::vec((prop::collection::btree_set(0u8..10, 0..5), 1u64..5), 0..10),
        ) {
            let result = greedy_weighted_cover(&targets, &candidates);
            let coverable: BTreeSet<u8> = candidates.iter().flat_map(|(s, _)| s.iter().copied()).collect();
            let expected: BTreeSet<u8> = targets.difference(&coverable).copied().collect();
            prop_assert_eq!(result.uncovered, expected);
            // Every pick added something new.
            let mut seen = BTreeSet::new();
            for &i in &result.chosen {
                let before = seen.len();
                seen.extend(candidates[i].0.iter().filter(|t| targets.contains(t)).copied());
                prop_assert!(seen.len() > before);
            }
        }
    }
}
