//! Salience filtering of motioncodes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::motioncode::{Family, IntensityClass, Motioncode, VelocityClass};
use crate::posecode::Axis;
use crate::skeleton::Joint;

/// The label combination whose frequency decides rarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Combination {
    pub family: Family,
    pub intensity: Option<IntensityClass>,
    pub velocity: VelocityClass,
}

impl Combination {
    pub fn of(code: &Motioncode) -> Self {
        Combination {
            family: code.family,
            intensity: code.intensity,
            velocity: code.velocity_class,
        }
    }

    /// Every combination a motioncode can carry.
    pub fn all() -> Vec<Combination> {
        let mut out = Vec::new();
        for family in Family::ALL {
            let intensities: Vec<Option<IntensityClass>> = if family.has_intensity() {
                IntensityClass::ALL.into_iter().map(Some).collect()
            } else {
                vec![None]
            };
            for intensity in intensities {
                for velocity in VelocityClass::ALL {
                    out.push(Combination {
                        family,
                        intensity,
                        velocity,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub n_max: usize,
    /// Intensities always treated as rare.
    pub rare_intensities: Vec<IntensityClass>,
    /// Velocities always treated as rare.
    pub rare_velocities: Vec<VelocityClass>,
    /// Corpus mode: percentile of observed frequencies at or below which a combination is rare.
    pub rare_percentile: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n_max: 8,
            rare_intensities: vec![IntensityClass::Significant],
            rare_velocities: vec![VelocityClass::VerySlow, VelocityClass::VeryFast],
            rare_percentile: 5.0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_max == 0 {
            return Err("selection.n_max must be at least 1".into());
        }
        if !(0.0..=100.0).contains(&self.rare_percentile) {
            return Err("selection.rare_percentile must lie in [0, 100]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalienceStats {
    /// Relative frequency of each combination over a reference corpus; empty for the static table.
    pub frequencies: BTreeMap<String, f64>,
    pub rare_set: BTreeSet<Combination>,
}

fn combination_key(c: &Combination) -> String {
    format!(
        "{}/{}/{}",
        c.family.name(),
        c.intensity.map_or("none", |i| i.name()),
        c.velocity.name()
    )
}

impl SalienceStats {
    /// Rarity from the configured intensity and velocity classes only.
    pub fn static_table(config: &SelectionConfig) -> Self {
        let rare_set = Combination::all()
            .into_iter()
            .filter(|c| {
                c.intensity.is_some_and(|i| config.rare_intensities.contains(&i))
                    || config.rare_velocities.contains(&c.velocity)
            })
            .collect();
        SalienceStats {
            frequencies: BTreeMap::new(),
            rare_set,
        }
    }

    /// Adds corpus rarity to the static table: a combination is rare when it
    /// was never observed or its frequency is at or below the configured
    /// nearest-rank percentile of the observed frequencies.
    pub fn from_corpus<'a>(codes: impl IntoIterator<Item = &'a Motioncode>, config: &SelectionConfig) -> Self {
        let mut counts: BTreeMap<Combination, usize> = BTreeMap::new();
        let mut total = 0usize;
        for code in codes {
            *counts.entry(Combination::of(code)).or_default() += 1;
            total += 1;
        }
        let mut stats = SalienceStats::static_table(config);
        if total == 0 {
            return stats;
        }
        let freq = |c: &Combination| counts.get(c).map_or(0.0, |&n| n as f64 / total as f64);
        let mut observed: Vec<f64> = counts.keys().map(freq).collect();
        observed.sort_by(f64::total_cmp);
        let rank = ((config.rare_percentile / 100.0) * observed.len() as f64).ceil().max(1.0) as usize;
        let cutoff = observed[rank.min(observed.len()) - 1];
        for c in Combination::all() {
            let f = freq(&c);
            stats.frequencies.insert(combination_key(&c), f);
            if f == 0.0 || f <= cutoff {
                stats.rare_set.insert(c);
            }
        }
        stats
    }

    pub fn is_rare(&self, code: &Motioncode) -> bool {
        self.rare_set.contains(&Combination::of(code))
    }
}

/// Codes with equal keys describe the same quantity.
fn redundancy_key(code: &Motioncode) -> (Family, Vec<Joint>, Option<Axis>) {
    let mut joints = code.instance.joints.clone();
    joints.sort();
    (code.family, joints, code.instance.kind.axis())
}

/// Drops stationary codes and non-rare slight angular or proximity codes,
/// removes overlapping duplicates of the same quantity (keeping the larger
/// |M_S|), then keeps the `n_max` best by (rare, |M_S|, duration), ties going
/// to the earlier start, then a side-blind instance order. Mirror twins tied
/// across the cut are both dropped. The survivors are
/// returned in (start, instance) order.
pub fn select_motioncodes(codes: &[Motioncode], stats: &SalienceStats, config: &SelectionConfig) -> Vec<Motioncode> {
    let eligible: Vec<&Motioncode> = codes
        .iter()
        .filter(|c| c.intensity != Some(IntensityClass::Stationary) && c.spatial != 0)
        .filter(|c| {
            let weak = matches!(c.family, Family::Angular | Family::Proximity)
                && c.intensity == Some(IntensityClass::Slight);
            !weak || stats.is_rare(c)
        })
        .collect();

    let mut by_strength = eligible.clone();
    by_strength.sort_by_key(|c| (std::cmp::Reverse(c.magnitude()), c.t_start, c.instance_index));
    let mut kept: Vec<&Motioncode> = Vec::new();
    for code in by_strength {
        let key = redundancy_key(code);
        let clash = kept
            .iter()
            .any(|k| redundancy_key(k) == key && k.t_start < code.t_end && code.t_start < k.t_end);
        if !clash {
            kept.push(code);
        }
    }

    kept.sort_by_cached_key(|c| {
        let mirrored = c.instance.mirrored();
        (
            std::cmp::Reverse(stats.is_rare(c)),
            std::cmp::Reverse(c.magnitude()),
            std::cmp::Reverse(c.duration()),
            c.t_start,
            // a code and its mirror image rank alike
            mirrored.min(c.instance.clone()),
            c.instance_index,
        )
    });
    if kept.len() > config.n_max && config.n_max > 0 {
        // A code and its mirror twin tied across the cut: keeping either one
        // would favour a side, so both go.
        let (last, next) = (kept[config.n_max - 1], kept[config.n_max]);
        let twins = next.instance != last.instance
            && next.instance == last.instance.mirrored()
            && (next.t_start, next.t_end, next.spatial.abs()) == (last.t_start, last.t_end, last.spatial.abs())
            && stats.is_rare(next) == stats.is_rare(last);
        kept.truncate(config.n_max - usize::from(twins));
    }
    kept.truncate(config.n_max);
    kept.sort_by_key(|c| (c.t_start, c.instance_index));
    kept.into_iter().cloned().collect()
}
