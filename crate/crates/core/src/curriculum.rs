//! Two-stage easy-to-hard epoch schedule.
//!
//! Stage 1 iterates the accepted subset, stage 2 the rejected one. Each
//! epoch is an independent permutation of its subset.
//!
//! Permutations are reproducible from `(seed, stage, epoch)` alone:
//!
//! * generator: ChaCha8 keyed with `seed` (via `seed_from_u64`), stream
//!   number `(stage << 32) | epoch` with stage counted from 1 and epoch from 0
//!   within its stage;
//! * shuffle: Fisher–Yates from the last index down; the swap partner for
//!   index `i` is `(next_u64() as u128 * (i + 1) as u128) >> 64`.

use std::collections::{BTreeMap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STAGE1_EPOCHS: usize = 3;
pub const DEFAULT_STAGE2_EPOCHS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Accept,
    Reject,
    /// Stage 2 with the accepted subset replayed alongside.
    RejectWithAccept,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub subset: Subset,
    pub epochs: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub warnings: Vec<String>,
    /// SHA-256 of each input manifest, keyed by role.
    pub manifest_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleOptions {
    pub seed: u64,
    pub epochs_stage1: usize,
    pub epochs_stage2: usize,
    pub mix_in_accept: bool,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            seed: 0,
            epochs_stage1: DEFAULT_STAGE1_EPOCHS,
            epochs_stage2: DEFAULT_STAGE2_EPOCHS,
            mix_in_accept: false,
        }
    }
}

/// Generator for one epoch's permutation.
pub fn epoch_rng(seed: u64, stage: u32, epoch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(stage) << 32) | u64::from(epoch));
    rng
}

/// In-place Fisher–Yates with multiply-shift index draws.
pub fn fisher_yates<T, R: RngCore>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = ((u128::from(rng.next_u64()) * (i as u128 + 1)) >> 64) as usize;
        items.swap(i, j);
    }
}

fn stage_epochs(ids: &[String], seed: u64, stage: u32, count: usize) -> Vec<Vec<String>> {
    (0..count)
        .map(|epoch| {
            let mut order = ids.to_vec();
            fisher_yates(&mut order, &mut epoch_rng(seed, stage, epoch as u32));
            order
        })
        .collect()
}

pub fn build_schedule(
    accept_ids: &[String],
    reject_ids: &[String],
    options: ScheduleOptions,
) -> Result<CurriculumSchedule> {
    if accept_ids.is_empty() {
        return Err(Error::Empty("accepted subset"));
    }
    let mut seen = HashSet::new();
    for id in accept_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut seen_reject = HashSet::new();
    for id in reject_ids {
        if seen.contains(id.as_str()) {
            return Err(Error::OverlappingIds(id.clone()));
        }
        if !seen_reject.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut warnings = Vec::new();
    let stage1 = Stage {
        subset: Subset::Accept,
        epochs: stage_epochs(accept_ids, options.seed, 1, options.epochs_stage1),
    };
    let stage2 = if reject_ids.is_empty() {
        warnings.push("rejected subset is empty; stage 2 has no epochs".to_string());
        Stage {
            subset: Subset::Reject,
            epochs: Vec::new(),
        }
    } else if options.mix_in_accept {
        let pool: Vec<String> = reject_ids.iter().chain(accept_ids).cloned().collect();
        Stage {
            subset: Subset::RejectWithAccept,
            epochs: stage_epochs(&pool, options.seed, 2, options.epochs_stage2),
        }
    } else {
        Stage {
            subset: Subset::Reject,
            epochs: stage_epochs(reject_ids, options.seed, 2, options.epochs_stage2),
        }
    };

    Ok(CurriculumSchedule {
        seed: options.seed,
        stages: vec![stage1, stage2],
        warnings,
        manifest_hashes: BTreeMap::new(),
    })
}

impl CurriculumSchedule {
    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs.len()).sum()
    }

    /// The id order for a global (cross-stage) epoch index.
    pub fn epoch_order(&self, index: usize) -> Result<&[String]> {
        let mut rest = index;
        for stage in &self.stages {
            if rest < stage.epochs.len() {
                return Ok(&stage.epochs[rest]);
            }
            rest -= stage.epochs.len();
        }
        Err(Error::EpochOutOfRange {
            index,
            total: self.total_epochs(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn sorted(v: &[String]) -> Vec<String> {
        let mut v = v.to_vec();
        v.sort();
        v
    }

    #[test]
    fn default_schedule_shape() {
        let s = build_schedule(&ids(&["a", "b"]), &ids(&["c", "d"]), ScheduleOptions::default())
            .unwrap();
        assert_eq!(s.total_epochs(), 8);
        for e in 0..3 {
            assert_eq!(sorted(s.epoch_order(e).unwrap()), ids(&["a", "b"]));
        }
        for e in 3..8 {
            assert_eq!(sorted(s.epoch_order(e).unwrap()), ids(&["c", "d"]));
        }
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn schedule_is_deterministic() {
        let accept: Vec<String> = (0..20).map(|i| format!("a{i}")).collect();
        let reject: Vec<String> = (0..20).map(|i| format!("r{i}")).collect();
        let opts = ScheduleOptions {
            seed: 42,
            ..ScheduleOptions::default()
        };
        let one = build_schedule(&accept, &reject, opts).unwrap();
        let two = build_schedule(&accept, &reject, opts).unwrap();
        assert_eq!(one.to_json().unwrap(), two.to_json().unwrap());
    }

    #[test]
    fn empty_reject_warns() {
        let s = build_schedule(&ids(&["a", "b"]), &[], ScheduleOptions::default()).unwrap();
        assert_eq!(s.total_epochs(), 3);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn input_errors() {
        let o = ScheduleOptions::default();
        assert!(matches!(build_schedule(&[], &ids(&["c"]), o), Err(Error::Empty(_))));
        assert!(matches!(
            build_schedule(&ids(&["a"]), &ids(&["a"]), o),
            Err(Error::OverlappingIds(_))
        ));
        assert!(matches!(
            build_schedule(&ids(&["a", "a"]), &[], o),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn epoch_order_indices() {
        let s = build_schedule(&ids(&["a", "b", "c"]), &ids(&["x", "y"]), ScheduleOptions::default())
            .unwrap();
        assert_eq!(s.epoch_order(0).unwrap(), &s.stages[0].epochs[0][..]);
        // Index 3 is the first stage-2 epoch because stage 1 has 3 epochs.
        assert_eq!(s.epoch_order(3).unwrap(), &s.stages[1].epochs[0][..]);
        assert!(matches!(
            s.epoch_order(8),
            Err(Error::EpochOutOfRange { index: 8, total: 8 })
        ));
    }

    #[test]
    fn seed_changes_order() {
        let accept: Vec<String> = (0..10).map(|i| format!("a{i}")).collect();
        let reject = ids(&["r0", "r1"]);
        let base = build_schedule(&accept, &reject, ScheduleOptions::default()).unwrap();
        for seed in 1..=100 {
            let other = build_schedule(
                &accept,
                &reject,
                ScheduleOptions {
                    seed,
                    ..ScheduleOptions::default()
                },
            )
            .unwrap();
            assert_ne!(other.stages, base.stages, "seed {seed}");
        }
    }

    #[test]
    fn mix_in_accept_replays_stage1() {
        let s = build_schedule(
            &ids(&["a", "b"]),
            &ids(&["c"]),
            ScheduleOptions {
                mix_in_accept: true,
                ..ScheduleOptions::default()
            },
        )
        .unwrap();
        assert_eq!(s.stages[1].subset, Subset::RejectWithAccept);
        assert_eq!(sorted(&s.stages[1].epochs[0]), ids(&["a", "b", "c"]));
    }

    #[test]
    fn fisher_yates_is_uniform_on_three() {
        let mut counts = BTreeMap::new();
        for epoch in 0..6000 {
            let mut v = [0, 1, 2];
            fisher_yates(&mut v, &mut epoch_rng(9, 1, epoch));
            *counts.entry(v).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for &c in counts.values() {
            assert!((800..1200).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn generator_is_pinned() {
        // Frozen output so a dependency bump cannot silently change schedules.
        let mut v: Vec<u32> = (0..8).collect();
        fisher_yates(&mut v, &mut epoch_rng(0, 1, 0));
        assert_eq!(v, [4, 2, 3, 6, 7, 0, 5, 1]);
        let mut v: Vec<u32> = (0..8).collect();
        fisher_yates(&mut v, &mut epoch_rng(7, 2, 3));
        assert_eq!(v, [3, 1, 4, 7, 0, 2, 5, 6]);
    }
}
