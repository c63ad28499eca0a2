//! Group-level train/validation/test splits and labeled pair export.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatagenError;
use crate::model::{GroundTruth, MatchLabel, RecordId, RecordPair};

pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Split per ground-truth group id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitAssignment {
    by_group: BTreeMap<String, Split>,
}

impl SplitAssignment {
    /// Returns the previous split if the group was already assigned.
    pub fn assign(&mut self, group_id: String, split: Split) -> Option<Split> {
        self.by_group.insert(group_id, split)
    }

    pub fn get(&self, group_id: &str) -> Option<Split> {
        self.by_group.get(group_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> + '_ {
        self.by_group.iter().map(|(g, s)| (g.as_str(), *s))
    }

    pub fn len(&self) -> usize {
        self.by_group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_group.is_empty()
    }

    pub fn count(&self, split: Split) -> usize {
        self.by_group.values().filter(|s| **s == split).count()
    }
}

/// Shuffles the groups and cuts the list by cumulative ratio over the
/// number of groups: train and validation take the floor of their share,
/// test takes the remainder.
pub fn split_groups(truth: &GroundTruth, ratios: [f64; 3], seed: u64) -> Result<SplitAssignment, DatagenError> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatagenError::InvalidRatios(ratios));
    }
    if truth.groups().is_empty() {
        return Err(DatagenError::EmptyTruth);
    }
    let mut ids: Vec<&str> = truth.groups().iter().map(|g| g.group_id.as_str()).collect();
    ids.sort_unstable();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len();
    let n_train = (ratios[0] * n as f64 + 1e-9).floor() as usize;
    let n_val = ((ratios[1] * n as f64 + 1e-9).floor() as usize).min(n - n_train);
    let mut out = SplitAssignment::default();
    for (i, gid) in ids.into_iter().enumerate() {
        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        out.assign(gid.to_string(), split);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub pair: RecordPair,
    pub label: MatchLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedPairs {
    /// Positives sorted by pair, then negatives sorted by pair.
    pub pairs: Vec<LabeledPair>,
    pub positives: usize,
    pub negatives: usize,
    /// Negatives requested but not available inside the split.
    pub shortfall: usize,
}

/// All true pairs of one split plus `neg_ratio` times as many uniformly
/// sampled non-matching pairs drawn from records of the same split.
pub fn export_training_pairs(
    truth: &GroundTruth,
    splits: &SplitAssignment,
    which: Split,
    neg_ratio: usize,
    seed: u64,
) -> ExportedPairs {
    let in_split = truth.restrict(|g| splits.get(&g.group_id) == Some(which));
    let positives: Vec<RecordPair> = in_split.true_pairs().into_iter().collect();
    let records: Vec<RecordId> = {
        let mut r: Vec<RecordId> = in_split.record_ids().cloned().collect();
        r.sort();
        r
    };
    let n = records.len() as u64;
    let available = (n * n.saturating_sub(1) / 2) - positives.len() as u64;
    let requested = (positives.len() * neg_ratio) as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let same_group = |i: usize, j: usize| in_split.group_index(&records[i]) == in_split.group_index(&records[j]);
    let mut negatives: BTreeSet<RecordPair> = BTreeSet::new();
    if requested > 0 && requested * 2 >= available {
        // Dense request: enumerate everything, then subsample.
        let mut all = Vec::new();
        for i in 0..records.len() {
            for j in i + 1..records.len() {
                if !same_group(i, j) {
                    all.push((i, j));
                }
            }
        }
        all.shuffle(&mut rng);
        all.truncate(requested as usize);
        negatives
            .extend(all.into_iter().map(|(i, j)| RecordPair::new(records[i].clone(), records[j].clone()).unwrap()));
    } else if requested > 0 {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        while (seen.len() as u64) < requested {
            let i = rng.random_range(0..records.len());
            let j = rng.random_range(0..records.len());
            if i == j || same_group(i, j) {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                negatives.insert(RecordPair::new(records[key.0].clone(), records[key.1].clone()).unwrap());
            }
        }
    }
    let shortfall = requested.saturating_sub(available) as usize;
    if shortfall > 0 {
        log::warn!(
            "{which} split holds only {available} non-matching pairs; {requested} requested, exporting all of them"
        );
    }
    let mut pairs: Vec<LabeledPair> =
        positives.iter().map(|p| LabeledPair { pair: p.clone(), label: MatchLabel::Match }).collect();
    let negatives_len = negatives.len();
    pairs.extend(negatives.into_iter().map(|pair| LabeledPair { pair, label: MatchLabel::NoMatch }));
    ExportedPairs { pairs, positives: positives.len(), negatives: negatives_len, shortfall }
}
