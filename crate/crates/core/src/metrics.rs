//! Pair-level precision, recall and F1 at the pairwise and group stages,
//! and the size-weighted cluster purity of a grouping.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{choose2, GroundTruth, RecordId, RecordPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pairwise,
    PreCleanup,
    PostCleanup,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Pairwise => "pairwise",
            Stage::PreCleanup => "pre_cleanup",
            Stage::PostCleanup => "post_cleanup",
        })
    }
}

/// How single-record components enter cluster purity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingletonPurity {
    /// Purity 1 with weight 1.
    #[default]
    CountAsPure,
    /// Left out of both numerator and weight.
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub stage: Stage,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub cluster_purity: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub n_components: Option<usize>,
    pub max_component_size: Option<usize>,
}

impl StageScores {
    fn from_counts(stage: Stage, tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        StageScores {
            stage,
            precision,
            recall,
            f1,
            cluster_purity: None,
            tp,
            fp,
            fn_,
            n_components: None,
            max_component_size: None,
        }
    }
}

impl fmt::Display for StageScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<13} P={:.4} R={:.4} F1={:.4}", self.stage.to_string(), self.precision, self.recall, self.f1)?;
        if let Some(p) = self.cluster_purity {
            write!(f, " ClPur={p:.4}")?;
        }
        write!(f, " tp={} fp={} fn={}", self.tp, self.fp, self.fn_)?;
        if let (Some(n), Some(m)) = (self.n_components, self.max_component_size) {
            write!(f, " components={n} max_size={m}")?;
        }
        Ok(())
    }
}

/// Scores a set of positively predicted pairs. Duplicates must already be
/// collapsed; pairs touching records outside the truth count as false.
pub fn pairwise_scores<'a>(predicted: impl IntoIterator<Item = &'a RecordPair>, truth: &GroundTruth) -> StageScores {
    let (mut tp, mut fp) = (0u64, 0u64);
    for p in predicted {
        if truth.is_true_match(p).unwrap_or(false) {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    StageScores::from_counts(Stage::Pairwise, tp, fp, truth.true_pair_count() - tp)
}

/// Per component: (size, number of true within-component pairs).
fn component_counts(components: &[Vec<RecordId>], truth: &GroundTruth) -> Vec<(u64, u64)> {
    components
        .iter()
        .map(|c| {
            let mut per_group: HashMap<usize, u64> = HashMap::new();
            for id in c {
                if let Some(g) = truth.group_index(id) {
                    *per_group.entry(g).or_default() += 1;
                }
            }
            (c.len() as u64, per_group.values().map(|&k| choose2(k)).sum())
        })
        .collect()
}

/// Purity from `(component size, true within-component pairs)` counts.
pub fn cluster_purity_from_counts(counts: &[(u64, u64)], singletons: SingletonPurity) -> f64 {
    let (mut weighted, mut weight) = (0.0f64, 0u64);
    for &(size, tp) in counts {
        if size < 2 {
            if singletons == SingletonPurity::CountAsPure && size == 1 {
                weighted += 1.0;
                weight += 1;
            }
            continue;
        }
        weighted += size as f64 * tp as f64 / choose2(size) as f64;
        weight += size;
    }
    if weight == 0 {
        1.0
    } else {
        weighted / weight as f64
    }
}

/// Size-weighted share of true pairs among each component's complete pair set.
pub fn cluster_purity(components: &[Vec<RecordId>], truth: &GroundTruth, singletons: SingletonPurity) -> f64 {
    cluster_purity_from_counts(&component_counts(components, truth), singletons)
}

/// Scores the transitive completion of `components` without enumerating it.
pub fn group_scores(
    components: &[Vec<RecordId>],
    truth: &GroundTruth,
    stage: Stage,
    singletons: SingletonPurity,
) -> StageScores {
    let counts = component_counts(components, truth);
    let predicted: u64 = counts.iter().map(|&(n, _)| choose2(n)).sum();
    let tp: u64 = counts.iter().map(|&(_, t)| t).sum();
    let mut s = StageScores::from_counts(stage, tp, predicted - tp, truth.true_pair_count() - tp);
    s.cluster_purity = Some(cluster_purity_from_counts(&counts, singletons));
    s.n_components = Some(components.len());
    s.max_component_size = Some(components.iter().map(Vec::len).max().unwrap_or(0));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleanup::transitive_completion;
    use crate::model::{EntityGroup, GroupKind};

    fn truth(groups: &[&[&str]]) -> GroundTruth {
        GroundTruth::new(
            groups
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    EntityGroup::new(format!("g{i}"), GroupKind::Company, g.iter().map(|r| RecordId::from(*r)))
                })
                .collect(),
        )
        .unwrap()
    }

    fn comps(cs: &[&[&str]]) -> Vec<Vec<RecordId>> {
        cs.iter().map(|c| c.iter().map(|r| RecordId::from(*r)).collect()).collect()
    }

    fn pair(a: &str, b: &str) -> RecordPair {
        RecordPair::new(a.into(), b.into()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pairwise_hand_example() {
        let t = truth(&[&["a", "b", "c"]]);
        let s = pairwise_scores(&[pair("a", "b")], &t);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 2));
        assert!(close(s.precision, 1.0) && close(s.recall, 1.0 / 3.0) && close(s.f1, 0.5));
        assert_eq!(s.cluster_purity, None);
    }

    #[test]
    fn pairwise_degenerate() {
        let t = truth(&[&["a", "b"]]);
        let s = pairwise_scores(&[], &t);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = pairwise_scores(&[pair("a", "b")], &t);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert_eq!(pairwise_scores(&[pair("a", "zz")], &t).fp, 1);
    }

    #[test]
    fn exact_groups_score_one() {
        let t = truth(&[&["a", "b", "c"], &["d", "e"], &["f"]]);
        let s = group_scores(
            &comps(&[&["a", "b", "c"], &["d", "e"], &["f"]]),
            &t,
            Stage::PostCleanup,
            SingletonPurity::default(),
        );
        assert_eq!((s.precision, s.recall, s.f1, s.cluster_purity), (1.0, 1.0, 1.0, Some(1.0)));
        assert_eq!((s.n_components, s.max_component_size), (Some(3), Some(3)));
    }

    #[test]
    fn fused_groups_precision() {
        let t = truth(&[&["a1", "a2", "a3", "a4"], &["b1", "b2", "b3", "b4"]]);
        let s = group_scores(
            &comps(&[&["a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4"]]),
            &t,
            Stage::PreCleanup,
            SingletonPurity::default(),
        );
        assert_eq!((s.tp, s.fp, s.fn_), (12, 16, 0));
        assert!(close(s.precision, 3.0 / 7.0));
    }

    #[test]
    fn all_singletons() {
        let t = truth(&[&["a", "b"], &["c"]]);
        let s = group_scores(&comps(&[&["a"], &["b"], &["c"]]), &t, Stage::PostCleanup, SingletonPurity::default());
        assert_eq!((s.precision, s.recall, s.cluster_purity), (0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn purity_worked_examples() {
        // {x,y,z} with 2 of 3 pairs true plus a pure pair.
        assert!(close(cluster_purity_from_counts(&[(3, 2), (2, 1)], SingletonPurity::default()), 0.8));
        let t = truth(&[&["x", "y"], &["z"], &["u", "v"]]);
        assert!(close(cluster_purity(&comps(&[&["x", "y", "z"], &["u", "v"]]), &t, SingletonPurity::default()), 0.6));
        let t = truth(&[&["a", "b"], &["c", "d"]]);
        assert!(close(cluster_purity(&comps(&[&["a", "b", "c", "d"]]), &t, SingletonPurity::default()), 1.0 / 3.0));
    }

    #[test]
    fn singleton_convention_flag() {
        let t = truth(&[&["a", "b"], &["c", "d"]]);
        let c = comps(&[&["a", "c"], &["b"], &["d"]]);
        assert!(close(cluster_purity(&c, &t, SingletonPurity::CountAsPure), 0.5));
        assert!(close(cluster_purity(&c, &t, SingletonPurity::Exclude), 0.0));
    }

    #[test]
    fn group_scores_match_completed_pairwise() {
        let t = truth(&[&["a", "b", "c"], &["d", "e"], &["f", "g"]]);
        let c = comps(&[&["a", "b", "d"], &["c"], &["e", "f", "g"]]);
        let g = group_scores(&c, &t, Stage::PreCleanup, SingletonPurity::default());
        let p = pairwise_scores(&transitive_completion(&c), &t);
        assert_eq!((g.tp, g.fp, g.fn_), (p.tp, p.fp, p.fn_));
        assert_eq!((g.precision, g.recall, g.f1), (p.precision, p.recall, p.f1));
    }

    #[test]
    fn json_field_names() {
        let s = pairwise_scores(&[], &truth(&[&["a", "b"]]));
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for k in [
            "stage",
            "precision",
            "recall",
            "f1",
            "cluster_purity",
            "tp",
            "fp",
            "fn",
            "n_components",
            "max_component_size",
        ] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["stage"], "pairwise");
    }
}
