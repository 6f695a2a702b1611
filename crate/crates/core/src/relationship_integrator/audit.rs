use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::classify::{Relation, RelationVerdict};
use crate::util::natural_cmp;

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn by_pair(verdicts: &[RelationVerdict]) -> BTreeMap<&str, BTreeMap<u32, Relation>> {
    let mut out: BTreeMap<&str, BTreeMap<u32, Relation>> = BTreeMap::new();
    for v in verdicts {
        out.entry(&v.pair_id)
            .or_default()
            .insert(v.run_index, v.relation);
    }
    out
}

fn sorted_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = ids.map(str::to_string).collect();
    v.sort_by(|a, b| natural_cmp(a, b));
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub pair_id: String,
    /// Relation per run; `None` where that run has no verdict.
    pub relations: Vec<Option<Relation>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub runs: u32,
    pub pairs: usize,
    pub agreeing_pairs: usize,
    pub agreement_pct: f64,
    /// Per run: (Positive, Negative, Neutral) counts.
    pub counts_per_run: Vec<BTreeMap<Relation, usize>>,
    pub disagreements: Vec<Disagreement>,
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "runs: {}, pairs: {}, agreement: {} ({:.0}%)",
            self.runs, self.pairs, self.agreeing_pairs, self.agreement_pct
        )
    }
}

/// Label agreement across runs `0..runs`: a pair agrees iff every run has a
/// verdict and all verdicts carry the same relation. Reasons are ignored.
pub fn consistency_audit(verdicts: &[RelationVerdict], runs: u32) -> ConsistencyReport {
    let grouped = by_pair(verdicts);
    let mut agreeing = 0;
    let mut disagreements = Vec::new();
    for id in sorted_ids(grouped.keys().copied()) {
        let per_run = &grouped[id.as_str()];
        let relations: Vec<Option<Relation>> =
            (0..runs).map(|r| per_run.get(&r).copied()).collect();
        let agrees = relations.iter().all(|r| r.is_some() && *r == relations[0]);
        if agrees {
            agreeing += 1;
        } else {
            disagreements.push(Disagreement {
                pair_id: id,
                relations,
            });
        }
    }
    let counts_per_run = (0..runs)
        .map(|r| {
            let mut counts: BTreeMap<Relation, usize> =
                Relation::ALL.into_iter().map(|k| (k, 0)).collect();
            for v in verdicts.iter().filter(|v| v.run_index == r) {
                *counts.entry(v.relation).or_default() += 1;
            }
            counts
        })
        .collect();
    ConsistencyReport {
        runs,
        pairs: grouped.len(),
        agreeing_pairs: agreeing,
        agreement_pct: pct(agreeing, grouped.len()),
        counts_per_run,
        disagreements,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustCounts {
    pub catalog_referred: usize,
    pub own_reasoning: usize,
    pub catalog_pct: f64,
}

impl TrustCounts {
    fn of<'a>(verdicts: impl Iterator<Item = &'a RelationVerdict>) -> Self {
        let (mut referred, mut own) = (0, 0);
        for v in verdicts {
            if v.catalog_referred() {
                referred += 1;
            } else {
                own += 1;
            }
        }
        Self {
            catalog_referred: referred,
            own_reasoning: own,
            catalog_pct: pct(referred, referred + own),
        }
    }
}

impl fmt::Display for TrustCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "catalog-referred: {} ({:.0}%), own-reasoning: {}",
            self.catalog_referred, self.catalog_pct, self.own_reasoning
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    /// Over every verdict given.
    pub total: TrustCounts,
    /// Keyed by run index.
    pub per_run: BTreeMap<u32, TrustCounts>,
}

impl fmt::Display for TrustReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.total.fmt(f)
    }
}

/// Catalog-referred versus own-reasoning verdict counts.
pub fn trust_audit(verdicts: &[RelationVerdict]) -> TrustReport {
    let mut runs: Vec<u32> = verdicts.iter().map(|v| v.run_index).collect();
    runs.sort_unstable();
    runs.dedup();
    TrustReport {
        total: TrustCounts::of(verdicts.iter()),
        per_run: runs
            .into_iter()
            .map(|r| {
                (
                    r,
                    TrustCounts::of(verdicts.iter().filter(|v| v.run_index == r)),
                )
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDifference {
    pub pair_id: String,
    pub left: Relation,
    pub right: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub common_pairs: usize,
    pub agreeing: usize,
    pub agreement_pct: f64,
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
    pub differences: Vec<VerdictDifference>,
}

/// Compare the run-0 verdicts of two classification results, for example
/// from two providers.
pub fn compare_verdicts(left: &[RelationVerdict], right: &[RelationVerdict]) -> ComparisonReport {
    let pick = |vs: &[RelationVerdict]| -> BTreeMap<String, Relation> {
        vs.iter()
            .filter(|v| v.run_index == 0)
            .map(|v| (v.pair_id.clone(), v.relation))
            .collect()
    };
    let (l, r) = (pick(left), pick(right));
    let mut differences = Vec::new();
    let mut agreeing = 0;
    let mut common = 0;
    for id in sorted_ids(l.keys().map(String::as_str)) {
        if let Some(rr) = r.get(&id) {
            common += 1;
            if *rr == l[&id] {
                agreeing += 1;
            } else {
                differences.push(VerdictDifference {
                    left: l[&id],
                    right: *rr,
                    pair_id: id,
                });
            }
        }
    }
    ComparisonReport {
        common_pairs: common,
        agreeing,
        agreement_pct: pct(agreeing, common),
        only_left: sorted_ids(l.keys().filter(|k| !r.contains_key(*k)).map(String::as_str)),
        only_right: sorted_ids(r.keys().filter(|k| !l.contains_key(*k)).map(String::as_str)),
        differences,
    }
}
