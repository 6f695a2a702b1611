use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RelateError;
use crate::corpus::{Chunk, ChunkSource, Requirement, RequirementKind};
use crate::semantic_index::{cosine, embed_many, EmbeddingProvider, EmbeddingVector, VectorIndex};
use crate::util::natural_cmp;

pub const DEFAULT_RELATED_THRESHOLD: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum PairKind {
    SR_SR,
    FR_SR,
    NFR_SR,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SR_SR => "SR_SR",
            Self::FR_SR => "FR_SR",
            Self::NFR_SR => "NFR_SR",
        }
    }

    /// The kind implied by the member kinds, if the combination is legal.
    pub fn of(left: RequirementKind, right: RequirementKind) -> Option<Self> {
        match (left, right) {
            (RequirementKind::SR, RequirementKind::SR) => Some(Self::SR_SR),
            (RequirementKind::FR, RequirementKind::SR) => Some(Self::FR_SR),
            (RequirementKind::NFR, RequirementKind::SR) => Some(Self::NFR_SR),
            _ => None,
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementPair {
    /// `left~right`.
    pub pair_id: String,
    pub left: Requirement,
    /// Always the SR.
    pub right: Requirement,
    pub pair_kind: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

impl RequirementPair {
    pub fn new(left: Requirement, right: Requirement, pair_kind: PairKind) -> Self {
        Self {
            pair_id: pair_id(&left.id, &right.id),
            left,
            right,
            pair_kind,
            similarity: None,
        }
    }

    /// Whether `pair_kind` agrees with the member kinds and order.
    pub fn is_consistent(&self) -> bool {
        PairKind::of(self.left.kind, self.right.kind) == Some(self.pair_kind)
            && self.pair_id == pair_id(&self.left.id, &self.right.id)
            && (self.pair_kind != PairKind::SR_SR
                || natural_cmp(&self.left.id, &self.right.id).is_lt())
    }
}

pub fn pair_id(left: &str, right: &str) -> String {
    format!("{left}~{right}")
}

fn sorted(reqs: &[Requirement]) -> Vec<&Requirement> {
    let mut v: Vec<&Requirement> = reqs.iter().collect();
    v.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    v
}

fn check_kind(reqs: &[Requirement], kind: RequirementKind) -> Result<(), RelateError> {
    match reqs.iter().find(|r| r.kind != kind) {
        Some(r) => Err(RelateError::InvalidRequirement(format!(
            "{} has kind {} but was passed as {kind}",
            r.id, r.kind
        ))),
        None => Ok(()),
    }
}

/// Every FR and NFR against every SR, plus every unordered SR pair.
///
/// Ordering: FR_SR by (FR id, SR id), then NFR_SR, then SR_SR, ids compared
/// naturally.
pub fn generate_pairs(
    frs: &[Requirement],
    nfrs: &[Requirement],
    srs: &[Requirement],
) -> Result<Vec<RequirementPair>, RelateError> {
    if srs.is_empty() {
        return Err(RelateError::EmptySRSet);
    }
    check_kind(frs, RequirementKind::FR)?;
    check_kind(nfrs, RequirementKind::NFR)?;
    check_kind(srs, RequirementKind::SR)?;
    let mut seen = std::collections::HashSet::new();
    for r in frs.iter().chain(nfrs).chain(srs) {
        if !seen.insert(r.id.as_str()) {
            return Err(RelateError::DuplicateRequirement(r.id.clone()));
        }
    }
    let srs = sorted(srs);
    let mut out =
        Vec::with_capacity((frs.len() + nfrs.len()) * srs.len() + srs.len() * (srs.len() - 1) / 2);
    for (list, kind) in [(frs, PairKind::FR_SR), (nfrs, PairKind::NFR_SR)] {
        for r in sorted(list) {
            for sr in &srs {
                out.push(RequirementPair::new(r.clone(), (*sr).clone(), kind));
            }
        }
    }
    for (i, a) in srs.iter().enumerate() {
        for b in &srs[i + 1..] {
            out.push(RequirementPair::new(
                (*a).clone(),
                (*b).clone(),
                PairKind::SR_SR,
            ));
        }
    }
    Ok(out)
}

/// |FR|·|SR| + |NFR|·|SR| + C(|SR|, 2).
pub fn expected_pair_count(frs: usize, nfrs: usize, srs: usize) -> usize {
    frs * srs + nfrs * srs + srs * srs.saturating_sub(1) / 2
}

fn check_threshold(t: f64) -> Result<(), RelateError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(RelateError::InvalidThreshold(t))
    }
}

/// Set `similarity` on every pair: cosine of the two requirement texts.
/// Each distinct requirement is embedded once.
pub fn score_pairs(
    pairs: &[RequirementPair],
    embedder: &dyn EmbeddingProvider,
    concurrency: usize,
) -> Result<Vec<RequirementPair>, RelateError> {
    let mut texts: BTreeMap<&str, &str> = BTreeMap::new();
    for p in pairs {
        texts.insert(&p.left.id, &p.left.text);
        texts.insert(&p.right.id, &p.right.text);
    }
    let ids: Vec<&str> = texts.keys().copied().collect();
    let bodies: Vec<&str> = texts.values().copied().collect();
    let vectors = embed_many(&bodies, embedder, concurrency)?;
    let by_id: BTreeMap<&str, &EmbeddingVector> = ids.into_iter().zip(vectors.iter()).collect();
    pairs
        .iter()
        .map(|p| {
            let s = cosine(by_id[p.left.id.as_str()], by_id[p.right.id.as_str()])?;
            Ok(RequirementPair {
                similarity: Some(s),
                ..p.clone()
            })
        })
        .collect()
}

/// Keep pairs whose similarity is at least `threshold`. Pairs already
/// scored keep their score; the rest are scored first.
pub fn filter_related(
    pairs: &[RequirementPair],
    embedder: &dyn EmbeddingProvider,
    threshold: f64,
    concurrency: usize,
) -> Result<Vec<RequirementPair>, RelateError> {
    check_threshold(threshold)?;
    let scored = if pairs.iter().all(|p| p.similarity.is_some()) {
        pairs.to_vec()
    } else {
        score_pairs(pairs, embedder, concurrency)?
    };
    Ok(filter_scored(&scored, threshold))
}

/// Threshold already-scored pairs; unscored pairs are dropped.
pub fn filter_scored(pairs: &[RequirementPair], threshold: f64) -> Vec<RequirementPair> {
    pairs
        .iter()
        .filter(|p| p.similarity.is_some_and(|s| s >= threshold))
        .cloned()
        .collect()
}

/// The related-pair store: one record per pair, keyed by pair id.
pub fn related_pair_index(
    pairs: &[RequirementPair],
    embedder: &dyn EmbeddingProvider,
    concurrency: usize,
) -> Result<VectorIndex, RelateError> {
    let chunks: Vec<Chunk> = pairs
        .iter()
        .map(|p| {
            let mut c = Chunk::new(
                p.pair_id.clone(),
                ChunkSource::Catalog,
                format!("{}\n{}", p.left.labeled(), p.right.labeled()),
            )
            .with_meta("record", "related_pair")
            .with_meta("pair_kind", p.pair_kind.as_str())
            .with_meta("left", p.left.id.clone())
            .with_meta("right", p.right.id.clone());
            if let Some(s) = p.similarity {
                c = c.with_meta("similarity", format!("{s:.6}"));
            }
            c
        })
        .collect();
    let mut index = VectorIndex::for_provider(embedder);
    if !chunks.is_empty() {
        index.add_chunks(&chunks, embedder, concurrency)?;
    }
    Ok(index)
}

/// The calibration sweep: 0.50, 0.55, ..., 0.90.
pub fn sweep_thresholds() -> Vec<f64> {
    (0..9).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub text_a: String,
    pub text_b: String,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub sweep: Vec<SweepPoint>,
    pub selected: f64,
}

impl ThresholdCalibration {
    pub fn selected_point(&self) -> &SweepPoint {
        self.sweep
            .iter()
            .find(|p| p.threshold == self.selected)
            .expect("selected threshold is a sweep point")
    }
}

/// Sweep over (similarity, label) observations. Predicted related means
/// similarity >= t. Precision with no predicted positives is 0.
pub fn calibrate_scores(scored: &[(f64, bool)]) -> Result<ThresholdCalibration, RelateError> {
    let positives = scored.iter().filter(|(_, l)| *l).count();
    if positives == 0 || positives == scored.len() {
        return Err(RelateError::DegenerateLabels);
    }
    let sweep: Vec<SweepPoint> = sweep_thresholds()
        .into_iter()
        .map(|t| {
            let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
            for &(s, label) in scored {
                match (s >= t, label) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fneg += 1,
                    (false, false) => {}
                }
            }
            let ratio = |num: usize, den: usize| {
                if den == 0 {
                    0.0
                } else {
                    num as f64 / den as f64
                }
            };
            SweepPoint {
                threshold: t,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fneg),
                f1: ratio(2 * tp, 2 * tp + fp + fneg),
            }
        })
        .collect();
    let mut best = sweep[0];
    for p in &sweep[1..] {
        if p.f1 > best.f1 {
            best = *p;
        }
    }
    Ok(ThresholdCalibration {
        selected: best.threshold,
        sweep,
    })
}

/// Embed each labeled pair, score it, and run the sweep.
pub fn calibrate_threshold(
    labeled: &[LabeledPair],
    embedder: &dyn EmbeddingProvider,
    concurrency: usize,
) -> Result<ThresholdCalibration, RelateError> {
    let positives = labeled.iter().filter(|p| p.label).count();
    if positives == 0 || positives == labeled.len() {
        return Err(RelateError::DegenerateLabels);
    }
    let texts: Vec<&str> = labeled
        .iter()
        .flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()])
        .collect();
    let vectors = embed_many(&texts, embedder, concurrency)?;
    let scored = labeled
        .iter()
        .zip(vectors.chunks(2))
        .map(|(p, v)| Ok((cosine(&v[0], &v[1])?, p.label)))
        .collect::<Result<Vec<_>, RelateError>>()?;
    calibrate_scores(&scored)
}

/// Read a `text_a,text_b,label` CSV. Labels are 0/1 (or true/false).
pub fn parse_labeled_pairs(table: &str) -> Result<Vec<LabeledPair>, RelateError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(table.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| RelateError::MalformedInput(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| RelateError::MalformedInput(format!("missing column {name}")))
    };
    let (a, b, l) = (col("text_a")?, col("text_b")?, col("label")?);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| RelateError::MalformedInput(e.to_string()))?;
        let label = match row.get(l).unwrap_or("") {
            "1" | "true" | "TRUE" | "True" => true,
            "0" | "false" | "FALSE" | "False" => false,
            other => {
                return Err(RelateError::MalformedInput(format!(
                    "row {}: bad label {other:?}",
                    i + 1
                )));
            }
        };
        let text_a = row.get(a).unwrap_or("").to_string();
        let text_b = row.get(b).unwrap_or("").to_string();
        if text_a.is_empty() || text_b.is_empty() {
            return Err(RelateError::MalformedInput(format!(
                "row {}: empty text",
                i + 1
            )));
        }
        out.push(LabeledPair {
            text_a,
            text_b,
            label,
        });
    }
    Ok(out)
}
