//! Verdict audits and threshold calibration.

use std::path::Path;

use serde::Deserialize;

use greenreq_core::relationship_integrator::{
    calibrate_threshold, classify_all, compare_verdicts, consistency_audit, parse_labeled_pairs,
    trust_audit, ClassificationRun, ComparisonReport, ConsistencyReport, RelationVerdict,
    ThresholdCalibration, TrustReport,
};

use crate::error::WorkbenchError;
use crate::pipeline::{names, Project, Result};
use crate::store::Stage;

/// A verdict file: a full classification run or a bare verdict list.
#[derive(Deserialize)]
#[serde(untagged)]
enum VerdictFile {
    Run(ClassificationRun),
    List(Vec<RelationVerdict>),
}

pub fn read_verdict_file(path: &Path) -> Result<Vec<RelationVerdict>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<VerdictFile>(&text) {
        Ok(VerdictFile::Run(r)) => Ok(r.verdicts),
        Ok(VerdictFile::List(v)) => Ok(v),
        Err(e) => Err(WorkbenchError::Data(format!(
            "{}: not a verdict file: {e}",
            path.display()
        ))),
    }
}

/// Agreement of verdict labels across `runs` classification runs. Reuses
/// the stage verdicts when they cover enough runs, otherwise classifies
/// the related pairs again.
pub fn consistency(project: &Project, runs: u32) -> Result<ConsistencyReport> {
    if runs < 2 {
        return Err(WorkbenchError::Data(
            "a consistency audit needs at least 2 runs".into(),
        ));
    }
    let mut st = project.state()?;
    if st.stage < Stage::Classified {
        return Err(WorkbenchError::StageOrder(
            "audit consistency needs `classify` to have run first".into(),
        ));
    }
    let existing = project.verdicts(&st)?;
    let verdicts = if existing.runs >= runs {
        existing
            .verdicts
            .into_iter()
            .filter(|v| v.run_index < runs)
            .collect()
    } else {
        let related = project.related(&st)?;
        let catalogs = project.catalogs(&st)?;
        let providers = project.fresh_providers()?;
        let run = classify_all(
            &related.pairs,
            &catalogs,
            providers.chat.as_ref(),
            &project.settings()?,
            runs,
        )?;
        project
            .store
            .write_json(&mut st, names::AUDIT_VERDICTS, &run)?;
        run.verdicts
    };
    let report = consistency_audit(&verdicts, runs);
    project
        .store
        .write_json(&mut st, names::AUDIT_CONSISTENCY, &report)?;
    project.store.save_state(&st)?;
    Ok(report)
}

/// Catalog-referred versus own-reasoning counts over run-0 verdicts of the
/// project, or over a given verdict file.
pub fn trust(project: &Project, file: Option<&Path>) -> Result<TrustReport> {
    let mut st = project.state()?;
    let verdicts = match file {
        Some(p) => read_verdict_file(p)?,
        None => {
            if st.stage < Stage::Classified {
                return Err(WorkbenchError::StageOrder(
                    "audit trust needs `classify` to have run first".into(),
                ));
            }
            project.verdicts(&st)?.verdicts
        }
    };
    let first: Vec<RelationVerdict> = verdicts.into_iter().filter(|v| v.run_index == 0).collect();
    let report = trust_audit(&first);
    if file.is_none() {
        project
            .store
            .write_json(&mut st, names::AUDIT_TRUST, &report)?;
        project.store.save_state(&st)?;
    }
    Ok(report)
}

/// Run-0 verdict agreement between the project and another verdict file.
pub fn compare(project: &Project, other: &Path) -> Result<ComparisonReport> {
    let mut st = project.state()?;
    if st.stage < Stage::Classified {
        return Err(WorkbenchError::StageOrder(
            "audit compare needs `classify` to have run first".into(),
        ));
    }
    let ours = project.verdicts(&st)?.verdicts;
    let theirs = read_verdict_file(other)?;
    let report = compare_verdicts(&ours, &theirs);
    project
        .store
        .write_json(&mut st, names::AUDIT_COMPARE, &report)?;
    project.store.save_state(&st)?;
    Ok(report)
}

/// Sweep the related-pair threshold over a labeled `text_a,text_b,label` set.
pub fn calibrate(project: &Project, labeled: &Path) -> Result<ThresholdCalibration> {
    let mut st = project.state()?;
    let text = std::fs::read_to_string(labeled)
        .map_err(|e| WorkbenchError::Data(format!("{}: {e}", labeled.display())))?;
    let pairs = parse_labeled_pairs(&text)?;
    let providers = project.fresh_providers()?;
    let report = calibrate_threshold(
        &pairs,
        providers.embedder.as_ref(),
        project.config.agent.concurrency,
    )?;
    project
        .store
        .write_json(&mut st, names::CALIBRATION, &report)?;
    project.store.save_state(&st)?;
    Ok(report)
}
