use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use super::model::{EntityKind, GraphDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    DuplicateId,
    EmptyId,
    EmptyName,
    DanglingEndpoint,
    RelationDomainViolation,
    RelationRangeViolation,
    MisplacedUnitOfMeasure,
    SelfLoop,
    DuplicateRelation,
    InvalidDate,
    /// Warning: start date after end date.
    DateOrder,
    /// Warning: entity takes part in no relationship.
    IsolatedEntity,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn has(&self, code: IssueCode) -> bool {
        self.errors
            .iter()
            .chain(&self.warnings)
            .any(|i| i.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .errors
            .iter()
            .map(|i| format!("{} {}: {}", i.code, i.subject, i.message))
            .collect();
        write!(f, "{} error(s)", self.errors.len())?;
        if !parts.is_empty() {
            write!(f, ": {}", parts.join("; "))?;
        }
        Ok(())
    }
}

/// ISO-8601 calendar date (`YYYY`, `YYYY-MM`, `YYYY-MM-DD`) or RFC 3339
/// timestamp. Returns the first day covered, for ordering checks.
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    if s.len() == 7 && s.as_bytes()[4] == b'-' {
        return NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d").ok();
    }
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        return NaiveDate::parse_from_str(&format!("{s}-01-01"), "%Y-%m-%d").ok();
    }
    DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive())
}

/// Check the ontology rules. Violations are data: every one is listed.
pub fn validate(doc: &GraphDoc) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let issue = |list: &mut Vec<ValidationIssue>, code, subject: &str, message: String| {
        list.push(ValidationIssue {
            code,
            subject: subject.to_string(),
            message,
        })
    };

    let mut kinds: HashMap<&str, EntityKind> = HashMap::new();
    for (i, e) in doc.entities.iter().enumerate() {
        let subject = if e.id.is_empty() {
            format!("#{i}")
        } else {
            e.id.clone()
        };
        if e.id.trim().is_empty() {
            issue(
                &mut errors,
                IssueCode::EmptyId,
                &subject,
                format!("entity {i} has no id"),
            );
        } else if kinds.insert(e.id.as_str(), e.kind).is_some() {
            issue(
                &mut errors,
                IssueCode::DuplicateId,
                &subject,
                format!("id {} is used more than once", e.id),
            );
        }
        if e.name.trim().is_empty() {
            issue(
                &mut errors,
                IssueCode::EmptyName,
                &subject,
                "name is empty".into(),
            );
        }
        if e.unit_of_measure.is_some() && e.kind != EntityKind::Indicator {
            issue(
                &mut errors,
                IssueCode::MisplacedUnitOfMeasure,
                &subject,
                format!("unitOfMeasure on a {}", e.kind),
            );
        }
        let mut dates = Vec::new();
        for (field, value) in [("startDate", &e.start_date), ("endDate", &e.end_date)] {
            if let Some(v) = value {
                match parse_iso_date(v) {
                    Some(d) => dates.push(d),
                    None => issue(
                        &mut errors,
                        IssueCode::InvalidDate,
                        &subject,
                        format!("{field} {v:?} is not an ISO-8601 date"),
                    ),
                }
            }
        }
        if let (Some(_), Some(_), [start, end]) = (&e.start_date, &e.end_date, dates.as_slice()) {
            if start > end {
                issue(
                    &mut warnings,
                    IssueCode::DateOrder,
                    &subject,
                    "startDate is after endDate".into(),
                );
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut connected: BTreeSet<&str> = BTreeSet::new();
    for r in &doc.relationships {
        let subject = r.record_id();
        if !seen.insert((&r.from, r.kind, &r.to)) {
            issue(
                &mut errors,
                IssueCode::DuplicateRelation,
                &subject,
                "relationship listed twice".into(),
            );
            continue;
        }
        if r.from == r.to {
            issue(
                &mut errors,
                IssueCode::SelfLoop,
                &subject,
                "relationship links an entity to itself".into(),
            );
        }
        let from = kinds.get(r.from.as_str()).copied();
        let to = kinds.get(r.to.as_str()).copied();
        for (end, id, kind) in [("from", &r.from, from), ("to", &r.to, to)] {
            if kind.is_none() {
                issue(
                    &mut errors,
                    IssueCode::DanglingEndpoint,
                    &subject,
                    format!("{end} endpoint {id} is not an entity"),
                );
            } else {
                connected.insert(id.as_str());
            }
        }
        if let Some((domain, range)) = r.kind.signature() {
            if let Some(k) = from.filter(|k| *k != domain) {
                issue(
                    &mut errors,
                    IssueCode::RelationDomainViolation,
                    &subject,
                    format!("{} must start at a {domain}, not a {k}", r.kind),
                );
            }
            if let Some(k) = to.filter(|k| *k != range) {
                issue(
                    &mut errors,
                    IssueCode::RelationRangeViolation,
                    &subject,
                    format!("{} must end at a {range}, not a {k}", r.kind),
                );
            }
        }
    }
    for e in &doc.entities {
        if !e.id.is_empty() && !connected.contains(e.id.as_str()) {
            issue(
                &mut warnings,
                IssueCode::IsolatedEntity,
                &e.id,
                "entity has no relationships".into(),
            );
        }
    }

    ValidationReport {
        valid: errors.is_empty(),
        errors,
        warnings,
    }
}
