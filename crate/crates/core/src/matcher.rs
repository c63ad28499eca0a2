//! Pairwise matching: deterministic built-in scorers and import of
//! externally computed predictions (e.g. from a fine-tuned language model).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::blocking::{CandidatePair, Provenance};
use crate::io::{self, FormatError};
use crate::model::{CompanyRecord, IdScheme, MatchLabel, RecordId, RecordPair, SecurityRecord};
use crate::text;

/// Identifier matcher threshold: a shared identifier or identical name
/// token sets.
pub const EXACT_ID_THRESHOLD: f64 = 1.0;
/// Score threshold for imported predictions that carry no label.
pub const EXTERNAL_SCORE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("unknown record id {0}")]
    UnknownRecord(RecordId),
    #[error("cannot compare company {0} with security {1}")]
    MixedKinds(RecordId, RecordId),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("external predictions are imported, not scored")]
    ExternalNotScorable,
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatcherSpec {
    ExactId,
    NameJaccard { threshold: f64 },
    External { predictions_path: PathBuf },
}

impl MatcherSpec {
    pub fn threshold(&self) -> f64 {
        match self {
            MatcherSpec::ExactId => EXACT_ID_THRESHOLD,
            MatcherSpec::NameJaccard { threshold } => *threshold,
            MatcherSpec::External { .. } => EXTERNAL_SCORE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub pair: RecordPair,
    pub label: MatchLabel,
    pub score: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy)]
pub enum RecordRef<'a> {
    Company(&'a CompanyRecord),
    Security(&'a SecurityRecord),
}

impl<'a> RecordRef<'a> {
    pub fn id(&self) -> &'a RecordId {
        match self {
            RecordRef::Company(c) => &c.id,
            RecordRef::Security(s) => &s.id,
        }
    }

    pub fn name(&self) -> &'a str {
        match self {
            RecordRef::Company(c) => &c.name,
            RecordRef::Security(s) => &s.name,
        }
    }
}

/// A built-in scorer bound to the record tables it resolves ids against.
pub struct Matcher<'a> {
    spec: MatcherSpec,
    companies: HashMap<&'a RecordId, &'a CompanyRecord>,
    securities: HashMap<&'a RecordId, &'a SecurityRecord>,
    /// Identifier values of all securities issued by each company.
    issued: HashMap<&'a RecordId, BTreeSet<(IdScheme, &'a str)>>,
    names: HashMap<&'a RecordId, BTreeSet<String>>,
}

impl<'a> Matcher<'a> {
    pub fn new(
        spec: MatcherSpec,
        companies: &'a [CompanyRecord],
        securities: &'a [SecurityRecord],
    ) -> Result<Self, MatcherError> {
        if let MatcherSpec::NameJaccard { threshold } = spec {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(MatcherError::InvalidThreshold(threshold));
            }
        }
        let mut issued: HashMap<&RecordId, BTreeSet<(IdScheme, &str)>> = HashMap::new();
        for s in securities {
            issued.entry(&s.issuer_id).or_default().extend(s.identifiers.iter());
        }
        let names = companies
            .par_iter()
            .map(|c| (&c.id, text::token_set(&c.name)))
            .chain(securities.par_iter().map(|s| (&s.id, text::token_set(&s.name))))
            .collect();
        Ok(Matcher {
            spec,
            companies: companies.iter().map(|c| (&c.id, c)).collect(),
            securities: securities.iter().map(|s| (&s.id, s)).collect(),
            issued,
            names,
        })
    }

    pub fn spec(&self) -> &MatcherSpec {
        &self.spec
    }

    pub fn lookup(&self, id: &RecordId) -> Result<RecordRef<'a>, MatcherError> {
        if let Some(c) = self.companies.get(id) {
            return Ok(RecordRef::Company(c));
        }
        self.securities.get(id).map(|s| RecordRef::Security(s)).ok_or_else(|| MatcherError::UnknownRecord(id.clone()))
    }

    fn name_jaccard(&self, a: RecordRef<'_>, b: RecordRef<'_>) -> f64 {
        match (self.names.get(a.id()), self.names.get(b.id())) {
            (Some(x), Some(y)) => text::jaccard(x, y),
            _ => text::jaccard(&text::token_set(a.name()), &text::token_set(b.name())),
        }
    }

    fn shares_identifier(&self, a: RecordRef<'_>, b: RecordRef<'_>) -> bool {
        match (a, b) {
            (RecordRef::Security(x), RecordRef::Security(y)) => x.identifiers.overlaps(&y.identifiers),
            (RecordRef::Company(x), RecordRef::Company(y)) => match (self.issued.get(&x.id), self.issued.get(&y.id)) {
                (Some(p), Some(q)) => p.intersection(q).next().is_some(),
                _ => false,
            },
            _ => false,
        }
    }

    /// Similarity in [0, 1]; symmetric in its arguments.
    pub fn score_pair(&self, a: RecordRef<'_>, b: RecordRef<'_>) -> Result<f64, MatcherError> {
        if matches!(
            (a, b),
            (RecordRef::Company(_), RecordRef::Security(_)) | (RecordRef::Security(_), RecordRef::Company(_))
        ) {
            return Err(MatcherError::MixedKinds(a.id().clone(), b.id().clone()));
        }
        match self.spec {
            MatcherSpec::ExactId if self.shares_identifier(a, b) => Ok(1.0),
            MatcherSpec::ExactId | MatcherSpec::NameJaccard { .. } => Ok(self.name_jaccard(a, b)),
            MatcherSpec::External { .. } => Err(MatcherError::ExternalNotScorable),
        }
    }

    /// One prediction per candidate, in candidate order.
    pub fn predict_all(&self, candidates: &[CandidatePair]) -> Result<Vec<Prediction>, MatcherError> {
        let threshold = self.spec.threshold();
        candidates
            .par_iter()
            .map(|c| {
                let a = self.lookup(c.pair.first())?;
                let b = self.lookup(c.pair.second())?;
                let score = self.score_pair(a, b)?;
                let label = if score >= threshold { MatchLabel::Match } else { MatchLabel::NoMatch };
                Ok(Prediction { pair: c.pair.clone(), label, score, provenance: c.provenance })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedPredictions {
    /// Candidate order first, then rows outside the candidate set sorted by pair.
    pub predictions: Vec<Prediction>,
    /// Candidates absent from the file, defaulted to no-match with score 0.
    pub defaulted: usize,
    /// Rows whose pair is not a candidate; kept with unknown provenance.
    pub unknown_provenance: usize,
    /// Rows repeating an earlier pair; the last occurrence wins.
    pub duplicates: usize,
}

/// Joins predictions read from CSV (`id_a, id_b, score[, label]`) to the
/// candidate set. An explicit label wins over the score; score-only rows
/// are labeled match at [`EXTERNAL_SCORE_THRESHOLD`] or above.
pub fn import_predictions<R: Read>(
    reader: R,
    candidates: &[CandidatePair],
) -> Result<ImportedPredictions, MatcherError> {
    let rows = io::parse_prediction_rows(reader)?;
    let mut by_pair: BTreeMap<RecordPair, (f64, MatchLabel)> = BTreeMap::new();
    let mut duplicates = 0;
    for row in rows {
        let label = row.label.unwrap_or(match row.score {
            Some(s) if s >= EXTERNAL_SCORE_THRESHOLD => MatchLabel::Match,
            _ => MatchLabel::NoMatch,
        });
        let score = row.score.unwrap_or(if label.is_match() { 1.0 } else { 0.0 });
        if by_pair.insert(row.pair, (score, label)).is_some() {
            duplicates += 1;
        }
    }
    let mut predictions = Vec::with_capacity(candidates.len());
    let mut defaulted = 0;
    for c in candidates {
        match by_pair.remove(&c.pair) {
            Some((score, label)) => {
                predictions.push(Prediction { pair: c.pair.clone(), label, score, provenance: c.provenance })
            }
            None => {
                defaulted += 1;
                predictions.push(Prediction {
                    pair: c.pair.clone(),
                    label: MatchLabel::NoMatch,
                    score: 0.0,
                    provenance: c.provenance,
                });
            }
        }
    }
    let unknown_provenance = by_pair.len();
    predictions.extend(by_pair.into_iter().map(|(pair, (score, label))| Prediction {
        pair,
        label,
        score,
        provenance: Provenance::UNKNOWN,
    }));
    if defaulted > 0 {
        log::warn!("{defaulted} candidates missing from predictions file, defaulted to no_match");
    }
    Ok(ImportedPredictions { predictions, defaulted, unknown_provenance, duplicates })
}
