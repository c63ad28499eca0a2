//! File formats for stage handoff: record tables, groups, splits, labeled
//! pairs, candidates, predictions, audit logs and metric reports.
//!
//! Every `parse_*` function takes a reader and never panics on malformed
//! input; every `write_*` function produces output its parser accepts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocking::{BlockingKind, CandidatePair, Provenance};
use crate::cleanup::{CleanupPhase, RemovedEdge};
use crate::datagen::{GroupProvenance, LabeledPair, Split, SplitAssignment};
use crate::matcher::Prediction;
use crate::model::{
    CompanyRecord, DataSourceId, EntityGroup, GroundTruth, GroupKind, IdScheme, Identifiers, MatchLabel, RecordId,
    RecordPair, SecurityRecord, SecurityType,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

impl FormatError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => FormatError::Write(io),
            other => FormatError::parse(line, format!("{other:?}")),
        }
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path).map(BufReader::new).map_err(|cause| FormatError::Io { path: path.to_path_buf(), cause })
}

pub fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path).map(BufWriter::new).map_err(|cause| FormatError::Io { path: path.to_path_buf(), cause })
}

/// Column positions resolved from a header row.
pub(crate) struct Columns {
    positions: BTreeMap<&'static str, usize>,
}

impl Columns {
    pub(crate) fn resolve(
        headers: &csv::StringRecord,
        required: &[&'static str],
        optional: &[&'static str],
    ) -> Result<Self, FormatError> {
        let mut positions = BTreeMap::new();
        for name in required.iter().chain(optional) {
            if let Some(pos) =
                headers.iter().position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            {
                positions.insert(*name, pos);
            }
        }
        for name in required {
            if !positions.contains_key(name) {
                return Err(FormatError::MissingColumn(name));
            }
        }
        Ok(Columns { positions })
    }

    pub(crate) fn has(&self, name: &str) -> bool {
        self.positions.contains_key(name)
    }

    /// Cell value, `None` for an absent column or an empty cell.
    pub(crate) fn get<'r>(&self, row: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.positions.get(name).and_then(|&i| row.get(i)).filter(|v| !v.is_empty())
    }

    pub(crate) fn require<'r>(
        &self,
        row: &'r csv::StringRecord,
        name: &str,
        line: u64,
    ) -> Result<&'r str, FormatError> {
        self.get(row, name).ok_or_else(|| FormatError::parse(line, format!("empty {name}")))
    }
}

pub(crate) fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(reader)
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(writer)
}

fn line_of(row: &csv::StringRecord) -> u64 {
    row.position().map(|p| p.line()).unwrap_or(0)
}

fn pair_of(a: &str, b: &str, line: u64) -> Result<RecordPair, FormatError> {
    RecordPair::new(a.into(), b.into()).map_err(|e| FormatError::parse(line, e.to_string()))
}

fn opt(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("")
}

fn source_of(v: &str, line: u64) -> Result<DataSourceId, FormatError> {
    v.trim().parse::<u16>().map(DataSourceId).map_err(|_| FormatError::parse(line, format!("bad source {v:?}")))
}

// ---- companies.csv ---------------------------------------------------------

const COMPANY_COLUMNS: [&str; 7] = ["id", "source", "name", "city", "region", "country_code", "description"];

pub fn parse_companies<R: Read>(reader: R) -> Result<Vec<CompanyRecord>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["id", "source", "name"], &COMPANY_COLUMNS[3..])?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let id = RecordId::new(cols.require(&row, "id", line)?);
        if !seen.insert(id.clone()) {
            return Err(FormatError::parse(line, format!("duplicate record id {id}")));
        }
        out.push(CompanyRecord {
            id,
            source: source_of(cols.require(&row, "source", line)?, line)?,
            name: cols.require(&row, "name", line)?.to_string(),
            city: cols.get(&row, "city").map(str::to_string),
            region: cols.get(&row, "region").map(str::to_string),
            country_code: cols.get(&row, "country_code").map(str::to_string),
            description: cols.get(&row, "description").map(str::to_string),
        });
    }
    Ok(out)
}

pub fn write_companies<W: Write>(writer: W, companies: &[CompanyRecord]) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(COMPANY_COLUMNS)?;
    for c in companies {
        w.write_record([
            c.id.as_str(),
            &c.source.to_string(),
            &c.name,
            opt(&c.city),
            opt(&c.region),
            opt(&c.country_code),
            opt(&c.description),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---- securities.csv --------------------------------------------------------

const SECURITY_COLUMNS: [&str; 9] =
    ["id", "source", "issuer_id", "name", "security_type", "isin", "cusip", "valor", "sedol"];

pub fn parse_securities<R: Read>(reader: R) -> Result<Vec<SecurityRecord>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &SECURITY_COLUMNS[..5], &SECURITY_COLUMNS[5..])?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let id = RecordId::new(cols.require(&row, "id", line)?);
        if !seen.insert(id.clone()) {
            return Err(FormatError::parse(line, format!("duplicate record id {id}")));
        }
        let mut identifiers = Identifiers::new();
        for scheme in IdScheme::ALL {
            if let Some(v) = cols.get(&row, scheme.column()) {
                identifiers.insert(scheme, v).map_err(|e| FormatError::parse(line, e.to_string()))?;
            }
        }
        let security_type: SecurityType = cols
            .require(&row, "security_type", line)?
            .parse()
            .map_err(|e: crate::model::ModelError| FormatError::parse(line, e.to_string()))?;
        out.push(SecurityRecord {
            id,
            source: source_of(cols.require(&row, "source", line)?, line)?,
            issuer_id: RecordId::new(cols.require(&row, "issuer_id", line)?),
            name: cols.require(&row, "name", line)?.to_string(),
            security_type,
            identifiers,
        });
    }
    Ok(out)
}

pub fn write_securities<W: Write>(writer: W, securities: &[SecurityRecord]) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(SECURITY_COLUMNS)?;
    for s in securities {
        let ids = IdScheme::ALL.map(|scheme| s.identifiers.get(scheme).unwrap_or(""));
        w.write_record([
            s.id.as_str(),
            &s.source.to_string(),
            s.issuer_id.as_str(),
            &s.name,
            s.security_type.as_str(),
            ids[0],
            ids[1],
            ids[2],
            ids[3],
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---- groups (group_id, record_id) ------------------------------------------

/// Groups in file order of first appearance; members sorted.
pub fn parse_groups<R: Read>(reader: R) -> Result<Vec<(String, Vec<RecordId>)>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["group_id", "record_id"], &[])?;
    let mut order: Vec<String> = Vec::new();
    let mut members: BTreeMap<String, BTreeSet<RecordId>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let gid = cols.require(&row, "group_id", line)?;
        let rid = RecordId::new(cols.require(&row, "record_id", line)?);
        if !seen.insert(rid.clone()) {
            return Err(FormatError::parse(line, format!("record {rid} appears in more than one group")));
        }
        if !members.contains_key(gid) {
            order.push(gid.to_string());
        }
        members.entry(gid.to_string()).or_default().insert(rid);
    }
    Ok(order
        .into_iter()
        .map(|g| {
            let m = members.remove(&g).unwrap_or_default().into_iter().collect();
            (g, m)
        })
        .collect())
}

pub fn parse_ground_truth<R: Read>(reader: R, kind: GroupKind) -> Result<GroundTruth, FormatError> {
    let groups = parse_groups(reader)?.into_iter().map(|(gid, members)| EntityGroup::new(gid, kind, members)).collect();
    GroundTruth::new(groups).map_err(|e| FormatError::parse(0, e.to_string()))
}

pub fn write_groups<'a, W: Write>(
    writer: W,
    groups: impl IntoIterator<Item = (&'a str, &'a [RecordId])>,
) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(["group_id", "record_id"])?;
    for (gid, members) in groups {
        for m in members {
            w.write_record([gid, m.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ground_truth<W: Write>(writer: W, truth: &GroundTruth) -> Result<(), FormatError> {
    let groups: Vec<(String, Vec<RecordId>)> =
        truth.groups().iter().map(|g| (g.group_id.clone(), g.members.iter().cloned().collect())).collect();
    write_groups(writer, groups.iter().map(|(g, m)| (g.as_str(), m.as_slice())))
}

/// Output groups named by their smallest member id, sorted by that id.
pub fn write_components<W: Write>(writer: W, components: &[Vec<RecordId>]) -> Result<(), FormatError> {
    let mut named: Vec<(&RecordId, &[RecordId])> =
        components.iter().filter_map(|c| c.iter().min().map(|m| (m, c.as_slice()))).collect();
    named.sort_by(|a, b| a.0.cmp(b.0));
    let mut w = csv_writer(writer);
    w.write_record(["group_id", "record_id"])?;
    for (gid, members) in named {
        let mut sorted: Vec<&RecordId> = members.iter().collect();
        sorted.sort();
        for m in sorted {
            w.write_record([gid.as_str(), m.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---- splits.csv ------------------------------------------------------------

pub fn parse_splits<R: Read>(reader: R) -> Result<SplitAssignment, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["group_id", "split"], &[])?;
    let mut out = SplitAssignment::default();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let gid = cols.require(&row, "group_id", line)?;
        let split: Split =
            cols.require(&row, "split", line)?.parse().map_err(|e: String| FormatError::parse(line, e))?;
        if out.assign(gid.to_string(), split).is_some() {
            return Err(FormatError::parse(line, format!("group {gid} assigned twice")));
        }
    }
    Ok(out)
}

pub fn write_splits<W: Write>(writer: W, splits: &SplitAssignment) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(["group_id", "split"])?;
    for (gid, split) in splits.iter() {
        w.write_record([gid, split.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

// ---- pairs_{split}.csv -----------------------------------------------------

pub fn parse_labeled_pairs<R: Read>(reader: R) -> Result<Vec<LabeledPair>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["id_a", "id_b", "label"], &[])?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let pair = pair_of(cols.require(&row, "id_a", line)?, cols.require(&row, "id_b", line)?, line)?;
        let label: MatchLabel = cols
            .require(&row, "label", line)?
            .parse()
            .map_err(|e: crate::model::ModelError| FormatError::parse(line, e.to_string()))?;
        out.push(LabeledPair { pair, label });
    }
    Ok(out)
}

pub fn write_labeled_pairs<W: Write>(writer: W, pairs: &[LabeledPair]) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(["id_a", "id_b", "label"])?;
    for p in pairs {
        w.write_record([p.pair.first().as_str(), p.pair.second().as_str(), p.label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

// ---- candidates.csv --------------------------------------------------------

pub fn parse_candidates<R: Read>(reader: R) -> Result<Vec<CandidatePair>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["id_a", "id_b", "provenance"], &[])?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let pair = pair_of(cols.require(&row, "id_a", line)?, cols.require(&row, "id_b", line)?, line)?;
        let provenance: Provenance =
            cols.require(&row, "provenance", line)?.parse().map_err(|e: String| FormatError::parse(line, e))?;
        if provenance.is_empty() {
            return Err(FormatError::parse(line, "candidate without provenance"));
        }
        out.push(CandidatePair { pair, provenance });
    }
    Ok(out)
}

pub fn write_candidates<W: Write>(writer: W, candidates: &[CandidatePair]) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(["id_a", "id_b", "provenance"])?;
    for c in candidates {
        w.write_record([c.pair.first().as_str(), c.pair.second().as_str(), &c.provenance.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ---- predictions.csv -------------------------------------------------------

/// One row of a predictions file before it is joined to candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub line: u64,
    pub pair: RecordPair,
    pub score: Option<f64>,
    pub label: Option<MatchLabel>,
}

pub fn parse_prediction_rows<R: Read>(reader: R) -> Result<Vec<PredictionRow>, FormatError> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["id_a", "id_b"], &["score", "label"])?;
    if !cols.has("score") && !cols.has("label") {
        return Err(FormatError::MissingColumn("score"));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let pair = pair_of(cols.require(&row, "id_a", line)?, cols.require(&row, "id_b", line)?, line)?;
        let score = match cols.get(&row, "score") {
            None => None,
            Some(s) => {
                let v: f64 = s.trim().parse().map_err(|_| FormatError::parse(line, format!("bad score {s:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(FormatError::parse(line, format!("score {v} outside [0, 1]")));
                }
                Some(v)
            }
        };
        let label = match cols.get(&row, "label") {
            None => None,
            Some(l) => Some(l.parse().map_err(|e: crate::model::ModelError| FormatError::parse(line, e.to_string()))?),
        };
        if score.is_none() && label.is_none() {
            return Err(FormatError::parse(line, "row has neither score nor label"));
        }
        out.push(PredictionRow { line, pair, score, label });
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(writer: W, predictions: &[Prediction]) -> Result<(), FormatError> {
    let mut w = csv_writer(writer);
    w.write_record(["id_a", "id_b", "score", "label"])?;
    for p in predictions {
        w.write_record([p.pair.first().as_str(), p.pair.second().as_str(), &p.score.to_string(), p.label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

// ---- JSON lines ------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct AuditLine {
    id_a: RecordId,
    id_b: RecordId,
    phase: CleanupPhase,
}

pub fn write_audit_log<W: Write>(mut writer: W, removed: &[RemovedEdge]) -> Result<(), FormatError> {
    for r in removed {
        let line = AuditLine { id_a: r.pair.first().clone(), id_b: r.pair.second().clone(), phase: r.phase };
        serde_json::to_writer(&mut writer, &line).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn parse_audit_log<R: Read>(reader: R) -> Result<Vec<RemovedEdge>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in std::io::BufRead::lines(BufReader::new(reader)).enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i as u64 + 1;
        let a: AuditLine = serde_json::from_str(&line).map_err(|e| FormatError::parse(lineno, e.to_string()))?;
        out.push(RemovedEdge { pair: pair_of(a.id_a.as_str(), a.id_b.as_str(), lineno)?, phase: a.phase });
    }
    Ok(out)
}

pub fn write_provenance_log<W: Write>(mut writer: W, log: &[GroupProvenance]) -> Result<(), FormatError> {
    for g in log {
        serde_json::to_writer(&mut writer, g).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn parse_provenance_log<R: Read>(reader: R) -> Result<Vec<GroupProvenance>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in std::io::BufRead::lines(BufReader::new(reader)).enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| FormatError::parse(i as u64 + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Parses `IdOverlap+TokenOverlap` style lists.
pub fn parse_blocking_list(s: &str) -> Result<Vec<BlockingKind>, String> {
    s.split(['+', ',']).map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
}
