//! Shared domain types: record identifiers, company and security records,
//! canonical record pairs and the ground-truth group partition.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("record {0} appears in more than one group")]
    PartitionViolation(RecordId),
    #[error("group {0} is empty")]
    EmptyGroup(String),
    #[error("group {0} mixes company and security records")]
    MixedGroupKind(String),
    #[error("unknown record id {0}")]
    UnknownRecord(RecordId),
    #[error("a pair needs two distinct records, got {0} twice")]
    SelfPair(RecordId),
    #[error("invalid {scheme} identifier {value:?}")]
    InvalidIdentifier { scheme: IdScheme, value: String },
    #[error("unknown {what} {value:?}")]
    UnknownVariant { what: &'static str, value: String },
}

/// Opaque record identifier, unique across a dataset.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(Arc<str>);

impl RecordId {
    pub fn new(id: impl AsRef<str>) -> Self {
        RecordId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl Borrow<str> for RecordId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RecordId {
    fn from(s: &str) -> Self {
        RecordId::new(s)
    }
}

impl From<String> for RecordId {
    fn from(s: String) -> Self {
        RecordId(Arc::from(s))
    }
}

/// Zero-based index of the data source a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataSourceId(pub u16);

impl fmt::Display for DataSourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An unordered pair of distinct records, stored with the smaller id first.
///
/// `(a, b)` and `(b, a)` construct the same value, so pairs can key maps and
/// sets without producing duplicate edges.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordPair {
    lo: RecordId,
    hi: RecordId,
}

impl RecordPair {
    pub fn new(x: RecordId, y: RecordId) -> Result<Self, ModelError> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(RecordPair { lo: x, hi: y }),
            std::cmp::Ordering::Greater => Ok(RecordPair { lo: y, hi: x }),
            std::cmp::Ordering::Equal => Err(ModelError::SelfPair(x)),
        }
    }

    pub fn first(&self) -> &RecordId {
        &self.lo
    }

    pub fn second(&self) -> &RecordId {
        &self.hi
    }

    pub fn contains(&self, id: &RecordId) -> bool {
        &self.lo == id || &self.hi == id
    }
}

impl fmt::Debug for RecordPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.lo, self.hi)
    }
}

impl fmt::Display for RecordPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Security identifier standards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdScheme {
    Isin,
    Cusip,
    Valor,
    Sedol,
}

impl IdScheme {
    pub const ALL: [IdScheme; 4] = [IdScheme::Isin, IdScheme::Cusip, IdScheme::Valor, IdScheme::Sedol];

    /// Lower-case column name used in the securities table.
    pub fn column(self) -> &'static str {
        match self {
            IdScheme::Isin => "isin",
            IdScheme::Cusip => "cusip",
            IdScheme::Valor => "valor",
            IdScheme::Sedol => "sedol",
        }
    }

    /// Shape check only; check digits are not verified.
    pub fn is_valid(self, value: &str) -> bool {
        let alnum = |len: usize| value.len() == len && value.bytes().all(|b| b.is_ascii_alphanumeric());
        match self {
            IdScheme::Isin => alnum(12),
            IdScheme::Cusip => alnum(9),
            IdScheme::Sedol => alnum(7),
            IdScheme::Valor => !value.is_empty() && value.bytes().all(|b| b.is_ascii_digit()),
        }
    }
}

impl fmt::Display for IdScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdScheme::Isin => "ISIN",
            IdScheme::Cusip => "CUSIP",
            IdScheme::Valor => "VALOR",
            IdScheme::Sedol => "SEDOL",
        })
    }
}

/// Identifier values of one security record, at most one value per scheme.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Identifiers(BTreeMap<IdScheme, String>);

impl Identifiers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, scheme: IdScheme, value: impl Into<String>) -> Result<(), ModelError> {
        let value = value.into();
        if !scheme.is_valid(&value) {
            return Err(ModelError::InvalidIdentifier { scheme, value });
        }
        self.0.insert(scheme, value);
        Ok(())
    }

    pub fn get(&self, scheme: IdScheme) -> Option<&str> {
        self.0.get(&scheme).map(String::as_str)
    }

    pub fn remove(&mut self, scheme: IdScheme) -> Option<String> {
        self.0.remove(&scheme)
    }

    pub fn iter(&self) -> impl Iterator<Item = (IdScheme, &str)> + '_ {
        self.0.iter().map(|(s, v)| (*s, v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True if some scheme carries the same value in both sets.
    pub fn overlaps(&self, other: &Identifiers) -> bool {
        self.0.iter().any(|(s, v)| other.0.get(s) == Some(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub id: RecordId,
    pub source: DataSourceId,
    pub name: String,
    pub city: Option<String>,
    pub region: Option<String>,
    pub country_code: Option<String>,
    pub description: Option<String>,
}

impl CompanyRecord {
    /// Textual attributes in column order, skipping absent ones.
    pub fn text_fields(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(
            [&self.city, &self.region, &self.country_code, &self.description].into_iter().flatten().map(String::as_str),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityType {
    Equity,
    Right,
    Bond,
    Unit,
    Other,
}

impl SecurityType {
    pub fn as_str(self) -> &'static str {
        match self {
            SecurityType::Equity => "equity",
            SecurityType::Right => "right",
            SecurityType::Bond => "bond",
            SecurityType::Unit => "unit",
            SecurityType::Other => "other",
        }
    }
}

impl fmt::Display for SecurityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SecurityType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equity" => Ok(SecurityType::Equity),
            "right" => Ok(SecurityType::Right),
            "bond" => Ok(SecurityType::Bond),
            "unit" => Ok(SecurityType::Unit),
            "other" => Ok(SecurityType::Other),
            _ => Err(ModelError::UnknownVariant { what: "security type", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityRecord {
    pub id: RecordId,
    pub source: DataSourceId,
    pub issuer_id: RecordId,
    pub name: String,
    pub security_type: SecurityType,
    pub identifiers: Identifiers,
}

/// Binary pairwise decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLabel {
    Match,
    NoMatch,
}

impl MatchLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchLabel::Match => "match",
            MatchLabel::NoMatch => "no_match",
        }
    }

    pub fn is_match(self) -> bool {
        self == MatchLabel::Match
    }
}

impl FromStr for MatchLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "match" | "1" | "true" => Ok(MatchLabel::Match),
            "no_match" | "nomatch" | "0" | "false" => Ok(MatchLabel::NoMatch),
            _ => Err(ModelError::UnknownVariant { what: "label", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Company,
    Security,
}

/// Ground-truth set of records describing one real-world entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityGroup {
    pub group_id: String,
    pub members: BTreeSet<RecordId>,
    pub kind: GroupKind,
}

impl EntityGroup {
    pub fn new(group_id: impl Into<String>, kind: GroupKind, members: impl IntoIterator<Item = RecordId>) -> Self {
        EntityGroup { group_id: group_id.into(), members: members.into_iter().collect(), kind }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A validated partition of records into entity groups.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    groups: Vec<EntityGroup>,
    index: HashMap<RecordId, usize>,
}

impl GroundTruth {
    pub fn new(groups: Vec<EntityGroup>) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(groups.iter().map(EntityGroup::len).sum());
        for (gi, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(ModelError::EmptyGroup(group.group_id.clone()));
            }
            for id in &group.members {
                if index.insert(id.clone(), gi).is_some() {
                    return Err(ModelError::PartitionViolation(id.clone()));
                }
            }
        }
        Ok(GroundTruth { groups, index })
    }

    /// Like [`GroundTruth::new`], additionally rejecting groups whose members
    /// are of another kind than the group declares.
    pub fn new_typed(
        groups: Vec<EntityGroup>,
        kind_of: impl Fn(&RecordId) -> Option<GroupKind>,
    ) -> Result<Self, ModelError> {
        for g in &groups {
            for id in &g.members {
                match kind_of(id) {
                    None => return Err(ModelError::UnknownRecord(id.clone())),
                    Some(k) if k != g.kind => return Err(ModelError::MixedGroupKind(g.group_id.clone())),
                    Some(_) => {}
                }
            }
        }
        Self::new(groups)
    }

    pub fn groups(&self) -> &[EntityGroup] {
        &self.groups
    }

    pub fn num_records(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, id: &RecordId) -> bool {
        self.index.contains_key(id)
    }

    /// Index into [`GroundTruth::groups`] of the group holding `id`.
    pub fn group_index(&self, id: &RecordId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn group_of(&self, id: &RecordId) -> Option<&EntityGroup> {
        self.group_index(id).map(|gi| &self.groups[gi])
    }

    pub fn record_ids(&self) -> impl Iterator<Item = &RecordId> + '_ {
        self.groups.iter().flat_map(|g| g.members.iter())
    }

    pub fn true_pair_count(&self) -> u64 {
        self.groups.iter().map(|g| choose2(g.len() as u64)).sum()
    }

    /// All unordered within-group pairs.
    pub fn true_pairs(&self) -> BTreeSet<RecordPair> {
        let mut out = BTreeSet::new();
        for g in &self.groups {
            let members: Vec<&RecordId> = g.members.iter().collect();
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    out.insert(RecordPair { lo: (*a).clone(), hi: (*b).clone() });
                }
            }
        }
        out
    }

    pub fn is_true_match(&self, pair: &RecordPair) -> Result<bool, ModelError> {
        let a = self.group_index(pair.first()).ok_or_else(|| ModelError::UnknownRecord(pair.first().clone()))?;
        let b = self.group_index(pair.second()).ok_or_else(|| ModelError::UnknownRecord(pair.second().clone()))?;
        Ok(a == b)
    }

    /// Sub-partition holding only the groups accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&EntityGroup) -> bool) -> GroundTruth {
        let groups: Vec<EntityGroup> = self.groups.iter().filter(|g| keep(g)).cloned().collect();
        GroundTruth::new(groups).expect("subset of a partition is a partition")
    }
}

pub(crate) fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}
