//! Candidate pair generation: identifier overlap, top-n token overlap and
//! issuer match, plus provenance-preserving merging of their outputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CompanyRecord, DataSourceId, IdScheme, RecordId, RecordPair, SecurityRecord};
use crate::text;

/// Default number of partners kept per record by token overlap.
pub const DEFAULT_TOKEN_TOP_N: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockingError {
    #[error("security {security} references unknown issuer {issuer}")]
    DanglingIssuer { security: RecordId, issuer: RecordId },
    #[error("token overlap needs n >= 1")]
    ZeroTopN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockingKind {
    IdOverlap,
    TokenOverlap,
    IssuerMatch,
}

impl BlockingKind {
    pub const ALL: [BlockingKind; 3] = [BlockingKind::IdOverlap, BlockingKind::TokenOverlap, BlockingKind::IssuerMatch];

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for BlockingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for BlockingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "idoverlap" => Ok(BlockingKind::IdOverlap),
            "tokenoverlap" => Ok(BlockingKind::TokenOverlap),
            "issuermatch" => Ok(BlockingKind::IssuerMatch),
            _ => Err(format!("unknown blocking {s:?}")),
        }
    }
}

/// Set of blockings that produced a pair. The empty set marks pairs of
/// unknown origin (e.g. imported predictions outside the candidate set).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance(u8);

impl Provenance {
    pub const UNKNOWN: Provenance = Provenance(0);

    pub fn of(kind: BlockingKind) -> Self {
        Provenance(kind.bit())
    }

    pub fn with(self, kind: BlockingKind) -> Self {
        Provenance(self.0 | kind.bit())
    }

    pub fn union(self, other: Provenance) -> Self {
        Provenance(self.0 | other.0)
    }

    pub fn contains(self, kind: BlockingKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True if `kind` is the only blocking that produced the pair.
    pub fn is_only(self, kind: BlockingKind) -> bool {
        self.0 == kind.bit()
    }

    pub fn kinds(self) -> impl Iterator<Item = BlockingKind> {
        BlockingKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("unknown");
        }
        let parts: Vec<String> = self.kinds().map(|k| k.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl fmt::Debug for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("unknown") {
            return Ok(Provenance::UNKNOWN);
        }
        s.split('+').try_fold(Provenance::UNKNOWN, |p, part| Ok(p.with(part.parse()?)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidatePair {
    pub pair: RecordPair,
    pub provenance: Provenance,
}

impl CandidatePair {
    pub fn new(pair: RecordPair, kind: BlockingKind) -> Self {
        CandidatePair { pair, provenance: Provenance::of(kind) }
    }
}

/// Records that token overlap can index.
pub trait TextRecord: Sync {
    fn record_id(&self) -> &RecordId;
    fn source(&self) -> DataSourceId;
    fn text(&self) -> String;
}

impl TextRecord for CompanyRecord {
    fn record_id(&self) -> &RecordId {
        &self.id
    }

    fn source(&self) -> DataSourceId {
        self.source
    }

    fn text(&self) -> String {
        self.text_fields().collect::<Vec<_>>().join(" ")
    }
}

impl TextRecord for SecurityRecord {
    fn record_id(&self) -> &RecordId {
        &self.id
    }

    fn source(&self) -> DataSourceId {
        self.source
    }

    fn text(&self) -> String {
        self.name.clone()
    }
}

fn cross_source_pairs<'a>(
    members: &[(&'a RecordId, DataSourceId)],
    kind: BlockingKind,
    out: &mut BTreeSet<CandidateKey<'a>>,
) {
    for (i, (a, sa)) in members.iter().enumerate() {
        for (b, sb) in &members[i + 1..] {
            if sa != sb && a != b {
                out.insert(CandidateKey::new(a, b, kind));
            }
        }
    }
}

/// Borrowed canonical pair used while collecting, to avoid cloning ids.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct CandidateKey<'a> {
    lo: &'a RecordId,
    hi: &'a RecordId,
    kind: BlockingKind,
}

impl<'a> CandidateKey<'a> {
    fn new(a: &'a RecordId, b: &'a RecordId, kind: BlockingKind) -> Self {
        if a < b {
            CandidateKey { lo: a, hi: b, kind }
        } else {
            CandidateKey { lo: b, hi: a, kind }
        }
    }

    fn into_candidate(self) -> CandidatePair {
        CandidatePair::new(RecordPair::new(self.lo.clone(), self.hi.clone()).expect("distinct ids"), self.kind)
    }
}

/// Cross-source securities sharing a value under the same scheme.
pub fn id_overlap_securities(securities: &[SecurityRecord]) -> Vec<CandidatePair> {
    let mut buckets: HashMap<(IdScheme, &str), Vec<(&RecordId, DataSourceId)>> = HashMap::new();
    for s in securities {
        for (scheme, value) in s.identifiers.iter() {
            buckets.entry((scheme, value)).or_default().push((&s.id, s.source));
        }
    }
    let mut out = BTreeSet::new();
    for members in buckets.values() {
        cross_source_pairs(members, BlockingKind::IdOverlap, &mut out);
    }
    out.into_iter().map(CandidateKey::into_candidate).collect()
}

/// Cross-source companies whose issued securities share a value under the
/// same scheme.
pub fn id_overlap_companies(
    companies: &[CompanyRecord],
    securities: &[SecurityRecord],
) -> Result<Vec<CandidatePair>, BlockingError> {
    let by_id: HashMap<&RecordId, &CompanyRecord> = companies.iter().map(|c| (&c.id, c)).collect();
    let mut buckets: HashMap<(IdScheme, &str), BTreeSet<(&RecordId, DataSourceId)>> = HashMap::new();
    for s in securities {
        let issuer = by_id
            .get(&s.issuer_id)
            .ok_or_else(|| BlockingError::DanglingIssuer { security: s.id.clone(), issuer: s.issuer_id.clone() })?;
        for (scheme, value) in s.identifiers.iter() {
            buckets.entry((scheme, value)).or_default().insert((&issuer.id, issuer.source));
        }
    }
    let mut out = BTreeSet::new();
    for members in buckets.values() {
        let members: Vec<_> = members.iter().copied().collect();
        cross_source_pairs(&members, BlockingKind::IdOverlap, &mut out);
    }
    Ok(out.into_iter().map(CandidateKey::into_candidate).collect())
}

/// Inverted index from normalized tokens to the records containing them.
///
/// Records are numbered in ascending id order, so posting lists are sorted
/// by record id.
#[derive(Debug, Clone)]
pub struct TokenIndex {
    ids: Vec<RecordId>,
    sources: Vec<DataSourceId>,
    /// Token numbers per record, deduplicated.
    record_tokens: Vec<Vec<u32>>,
    postings: Vec<Vec<u32>>,
    vocabulary: HashMap<String, u32>,
}

impl TokenIndex {
    pub fn build<R: TextRecord>(records: &[R]) -> Self {
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[a].record_id().cmp(records[b].record_id()));
        let tokenized: Vec<BTreeSet<String>> = order.par_iter().map(|&i| text::token_set(&records[i].text())).collect();

        let mut vocabulary: HashMap<String, u32> = HashMap::new();
        let mut postings: Vec<Vec<u32>> = Vec::new();
        let mut record_tokens = Vec::with_capacity(order.len());
        for (pos, tokens) in tokenized.into_iter().enumerate() {
            let mut ids = Vec::with_capacity(tokens.len());
            for tok in tokens {
                let next = postings.len() as u32;
                let t = *vocabulary.entry(tok).or_insert(next);
                if t == next {
                    postings.push(Vec::new());
                }
                postings[t as usize].push(pos as u32);
                ids.push(t);
            }
            record_tokens.push(ids);
        }
        TokenIndex {
            ids: order.iter().map(|&i| records[i].record_id().clone()).collect(),
            sources: order.iter().map(|&i| records[i].source()).collect(),
            record_tokens,
            postings,
            vocabulary,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Record ids containing `token` (already normalized), in id order.
    pub fn posting(&self, token: &str) -> Vec<&RecordId> {
        self.vocabulary
            .get(token)
            .map(|&t| self.postings[t as usize].iter().map(|&p| &self.ids[p as usize]).collect())
            .unwrap_or_default()
    }

    /// Top-`n` cross-source partners of record `pos` by shared token count,
    /// ties to the smaller id. `counts` must be all-zero on entry and is
    /// restored to all-zero on exit.
    fn top_partners(&self, pos: usize, n: usize, counts: &mut [u32], touched: &mut Vec<u32>) -> Vec<(u32, u32)> {
        let src = self.sources[pos];
        for &t in &self.record_tokens[pos] {
            for &other in &self.postings[t as usize] {
                if self.sources[other as usize] == src {
                    continue;
                }
                let c = &mut counts[other as usize];
                if *c == 0 {
                    touched.push(other);
                }
                *c += 1;
            }
        }
        let mut scored: Vec<(u32, u32)> = touched.iter().map(|&o| (o, counts[o as usize])).collect();
        for &o in touched.iter() {
            counts[o as usize] = 0;
        }
        touched.clear();
        let by_rank = |a: &(u32, u32), b: &(u32, u32)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
        if scored.len() > n {
            scored.select_nth_unstable_by(n - 1, by_rank);
            scored.truncate(n);
        }
        scored.sort_unstable_by(by_rank);
        scored
    }
}

/// Pairs every record with its `n` cross-source records of highest token
/// overlap (at least one shared token). A pair is kept if either endpoint
/// selected it.
pub fn token_overlap<R: TextRecord>(records: &[R], n: usize) -> Result<Vec<CandidatePair>, BlockingError> {
    if n == 0 {
        return Err(BlockingError::ZeroTopN);
    }
    let index = TokenIndex::build(records);
    Ok(token_overlap_indexed(&index, n))
}

pub fn token_overlap_indexed(index: &TokenIndex, n: usize) -> Vec<CandidatePair> {
    let size = index.len();
    let mut pairs: Vec<(u32, u32)> = (0..size)
        .into_par_iter()
        .map_init(
            || (vec![0u32; size], Vec::new()),
            |(counts, touched), pos| {
                let me = pos as u32;
                index
                    .top_partners(pos, n, counts, touched)
                    .into_iter()
                    .map(|(other, _)| (me.min(other), me.max(other)))
                    .collect::<Vec<_>>()
            },
        )
        .flatten_iter()
        .collect();
    pairs.par_sort_unstable();
    pairs.dedup();
    pairs
        .into_iter()
        .map(|(a, b)| {
            CandidatePair::new(
                RecordPair::new(index.ids[a as usize].clone(), index.ids[b as usize].clone()).expect("distinct"),
                BlockingKind::TokenOverlap,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuerMatchOutput {
    pub candidates: Vec<CandidatePair>,
    /// Securities whose issuer is in none of the supplied groups.
    pub skipped: usize,
}

/// Cross-source securities whose issuers were previously grouped together.
pub fn issuer_match(securities: &[SecurityRecord], company_groups: &[Vec<RecordId>]) -> IssuerMatchOutput {
    let group_of: HashMap<&RecordId, usize> =
        company_groups.iter().enumerate().flat_map(|(g, ids)| ids.iter().map(move |id| (id, g))).collect();
    let mut by_group: BTreeMap<usize, Vec<(&RecordId, DataSourceId)>> = BTreeMap::new();
    let mut skipped = 0;
    for s in securities {
        match group_of.get(&s.issuer_id) {
            Some(&g) => by_group.entry(g).or_default().push((&s.id, s.source)),
            None => skipped += 1,
        }
    }
    let mut out = BTreeSet::new();
    for members in by_group.values() {
        cross_source_pairs(members, BlockingKind::IssuerMatch, &mut out);
    }
    IssuerMatchOutput { candidates: out.into_iter().map(CandidateKey::into_candidate).collect(), skipped }
}

/// Deduplicates by canonical pair, unions provenance, sorts by pair.
pub fn merge_candidates<I>(lists: I) -> Vec<CandidatePair>
where
    I: IntoIterator<Item = Vec<CandidatePair>>,
{
    let mut merged: BTreeMap<RecordPair, Provenance> = BTreeMap::new();
    for list in lists {
        for c in list {
            let p = merged.entry(c.pair).or_default();
            *p = p.union(c.provenance);
        }
    }
    merged.into_iter().map(|(pair, provenance)| CandidatePair { pair, provenance }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Identifiers, SecurityType};

    fn company(id: &str, source: u16, name: &str) -> CompanyRecord {
        CompanyRecord {
            id: id.into(),
            source: DataSourceId(source),
            name: name.to_string(),
            city: None,
            region: None,
            country_code: None,
            description: None,
        }
    }

    fn security(id: &str, source: u16, issuer: &str, ids: &[(IdScheme, &str)]) -> SecurityRecord {
        let mut identifiers = Identifiers::new();
        for (s, v) in ids {
            identifiers.insert(*s, *v).unwrap();
        }
        SecurityRecord {
            id: id.into(),
            source: DataSourceId(source),
            issuer_id: issuer.into(),
            name: format!("{issuer} stock"),
            security_type: SecurityType::Equity,
            identifiers,
        }
    }

    fn pair(a: &str, b: &str) -> RecordPair {
        RecordPair::new(a.into(), b.into()).unwrap()
    }

    const ISIN_A: &str = "US0000000001";
    const ISIN_B: &str = "US0000000002";

    #[test]
    fn shared_isin_pairs_securities() {
        let s = vec![
            security("12", 1, "c1", &[(IdScheme::Isin, ISIN_A)]),
            security("31", 3, "c3", &[(IdScheme::Isin, ISIN_A)]),
        ];
        let out = id_overlap_securities(&s);
        assert_eq!(out, vec![CandidatePair::new(pair("12", "31"), BlockingKind::IdOverlap)]);
    }

    #[test]
    fn same_source_never_paired() {
        let s = vec![
            security("a", 1, "c1", &[(IdScheme::Isin, ISIN_A)]),
            security("b", 1, "c2", &[(IdScheme::Isin, ISIN_A)]),
        ];
        assert!(id_overlap_securities(&s).is_empty());
    }

    #[test]
    fn distinct_isins_no_pairs() {
        let s: Vec<_> = (0..4)
            .map(|i| security(&format!("s{i}"), i, "c", &[(IdScheme::Isin, &format!("US000000000{i}"))]))
            .collect();
        assert!(id_overlap_securities(&s).is_empty());
    }

    #[test]
    fn companies_paired_through_securities() {
        let c = vec![company("12", 1, "CrowdStrike"), company("31", 3, "Crowdstrike Inc"), company("40", 4, "Lone")];
        let s = vec![
            security("s1", 1, "12", &[(IdScheme::Isin, ISIN_A)]),
            security("s2", 3, "31", &[(IdScheme::Isin, ISIN_A), (IdScheme::Cusip, "123456789")]),
        ];
        let out = id_overlap_companies(&c, &s).unwrap();
        assert_eq!(out.iter().map(|c| c.pair.clone()).collect::<Vec<_>>(), vec![pair("12", "31")]);
    }

    #[test]
    fn identifier_equality_is_scheme_scoped() {
        let c = vec![company("c1", 0, "A"), company("c2", 1, "B")];
        let s = vec![
            security("s1", 0, "c1", &[(IdScheme::Cusip, "123456789")]),
            security("s2", 1, "c2", &[(IdScheme::Valor, "123456789")]),
        ];
        assert!(id_overlap_companies(&c, &s).unwrap().is_empty());
    }

    #[test]
    fn dangling_issuer_rejected() {
        let c = vec![company("c1", 0, "A")];
        let s = vec![security("s1", 0, "ghost", &[(IdScheme::Isin, ISIN_B)])];
        assert_eq!(
            id_overlap_companies(&c, &s),
            Err(BlockingError::DanglingIssuer { security: "s1".into(), issuer: "ghost".into() })
        );
    }

    #[test]
    fn token_overlap_hand_example() {
        let c = vec![
            company("r1", 1, "crowdstrike holdings"),
            company("r2", 2, "crowdstrike holdings inc"),
            company("r3", 3, "acme"),
        ];
        let out = token_overlap(&c, 1).unwrap();
        assert_eq!(out, vec![CandidatePair::new(pair("r1", "r2"), BlockingKind::TokenOverlap)]);
        assert_eq!(token_overlap(&c, 0), Err(BlockingError::ZeroTopN));
    }

    #[test]
    fn token_ties_prefer_smaller_id() {
        let c = vec![
            company("b", 1, "alpha"),
            company("a", 2, "alpha"),
            company("c", 3, "alpha"),
            company("z", 2, "alpha beta"),
        ];
        // "z" sees b and c tied at one shared token ("a" shares its source) and keeps b.
        // "c" likewise keeps a, so (c, z) is never selected from either side.
        let out = token_overlap(&c, 1).unwrap();
        assert!(out.iter().any(|p| p.pair == pair("b", "z")));
        assert!(!out.iter().any(|p| p.pair == pair("c", "z")));
    }

    #[test]
    fn index_postings_sorted() {
        let c = vec![company("b", 1, "alpha"), company("a", 2, "alpha beta")];
        let idx = TokenIndex::build(&c);
        assert_eq!(idx.posting("alpha"), vec![&RecordId::from("a"), &RecordId::from("b")]);
        assert!(idx.posting("gamma").is_empty());
    }

    #[test]
    fn issuer_match_pairs() {
        let s = vec![
            security("s1", 0, "c1", &[]),
            security("s2", 1, "c2", &[]),
            security("s3", 2, "c3", &[]),
            security("s4", 2, "c9", &[]),
        ];
        let groups = vec![vec!["c1".into(), "c2".into(), "c3".into()], vec!["c4".into()]];
        let out = issuer_match(&s, &groups);
        assert_eq!(out.candidates.len(), 3);
        assert_eq!(out.skipped, 1);
        let split = vec![vec!["c1".into()], vec!["c2".into()]];
        assert!(issuer_match(&s[..2], &split).candidates.is_empty());
    }

    #[test]
    fn merge_unions_provenance() {
        let a = vec![CandidatePair::new(pair("x", "y"), BlockingKind::IdOverlap)];
        let b = vec![
            CandidatePair::new(pair("y", "x"), BlockingKind::TokenOverlap),
            CandidatePair::new(pair("a", "b"), BlockingKind::TokenOverlap),
        ];
        let out = merge_candidates([a, b]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].pair, pair("a", "b"));
        assert_eq!(out[1].provenance.to_string(), "IdOverlap+TokenOverlap");
    }

    #[test]
    fn provenance_text_round_trip() {
        for bits in 1u8..8 {
            let p = Provenance(bits);
            assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
        }
        assert!("IdOverlap+Bogus".parse::<Provenance>().is_err());
        assert!(Provenance::of(BlockingKind::TokenOverlap).is_only(BlockingKind::TokenOverlap));
        assert!(!Provenance::of(BlockingKind::TokenOverlap)
            .with(BlockingKind::IdOverlap)
            .is_only(BlockingKind::TokenOverlap));
    }
}
