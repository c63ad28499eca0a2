//! Synthetic multi-source benchmark generation.
//!
//! Each base company is replicated once per data source together with its
//! securities, then a random combination of data artifacts is applied to the
//! group. Acquisitions merge ground-truth groups; mergers only copy
//! identifiers and leave the groups apart.

mod artifacts;
mod corpus;
mod ids;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CompanyRecord, DataSourceId, EntityGroup, GroundTruth, GroupKind, IdScheme, Identifiers, RecordId, SecurityRecord,
    SecurityType,
};
use crate::text::stream_seed;

pub use artifacts::{acronym, paraphrase, CORPORATE_TERMS};
pub use corpus::{
    load_base_corpus, parse_base_corpus, synthesize_base_corpus, write_base_corpus, BaseCorpus, CompanySeed,
};
pub use split::{
    export_training_pairs, split_groups, ExportedPairs, LabeledPair, Split, SplitAssignment, DEFAULT_SPLIT_RATIOS,
};

use ids::IdMinter;

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error("need at least {needed} base companies, got {available}")]
    InsufficientSeeds { needed: usize, available: usize },
    #[error("rate for {kind} must lie in [0, 1], got {rate}")]
    RateOutOfRange { kind: String, rate: f64 },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("ground truth has no groups")]
    EmptyTruth,
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
}

/// Rule-based corruptions, in the order they are tried for every group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArtifactKind {
    AcronymName,
    InsertCorporateTerm,
    CreateCorporateAcquisition,
    CreateCorporateMerger,
    ParaphraseAttribute,
    MultipleIDs,
    NoIdOverlaps,
    MultipleSecurities,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 8] = [
        ArtifactKind::AcronymName,
        ArtifactKind::InsertCorporateTerm,
        ArtifactKind::CreateCorporateAcquisition,
        ArtifactKind::CreateCorporateMerger,
        ArtifactKind::ParaphraseAttribute,
        ArtifactKind::MultipleIDs,
        ArtifactKind::NoIdOverlaps,
        ArtifactKind::MultipleSecurities,
    ];

    pub fn target(self) -> GroupKind {
        match self {
            ArtifactKind::MultipleIDs | ArtifactKind::NoIdOverlaps | ArtifactKind::MultipleSecurities => {
                GroupKind::Security
            }
            _ => GroupKind::Company,
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ArtifactKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtifactKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown artifact {s:?}"))
    }
}

pub const DEFAULT_ARTIFACT_RATE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub num_groups: usize,
    pub num_sources: usize,
    pub artifact_rates: BTreeMap<ArtifactKind, f64>,
    /// Per-source probability of a benign naming variant (upper-casing or
    /// stripped punctuation) before artifacts run.
    pub name_jitter_rate: f64,
    pub rng_seed: u64,
    /// Inclusive range of securities per company.
    pub securities_per_company: (usize, usize),
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            num_groups: 100,
            num_sources: 5,
            artifact_rates: ArtifactKind::ALL.into_iter().map(|k| (k, DEFAULT_ARTIFACT_RATE)).collect(),
            name_jitter_rate: DEFAULT_ARTIFACT_RATE,
            rng_seed: 0,
            securities_per_company: (1, 2),
        }
    }
}

impl GenerationParams {
    /// No artifacts and no naming jitter: every group stays trivially matchable.
    pub fn uncorrupted(num_groups: usize, num_sources: usize, rng_seed: u64) -> Self {
        GenerationParams {
            num_groups,
            num_sources,
            artifact_rates: ArtifactKind::ALL.into_iter().map(|k| (k, 0.0)).collect(),
            name_jitter_rate: 0.0,
            rng_seed,
            ..Default::default()
        }
    }

    pub fn rate(&self, kind: ArtifactKind) -> f64 {
        self.artifact_rates.get(&kind).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.num_groups == 0 {
            return Err(DatagenError::InvalidParams("num_groups must be at least 1".into()));
        }
        if self.num_sources < 2 {
            return Err(DatagenError::InvalidParams("num_sources must be at least 2".into()));
        }
        if self.num_sources > usize::from(u16::MAX) {
            return Err(DatagenError::InvalidParams("too many sources".into()));
        }
        let (lo, hi) = self.securities_per_company;
        if lo == 0 || lo > hi {
            return Err(DatagenError::InvalidParams(format!("securities_per_company {lo}..={hi} is empty or zero")));
        }
        for (kind, &rate) in &self.artifact_rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(DatagenError::RateOutOfRange { kind: kind.to_string(), rate });
            }
        }
        if !(0.0..=1.0).contains(&self.name_jitter_rate) {
            return Err(DatagenError::RateOutOfRange { kind: "name jitter".into(), rate: self.name_jitter_rate });
        }
        Ok(())
    }
}

/// Log entry for one artifact application attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedArtifact {
    pub kind: ArtifactKind,
    /// False when the artifact could not act on the group (no-op).
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupProvenance {
    pub group_id: String,
    pub artifacts: Vec<AppliedArtifact>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub num_sources: usize,
    pub companies: Vec<CompanyRecord>,
    pub securities: Vec<SecurityRecord>,
    pub company_truth: GroundTruth,
    pub security_truth: GroundTruth,
    pub provenance: Vec<GroupProvenance>,
}

/// Summary counts in the shape of a dataset statistics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub data_sources: usize,
    pub company_entities: usize,
    pub company_records: usize,
    pub company_matches: u64,
    pub security_entities: usize,
    pub security_records: usize,
    pub security_matches: u64,
    pub pct_with_description: f64,
}

impl GeneratedDataset {
    pub fn stats(&self) -> DatasetStats {
        let with_desc = self.companies.iter().filter(|c| c.description.is_some()).count();
        DatasetStats {
            data_sources: self.num_sources,
            company_entities: self.company_truth.groups().len(),
            company_records: self.companies.len(),
            company_matches: self.company_truth.true_pair_count(),
            security_entities: self.security_truth.groups().len(),
            security_records: self.securities.len(),
            security_matches: self.security_truth.true_pair_count(),
            pct_with_description: 100.0 * with_desc as f64 / self.companies.len().max(1) as f64,
        }
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let avg = |m: u64, e: usize| if e == 0 { 0.0 } else { m as f64 / e as f64 };
        writeln!(f, "{:<36}{:>12}{:>12}", "Dataset", "Companies", "Securities")?;
        writeln!(f, "{:<36}{:>12}{:>12}", "# of Data Sources", self.data_sources, self.data_sources)?;
        writeln!(f, "{:<36}{:>12}{:>12}", "# of Entities", self.company_entities, self.security_entities)?;
        writeln!(f, "{:<36}{:>12}{:>12}", "# of Records", self.company_records, self.security_records)?;
        writeln!(f, "{:<36}{:>12}{:>12}", "# of Matches", self.company_matches, self.security_matches)?;
        writeln!(
            f,
            "{:<36}{:>12.2}{:>12.2}",
            "Avg. # of Matches per Entity",
            avg(self.company_matches, self.company_entities),
            avg(self.security_matches, self.security_entities)
        )?;
        write!(f, "{:<36}{:>11.1}%{:>12}", "% of Records with Text Descriptions", self.pct_with_description, "-")
    }
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new() }
    }

    fn push(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two sets keeping the smaller index as root; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[child] = root;
        true
    }
}

/// Mutable view of one record group during generation.
#[derive(Debug, Clone)]
pub struct GroupState {
    pub group_id: String,
    pub seed: CompanySeed,
    /// Company record index per source.
    pub companies: Vec<usize>,
    /// Security lines issued by this group; the first is the common equity.
    pub lines: Vec<usize>,
    pub applied: Vec<AppliedArtifact>,
}

/// A security as listed across sources: one record per listing source.
#[derive(Debug, Clone)]
pub struct SecurityLine {
    pub line_id: String,
    pub security_type: SecurityType,
    /// (source, security record index), sorted by source.
    pub records: Vec<(usize, usize)>,
}

/// Working state of a generation run. `generate` drives it; tests can drive
/// single artifacts through [`GenerationState::apply_artifact`].
#[derive(Debug)]
pub struct GenerationState {
    num_sources: usize,
    companies: Vec<CompanyRecord>,
    securities: Vec<SecurityRecord>,
    groups: Vec<GroupState>,
    lines: Vec<SecurityLine>,
    company_links: UnionFind,
    security_links: UnionFind,
    minter: IdMinter,
}

impl GenerationState {
    /// Replicates the first `num_groups` seeds into every source, without
    /// applying any artifact.
    pub fn replicate<R: Rng>(
        base: &[CompanySeed],
        params: &GenerationParams,
        rng: &mut R,
    ) -> Result<Self, DatagenError> {
        params.validate()?;
        if base.len() < params.num_groups {
            return Err(DatagenError::InsufficientSeeds { needed: params.num_groups, available: base.len() });
        }
        let mut state = GenerationState {
            num_sources: params.num_sources,
            companies: Vec::with_capacity(params.num_groups * params.num_sources),
            securities: Vec::new(),
            groups: Vec::with_capacity(params.num_groups),
            lines: Vec::new(),
            company_links: UnionFind::new(),
            security_links: UnionFind::new(),
            minter: IdMinter::default(),
        };
        for seed in &base[..params.num_groups] {
            let g = state.groups.len();
            state.company_links.push();
            let mut companies = Vec::with_capacity(params.num_sources);
            for source in 0..params.num_sources {
                let name = if rng.random_bool(params.name_jitter_rate) {
                    if rng.random_bool(0.5) {
                        artifacts::strip_punctuation(&seed.name)
                    } else {
                        seed.name.to_uppercase()
                    }
                } else {
                    seed.name.clone()
                };
                let idx = state.companies.len();
                state.companies.push(CompanyRecord {
                    id: RecordId::new(format!("C{:07}", idx + 1)),
                    source: DataSourceId(source as u16),
                    name,
                    city: seed.city.clone(),
                    region: seed.region.clone(),
                    country_code: seed.country_code.clone(),
                    description: seed.description.clone(),
                });
                companies.push(idx);
            }
            state.groups.push(GroupState {
                group_id: format!("G{:06}", g + 1),
                seed: seed.clone(),
                companies,
                lines: Vec::new(),
                applied: Vec::new(),
            });
            let (lo, hi) = params.securities_per_company;
            let count = rng.random_range(lo..=hi);
            for k in 0..count {
                let ty = if k == 0 {
                    SecurityType::Equity
                } else {
                    [SecurityType::Bond, SecurityType::Unit, SecurityType::Right, SecurityType::Other]
                        [rng.random_range(0..4)]
                };
                let sources: Vec<usize> = (0..params.num_sources).collect();
                state.add_line(g, ty, &sources, rng);
            }
        }
        Ok(state)
    }

    fn add_line<R: Rng>(&mut self, group: usize, ty: SecurityType, sources: &[usize], rng: &mut R) -> usize {
        let mut identifiers = Identifiers::new();
        for scheme in IdScheme::ALL {
            let v = self.minter.mint(scheme, rng);
            identifiers.insert(scheme, v).expect("minted identifiers are shape-valid");
        }
        let line = self.lines.len();
        self.security_links.push();
        let name = match ty {
            SecurityType::Equity => format!("{} Common Stock", self.groups[group].seed.name),
            other => {
                let t = other.as_str();
                format!("{} {}{}", self.groups[group].seed.name, t[..1].to_uppercase(), &t[1..])
            }
        };
        let mut records = Vec::with_capacity(sources.len());
        for &source in sources {
            let idx = self.securities.len();
            self.securities.push(SecurityRecord {
                id: RecordId::new(format!("S{:07}", idx + 1)),
                source: DataSourceId(source as u16),
                issuer_id: self.companies[self.groups[group].companies[source]].id.clone(),
                name: name.clone(),
                security_type: ty,
                identifiers: identifiers.clone(),
            });
            records.push((source, idx));
        }
        self.lines.push(SecurityLine { line_id: format!("L{:07}", line + 1), security_type: ty, records });
        self.groups[group].lines.push(line);
        line
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn groups(&self) -> &[GroupState] {
        &self.groups
    }

    pub fn lines(&self) -> &[SecurityLine] {
        &self.lines
    }

    pub fn companies(&self) -> &[CompanyRecord] {
        &self.companies
    }

    pub fn securities(&self) -> &[SecurityRecord] {
        &self.securities
    }

    pub fn finish(mut self) -> GeneratedDataset {
        let mut company_groups: BTreeMap<usize, Vec<RecordId>> = BTreeMap::new();
        for g in 0..self.groups.len() {
            let root = self.company_links.find(g);
            let ids = self.groups[g].companies.iter().map(|&c| self.companies[c].id.clone());
            company_groups.entry(root).or_default().extend(ids);
        }
        let company_truth = GroundTruth::new(
            company_groups
                .into_iter()
                .map(|(root, members)| {
                    EntityGroup::new(self.groups[root].group_id.clone(), GroupKind::Company, members)
                })
                .collect(),
        )
        .expect("every company belongs to exactly one generated group");

        let mut security_groups: BTreeMap<usize, Vec<RecordId>> = BTreeMap::new();
        for l in 0..self.lines.len() {
            let root = self.security_links.find(l);
            let ids = self.lines[l].records.iter().map(|&(_, s)| self.securities[s].id.clone());
            security_groups.entry(root).or_default().extend(ids);
        }
        let security_truth = GroundTruth::new(
            security_groups
                .into_iter()
                .map(|(root, members)| EntityGroup::new(self.lines[root].line_id.clone(), GroupKind::Security, members))
                .collect(),
        )
        .expect("every security belongs to exactly one line");

        let provenance = self
            .groups
            .iter()
            .map(|g| GroupProvenance { group_id: g.group_id.clone(), artifacts: g.applied.clone() })
            .collect();
        GeneratedDataset {
            num_sources: self.num_sources,
            companies: self.companies,
            securities: self.securities,
            company_truth,
            security_truth,
            provenance,
        }
    }
}

/// Synthesized base companies for `num_groups` groups when no corpus file is given.
pub fn default_base_corpus(num_groups: usize, seed: u64) -> Vec<CompanySeed> {
    synthesize_base_corpus(num_groups, stream_seed(seed, "corpus"))
}

/// Builds the full benchmark: replication, then for every group each
/// artifact kind in declaration order with an independent draw.
pub fn generate(base: &[CompanySeed], params: &GenerationParams) -> Result<GeneratedDataset, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(params.rng_seed, "datagen"));
    let mut state = GenerationState::replicate(base, params, &mut rng)?;
    for g in 0..params.num_groups {
        for kind in ArtifactKind::ALL {
            if rng.random_bool(params.rate(kind)) {
                state.apply_artifact(g, kind, &mut rng);
            }
        }
    }
    Ok(state.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn base(n: usize) -> Vec<CompanySeed> {
        synthesize_base_corpus(n, 11)
    }

    #[test]
    fn uncorrupted_groups_are_uniform() {
        let ds = generate(&base(20), &GenerationParams::uncorrupted(20, 5, 1)).unwrap();
        assert_eq!(ds.company_truth.groups().len(), 20);
        for g in ds.company_truth.groups() {
            assert_eq!(g.len(), 5);
            let names: BTreeSet<&str> =
                g.members.iter().map(|id| ds.companies.iter().find(|c| &c.id == id).unwrap().name.as_str()).collect();
            assert_eq!(names.len(), 1);
        }
        let by_id: BTreeMap<&RecordId, &SecurityRecord> = ds.securities.iter().map(|s| (&s.id, s)).collect();
        for g in ds.security_truth.groups() {
            let sets: BTreeSet<&Identifiers> = g.members.iter().map(|id| &by_id[id].identifiers).collect();
            assert_eq!(sets.len(), 1);
            assert_eq!(sets.into_iter().next().unwrap().len(), 4);
        }
        assert!(ds.provenance.iter().all(|p| p.artifacts.is_empty()));
    }

    #[test]
    fn acquisitions_absorb_groups() {
        let mut params = GenerationParams::uncorrupted(2, 5, 42);
        params.artifact_rates.insert(ArtifactKind::CreateCorporateAcquisition, 1.0);
        let ds = generate(&base(2), &params).unwrap();
        assert_eq!(ds.company_truth.groups().len(), 1);
        let seeds = base(2);
        let overwritten = ds.companies.iter().filter(|c| c.id.as_str() > "C0000005" && c.name == seeds[0].name).count()
            + ds.companies.iter().filter(|c| c.id.as_str() <= "C0000005" && c.name == seeds[1].name).count();
        assert!(overwritten > 0);
        let acq: Vec<_> = ds
            .provenance
            .iter()
            .flat_map(|p| &p.artifacts)
            .filter(|a| a.kind == ArtifactKind::CreateCorporateAcquisition)
            .collect();
        assert_eq!(acq.len(), 2);
        assert!(acq.iter().all(|a| a.applied));
    }

    #[test]
    fn mergers_keep_groups_apart() {
        let mut params = GenerationParams::uncorrupted(6, 5, 5);
        params.artifact_rates.insert(ArtifactKind::CreateCorporateMerger, 1.0);
        let ds = generate(&base(6), &params).unwrap();
        assert_eq!(ds.company_truth.groups().len(), 6);
        // Copied identifiers now collide across groups.
        let mut holders: BTreeMap<(IdScheme, &str), BTreeSet<&str>> = BTreeMap::new();
        for s in &ds.securities {
            let gid = &ds.company_truth.group_of(&s.issuer_id).unwrap().group_id;
            for (scheme, v) in s.identifiers.iter() {
                holders.entry((scheme, v)).or_default().insert(gid);
            }
        }
        assert!(holders.values().any(|g| g.len() > 1));
    }

    #[test]
    fn deterministic_under_seed() {
        let params = GenerationParams { num_groups: 50, rng_seed: 9, ..Default::default() };
        let a = generate(&base(50), &params).unwrap();
        let b = generate(&base(50), &params).unwrap();
        assert_eq!(a.companies, b.companies);
        assert_eq!(a.securities, b.securities);
        assert_eq!(a.provenance, b.provenance);
        assert_eq!(a.company_truth.groups(), b.company_truth.groups());
        let c = generate(&base(50), &GenerationParams { rng_seed: 10, ..params }).unwrap();
        assert_ne!(a.companies, c.companies);
    }

    #[test]
    fn insufficient_seeds_and_bad_rates() {
        assert_eq!(
            generate(&base(3), &GenerationParams::uncorrupted(4, 5, 0)).unwrap_err(),
            DatagenError::InsufficientSeeds { needed: 4, available: 3 }
        );
        let mut params = GenerationParams::uncorrupted(3, 5, 0);
        params.artifact_rates.insert(ArtifactKind::AcronymName, 1.5);
        assert!(matches!(generate(&base(3), &params), Err(DatagenError::RateOutOfRange { .. })));
        assert!(GenerationParams::uncorrupted(3, 1, 0).validate().is_err());
        assert!(GenerationParams::uncorrupted(0, 5, 0).validate().is_err());
    }

    #[test]
    fn issuers_exist_in_same_source() {
        let ds = generate(&base(80), &GenerationParams { num_groups: 80, rng_seed: 3, ..Default::default() }).unwrap();
        let companies: BTreeMap<&RecordId, &CompanyRecord> = ds.companies.iter().map(|c| (&c.id, c)).collect();
        for s in &ds.securities {
            assert_eq!(companies[&s.issuer_id].source, s.source);
        }
        assert_eq!(ds.company_truth.num_records(), ds.companies.len());
        assert_eq!(ds.security_truth.num_records(), ds.securities.len());
    }

    #[test]
    fn artifact_names_round_trip() {
        for k in ArtifactKind::ALL {
            assert_eq!(k.to_string().parse::<ArtifactKind>().unwrap(), k);
        }
    }

    #[test]
    fn stats_table() {
        let ds = generate(&base(10), &GenerationParams::uncorrupted(10, 5, 1)).unwrap();
        let st = ds.stats();
        assert_eq!(st.company_entities, 10);
        assert_eq!(st.company_records, 50);
        assert_eq!(st.company_matches, 100);
        assert!(st.to_string().contains("# of Matches"));
    }
}
