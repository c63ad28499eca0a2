use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;

use super::{AppliedArtifact, ArtifactKind, GenerationState};
use crate::model::{IdScheme, SecurityType};

pub const CORPORATE_TERMS: [&str; 8] = ["Inc.", "Ltd.", "Corp.", "Limited", "Corporation", "Holdings", "Group", "PLC"];

const DESCRIPTION_STOPWORDS: [&str; 14] =
    ["a", "an", "the", "of", "for", "and", "to", "in", "on", "with", "across", "its", "is", "their"];

const SYNONYMS: [(&str, &str); 22] = [
    ("develops", "builds"),
    ("builds", "creates"),
    ("serving", "supporting"),
    ("customers", "clients"),
    ("software", "applications"),
    ("services", "offerings"),
    ("solutions", "products"),
    ("platforms", "systems"),
    ("tools", "instruments"),
    ("providers", "suppliers"),
    ("businesses", "companies"),
    ("products", "goods"),
    ("company", "firm"),
    ("provides", "offers"),
    ("technology", "tech"),
    ("online", "web-based"),
    ("precision", "high-accuracy"),
    ("consumer", "retail"),
    ("industrial", "factory"),
    ("institutions", "organisations"),
    ("agencies", "bodies"),
    ("universities", "colleges"),
];

/// First letter of every whitespace-separated word, upper-cased; `None`
/// for names with fewer than two words.
pub fn acronym(name: &str) -> Option<String> {
    let words: Vec<&str> = name.split_whitespace().collect();
    if words.len() < 2 {
        return None;
    }
    Some(words.iter().filter_map(|w| w.chars().next()).flat_map(char::to_uppercase).collect())
}

pub(crate) fn strip_punctuation(name: &str) -> String {
    let kept: String = name.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rule-based rewrite of a description: drops function words, swaps words
/// from a fixed synonym table and reorders comma-separated clauses.
pub fn paraphrase<R: Rng>(text: &str, rng: &mut R) -> String {
    let body = text.trim().trim_end_matches('.');
    let mut clauses: Vec<String> = body
        .split(',')
        .map(|clause| {
            let words: Vec<String> = clause
                .split_whitespace()
                .filter(|w| !DESCRIPTION_STOPWORDS.contains(&w.to_lowercase().as_str()))
                .map(|w| {
                    let lower = w.to_lowercase();
                    match SYNONYMS.iter().find(|(from, _)| *from == lower) {
                        Some((_, to)) if rng.random_bool(0.7) => to.to_string(),
                        _ => w.to_string(),
                    }
                })
                .collect();
            words.join(" ")
        })
        .filter(|c| !c.is_empty())
        .collect();
    if clauses.len() > 1 {
        clauses.shuffle(rng);
    }
    let mut out = clauses.join(", ");
    if let Some(first) = out.chars().next() {
        out = first.to_uppercase().collect::<String>() + &out[first.len_utf8()..];
    }
    if !out.is_empty() {
        out.push('.');
    }
    out
}

/// Random non-empty subset of `0..n`, sorted. With `proper`, at least one
/// element is left out whenever `n >= 2`.
fn random_subset<R: Rng>(rng: &mut R, n: usize, proper: bool) -> Vec<usize> {
    let max = if proper && n >= 2 { n - 1 } else { n };
    let k = rng.random_range(1..=max);
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

impl GenerationState {
    fn pick_partner<R: Rng>(&self, group: usize, rng: &mut R) -> Option<usize> {
        let n = self.groups.len();
        if n < 2 {
            return None;
        }
        let p = rng.random_range(0..n - 1);
        Some(if p >= group { p + 1 } else { p })
    }

    /// Applies one artifact to `group`, records the log entry on the group and
    /// returns it.
    pub fn apply_artifact<R: Rng>(&mut self, group: usize, kind: ArtifactKind, rng: &mut R) -> AppliedArtifact {
        let entry = match kind {
            ArtifactKind::AcronymName => self.acronym_name(group, rng),
            ArtifactKind::InsertCorporateTerm => self.insert_corporate_term(group, rng),
            ArtifactKind::CreateCorporateAcquisition => self.acquisition(group, rng),
            ArtifactKind::CreateCorporateMerger => self.merger(group, rng),
            ArtifactKind::ParaphraseAttribute => self.paraphrase_attribute(group, rng),
            ArtifactKind::MultipleIDs => self.multiple_ids(group, rng),
            ArtifactKind::NoIdOverlaps => self.no_id_overlaps(group, rng),
            ArtifactKind::MultipleSecurities => self.multiple_securities(group, rng),
        };
        self.groups[group].applied.push(entry.clone());
        entry
    }

    fn acronym_name<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let kind = ArtifactKind::AcronymName;
        let Some(short) = acronym(&self.groups[group].seed.name) else {
            return noop(kind, "name has fewer than two words");
        };
        let sources = random_subset(rng, self.num_sources, true);
        for &s in &sources {
            let c = self.groups[group].companies[s];
            self.companies[c].name = short.clone();
        }
        applied(kind, &sources, None, short)
    }

    fn insert_corporate_term<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let term = *CORPORATE_TERMS.choose(rng).unwrap();
        let sources = random_subset(rng, self.num_sources, true);
        for &s in &sources {
            let c = self.groups[group].companies[s];
            let name = &mut self.companies[c].name;
            name.push(' ');
            name.push_str(term);
        }
        applied(ArtifactKind::InsertCorporateTerm, &sources, None, term.to_string())
    }

    /// `group` is absorbed by a partner: some of its records take over the
    /// acquirer's attributes and equity identifiers, and both groups become
    /// one entity.
    fn acquisition<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let kind = ArtifactKind::CreateCorporateAcquisition;
        let Some(acquirer) = self.pick_partner(group, rng) else {
            return noop(kind, "no partner group available");
        };
        let sources = random_subset(rng, self.num_sources, false);
        for &s in &sources {
            let from = self.companies[self.groups[acquirer].companies[s]].clone();
            let to = &mut self.companies[self.groups[group].companies[s]];
            to.name = from.name;
            to.city = from.city;
            to.region = from.region;
            to.country_code = from.country_code;
            to.description = from.description;
            let (own_line, their_line) = (self.groups[group].lines[0], self.groups[acquirer].lines[0]);
            if let (Some(own), Some(theirs)) = (self.line_record(own_line, s), self.line_record(their_line, s)) {
                let src = self.securities[theirs].clone();
                self.securities[own].identifiers = src.identifiers;
                self.securities[own].name = src.name;
            }
        }
        let merged = self.company_links.union(group, acquirer);
        self.security_links.union(self.groups[group].lines[0], self.groups[acquirer].lines[0]);
        let detail = if merged { "acquired" } else { "acquired (groups already linked)" };
        applied(kind, &sources, Some(self.groups[acquirer].group_id.clone()), detail.to_string())
    }

    /// Copies a subset of a partner's equity identifiers into some of this
    /// group's equity records; the two groups stay distinct entities.
    fn merger<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let kind = ArtifactKind::CreateCorporateMerger;
        let Some(partner) = self.pick_partner(group, rng) else {
            return noop(kind, "no partner group available");
        };
        let sources = random_subset(rng, self.num_sources, true);
        let mut copied = Vec::new();
        for &s in &sources {
            let (own_line, their_line) = (self.groups[group].lines[0], self.groups[partner].lines[0]);
            let (Some(own), Some(theirs)) = (self.line_record(own_line, s), self.line_record(their_line, s)) else {
                continue;
            };
            let donor = self.securities[theirs].identifiers.clone();
            let schemes: Vec<IdScheme> = donor.iter().map(|(sc, _)| sc).collect();
            if schemes.is_empty() {
                continue;
            }
            for i in random_subset(rng, schemes.len(), false) {
                let scheme = schemes[i];
                let value = donor.get(scheme).unwrap().to_string();
                self.securities[own].identifiers.insert(scheme, value).expect("copied identifier is valid");
                copied.push(format!("{s}:{scheme}"));
            }
        }
        applied(kind, &sources, Some(self.groups[partner].group_id.clone()), copied.join(" "))
    }

    fn paraphrase_attribute<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let kind = ArtifactKind::ParaphraseAttribute;
        let has_description = self.groups[group].companies.iter().any(|&c| self.companies[c].description.is_some());
        if !has_description {
            return noop(kind, "no description to paraphrase");
        }
        let sources = random_subset(rng, self.num_sources, true);
        for &s in &sources {
            let c = self.groups[group].companies[s];
            if let Some(d) = self.companies[c].description.take() {
                let rewritten = paraphrase(&d, rng);
                self.companies[c].description = (!rewritten.is_empty()).then_some(rewritten);
            }
        }
        applied(kind, &sources, None, "description".to_string())
    }

    fn multiple_ids<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let kind = ArtifactKind::MultipleIDs;
        let line = *self.groups[group].lines.choose(rng).unwrap();
        let records: Vec<usize> = self.lines[line].records.iter().map(|&(_, r)| r).collect();
        let mut used: Vec<IdScheme> =
            records.iter().flat_map(|&r| self.securities[r].identifiers.iter().map(|(s, _)| s)).collect();
        used.sort();
        used.dedup();
        let Some(&scheme) = used.choose(rng) else {
            return noop(kind, "security carries no identifiers");
        };
        let value = self.minter.mint(scheme, rng);
        let picked = random_subset(rng, records.len(), true);
        let mut sources = Vec::new();
        for i in picked {
            let (s, r) = self.lines[line].records[i];
            self.securities[r].identifiers.insert(scheme, value.clone()).expect("minted identifier is valid");
            sources.push(s);
        }
        applied(kind, &sources, None, format!("{} {scheme}", self.lines[line].line_id))
    }

    /// Gives every record of every security of the group fresh identifiers,
    /// keeping only the first listing's values, so no two listings share any.
    fn no_id_overlaps<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let mut touched = Vec::new();
        let lines = self.groups[group].lines.clone();
        for line in lines {
            let records = self.lines[line].records.clone();
            for &(s, r) in records.iter().skip(1) {
                let schemes: Vec<IdScheme> = self.securities[r].identifiers.iter().map(|(sc, _)| sc).collect();
                for scheme in schemes {
                    let v = self.minter.mint(scheme, rng);
                    self.securities[r].identifiers.insert(scheme, v).expect("minted identifier is valid");
                }
                touched.push(s);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        if touched.is_empty() {
            return noop(ArtifactKind::NoIdOverlaps, "securities listed in a single source");
        }
        applied(ArtifactKind::NoIdOverlaps, &touched, None, String::new())
    }

    fn multiple_securities<R: Rng>(&mut self, group: usize, rng: &mut R) -> AppliedArtifact {
        let count = rng.random_range(1..=3);
        let mut all_sources = Vec::new();
        let mut added = Vec::new();
        for _ in 0..count {
            let ty = *[SecurityType::Right, SecurityType::Bond, SecurityType::Unit].choose(rng).unwrap();
            let sources = random_subset(rng, self.num_sources, false);
            let line = self.add_line(group, ty, &sources, rng);
            added.push(format!("{}:{ty}", self.lines[line].line_id));
            all_sources.extend(sources);
        }
        all_sources.sort_unstable();
        all_sources.dedup();
        applied(ArtifactKind::MultipleSecurities, &all_sources, None, added.join(" "))
    }

    fn line_record(&self, line: usize, source: usize) -> Option<usize> {
        self.lines[line].records.iter().find(|&&(s, _)| s == source).map(|&(_, r)| r)
    }
}

fn applied(kind: ArtifactKind, sources: &[usize], partner: Option<String>, detail: String) -> AppliedArtifact {
    AppliedArtifact { kind, applied: true, sources: sources.iter().map(|&s| s as u16).collect(), partner, detail }
}

fn noop(kind: ArtifactKind, why: &str) -> AppliedArtifact {
    AppliedArtifact { kind, applied: false, sources: Vec::new(), partner: None, detail: why.to_string() }
}
