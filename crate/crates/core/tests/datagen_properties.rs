use std::collections::BTreeSet;

use grouplink::blocking::{id_overlap_companies, id_overlap_securities};
use grouplink::datagen::{default_base_corpus, generate, load_base_corpus, ArtifactKind, GenerationParams};
use grouplink::io;
use grouplink::matcher::{Matcher, MatcherSpec};
use grouplink::metrics::pairwise_scores;
use grouplink::model::RecordPair;

fn bytes(d: &grouplink::datagen::GeneratedDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    io::write_companies(&mut buf, &d.companies).unwrap();
    io::write_securities(&mut buf, &d.securities).unwrap();
    io::write_ground_truth(&mut buf, &d.company_truth).unwrap();
    io::write_ground_truth(&mut buf, &d.security_truth).unwrap();
    io::write_provenance_log(&mut buf, &d.provenance).unwrap();
    buf
}

#[test]
fn identical_seed_identical_bytes() {
    let params = GenerationParams { num_groups: 150, rng_seed: 42, ..Default::default() };
    let base = default_base_corpus(150, 42);
    assert_eq!(bytes(&generate(&base, &params).unwrap()), bytes(&generate(&base, &params).unwrap()));
    let other = GenerationParams { rng_seed: 43, ..params.clone() };
    assert_ne!(bytes(&generate(&base, &params).unwrap()), bytes(&generate(&base, &other).unwrap()));
}

#[test]
fn uncorrupted_data_is_fully_matchable() {
    let params = GenerationParams::uncorrupted(120, 5, 1);
    let d = generate(&default_base_corpus(120, 1), &params).unwrap();

    let candidates = id_overlap_companies(&d.companies, &d.securities).unwrap();
    let found: BTreeSet<RecordPair> = candidates.iter().map(|c| c.pair.clone()).collect();
    assert_eq!(found, d.company_truth.true_pairs());

    let m = Matcher::new(MatcherSpec::ExactId, &d.companies, &d.securities).unwrap();
    let positives: Vec<RecordPair> =
        m.predict_all(&candidates).unwrap().into_iter().filter(|p| p.label.is_match()).map(|p| p.pair).collect();
    let s = pairwise_scores(&positives, &d.company_truth);
    assert_eq!((s.precision, s.recall), (1.0, 1.0));

    let secs: BTreeSet<RecordPair> = id_overlap_securities(&d.securities).into_iter().map(|c| c.pair).collect();
    assert_eq!(secs, d.security_truth.true_pairs());
    for g in d.company_truth.groups() {
        let names: BTreeSet<&str> =
            d.companies.iter().filter(|c| g.members.contains(&c.id)).map(|c| c.name.as_str()).collect();
        assert_eq!(names.len(), 1);
    }
}

#[test]
fn fixture_corpus_drives_generation() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/base_corpus.csv");
    let corpus = load_base_corpus(&path).unwrap();
    let params = GenerationParams { num_groups: 200, rng_seed: 7, ..Default::default() };
    let d = generate(&corpus.seeds, &params).unwrap();
    assert!(d.company_truth.groups().len() <= 200);
    assert_eq!(d.company_truth.num_records(), d.companies.len());
    assert_eq!(d.security_truth.num_records(), d.securities.len());
}

#[test]
fn acquisitions_only_merge_groups() {
    let mut params = GenerationParams::uncorrupted(40, 5, 42);
    params.artifact_rates.insert(ArtifactKind::CreateCorporateAcquisition, 1.0);
    let d = generate(&default_base_corpus(40, 42), &params).unwrap();
    let applied = d
        .provenance
        .iter()
        .flat_map(|p| &p.artifacts)
        .filter(|a| a.kind == ArtifactKind::CreateCorporateAcquisition && a.applied)
        .count();
    assert!(applied > 0);
    assert!(d.company_truth.groups().len() < 40);
    assert_eq!(d.companies.len(), 200);
}
