use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grouplink::blocking::CandidatePair;
use grouplink::datagen::{
    self, default_base_corpus, export_training_pairs, load_base_corpus, split_groups, ArtifactKind, GenerationParams,
    Split, SplitAssignment,
};
use grouplink::io::{self, FormatError};
use grouplink::matcher::{self, MatcherSpec};
use grouplink::metrics::{self, SingletonPurity, Stage, StageScores};
use grouplink::model::{CompanyRecord, GroundTruth, GroupKind, RecordId, SecurityRecord};
use grouplink::pipeline::{self, DatasetKind, PipelineConfig, PipelineError, PipelineInput, PipelineOutput, Preset};
use grouplink::text::stream_seed;

use crate::args::{
    BlockArgs, BlockingArgs, CleanupArgs, CleanupFlags, Command, DataArgs, EvaluateArgs, ExportArgs, GenerateArgs,
    MatchArgs, MatcherArg, MatcherArgs, PipelineArgs,
};

/// Bad flag combinations or values; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn pipeline_err(e: PipelineError) -> anyhow::Error {
    match e {
        PipelineError::Config(m) => usage(m),
        PipelineError::Cleanup(grouplink::cleanup::CleanupError::InvalidParams(m)) => usage(m),
        other => other.into(),
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Block(a) => block(a),
        Command::Match(a) => match_pairs(a),
        Command::Cleanup(a) => cleanup(a),
        Command::Evaluate(a) => evaluate(a),
        Command::ExportPairs(a) => export_pairs(a),
        Command::Pipeline(a) => run_pipeline(a),
    }
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(BufWriter<File>) -> Result<(), FormatError>) -> Result<PathBuf> {
    let path = dir.join(name);
    f(io::create(&path)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn read_file<T>(path: &Path, f: impl FnOnce(std::io::BufReader<File>) -> Result<T, FormatError>) -> Result<T> {
    f(io::open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

// ---- generate --------------------------------------------------------------

fn generate(a: GenerateArgs) -> Result<()> {
    if a.groups == 0 {
        return Err(usage("--groups must be at least 1"));
    }
    let mut params = GenerationParams {
        num_groups: a.groups,
        num_sources: a.sources,
        rng_seed: a.seed,
        securities_per_company: (a.min_securities, a.max_securities),
        ..Default::default()
    };
    if let Some(r) = a.artifact_rate {
        params.artifact_rates.values_mut().for_each(|v| *v = r);
    }
    for spec in &a.rates {
        let (k, v) = spec.split_once('=').ok_or_else(|| usage(format!("--rate expects KIND=P, got {spec:?}")))?;
        let kind: ArtifactKind = k.parse().map_err(usage)?;
        let rate: f64 = v.trim().parse().map_err(|_| usage(format!("bad rate {v:?}")))?;
        params.artifact_rates.insert(kind, rate);
    }
    if let Some(j) = a.name_jitter_rate {
        params.name_jitter_rate = j;
    }
    params.validate().map_err(|e| usage(e.to_string()))?;

    let base = match &a.base {
        Some(path) => {
            let corpus = load_base_corpus(path).with_context(|| format!("reading {}", path.display()))?;
            if corpus.skipped_rows > 0 {
                log::warn!("skipped {} base rows without a name", corpus.skipped_rows);
            }
            corpus.seeds
        }
        None => default_base_corpus(a.groups, a.seed),
    };
    let ds = datagen::generate(&base, &params)?;

    let dir = out_dir(&a.out_dir)?;
    write_file(dir, "companies.csv", |w| io::write_companies(w, &ds.companies))?;
    write_file(dir, "securities.csv", |w| io::write_securities(w, &ds.securities))?;
    write_file(dir, "company_groups.csv", |w| io::write_ground_truth(w, &ds.company_truth))?;
    write_file(dir, "security_groups.csv", |w| io::write_ground_truth(w, &ds.security_truth))?;
    write_file(dir, "provenance.jsonl", |w| io::write_provenance_log(w, &ds.provenance))?;
    println!("{}", ds.stats());
    Ok(())
}

// ---- shared dataset handling -----------------------------------------------

struct Records {
    kind: DatasetKind,
    companies: Vec<CompanyRecord>,
    securities: Vec<SecurityRecord>,
    company_groups: Option<Vec<Vec<RecordId>>>,
}

impl Records {
    fn input<'a>(&'a self, truth: Option<&'a GroundTruth>) -> PipelineInput<'a> {
        PipelineInput {
            companies: &self.companies,
            securities: &self.securities,
            company_groups: self.company_groups.as_deref(),
            truth,
        }
    }

    fn num_sources(&self) -> usize {
        let sources: BTreeSet<u16> = match self.kind {
            DatasetKind::Companies => self.companies.iter().map(|c| c.source.0).collect(),
            DatasetKind::Securities => self.securities.iter().map(|s| s.source.0).collect(),
        };
        sources.len()
    }

    fn group_kind(&self) -> GroupKind {
        match self.kind {
            DatasetKind::Companies => GroupKind::Company,
            DatasetKind::Securities => GroupKind::Security,
        }
    }
}

fn dataset_kind(data: &DataArgs) -> Result<DatasetKind> {
    match (data.preset, data.kind) {
        (Some(p), Some(k)) if p.kind() != DatasetKind::from(k) => {
            Err(usage(format!("--kind {} contradicts preset {p}", DatasetKind::from(k))))
        }
        (Some(p), _) => Ok(p.kind()),
        (None, Some(k)) => Ok(k.into()),
        (None, None) => Ok(DatasetKind::Companies),
    }
}

fn load_records(data: &DataArgs) -> Result<Records> {
    let kind = dataset_kind(data)?;
    match kind {
        DatasetKind::Companies if data.companies.is_none() => return Err(usage("company data needs --companies")),
        DatasetKind::Securities if data.securities.is_none() => return Err(usage("security data needs --securities")),
        _ => {}
    }
    let companies = match &data.companies {
        Some(p) => read_file(p, io::parse_companies)?,
        None => Vec::new(),
    };
    let securities = match &data.securities {
        Some(p) => read_file(p, io::parse_securities)?,
        None => Vec::new(),
    };
    let company_groups = match &data.company_groups {
        Some(p) => Some(read_file(p, io::parse_groups)?.into_iter().map(|(_, m)| m).collect()),
        None => None,
    };
    Ok(Records { kind, companies, securities, company_groups })
}

/// Preset values when `--preset` is given; otherwise mu is the number of
/// sources in the data and gamma five times that.
fn build_config(
    data: &DataArgs,
    records: &Records,
    blocking: Option<&BlockingArgs>,
    matcher: MatcherSpec,
    flags: &CleanupFlags,
) -> Result<PipelineConfig> {
    let mut cfg = match data.preset {
        Some(p) => PipelineConfig::from_preset(p, matcher),
        None => {
            let fallback = match records.kind {
                DatasetKind::Companies => Preset::SyntheticCompanies,
                DatasetKind::Securities => Preset::SyntheticSecurities,
            };
            let mut cfg = PipelineConfig::from_preset(fallback, matcher);
            if records.num_sources() > 0 {
                cfg.cleanup = grouplink::cleanup::CleanupParams::for_sources(records.num_sources())
                    .map_err(|e| usage(e.to_string()))?;
            }
            cfg
        }
    };
    if let Some(b) = blocking {
        if let Some(list) = &b.blockings {
            cfg.blockings = list.clone();
        }
        if let Some(n) = b.token_top_n {
            if n == 0 {
                return Err(usage("--token-top-n must be at least 1"));
            }
            cfg.token_top_n = n;
        }
    }
    if let Some(g) = flags.gamma {
        cfg.cleanup.gamma = g;
    }
    if let Some(mu) = flags.mu {
        cfg.cleanup.mu = mu;
    }
    if let Some(l) = flags.pre_cleanup_limit {
        cfg.cleanup.pre_cleanup_limit = l;
    }
    if flags.halve_gamma {
        cfg.cleanup.gamma = cfg.cleanup.gamma.halved();
    }
    if flags.exclude_singletons {
        cfg.singleton_purity = SingletonPurity::Exclude;
    }
    cfg.validate().map_err(pipeline_err)?;
    log::info!(
        "{} data, blockings {:?}, gamma={} mu={} pre-cleanup limit={}",
        cfg.kind,
        cfg.blockings,
        cfg.cleanup.gamma,
        cfg.cleanup.mu,
        cfg.cleanup.pre_cleanup_limit
    );
    Ok(cfg)
}

fn matcher_spec(m: &MatcherArgs) -> Result<MatcherSpec> {
    match m.matcher {
        MatcherArg::ExactId => Ok(MatcherSpec::ExactId),
        MatcherArg::NameJaccard => {
            if !(m.threshold > 0.0 && m.threshold <= 1.0) {
                return Err(usage(format!("--threshold must lie in (0, 1], got {}", m.threshold)));
            }
            Ok(MatcherSpec::NameJaccard { threshold: m.threshold })
        }
        MatcherArg::External => match &m.predictions {
            Some(p) => Ok(MatcherSpec::External { predictions_path: p.clone() }),
            None => Err(usage("--matcher external needs --predictions")),
        },
    }
}

fn print_scores(scores: &[StageScores]) {
    for s in scores {
        println!("{s}");
    }
}

fn write_report(path: &Path, scores: &[StageScores]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_string_pretty(scores)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_cleanup_outputs(dir: &Path, out: &PipelineOutput) -> Result<()> {
    write_file(dir, "pre_groups.csv", |w| io::write_components(w, &out.pre_components))?;
    write_file(dir, "groups.csv", |w| io::write_components(w, &out.cleanup.components))?;
    let mut audit = out.pre_cleanup.removed.clone();
    audit.extend(out.cleanup.removed.iter().cloned());
    write_file(dir, "audit.jsonl", |w| io::write_audit_log(w, &audit))?;
    println!(
        "{} records in {} groups (largest {}); {} edges removed",
        out.cleanup.components.iter().map(Vec::len).sum::<usize>(),
        out.cleanup.components.len(),
        out.cleanup.components.iter().map(Vec::len).max().unwrap_or(0),
        audit.len()
    );
    Ok(())
}

// ---- stages ----------------------------------------------------------------

fn block(a: BlockArgs) -> Result<()> {
    let records = load_records(&a.data)?;
    let cfg = build_config(&a.data, &records, Some(&a.blocking), MatcherSpec::ExactId, &CleanupFlags::default())?;
    let candidates =
        pipeline::block(cfg.kind, &cfg.blockings, &records.input(None), cfg.token_top_n).map_err(pipeline_err)?;
    let path = write_file(out_dir(&a.out_dir)?, "candidates.csv", |w| io::write_candidates(w, &candidates))?;
    println!("{} candidate pairs written to {}", candidates.len(), path.display());
    Ok(())
}

fn match_pairs(a: MatchArgs) -> Result<()> {
    let spec = matcher_spec(&a.matcher)?;
    let records = load_records(&a.data)?;
    let candidates = read_file(&a.candidates, io::parse_candidates)?;
    let (predictions, _) = pipeline::predict(&spec, &candidates, &records.input(None)).map_err(pipeline_err)?;
    let path = write_file(out_dir(&a.out_dir)?, "predictions.csv", |w| io::write_predictions(w, &predictions))?;
    let positives = predictions.iter().filter(|p| p.label.is_match()).count();
    println!("{} of {} pairs predicted as matches, written to {}", positives, predictions.len(), path.display());
    Ok(())
}

fn cleanup(a: CleanupArgs) -> Result<()> {
    let records = load_records(&a.data)?;
    let spec = MatcherSpec::External { predictions_path: a.predictions.clone() };
    let cfg = build_config(&a.data, &records, None, spec, &a.cleanup)?;
    let candidates: Vec<CandidatePair> = match &a.candidates {
        Some(p) => read_file(p, io::parse_candidates)?,
        None => {
            log::warn!("no --candidates given; pre-cleanup cannot see blocking provenance");
            Vec::new()
        }
    };
    let out = pipeline::run_from_candidates(&cfg, &records.input(None), candidates).map_err(pipeline_err)?;
    write_cleanup_outputs(out_dir(&a.out_dir)?, &out)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let truth = read_file(&a.truth, |r| io::parse_ground_truth(r, GroupKind::Company))?;
    let singletons = if a.exclude_singletons { SingletonPurity::Exclude } else { SingletonPurity::CountAsPure };
    let components = |p: &Path| -> Result<Vec<Vec<RecordId>>> {
        Ok(read_file(p, io::parse_groups)?.into_iter().map(|(_, m)| m).collect())
    };
    let mut scores = Vec::new();
    if let Some(p) = &a.predictions {
        let imported =
            matcher::import_predictions(io::open(p)?, &[]).with_context(|| format!("reading {}", p.display()))?;
        let positives: BTreeSet<_> =
            imported.predictions.iter().filter(|p| p.label.is_match()).map(|p| p.pair.clone()).collect();
        scores.push(metrics::pairwise_scores(&positives, &truth));
    }
    if let Some(p) = &a.pre_groups {
        scores.push(metrics::group_scores(&components(p)?, &truth, Stage::PreCleanup, singletons));
    }
    scores.push(metrics::group_scores(&components(&a.groups)?, &truth, Stage::PostCleanup, singletons));
    print_scores(&scores);
    if let Some(r) = &a.report {
        write_report(r, &scores)?;
    }
    Ok(())
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad split ratio {t:?}"))))
        .collect::<Result<_>>()?;
    let ratios: [f64; 3] =
        parts.try_into().map_err(|_| usage(format!("--split-ratios needs three values, got {s:?}")))?;
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || sum <= 0.0 {
        return Err(usage(format!("split ratios must be non-negative with a positive sum, got {s:?}")));
    }
    if (sum - 1.0).abs() > 1e-9 {
        log::warn!("split ratios sum to {sum}; renormalizing");
    }
    Ok(ratios.map(|r| r / sum))
}

fn export_pairs(a: ExportArgs) -> Result<()> {
    let ratios = parse_ratios(&a.split_ratios)?;
    let truth = read_file(&a.truth, |r| io::parse_ground_truth(r, GroupKind::Company))?;
    let dir = out_dir(&a.out_dir)?;
    let splits: SplitAssignment = match &a.splits {
        Some(p) => read_file(p, io::parse_splits)?,
        None => {
            let s = split_groups(&truth, ratios, stream_seed(a.seed, "split"))?;
            write_file(dir, "splits.csv", |w| io::write_splits(w, &s))?;
            s
        }
    };
    for split in Split::ALL {
        let seed = stream_seed(a.seed, &format!("negatives/{split}"));
        let exported = export_training_pairs(&truth, &splits, split, a.neg_ratio, seed);
        write_file(dir, &format!("pairs_{split}.csv"), |w| io::write_labeled_pairs(w, &exported.pairs))?;
        println!(
            "{split}: {} groups, {} positive and {} negative pairs",
            splits.count(split),
            exported.positives,
            exported.negatives
        );
    }
    Ok(())
}

fn run_pipeline(a: PipelineArgs) -> Result<()> {
    if a.report.is_some() && a.truth.is_none() {
        return Err(usage("--report needs --truth"));
    }
    let spec = matcher_spec(&a.matcher)?;
    let records = load_records(&a.data)?;
    let cfg = build_config(&a.data, &records, Some(&a.blocking), spec, &a.cleanup)?;
    let truth = match &a.truth {
        Some(p) => Some(read_file(p, |r| io::parse_ground_truth(r, records.group_kind()))?),
        None => None,
    };
    let input = records.input(truth.as_ref());
    let out = match &a.candidates {
        Some(p) => pipeline::run_from_candidates(&cfg, &input, read_file(p, io::parse_candidates)?),
        None => pipeline::run(&cfg, &input),
    }
    .map_err(pipeline_err)?;

    let dir = out_dir(&a.out_dir)?;
    write_file(dir, "candidates.csv", |w| io::write_candidates(w, &out.candidates))?;
    write_file(dir, "predictions.csv", |w| io::write_predictions(w, &out.predictions))?;
    write_cleanup_outputs(dir, &out)?;
    if !out.scores.is_empty() {
        print_scores(&out.scores);
        let report = a.report.clone().unwrap_or_else(|| dir.join("report.json"));
        write_report(&report, &out.scores)?;
    }
    Ok(())
}
