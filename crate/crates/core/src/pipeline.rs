//! End-to-end orchestration: block, match, pre-cleanup, graph cleanup,
//! completion and three-stage evaluation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blocking::{self, BlockingError, BlockingKind, CandidatePair};
use crate::cleanup::{
    self, CleanupError, CleanupOutcome, CleanupParams, Gamma, PreCleanupReport, DEFAULT_PRE_CLEANUP_LIMIT,
};
use crate::io::{self, FormatError};
use crate::matcher::{self, ImportedPredictions, Matcher, MatcherError, MatcherSpec, Prediction};
use crate::metrics::{self, SingletonPurity, Stage, StageScores};
use crate::model::{CompanyRecord, GroundTruth, RecordId, RecordPair, SecurityRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("blocking: {0}")]
    Blocking(#[from] BlockingError),
    #[error("matching: {0}")]
    Matching(#[from] MatcherError),
    #[error("cleanup: {0}")]
    Cleanup(#[from] CleanupError),
    #[error("reading predictions: {0}")]
    Predictions(#[from] FormatError),
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Companies,
    Securities,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Companies => "companies",
            DatasetKind::Securities => "securities",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "companies" | "company" => Ok(DatasetKind::Companies),
            "securities" | "security" => Ok(DatasetKind::Securities),
            other => Err(format!("unknown dataset kind {other:?}")),
        }
    }
}

/// The four published dataset configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    SyntheticCompanies,
    SyntheticSecurities,
    RealCompanies,
    RealSecurities,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::SyntheticCompanies, Preset::SyntheticSecurities, Preset::RealCompanies, Preset::RealSecurities];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SyntheticCompanies => "synthetic-companies",
            Preset::SyntheticSecurities => "synthetic-securities",
            Preset::RealCompanies => "real-companies",
            Preset::RealSecurities => "real-securities",
        }
    }

    pub fn kind(self) -> DatasetKind {
        match self {
            Preset::SyntheticCompanies | Preset::RealCompanies => DatasetKind::Companies,
            Preset::SyntheticSecurities | Preset::RealSecurities => DatasetKind::Securities,
        }
    }

    pub fn blockings(self) -> Vec<BlockingKind> {
        match self.kind() {
            DatasetKind::Companies => vec![BlockingKind::IdOverlap, BlockingKind::TokenOverlap],
            DatasetKind::Securities => vec![BlockingKind::IdOverlap, BlockingKind::IssuerMatch],
        }
    }

    /// `(gamma, mu)`.
    pub fn thresholds(self) -> (usize, usize) {
        match self {
            Preset::SyntheticCompanies | Preset::SyntheticSecurities => (25, 5),
            Preset::RealCompanies | Preset::RealSecurities => (40, 8),
        }
    }

    pub fn cleanup_params(self) -> CleanupParams {
        let (gamma, mu) = self.thresholds();
        CleanupParams { gamma: Gamma::Bounded(gamma), mu, pre_cleanup_limit: DEFAULT_PRE_CLEANUP_LIMIT }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kind: DatasetKind,
    pub blockings: Vec<BlockingKind>,
    pub matcher: MatcherSpec,
    pub cleanup: CleanupParams,
    pub token_top_n: usize,
    pub singleton_purity: SingletonPurity,
}

impl PipelineConfig {
    pub fn from_preset(preset: Preset, matcher: MatcherSpec) -> Self {
        PipelineConfig {
            kind: preset.kind(),
            blockings: preset.blockings(),
            matcher,
            cleanup: preset.cleanup_params(),
            token_top_n: blocking::DEFAULT_TOKEN_TOP_N,
            singleton_purity: SingletonPurity::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.blockings.is_empty() {
            return Err(PipelineError::Config("at least one blocking is required".into()));
        }
        self.cleanup.validate()?;
        Ok(())
    }

    /// Token-only edges are pruned for company data blocked by token overlap.
    pub fn applies_pre_cleanup(&self) -> bool {
        self.kind == DatasetKind::Companies && self.blockings.contains(&BlockingKind::TokenOverlap)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineInput<'a> {
    pub companies: &'a [CompanyRecord],
    pub securities: &'a [SecurityRecord],
    /// Company groups consumed by the issuer-match blocking.
    pub company_groups: Option<&'a [Vec<RecordId>]>,
    pub truth: Option<&'a GroundTruth>,
}

impl PipelineInput<'_> {
    fn record_ids(&self, kind: DatasetKind) -> Vec<RecordId> {
        match kind {
            DatasetKind::Companies => self.companies.iter().map(|c| c.id.clone()).collect(),
            DatasetKind::Securities => self.securities.iter().map(|s| s.id.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub candidates: Vec<CandidatePair>,
    pub predictions: Vec<Prediction>,
    pub import: Option<ImportedPredictions>,
    pub pre_cleanup: PreCleanupReport,
    /// Components of the raw prediction graph, before any cleanup.
    pub pre_components: Vec<Vec<RecordId>>,
    pub cleanup: CleanupOutcome,
    /// Pairwise, pre-cleanup and post-cleanup scores when truth was given.
    pub scores: Vec<StageScores>,
}

impl PipelineOutput {
    pub fn score(&self, stage: Stage) -> Option<&StageScores> {
        self.scores.iter().find(|s| s.stage == stage)
    }
}

/// Runs the configured blockings and merges their candidates.
pub fn block(
    kind: DatasetKind,
    blockings: &[BlockingKind],
    input: &PipelineInput<'_>,
    token_top_n: usize,
) -> Result<Vec<CandidatePair>, PipelineError> {
    let mut lists = Vec::new();
    for &b in blockings {
        let list = match (kind, b) {
            (DatasetKind::Companies, BlockingKind::IdOverlap) => {
                if input.securities.is_empty() {
                    log::warn!("no securities supplied; skipping IdOverlap for companies");
                    Vec::new()
                } else {
                    blocking::id_overlap_companies(input.companies, input.securities)?
                }
            }
            (DatasetKind::Securities, BlockingKind::IdOverlap) => blocking::id_overlap_securities(input.securities),
            (DatasetKind::Companies, BlockingKind::TokenOverlap) => {
                blocking::token_overlap(input.companies, token_top_n)?
            }
            (DatasetKind::Securities, BlockingKind::TokenOverlap) => {
                blocking::token_overlap(input.securities, token_top_n)?
            }
            (DatasetKind::Securities, BlockingKind::IssuerMatch) => {
                let groups = input
                    .company_groups
                    .ok_or_else(|| PipelineError::Config("IssuerMatch needs company groups".into()))?;
                let out = blocking::issuer_match(input.securities, groups);
                if out.skipped > 0 {
                    log::warn!("{} securities have an issuer outside the company groups", out.skipped);
                }
                out.candidates
            }
            (DatasetKind::Companies, BlockingKind::IssuerMatch) => {
                return Err(PipelineError::Config("IssuerMatch applies to securities only".into()))
            }
        };
        log::info!("{b}: {} candidate pairs", list.len());
        lists.push(list);
    }
    Ok(blocking::merge_candidates(lists))
}

/// Scores candidates with the configured matcher, or imports them.
pub fn predict(
    spec: &MatcherSpec,
    candidates: &[CandidatePair],
    input: &PipelineInput<'_>,
) -> Result<(Vec<Prediction>, Option<ImportedPredictions>), PipelineError> {
    match spec {
        MatcherSpec::External { predictions_path } => {
            let imported = matcher::import_predictions(io::open(predictions_path)?, candidates)?;
            Ok((imported.predictions.clone(), Some(imported)))
        }
        _ => {
            let m = Matcher::new(spec.clone(), input.companies, input.securities)?;
            Ok((m.predict_all(candidates)?, None))
        }
    }
}

/// Runs everything from an existing candidate set onwards.
pub fn run_from_candidates(
    config: &PipelineConfig,
    input: &PipelineInput<'_>,
    candidates: Vec<CandidatePair>,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let (predictions, import) = predict(&config.matcher, &candidates, input)?;
    let mut graph = cleanup::build_graph(&predictions, input.record_ids(config.kind))?;
    let pre_components = graph.connected_components();
    let pre_cleanup = if config.applies_pre_cleanup() {
        cleanup::pre_cleanup(&mut graph, config.cleanup.pre_cleanup_limit)
    } else {
        PreCleanupReport::default()
    };
    let outcome = cleanup::graph_cleanup(&graph, &config.cleanup);
    log::info!(
        "cleanup removed {} edges; {} components, largest {}",
        outcome.removed.len(),
        outcome.components.len(),
        outcome.components.iter().map(Vec::len).max().unwrap_or(0)
    );

    let scores = match input.truth {
        Some(truth) => {
            let positives: Vec<&RecordPair> = predictions
                .iter()
                .filter(|p| p.label.is_match())
                .map(|p| &p.pair)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            vec![
                metrics::pairwise_scores(positives, truth),
                metrics::group_scores(&pre_components, truth, Stage::PreCleanup, config.singleton_purity),
                metrics::group_scores(&outcome.components, truth, Stage::PostCleanup, config.singleton_purity),
            ]
        }
        None => Vec::new(),
    };
    Ok(PipelineOutput { candidates, predictions, import, pre_cleanup, pre_components, cleanup: outcome, scores })
}

/// Block, match, clean up and (with truth) evaluate.
pub fn run(config: &PipelineConfig, input: &PipelineInput<'_>) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let candidates = block(config.kind, &config.blockings, input, config.token_top_n)?;
    run_from_candidates(config, input, candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("synthetic".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_values() {
        let c = PipelineConfig::from_preset(Preset::SyntheticCompanies, MatcherSpec::ExactId);
        assert_eq!(c.blockings, [BlockingKind::IdOverlap, BlockingKind::TokenOverlap]);
        assert_eq!((c.cleanup.gamma, c.cleanup.mu), (Gamma::Bounded(25), 5));
        assert!(c.applies_pre_cleanup());
        let s = PipelineConfig::from_preset(Preset::RealSecurities, MatcherSpec::ExactId);
        assert_eq!(s.blockings, [BlockingKind::IdOverlap, BlockingKind::IssuerMatch]);
        assert_eq!((s.cleanup.gamma, s.cleanup.mu), (Gamma::Bounded(40), 8));
        assert!(!s.applies_pre_cleanup());
        assert_eq!(Preset::RealCompanies.cleanup_params().gamma.halved(), Gamma::Bounded(20));
    }

    #[test]
    fn empty_blockings_rejected() {
        let mut c = PipelineConfig::from_preset(Preset::SyntheticCompanies, MatcherSpec::ExactId);
        c.blockings.clear();
        assert!(matches!(run(&c, &PipelineInput::default()), Err(PipelineError::Config(_))));
    }

    #[test]
    fn issuer_match_needs_groups() {
        let c = PipelineConfig::from_preset(Preset::SyntheticSecurities, MatcherSpec::ExactId);
        assert!(matches!(run(&c, &PipelineInput::default()), Err(PipelineError::Config(_))));
    }
}
