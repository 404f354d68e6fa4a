//! The JSON pipeline configuration shared by every subcommand.
//!
//! Every section is optional in the file; missing fields take the defaults
//! shown by `PipelineConfig::default()`. Unknown fields are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{InputFormat, PostField};
use crate::detector::DetectionConfig;
use crate::error::{Error, Result};
use crate::graph::DegreeComparator;
use crate::keys::{KeyKind, NormalizationConfig};
use crate::synth::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordFilter {
    pub keywords: Vec<String>,
    #[serde(default = "default_keyword_fields")]
    pub fields: BTreeSet<PostField>,
}

fn default_keyword_fields() -> BTreeSet<PostField> {
    PostField::TEXT_FIELDS.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    pub format: InputFormat,
    pub keyword_filter: Option<KeywordFilter>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            format: InputFormat::Jsonl,
            keyword_filter: None,
        }
    }
}

/// Replaces the fixed window with a quantile of first-to-second share gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdEstimation {
    pub enabled: bool,
    pub quantile: f64,
    pub kinds: BTreeSet<KeyKind>,
}

impl Default for ThresholdEstimation {
    fn default() -> Self {
        ThresholdEstimation {
            enabled: false,
            quantile: 0.10,
            kinds: [KeyKind::Url].into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphOptions {
    /// Weighted-degree threshold for the displayed graph.
    pub min_degree: u64,
    pub comparator: DegreeComparator,
    /// Repeat the degree filter until no vertex falls below the threshold.
    pub iterative: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            min_degree: 100,
            comparator: DegreeComparator::AtLeast,
            iterative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityOptions {
    pub resolution: f64,
    pub seed: u64,
    pub best_of_k: usize,
}

impl Default for CommunityOptions {
    fn default() -> Self {
        CommunityOptions {
            resolution: 1.0,
            seed: 0,
            best_of_k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub output_dir: Option<PathBuf>,
    pub top_n: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            output_dir: None,
            top_n: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ingest: IngestOptions,
    pub normalization: NormalizationConfig,
    pub detection: DetectionConfig,
    pub threshold_estimation: ThresholdEstimation,
    pub graph: GraphOptions,
    pub communities: CommunityOptions,
    pub report: ReportOptions,
    pub scenario: Option<ScenarioConfig>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        PipelineConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.normalization.validate()?;
        self.detection.validate()?;
        if let Some(filter) = &self.ingest.keyword_filter {
            if filter.keywords.iter().all(|k| k.trim().is_empty()) {
                return Err(Error::config("keyword_filter.keywords is empty"));
            }
            if filter.fields.is_empty() {
                return Err(Error::config("keyword_filter.fields is empty"));
            }
        }
        let q = self.threshold_estimation.quantile;
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::config(format!("threshold_estimation.quantile {q} is outside (0, 1]")));
        }
        if self.threshold_estimation.kinds.is_empty() {
            return Err(Error::config("threshold_estimation.kinds is empty"));
        }
        let r = self.communities.resolution;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::config(format!("communities.resolution {r} must be positive")));
        }
        if self.communities.best_of_k == 0 {
            return Err(Error::config("communities.best_of_k must be at least 1"));
        }
        if self.report.top_n == 0 {
            return Err(Error::config("report.top_n must be at least 1"));
        }
        if let Some(scenario) = &self.scenario {
            scenario.validate()?;
        }
        Ok(())
    }

    /// Canonical JSON form, used for the summary echo and the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
