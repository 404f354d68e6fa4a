//! Stage orchestration. Every stage reads the previous stage's files from a
//! working directory and writes its own, so `run` and a manual sequence of
//! subcommands produce the same bytes.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::communities::{louvain_best_of, write_assignment_csv, CommunityAssignment};
use crate::config::PipelineConfig;
use crate::corpus::{
    deduplicate, filter_by_keywords, parse_posts, write_posts_jsonl, CorpusStats, MediaType,
    ParseError, Post,
};
use crate::detector::{
    build_share_index, detect_all, estimate_threshold_quantile, read_chains_jsonl,
    write_chains_jsonl, DetectionConfig,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, filter_by_weighted_degree, read_graph_csv, write_edges_csv, write_vertices_csv};
use crate::keys::KeyKind;
use crate::report::{
    export_gexf_file, summary_report, top_narratives, write_atomically, RunArtifacts, Summary,
};
use crate::synth::{
    evaluate_detection, generate_corpus, write_ground_truth_jsonl, DetectionScore, ScenarioConfig,
};

pub const POSTS: &str = "posts.jsonl";
pub const INGEST: &str = "ingest.json";
pub const CHAINS: &str = "chains.jsonl";
pub const DETECT: &str = "detect.json";
pub const VERTICES: &str = "vertices.csv";
pub const EDGES: &str = "edges.csv";
pub const COMMUNITIES_CSV: &str = "communities.csv";
pub const COMMUNITIES_JSON: &str = "communities.json";
pub const GEXF: &str = "graph.gexf";
pub const NARRATIVES: &str = "narratives.json";
pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";
pub const CORPUS: &str = "corpus.jsonl";
pub const GROUND_TRUTH: &str = "ground_truth.jsonl";
pub const EVALUATION: &str = "evaluation.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub stats: CorpusStats,
    /// Posts dropped by the keyword filter after de-duplication.
    pub keyword_filtered_out: u64,
    pub parse_errors: Vec<ParseError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub window_seconds: u64,
    pub estimated_threshold: Option<f64>,
    /// Distinct content keys per kind.
    pub key_counts: BTreeMap<KeyKind, u64>,
    pub chains: u64,
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_atomically(&dir.join(name), |file| {
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T> {
    let file = open(dir, name)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn open(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::open(&path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e} (run the earlier stage first?)", path.display()),
        ))
    })
}

fn write_with<F>(dir: &Path, name: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut fs::File>) -> Result<()>,
{
    write_atomically(&dir.join(name), |file| {
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

pub fn read_posts(dir: &Path) -> Result<Vec<Post>> {
    let parsed = parse_posts(BufReader::new(open(dir, POSTS)?), crate::corpus::InputFormat::Jsonl)?;
    if let Some(err) = parsed.errors.first() {
        return Err(Error::format("posts.jsonl", err));
    }
    Ok(parsed.posts)
}

/// Parses, de-duplicates and keyword-filters `input` into `posts.jsonl`.
pub fn ingest_stage(config: &PipelineConfig, input: &Path, dir: &Path) -> Result<IngestReport> {
    let file = fs::File::open(input).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", input.display())))
    })?;
    let parsed = parse_posts(BufReader::new(file), config.ingest.format)?;
    for err in parsed.errors.iter().take(20) {
        warn!("skipping record: {err}");
    }
    if parsed.errors.len() > 20 {
        warn!("{} more malformed records skipped", parsed.errors.len() - 20);
    }
    finish_ingest(config, parsed.posts, parsed.stats, parsed.errors, dir)
}

/// Ingest for posts already in memory, such as a generated corpus.
pub fn ingest_posts(config: &PipelineConfig, posts: Vec<Post>, dir: &Path) -> Result<IngestReport> {
    let stats = CorpusStats::from_posts(&posts);
    finish_ingest(config, posts, stats, Vec::new(), dir)
}

fn finish_ingest(
    config: &PipelineConfig,
    posts: Vec<Post>,
    mut stats: CorpusStats,
    parse_errors: Vec<ParseError>,
    dir: &Path,
) -> Result<IngestReport> {
    let (posts, removed) = deduplicate(posts);
    stats.record_dedup(removed, &posts);
    let before = posts.len();
    let posts = match &config.ingest.keyword_filter {
        Some(filter) => filter_by_keywords(posts, &filter.keywords, &filter.fields)?,
        None => posts,
    };
    let report = IngestReport {
        stats,
        keyword_filtered_out: (before - posts.len()) as u64,
        parse_errors,
    };
    info!(
        "ingest: {} records, {} unique posts, {} duplicates, {} parse failures",
        stats.records_read, stats.unique_posts, stats.duplicates_removed, stats.parse_failures
    );
    write_with(dir, POSTS, |w| write_posts_jsonl(&posts, w))?;
    write_json(dir, INGEST, &report)?;
    Ok(report)
}

/// Builds the share index from `posts.jsonl` and writes `chains.jsonl`.
pub fn detect_stage(config: &PipelineConfig, dir: &Path) -> Result<DetectReport> {
    let posts = read_posts(dir)?;
    let index = build_share_index(&posts, &config.normalization);
    let mut key_counts: BTreeMap<KeyKind, u64> = KeyKind::ALL.iter().map(|k| (*k, 0)).collect();
    for key in index.keys() {
        *key_counts.entry(key.kind).or_default() += 1;
    }

    let mut detection = config.detection.clone();
    let mut estimated = None;
    let estimation = &config.threshold_estimation;
    if estimation.enabled {
        let seconds = estimate_threshold_quantile(&index, estimation.quantile, &estimation.kinds)?;
        detection = DetectionConfig {
            window_seconds: (seconds.ceil() as u64).max(1),
            ..detection
        };
        estimated = Some(seconds);
        info!(
            "estimated window: {seconds:.3}s ({} quantile), using {}s",
            estimation.quantile, detection.window_seconds
        );
    }
    let chains = detect_all(&index, &detection)?;
    if chains.is_empty() {
        warn!("no coordination chains found");
    }
    info!("detect: {} keys, {} chains", index.len(), chains.len());
    write_with(dir, CHAINS, |w| write_chains_jsonl(&chains, w))?;
    let report = DetectReport {
        window_seconds: detection.window_seconds,
        estimated_threshold: estimated,
        key_counts,
        chains: chains.len() as u64,
    };
    write_json(dir, DETECT, &report)?;
    Ok(report)
}

fn group_names(posts: &[Post]) -> HashMap<String, String> {
    posts
        .iter()
        .map(|p| (p.group_id.clone(), p.group_name.clone()))
        .collect()
}

/// Builds the group graph from `chains.jsonl`, applies the degree filter and
/// writes `vertices.csv` and `edges.csv` for the filtered graph.
pub fn graph_stage(config: &PipelineConfig, dir: &Path) -> Result<crate::graph::GroupGraph> {
    let chains = read_chains_jsonl(BufReader::new(open(dir, CHAINS)?))?;
    let posts = read_posts(dir)?;
    let mut graph = build_graph(&chains);
    graph.apply_group_names(&group_names(&posts));
    let options = &config.graph;
    let filtered =
        filter_by_weighted_degree(&graph, options.min_degree, options.comparator, options.iterative);
    info!(
        "graph: {} groups / {} edges, {} groups after degree filter",
        graph.vertex_count(),
        graph.edge_count(),
        filtered.vertex_count()
    );
    if filtered.is_empty() && !graph.is_empty() {
        warn!(
            "no group reaches weighted degree {} (largest is {})",
            options.min_degree,
            (0..graph.vertex_count()).map(|i| graph.weighted_degree(i)).max().unwrap_or(0)
        );
    }
    write_with(dir, VERTICES, |w| write_vertices_csv(&filtered, w))?;
    write_with(dir, EDGES, |w| write_edges_csv(&filtered, w))?;
    Ok(filtered)
}

fn read_filtered_graph(dir: &Path) -> Result<crate::graph::GroupGraph> {
    read_graph_csv(BufReader::new(open(dir, VERTICES)?), BufReader::new(open(dir, EDGES)?))
}

/// Louvain over the filtered graph; writes `communities.csv` and
/// `communities.json` (`null` when the graph is empty).
pub fn communities_stage(config: &PipelineConfig, dir: &Path) -> Result<Option<CommunityAssignment>> {
    let graph = read_filtered_graph(dir)?;
    let options = &config.communities;
    let assignment = if graph.is_empty() {
        warn!("graph is empty; skipping community detection");
        None
    } else {
        let a = louvain_best_of(&graph, options.resolution, options.seed, options.best_of_k)?;
        info!(
            "communities: {} found, modularity {:.4} (seed {})",
            a.communities.len(),
            a.modularity,
            a.seed
        );
        Some(a)
    };
    write_with(dir, COMMUNITIES_CSV, |w| match &assignment {
        Some(a) => write_assignment_csv(a, w),
        None => {
            w.write_all(b"group_id,community_id\n")?;
            Ok(())
        }
    })?;
    write_json(dir, COMMUNITIES_JSON, &assignment)?;
    Ok(assignment)
}

/// Writes `graph.gexf` (omitted for an empty graph), `narratives.json` and
/// `summary.json` from the files of the earlier stages.
pub fn report_stage(config: &PipelineConfig, dir: &Path) -> Result<Summary> {
    let ingest: IngestReport = read_json(dir, INGEST)?;
    let detect: DetectReport = read_json(dir, DETECT)?;
    let posts = read_posts(dir)?;
    let chains = read_chains_jsonl(BufReader::new(open(dir, CHAINS)?))?;
    let filtered = read_filtered_graph(dir)?;
    let assignment: Option<CommunityAssignment> = read_json(dir, COMMUNITIES_JSON)?;
    let graph = build_graph(&chains);

    let gexf = dir.join(GEXF);
    if filtered.is_empty() {
        if gexf.exists() {
            fs::remove_file(&gexf)?;
        }
    } else {
        export_gexf_file(&filtered, assignment.as_ref(), &gexf)?;
    }

    let media: HashMap<String, MediaType> = posts
        .iter()
        .map(|p| (p.post_id.clone(), p.media_type))
        .collect();
    let narratives = top_narratives(&chains, config.report.top_n, &media)?;
    write_json(dir, NARRATIVES, &narratives)?;

    let summary = summary_report(RunArtifacts {
        stats: &ingest.stats,
        key_counts: &detect.key_counts,
        chains: &chains,
        graph: &graph,
        filtered: &filtered,
        assignment: assignment.as_ref(),
        config: serde_json::to_value(config)?,
    });
    write_json(dir, SUMMARY, &summary)?;
    Ok(summary)
}

/// Writes `corpus.jsonl` and `ground_truth.jsonl` for a scenario.
pub fn simulate_stage(scenario: &ScenarioConfig, dir: &Path) -> Result<(Vec<Post>, crate::synth::GroundTruth)> {
    let (posts, truth) = generate_corpus(scenario)?;
    write_with(dir, CORPUS, |w| write_posts_jsonl(&posts, w))?;
    write_with(dir, GROUND_TRUTH, |w| write_ground_truth_jsonl(&truth, w))?;
    info!("simulate: {} posts, {} campaigns", posts.len(), truth.campaigns.len());
    Ok((posts, truth))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    File(PathBuf),
    Synthetic,
}

impl InputSource {
    pub fn parse(raw: &str) -> InputSource {
        if raw == "synthetic" {
            InputSource::Synthetic
        } else {
            InputSource::File(PathBuf::from(raw))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct StageTiming {
    stage: &'static str,
    millis: u128,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    input: String,
    input_sha256: String,
    config_sha256: String,
    stages: Vec<StageTiming>,
    outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub score: Option<DetectionScore>,
    /// True when no coordination chain was found.
    pub empty: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs every stage into a staging directory under `output_dir` and moves
/// the results into place only after all stages succeeded.
pub fn run_pipeline(config: &PipelineConfig, input: &InputSource, output_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let (input_label, input_bytes) = match input {
        InputSource::File(path) => {
            let bytes = fs::read(path).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
            })?;
            (path.display().to_string(), bytes)
        }
        InputSource::Synthetic => {
            let scenario = config.scenario.as_ref().ok_or_else(|| {
                Error::config("input is \"synthetic\" but the config has no scenario")
            })?;
            ("synthetic".to_string(), serde_json::to_vec(scenario)?)
        }
    };

    let created = !output_dir.exists();
    fs::create_dir_all(output_dir)?;
    let staging = tempfile::Builder::new()
        .prefix(".coordnet-staging-")
        .tempdir_in(output_dir)?;
    let result = run_stages(config, input, staging.path());
    let (outcome, timings) = match result {
        Ok(done) => done,
        Err(err) => {
            drop(staging);
            if created {
                let _ = fs::remove_dir(output_dir);
            }
            return Err(err);
        }
    };

    let mut outputs: Vec<String> = fs::read_dir(staging.path())?
        .map(|entry| entry.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    outputs.sort();
    let manifest = Manifest {
        tool: "coordnet",
        version: env!("CARGO_PKG_VERSION"),
        input: input_label,
        input_sha256: sha256_hex(&input_bytes),
        config_sha256: sha256_hex(config.canonical_json().as_bytes()),
        stages: timings,
        outputs: outputs.clone(),
    };
    write_json(staging.path(), MANIFEST, &manifest)?;
    outputs.push(MANIFEST.to_string());

    if !outputs.iter().any(|o| o == GEXF) {
        let stale = output_dir.join(GEXF);
        if stale.exists() {
            fs::remove_file(stale)?;
        }
    }
    for name in &outputs {
        fs::rename(staging.path().join(name), output_dir.join(name))?;
    }
    Ok(outcome)
}

fn run_stages(
    config: &PipelineConfig,
    input: &InputSource,
    dir: &Path,
) -> Result<(RunOutcome, Vec<StageTiming>)> {
    let mut timings = Vec::new();
    let mut timed = |stage: &'static str, started: Instant| {
        timings.push(StageTiming {
            stage,
            millis: started.elapsed().as_millis(),
        })
    };

    let started = Instant::now();
    let truth = match input {
        InputSource::File(path) => {
            ingest_stage(config, path, dir)?;
            None
        }
        InputSource::Synthetic => {
            let scenario = config.scenario.as_ref().expect("checked by run_pipeline");
            let (posts, truth) = simulate_stage(scenario, dir)?;
            ingest_posts(config, posts, dir)?;
            Some(truth)
        }
    };
    timed("ingest", started);

    let started = Instant::now();
    let detect = detect_stage(config, dir)?;
    timed("detect", started);

    let started = Instant::now();
    graph_stage(config, dir)?;
    timed("graph", started);

    let started = Instant::now();
    communities_stage(config, dir)?;
    timed("communities", started);

    let started = Instant::now();
    let summary = report_stage(config, dir)?;
    timed("report", started);

    let score = match truth {
        Some(truth) => {
            let chains = read_chains_jsonl(BufReader::new(open(dir, CHAINS)?))?;
            let score = evaluate_detection(&chains, &truth);
            write_json(dir, EVALUATION, &score)?;
            info!(
                "evaluation: precision {:.4}, recall {:.4}, f1 {:.4}",
                score.precision, score.recall, score.f1
            );
            Some(score)
        }
        None => None,
    };

    Ok((
        RunOutcome {
            summary,
            score,
            empty: detect.chains == 0,
        },
        timings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::CampaignConfig;

    fn scenario() -> ScenarioConfig {
        ScenarioConfig {
            n_groups: 30,
            organic: crate::synth::OrganicConfig {
                n_posts: 50,
                key_reuse_probability: 0.0,
                min_reuse_gap_seconds: 0,
            },
            campaigns: vec![CampaignConfig {
                n_groups: 4,
                n_keys: 3,
                shares_per_key: 4,
                burst_interval_seconds: 5,
                jitter_seconds: 0,
            }],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn failed_stage_leaves_no_output_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("out");
        let mut config = PipelineConfig {
            scenario: Some(scenario()),
            ..PipelineConfig::default()
        };
        // no URL is shared twice (one message-only campaign key), so estimation fails mid-run
        config.threshold_estimation.enabled = true;
        config.threshold_estimation.kinds = [KeyKind::Url].into_iter().collect();
        config.scenario.as_mut().unwrap().campaigns[0].n_keys = 1;
        let err = run_pipeline(&config, &InputSource::Synthetic, &out).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)), "{err}");
        assert!(!out.exists());
    }

    #[test]
    fn failed_rerun_keeps_previous_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("out");
        let config = PipelineConfig {
            scenario: Some(scenario()),
            graph: crate::config::GraphOptions {
                min_degree: 1,
                ..Default::default()
            },
            ..PipelineConfig::default()
        };
        run_pipeline(&config, &InputSource::Synthetic, &out).unwrap();
        let before = fs::read(out.join(SUMMARY)).unwrap();
        let err = run_pipeline(&config, &InputSource::File(tmp.path().join("missing")), &out);
        assert!(matches!(err, Err(Error::Io(_))));
        assert_eq!(fs::read(out.join(SUMMARY)).unwrap(), before);
        let names: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
    }
}
