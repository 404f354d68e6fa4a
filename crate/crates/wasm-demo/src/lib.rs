//! Browser bindings for the demo page in `www/`. The exported functions take
//! and return JSON strings; the plain-Rust versions below them carry the
//! logic and are what the native tests call.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use coordnet::communities::louvain;
use coordnet::detector::{
    build_share_index, detect_all, detect_chains, interpolated_quantile, DetectionConfig, Share,
};
use coordnet::graph::{build_graph, clustering, filter_by_weighted_degree, DegreeComparator};
use coordnet::keys::{ContentKey, KeyKind, NormalizationConfig};
use coordnet::synth::{evaluate_detection, generate_corpus, CampaignConfig, OrganicConfig, ScenarioConfig};

#[derive(Debug, Deserialize)]
pub struct StreamShare {
    pub group: String,
    pub t: i64,
}

#[derive(Debug, Serialize)]
pub struct StreamChain {
    /// Indices into the input array.
    pub members: Vec<usize>,
    pub start: i64,
    pub span_seconds: i64,
    pub groups: usize,
}

/// Chains in one share stream (`[{"group": "A", "t": 10}, ...]`, any order).
pub fn chains_for_stream(
    shares_json: &str,
    window_seconds: u64,
    min_shares: usize,
    min_groups: usize,
) -> Result<String, String> {
    let input: Vec<StreamShare> = serde_json::from_str(shares_json).map_err(|e| e.to_string())?;
    if input.iter().any(|s| s.t < 0) {
        return Err("timestamps must be non-negative".into());
    }
    let config = DetectionConfig {
        window_seconds,
        min_chain_shares: min_shares,
        min_distinct_groups: min_groups,
    };
    config.validate().map_err(|e| e.to_string())?;

    // post ids encode the input index so chains map back to it
    let key = ContentKey {
        kind: KeyKind::Url,
        value: "demo".into(),
    };
    let mut shares: Vec<Share> = input
        .iter()
        .enumerate()
        .map(|(i, s)| Share {
            key: key.clone(),
            post_id: format!("{i:08}"),
            group_id: s.group.clone(),
            timestamp: s.t,
        })
        .collect();
    shares.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));
    let chains = detect_chains(&shares, &config).map_err(|e| e.to_string())?;
    let out: Vec<StreamChain> = chains
        .iter()
        .map(|c| StreamChain {
            members: c.shares.iter().map(|s| s.post_id.parse().unwrap()).collect(),
            start: c.first_timestamp(),
            span_seconds: c.span_seconds,
            groups: c.groups.len(),
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct NetworkParams {
    pub seed: u64,
    pub n_groups: usize,
    pub organic_posts: usize,
    pub campaigns: usize,
    pub campaign_groups: usize,
    pub burst_interval_seconds: u64,
    pub window_seconds: u64,
    pub min_degree: u64,
    pub resolution: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            seed: 7,
            n_groups: 120,
            organic_posts: 1500,
            campaigns: 3,
            campaign_groups: 10,
            burst_interval_seconds: 5,
            window_seconds: 30,
            min_degree: 20,
            resolution: 1.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DemoNode {
    pub id: String,
    pub community: usize,
    pub weighted_degree: u64,
    pub clustering: f64,
    /// Campaign the group was planted in, if any.
    pub campaign: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct DemoNetwork {
    pub posts: usize,
    pub chains: usize,
    pub precision: f64,
    pub recall: f64,
    pub modularity: Option<f64>,
    pub nodes: Vec<DemoNode>,
    pub edges: Vec<(usize, usize, u64)>,
}

/// Generates a corpus, detects chains and partitions the filtered graph.
pub fn network_for(params_json: &str) -> Result<String, String> {
    let params: NetworkParams = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    if params.n_groups > 2000 || params.organic_posts > 50_000 {
        return Err("keep the demo below 2000 groups and 50000 posts".into());
    }
    let scenario = ScenarioConfig {
        seed: params.seed,
        n_groups: params.n_groups,
        organic: OrganicConfig {
            n_posts: params.organic_posts,
            key_reuse_probability: 0.3,
            min_reuse_gap_seconds: 0,
        },
        campaigns: (0..params.campaigns)
            .map(|_| CampaignConfig {
                n_groups: params.campaign_groups,
                n_keys: 8,
                shares_per_key: params.campaign_groups,
                burst_interval_seconds: params.burst_interval_seconds,
                jitter_seconds: params.burst_interval_seconds / 2,
            })
            .collect(),
        ..ScenarioConfig::default()
    };
    let (posts, truth) = generate_corpus(&scenario).map_err(|e| e.to_string())?;
    let detection = DetectionConfig {
        window_seconds: params.window_seconds,
        ..DetectionConfig::default()
    };
    detection.validate().map_err(|e| e.to_string())?;
    let index = build_share_index(&posts, &NormalizationConfig::default());
    let chains = detect_all(&index, &detection).map_err(|e| e.to_string())?;
    let score = evaluate_detection(&chains, &truth);
    let graph = filter_by_weighted_degree(
        &build_graph(&chains),
        params.min_degree,
        DegreeComparator::AtLeast,
        true,
    );

    let mut network = DemoNetwork {
        posts: posts.len(),
        chains: chains.len(),
        precision: score.precision,
        recall: score.recall,
        modularity: None,
        nodes: Vec::new(),
        edges: graph.edges().collect(),
    };
    if graph.is_empty() {
        return serde_json::to_string(&network).map_err(|e| e.to_string());
    }
    let assignment = louvain(&graph, params.resolution, params.seed).map_err(|e| e.to_string())?;
    let metrics = clustering(&graph, None);
    network.modularity = Some(assignment.modularity);
    network.nodes = graph
        .vertices()
        .iter()
        .map(|v| DemoNode {
            id: v.group_id.clone(),
            community: assignment.membership[&v.group_id],
            weighted_degree: metrics.weighted_degree[&v.group_id],
            clustering: metrics.local_clustering[&v.group_id],
            campaign: truth
                .campaigns
                .iter()
                .find(|c| c.groups.contains(&v.group_id))
                .map(|c| c.campaign_id),
        })
        .collect();
    serde_json::to_string(&network).map_err(|e| e.to_string())
}

/// Linear-interpolation quantile of first-to-second share gaps, in seconds.
pub fn quantile_of_gaps(gaps_json: &str, q: f64) -> Result<f64, String> {
    let mut gaps: Vec<f64> = serde_json::from_str(gaps_json).map_err(|e| e.to_string())?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(format!("quantile must be in (0, 1], got {q}"));
    }
    if gaps.is_empty() || gaps.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err("need at least one non-negative gap".into());
    }
    gaps.sort_by(f64::total_cmp);
    Ok(interpolated_quantile(&gaps, q))
}

/// Distinct groups in a stream, for the page's legend.
pub fn stream_groups(shares_json: &str) -> Result<usize, String> {
    let input: Vec<StreamShare> = serde_json::from_str(shares_json).map_err(|e| e.to_string())?;
    Ok(input.iter().map(|s| s.group.as_str()).collect::<BTreeSet<_>>().len())
}

#[wasm_bindgen(js_name = detectStream)]
pub fn detect_stream(
    shares_json: &str,
    window_seconds: u32,
    min_shares: u32,
    min_groups: u32,
) -> Result<String, JsError> {
    chains_for_stream(shares_json, window_seconds.into(), min_shares as usize, min_groups as usize)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateNetwork)]
pub fn simulate_network(params_json: &str) -> Result<String, JsError> {
    network_for(params_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = estimateThreshold)]
pub fn estimate_threshold(gaps_json: &str, q: f64) -> Result<f64, JsError> {
    quantile_of_gaps(gaps_json, q).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = countGroups)]
pub fn count_groups(shares_json: &str) -> Result<usize, JsError> {
    stream_groups(shares_json).map_err(|e| JsError::new(&e))
}
