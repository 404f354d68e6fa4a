//! Acceptance suite. Each criterion runs against an oracle written here,
//! independent of the library code it checks, and prints one PASS/FAIL line.
//! The process exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coordnet::communities::{louvain, modularity, CommunityAssignment};
use coordnet::config::PipelineConfig;
use coordnet::corpus::{deduplicate, parse_posts, InputFormat, MediaType, Post};
use coordnet::detector::{
    build_share_index, detect_all, detect_chains, estimate_threshold_quantile,
    read_chains_jsonl, CoordinationChain, DetectionConfig, Share,
};
use coordnet::graph::{build_graph, local_clustering, read_graph_csv, GroupGraph, Vertex};
use coordnet::keys::{ContentKey, KeyKind, NormalizationConfig};
use coordnet::pipeline::{self, InputSource};
use coordnet::report::parse_gexf;
use coordnet::synth::{read_ground_truth_jsonl, CampaignConfig, OrganicConfig, ScenarioConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. windowing

fn key(value: &str) -> ContentKey {
    ContentKey {
        kind: KeyKind::Url,
        value: value.to_string(),
    }
}

/// Chains as the connected components of "within `window` of each other"
/// over all pairs, found by repeated pairwise merging.
fn brute_force_chains(
    shares: &[Share],
    window: i64,
    min_shares: usize,
    min_groups: usize,
) -> Vec<(Vec<String>, i64, BTreeSet<String>)> {
    let n = shares.len();
    let mut component: Vec<usize> = (0..n).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if (shares[i].timestamp - shares[j].timestamp).abs() <= window
                    && component[i] != component[j]
                {
                    let (lo, hi) = if component[i] < component[j] {
                        (component[i], component[j])
                    } else {
                        (component[j], component[i])
                    };
                    for c in component.iter_mut() {
                        if *c == hi {
                            *c = lo;
                        }
                    }
                    changed = true;
                }
            }
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in component.iter().enumerate() {
        members.entry(*c).or_default().push(i);
    }
    let mut chains = Vec::new();
    for idx in members.values() {
        let groups: BTreeSet<String> = idx.iter().map(|&i| shares[i].group_id.clone()).collect();
        if idx.len() < min_shares || groups.len() < min_groups {
            continue;
        }
        let min = idx.iter().map(|&i| shares[i].timestamp).min().unwrap();
        let max = idx.iter().map(|&i| shares[i].timestamp).max().unwrap();
        let posts: Vec<String> = idx.iter().map(|&i| shares[i].post_id.clone()).collect();
        chains.push((posts, max - min, groups));
    }
    chains.sort_by_key(|c| c.0[0].clone());
    chains
}

fn criterion_windowing() -> Outcome {
    let windows = [1u64, 30, 60];
    let mut total_chains = 0;
    for stream in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + stream);
        let n = rng.gen_range(0..=200);
        let window = windows[rng.gen_range(0..windows.len())];
        let span = rng.gen_range(1..=(n as i64 * 40).max(1));
        let n_groups = rng.gen_range(1..=12);
        let mut shares: Vec<Share> = (0..n)
            .map(|i| Share {
                key: key("https://example.org/x"),
                post_id: format!("p{i:04}"),
                group_id: format!("g{}", rng.gen_range(0..n_groups)),
                timestamp: 1_000_000 + rng.gen_range(0..=span),
            })
            .collect();
        shares.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));
        let min_shares = rng.gen_range(1..=3);
        let min_groups = rng.gen_range(1..=3);
        let config = DetectionConfig {
            window_seconds: window,
            min_chain_shares: min_shares,
            min_distinct_groups: min_groups,
        };
        let got: Vec<_> = detect_chains(&shares, &config)
            .map_err(|e| format!("stream {stream}: {e}"))?
            .into_iter()
            .map(|c| {
                (
                    c.shares.iter().map(|s| s.post_id.clone()).collect::<Vec<_>>(),
                    c.span_seconds,
                    c.groups,
                )
            })
            .collect();
        let mut got_sorted = got.clone();
        got_sorted.sort_by_key(|c| c.0[0].clone());
        let expected = brute_force_chains(&shares, window as i64, min_shares, min_groups);
        ensure(got_sorted == expected, || {
            format!("stream {stream} (n={n}, window={window}) differs from brute force")
        })?;
        total_chains += expected.len();
    }
    Ok(format!("1000 streams agree with brute force ({total_chains} chains)"))
}

// ---------------------------------------------------------------------------
// 2. Louvain near-optimality

fn random_weighted_graph(rng: &mut ChaCha8Rng) -> GroupGraph {
    loop {
        let n = rng.gen_range(2..=8);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.5) {
                    edges.push((format!("v{a}"), format!("v{b}"), rng.gen_range(1..=10u64)));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        let vertices = (0..n)
            .map(|i| Vertex {
                group_id: format!("v{i}"),
                group_name: format!("v{i}"),
                post_count: 1,
            })
            .collect();
        return GroupGraph::from_parts(vertices, edges).expect("valid random graph");
    }
}

/// Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j), written out literally.
fn modularity_oracle(adj: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Maximum modularity over every set partition (restricted growth strings).
fn exhaustive_max(adj: &[Vec<f64>]) -> f64 {
    let n = adj.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        best = best.max(modularity_oracle(adj, &labels));
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return best;
            }
            let max_prefix = *labels[..i].iter().max().unwrap();
            if labels[i] <= max_prefix {
                labels[i] += 1;
                for l in labels.iter_mut().skip(i + 1) {
                    *l = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn dense_adjacency(g: &GroupGraph) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut adj = vec![vec![0.0; n]; n];
    for (a, b, w) in g.edges() {
        adj[a][b] = w as f64;
        adj[b][a] = w as f64;
    }
    adj
}

fn criterion_louvain() -> Outcome {
    let mut misses = Vec::new();
    let mut worst = f64::INFINITY;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x10_0000 + i);
        let g = random_weighted_graph(&mut rng);
        let assignment = louvain(&g, 1.0, i).map_err(|e| format!("graph {i}: {e}"))?;
        let recomputed = modularity(&g, &assignment.membership).map_err(|e| e.to_string())?;
        ensure((assignment.modularity - recomputed).abs() <= 1e-9, || {
            format!(
                "graph {i}: reported Q {} vs recomputed {recomputed}",
                assignment.modularity
            )
        })?;
        let adj = dense_adjacency(&g);
        let labels: Vec<usize> = g
            .vertices()
            .iter()
            .map(|v| assignment.membership[&v.group_id])
            .collect();
        let oracle_q = modularity_oracle(&adj, &labels);
        ensure((oracle_q - recomputed).abs() <= 1e-9, || {
            format!("graph {i}: modularity() {recomputed} vs formula oracle {oracle_q}")
        })?;
        let best = exhaustive_max(&adj);
        if best > 1e-12 {
            worst = worst.min(assignment.modularity / best);
        }
        if assignment.modularity < 0.95 * best - 1e-12 {
            misses.push(format!(
                "graph {i} (n={}): Q {:.4} < 0.95 x {:.4}",
                g.vertex_count(),
                assignment.modularity,
                best
            ));
        }
    }
    if misses.is_empty() {
        Ok(format!("100 graphs, worst ratio {worst:.4}, Q matches recomputation"))
    } else {
        Err(format!("{} of 100 graphs below 0.95 x optimum: {}", misses.len(), misses.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// 3. clustering

fn unit_graph(n: usize, edges: &[(usize, usize)]) -> GroupGraph {
    let vertices = (0..n)
        .map(|i| Vertex {
            group_id: format!("n{i:03}"),
            group_name: String::new(),
            post_count: 1,
        })
        .collect();
    GroupGraph::from_parts(
        vertices,
        edges
            .iter()
            .map(|&(a, b)| (format!("n{a:03}"), format!("n{b:03}"), 1)),
    )
    .expect("valid graph")
}

#[allow(clippy::needless_range_loop)]
fn criterion_clustering() -> Outcome {
    let mut checked = 0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc1u64 << 32 | i);
        let n = rng.gen_range(1..=50);
        let p = rng.gen_range(0.05..0.9);
        let mut adj = vec![vec![false; n]; n];
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    adj[a][b] = true;
                    adj[b][a] = true;
                    edges.push((a, b));
                }
            }
        }
        let g = unit_graph(n, &edges);
        for v in 0..n {
            let nbrs: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
            let k = nbrs.len();
            let mut triangles = 0u64;
            for x in 0..k {
                for y in x + 1..k {
                    if adj[nbrs[x]][nbrs[y]] {
                        triangles += 1;
                    }
                }
            }
            let expected = if k < 2 {
                0.0
            } else {
                triangles as f64 / (k * (k - 1) / 2) as f64
            };
            let idx = g.index_of(&format!("n{v:03}")).unwrap();
            let got = local_clustering(&g, idx);
            ensure(got == expected, || {
                format!("graph {i} vertex {v}: {got} != brute force {expected}")
            })?;
            checked += 1;
        }
    }
    let triangle = unit_graph(3, &[(0, 1), (1, 2), (0, 2)]);
    for v in 0..3 {
        ensure(local_clustering(&triangle, v) == 1.0, || "triangle vertex is not 1.0".into())?;
    }
    let path = unit_graph(3, &[(0, 1), (1, 2)]);
    for v in 0..3 {
        ensure(local_clustering(&path, v) == 0.0, || "3-path vertex is not 0.0".into())?;
    }
    Ok(format!("{checked} vertices exact; triangle 1.0, 3-path 0.0"))
}

// ---------------------------------------------------------------------------
// 4. planted campaigns

fn planted_scenario() -> ScenarioConfig {
    ScenarioConfig {
        seed: 11,
        n_groups: 300,
        organic: OrganicConfig {
            n_posts: 3000,
            key_reuse_probability: 0.2,
            min_reuse_gap_seconds: 31,
        },
        campaigns: vec![
            CampaignConfig {
                n_groups: 12,
                n_keys: 12,
                shares_per_key: 12,
                burst_interval_seconds: 5,
                jitter_seconds: 3,
            },
            CampaignConfig {
                n_groups: 15,
                n_keys: 10,
                shares_per_key: 15,
                burst_interval_seconds: 5,
                jitter_seconds: 0,
            },
        ],
        ..ScenarioConfig::default()
    }
}

fn criterion_planted() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        scenario: Some(planted_scenario()),
        ..PipelineConfig::default()
    };
    let outcome = pipeline::run_pipeline(&config, &InputSource::Synthetic, dir.path())
        .map_err(|e| e.to_string())?;
    let score = outcome.score.ok_or("no evaluation for a synthetic run")?;
    ensure(score.precision == 1.0 && score.recall == 1.0, || {
        format!("precision {} recall {}", score.precision, score.recall)
    })?;

    let truth = read_ground_truth_jsonl(BufReader::new(
        fs::File::open(dir.path().join(pipeline::GROUND_TRUTH)).map_err(|e| e.to_string())?,
    ))
    .map_err(|e| e.to_string())?;
    let assignment: Option<CommunityAssignment> = serde_json::from_slice(
        &fs::read(dir.path().join(pipeline::COMMUNITIES_JSON)).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let assignment = assignment.ok_or("no communities were computed")?;
    for campaign in &truth.campaigns {
        let ids: BTreeSet<usize> = campaign
            .groups
            .iter()
            .map(|g| assignment.membership.get(g).copied().ok_or(g.clone()))
            .collect::<Result<_, _>>()
            .map_err(|g| format!("campaign group {g} missing from the filtered graph"))?;
        ensure(ids.len() == 1, || {
            format!("campaign {} split over communities {ids:?}", campaign.campaign_id)
        })?;
        let community = *ids.iter().next().unwrap();
        let members: BTreeSet<String> = assignment
            .membership
            .iter()
            .filter(|(_, &c)| c == community)
            .map(|(g, _)| g.clone())
            .collect();
        ensure(members == campaign.groups, || {
            format!(
                "campaign {} community has {} members, ground truth {}",
                campaign.campaign_id,
                members.len(),
                campaign.groups.len()
            )
        })?;
    }
    Ok(format!(
        "precision = recall = 1 over {} posts; {} campaigns recovered as communities",
        score.true_positives,
        truth.campaigns.len()
    ))
}

// ---------------------------------------------------------------------------
// 5. quantile estimator

fn post_with_link(id: &str, group: &str, ts: i64, link: &str) -> Post {
    let mut post = Post::new(id, group, ts);
    post.links = vec![link.to_string()];
    post.media_type = MediaType::Link;
    post
}

fn criterion_quantile() -> Outcome {
    let gaps = [5i64, 10, 20, 40, 60, 80, 100, 120, 140, 160];
    let mut posts = Vec::new();
    for (i, gap) in gaps.iter().enumerate() {
        let link = format!("https://news.example/story-{i}");
        let t0 = 1_600_000_000 + i as i64 * 10_000;
        posts.push(post_with_link(&format!("a{i}"), "g1", t0, &link));
        posts.push(post_with_link(&format!("b{i}"), "g2", t0 + gap, &link));
        posts.push(post_with_link(&format!("c{i}"), "g3", t0 + gap + 1000, &link));
    }
    let index = build_share_index(&posts, &NormalizationConfig::default());
    let kinds: BTreeSet<KeyKind> = [KeyKind::Url].into_iter().collect();
    let got = estimate_threshold_quantile(&index, 0.10, &kinds).map_err(|e| e.to_string())?;
    // p = q (n - 1) = 0.9, between the first two sorted gaps
    let expected = 5.0 + 0.9 * (10.0 - 5.0);
    ensure((got - 9.5).abs() <= 1e-12 && (expected - 9.5f64).abs() <= 1e-12, || {
        format!("estimate {got}, expected 9.5")
    })?;
    Ok(format!("estimate {got}"))
}

// ---------------------------------------------------------------------------
// 6. edge-weight identity

fn criterion_edge_weights() -> Outcome {
    for set in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xed6e_0000 + set);
        let n_groups = rng.gen_range(2..=30);
        let n_chains = rng.gen_range(0..=40);
        let mut chains = Vec::new();
        let mut expected = 0u64;
        for c in 0..n_chains {
            let size = rng.gen_range(2..=12);
            let shares: Vec<Share> = (0..size)
                .map(|s| Share {
                    key: key(&format!("k{c}")),
                    post_id: format!("c{c}s{s}"),
                    group_id: format!("g{:02}", rng.gen_range(0..n_groups)),
                    timestamp: 100 + s as i64,
                })
                .collect();
            let groups: BTreeSet<String> = shares.iter().map(|s| s.group_id.clone()).collect();
            if groups.len() < 2 {
                continue;
            }
            let g = groups.len() as u64;
            expected += g * (g - 1) / 2;
            chains.push(CoordinationChain {
                key: key(&format!("k{c}")),
                span_seconds: size as i64 - 1,
                shares,
                groups,
            });
        }
        let graph = build_graph(&chains);
        let summed: u64 = graph.edges().map(|(_, _, w)| w).sum();
        ensure(summed == expected && graph.total_weight() == expected, || {
            format!("set {set}: edge weights sum to {summed}, expected {expected}")
        })?;
    }
    Ok("1000 chain sets exact".into())
}

// ---------------------------------------------------------------------------
// 7. determinism and round-trips

fn dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn arb_posts() -> impl Strategy<Value = Vec<Post>> {
    prop::collection::vec((0u8..12, 0u8..4, 0i64..50, prop::option::of("[a-z ]{0,20}")), 0..40)
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(id, group, ts, message)| {
                    let mut post = Post::new(format!("p{id}"), format!("g{group}"), ts);
                    post.message = message;
                    post
                })
                .collect()
        })
}

fn criterion_determinism() -> Outcome {
    let config = PipelineConfig {
        graph: coordnet::config::GraphOptions {
            min_degree: 10,
            ..Default::default()
        },
        communities: coordnet::config::CommunityOptions {
            best_of_k: 3,
            ..Default::default()
        },
        scenario: Some(planted_scenario()),
        ..PipelineConfig::default()
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for dir in [&a, &b] {
        pipeline::run_pipeline(&config, &InputSource::Synthetic, dir.path())
            .map_err(|e| e.to_string())?;
    }
    let mut fa = dir_files(a.path());
    let mut fb = dir_files(b.path());
    // the manifest records wall-clock stage timings
    fa.remove(pipeline::MANIFEST);
    fb.remove(pipeline::MANIFEST);
    ensure(fa.keys().eq(fb.keys()), || "runs wrote different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
    }

    // a file-based rerun of the generated corpus yields the same graph
    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline::run_pipeline(
        &config,
        &InputSource::File(a.path().join(pipeline::CORPUS)),
        c.path(),
    )
    .map_err(|e| e.to_string())?;
    let fc = dir_files(c.path());
    for name in [pipeline::CHAINS, pipeline::EDGES, pipeline::VERTICES, pipeline::GEXF] {
        ensure(fc.get(name) == fa.get(name), || format!("{name} differs for file input"))?;
    }

    let dir = a.path();
    let open = |name: &str| BufReader::new(fs::File::open(dir.join(name)).unwrap());
    let filtered = read_graph_csv(open(pipeline::VERTICES), open(pipeline::EDGES))
        .map_err(|e| e.to_string())?;
    let doc = parse_gexf(open(pipeline::GEXF)).map_err(|e| e.to_string())?;
    ensure(doc.to_graph().map_err(|e| e.to_string())? == filtered, || {
        "GEXF graph differs from the filtered graph".into()
    })?;
    let assignment: CommunityAssignment =
        serde_json::from_reader::<_, Option<CommunityAssignment>>(open(pipeline::COMMUNITIES_JSON))
            .map_err(|e| e.to_string())?
            .ok_or("no communities")?;
    ensure(doc.membership() == Some(assignment.membership.clone()), || {
        "GEXF communities differ from the assignment".into()
    })?;

    let posts = parse_posts(open(pipeline::POSTS), InputFormat::Jsonl)
        .map_err(|e| e.to_string())?
        .posts;
    let index = build_share_index(&posts, &config.normalization);
    let chains = detect_all(&index, &config.detection).map_err(|e| e.to_string())?;
    let reread = read_chains_jsonl(open(pipeline::CHAINS)).map_err(|e| e.to_string())?;
    ensure(reread == chains, || "chains.jsonl does not re-parse to the detected chains".into())?;
    let mut buf = Vec::new();
    coordnet::corpus::write_posts_jsonl(&posts, &mut buf).map_err(|e| e.to_string())?;
    ensure(buf == fa[pipeline::POSTS], || "posts.jsonl does not round-trip".into())?;

    let mut runner = TestRunner::new(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(&arb_posts(), |posts| {
            let (once, _) = deduplicate(posts);
            let (twice, removed) = deduplicate(once.clone());
            prop_assert_eq!(removed, 0);
            prop_assert_eq!(twice, once);
            Ok(())
        })
        .map_err(|e| format!("deduplicate is not idempotent: {e}"))?;
    Ok(format!(
        "{} files byte-identical; GEXF, CSV and JSONL re-parse; dedup idempotent (512 cases)",
        fa.len()
    ))
}

// ---------------------------------------------------------------------------
// 8. scale

fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn criterion_scale() -> Outcome {
    // reset the high-water mark so earlier criteria do not count
    let _ = fs::write("/proc/self/clear_refs", "5");
    let scenario = ScenarioConfig {
        seed: 2024,
        n_groups: 4000,
        organic: OrganicConfig {
            n_posts: 97_000,
            key_reuse_probability: 0.05,
            min_reuse_gap_seconds: 0,
        },
        campaigns: (0..3)
            .map(|_| CampaignConfig {
                n_groups: 100,
                n_keys: 10,
                shares_per_key: 100,
                burst_interval_seconds: 5,
                jitter_seconds: 3,
            })
            .collect(),
        ..ScenarioConfig::default()
    };
    let config = PipelineConfig {
        scenario: Some(scenario),
        ..PipelineConfig::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let outcome = pipeline::run_pipeline(&config, &InputSource::Synthetic, dir.path())
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let posts = outcome.summary.corpus.unique_posts;
    let groups = outcome.summary.corpus.groups;
    ensure(posts == 100_000, || format!("corpus has {posts} posts, expected 100000"))?;
    let peak = peak_rss_kib().ok_or("cannot read VmHWM")?;
    let peak_mib = peak as f64 / 1024.0;
    ensure(elapsed < Duration::from_secs(60) && peak_mib < 2048.0, || {
        format!("{posts} posts took {:.1}s, peak {peak_mib:.0} MiB", elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "{posts} posts / {groups} groups in {:.1}s, peak RSS {peak_mib:.0} MiB, {} chains",
        elapsed.as_secs_f64(),
        outcome.summary.chains.count
    ))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 windowing matches brute force", criterion_windowing),
        ("2 Louvain within 0.95 of optimum", criterion_louvain),
        ("3 clustering matches brute force", criterion_clustering),
        ("4 planted campaigns recovered", criterion_planted),
        ("5 quantile estimator", criterion_quantile),
        ("6 edge-weight identity", criterion_edge_weights),
        ("7 determinism and round-trips", criterion_determinism),
        ("8 scale", criterion_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
