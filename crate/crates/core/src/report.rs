//! Analyst-facing outputs: GEXF export for Gephi, the top-narratives view
//! and the run summary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::communities::{CommunityAssignment, CommunitySummary};
use crate::corpus::{CorpusStats, MediaType};
use crate::detector::CoordinationChain;
use crate::error::{Error, Result};
use crate::graph::{local_clustering, GroupGraph, Vertex};
use crate::keys::{ContentKey, KeyKind};

pub const GEXF_NAMESPACE: &str = "http://www.gexf.net/1.2draft";
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaCategory {
    Video,
    PhotoOrMeme,
    Url,
    Text,
}

/// One key↔group edge of the narratives view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeEdge {
    pub group_id: String,
    /// Shares of the key by this group inside chains.
    pub shares: u64,
    pub category: MediaCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeEntry {
    pub key: ContentKey,
    pub distinct_groups: u64,
    pub total_shares: u64,
    pub chain_count: u64,
    pub media_category: MediaCategory,
    pub edges: Vec<NarrativeEdge>,
}

fn media_category(kind: KeyKind, media: &[MediaType]) -> MediaCategory {
    match kind {
        KeyKind::Url => MediaCategory::Url,
        KeyKind::ImageText => MediaCategory::PhotoOrMeme,
        KeyKind::Message | KeyKind::Description => {
            let videos = media.iter().filter(|m| **m == MediaType::Video).count();
            if !media.is_empty() && 2 * videos >= media.len() {
                MediaCategory::Video
            } else {
                MediaCategory::Text
            }
        }
    }
}

/// The `n` keys spread across the most groups, ties broken by total shares
/// (descending) then key value. `media_types` maps post ids to their media
/// type; posts missing from it count as non-video.
pub fn top_narratives(
    chains: &[CoordinationChain],
    n: usize,
    media_types: &HashMap<String, MediaType>,
) -> Result<Vec<NarrativeEntry>> {
    if n == 0 {
        return Err(Error::config("top_n must be at least 1"));
    }
    #[derive(Default)]
    struct Tally<'a> {
        chains: u64,
        per_group: BTreeMap<&'a str, u64>,
        posts: BTreeSet<&'a str>,
    }
    let mut tallies: BTreeMap<&ContentKey, Tally> = BTreeMap::new();
    for chain in chains {
        let tally = tallies.entry(&chain.key).or_default();
        tally.chains += 1;
        for share in &chain.shares {
            *tally.per_group.entry(share.group_id.as_str()).or_default() += 1;
            tally.posts.insert(share.post_id.as_str());
        }
    }

    let mut entries: Vec<NarrativeEntry> = tallies
        .into_iter()
        .map(|(key, tally)| {
            let media: Vec<MediaType> = tally
                .posts
                .iter()
                .map(|id| media_types.get(*id).copied().unwrap_or(MediaType::Other))
                .collect();
            let category = media_category(key.kind, &media);
            NarrativeEntry {
                key: key.clone(),
                distinct_groups: tally.per_group.len() as u64,
                total_shares: tally.per_group.values().sum(),
                chain_count: tally.chains,
                media_category: category,
                edges: tally
                    .per_group
                    .into_iter()
                    .map(|(group, shares)| NarrativeEdge {
                        group_id: group.to_string(),
                        shares,
                        category,
                    })
                    .collect(),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.distinct_groups
            .cmp(&a.distinct_groups)
            .then(b.total_shares.cmp(&a.total_shares))
            .then_with(|| a.key.value.cmp(&b.key.value))
            .then(a.key.kind.cmp(&b.key.kind))
    });
    entries.truncate(n);
    Ok(entries)
}

fn attr(value: &str) -> std::borrow::Cow<'_, str> {
    escape(value)
}

/// Writes an undirected static GEXF 1.2 document. Nodes and edges are
/// emitted in sorted order, so identical inputs give identical bytes. The
/// `community` attribute is declared only when an assignment is given.
pub fn export_gexf<W: Write>(
    graph: &GroupGraph,
    assignment: Option<&CommunityAssignment>,
    mut sink: W,
) -> Result<()> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph("nothing to export".into()));
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!("<gexf xmlns=\"{GEXF_NAMESPACE}\" version=\"1.2\">\n"));
    out.push_str("  <meta>\n    <creator>coordnet</creator>\n");
    out.push_str("    <description>Group coordination graph</description>\n  </meta>\n");
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    out.push_str("    <attributes class=\"node\">\n");
    out.push_str("      <attribute id=\"post_count\" title=\"post_count\" type=\"long\"/>\n");
    out.push_str("      <attribute id=\"weighted_degree\" title=\"weighted_degree\" type=\"long\"/>\n");
    out.push_str("      <attribute id=\"clustering\" title=\"clustering\" type=\"double\"/>\n");
    if assignment.is_some() {
        out.push_str("      <attribute id=\"community\" title=\"community\" type=\"integer\"/>\n");
    }
    out.push_str("    </attributes>\n    <nodes>\n");
    for (i, v) in graph.vertices().iter().enumerate() {
        out.push_str(&format!(
            "      <node id=\"{}\" label=\"{}\">\n        <attvalues>\n",
            attr(&v.group_id),
            attr(&v.group_name)
        ));
        out.push_str(&format!(
            "          <attvalue for=\"post_count\" value=\"{}\"/>\n",
            v.post_count
        ));
        out.push_str(&format!(
            "          <attvalue for=\"weighted_degree\" value=\"{}\"/>\n",
            graph.weighted_degree(i)
        ));
        out.push_str(&format!(
            "          <attvalue for=\"clustering\" value=\"{:?}\"/>\n",
            local_clustering(graph, i)
        ));
        if let Some(a) = assignment {
            let community = a.community_of(&v.group_id).ok_or_else(|| {
                Error::Contract(format!("vertex {} has no community", v.group_id))
            })?;
            out.push_str(&format!(
                "          <attvalue for=\"community\" value=\"{community}\"/>\n"
            ));
        }
        out.push_str("        </attvalues>\n      </node>\n");
    }
    out.push_str("    </nodes>\n    <edges>\n");
    for (id, (a, b, w)) in graph.edges().enumerate() {
        out.push_str(&format!(
            "      <edge id=\"{id}\" source=\"{}\" target=\"{}\" weight=\"{w}\"/>\n",
            attr(&graph.vertex(a).group_id),
            attr(&graph.vertex(b).group_id)
        ));
    }
    out.push_str("    </edges>\n  </graph>\n</gexf>\n");
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Writes `path` through a sibling temporary file and a rename, so a failed
/// write never leaves a truncated file behind.
pub fn write_atomically<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = fs::File::create(&tmp)
        .map_err(Error::from)
        .and_then(|mut file| {
            write(&mut file)?;
            file.sync_all()?;
            Ok(())
        })
        .and_then(|()| fs::rename(&tmp, path).map_err(Error::from));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn export_gexf_file(
    graph: &GroupGraph,
    assignment: Option<&CommunityAssignment>,
    path: &Path,
) -> Result<()> {
    write_atomically(path, |file| {
        export_gexf(graph, assignment, std::io::BufWriter::new(file))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GexfNode {
    pub id: String,
    pub label: String,
    pub post_count: u64,
    pub weighted_degree: u64,
    pub clustering: f64,
    pub community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GexfEdge {
    pub source: String,
    pub target: String,
    pub weight: u64,
}

/// The parts of a GEXF document this crate writes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GexfDocument {
    pub declares_community: bool,
    pub nodes: Vec<GexfNode>,
    pub edges: Vec<GexfEdge>,
}

impl GexfDocument {
    pub fn to_graph(&self) -> Result<GroupGraph> {
        GroupGraph::from_parts(
            self.nodes
                .iter()
                .map(|n| Vertex {
                    group_id: n.id.clone(),
                    group_name: n.label.clone(),
                    post_count: n.post_count,
                })
                .collect(),
            self.edges
                .iter()
                .map(|e| (e.source.clone(), e.target.clone(), e.weight)),
        )
    }

    /// group_id → community, when every node carries one.
    pub fn membership(&self) -> Option<BTreeMap<String, usize>> {
        self.nodes
            .iter()
            .map(|n| n.community.map(|c| (n.id.clone(), c)))
            .collect()
    }
}

fn attribute(e: &BytesStart<'_>, name: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::format("GEXF", err))?;
        if a.key.as_ref() == name.as_bytes() {
            let value = a
                .unescape_value()
                .map_err(|err| Error::format("GEXF", err))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, name: &str) -> Result<String> {
    attribute(e, name)?.ok_or_else(|| {
        Error::format(
            "GEXF",
            format!(
                "<{}> lacks the {name} attribute",
                String::from_utf8_lossy(e.name().as_ref())
            ),
        )
    })
}

fn number<T: std::str::FromStr>(raw: &str, what: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::format("GEXF", format!("{what} {raw:?} is not a number")))
}

/// Reads back documents produced by [`export_gexf`].
pub fn parse_gexf<R: BufRead>(source: R) -> Result<GexfDocument> {
    let mut reader = Reader::from_reader(source);
    let mut buf = Vec::new();
    let mut doc = GexfDocument::default();
    let mut titles: HashMap<String, String> = HashMap::new();
    let mut current: Option<GexfNode> = None;
    let mut saw_root = false;
    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::format("GEXF", e))?;
        let (e, closes_itself) = match &event {
            Event::Start(e) => (e.clone(), false),
            Event::Empty(e) => (e.clone(), true),
            Event::End(e) => {
                if e.name().as_ref() == b"node" {
                    if let Some(node) = current.take() {
                        doc.nodes.push(node);
                    }
                }
                buf.clear();
                continue;
            }
            Event::Eof => break,
            _ => {
                buf.clear();
                continue;
            }
        };
        match e.name().as_ref() {
            b"gexf" => {
                if attribute(&e, "xmlns")?.as_deref() != Some(GEXF_NAMESPACE) {
                    return Err(Error::format("GEXF", "unexpected namespace"));
                }
                saw_root = true;
            }
            b"attribute" => {
                let id = required(&e, "id")?;
                let title = attribute(&e, "title")?.unwrap_or_else(|| id.clone());
                if title == "community" {
                    doc.declares_community = true;
                }
                titles.insert(id, title);
            }
            b"node" => {
                let node = GexfNode {
                    id: required(&e, "id")?,
                    label: attribute(&e, "label")?.unwrap_or_default(),
                    post_count: 0,
                    weighted_degree: 0,
                    clustering: 0.0,
                    community: None,
                };
                if closes_itself {
                    doc.nodes.push(node);
                } else {
                    current = Some(node);
                }
            }
            b"attvalue" => {
                let node = current
                    .as_mut()
                    .ok_or_else(|| Error::format("GEXF", "<attvalue> outside a node"))?;
                let key = required(&e, "for")?;
                let value = required(&e, "value")?;
                match titles.get(&key).map(String::as_str).unwrap_or(key.as_str()) {
                    "post_count" => node.post_count = number(&value, "post_count")?,
                    "weighted_degree" => node.weighted_degree = number(&value, "weighted_degree")?,
                    "clustering" => node.clustering = number(&value, "clustering")?,
                    "community" => node.community = Some(number(&value, "community")?),
                    _ => {}
                }
            }
            b"edge" => {
                let weight = match attribute(&e, "weight")? {
                    Some(w) => number(&w, "weight")?,
                    None => 1,
                };
                doc.edges.push(GexfEdge {
                    source: required(&e, "source")?,
                    target: required(&e, "target")?,
                    weight,
                });
            }
            _ => {}
        }
        buf.clear();
    }
    if !saw_root {
        return Err(Error::format("GEXF", "no <gexf> root element"));
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCounts {
    pub count: u64,
    pub by_kind: BTreeMap<KeyKind, u64>,
    /// Share records inside chains.
    pub shares_covered: u64,
    /// Distinct posts appearing in at least one chain.
    pub posts_covered: u64,
    pub groups_involved: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub vertices: u64,
    pub edges: u64,
    pub total_weight: u64,
    /// After weighted-degree filtering; communities are computed on this graph.
    pub filtered_vertices: u64,
    pub filtered_edges: u64,
    pub filtered_total_weight: u64,
    pub filtered_mean_clustering: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityCounts {
    pub count: u64,
    pub modularity: Option<f64>,
    pub communities: Vec<CommunitySummary>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub corpus: CorpusStats,
    /// Distinct content keys per kind across the corpus.
    pub keys: BTreeMap<KeyKind, u64>,
    pub chains: ChainCounts,
    pub graph: GraphCounts,
    pub communities: CommunityCounts,
    pub config: serde_json::Value,
}

/// Everything one pipeline run produced, borrowed for summarizing.
pub struct RunArtifacts<'a> {
    pub stats: &'a CorpusStats,
    pub key_counts: &'a BTreeMap<KeyKind, u64>,
    pub chains: &'a [CoordinationChain],
    pub graph: &'a GroupGraph,
    pub filtered: &'a GroupGraph,
    pub assignment: Option<&'a CommunityAssignment>,
    pub config: serde_json::Value,
}

pub fn summary_report(run: RunArtifacts<'_>) -> Summary {
    let mut by_kind: BTreeMap<KeyKind, u64> = KeyKind::ALL.iter().map(|k| (*k, 0)).collect();
    let mut posts = BTreeSet::new();
    let mut groups = BTreeSet::new();
    let mut shares_covered = 0u64;
    for chain in run.chains {
        *by_kind.entry(chain.key.kind).or_default() += 1;
        shares_covered += chain.shares.len() as u64;
        for share in &chain.shares {
            posts.insert(share.post_id.as_str());
            groups.insert(share.group_id.as_str());
        }
    }
    let mut keys: BTreeMap<KeyKind, u64> = KeyKind::ALL.iter().map(|k| (*k, 0)).collect();
    keys.extend(run.key_counts.iter().map(|(k, v)| (*k, *v)));

    let filtered_mean_clustering = if run.filtered.is_empty() {
        0.0
    } else {
        crate::graph::clustering(run.filtered, None).mean_clustering
    };
    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        corpus: *run.stats,
        keys,
        chains: ChainCounts {
            count: run.chains.len() as u64,
            by_kind,
            shares_covered,
            posts_covered: posts.len() as u64,
            groups_involved: groups.len() as u64,
        },
        graph: GraphCounts {
            vertices: run.graph.vertex_count() as u64,
            edges: run.graph.edge_count() as u64,
            total_weight: run.graph.total_weight(),
            filtered_vertices: run.filtered.vertex_count() as u64,
            filtered_edges: run.filtered.edge_count() as u64,
            filtered_total_weight: run.filtered.total_weight(),
            filtered_mean_clustering,
        },
        communities: CommunityCounts {
            count: run.assignment.map_or(0, |a| a.communities.len() as u64),
            modularity: run.assignment.map(|a| a.modularity),
            communities: run
                .assignment
                .map(|a| a.communities.clone())
                .unwrap_or_default(),
        },
        config: run.config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::communities::louvain;
    use crate::graph::tests::{chain, unit_graph, weighted_graph};
    use crate::graph::build_graph;

    #[test]
    fn ranks_by_group_spread() {
        let chains = [chain(&["A", "B", "C"], "k1"), chain(&["A", "B"], "k2")];
        let top = top_narratives(&chains, 1, &HashMap::new()).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].key.value, "http://k1.com/");
        assert_eq!(top[0].distinct_groups, 3);
        assert_eq!(top[0].media_category, MediaCategory::Url);
        assert_eq!(top[0].edges.len(), 3);

        assert!(top_narratives(&[], 5, &HashMap::new()).unwrap().is_empty());
        assert!(top_narratives(&chains, 0, &HashMap::new()).is_err());
    }

    #[test]
    fn ties_break_on_key_value() {
        let chains = [chain(&["A", "B"], "zz"), chain(&["C", "D"], "aa")];
        let top = top_narratives(&chains, 5, &HashMap::new()).unwrap();
        let values: Vec<&str> = top.iter().map(|e| e.key.value.as_str()).collect();
        assert_eq!(values, vec!["http://aa.com/", "http://zz.com/"]);
    }

    #[test]
    fn aggregates_chains_of_one_key() {
        let mut second = chain(&["B", "C", "B"], "k1");
        for s in &mut second.shares {
            s.post_id.push_str("-later");
        }
        let chains = [chain(&["A", "B"], "k1"), second];
        let top = top_narratives(&chains, 5, &HashMap::new()).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!((top[0].distinct_groups, top[0].total_shares, top[0].chain_count), (3, 5, 2));
        let b = top[0].edges.iter().find(|e| e.group_id == "B").unwrap();
        assert_eq!(b.shares, 3);
    }

    #[test]
    fn text_keys_become_video_when_half_the_posts_are() {
        let mut c = chain(&["A", "B"], "k");
        c.key = ContentKey::new(KeyKind::Message, "watch this before it is deleted");
        for s in &mut c.shares {
            s.key = c.key.clone();
        }
        let mut media = HashMap::new();
        media.insert(c.shares[0].post_id.clone(), MediaType::Video);
        let top = top_narratives(std::slice::from_ref(&c), 1, &media).unwrap();
        assert_eq!(top[0].media_category, MediaCategory::Video);
        let top = top_narratives(&[c], 1, &HashMap::new()).unwrap();
        assert_eq!(top[0].media_category, MediaCategory::Text);
        assert_eq!(media_category(KeyKind::ImageText, &[]), MediaCategory::PhotoOrMeme);
    }

    #[test]
    fn gexf_triangle_round_trip() {
        let g = unit_graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut buf = Vec::new();
        export_gexf(&g, None, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains("community"));
        assert!(text.contains(GEXF_NAMESPACE));
        let doc = parse_gexf(&buf[..]).unwrap();
        assert_eq!((doc.nodes.len(), doc.edges.len()), (3, 3));
        assert!(doc.edges.iter().all(|e| e.weight == 1));
        assert!(!doc.declares_community);
        assert_eq!(doc.to_graph().unwrap(), g);
        assert!(doc.nodes.iter().all(|n| n.clustering == 1.0 && n.weighted_degree == 2));
    }

    #[test]
    fn gexf_with_communities_and_escaping() {
        let mut g = weighted_graph(4, &[(0, 1, 5), (2, 3, 2)]);
        let names: HashMap<String, String> =
            [("g000".to_string(), "Patriotas <\"Brasil\"> & cia".to_string())].into_iter().collect();
        g.apply_group_names(&names);
        let assignment = louvain(&g, 1.0, 0).unwrap();
        let mut first = Vec::new();
        export_gexf(&g, Some(&assignment), &mut first).unwrap();
        let mut second = Vec::new();
        export_gexf(&g, Some(&assignment), &mut second).unwrap();
        assert_eq!(first, second);

        let doc = parse_gexf(&first[..]).unwrap();
        assert!(doc.declares_community);
        assert_eq!(doc.to_graph().unwrap(), g);
        assert_eq!(doc.membership().unwrap(), assignment.membership);
        assert_eq!(doc.nodes[0].label, "Patriotas <\"Brasil\"> & cia");
    }

    #[test]
    fn gexf_rejects_empty_graph_and_garbage() {
        assert!(export_gexf(&GroupGraph::default(), None, Vec::new()).is_err());
        assert!(parse_gexf(&b"<graphml/>"[..]).is_err());
        assert!(parse_gexf(&b"<gexf xmlns=\"x\"/>"[..]).is_err());
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.gexf");
        let failed = write_atomically(&path, |_| Err(Error::config("boom")));
        assert!(failed.is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        export_gexf_file(&unit_graph(2, &[(0, 1)]), None, &path).unwrap();
        assert!(parse_gexf(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).is_ok());
    }

    #[test]
    fn empty_summary() {
        let stats = CorpusStats::default();
        let empty = GroupGraph::default();
        let summary = summary_report(RunArtifacts {
            stats: &stats,
            key_counts: &BTreeMap::new(),
            chains: &[],
            graph: &empty,
            filtered: &empty,
            assignment: None,
            config: serde_json::json!({"window_seconds": 30}),
        });
        assert_eq!(summary.schema_version, SUMMARY_SCHEMA_VERSION);
        assert_eq!(summary.chains.count, 0);
        assert!(summary.keys.values().all(|&v| v == 0));
        assert!(summary.communities.communities.is_empty());
        assert_eq!(summary.graph.vertices, 0);
        let json = serde_json::to_value(&summary).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["config"]["window_seconds"], 30);
    }

    #[test]
    fn summary_counts_chains() {
        let chains = [chain(&["A", "B", "C"], "k1"), chain(&["A", "B"], "k2")];
        let graph = build_graph(&chains);
        let assignment = louvain(&graph, 1.0, 0).unwrap();
        let stats = CorpusStats {
            records_read: 5,
            unique_posts: 5,
            groups: 3,
            ..CorpusStats::default()
        };
        let summary = summary_report(RunArtifacts {
            stats: &stats,
            key_counts: &[(KeyKind::Url, 2)].into_iter().collect(),
            chains: &chains,
            graph: &graph,
            filtered: &graph,
            assignment: Some(&assignment),
            config: serde_json::Value::Null,
        });
        assert_eq!(summary.chains.count, 2);
        assert_eq!(summary.chains.by_kind[&KeyKind::Url], 2);
        assert_eq!(summary.chains.shares_covered, 5);
        assert_eq!(summary.chains.groups_involved, 3);
        assert_eq!(summary.graph.total_weight, 4);
        assert_eq!(summary.keys[&KeyKind::Message], 0);
        assert_eq!(summary.communities.count, assignment.communities.len() as u64);
    }
}
