//! Group-level coordination graph: vertices are groups, edge weights count
//! the chains two groups took part in together.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::detector::CoordinationChain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub group_id: String,
    pub group_name: String,
    /// Distinct posts of this group that appear in at least one chain.
    pub post_count: u64,
}

/// Undirected weighted graph without self-loops. Vertices are kept sorted by
/// `group_id`, so vertex indices are stable for identical inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupGraph {
    vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    adjacency: Vec<BTreeMap<usize, u64>>,
}

impl GroupGraph {
    /// Builds a graph from vertices and `(source, target, weight)` edges.
    /// Each unordered pair may appear once.
    pub fn from_parts<I>(vertices: Vec<Vertex>, edges: I) -> Result<GroupGraph>
    where
        I: IntoIterator<Item = (String, String, u64)>,
    {
        let mut vertices = vertices;
        vertices.sort_by(|a, b| a.group_id.cmp(&b.group_id));
        if let Some(w) = vertices.windows(2).find(|w| w[0].group_id == w[1].group_id) {
            return Err(Error::format("graph", format!("duplicate vertex {}", w[0].group_id)));
        }
        let index: HashMap<String, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.group_id.clone(), i))
            .collect();
        let mut adjacency = vec![BTreeMap::new(); vertices.len()];
        for (source, target, weight) in edges {
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::format("graph", format!("edge endpoint {id} is not a vertex")))
            };
            let (a, b) = (lookup(&source)?, lookup(&target)?);
            if a == b {
                return Err(Error::format("graph", format!("self-loop on {source}")));
            }
            if weight == 0 {
                return Err(Error::format("graph", format!("zero weight on {source}-{target}")));
            }
            if adjacency[a].insert(b, weight).is_some() {
                return Err(Error::format("graph", format!("duplicate edge {source}-{target}")));
            }
            adjacency[b].insert(a, weight);
        }
        Ok(GroupGraph {
            vertices,
            index,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn index_of(&self, group_id: &str) -> Option<usize> {
        self.index.get(group_id).copied()
    }

    /// Neighbors of vertex `i` with edge weights, ascending by index.
    pub fn neighbors(&self, i: usize) -> &BTreeMap<usize, u64> {
        &self.adjacency[i]
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<u64> {
        self.adjacency[a].get(&b).copied()
    }

    pub fn weighted_degree(&self, i: usize) -> u64 {
        self.adjacency[i].values().sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Edges as `(a, b, weight)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            nbrs.range(a + 1..).map(move |(&b, &w)| (a, b, w))
        })
    }

    /// Replaces display names for the groups found in `names`.
    pub fn apply_group_names(&mut self, names: &HashMap<String, String>) {
        for v in &mut self.vertices {
            if let Some(name) = names.get(&v.group_id) {
                v.group_name.clone_from(name);
            }
        }
    }

    /// The subgraph induced by the vertices for which `keep` returns true.
    pub fn induced<F: Fn(usize) -> bool>(&self, keep: F) -> GroupGraph {
        let kept: Vec<usize> = (0..self.vertex_count()).filter(|&i| keep(i)).collect();
        let remap: HashMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let vertices: Vec<Vertex> = kept.iter().map(|&i| self.vertices[i].clone()).collect();
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.group_id.clone(), i))
            .collect();
        let adjacency = kept
            .iter()
            .map(|&old| {
                self.adjacency[old]
                    .iter()
                    .filter_map(|(nb, w)| remap.get(nb).map(|&n| (n, *w)))
                    .collect()
            })
            .collect();
        GroupGraph {
            vertices,
            index,
            adjacency,
        }
    }
}

/// One vertex per group seen in any chain; every unordered pair of distinct
/// groups in a chain adds 1 to that edge, once per chain.
pub fn build_graph(chains: &[CoordinationChain]) -> GroupGraph {
    let mut posts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut pairs: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for chain in chains {
        for share in &chain.shares {
            posts
                .entry(share.group_id.as_str())
                .or_default()
                .insert(share.post_id.as_str());
        }
        let groups: Vec<&str> = chain.groups.iter().map(String::as_str).collect();
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                *pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let vertices = posts
        .into_iter()
        .map(|(group, ids)| Vertex {
            group_id: group.to_string(),
            group_name: group.to_string(),
            post_count: ids.len() as u64,
        })
        .collect();
    let edges = pairs
        .into_iter()
        .map(|((a, b), w)| (a.to_string(), b.to_string(), w));
    GroupGraph::from_parts(vertices, edges).expect("chain-derived graph is well formed")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeComparator {
    #[default]
    AtLeast,
    Greater,
}

impl DegreeComparator {
    fn passes(self, degree: u64, threshold: u64) -> bool {
        match self {
            DegreeComparator::AtLeast => degree >= threshold,
            DegreeComparator::Greater => degree > threshold,
        }
    }
}

/// Drops vertices whose weighted degree fails the threshold. In iterative
/// mode degrees are recomputed after each round until nothing changes, so
/// every survivor passes within the returned graph.
pub fn filter_by_weighted_degree(
    graph: &GroupGraph,
    min_degree: u64,
    comparator: DegreeComparator,
    iterative: bool,
) -> GroupGraph {
    let n = graph.vertex_count();
    let mut alive = vec![true; n];
    let mut degree: Vec<u64> = (0..n).map(|i| graph.weighted_degree(i)).collect();
    loop {
        let doomed: Vec<usize> = (0..n)
            .filter(|&i| alive[i] && !comparator.passes(degree[i], min_degree))
            .collect();
        if doomed.is_empty() {
            break;
        }
        for &i in &doomed {
            alive[i] = false;
        }
        for &i in &doomed {
            for (&nb, &w) in graph.neighbors(i) {
                if alive[nb] {
                    degree[nb] -= w;
                }
            }
        }
        if !iterative {
            break;
        }
    }
    graph.induced(|i| alive[i])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub weighted_degree: BTreeMap<String, u64>,
    /// Unweighted local clustering coefficient; 0 for fewer than two neighbors.
    pub local_clustering: BTreeMap<String, f64>,
    pub mean_clustering: f64,
}

/// Number of edges among the neighbors of `v`.
pub(crate) fn triangles_at(graph: &GroupGraph, v: usize) -> u64 {
    let nbrs = graph.neighbors(v);
    let mut links = 0u64;
    for &u in nbrs.keys() {
        let theirs = graph.neighbors(u);
        // count each neighbor pair once: only w > u
        let (small, large) = if theirs.len() < nbrs.len() {
            (theirs, nbrs)
        } else {
            (nbrs, theirs)
        };
        links += small
            .keys()
            .filter(|&&w| w > u && w != v && large.contains_key(&w))
            .count() as u64;
    }
    links
}

pub fn local_clustering(graph: &GroupGraph, v: usize) -> f64 {
    let k = graph.neighbors(v).len() as u64;
    if k < 2 {
        return 0.0;
    }
    (2 * triangles_at(graph, v)) as f64 / (k * (k - 1)) as f64
}

/// Weighted degrees and local clustering for `vertices` (all when `None`),
/// with the mean over the same set. Unknown ids are ignored.
pub fn clustering(graph: &GroupGraph, vertices: Option<&[String]>) -> GraphMetrics {
    let selected: Vec<usize> = match vertices {
        Some(ids) => {
            let set: BTreeSet<usize> = ids.iter().filter_map(|id| graph.index_of(id)).collect();
            set.into_iter().collect()
        }
        None => (0..graph.vertex_count()).collect(),
    };
    let coefficients: Vec<(usize, f64)> = selected
        .iter()
        .map(|&v| (v, local_clustering(graph, v)))
        .collect();
    let mean_clustering = if coefficients.is_empty() {
        0.0
    } else {
        coefficients.iter().map(|(_, c)| c).sum::<f64>() / coefficients.len() as f64
    };
    GraphMetrics {
        weighted_degree: selected
            .iter()
            .map(|&v| (graph.vertex(v).group_id.clone(), graph.weighted_degree(v)))
            .collect(),
        local_clustering: coefficients
            .into_iter()
            .map(|(v, c)| (graph.vertex(v).group_id.clone(), c))
            .collect(),
        mean_clustering,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    source_group_id: String,
    target_group_id: String,
    weight: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRow {
    group_id: String,
    group_name: String,
    post_count: u64,
    weighted_degree: u64,
    clustering: f64,
}

pub fn write_edges_csv<W: Write>(graph: &GroupGraph, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    if graph.edge_count() == 0 {
        writer.write_record(["source_group_id", "target_group_id", "weight"])?;
    }
    for (a, b, weight) in graph.edges() {
        writer.serialize(EdgeRow {
            source_group_id: graph.vertex(a).group_id.clone(),
            target_group_id: graph.vertex(b).group_id.clone(),
            weight,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_vertices_csv<W: Write>(graph: &GroupGraph, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    if graph.is_empty() {
        writer.write_record(["group_id", "group_name", "post_count", "weighted_degree", "clustering"])?;
    }
    for (i, v) in graph.vertices().iter().enumerate() {
        writer.serialize(VertexRow {
            group_id: v.group_id.clone(),
            group_name: v.group_name.clone(),
            post_count: v.post_count,
            weighted_degree: graph.weighted_degree(i),
            clustering: local_clustering(graph, i),
        })?;
    }
    writer.flush()?;
    Ok(())
}

/// Rebuilds a graph from `vertices.csv` and `edges.csv`. Degree and
/// clustering columns are derived data and are checked, not trusted.
pub fn read_graph_csv<V: Read, E: Read>(vertices: V, edges: E) -> Result<GroupGraph> {
    let mut vertex_rows = Vec::new();
    for row in csv::Reader::from_reader(vertices).deserialize() {
        let row: VertexRow = row?;
        vertex_rows.push(row);
    }
    let mut edge_rows = Vec::new();
    for row in csv::Reader::from_reader(edges).deserialize() {
        let row: EdgeRow = row?;
        edge_rows.push((row.source_group_id, row.target_group_id, row.weight));
    }
    let graph = GroupGraph::from_parts(
        vertex_rows
            .iter()
            .map(|r| Vertex {
                group_id: r.group_id.clone(),
                group_name: r.group_name.clone(),
                post_count: r.post_count,
            })
            .collect(),
        edge_rows,
    )?;
    for row in &vertex_rows {
        let i = graph.index_of(&row.group_id).expect("vertex just inserted");
        if graph.weighted_degree(i) != row.weighted_degree {
            return Err(Error::format(
                "vertices.csv",
                format!("weighted_degree of {} disagrees with edges.csv", row.group_id),
            ));
        }
    }
    Ok(graph)
}
