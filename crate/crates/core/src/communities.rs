//! Louvain modularity optimization over the group graph.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{clustering, GroupGraph};

/// Levels stop once a full pass improves modularity by less than this.
pub const CONVERGENCE_EPSILON: f64 = 1e-9;

/// Minimum gain over staying put for a vertex move to count.
const MOVE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub community_id: usize,
    pub size: usize,
    /// Mean local clustering over the subgraph induced by the members.
    pub mean_clustering: f64,
    /// Sum of edge weights with both endpoints inside the community.
    pub internal_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// group_id → community id; ids are dense from 0.
    pub membership: BTreeMap<String, usize>,
    pub modularity: f64,
    pub resolution: f64,
    pub seed: u64,
    pub communities: Vec<CommunitySummary>,
}

impl CommunityAssignment {
    pub fn community_of(&self, group_id: &str) -> Option<usize> {
        self.membership.get(group_id).copied()
    }

    pub fn members(&self, community_id: usize) -> Vec<&str> {
        self.membership
            .iter()
            .filter(|(_, &c)| c == community_id)
            .map(|(g, _)| g.as_str())
            .collect()
    }
}

/// Newman–Girvan modularity of `membership` on the weighted graph.
pub fn modularity(graph: &GroupGraph, membership: &BTreeMap<String, usize>) -> Result<f64> {
    modularity_with_resolution(graph, membership, 1.0)
}

/// Modularity with the null-model term scaled by `resolution`.
/// A graph with no edges has modularity 0.
pub fn modularity_with_resolution(
    graph: &GroupGraph,
    membership: &BTreeMap<String, usize>,
    resolution: f64,
) -> Result<f64> {
    let labels: Vec<usize> = graph
        .vertices()
        .iter()
        .map(|v| {
            membership.get(&v.group_id).copied().ok_or_else(|| {
                Error::Contract(format!("vertex {} has no community", v.group_id))
            })
        })
        .collect::<Result<_>>()?;
    let two_m = 2.0 * graph.total_weight() as f64;
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let mut internal: HashMap<usize, f64> = HashMap::new();
    let mut total: HashMap<usize, f64> = HashMap::new();
    for (a, b, w) in graph.edges() {
        if labels[a] == labels[b] {
            *internal.entry(labels[a]).or_default() += w as f64;
        }
    }
    for (i, &c) in labels.iter().enumerate() {
        *total.entry(c).or_default() += graph.weighted_degree(i) as f64;
    }
    let mut communities: Vec<usize> = total.keys().copied().collect();
    communities.sort_unstable();
    Ok(communities
        .into_iter()
        .map(|c| {
            let inside = internal.get(&c).copied().unwrap_or(0.0);
            let tot = total[&c];
            2.0 * inside / two_m - resolution * (tot / two_m) * (tot / two_m)
        })
        .sum())
}

/// Working graph of one Louvain level. Self-loop weight is counted once and
/// contributes twice to the node's degree.
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    /// Original vertex indices folded into each node.
    members: Vec<Vec<usize>>,
}

impl Level {
    fn from_graph(graph: &GroupGraph) -> Level {
        let n = graph.vertex_count();
        let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| graph.neighbors(i).iter().map(|(&j, &w)| (j, w as f64)).collect())
            .collect();
        let degree = adjacency
            .iter()
            .map(|nbrs| nbrs.iter().map(|(_, w)| w).sum())
            .collect();
        Level {
            adjacency,
            self_loops: vec![0.0; n],
            degree,
            members: (0..n).map(|i| vec![i]).collect(),
        }
    }

    fn len(&self) -> usize {
        self.degree.len()
    }

    /// Local moving phase. Returns the community of every node, numbered
    /// densely by first appearance, and whether any node moved.
    fn move_nodes(&self, order: &[usize], resolution: f64, two_m: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = self.degree.clone();
        let mut link_to = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;

        loop {
            let mut moved = false;
            for &node in order {
                let current = community[node];
                let k = self.degree[node];
                for &(nb, w) in &self.adjacency[node] {
                    let c = community[nb];
                    if link_to[c] == 0.0 {
                        touched.push(c);
                    }
                    link_to[c] += w;
                }
                total[current] -= k;

                let gain = |c: usize, link: f64| link - resolution * total[c] * k / two_m;
                let stay = gain(current, link_to[current]);
                touched.sort_unstable();
                let mut best = current;
                let mut best_gain = f64::NEG_INFINITY;
                for &c in &touched {
                    if c == current {
                        continue;
                    }
                    let g = gain(c, link_to[c]);
                    if g > best_gain {
                        best_gain = g;
                        best = c;
                    }
                }
                if best != current && best_gain > stay + MOVE_EPSILON {
                    community[node] = best;
                    moved = true;
                }
                total[community[node]] += k;

                for &c in &touched {
                    link_to[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }

        let mut dense: HashMap<usize, usize> = HashMap::new();
        let labels = community
            .iter()
            .map(|c| {
                let next = dense.len();
                *dense.entry(*c).or_insert(next)
            })
            .collect();
        (labels, any_move)
    }

    fn aggregate(&self, labels: &[usize]) -> Level {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut self_loops = vec![0.0; count];
        let mut degree = vec![0.0; count];
        let mut members = vec![Vec::new(); count];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        for node in 0..self.len() {
            let c = labels[node];
            self_loops[c] += self.self_loops[node];
            degree[c] += self.degree[node];
            members[c].extend_from_slice(&self.members[node]);
            for &(nb, w) in &self.adjacency[node] {
                let d = labels[nb];
                if d == c {
                    // each internal edge is seen from both ends
                    self_loops[c] += w / 2.0;
                } else {
                    *links[c].entry(d).or_default() += w;
                }
            }
        }
        for m in &mut members {
            m.sort_unstable();
        }
        Level {
            adjacency: links.into_iter().map(|l| l.into_iter().collect()).collect(),
            self_loops,
            degree,
            members,
        }
    }

    /// Modularity with every node as its own community.
    fn quality(&self, resolution: f64, two_m: f64) -> f64 {
        (0..self.len())
            .map(|c| {
                let share = self.degree[c] / two_m;
                2.0 * self.self_loops[c] / two_m - resolution * share * share
            })
            .sum()
    }
}

/// Louvain community detection. Vertices are visited in an order shuffled
/// by `seed`; among equally good target communities the lowest id wins.
pub fn louvain(graph: &GroupGraph, resolution: f64, seed: u64) -> Result<CommunityAssignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    louvain_with_visit_order(graph, resolution, seed, |members| {
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.shuffle(&mut rng);
        order
    })
}

/// Louvain with a caller-chosen node visit order at every level. The callback
/// receives, for each node of the level, the original vertex indices it holds.
pub(crate) fn louvain_with_visit_order<F>(
    graph: &GroupGraph,
    resolution: f64,
    seed: u64,
    mut visit_order: F,
) -> Result<CommunityAssignment>
where
    F: FnMut(&[Vec<usize>]) -> Vec<usize>,
{
    if graph.is_empty() {
        return Err(Error::EmptyGraph("louvain needs at least one vertex".into()));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::config(format!("resolution must be positive, got {resolution}")));
    }

    let two_m = 2.0 * graph.total_weight() as f64;
    let mut level = Level::from_graph(graph);
    let mut quality = 0.0;
    if two_m > 0.0 {
        quality = level.quality(resolution, two_m);
        loop {
            let order = visit_order(&level.members);
            let (labels, moved) = level.move_nodes(&order, resolution, two_m);
            if !moved {
                break;
            }
            let next = level.aggregate(&labels);
            let next_quality = next.quality(resolution, two_m);
            let gain = next_quality - quality;
            level = next;
            quality = next_quality;
            if gain < CONVERGENCE_EPSILON {
                break;
            }
        }
    }

    let mut by_vertex = vec![0usize; graph.vertex_count()];
    for (node, members) in level.members.iter().enumerate() {
        for &v in members {
            by_vertex[v] = node;
        }
    }
    let mut dense: HashMap<usize, usize> = HashMap::new();
    let membership: BTreeMap<String, usize> = by_vertex
        .iter()
        .enumerate()
        .map(|(v, node)| {
            let next = dense.len();
            (graph.vertex(v).group_id.clone(), *dense.entry(*node).or_insert(next))
        })
        .collect();

    Ok(CommunityAssignment {
        communities: summarize(graph, &membership),
        membership,
        modularity: quality,
        resolution,
        seed,
    })
}

/// Runs `louvain` with seeds `seed..seed + k` and keeps the highest
/// modularity; ties go to the lowest seed.
pub fn louvain_best_of(
    graph: &GroupGraph,
    resolution: f64,
    seed: u64,
    k: usize,
) -> Result<CommunityAssignment> {
    if k == 0 {
        return Err(Error::config("best_of_k must be at least 1"));
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| seed.wrapping_add(i)).collect();

    #[cfg(feature = "parallel")]
    let runs: Vec<Result<CommunityAssignment>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| louvain(graph, resolution, s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<CommunityAssignment>> =
        seeds.iter().map(|&s| louvain(graph, resolution, s)).collect();

    let mut best: Option<CommunityAssignment> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.modularity > b.modularity) {
            best = Some(run);
        }
    }
    Ok(best.expect("k >= 1"))
}

/// Per-community size, induced mean clustering and internal weight,
/// ordered by community id.
pub fn summarize(graph: &GroupGraph, membership: &BTreeMap<String, usize>) -> Vec<CommunitySummary> {
    let count = membership.values().max().map_or(0, |m| m + 1);
    let label = |i: usize| membership.get(&graph.vertex(i).group_id).copied();
    let mut internal = vec![0u64; count];
    for (a, b, w) in graph.edges() {
        if let (Some(ca), Some(cb)) = (label(a), label(b)) {
            if ca == cb {
                internal[ca] += w;
            }
        }
    }
    (0..count)
        .map(|c| {
            let sub = graph.induced(|i| label(i) == Some(c));
            CommunitySummary {
                community_id: c,
                size: sub.vertex_count(),
                mean_clustering: clustering(&sub, None).mean_clustering,
                internal_weight: internal[c],
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    group_id: String,
    community_id: usize,
}

pub fn write_assignment_csv<W: std::io::Write>(assignment: &CommunityAssignment, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    if assignment.membership.is_empty() {
        writer.write_record(["group_id", "community_id"])?;
    }
    for (group_id, &community_id) in &assignment.membership {
        writer.serialize(AssignmentRow {
            group_id: group_id.clone(),
            community_id,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_assignment_csv<R: std::io::Read>(source: R) -> Result<BTreeMap<String, usize>> {
    let mut membership = BTreeMap::new();
    for row in csv::Reader::from_reader(source).deserialize() {
        let row: AssignmentRow = row?;
        if membership.insert(row.group_id.clone(), row.community_id).is_some() {
            return Err(Error::format("communities.csv", format!("{} listed twice", row.group_id)));
        }
    }
    Ok(membership)
}
