//! Weighted, undirected mention graph over the users of interest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{extract_mentions, UserDocument};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Accounts with more unique connections than this lose all edges.
    pub celebrity_threshold: usize,
    /// Drop shared-mention mass from third accounts that have more than
    /// `celebrity_threshold` unique mentioners among the users of interest.
    pub prune_shared_hubs: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            celebrity_threshold: 5,
            prune_shared_hubs: true,
        }
    }
}

/// Per-user mention counts keyed by lowercased handle, self-mentions
/// removed.
pub type MentionCounts = Vec<BTreeMap<String, u64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct MentionGraph {
    nodes: Vec<String>,
    /// Sorted by neighbor index; weights are positive.
    adjacency: Vec<Vec<(u32, u64)>>,
}

/// Maps lowercased user ids to node indices; the first document wins when
/// two ids differ only by case.
pub fn handle_index<S: AsRef<str>>(user_ids: &[S]) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, u) in user_ids.iter().enumerate() {
        map.entry(u.as_ref().to_lowercase()).or_insert(i);
    }
    map
}

pub fn count_mentions(docs: &[UserDocument]) -> MentionCounts {
    let ids: Vec<&str> = docs.iter().map(|d| d.user_id.as_str()).collect();
    let handles = handle_index(&ids);
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            let mut counts = BTreeMap::new();
            for text in &d.raw_texts {
                for h in extract_mentions(text) {
                    if handles.get(&h) == Some(&i) {
                        continue;
                    }
                    *counts.entry(h).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect()
}

/// Builds the graph from the users' raw tweets.
///
/// * a direct edge joins two users of interest with the total number of
///   mentions between them, both directions summed;
/// * two users of interest who mention the same third account gain the sum
///   of their mention counts of that account, accumulated over all shared
///   accounts;
/// * users of interest whose number of unique connections exceeds the
///   celebrity threshold lose every incident edge.
pub fn build_mention_graph(docs: &[UserDocument], cfg: &GraphConfig) -> MentionGraph {
    let nodes: Vec<String> = docs.iter().map(|d| d.user_id.clone()).collect();
    let counts = count_mentions(docs);
    build_from_counts(nodes, &counts, cfg)
}

pub fn build_from_counts(nodes: Vec<String>, counts: &MentionCounts, cfg: &GraphConfig) -> MentionGraph {
    let handles = handle_index(&nodes);
    let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    let mut mentioners: BTreeMap<&str, Vec<(usize, u64)>> = BTreeMap::new();
    for (u, per_user) in counts.iter().enumerate() {
        for (h, &c) in per_user {
            if let Some(&v) = handles.get(h) {
                *edges.entry(key(u, v)).or_insert(0) += c;
            }
            mentioners.entry(h.as_str()).or_default().push((u, c));
        }
    }

    for list in mentioners.values() {
        if list.len() < 2 || (cfg.prune_shared_hubs && list.len() > cfg.celebrity_threshold) {
            continue;
        }
        for (a, &(u, cu)) in list.iter().enumerate() {
            for &(v, cv) in &list[a + 1..] {
                *edges.entry(key(u, v)).or_insert(0) += cu + cv;
            }
        }
    }

    let mut degree = vec![0usize; nodes.len()];
    for &(a, b) in edges.keys() {
        degree[a] += 1;
        degree[b] += 1;
    }
    let celebrity: Vec<bool> = degree.iter().map(|&d| d > cfg.celebrity_threshold).collect();

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (&(a, b), &w) in &edges {
        if celebrity[a] || celebrity[b] {
            continue;
        }
        adjacency[a].push((b as u32, w));
        adjacency[b].push((a as u32, w));
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    MentionGraph { nodes, adjacency }
}

impl MentionGraph {
    /// Graph from explicit undirected edges; repeated pairs accumulate and
    /// self-loops are dropped.
    pub fn from_edges(nodes: Vec<String>, edges: &[(usize, usize, u64)]) -> Self {
        let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a != b && w > 0 {
                *acc.entry((a.min(b), a.max(b))).or_insert(0) += w;
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(a, b), &w) in &acc {
            adjacency[a].push((b as u32, w));
            adjacency[b].push((a as u32, w));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        MentionGraph { nodes, adjacency }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, u64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.adjacency[i].is_empty()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<u64> {
        let adj = &self.adjacency[a];
        adj.binary_search_by_key(&(b as u32), |&(n, _)| n)
            .ok()
            .map(|k| adj[k].1)
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, adj)| {
            adj.iter()
                .filter(move |&&(b, _)| (b as usize) > a)
                .map(move |&(b, w)| (a, b as usize, w))
        })
    }

    /// Edges as a `BTreeMap` keyed by user-id pairs (lexicographically
    /// ordered within each pair).
    pub fn edge_map(&self) -> BTreeMap<(String, String), u64> {
        self.edges()
            .map(|(a, b, w)| {
                let (x, y) = (&self.nodes[a], &self.nodes[b]);
                let pair = if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
                (pair, w)
            })
            .collect()
    }

    pub fn isolated_nodes(&self) -> BTreeSet<usize> {
        (0..self.n_nodes()).filter(|&i| self.is_isolated(i)).collect()
    }

    /// Writes `user_a<TAB>user_b<TAB>weight` lines.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (a, b, weight) in self.edges() {
            writeln!(w, "{}\t{}\t{}", self.nodes[a], self.nodes[b], weight)?;
        }
        w.flush()?;
        Ok(())
    }
}
