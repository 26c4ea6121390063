//! Developer familiarity ranking over a combined resource / contact graph.
//!
//! The resource tree distributes a random walker from a directory to its
//! children in proportion to changed lines, and from a file to the developers
//! who changed it. Developers pass a `kappa` share of their mass on to the
//! developers they talked to shortly before committing; the rest returns to
//! the query node. Stationary developer mass is the familiarity score.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::contact::ContactSession;
use crate::error::{Error, Result};

/// Eight hours.
pub const DEFAULT_WINDOW: i64 = 8 * 3600;
pub const DEFAULT_KAPPA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub developer: String,
    pub path: String,
    pub lines_added: u64,
    pub lines_removed: u64,
    pub commit_time: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineMetric {
    #[default]
    AddedAndRemoved,
    AddedOnly,
}

impl LineMetric {
    fn lines(self, r: &ChangeRecord) -> u64 {
        match self {
            Self::AddedAndRemoved => r.lines_added + r.lines_removed,
            Self::AddedOnly => r.lines_added,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertGraphParams {
    pub kappa: f64,
    pub window: i64,
    pub metric: LineMetric,
}

impl Default for ExpertGraphParams {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA, window: DEFAULT_WINDOW, metric: LineMetric::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Directory,
    File,
    Developer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertNode {
    pub kind: NodeKind,
    /// Normalized path for tree nodes (empty for the root), id for developers.
    pub name: String,
}

/// Resolves `.`, `..` and repeated separators. The root is the empty path.
pub fn normalize_path(path: &str) -> Result<String> {
    let mut parts: Vec<&str> = Vec::new();
    for part in path.split(['/', '\\']) {
        match part {
            "" | "." => {}
            ".." => {
                parts.pop().ok_or_else(|| Error::Validation(format!("path `{path}` escapes the project root")))?;
            }
            p => parts.push(p),
        }
    }
    Ok(parts.join("/"))
}

fn parent_of(path: &str) -> &str {
    path.rsplit_once('/').map_or("", |(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedExpertGraph {
    nodes: Vec<ExpertNode>,
    tree_index: HashMap<String, usize>,
    developer_index: BTreeMap<String, usize>,
    /// Transition probabilities; each row sums to at most 1, the remainder
    /// restarts at the query node.
    out: Vec<Vec<(usize, f64)>>,
    params: ExpertGraphParams,
}

pub fn build_expert_graph(
    changes: &[ChangeRecord],
    sessions: &[ContactSession],
    params: ExpertGraphParams,
) -> Result<CombinedExpertGraph> {
    if !(0.0..=1.0).contains(&params.kappa) {
        return Err(Error::Validation(format!("kappa {} outside [0,1]", params.kappa)));
    }
    if params.window <= 0 {
        return Err(Error::Validation("window must be positive".into()));
    }
    // file -> developer -> lines
    let mut per_file: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut commits: BTreeMap<&str, BTreeSet<i64>> = BTreeMap::new();
    for r in changes {
        let lines = params.metric.lines(r);
        if lines == 0 {
            continue;
        }
        let path = normalize_path(&r.path)?;
        if path.is_empty() {
            return Err(Error::Validation(format!("change record for `{}` has no file path", r.path)));
        }
        *per_file.entry(path).or_default().entry(r.developer.clone()).or_insert(0) += lines;
        commits.entry(&r.developer).or_default().insert(r.commit_time);
    }

    // subtree line totals for every directory and file
    let mut subtree: BTreeMap<String, u64> = BTreeMap::new();
    let mut is_file: BTreeSet<&str> = BTreeSet::new();
    for (file, devs) in &per_file {
        let lines: u64 = devs.values().sum();
        is_file.insert(file);
        let mut p = file.as_str();
        loop {
            *subtree.entry(p.to_string()).or_insert(0) += lines;
            if p.is_empty() {
                break;
            }
            p = parent_of(p);
        }
    }
    if let Some(clash) = per_file.keys().find(|f| subtree.keys().any(|p| parent_of(p) == f.as_str())) {
        return Err(Error::Validation(format!("`{clash}` is used both as a file and as a directory")));
    }

    let mut nodes = Vec::new();
    let mut tree_index = HashMap::new();
    for path in subtree.keys() {
        let kind = if is_file.contains(path.as_str()) { NodeKind::File } else { NodeKind::Directory };
        tree_index.insert(path.clone(), nodes.len());
        nodes.push(ExpertNode { kind, name: path.clone() });
    }

    // developer contact mass before each commit
    let mut contact: BTreeMap<&str, BTreeMap<&str, i64>> = BTreeMap::new();
    for (&dev, times) in &commits {
        for s in sessions.iter().filter(|s| s.pair.contains(dev)) {
            let other = s.pair.partner(dev).expect("pair contains dev");
            let d: i64 = times.iter().map(|&t| s.overlap(t - params.window, t)).sum();
            if d > 0 {
                *contact.entry(dev).or_default().entry(other).or_insert(0) += d;
            }
        }
    }
    let mut developers: BTreeSet<&str> = commits.keys().copied().collect();
    if params.kappa > 0.0 {
        developers.extend(contact.values().flat_map(|m| m.keys().copied()));
    }
    let mut developer_index = BTreeMap::new();
    for dev in developers {
        developer_index.insert(dev.to_string(), nodes.len());
        nodes.push(ExpertNode { kind: NodeKind::Developer, name: dev.to_string() });
    }

    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
    for (path, &lines) in &subtree {
        if path.is_empty() {
            continue;
        }
        let parent = parent_of(path);
        out[tree_index[parent]].push((tree_index[path], lines as f64 / subtree[parent] as f64));
    }
    for (file, devs) in &per_file {
        let total: u64 = devs.values().sum();
        for (dev, &lines) in devs {
            out[tree_index[file]].push((developer_index[dev], lines as f64 / total as f64));
        }
    }
    if params.kappa > 0.0 {
        for (dev, partners) in &contact {
            let total: i64 = partners.values().sum();
            for (other, &d) in partners {
                out[developer_index[*dev]].push((developer_index[*other], params.kappa * d as f64 / total as f64));
            }
        }
    }
    for row in &mut out {
        row.sort_by_key(|&(j, _)| j);
    }
    Ok(CombinedExpertGraph { nodes, tree_index, developer_index, out, params })
}

impl CombinedExpertGraph {
    pub fn nodes(&self) -> &[ExpertNode] {
        &self.nodes
    }

    pub fn params(&self) -> ExpertGraphParams {
        self.params
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tree_node(&self, path: &str) -> Option<usize> {
        self.tree_index.get(&normalize_path(path).ok()?).copied()
    }

    pub fn developer(&self, id: &str) -> Option<usize> {
        self.developer_index.get(id).copied()
    }

    pub fn developers(&self) -> impl Iterator<Item = &str> {
        self.developer_index.keys().map(String::as_str)
    }

    /// Outgoing transition weights of a node.
    pub fn out_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.out[node]
    }

    /// Weight of the edge `from -> to`, if present.
    pub fn edge_weight(&self, from: usize, to: usize) -> Option<f64> {
        self.out[from].iter().find(|&&(j, _)| j == to).map(|&(_, w)| w)
    }

    /// Full one-step distribution from `node` with restart at `query`.
    pub fn effective_out_distribution(&self, node: usize, query: usize, damping: f64) -> Vec<(usize, f64)> {
        let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
        let followed: f64 = self.out[node].iter().map(|&(_, w)| w).sum();
        for &(j, w) in &self.out[node] {
            *dist.entry(j).or_insert(0.0) += damping * w;
        }
        *dist.entry(query).or_insert(0.0) += (1.0 - damping) + damping * (1.0 - followed);
        dist.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for RankParams {
    fn default() -> Self {
        Self { damping: 0.85, epsilon: 1e-8, max_iter: 1000 }
    }
}

/// Developers by stationary probability of the walk restarting at `query`,
/// renormalized over developers. Ties are broken by developer id.
pub fn rank_developers(graph: &CombinedExpertGraph, query: &str, params: RankParams) -> Result<Vec<(String, f64)>> {
    if !(0.0..1.0).contains(&params.damping) {
        return Err(Error::Validation(format!("damping {} outside [0,1)", params.damping)));
    }
    let q = graph
        .tree_node(query)
        .ok_or_else(|| Error::Validation(format!("query path `{query}` is not in the resource tree")))?;
    let n = graph.nodes.len();
    let mut x = vec![0.0; n];
    x[q] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..params.max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut restart = 0.0;
        for (u, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut followed = 0.0;
            for &(v, w) in &graph.out[u] {
                next[v] += params.damping * mass * w;
                followed += w;
            }
            restart += mass * (1.0 - params.damping * followed);
        }
        next[q] += restart;
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < params.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iterations: params.max_iter, residual });
    }
    let total: f64 = graph.developer_index.values().map(|&i| x[i]).sum();
    if total <= 0.0 {
        return Err(Error::Domain(format!("no developer is reachable from `{query}`")));
    }
    let mut ranked: Vec<(String, f64)> = graph.developer_index.iter().map(|(d, &i)| (d.clone(), x[i] / total)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Summed score of a developer subset, e.g. the team reviewing a package.
pub fn coverage(ranking: &[(String, f64)], developers: &[&str]) -> f64 {
    ranking.iter().filter(|(d, _)| developers.contains(&d.as_str())).map(|(_, s)| s).sum()
}
