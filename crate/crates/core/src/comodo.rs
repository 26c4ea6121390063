//! Top-k description-based community mining over a community pattern tree.
//!
//! The tree is an FP-tree over actor selector sets whose nodes carry graph
//! aggregates. Actors are inserted with their weighted degree; each edge is
//! inserted as the intersection of its endpoints' selector sets carrying the
//! edge weight. Both endpoints of an edge satisfy a pattern exactly when the
//! pattern is contained in that intersection, so summing the edge payloads of
//! a pattern's tree paths yields its intra-community weight. Every candidate
//! is therefore scored from the tree alone, and branch-and-bound on an
//! admissible optimistic estimate cuts refinements that cannot enter the
//! current top k.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::attributes::{AttributeTable, Selector};
use crate::contact::InteractionGraph;
use crate::error::{Error, Result};
use crate::netstats::{evaluate, CommunityMeasure, CommunityStats, GraphTotals};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Payload {
    pub node_count: usize,
    pub degree_sum: f64,
    pub edge_weight: f64,
}

impl AddAssign for Payload {
    fn add_assign(&mut self, rhs: Self) {
        self.node_count += rhs.node_count;
        self.degree_sum += rhs.degree_sum;
        self.edge_weight += rhs.edge_weight;
    }
}

impl Payload {
    fn stats(self) -> CommunityStats {
        CommunityStats { size: self.node_count, degree_sum: self.degree_sum, intra_weight: self.edge_weight }
    }
}

#[derive(Debug, Clone)]
struct Node {
    item: usize,
    parent: Option<usize>,
    children: Vec<(usize, usize)>,
    payload: Payload,
}

/// Prefix tree over item sequences (items are canonical selector ranks).
#[derive(Debug, Clone, Default)]
struct PrefixTree {
    nodes: Vec<Node>,
    roots: Vec<(usize, usize)>,
    header: BTreeMap<usize, Vec<usize>>,
}

impl PrefixTree {
    fn insert(&mut self, items: &[usize], payload: Payload) {
        let mut parent: Option<usize> = None;
        for &item in items {
            let siblings = match parent {
                Some(p) => &self.nodes[p].children,
                None => &self.roots,
            };
            let found = siblings.iter().find(|&&(it, _)| it == item).map(|&(_, idx)| idx);
            let idx = match found {
                Some(idx) => idx,
                None => {
                    let idx = self.nodes.len();
                    self.nodes.push(Node { item, parent, children: Vec::new(), payload: Payload::default() });
                    match parent {
                        Some(p) => self.nodes[p].children.push((item, idx)),
                        None => self.roots.push((item, idx)),
                    }
                    self.header.entry(item).or_default().push(idx);
                    idx
                }
            };
            self.nodes[idx].payload += payload;
            parent = Some(idx);
        }
    }

    fn item_total(&self, item: usize) -> Payload {
        let mut acc = Payload::default();
        for &n in self.header.get(&item).into_iter().flatten() {
            acc += self.nodes[n].payload;
        }
        acc
    }

    fn prefix(&self, node: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = self.nodes[node].parent;
        while let Some(p) = cur {
            path.push(self.nodes[p].item);
            cur = self.nodes[p].parent;
        }
        path.reverse();
        path
    }

    /// Tree of the prefix paths of `item`, keeping items whose conditional
    /// support reaches `min_size`.
    fn conditional(&self, item: usize, min_size: usize) -> PrefixTree {
        let paths: Vec<(Vec<usize>, Payload)> = self
            .header
            .get(&item)
            .into_iter()
            .flatten()
            .map(|&n| (self.prefix(n), self.nodes[n].payload))
            .collect();
        let mut support: HashMap<usize, usize> = HashMap::new();
        for (path, payload) in &paths {
            for &it in path {
                *support.entry(it).or_insert(0) += payload.node_count;
            }
        }
        let mut tree = PrefixTree::default();
        for (path, payload) in paths {
            let kept: Vec<usize> = path.into_iter().filter(|it| support[it] >= min_size).collect();
            if !kept.is_empty() {
                tree.insert(&kept, payload);
            }
        }
        tree
    }
}

/// Community pattern tree for one graph and attribute table.
#[derive(Debug, Clone)]
pub struct CpTree {
    /// Selectors in canonical order (descending frequency, then lexicographic).
    selectors: Vec<Selector>,
    rank: HashMap<Selector, usize>,
    frequency: Vec<usize>,
    tree: PrefixTree,
    totals: GraphTotals,
}

/// Builds the tree. Graph nodes missing from the attribute table have no
/// selectors; attribute rows for actors outside the graph are ignored.
pub fn build_cp_tree(graph: &InteractionGraph, attributes: &AttributeTable) -> CpTree {
    let empty = BTreeSet::new();
    let selector_sets: Vec<&BTreeSet<Selector>> =
        graph.nodes().iter().map(|a| attributes.selectors(a).unwrap_or(&empty)).collect();
    let mut counts: HashMap<&Selector, usize> = HashMap::new();
    for set in &selector_sets {
        for s in *set {
            *counts.entry(s).or_insert(0) += 1;
        }
    }
    let mut selectors: Vec<(&Selector, usize)> = counts.into_iter().collect();
    selectors.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let frequency = selectors.iter().map(|&(_, c)| c).collect();
    let selectors: Vec<Selector> = selectors.into_iter().map(|(s, _)| s.clone()).collect();
    let rank: HashMap<Selector, usize> = selectors.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

    let transactions: Vec<Vec<usize>> = selector_sets
        .iter()
        .map(|set| {
            let mut t: Vec<usize> = set.iter().map(|s| rank[s]).collect();
            t.sort_unstable();
            t
        })
        .collect();
    let mut tree = PrefixTree::default();
    for (i, t) in transactions.iter().enumerate() {
        let payload = Payload { node_count: 1, degree_sum: graph.weighted_degree(i), edge_weight: 0.0 };
        tree.insert(t, payload);
    }
    for (i, j, w) in graph.edges() {
        let common = intersect_sorted(&transactions[i], &transactions[j]);
        if !common.is_empty() {
            tree.insert(&common, Payload { node_count: 0, degree_sum: 0.0, edge_weight: w });
        }
    }
    CpTree { selectors, rank, frequency, tree, totals: GraphTotals::of(graph) }
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl CpTree {
    pub fn selectors(&self) -> &[Selector] {
        &self.selectors
    }

    /// Number of actors carrying `selector`.
    pub fn frequency(&self, selector: &Selector) -> Option<usize> {
        self.rank.get(selector).map(|&r| self.frequency[r])
    }

    pub fn totals(&self) -> GraphTotals {
        self.totals
    }

    pub fn node_count(&self) -> usize {
        self.tree.nodes.len()
    }

    /// `(selector, payload)` for every tree node, in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = (&Selector, Payload)> + '_ {
        self.tree.nodes.iter().map(|n| (&self.selectors[n.item], n.payload))
    }

    /// Sum of node counts on the header list of `selector`.
    pub fn header_count(&self, selector: &Selector) -> usize {
        self.rank.get(selector).map_or(0, |&r| self.tree.item_total(r).node_count)
    }

    /// Aggregates of the actors matching `pattern`, read from the tree.
    pub fn pattern_stats(&self, pattern: &[Selector]) -> CommunityStats {
        let Some(mut items) = pattern.iter().map(|s| self.rank.get(s).copied()).collect::<Option<Vec<_>>>() else {
            return CommunityStats::default();
        };
        items.sort_unstable();
        items.dedup();
        let Some((&last, rest)) = items.split_last() else {
            return CommunityStats {
                size: self.totals.nodes,
                degree_sum: 2.0 * self.totals.total_weight,
                intra_weight: self.totals.total_weight,
            };
        };
        let mut acc = Payload::default();
        for &n in self.tree.header.get(&last).into_iter().flatten() {
            let path = self.tree.prefix(n);
            if rest.iter().all(|it| path.binary_search(it).is_ok()) {
                acc += self.tree.nodes[n].payload;
            }
        }
        acc.stats()
    }
}

/// Admissible upper bound on the quality of a pattern and all its
/// refinements. For local modularity, any subset has at most the intra
/// weight of its superset and a non-negative penalty, so `e_C / m` bounds
/// it; the other measures fall back to their global maximum.
pub fn optimistic_estimate(stats: CommunityStats, totals: GraphTotals, measure: CommunityMeasure) -> f64 {
    match measure {
        CommunityMeasure::ModularityLocal if totals.total_weight > 0.0 => stats.intra_weight / totals.total_weight,
        CommunityMeasure::ModularityLocal => 0.0,
        m => m.upper_bound(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub measure: CommunityMeasure,
    pub k: usize,
    pub min_size: usize,
    pub max_depth: usize,
    /// Branch-and-bound on the optimistic estimate; off gives plain
    /// exhaustive enumeration.
    pub pruning: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { measure: CommunityMeasure::ModularityLocal, k: 10, min_size: 2, max_depth: 3, pruning: true }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.min_size == 0 || self.max_depth == 0 {
            return Err(Error::Validation("k, min_size and max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPattern {
    /// Selectors in canonical order.
    pub selectors: Vec<Selector>,
    pub members: Vec<String>,
    pub quality: f64,
    pub measure: CommunityMeasure,
    pub optimistic_estimate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningStats {
    /// Patterns meeting `min_size` whose quality was computed.
    pub evaluated: usize,
    /// Patterns whose refinements were cut by the bound.
    pub pruned: usize,
    /// Patterns skipped because the measure is undefined on them.
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutcome {
    pub patterns: Vec<CommunityPattern>,
    pub stats: MiningStats,
}

/// Candidate ordering: quality descending, then shorter, then the sorted
/// selector list lexicographically.
pub(crate) fn rank_order(q1: f64, key1: &[Selector], q2: f64, key2: &[Selector]) -> Ordering {
    q2.total_cmp(&q1).then_with(|| key1.len().cmp(&key2.len())).then_with(|| key1.cmp(key2))
}

struct Candidate {
    items: Vec<usize>,
    key: Vec<Selector>,
    quality: f64,
    estimate: f64,
}

struct TopK {
    k: usize,
    entries: Vec<Candidate>,
}

impl TopK {
    fn threshold(&self) -> f64 {
        if self.entries.len() < self.k {
            f64::NEG_INFINITY
        } else {
            self.entries[self.k - 1].quality
        }
    }

    fn offer(&mut self, c: Candidate) {
        let pos = self
            .entries
            .partition_point(|e| rank_order(e.quality, &e.key, c.quality, &c.key) == Ordering::Less);
        if pos < self.k {
            self.entries.insert(pos, c);
            self.entries.truncate(self.k);
        }
    }
}

struct Search<'a> {
    cp: &'a CpTree,
    config: MiningConfig,
    top: TopK,
    stats: MiningStats,
}

impl Search<'_> {
    fn grow(&mut self, tree: &PrefixTree, suffix: &[usize]) {
        let mut extensions = Vec::new();
        for &item in tree.header.keys() {
            let payload = tree.item_total(item);
            if payload.node_count < self.config.min_size {
                continue;
            }
            let stats = payload.stats();
            let mut items = suffix.to_vec();
            items.push(item);
            self.stats.evaluated += 1;
            let estimate = optimistic_estimate(stats, self.cp.totals, self.config.measure);
            match evaluate(self.config.measure, stats, self.cp.totals) {
                Ok(quality) => {
                    let mut key: Vec<Selector> = items.iter().map(|&i| self.cp.selectors[i].clone()).collect();
                    key.sort();
                    self.top.offer(Candidate { items: items.clone(), key, quality, estimate });
                }
                Err(_) => self.stats.undefined += 1,
            }
            extensions.push((item, items, estimate));
        }
        if suffix.len() + 1 >= self.config.max_depth {
            return;
        }
        extensions.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        for (item, items, estimate) in extensions {
            // strict: a tie may still win on the secondary ordering
            if self.config.pruning && estimate < self.top.threshold() {
                self.stats.pruned += 1;
                continue;
            }
            let cond = tree.conditional(item, self.config.min_size);
            if !cond.header.is_empty() {
                self.grow(&cond, &items);
            }
        }
    }
}

/// The `k` best patterns of at most `max_depth` selectors covering at least
/// `min_size` actors.
pub fn mine_top_k(graph: &InteractionGraph, attributes: &AttributeTable, config: MiningConfig) -> Result<MiningOutcome> {
    config.validate()?;
    let cp = build_cp_tree(graph, attributes);
    mine_tree(&cp, graph, attributes, config)
}

/// Mines an already built tree. `graph` and `attributes` must be the ones
/// the tree was built from; they are used only to list members.
pub fn mine_tree(
    cp: &CpTree,
    graph: &InteractionGraph,
    attributes: &AttributeTable,
    config: MiningConfig,
) -> Result<MiningOutcome> {
    config.validate()?;
    let mut search = Search { cp, config, top: TopK { k: config.k, entries: Vec::new() }, stats: MiningStats::default() };
    search.grow(&cp.tree, &[]);
    let stats = search.stats;
    let patterns = search
        .top
        .entries
        .into_iter()
        .map(|c| {
            let mut items = c.items;
            items.sort_unstable();
            let selectors: Vec<Selector> = items.iter().map(|&i| cp.selectors[i].clone()).collect();
            let members = members_of(graph, attributes, &selectors);
            CommunityPattern { selectors, members, quality: c.quality, measure: config.measure, optimistic_estimate: c.estimate }
        })
        .collect();
    Ok(MiningOutcome { patterns, stats })
}

/// Graph nodes whose selector set contains every selector of `pattern`.
pub fn members_of(graph: &InteractionGraph, attributes: &AttributeTable, pattern: &[Selector]) -> Vec<String> {
    graph
        .nodes()
        .iter()
        .filter(|a| attributes.selectors(a).is_some_and(|s| pattern.iter().all(|p| s.contains(p))))
        .cloned()
        .collect()
}
