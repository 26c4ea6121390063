//! Network statistics and community quality measures.
//!
//! All three community measures are functions of the same sufficient
//! statistics: member count, summed weighted degree and intra-member edge
//! weight, together with the graph's node count and total edge weight. The
//! pattern miners rely on this to score candidates without touching the graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::{ContactSession, InteractionGraph, WeightingMode};
use crate::error::{Error, Result};

/// Actor to community assignment. Actors missing from the map are unassigned.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: BTreeMap<String, String>,
}

impl Partition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, actor: impl Into<String>, community: impl Into<String>) {
        self.assignment.insert(actor.into(), community.into());
    }

    pub fn community_of(&self, actor: &str) -> Option<&str> {
        self.assignment.get(actor).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignment.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    /// Community id -> members.
    pub fn communities(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (a, c) in &self.assignment {
            out.entry(c.as_str()).or_default().insert(a.as_str());
        }
        out
    }
}

impl<A: Into<String>, C: Into<String>> FromIterator<(A, C)> for Partition {
    fn from_iter<T: IntoIterator<Item = (A, C)>>(iter: T) -> Self {
        let mut p = Self::new();
        for (a, c) in iter {
            p.assign(a, c);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommunityMeasure {
    ModularityLocal,
    Segregation,
    InvConductance,
}

impl CommunityMeasure {
    pub const ALL: [CommunityMeasure; 3] = [Self::ModularityLocal, Self::Segregation, Self::InvConductance];

    /// Largest value the measure can take on any community.
    pub fn upper_bound(self) -> f64 {
        1.0
    }
}

impl fmt::Display for CommunityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ModularityLocal => "modularity",
            Self::Segregation => "segregation",
            Self::InvConductance => "conductance",
        })
    }
}

impl FromStr for CommunityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "modularity" | "modularity_local" => Ok(Self::ModularityLocal),
            "segregation" => Ok(Self::Segregation),
            "conductance" | "inv_conductance" => Ok(Self::InvConductance),
            other => Err(Error::Parse(format!("unknown community measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunityScore {
    pub measure: CommunityMeasure,
    pub value: f64,
}

/// Sufficient statistics of a node set.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CommunityStats {
    pub size: usize,
    /// Summed weighted degree of the members.
    pub degree_sum: f64,
    /// Total weight of edges with both endpoints inside.
    pub intra_weight: f64,
}

/// Graph-level constants the measures are normalized by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphTotals {
    pub nodes: usize,
    pub total_weight: f64,
}

impl GraphTotals {
    pub fn of(graph: &InteractionGraph) -> Self {
        Self { nodes: graph.node_count(), total_weight: graph.total_weight() }
    }
}

/// Scores a community from its sufficient statistics.
pub fn evaluate(measure: CommunityMeasure, stats: CommunityStats, totals: GraphTotals) -> Result<f64> {
    let m = totals.total_weight;
    if m <= 0.0 {
        return Err(Error::Undefined("graph has no edge weight".into()));
    }
    if stats.size == 0 {
        return Err(Error::Domain("community is empty".into()));
    }
    let (e, d) = (stats.intra_weight, stats.degree_sum);
    match measure {
        CommunityMeasure::ModularityLocal => {
            let share = d / (2.0 * m);
            Ok(e / m - share * share)
        }
        CommunityMeasure::Segregation | CommunityMeasure::InvConductance if stats.size >= totals.nodes => {
            Err(Error::Domain(format!("{measure} needs a proper subset of the nodes")))
        }
        CommunityMeasure::Segregation => {
            let (n, s) = (totals.nodes as f64, stats.size as f64);
            let expected = 2.0 * m * s * (n - s) / (n * (n - 1.0));
            let observed = (d - 2.0 * e).max(0.0);
            Ok((expected - observed) / expected)
        }
        CommunityMeasure::InvConductance => {
            let cut = (d - 2.0 * e).max(0.0);
            let smaller = d.min(2.0 * m - d);
            if smaller <= 0.0 {
                return Err(Error::Undefined("conductance of a zero-volume side".into()));
            }
            Ok(1.0 - cut / smaller)
        }
    }
}

/// Statistics for the members flagged in `inside` (indexed by node).
pub fn stats_of_mask(graph: &InteractionGraph, inside: &[bool]) -> CommunityStats {
    let mut stats = CommunityStats::default();
    for i in (0..graph.node_count()).filter(|&i| inside[i]) {
        stats.size += 1;
        stats.degree_sum += graph.weighted_degree(i);
    }
    stats.intra_weight = graph.edges().filter(|&(i, j, _)| inside[i] && inside[j]).map(|(_, _, w)| w).sum();
    stats
}

fn member_mask<S: AsRef<str>>(graph: &InteractionGraph, members: &[S]) -> Result<Vec<bool>> {
    if members.is_empty() {
        return Err(Error::Domain("community is empty".into()));
    }
    let mut inside = vec![false; graph.node_count()];
    for m in members {
        inside[graph.require(m.as_ref())?] = true;
    }
    Ok(inside)
}

pub fn community_quality<S: AsRef<str>>(
    graph: &InteractionGraph,
    members: &[S],
    measure: CommunityMeasure,
) -> Result<CommunityScore> {
    let stats = stats_of_mask(graph, &member_mask(graph, members)?);
    Ok(CommunityScore { measure, value: evaluate(measure, stats, GraphTotals::of(graph))? })
}

/// Partition modularity (sum of local modularities), or the size-weighted
/// mean of the per-community score for segregation and conductance.
/// Communities are restricted to graph nodes.
pub fn partition_quality(graph: &InteractionGraph, partition: &Partition, measure: CommunityMeasure) -> Result<f64> {
    let mut groups: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for (actor, community) in partition.iter() {
        if let Some(i) = graph.node_index(actor) {
            groups.entry(community).or_insert_with(|| vec![false; graph.node_count()])[i] = true;
        }
    }
    if groups.len() < 2 {
        return Err(Error::Domain("partition needs at least two communities within the graph".into()));
    }
    let totals = GraphTotals::of(graph);
    let mut acc = 0.0;
    let mut covered = 0usize;
    for mask in groups.values() {
        let stats = stats_of_mask(graph, mask);
        let q = evaluate(measure, stats, totals)?;
        match measure {
            CommunityMeasure::ModularityLocal => acc += q,
            _ => {
                acc += q * stats.size as f64;
                covered += stats.size;
            }
        }
    }
    Ok(match measure {
        CommunityMeasure::ModularityLocal => acc,
        _ => acc / covered as f64,
    })
}

/// For each distinct duration `d`, the number of sessions lasting at least `d`.
pub fn cumulative_contact_lengths(sessions: &[ContactSession]) -> Vec<(i64, usize)> {
    let mut durations: Vec<i64> = sessions.iter().map(ContactSession::duration).collect();
    durations.sort_unstable();
    let n = durations.len();
    let mut out: Vec<(i64, usize)> = Vec::new();
    for (i, &d) in durations.iter().enumerate() {
        if out.last().map(|&(x, _)| x) != Some(d) {
            out.push((d, n - i));
        }
    }
    out
}

/// Duration-weighted share of contacts whose endpoints share a community,
/// per minimum-length threshold. Only sessions with both endpoints assigned
/// count; thresholds without any such session are omitted.
pub fn intra_contact_probability(
    sessions: &[ContactSession],
    partition: &Partition,
    thresholds: &[i64],
) -> Result<Vec<(i64, f64)>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("thresholds must be ascending".into()));
    }
    let labelled: Vec<(i64, bool)> = sessions
        .iter()
        .filter_map(|s| {
            let ca = partition.community_of(s.pair.first())?;
            let cb = partition.community_of(s.pair.second())?;
            Some((s.duration(), ca == cb))
        })
        .collect();
    let mut out = Vec::new();
    for &t in thresholds {
        let (mut intra, mut total) = (0i64, 0i64);
        for &(d, same) in labelled.iter().filter(|&&(d, _)| d >= t) {
            total += d;
            if same {
                intra += d;
            }
        }
        if total > 0 {
            out.push((t, intra as f64 / total as f64));
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbassadorParams {
    pub degree_quantile: f64,
    pub min_communities: usize,
    /// Use weighted degree (default) or neighbor count.
    pub weighted: bool,
}

impl Default for AmbassadorParams {
    fn default() -> Self {
        Self { degree_quantile: 0.8, min_communities: 2, weighted: true }
    }
}

/// Actors with degree at or above the quantile whose neighbors reach at
/// least `min_communities` communities other than their own.
pub fn ambassadors(graph: &InteractionGraph, partition: &Partition, params: AmbassadorParams) -> Result<BTreeSet<String>> {
    if !(params.degree_quantile > 0.0 && params.degree_quantile < 1.0) {
        return Err(Error::Validation(format!("degree quantile {} outside (0,1)", params.degree_quantile)));
    }
    let degree = |i: usize| if params.weighted { graph.weighted_degree(i) } else { graph.degree(i) as f64 };
    let degrees: Vec<f64> = (0..graph.node_count()).map(degree).collect();
    let Some(cutoff) = quantile(&degrees, params.degree_quantile) else {
        return Ok(BTreeSet::new());
    };
    let mut out = BTreeSet::new();
    for i in (0..graph.node_count()).filter(|&i| degrees[i] >= cutoff) {
        let own = partition.community_of(graph.node_name(i));
        let foreign: BTreeSet<&str> = graph
            .neighbors(i)
            .iter()
            .filter_map(|&(j, _)| partition.community_of(graph.node_name(j)))
            .filter(|&c| Some(c) != own)
            .collect();
        if foreign.len() >= params.min_communities {
            out.insert(graph.node_name(i).to_string());
        }
    }
    Ok(out)
}

/// Fraction of each role group that qualifies as ambassador, per
/// minimum-conversation-length threshold. Role groups are counted over all
/// actors listed in `roles`, present in the graph or not.
pub fn ambassador_fractions(
    sessions: &[ContactSession],
    thresholds: &[i64],
    communities: &Partition,
    roles: &Partition,
    params: AmbassadorParams,
    mode: WeightingMode,
) -> Result<Vec<(i64, BTreeMap<String, f64>)>> {
    let role_groups = roles.communities();
    let mut out = Vec::new();
    for (t, graph) in crate::contact::threshold_sweep(sessions, thresholds, mode)? {
        let amb = ambassadors(&graph, communities, params)?;
        let fractions = role_groups
            .iter()
            .map(|(role, members)| {
                let hits = members.iter().filter(|a| amb.contains(**a)).count();
                (role.to_string(), hits as f64 / members.len() as f64)
            })
            .collect();
        out.push((t, fractions));
    }
    Ok(out)
}
