//! Proximity events, contact sessions and weighted interaction graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default maximum silence (seconds) inside one contact.
pub const DEFAULT_OPEN_GAP: i64 = 60;
/// Default minimum duration (seconds) of an emitted contact.
pub const DEFAULT_MIN_DURATION: i64 = 20;

/// Unordered actor pair stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActorPair {
    a: String,
    b: String,
}

impl ActorPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Result<Self> {
        let (x, y) = (x.into(), y.into());
        if x == y {
            return Err(Error::Validation(format!("self-contact for actor `{x}`")));
        }
        if x.is_empty() || y.is_empty() {
            return Err(Error::Validation("empty actor id".into()));
        }
        Ok(if x < y { Self { a: x, b: y } } else { Self { a: y, b: x } })
    }

    pub fn first(&self) -> &str {
        &self.a
    }

    pub fn second(&self) -> &str {
        &self.b
    }

    pub fn contains(&self, actor: &str) -> bool {
        self.a == actor || self.b == actor
    }

    /// The other endpoint, if `actor` is one of the two.
    pub fn partner(&self, actor: &str) -> Option<&str> {
        if self.a == actor {
            Some(&self.b)
        } else if self.b == actor {
            Some(&self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for ActorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityEvent {
    pub pair: ActorPair,
    pub time: i64,
    pub strength: Option<f64>,
}

impl ProximityEvent {
    pub fn new(a: &str, b: &str, time: i64) -> Result<Self> {
        if time < 0 {
            return Err(Error::Validation(format!("negative event time {time}")));
        }
        Ok(Self { pair: ActorPair::new(a, b)?, time, strength: None })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContactSession {
    pub pair: ActorPair,
    pub start: i64,
    pub end: i64,
}

impl ContactSession {
    pub fn new(a: &str, b: &str, start: i64, end: i64) -> Result<Self> {
        if end < start {
            return Err(Error::Validation(format!("session ends before it starts ({start} > {end})")));
        }
        Ok(Self { pair: ActorPair::new(a, b)?, start, end })
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }

    /// Whether the session is ongoing at `time` (inclusive bounds).
    pub fn spans(&self, time: i64) -> bool {
        self.start <= time && time <= self.end
    }

    /// Seconds of this session falling inside `[from, to]`.
    pub fn overlap(&self, from: i64, to: i64) -> i64 {
        (self.end.min(to) - self.start.max(from)).max(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionRules {
    pub open_gap: i64,
    pub min_duration: i64,
}

impl Default for SessionRules {
    fn default() -> Self {
        Self { open_gap: DEFAULT_OPEN_GAP, min_duration: DEFAULT_MIN_DURATION }
    }
}

/// Turns a time-sorted detection stream into contact sessions.
///
/// Detections of one pair separated by at most `open_gap` seconds belong to
/// the same run; a run becomes a session when `last - first >= min_duration`.
/// Repeated `(pair, time)` detections are absorbed by the run they extend.
/// Sessions are returned ordered by `(start, pair, end)`.
pub fn sessionize(events: &[ProximityEvent], rules: SessionRules) -> Result<Vec<ContactSession>> {
    if rules.open_gap < 0 || rules.min_duration < 0 {
        return Err(Error::Validation("session rule parameters must be non-negative".into()));
    }
    let mut open: HashMap<&ActorPair, (i64, i64)> = HashMap::new();
    let mut out = Vec::new();
    let mut previous = i64::MIN;
    for event in events {
        if event.time < 0 {
            return Err(Error::Validation(format!("negative event time {}", event.time)));
        }
        if event.time < previous {
            return Err(Error::Ordering { previous, time: event.time });
        }
        previous = event.time;
        match open.get_mut(&event.pair) {
            Some(run) if event.time - run.1 <= rules.open_gap => run.1 = event.time,
            Some(run) => {
                let (start, end) = *run;
                if end - start >= rules.min_duration {
                    out.push(ContactSession { pair: event.pair.clone(), start, end });
                }
                *run = (event.time, event.time);
            }
            None => {
                open.insert(&event.pair, (event.time, event.time));
            }
        }
    }
    for (pair, (start, end)) in open {
        if end - start >= rules.min_duration {
            out.push(ContactSession { pair: pair.clone(), start, end });
        }
    }
    out.sort_by(|x, y| (x.start, &x.pair, x.end).cmp(&(y.start, &y.pair, y.end)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightingMode {
    Count,
    Duration,
    DurationNormalized,
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Count => "COUNT",
            Self::Duration => "DURATION",
            Self::DurationNormalized => "DURATION_NORMALIZED",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "count" => Ok(Self::Count),
            "duration" => Ok(Self::Duration),
            "duration_normalized" | "normalized" => Ok(Self::DurationNormalized),
            other => Err(Error::Parse(format!("unknown weighting mode `{other}`"))),
        }
    }
}

/// Undirected weighted actor graph. Nodes are kept sorted by id, so node
/// indices are stable for a given node set.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    mode: WeightingMode,
}

impl InteractionGraph {
    /// Builds a graph from weighted pairs plus optional isolated nodes.
    /// Repeated pairs have their weights summed.
    pub fn from_edges<I, S>(mode: WeightingMode, edges: I, extra_nodes: &[S]) -> Result<Self>
    where
        I: IntoIterator<Item = (ActorPair, f64)>,
        S: AsRef<str>,
    {
        let mut named: BTreeMap<ActorPair, f64> = BTreeMap::new();
        for (pair, w) in edges {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Validation(format!("edge {pair} has non-positive weight {w}")));
            }
            *named.entry(pair).or_insert(0.0) += w;
        }
        let mut names: BTreeSet<String> = extra_nodes.iter().map(|s| s.as_ref().to_string()).collect();
        for pair in named.keys() {
            names.insert(pair.a.clone());
            names.insert(pair.b.clone());
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges = BTreeMap::new();
        for (pair, w) in named {
            let (i, j) = (index[&pair.a], index[&pair.b]);
            edges.insert((i, j), w);
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        Ok(Self { nodes, index, edges, adjacency, mode })
    }

    pub fn empty(mode: WeightingMode) -> Self {
        Self { nodes: Vec::new(), index: HashMap::new(), edges: BTreeMap::new(), adjacency: Vec::new(), mode }
    }

    pub fn mode(&self) -> WeightingMode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn node_index(&self, actor: &str) -> Option<usize> {
        self.index.get(actor).copied()
    }

    pub fn require(&self, actor: &str) -> Result<usize> {
        self.node_index(actor).ok_or_else(|| Error::UnknownActor(actor.to_string()))
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Edges as `(i, j, w)` with `i < j`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.get(&key).copied()
    }

    pub fn weight_between(&self, a: &str, b: &str) -> Option<f64> {
        self.weight(self.node_index(a)?, self.node_index(b)?)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    /// Sum of all edge weights (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self.edges().map(|(i, j, w)| {
            (ActorPair { a: self.nodes[i].clone(), b: self.nodes[j].clone() }, w * factor)
        });
        Self::from_edges(self.mode, edges.collect::<Vec<_>>(), &self.nodes)
    }

    /// Copy with additional isolated nodes.
    pub fn with_nodes<S: AsRef<str>>(&self, extra: &[S]) -> Result<Self> {
        let mut names: Vec<String> = self.nodes.clone();
        names.extend(extra.iter().map(|s| s.as_ref().to_string()));
        let edges = self.named_edges().collect::<Vec<_>>();
        Self::from_edges(self.mode, edges, &names)
    }

    pub fn named_edges(&self) -> impl Iterator<Item = (ActorPair, f64)> + '_ {
        self.edges().map(|(i, j, w)| (ActorPair { a: self.nodes[i].clone(), b: self.nodes[j].clone() }, w))
    }
}

/// Aggregates sessions into a graph, ignoring sessions shorter than
/// `min_session_duration`. Nodes are the endpoints of surviving sessions.
pub fn build_graph(sessions: &[ContactSession], mode: WeightingMode, min_session_duration: i64) -> InteractionGraph {
    let mut sums: BTreeMap<&ActorPair, (u64, i64)> = BTreeMap::new();
    for s in sessions.iter().filter(|s| s.duration() >= min_session_duration) {
        let e = sums.entry(&s.pair).or_insert((0, 0));
        e.0 += 1;
        e.1 += s.duration();
    }
    let max_sum = sums.values().map(|&(_, d)| d).max().unwrap_or(0);
    let edges: Vec<(ActorPair, f64)> = sums
        .into_iter()
        .filter_map(|(pair, (count, total))| {
            let w = match mode {
                WeightingMode::Count => count as f64,
                WeightingMode::Duration => total as f64,
                WeightingMode::DurationNormalized if max_sum > 0 => total as f64 / max_sum as f64,
                WeightingMode::DurationNormalized => 0.0,
            };
            (w > 0.0).then(|| (pair.clone(), w))
        })
        .collect();
    InteractionGraph::from_edges(mode, edges, &[] as &[&str]).expect("aggregated weights are positive")
}

/// One graph per minimum-duration threshold.
pub fn threshold_sweep(
    sessions: &[ContactSession],
    thresholds: &[i64],
    mode: WeightingMode,
) -> Result<Vec<(i64, InteractionGraph)>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("thresholds must be ascending".into()));
    }
    Ok(thresholds.iter().map(|&t| (t, build_graph(sessions, mode, t))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(times: &[i64]) -> Vec<ProximityEvent> {
        times.iter().map(|&t| ProximityEvent::new("a", "b", t).unwrap()).collect()
    }

    #[test]
    fn pair_is_canonical() {
        assert_eq!(ActorPair::new("b", "a").unwrap(), ActorPair::new("a", "b").unwrap());
        assert!(ActorPair::new("a", "a").is_err());
    }

    #[test]
    fn three_detections_one_session() {
        let s = sessionize(&events(&[0, 20, 40]), SessionRules::default()).unwrap();
        assert_eq!(s, vec![ContactSession::new("a", "b", 0, 40).unwrap()]);
        assert_eq!(s[0].duration(), 40);
    }

    #[test]
    fn short_run_is_dropped() {
        assert!(sessionize(&events(&[0, 10]), SessionRules::default()).unwrap().is_empty());
    }

    #[test]
    fn long_gap_splits_run() {
        let s = sessionize(&events(&[0, 20, 100, 120, 140]), SessionRules::default()).unwrap();
        let spans: Vec<_> = s.iter().map(|s| (s.start, s.end, s.duration())).collect();
        assert_eq!(spans, vec![(0, 20, 20), (100, 140, 40)]);
    }

    #[test]
    fn gap_of_exactly_sixty_keeps_run_open() {
        let s = sessionize(&events(&[0, 60]), SessionRules::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].duration(), 60);
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let err = sessionize(&events(&[10, 5]), SessionRules::default()).unwrap_err();
        assert!(matches!(err, Error::Ordering { previous: 10, time: 5 }));
    }

    #[test]
    fn negative_time_is_rejected() {
        assert!(ProximityEvent::new("a", "b", -1).is_err());
        let bad = vec![ProximityEvent { pair: ActorPair::new("a", "b").unwrap(), time: -3, strength: None }];
        assert!(matches!(sessionize(&bad, SessionRules::default()), Err(Error::Validation(_))));
    }

    fn example_sessions() -> Vec<ContactSession> {
        vec![
            ContactSession::new("a", "b", 0, 40).unwrap(),
            ContactSession::new("a", "b", 100, 160).unwrap(),
            ContactSession::new("c", "a", 200, 230).unwrap(),
        ]
    }

    #[test]
    fn count_weights() {
        let g = build_graph(&example_sessions(), WeightingMode::Count, 0);
        assert_eq!(g.weight_between("a", "b"), Some(2.0));
        assert_eq!(g.weight_between("c", "a"), Some(1.0));
    }

    #[test]
    fn normalized_weights() {
        let g = build_graph(&example_sessions(), WeightingMode::DurationNormalized, 0);
        assert_eq!(g.weight_between("a", "b"), Some(1.0));
        assert_eq!(g.weight_between("a", "c"), Some(0.3));
    }

    #[test]
    fn min_duration_filter() {
        let g = build_graph(&example_sessions(), WeightingMode::Count, 50);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight_between("a", "b"), Some(1.0));
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn empty_sessions_give_empty_graph() {
        let g = build_graph(&[], WeightingMode::Duration, 0);
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn sweep_requires_ascending_thresholds() {
        assert!(threshold_sweep(&example_sessions(), &[60, 0], WeightingMode::Count).is_err());
        let sweep = threshold_sweep(&example_sessions(), &[0, 60, 120], WeightingMode::Count).unwrap();
        let counts: Vec<_> = sweep.iter().map(|(_, g)| (g.node_count(), g.edge_count())).collect();
        assert_eq!(counts, vec![(3, 2), (2, 1), (0, 0)]);
        assert_eq!(sweep[0].1, build_graph(&example_sessions(), WeightingMode::Count, 0));
    }
}
