//! Structural link prediction on contact graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::{build_graph, ActorPair, ContactSession, InteractionGraph, WeightingMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkMeasure {
    CommonNeighbors,
    Jaccard,
    AdamicAdar,
    Preferential,
    WCommonNeighbors,
    WAdamicAdar,
}

impl LinkMeasure {
    pub const ALL: [LinkMeasure; 6] = [
        Self::CommonNeighbors,
        Self::Jaccard,
        Self::AdamicAdar,
        Self::Preferential,
        Self::WCommonNeighbors,
        Self::WAdamicAdar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CommonNeighbors => "common_neighbors",
            Self::Jaccard => "jaccard",
            Self::AdamicAdar => "adamic_adar",
            Self::Preferential => "preferential",
            Self::WCommonNeighbors => "w_common_neighbors",
            Self::WAdamicAdar => "w_adamic_adar",
        }
    }
}

impl fmt::Display for LinkMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Parse(format!("unknown link measure `{s}`")))
    }
}

/// Options that change measure definitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Adamic-Adar with `1/log(1 + deg)` instead of skipping degree-1 neighbors.
    pub adamic_adar_log1p: bool,
}

fn common_neighbors(graph: &InteractionGraph, x: usize, y: usize) -> Vec<(usize, f64, f64)> {
    let ny: BTreeMap<usize, f64> = graph.neighbors(y).iter().copied().collect();
    let mut out: Vec<(usize, f64, f64)> =
        graph.neighbors(x).iter().filter_map(|&(z, wx)| ny.get(&z).map(|&wy| (z, wx, wy))).collect();
    out.sort_by_key(|&(z, _, _)| z);
    out
}

pub fn score(graph: &InteractionGraph, a: &str, b: &str, measure: LinkMeasure) -> Result<f64> {
    score_with(graph, a, b, measure, ScoreOptions::default())
}

pub fn score_with(graph: &InteractionGraph, a: &str, b: &str, measure: LinkMeasure, opts: ScoreOptions) -> Result<f64> {
    let (x, y) = (graph.require(a)?, graph.require(b)?);
    Ok(score_indices(graph, x, y, measure, opts))
}

pub(crate) fn score_indices(graph: &InteractionGraph, x: usize, y: usize, measure: LinkMeasure, opts: ScoreOptions) -> f64 {
    let common = || common_neighbors(graph, x, y);
    match measure {
        LinkMeasure::CommonNeighbors => common().len() as f64,
        LinkMeasure::Jaccard => {
            let inter = common().len();
            let union = graph.degree(x) + graph.degree(y) - inter;
            if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            }
        }
        LinkMeasure::AdamicAdar => common()
            .iter()
            .filter_map(|&(z, _, _)| {
                let d = graph.degree(z) as f64;
                if opts.adamic_adar_log1p {
                    Some(1.0 / (1.0 + d).ln())
                } else {
                    (d >= 2.0).then(|| 1.0 / d.ln())
                }
            })
            .sum(),
        LinkMeasure::Preferential => (graph.degree(x) * graph.degree(y)) as f64,
        LinkMeasure::WCommonNeighbors => common().iter().map(|&(_, wx, wy)| (wx + wy) / 2.0).sum(),
        LinkMeasure::WAdamicAdar => common()
            .iter()
            .map(|&(z, wx, wy)| (wx + wy) / (2.0 * (1.0 + graph.weighted_degree(z)).ln()))
            .sum(),
    }
}

/// Candidates sorted by descending score, ties in canonical pair order.
pub fn rank_candidates(graph: &InteractionGraph, candidates: &[ActorPair], measure: LinkMeasure) -> Result<Vec<(ActorPair, f64)>> {
    let mut scored = candidates
        .iter()
        .map(|p| Ok((p.clone(), score(graph, p.first(), p.second(), measure)?)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    New,
    Recurring,
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "new" => Ok(Self::New),
            "recurring" => Ok(Self::Recurring),
            other => Err(Error::Parse(format!("unknown task kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPair {
    pub pair: ActorPair,
    /// Total test-period contact duration of the pair.
    pub test_duration: i64,
    pub positive: bool,
}

#[derive(Debug, Clone)]
pub struct PredictionTask {
    pub train_graph: InteractionGraph,
    pub test_pairs: Vec<TestPair>,
    pub kind: TaskKind,
}

impl PredictionTask {
    /// Task over all actor pairs of the training graph. NEW considers the
    /// non-edges, RECURRING the edges; a pair is positive when its test
    /// duration exceeds `min_positive_duration`.
    pub fn from_sessions(
        train: &[ContactSession],
        test: &[ContactSession],
        kind: TaskKind,
        mode: WeightingMode,
        min_positive_duration: i64,
    ) -> Self {
        let train_graph = build_graph(train, mode, 0);
        let totals = pair_durations(test);
        let n = train_graph.node_count();
        let mut test_pairs = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if train_graph.has_edge(x, y) != (kind == TaskKind::Recurring) {
                    continue;
                }
                let pair = ActorPair::new(train_graph.node_name(x), train_graph.node_name(y)).expect("distinct nodes");
                let test_duration = totals.get(&pair).copied().unwrap_or(0);
                test_pairs.push(TestPair { positive: test_duration > min_positive_duration, pair, test_duration });
            }
        }
        Self { train_graph, test_pairs, kind }
    }
}

/// Total duration per pair.
pub fn pair_durations(sessions: &[ContactSession]) -> BTreeMap<ActorPair, i64> {
    let mut out = BTreeMap::new();
    for s in sessions {
        *out.entry(s.pair.clone()).or_insert(0) += s.duration();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub auc: f64,
    pub precision_at: BTreeMap<usize, f64>,
}

/// Probability that a random positive outranks a random negative, ties
/// counted half. Rank-sum formulation, `O(n log n)`.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation("need at least one positive and one negative".into()));
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // wins counted in doubled units to keep ties exact
    let mut doubled_wins: u128 = 0;
    let mut below_neg: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let tie_pos = sorted[i..j].iter().filter(|s| s.1).count() as u128;
        let tie_neg = (j - i) as u128 - tie_pos;
        doubled_wins += tie_pos * (2 * below_neg + tie_neg);
        below_neg += tie_neg;
        i = j;
    }
    Ok(doubled_wins as f64 / (2.0 * pos as f64 * neg as f64))
}

pub fn evaluate(task: &PredictionTask, measure: LinkMeasure, ks: &[usize]) -> Result<Evaluation> {
    let candidates: Vec<ActorPair> = task.test_pairs.iter().map(|t| t.pair.clone()).collect();
    let labels: BTreeMap<&ActorPair, bool> = task.test_pairs.iter().map(|t| (&t.pair, t.positive)).collect();
    let ranked = rank_candidates(&task.train_graph, &candidates, measure)?;
    let scored: Vec<(f64, bool)> = ranked.iter().map(|(p, s)| (*s, labels[p])).collect();
    let auc = auc(&scored)?;
    let precision_at = ks
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let top = &scored[..k.min(scored.len())];
            (k, top.iter().filter(|s| s.1).count() as f64 / top.len() as f64)
        })
        .collect();
    Ok(Evaluation { auc, precision_at })
}

/// One row per candidate: all measure scores plus the label.
pub fn feature_matrix(task: &PredictionTask, measures: &[LinkMeasure]) -> Vec<(ActorPair, Vec<f64>, bool)> {
    let g = &task.train_graph;
    task.test_pairs
        .iter()
        .map(|t| {
            let (x, y) = (g.node_index(t.pair.first()).unwrap(), g.node_index(t.pair.second()).unwrap());
            let row = measures.iter().map(|&m| score_indices(g, x, y, m, ScoreOptions::default())).collect();
            (t.pair.clone(), row, t.positive)
        })
        .collect()
}

/// Half-open training-duration interval `[lo, hi)`; `None` marks the
/// no-contact bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationBucket {
    pub range: Option<(i64, Option<i64>)>,
}

impl DurationBucket {
    pub fn label(&self) -> String {
        match self.range {
            None => "no".into(),
            Some((lo, Some(hi))) => format!("[{lo},{hi})"),
            Some((lo, None)) => format!("[{lo},inf)"),
        }
    }

    fn contains(&self, train: Option<i64>) -> bool {
        match (self.range, train) {
            (None, None) => true,
            (Some((lo, hi)), Some(d)) => d >= lo && hi.is_none_or(|h| d < h),
            _ => false,
        }
    }

    /// The no-contact bucket followed by `[b0,b1), ..., [bk, inf)`.
    pub fn from_bounds(bounds: &[i64]) -> Result<Vec<Self>> {
        if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("bucket bounds must be non-empty and strictly ascending".into()));
        }
        let mut out = vec![Self { range: None }];
        for (i, &lo) in bounds.iter().enumerate() {
            out.push(Self { range: Some((lo, bounds.get(i + 1).copied())) });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDistribution {
    pub label: String,
    /// Test-period total durations of the bucket's pairs, ascending.
    pub durations: Vec<i64>,
}

impl BucketDistribution {
    /// `(x, fraction of pairs with duration >= x)` for each distinct x.
    pub fn complementary_cdf(&self) -> Vec<(i64, f64)> {
        let n = self.durations.len();
        let mut out: Vec<(i64, f64)> = Vec::new();
        for (i, &d) in self.durations.iter().enumerate() {
            if out.last().map(|&(x, _)| x) != Some(d) {
                out.push((d, (n - i) as f64 / n as f64));
            }
        }
        out
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        let v: Vec<f64> = self.durations.iter().map(|&d| d as f64).collect();
        crate::netstats::quantile(&v, q)
    }
}

/// Groups pairs that met in the test period by their training-period total
/// duration, and reports each group's test-period durations.
pub fn duration_bucket_analysis(
    sessions_train: &[ContactSession],
    sessions_test: &[ContactSession],
    buckets: &[DurationBucket],
) -> Result<Vec<BucketDistribution>> {
    for w in buckets.windows(2) {
        if let (Some((_, Some(hi))), Some((lo, _))) = (w[0].range, w[1].range) {
            if lo < hi {
                return Err(Error::Validation("buckets overlap".into()));
            }
        }
    }
    let train = pair_durations(sessions_train);
    let test = pair_durations(sessions_test);
    let mut out: Vec<BucketDistribution> =
        buckets.iter().map(|b| BucketDistribution { label: b.label(), durations: Vec::new() }).collect();
    for (pair, &d) in test.iter().filter(|(_, &d)| d > 0) {
        let t = train.get(pair).copied();
        if let Some(i) = buckets.iter().position(|b| b.contains(t)) {
            out[i].durations.push(d);
        }
    }
    for b in &mut out {
        b.durations.sort_unstable();
    }
    Ok(out)
}

/// Actors appearing in any session.
pub fn actors(sessions: &[ContactSession]) -> BTreeSet<String> {
    sessions.iter().flat_map(|s| [s.pair.first().to_string(), s.pair.second().to_string()]).collect()
}
