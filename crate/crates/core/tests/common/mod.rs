//! Reference implementations and random instance generators shared by the
//! integration tests. Nothing here calls into the code under test except to
//! read plain graph/attribute data back out.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use sinet_core::comodo::CommunityPattern;
use sinet_core::expertrank::ChangeRecord;
use sinet_core::gpgrowth::Instance;
use sinet_core::netstats::CommunityMeasure;
use sinet_core::{ActorPair, AttributeTable, ContactSession, InteractionGraph, ProximityEvent, Selector, WeightingMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- sessions

/// Per pair: sort and dedup detection times, cut runs at gaps above
/// `open_gap`, keep runs lasting at least `min_duration`.
pub fn reference_sessions(events: &[ProximityEvent], open_gap: i64, min_duration: i64) -> Vec<(String, String, i64, i64)> {
    let mut times: BTreeMap<(String, String), Vec<i64>> = BTreeMap::new();
    for e in events {
        times.entry((e.pair.first().to_string(), e.pair.second().to_string())).or_default().push(e.time);
    }
    let mut out = Vec::new();
    for ((a, b), mut ts) in times {
        ts.sort_unstable();
        ts.dedup();
        let mut start = ts[0];
        let mut last = ts[0];
        for &t in &ts[1..] {
            if t - last > open_gap {
                if last - start >= min_duration {
                    out.push((a.clone(), b.clone(), start, last));
                }
                start = t;
            }
            last = t;
        }
        if last - start >= min_duration {
            out.push((a.clone(), b.clone(), start, last));
        }
    }
    out.sort_by(|x, y| (x.2, &x.0, &x.1, x.3).cmp(&(y.2, &y.0, &y.1, y.3)));
    out
}

pub fn session_tuples(sessions: &[ContactSession]) -> Vec<(String, String, i64, i64)> {
    sessions.iter().map(|s| (s.pair.first().to_string(), s.pair.second().to_string(), s.start, s.end)).collect()
}

/// Time-sorted detections of a few pairs with bursts and pauses.
pub fn random_events(rng: &mut impl Rng, actors: usize, count: usize) -> Vec<ProximityEvent> {
    let mut t = 0i64;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        t += match rng.random_range(0..10) {
            0 => rng.random_range(61..400),
            1 => 0,
            _ => rng.random_range(1..40),
        };
        let a = rng.random_range(0..actors);
        let mut b = rng.random_range(0..actors - 1);
        if b >= a {
            b += 1;
        }
        out.push(ProximityEvent::new(&format!("a{a}"), &format!("a{b}"), t).unwrap());
    }
    out
}

// ---------------------------------------------------------------- graphs

pub fn graph(edges: &[(&str, &str, f64)]) -> InteractionGraph {
    let e: Vec<_> = edges.iter().map(|&(a, b, w)| (ActorPair::new(a, b).unwrap(), w)).collect();
    InteractionGraph::from_edges(WeightingMode::Count, e, &[] as &[&str]).unwrap()
}

pub fn two_triangles() -> InteractionGraph {
    graph(&[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0), ("d", "e", 1.0), ("e", "f", 1.0), ("d", "f", 1.0)])
}

pub fn bridged_triangles() -> InteractionGraph {
    graph(&[
        ("a", "b", 1.0),
        ("b", "c", 1.0),
        ("a", "c", 1.0),
        ("d", "e", 1.0),
        ("e", "f", 1.0),
        ("d", "f", 1.0),
        ("c", "d", 1.0),
    ])
}

/// Small graph with integer weights plus an attribute table over at most
/// `max_selectors` selectors. Integer weights keep every sum exact, so
/// qualities computed along different routes agree bit for bit.
pub fn random_attributed_graph(rng: &mut impl Rng, max_actors: usize, max_selectors: usize) -> (InteractionGraph, AttributeTable) {
    let n = rng.random_range(3..=max_actors);
    let names: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
    let pool: Vec<Selector> = (0..rng.random_range(1..=max_selectors))
        .map(|s| if s % 2 == 0 { Selector::new("tag", format!("t{s}")) } else { Selector::new(format!("attr{}", s % 3), "yes") })
        .collect();
    let density = rng.random_range(0.2..0.7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push((ActorPair::new(names[i].clone(), names[j].clone()).unwrap(), rng.random_range(1..=4) as f64));
            }
        }
    }
    let g = InteractionGraph::from_edges(WeightingMode::Count, edges, &names).unwrap();
    let mut attrs = AttributeTable::new();
    for name in &names {
        attrs.touch(name.clone());
        for s in &pool {
            if rng.random_bool(0.5) {
                attrs.insert(name.clone(), s.clone());
            }
        }
    }
    (g, attrs)
}

// ---------------------------------------------------------------- communities

/// Sufficient statistics of a member set, straight from the edge list.
pub fn direct_stats(g: &InteractionGraph, members: &BTreeSet<String>) -> (usize, f64, f64) {
    let mut degree_sum = 0.0;
    let mut intra = 0.0;
    for (pair, w) in g.named_edges() {
        let (a, b) = (members.contains(pair.first()), members.contains(pair.second()));
        degree_sum += w * (a as u8 + b as u8) as f64;
        if a && b {
            intra += w;
        }
    }
    (members.len(), degree_sum, intra)
}

/// The measure formulas written out once more; `None` where undefined.
pub fn oracle_quality(measure: CommunityMeasure, n: usize, m: f64, size: usize, d: f64, e: f64) -> Option<f64> {
    if m <= 0.0 || size == 0 {
        return None;
    }
    match measure {
        CommunityMeasure::ModularityLocal => {
            let share = d / (2.0 * m);
            Some(e / m - share * share)
        }
        _ if size >= n => None,
        CommunityMeasure::Segregation => {
            let (n, s) = (n as f64, size as f64);
            let expected = 2.0 * m * s * (n - s) / (n * (n - 1.0));
            let observed = (d - 2.0 * e).max(0.0);
            Some((expected - observed) / expected)
        }
        CommunityMeasure::InvConductance => {
            let cut = (d - 2.0 * e).max(0.0);
            let smaller = d.min(2.0 * m - d);
            (smaller > 0.0).then(|| 1.0 - cut / smaller)
        }
    }
}

pub fn graph_selectors(g: &InteractionGraph, attrs: &AttributeTable) -> Vec<Selector> {
    let mut all = BTreeSet::new();
    for a in g.nodes() {
        if let Some(s) = attrs.selectors(a) {
            all.extend(s.iter().cloned());
        }
    }
    all.into_iter().collect()
}

pub fn members(g: &InteractionGraph, attrs: &AttributeTable, pattern: &[Selector]) -> BTreeSet<String> {
    g.nodes()
        .iter()
        .filter(|a| attrs.selectors(a).is_some_and(|s| pattern.iter().all(|p| s.contains(p))))
        .cloned()
        .collect()
}

/// All selector subsets of size 1..=max_depth (as sorted vectors).
pub fn all_patterns(selectors: &[Selector], max_depth: usize) -> Vec<Vec<Selector>> {
    fn rec(sel: &[Selector], from: usize, cur: &mut Vec<Selector>, max: usize, out: &mut Vec<Vec<Selector>>) {
        for i in from..sel.len() {
            cur.push(sel[i].clone());
            out.push(cur.clone());
            if cur.len() < max {
                rec(sel, i + 1, cur, max, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(selectors, 0, &mut Vec::new(), max_depth, &mut out);
    out
}

/// Exhaustive top-k without any tree or bound: (sorted selectors, quality).
pub fn brute_force_top_k(
    g: &InteractionGraph,
    attrs: &AttributeTable,
    measure: CommunityMeasure,
    k: usize,
    min_size: usize,
    max_depth: usize,
) -> Vec<(Vec<Selector>, f64)> {
    let m = g.total_weight();
    let mut scored = Vec::new();
    for p in all_patterns(&graph_selectors(g, attrs), max_depth) {
        let mem = members(g, attrs, &p);
        if mem.len() < min_size {
            continue;
        }
        let (size, d, e) = direct_stats(g, &mem);
        if let Some(q) = oracle_quality(measure, g.node_count(), m, size, d, e) {
            scored.push((p, q));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.len().cmp(&b.0.len())).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn pattern_keys(patterns: &[CommunityPattern]) -> Vec<(Vec<Selector>, f64)> {
    patterns
        .iter()
        .map(|p| {
            let mut s = p.selectors.clone();
            s.sort();
            (s, p.quality)
        })
        .collect()
}

// ---------------------------------------------------------------- EMM

pub fn random_instances(rng: &mut impl Rng, max_rows: usize, max_selectors: usize, targets: usize) -> Vec<Instance> {
    let rows = rng.random_range(0..=max_rows);
    let selectors = rng.random_range(1..=max_selectors);
    (0..rows)
        .map(|_| Instance {
            selectors: (0..selectors).filter(|_| rng.random_bool(0.5)).map(|s| Selector::new(format!("s{s}"), "1")).collect(),
            // small integers make ties and zero variances common
            targets: (0..targets).map(|_| rng.random_range(-3..=3) as f64).collect(),
        })
        .collect()
}

/// Pearson correlation by explicit centering.
pub fn two_pass_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

// ---------------------------------------------------------------- link prediction

/// Probability that a random positive outscores a random negative, by
/// comparing every pair.
pub fn pairwise_auc(scored: &[(f64, bool)]) -> f64 {
    let (mut wins, mut total) = (0.0, 0.0);
    for &(sp, p) in scored {
        if !p {
            continue;
        }
        for &(sn, n) in scored {
            if n {
                continue;
            }
            total += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / total
}

// ---------------------------------------------------------------- expert ranking

/// Stationary developer scores of the walk, built from the raw change and
/// contact records and solved as a dense linear system.
pub fn dense_expert_scores(
    changes: &[ChangeRecord],
    sessions: &[ContactSession],
    kappa: f64,
    window: i64,
    query: &str,
    damping: f64,
) -> BTreeMap<String, f64> {
    let mut file_dev: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut commit_times: BTreeMap<String, BTreeSet<i64>> = BTreeMap::new();
    for c in changes {
        let lines = (c.lines_added + c.lines_removed) as f64;
        if lines == 0.0 {
            continue;
        }
        *file_dev.entry(c.path.clone()).or_default().entry(c.developer.clone()).or_insert(0.0) += lines;
        commit_times.entry(c.developer.clone()).or_default().insert(c.commit_time);
    }
    // every directory prefix of every file, root = ""
    let mut tree: BTreeSet<String> = BTreeSet::new();
    for f in file_dev.keys() {
        let parts: Vec<&str> = f.split('/').collect();
        for i in 0..=parts.len() {
            tree.insert(parts[..i].join("/"));
        }
    }
    let lines_under = |p: &str| -> f64 {
        file_dev
            .iter()
            .filter(|(f, _)| p.is_empty() || *f == p || f.starts_with(&format!("{p}/")))
            .map(|(_, d)| d.values().sum::<f64>())
            .sum()
    };
    let mut contact: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (dev, times) in &commit_times {
        for s in sessions {
            let other = if s.pair.first() == dev {
                s.pair.second()
            } else if s.pair.second() == dev {
                s.pair.first()
            } else {
                continue;
            };
            let d: i64 = times.iter().map(|&t| (s.end.min(t) - s.start.max(t - window)).max(0)).sum();
            if d > 0 {
                *contact.entry(dev.clone()).or_default().entry(other.to_string()).or_insert(0.0) += d as f64;
            }
        }
    }
    let mut devs: BTreeSet<String> = commit_times.keys().cloned().collect();
    if kappa > 0.0 {
        for m in contact.values() {
            devs.extend(m.keys().cloned());
        }
    }
    let names: Vec<String> = tree.iter().map(|p| format!("T:{p}")).chain(devs.iter().map(|d| format!("D:{d}"))).collect();
    let idx: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let n = names.len();
    let mut p = vec![vec![0.0; n]; n];
    for child in tree.iter().filter(|c| !c.is_empty()) {
        let parent = child.rsplit_once('/').map_or("", |(a, _)| a);
        p[idx[format!("T:{parent}").as_str()]][idx[format!("T:{child}").as_str()]] = lines_under(child) / lines_under(parent);
    }
    for (f, d) in &file_dev {
        let total: f64 = d.values().sum();
        for (dev, l) in d {
            p[idx[format!("T:{f}").as_str()]][idx[format!("D:{dev}").as_str()]] = l / total;
        }
    }
    if kappa > 0.0 {
        for (dev, m) in &contact {
            let total: f64 = m.values().sum();
            for (o, d) in m {
                p[idx[format!("D:{dev}").as_str()]][idx[format!("D:{o}").as_str()]] = kappa * d / total;
            }
        }
    }
    let q = idx[format!("T:{query}").as_str()];
    // transition matrix with restart folded in
    let mut t = vec![vec![0.0; n]; n];
    for u in 0..n {
        let followed: f64 = p[u].iter().sum();
        for v in 0..n {
            t[u][v] = damping * p[u][v];
        }
        t[u][q] += 1.0 - damping * followed;
    }
    // solve x (T - I) = 0 with sum(x) = 1; replace the last equation
    let mut a = vec![vec![0.0; n + 1]; n];
    for v in 0..n {
        for u in 0..n {
            a[v][u] = t[u][v] - if u == v { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n + 1];
    let x = gauss_solve(a);
    let dev_total: f64 = devs.iter().map(|d| x[idx[format!("D:{d}").as_str()]]).sum();
    devs.iter().map(|d| (d.clone(), x[idx[format!("D:{d}").as_str()]] / dev_total)).collect()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// The resource tree of the expert-ranking figure: seven files under three
/// packages, three developers, and one contact shortly before a commit.
pub fn fig7_fixture() -> (Vec<ChangeRecord>, Vec<ContactSession>) {
    let rec = |dev: &str, path: &str, added: u64, removed: u64, t: i64| ChangeRecord {
        developer: dev.into(),
        path: path.into(),
        lines_added: added,
        lines_removed: removed,
        commit_time: t,
    };
    let h = 3600;
    let changes = vec![
        rec("alice", "core/graph.rs", 120, 30, 10 * h),
        rec("alice", "core/session.rs", 80, 10, 11 * h),
        rec("bob", "core/session.rs", 40, 20, 12 * h),
        rec("bob", "mining/tree.rs", 200, 50, 13 * h),
        rec("bob", "mining/search.rs", 90, 10, 14 * h),
        rec("carol", "mining/search.rs", 30, 5, 15 * h),
        rec("carol", "ui/view.rs", 60, 0, 16 * h),
        rec("carol", "ui/style.rs", 20, 5, 16 * h),
        rec("alice", "ui/main.rs", 15, 5, 17 * h),
    ];
    let sessions = vec![ContactSession::new("alice", "carol", 8 * h, 9 * h).unwrap()];
    (changes, sessions)
}

pub fn random_expert_data(rng: &mut impl Rng) -> (Vec<ChangeRecord>, Vec<ContactSession>, String) {
    let devs = rng.random_range(1..=5);
    let dirs = ["a", "a/b", "c", "c/d/e"];
    let mut changes = Vec::new();
    for _ in 0..rng.random_range(1..=12) {
        changes.push(ChangeRecord {
            developer: format!("dev{}", rng.random_range(0..devs)),
            path: format!("{}/f{}.rs", dirs[rng.random_range(0..dirs.len())], rng.random_range(0..3)),
            lines_added: rng.random_range(0..50),
            lines_removed: rng.random_range(1..20),
            commit_time: rng.random_range(0..100_000),
        });
    }
    let mut sessions = Vec::new();
    for _ in 0..rng.random_range(0..8) {
        let a = rng.random_range(0..devs + 1);
        let b = rng.random_range(0..devs + 1);
        if a != b {
            let start = rng.random_range(0..100_000);
            sessions.push(ContactSession::new(&format!("dev{a}"), &format!("dev{b}"), start, start + rng.random_range(20..5000)).unwrap());
        }
    }
    let query = match rng.random_range(0..3) {
        0 => String::new(),
        1 => changes[0].path.rsplit_once('/').unwrap().0.to_string(),
        _ => changes[0].path.clone(),
    };
    (changes, sessions, query)
}
