//! Exhaustive exceptional model mining with valuation bases.
//!
//! A valuation basis is a mergeable summary of the target values of a set of
//! instances, from which a model class computes its parameters. Bases form a
//! commutative monoid, so a prefix tree whose nodes hold bases instead of
//! counts supports pattern growth exactly like a frequent-pattern tree: the
//! basis of a pattern is the merge of the bases on its header list.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attributes::Selector;
use crate::compensated::Compensated;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelClass {
    Frequency,
    Mean,
    Variance,
    Correlation,
    Slope,
}

impl ModelClass {
    pub const ALL: [ModelClass; 5] = [Self::Frequency, Self::Mean, Self::Variance, Self::Correlation, Self::Slope];

    /// Number of target values each instance must provide.
    pub fn target_count(self) -> usize {
        match self {
            Self::Frequency => 0,
            Self::Mean | Self::Variance => 1,
            Self::Correlation | Self::Slope => 2,
        }
    }

    /// Smallest instance count on which the model is defined.
    pub fn min_instances(self) -> u64 {
        match self {
            Self::Frequency | Self::Mean | Self::Variance => 1,
            Self::Correlation | Self::Slope => 2,
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Frequency => "frequency",
            Self::Mean => "mean",
            Self::Variance => "variance",
            Self::Correlation => "correlation",
            Self::Slope => "slope",
        })
    }
}

impl FromStr for ModelClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown model class `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sums {
    Count,
    Univariate { sum: Compensated, sum_sq: Compensated },
    Bivariate { sx: Compensated, sy: Compensated, sxx: Compensated, syy: Compensated, sxy: Compensated },
}

/// Mergeable summary of a set of instances for one model class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationBasis {
    class: ModelClass,
    n: u64,
    sums: Sums,
}

impl ValuationBasis {
    /// The monoid identity.
    pub fn neutral(class: ModelClass) -> Self {
        let z = Compensated::ZERO;
        let sums = match class.target_count() {
            0 => Sums::Count,
            1 => Sums::Univariate { sum: z, sum_sq: z },
            _ => Sums::Bivariate { sx: z, sy: z, sxx: z, syy: z, sxy: z },
        };
        Self { class, n: 0, sums }
    }

    /// Basis of a single instance with the given target values.
    pub fn singleton(class: ModelClass, targets: &[f64]) -> Result<Self> {
        if targets.len() < class.target_count() {
            return Err(Error::Validation(format!(
                "{class} needs {} target values, got {}",
                class.target_count(),
                targets.len()
            )));
        }
        if let Some(bad) = targets.iter().take(class.target_count()).find(|t| !t.is_finite()) {
            return Err(Error::Validation(format!("non-finite target value {bad}")));
        }
        let sums = match class.target_count() {
            0 => Sums::Count,
            1 => Sums::Univariate { sum: targets[0].into(), sum_sq: Compensated::square(targets[0]) },
            _ => {
                let (x, y) = (targets[0], targets[1]);
                Sums::Bivariate {
                    sx: x.into(),
                    sy: y.into(),
                    sxx: Compensated::square(x),
                    syy: Compensated::square(y),
                    sxy: Compensated::product(x, y),
                }
            }
        };
        Ok(Self { class, n: 1, sums })
    }

    pub fn from_targets<'a>(class: ModelClass, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut b = Self::neutral(class);
        for r in rows {
            b.absorb(&Self::singleton(class, r)?);
        }
        Ok(b)
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.class != other.class {
            return Err(Error::ClassMismatch(format!("cannot merge {} with {}", self.class, other.class)));
        }
        let mut out = *self;
        out.absorb(other);
        Ok(out)
    }

    /// In-place merge. Callers guarantee matching classes.
    fn absorb(&mut self, other: &Self) {
        debug_assert_eq!(self.class, other.class);
        self.n += other.n;
        self.sums = match (self.sums, other.sums) {
            (Sums::Count, Sums::Count) => Sums::Count,
            (Sums::Univariate { sum: a, sum_sq: b }, Sums::Univariate { sum: c, sum_sq: d }) => {
                Sums::Univariate { sum: a + c, sum_sq: b + d }
            }
            (
                Sums::Bivariate { sx, sy, sxx, syy, sxy },
                Sums::Bivariate { sx: sx2, sy: sy2, sxx: sxx2, syy: syy2, sxy: sxy2 },
            ) => Sums::Bivariate { sx: sx + sx2, sy: sy + sy2, sxx: sxx + sxx2, syy: syy + syy2, sxy: sxy + sxy2 },
            _ => unreachable!("basis shapes follow the class"),
        };
    }

    /// Model parameters; the first entry is the class's primary parameter.
    ///
    /// frequency: `[n]`; mean: `[mean]`; variance: `[variance, mean]`;
    /// correlation: `[r]`; slope: `[slope, intercept]`.
    pub fn model_params(&self) -> Result<Vec<f64>> {
        if self.n < self.class.min_instances() {
            return Err(Error::Undefined(format!("{} needs at least {} instances", self.class, self.class.min_instances())));
        }
        let n = Compensated::new(self.n as f64);
        match (self.class, self.sums) {
            (ModelClass::Frequency, _) => Ok(vec![self.n as f64]),
            (ModelClass::Mean, Sums::Univariate { sum, .. }) => Ok(vec![sum.value() / self.n as f64]),
            (ModelClass::Variance, Sums::Univariate { sum, sum_sq }) => {
                let spread = n * sum_sq - sum * sum;
                let nn = (self.n as f64) * (self.n as f64);
                Ok(vec![spread.value().max(0.0) / nn, sum.value() / self.n as f64])
            }
            (ModelClass::Correlation | ModelClass::Slope, Sums::Bivariate { sx, sy, sxx, syy, sxy }) => {
                let cov = n * sxy - sx * sy;
                let vx = n * sxx - sx * sx;
                if vx.value() <= 0.0 {
                    return Err(Error::Undefined("zero variance in the first target".into()));
                }
                if self.class == ModelClass::Slope {
                    let slope = cov.value() / vx.value();
                    let intercept = (sy.value() - slope * sx.value()) / self.n as f64;
                    return Ok(vec![slope, intercept]);
                }
                let vy = n * syy - sy * sy;
                if vy.value() <= 0.0 {
                    return Err(Error::Undefined("zero variance in the second target".into()));
                }
                let r = cov.value() / (vx.value().sqrt() * vy.value().sqrt());
                Ok(vec![r.clamp(-1.0, 1.0)])
            }
            _ => unreachable!("basis shapes follow the class"),
        }
    }
}

/// Scores a pattern's basis against the global basis.
pub trait QualityFunction: Send + Sync {
    fn score(&self, pattern: &ValuationBasis, global: &ValuationBasis) -> Result<f64>;
}

/// `sqrt(n_P) * |param_P - param_global|` on the primary parameter; for the
/// frequency class the score is the support itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct SizeWeightedDeviation;

impl QualityFunction for SizeWeightedDeviation {
    fn score(&self, pattern: &ValuationBasis, global: &ValuationBasis) -> Result<f64> {
        if pattern.class != global.class {
            return Err(Error::ClassMismatch(format!("{} vs {}", pattern.class, global.class)));
        }
        if pattern.n == 0 {
            return Err(Error::Undefined("empty pattern".into()));
        }
        if pattern.class == ModelClass::Frequency {
            return Ok(pattern.n as f64);
        }
        let p = pattern.model_params()?[0];
        let g = global.model_params()?[0];
        Ok((pattern.n as f64).sqrt() * (p - g).abs())
    }
}

pub fn quality(pattern: &ValuationBasis, global: &ValuationBasis) -> Result<f64> {
    SizeWeightedDeviation.score(pattern, global)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub selectors: Vec<Selector>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    TopK(usize),
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmmConfig {
    pub class: ModelClass,
    pub min_support: u64,
    pub max_depth: usize,
    pub mode: SelectionMode,
}

impl EmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support < self.class.min_instances() {
            return Err(Error::Validation(format!(
                "min_support {} below the {} minimum of {}",
                self.min_support,
                self.class,
                self.class.min_instances()
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Validation("max_depth must be at least 1".into()));
        }
        if self.mode == SelectionMode::TopK(0) {
            return Err(Error::Validation("top-k needs k >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmmPattern {
    /// Selectors in canonical order.
    pub selectors: Vec<Selector>,
    pub support: u64,
    pub params: Vec<f64>,
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmmStats {
    /// Patterns whose basis was computed (tree nodes for pattern growth,
    /// materialized candidates for the naive search).
    pub visited: usize,
    /// Candidates meeting the support threshold.
    pub evaluated: usize,
    /// Candidates skipped because the model or quality is undefined.
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmmOutcome {
    pub patterns: Vec<EmmPattern>,
    pub global_params: Vec<f64>,
    pub stats: EmmStats,
}

/// Selector vocabulary in canonical order: descending support, then
/// lexicographic. Only selectors meeting `min_support` are kept.
struct Vocabulary {
    selectors: Vec<Selector>,
    /// Per instance: ranks of its frequent selectors, ascending.
    transactions: Vec<Vec<usize>>,
}

impl Vocabulary {
    fn new(instances: &[Instance], min_support: u64) -> Self {
        let mut counts: HashMap<&Selector, u64> = HashMap::new();
        for inst in instances {
            let mut seen: Vec<&Selector> = inst.selectors.iter().collect();
            seen.sort();
            seen.dedup();
            for s in seen {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&Selector, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_support).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let rank: HashMap<&Selector, usize> = ranked.iter().enumerate().map(|(i, &(s, _))| (s, i)).collect();
        let transactions = instances
            .iter()
            .map(|inst| {
                let mut t: Vec<usize> = inst.selectors.iter().filter_map(|s| rank.get(s).copied()).collect();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        let selectors = ranked.into_iter().map(|(s, _)| s.clone()).collect();
        Self { selectors, transactions }
    }

    fn pattern(&self, items: &[usize]) -> Vec<Selector> {
        let mut items = items.to_vec();
        items.sort_unstable();
        items.into_iter().map(|i| self.selectors[i].clone()).collect()
    }
}

struct Collector<'q> {
    mode: SelectionMode,
    quality: &'q dyn QualityFunction,
    global: ValuationBasis,
    /// (sorted key, pattern)
    found: Vec<(Vec<Selector>, EmmPattern)>,
    stats: EmmStats,
}

impl Collector<'_> {
    fn offer(&mut self, selectors: Vec<Selector>, basis: &ValuationBasis) {
        self.stats.evaluated += 1;
        let q = match self.quality.score(basis, &self.global) {
            Ok(q) => q,
            Err(_) => {
                self.stats.undefined += 1;
                return;
            }
        };
        if let SelectionMode::Threshold(min) = self.mode {
            if q < min {
                return;
            }
        }
        let params = match basis.model_params() {
            Ok(p) => p,
            Err(_) => {
                self.stats.undefined += 1;
                return;
            }
        };
        let mut key = selectors.clone();
        key.sort();
        let pattern = EmmPattern { selectors, support: basis.count(), params, quality: q };
        let pos = self.found.partition_point(|(k, p)| order(p.quality, k, q, &key) == Ordering::Less);
        if let SelectionMode::TopK(k) = self.mode {
            if pos >= k {
                return;
            }
            self.found.insert(pos, (key, pattern));
            self.found.truncate(k);
        } else {
            self.found.insert(pos, (key, pattern));
        }
    }

    fn finish(self) -> EmmOutcome {
        EmmOutcome {
            global_params: self.global.model_params().unwrap_or_default(),
            patterns: self.found.into_iter().map(|(_, p)| p).collect(),
            stats: self.stats,
        }
    }
}

fn order(q1: f64, k1: &[Selector], q2: f64, k2: &[Selector]) -> Ordering {
    crate::comodo::rank_order(q1, k1, q2, k2)
}

fn global_basis(instances: &[Instance], class: ModelClass) -> Result<ValuationBasis> {
    ValuationBasis::from_targets(class, instances.iter().map(|i| i.targets.as_slice()))
}

const NO_PARENT: u32 = u32::MAX;

/// Prefix tree with a valuation basis per node. Node data is kept in
/// parallel arrays; nodes are numbered in preorder.
#[derive(Debug, Clone)]
pub struct GpTree {
    class: ModelClass,
    items: Vec<u32>,
    parents: Vec<u32>,
    bases: Vec<ValuationBasis>,
    /// Per item, the nodes carrying it.
    header: Vec<Vec<u32>>,
    root_basis: ValuationBasis,
}

impl GpTree {
    /// Builds the tree from item paths (each ascending). Paths are inserted
    /// in sorted order so every insertion shares its prefix with the
    /// previous one and no child lookup is needed.
    fn from_paths<'a>(class: ModelClass, item_count: usize, mut paths: Vec<(&'a [usize], &'a ValuationBasis)>) -> Self {
        paths.sort_by(|a, b| a.0.cmp(b.0));
        let mut tree = Self {
            class,
            items: Vec::new(),
            parents: Vec::new(),
            bases: Vec::new(),
            header: vec![Vec::new(); item_count],
            root_basis: ValuationBasis::neutral(class),
        };
        let mut stack: Vec<u32> = Vec::new();
        let mut prev: &[usize] = &[];
        for (path, basis) in paths {
            tree.root_basis.absorb(basis);
            let common = prev.iter().zip(path).take_while(|(a, b)| a == b).count();
            stack.truncate(common);
            for &n in &stack {
                tree.bases[n as usize].absorb(basis);
            }
            for &item in &path[common..] {
                let idx = tree.items.len() as u32;
                tree.items.push(item as u32);
                tree.parents.push(stack.last().copied().unwrap_or(NO_PARENT));
                tree.bases.push(*basis);
                tree.header[item].push(idx);
                stack.push(idx);
            }
            prev = path;
        }
        tree
    }

    pub fn node_count(&self) -> usize {
        self.items.len()
    }

    /// Merge of all inserted instance bases.
    pub fn root_basis(&self) -> &ValuationBasis {
        &self.root_basis
    }

    fn present_items(&self) -> impl Iterator<Item = usize> + '_ {
        self.header.iter().enumerate().filter(|(_, h)| !h.is_empty()).map(|(i, _)| i)
    }

    fn item_basis(&self, item: usize) -> ValuationBasis {
        let mut acc = ValuationBasis::neutral(self.class);
        for &n in &self.header[item] {
            acc.absorb(&self.bases[n as usize]);
        }
        acc
    }

    fn ancestors(&self, node: u32) -> impl Iterator<Item = u32> + '_ {
        let parent = |n: u32| Some(self.parents[n as usize]).filter(|&p| p != NO_PARENT);
        std::iter::successors(parent(node), move |&p| parent(p))
    }

    fn conditional(&self, item: usize, min_support: u64) -> GpTree {
        let mut support = vec![0u64; item];
        let heads = &self.header[item];
        for &n in heads {
            let c = self.bases[n as usize].count();
            for a in self.ancestors(n) {
                support[self.items[a as usize] as usize] += c;
            }
        }
        let paths: Vec<Vec<usize>> = heads
            .iter()
            .map(|&n| {
                let mut path: Vec<usize> = self
                    .ancestors(n)
                    .map(|a| self.items[a as usize] as usize)
                    .filter(|&it| support[it] >= min_support)
                    .collect();
                path.reverse();
                path
            })
            .collect();
        let inserts = paths.iter().zip(heads).map(|(p, &n)| (p.as_slice(), &self.bases[n as usize])).collect();
        GpTree::from_paths(self.class, item, inserts)
    }

    /// Bases of `{item} ∪ {j}` for every item `j` above `item`, without
    /// materializing the conditional tree.
    fn pair_bases(&self, item: usize) -> Vec<(usize, ValuationBasis)> {
        let mut acc = vec![ValuationBasis::neutral(self.class); item];
        for &n in &self.header[item] {
            let b = &self.bases[n as usize];
            for a in self.ancestors(n) {
                acc[self.items[a as usize] as usize].absorb(b);
            }
        }
        acc.into_iter().enumerate().filter(|(_, b)| b.count() > 0).collect()
    }
}

/// Builds the global tree over the frequent selectors.
pub fn build_gp_tree(instances: &[Instance], class: ModelClass, min_support: u64) -> Result<GpTree> {
    let vocab = Vocabulary::new(instances, min_support);
    build_from_vocab(instances, class, &vocab)
}

fn build_from_vocab(instances: &[Instance], class: ModelClass, vocab: &Vocabulary) -> Result<GpTree> {
    let singletons: Vec<ValuationBasis> =
        instances.iter().map(|i| ValuationBasis::singleton(class, &i.targets)).collect::<Result<_>>()?;
    let paths = vocab.transactions.iter().map(Vec::as_slice).zip(&singletons).collect();
    Ok(GpTree::from_paths(class, vocab.selectors.len(), paths))
}

/// Pattern growth over the valuation-basis tree.
pub fn mine(instances: &[Instance], config: EmmConfig) -> Result<EmmOutcome> {
    mine_with(instances, config, &SizeWeightedDeviation)
}

pub fn mine_with(instances: &[Instance], config: EmmConfig, quality: &dyn QualityFunction) -> Result<EmmOutcome> {
    config.validate()?;
    let vocab = Vocabulary::new(instances, config.min_support);
    let tree = build_from_vocab(instances, config.class, &vocab)?;
    let mut collector =
        Collector { mode: config.mode, quality, global: *tree.root_basis(), found: Vec::new(), stats: EmmStats::default() };
    grow(&tree, &[], &vocab, config, &mut collector);
    Ok(collector.finish())
}

fn grow(tree: &GpTree, suffix: &[usize], vocab: &Vocabulary, config: EmmConfig, out: &mut Collector<'_>) {
    for item in tree.present_items() {
        let basis = tree.item_basis(item);
        out.stats.visited += 1;
        if basis.count() < config.min_support {
            continue;
        }
        let mut items = suffix.to_vec();
        items.push(item);
        out.offer(vocab.pattern(&items), &basis);
        let depth = items.len();
        if depth >= config.max_depth {
            continue;
        }
        if depth + 1 == config.max_depth {
            for (other, b) in tree.pair_bases(item) {
                out.stats.visited += 1;
                if b.count() >= config.min_support {
                    items.push(other);
                    out.offer(vocab.pattern(&items), &b);
                    items.pop();
                }
            }
        } else {
            let cond = tree.conditional(item, config.min_support);
            if cond.node_count() > 0 {
                grow(&cond, &items, vocab, config, out);
            }
        }
    }
}

/// Depth-first search that materializes every candidate's instance subset.
pub fn naive_mine(instances: &[Instance], config: EmmConfig) -> Result<EmmOutcome> {
    naive_mine_with(instances, config, &SizeWeightedDeviation)
}

pub fn naive_mine_with(instances: &[Instance], config: EmmConfig, quality: &dyn QualityFunction) -> Result<EmmOutcome> {
    config.validate()?;
    let vocab = Vocabulary::new(instances, config.min_support);
    let singletons: Vec<ValuationBasis> =
        instances.iter().map(|i| ValuationBasis::singleton(config.class, &i.targets)).collect::<Result<_>>()?;
    let global = global_basis(instances, config.class)?;
    let mut collector = Collector { mode: config.mode, quality, global, found: Vec::new(), stats: EmmStats::default() };
    let all: Vec<usize> = (0..instances.len()).collect();
    naive_dfs(&all, 0, &mut Vec::new(), &vocab, &singletons, config, &mut collector);
    Ok(collector.finish())
}

fn naive_dfs(
    subset: &[usize],
    first: usize,
    pattern: &mut Vec<usize>,
    vocab: &Vocabulary,
    singletons: &[ValuationBasis],
    config: EmmConfig,
    out: &mut Collector<'_>,
) {
    for item in first..vocab.selectors.len() {
        out.stats.visited += 1;
        let covered: Vec<usize> =
            subset.iter().copied().filter(|&i| vocab.transactions[i].binary_search(&item).is_ok()).collect();
        if (covered.len() as u64) < config.min_support {
            continue;
        }
        let mut basis = ValuationBasis::neutral(config.class);
        for &i in &covered {
            basis.absorb(&singletons[i]);
        }
        pattern.push(item);
        out.offer(vocab.pattern(pattern), &basis);
        if pattern.len() < config.max_depth {
            naive_dfs(&covered, item + 1, pattern, vocab, singletons, config, out);
        }
        pattern.pop();
    }
}
