mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sinet_core::gpgrowth::*;
use sinet_core::synth::{tag_instances, TagData};
use sinet_core::{Error, Selector};

const CLASSES: [ModelClass; 5] =
    [ModelClass::Frequency, ModelClass::Mean, ModelClass::Variance, ModelClass::Correlation, ModelClass::Slope];

fn inst(sel: &[&str], targets: &[f64]) -> Instance {
    Instance { selectors: sel.iter().map(|s| s.parse().unwrap()).collect(), targets: targets.to_vec() }
}

fn basis(class: ModelClass, rows: &[Vec<f64>]) -> ValuationBasis {
    ValuationBasis::from_targets(class, rows.iter().map(Vec::as_slice)).unwrap()
}

#[test]
fn parameter_examples() {
    let line = basis(ModelClass::Correlation, &[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
    assert_eq!(line.model_params().unwrap(), [1.0]);
    let slope = basis(ModelClass::Slope, &[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
    assert_eq!(slope.model_params().unwrap()[0], 1.0);
    let anti = basis(ModelClass::Correlation, &[vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_eq!(anti.model_params().unwrap(), [-1.0]);
    let flat = basis(ModelClass::Correlation, &[vec![1.0, 0.0], vec![1.0, 3.0]]);
    assert!(matches!(flat.model_params(), Err(Error::Undefined(_))));
    let v = basis(ModelClass::Variance, &[vec![1.0], vec![3.0]]);
    assert_eq!(v.model_params().unwrap(), [1.0, 2.0]);
}

#[test]
fn quality_examples() {
    let b = basis(ModelClass::Mean, &[vec![1.0], vec![5.0]]);
    assert_eq!(quality(&b, &b).unwrap(), 0.0);
    let empty = ValuationBasis::neutral(ModelClass::Mean);
    assert!(quality(&empty, &b).is_err());
    let sub = basis(ModelClass::Mean, &[vec![5.0]]);
    assert_eq!(quality(&sub, &b).unwrap(), 2.0);
}

#[test]
fn correlation_matches_two_pass_oracle() {
    let mut r = common::rng(31);
    for _ in 0..100 {
        let n = r.random_range(2..200);
        let center: f64 = r.random_range(-1e6..1e6);
        let spread: f64 = r.random_range(0.1..1e3);
        let noise = Normal::new(0.0, spread).unwrap();
        let slope: f64 = r.random_range(-2.0..2.0);
        let xs: Vec<f64> = (0..n).map(|_| center + noise.sample(&mut r)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + noise.sample(&mut r)).collect();
        let rows: Vec<Vec<f64>> = xs.iter().zip(&ys).map(|(&x, &y)| vec![x, y]).collect();
        let r_basis = basis(ModelClass::Correlation, &rows).model_params().unwrap()[0];
        let r_oracle = common::two_pass_correlation(&xs, &ys);
        assert!((r_basis - r_oracle).abs() < 1e-9, "{r_basis} vs {r_oracle}");
    }
}

#[test]
fn mine_equals_naive_on_random_data() {
    let mut r = common::rng(32);
    for case in 0..100 {
        let data = common::random_instances(&mut r, 15, 6, 2);
        for class in CLASSES {
            let min_support = r.random_range(class.min_instances()..=3);
            let mode = if r.random_bool(0.5) {
                SelectionMode::TopK(r.random_range(1..=6))
            } else {
                SelectionMode::Threshold(r.random_range(0.0..2.0))
            };
            let config = EmmConfig { class, min_support, max_depth: r.random_range(1..=4), mode };
            let fast = mine(&data, config).unwrap();
            let slow = naive_mine(&data, config).unwrap();
            assert_eq!(fast.patterns, slow.patterns, "case {case} {config:?}");
            assert!(fast.stats.visited <= slow.stats.visited, "case {case} {config:?}");
        }
    }
}

#[test]
fn degenerate_inputs() {
    let config = EmmConfig { class: ModelClass::Mean, min_support: 1, max_depth: 3, mode: SelectionMode::Threshold(0.0) };
    assert!(mine(&[], config).unwrap().patterns.is_empty());
    assert!(naive_mine(&[], config).unwrap().patterns.is_empty());

    let one = vec![inst(&["a=1", "b=1"], &[2.0])];
    let found: Vec<Vec<String>> = mine(&one, config)
        .unwrap()
        .patterns
        .iter()
        .map(|p| p.selectors.iter().map(ToString::to_string).collect())
        .collect();
    assert_eq!(found.len(), 3);

    // single attribute: exactly its values with enough support
    let data = vec![inst(&["c=x"], &[1.0]), inst(&["c=x"], &[2.0]), inst(&["c=y"], &[3.0]), inst(&["c=z"], &[4.0])];
    let cfg = EmmConfig { class: ModelClass::Frequency, min_support: 2, max_depth: 2, mode: SelectionMode::Threshold(0.0) };
    let out = mine(&data, cfg).unwrap();
    assert_eq!(out.patterns.len(), 1);
    assert_eq!(out.patterns[0].selectors, [Selector::new("c", "x")]);
}

#[test]
fn frequency_class_counts_itemsets() {
    let mut r = common::rng(33);
    for _ in 0..30 {
        let data = common::random_instances(&mut r, 40, 6, 0);
        let config = EmmConfig { class: ModelClass::Frequency, min_support: 3, max_depth: 6, mode: SelectionMode::Threshold(0.0) };
        let mined: BTreeMap<Vec<Selector>, u64> = mine(&data, config)
            .unwrap()
            .patterns
            .into_iter()
            .map(|p| {
                let mut s = p.selectors;
                s.sort();
                (s, p.support)
            })
            .collect();
        let vocab: Vec<Selector> = {
            let mut v: Vec<Selector> = data.iter().flat_map(|i| i.selectors.iter().cloned()).collect();
            v.sort();
            v.dedup();
            v
        };
        let mut expected = BTreeMap::new();
        for mask in 1u32..(1 << vocab.len()) {
            let set: Vec<Selector> = (0..vocab.len()).filter(|b| mask >> b & 1 == 1).map(|b| vocab[b].clone()).collect();
            let count = data.iter().filter(|i| set.iter().all(|s| i.selectors.contains(s))).count() as u64;
            if count >= 3 {
                expected.insert(set, count);
            }
        }
        assert_eq!(mined, expected);
    }
}

#[test]
fn planted_correlation_is_top() {
    let data = tag_instances(34, TagData { instances: 4000, attributes: 12, plant_correlation: true });
    let config = EmmConfig { class: ModelClass::Correlation, min_support: 10, max_depth: 2, mode: SelectionMode::TopK(1) };
    let top = &mine(&data, config).unwrap().patterns[0];
    assert_eq!(top.selectors, [Selector::new("tag00", "1")]);
    assert!((top.params[0] - 1.0).abs() < 1e-12);
}

#[test]
fn below_class_minimum_rejected() {
    let config = EmmConfig { class: ModelClass::Correlation, min_support: 1, max_depth: 2, mode: SelectionMode::TopK(3) };
    assert!(matches!(mine(&[], config), Err(Error::Validation(_))));
}

#[test]
fn merge_rejects_class_mismatch() {
    let a = ValuationBasis::neutral(ModelClass::Slope);
    let b = ValuationBasis::neutral(ModelClass::Correlation);
    assert!(matches!(a.merge(&b), Err(Error::ClassMismatch(_))));
}

fn class_strategy() -> impl Strategy<Value = ModelClass> {
    prop::sample::select(CLASSES.to_vec())
}

/// Integer-valued rows up to 1e6 in magnitude: the sums are exact, so the
/// laws must hold bit for bit.
fn rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((-1_000_000i64..1_000_000).prop_map(|v| v as f64), 2), 0..30)
}

/// Arbitrary reals: the laws hold up to the accumulator's rounding.
fn real_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 2), 2..30)
}

fn close(a: &ValuationBasis, b: &ValuationBasis) -> bool {
    match (a.model_params(), b.model_params()) {
        (Ok(x), Ok(y)) => x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs())),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn identity(class in class_strategy(), a in rows()) {
        let b = basis(class, &a);
        prop_assert_eq!(ValuationBasis::neutral(class).merge(&b).unwrap(), b);
        prop_assert_eq!(b.merge(&ValuationBasis::neutral(class)).unwrap(), b);
    }

    #[test]
    fn commutative(class in class_strategy(), a in rows(), b in rows()) {
        let (x, y) = (basis(class, &a), basis(class, &b));
        prop_assert_eq!(x.merge(&y).unwrap(), y.merge(&x).unwrap());
    }

    #[test]
    fn associative(class in class_strategy(), a in rows(), b in rows(), c in rows()) {
        let (x, y, z) = (basis(class, &a), basis(class, &b), basis(class, &c));
        prop_assert_eq!(x.merge(&y).unwrap().merge(&z).unwrap(), x.merge(&y.merge(&z).unwrap()).unwrap());
    }

    #[test]
    fn homomorphism(class in class_strategy(), a in rows(), b in rows()) {
        let joined: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(basis(class, &joined), basis(class, &a).merge(&basis(class, &b)).unwrap());
    }

    #[test]
    fn laws_on_reals(class in class_strategy(), a in real_rows(), b in real_rows(), c in real_rows()) {
        let (x, y, z) = (basis(class, &a), basis(class, &b), basis(class, &c));
        prop_assert!(close(&x.merge(&y).unwrap(), &y.merge(&x).unwrap()));
        prop_assert!(close(&x.merge(&y).unwrap().merge(&z).unwrap(), &x.merge(&y.merge(&z).unwrap()).unwrap()));
        let joined: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        prop_assert!(close(&basis(class, &joined), &x.merge(&y).unwrap()));
    }
}
