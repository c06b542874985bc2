use std::collections::BTreeMap;

use proptest::prelude::*;
use regimecalc::fixtures;
use regimecalc::identify::{check_simple_stability, check_weak_condition};
use regimecalc::model::{Assignments, Table};
use regimecalc::{Model, Plan, Regime};

/// Splits the nodes of `m` by `labels` (0 none, 1 A, 2 B, 3 C).
fn split(m: &Model, labels: &[u8]) -> [Vec<String>; 3] {
    let mut out: [Vec<String>; 3] = Default::default();
    for (v, &l) in m.variables().iter().zip(labels) {
        if l > 0 {
            out[l as usize - 1].push(v.name.clone());
        }
    }
    out
}

fn y_law(m: &Model, plan: &Plan, y: &str) -> Table {
    m.intervene(plan).unwrap().marginal(&[y]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dsep_algorithms_agree(seed in 0u64..10_000, labels in prop::collection::vec(0u8..4, 6)) {
        let m = fixtures::random_model(seed, 6, 0.4, 0.0);
        let [a, b, c] = split(&m, &labels);
        let g = m.dag();
        prop_assert_eq!(g.d_separated(&a, &b, &c).unwrap(), g.d_separated_moral(&a, &b, &c).unwrap());
        if let Some(p) = g.open_path(&a, &b, &c).unwrap() {
            prop_assert!(!g.d_separated(&a, &b, &c).unwrap());
            prop_assert!(regimecalc::graph::path_is_open(g, &p, &c).unwrap());
        }
    }

    #[test]
    fn dsep_implies_numeric_independence(seed in 0u64..10_000, labels in prop::collection::vec(0u8..4, 5)) {
        let m = fixtures::random_model(seed, 5, 0.5, 0.0);
        let [a, b, c] = split(&m, &labels);
        if !a.is_empty() && !b.is_empty() && m.dag().d_separated(&a, &b, &c).unwrap() {
            prop_assert!(m.independence_gap(&a, &b, &c).unwrap() < 1e-9);
        }
    }

    #[test]
    fn descendants_mirror_ancestors(seed in 0u64..10_000) {
        let m = fixtures::random_model(seed, 7, 0.4, 0.2);
        let g = m.dag();
        for u in g.node_names() {
            prop_assert!(!g.descendants(&u).unwrap().contains(&u));
            for v in g.node_names() {
                prop_assert_eq!(g.descendants(&u).unwrap().contains(&v), g.ancestors(&v).unwrap().contains(&u));
            }
        }
    }

    #[test]
    fn interventions_compose_and_normalize(seed in 0u64..10_000, xv in 0usize..2, zv in 0usize..2) {
        let m = fixtures::random_model(seed, 5, 0.5, 0.2);
        let names: Vec<String> = m.dag().topological_order();
        let (x, z, y) = (&names[0], &names[2], &names[4]);
        let both = Plan::from([(x.clone(), Regime::Atomic(xv)), (z.clone(), Regime::Atomic(zv))]);
        let step = m
            .intervene(&Plan::from([(x.clone(), Regime::Atomic(xv))]))
            .unwrap()
            .intervene(&Plan::from([(z.clone(), Regime::Atomic(zv))]))
            .unwrap();
        prop_assert!(y_law(&m, &both, y).max_abs_diff(&step.marginal(&[y]).unwrap()).unwrap() < 1e-12);
        prop_assert!((m.intervene(&both).unwrap().joint().sum() - 1.0).abs() < 1e-9);

        let idle: Plan = names.iter().map(|n| (n.clone(), Regime::Idle)).collect();
        prop_assert!(m.intervene(&idle).unwrap().joint().max_abs_diff(&m.joint()).unwrap() < 1e-12);

        // The intervened node no longer listens to its former parents.
        let done = m.intervene(&Plan::from([(z.clone(), Regime::Atomic(zv))])).unwrap();
        let pa: Vec<String> = m.dag().parents(z).unwrap().into_iter().collect();
        for a in Assignments::new(&vec![2; pa.len()]) {
            let ev: Vec<(String, usize)> = pa.iter().cloned().zip(a).collect();
            prop_assert!((done.conditional(&[z], &ev).unwrap().values()[zv] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_stability_implies_weak_condition(seed in 0u64..10_000, labels in prop::collection::vec(0u8..3, 6)) {
        let m = fixtures::random_model(seed, 6, 0.5, 0.2);
        let g = m.dag();
        let order = g.topological_order();
        let (x, z, y) = (order[0].clone(), order[3].clone(), order[5].clone());
        let mut blocks = vec![vec![], vec![]];
        for (n, &l) in order.iter().zip(&labels) {
            if l > 0 && *n != x && *n != z && *n != y && !g.is_latent(n) {
                blocks[l as usize - 1].push(n.clone());
            }
        }
        let targets = vec![x, z];
        let regimes = [Regime::Atomic(1), Regime::Atomic(0)];
        let simple = check_simple_stability(g, &targets, &blocks, &regimes, &y).unwrap();
        let weak = check_weak_condition(g, &targets, &blocks, &regimes, &y).unwrap();
        if simple.holds {
            prop_assert!(weak.holds);
        }
        for w in [simple.witness, weak.witness].into_iter().flatten() {
            prop_assert!(w.recheck());
        }
    }
}

#[test]
fn joint_sums_to_one() {
    for seed in 0..50 {
        let m = fixtures::random_model(seed, 6, 0.5, 0.3);
        let total: f64 = Assignments::new(&[2; 6])
            .map(|a| {
                let full: BTreeMap<String, usize> = m.variables().iter().map(|v| v.name.clone()).zip(a).collect();
                m.joint_prob(&full).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
