//! Reference graphs and seeded random models used by tests, the CLI and the
//! Python bindings.
//!
//! * `g_seq`: X→V, V→Z, X→Z, X→Y, V→Y, Z→Y. V is a post-treatment covariate
//!   affecting both the second treatment Z and the outcome.
//! * `g_med`: X→Z, Z→Y, X→V, V→Y, X→Y. Two parallel mediators.
//! * `fig2`: X→Z, W→Z, Z→Y, X→Y with W an observed root.
//! * `fig4`: U1→X, U1→V, U2→V, U2→Y, X→V, X→Z, V→Z, X→Y, Z→Y, with U1, U2
//!   optionally latent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::Dag;
use crate::identify::{CausalQuery, EffectKind, Sequence};
use crate::model::{Cpt, Model, Variable};
use crate::regimes::Regime;

pub fn g_seq_dag() -> Dag {
    Dag::from_edges(
        &["X", "V", "Z", "Y"],
        &[("X", "V"), ("V", "Z"), ("X", "Z"), ("X", "Y"), ("V", "Y"), ("Z", "Y")],
    )
    .expect("static graph")
}

pub fn g_med_dag() -> Dag {
    Dag::from_edges(
        &["X", "Z", "V", "Y"],
        &[("X", "Z"), ("Z", "Y"), ("X", "V"), ("V", "Y"), ("X", "Y")],
    )
    .expect("static graph")
}

pub fn fig2_dag() -> Dag {
    Dag::from_edges(&["W", "X", "Z", "Y"], &[("X", "Z"), ("W", "Z"), ("Z", "Y"), ("X", "Y")]).expect("static graph")
}

pub fn fig4_dag(latent_u: bool) -> Dag {
    let mut g = Dag::new();
    g.add_chance("U1", latent_u).unwrap();
    g.add_chance("U2", latent_u).unwrap();
    for n in ["X", "V", "Z", "Y"] {
        g.add_chance(n, false).unwrap();
    }
    for (a, b) in [
        ("U1", "X"),
        ("U1", "V"),
        ("U2", "V"),
        ("U2", "Y"),
        ("X", "V"),
        ("X", "Z"),
        ("V", "Z"),
        ("X", "Y"),
        ("Z", "Y"),
    ] {
        g.add_edge(a, b).unwrap();
    }
    g
}

pub fn g_seq(seed: u64) -> Model {
    random_cpts(&g_seq_dag(), seed)
}

pub fn g_med(seed: u64) -> Model {
    random_cpts(&g_med_dag(), seed)
}

pub fn fig2(seed: u64) -> Model {
    random_cpts(&fig2_dag(), seed)
}

pub fn fig4(seed: u64, latent_u: bool) -> Model {
    random_cpts(&fig4_dag(latent_u), seed)
}

/// Binary variables with CPT entries drawn from U(0.1, 1) and normalized, so
/// every conditional is strictly positive.
pub fn random_cpts(dag: &Dag, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<Variable> = dag
        .nodes()
        .iter()
        .map(|n| Variable::new(&n.name, 2, n.latent).unwrap())
        .collect();
    let cpts = vars.iter().map(|v| random_cpt(dag, &v.name, 2, &mut rng)).collect();
    Model::new(dag.clone(), vars, cpts).expect("consistent random model")
}

fn random_cpt(dag: &Dag, name: &str, card: usize, rng: &mut ChaCha8Rng) -> Cpt {
    let parents: Vec<String> = dag.parents(name).unwrap().into_iter().collect();
    let pcards = vec![2; parents.len()];
    let rows = (0..1usize << parents.len())
        .map(|_| {
            let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|r| r / s).collect()
        })
        .collect();
    Cpt::new(name, card, parents, pcards, rows).unwrap()
}

/// A random DAG over `n` binary nodes named `A`, `B`, ... with edges drawn
/// independently with probability `edge_prob` along a random ordering, and
/// each node latent with probability `latent_prob`.
pub fn random_model(seed: u64, n: usize, edge_prob: f64, latent_prob: f64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let mut order = names.clone();
    order.shuffle(&mut rng);
    let mut g = Dag::new();
    for name in &names {
        let latent = rng.gen_bool(latent_prob);
        g.add_chance(name, latent).unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                g.add_edge(&order[i], &order[j]).unwrap();
            }
        }
    }
    random_cpts(&g, rng.gen())
}

/// Builds a binary model from explicit rows, `rows[k]` being p(node = 1 | k-th
/// parent assignment) with parents in name order.
pub fn binary_model(dag: &Dag, p_one: &[(&str, Vec<f64>)]) -> Result<Model> {
    let vars: Vec<Variable> = dag
        .nodes()
        .iter()
        .map(|n| Variable::new(&n.name, 2, n.latent))
        .collect::<Result<_>>()?;
    let cpts = p_one
        .iter()
        .map(|(name, ps)| {
            let parents: Vec<String> = dag.parents(name)?.into_iter().collect();
            let pcards = vec![2; parents.len()];
            Cpt::new(name, 2, parents, pcards, ps.iter().map(|p| vec![1.0 - p, *p]).collect())
        })
        .collect::<Result<_>>()?;
    Model::new(dag.clone(), vars, cpts)
}

/// Every query the oracle-equivalence sweep asks of `m`: ACE for each ordered
/// pair of observed nodes, and for each mediator Z not upstream of X the CDE
/// at z=0, an SDE under a fair-ish coin, NDE, NIE and the two-step plan
/// (X=1, Z=0). Roles are left to auto-search.
pub fn query_suite(m: &Model) -> Vec<CausalQuery> {
    let obs: Vec<String> = m
        .variables()
        .iter()
        .filter(|v| !v.latent)
        .map(|v| v.name.clone())
        .collect();
    let g = m.dag();
    let mut out = Vec::new();
    for x in &obs {
        let upstream = g.ancestors(x).expect("node exists");
        for y in obs.iter().filter(|y| *y != x) {
            out.push(CausalQuery::new(EffectKind::Ace, x, y));
            for z in obs.iter().filter(|z| *z != x && *z != y && !upstream.contains(*z)) {
                let mut cde = CausalQuery::new(EffectKind::Cde, x, y).with_mediator(z);
                cde.z = Some(0);
                out.push(cde);
                let mut sde = CausalQuery::new(EffectKind::Sde, x, y).with_mediator(z);
                sde.mediator_regime = Some(Regime::Random {
                    given: vec![],
                    table: vec![vec![0.3, 0.7]],
                });
                out.push(sde);
                out.push(CausalQuery::new(EffectKind::Nde, x, y).with_mediator(z));
                out.push(CausalQuery::new(EffectKind::Nie, x, y).with_mediator(z));
                let mut seq = CausalQuery::new(EffectKind::Seq, "", y);
                seq.sequence = Some(Sequence {
                    targets: vec![x.clone(), z.clone()],
                    regimes: vec![Regime::Atomic(1), Regime::Atomic(0)],
                    blocks: None,
                });
                out.push(seq);
            }
        }
    }
    out
}

/// The models of the oracle-equivalence sweep: 2 to 6 binary nodes, about a
/// fifth of them latent.
pub fn sweep_model(seed: u64) -> Model {
    random_model(seed, 2 + (seed as usize % 5), 0.5, 0.2)
}
