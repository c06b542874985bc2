//! Discrete Bayesian networks: exact enumeration, the truncated-factorization
//! oracle, sampling and CPT fitting.

mod cpt;
mod observed;
mod sample;
mod table;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeKind};
use crate::regimes::{regime_cpt, Plan, Regime};
use crate::POSITIVITY_EPS;

pub use cpt::{Cpt, Variable};
pub use observed::ObservedDistribution;
pub use sample::{fit_cpts, sample, Dataset, FittedModel};
pub use table::{expectation, flat_index, Assignments, Table};

/// A DAG over chance nodes with one CPT per node. Latent nodes are ordinary
/// members here; only [`ObservedDistribution`] hides them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    dag: Dag,
    vars: Vec<Variable>,
    cpts: BTreeMap<String, Cpt>,
}

impl Model {
    pub fn new(dag: Dag, vars: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        check_skeleton(&dag, &vars)?;
        let mut by_name = BTreeMap::new();
        for c in cpts {
            let t = c.target().to_string();
            if by_name.insert(t.clone(), c).is_some() {
                return Err(Error::InvalidCpt(t, "duplicate table".into()));
            }
        }
        let card_of: BTreeMap<&str, usize> = vars.iter().map(|v| (v.name.as_str(), v.card)).collect();
        for v in &vars {
            let c = by_name
                .get(&v.name)
                .ok_or_else(|| Error::InvalidCpt(v.name.clone(), "missing table".into()))?;
            if c.card() != v.card {
                return Err(Error::InvalidCpt(v.name.clone(), "cardinality mismatch".into()));
            }
            let listed: BTreeSet<String> = c.parents().iter().cloned().collect();
            if listed.len() != c.parents().len() || listed != dag.parents(&v.name)? {
                return Err(Error::InvalidCpt(
                    v.name.clone(),
                    format!("table parents {:?} disagree with graph parents", c.parents()),
                ));
            }
            for (p, &pc) in c.parents().iter().zip(c.parent_cards()) {
                if card_of[p.as_str()] != pc {
                    return Err(Error::InvalidCpt(
                        v.name.clone(),
                        format!("parent `{p}` cardinality mismatch"),
                    ));
                }
            }
        }
        if by_name.len() != vars.len() {
            let extra = by_name.keys().find(|k| !card_of.contains_key(k.as_str())).unwrap();
            return Err(Error::UnknownNode(extra.clone()));
        }
        Ok(Self {
            dag,
            vars,
            cpts: by_name,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.vars
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn cpt(&self, name: &str) -> Result<&Cpt> {
        self.cpts.get(name).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn cpts(&self) -> impl Iterator<Item = &Cpt> {
        self.vars.iter().map(|v| &self.cpts[&v.name])
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Product of CPT entries at a full assignment.
    pub fn joint_prob(&self, assignment: &BTreeMap<String, usize>) -> Result<f64> {
        let mut full = vec![0; self.vars.len()];
        for (i, v) in self.vars.iter().enumerate() {
            let val = *assignment
                .get(&v.name)
                .ok_or_else(|| Error::InvalidAssignment(format!("missing value for `{}`", v.name)))?;
            if val >= v.card {
                return Err(Error::InvalidAssignment(format!("{}={val} out of range", v.name)));
            }
            full[i] = val;
        }
        if let Some(k) = assignment.keys().find(|k| self.position(k).is_err()) {
            return Err(Error::UnknownNode(k.clone()));
        }
        Ok(self.factorized().prob(&full))
    }

    fn factorized(&self) -> Factorized<'_> {
        let layout = self
            .vars
            .iter()
            .map(|v| {
                let c = &self.cpts[&v.name];
                let pos = c.parents().iter().map(|p| self.position(p).unwrap()).collect();
                (c, pos)
            })
            .collect();
        Factorized { layout }
    }

    /// The full joint distribution, scoped in variable order.
    pub fn joint(&self) -> Table {
        let cards: Vec<usize> = self.vars.iter().map(|v| v.card).collect();
        let f = self.factorized();
        let values = Assignments::new(&cards).map(|a| f.prob(&a)).collect();
        Table::new(self.vars.iter().map(|v| v.name.clone()).collect(), cards, values)
            .expect("joint dimensions are consistent")
    }

    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<Table> {
        self.joint().marginalize(vars)
    }

    /// p(target | given) as a table over `target`.
    pub fn conditional<S: AsRef<str>>(&self, target: &[S], given: &[(String, usize)]) -> Result<Table> {
        conditional_of(&self.joint(), target, given)
    }

    /// Largest |p(a,b|c) − p(a|c)p(b|c)| over all values, skipping slices of
    /// C with no mass. Zero exactly when A ⊥ B | C holds numerically.
    pub fn independence_gap<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        let names = |s: &[S]| s.iter().map(|x| x.as_ref().to_string()).collect::<Vec<_>>();
        let (a, b, c) = (names(a), names(b), names(c));
        let scope: Vec<String> = a.iter().chain(&b).chain(&c).cloned().collect();
        let joint = self.marginal(&scope)?;
        let cards = |s: &[String]| {
            s.iter()
                .map(|n| self.variable(n).map(|v| v.card))
                .collect::<Result<Vec<_>>>()
        };
        let (ca, cb, cc) = (cards(&a)?, cards(&b)?, cards(&c)?);
        let mut gap: f64 = 0.0;
        for vc in Assignments::new(&cc) {
            let ev: Vec<(String, usize)> = c.iter().cloned().zip(vc).collect();
            let slice = joint.slice(&ev)?;
            if slice.sum() < POSITIVITY_EPS {
                continue;
            }
            let pab = slice.normalized()?;
            let pa = pab.marginalize(&a)?;
            let pb = pab.marginalize(&b)?;
            for va in Assignments::new(&ca) {
                for vb in Assignments::new(&cb) {
                    let full: Vec<usize> = va.iter().chain(&vb).copied().collect();
                    gap = gap.max((pab.get(&full) - pa.get(&va) * pb.get(&vb)).abs());
                }
            }
        }
        Ok(gap)
    }

    /// Replaces every targeted node's CPT with its regime CPT and rewires its
    /// parents accordingly; untouched CPTs are carried over unchanged.
    pub fn intervene(&self, plan: &Plan) -> Result<Model> {
        let mut dag = self.dag.clone();
        let mut cpts = self.cpts.clone();
        for (target, regime) in plan {
            let var = self.variable(target)?;
            if let Some(cond) = regime.cond_set() {
                for c in cond {
                    if c == target {
                        return Err(Error::InvalidRegime(target.clone(), "conditions on itself".into()));
                    }
                    self.variable(c).map_err(|_| {
                        Error::InvalidRegime(target.clone(), format!("unavailable conditioning variable `{c}`"))
                    })?;
                }
            }
            let cond_cards = match regime.cond_set() {
                Some(cond) => cond
                    .iter()
                    .map(|c| self.variable(c).map(|v| v.card))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![],
            };
            let new_cpt = regime_cpt(regime, var, &self.cpts[target], &cond_cards)?;
            if let Some(cond) = regime.cond_set() {
                dag.clear_parents(target)?;
                for c in cond {
                    dag.add_edge(c, target).map_err(|e| match e {
                        Error::Cycle(..) => Error::InvalidRegime(
                            target.clone(),
                            format!("conditioning variable `{c}` is a descendant of the target"),
                        ),
                        e => e,
                    })?;
                }
            }
            cpts.insert(target.clone(), new_cpt);
        }
        Model::new(dag, self.vars.clone(), cpts.into_values().collect())
    }

    pub fn intervene_one(&self, target: &str, regime: Regime) -> Result<Model> {
        self.intervene(&Plan::from([(target.to_string(), regime)]))
    }
}

/// The ground-truth oracle: the model with `plan` applied by truncated factorization.
pub fn oracle_intervene(m: &Model, plan: &Plan) -> Result<Model> {
    m.intervene(plan)
}

struct Factorized<'a> {
    layout: Vec<(&'a Cpt, Vec<usize>)>,
}

impl Factorized<'_> {
    fn prob(&self, full: &[usize]) -> f64 {
        let mut pv = Vec::with_capacity(8);
        let mut p = 1.0;
        for (i, (c, pos)) in self.layout.iter().enumerate() {
            pv.clear();
            pv.extend(pos.iter().map(|&j| full[j]));
            p *= c.prob(&pv, full[i]);
            if p == 0.0 {
                break;
            }
        }
        p
    }
}

pub(crate) fn check_skeleton(dag: &Dag, vars: &[Variable]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for v in vars {
        if !seen.insert(v.name.as_str()) {
            return Err(Error::DuplicateNode(v.name.clone()));
        }
        let n = dag.node(&v.name)?;
        if n.latent != v.latent {
            return Err(Error::InvalidVariable(
                v.name.clone(),
                "latent flag disagrees with graph".into(),
            ));
        }
    }
    for n in dag.nodes() {
        if n.kind != NodeKind::Chance {
            return Err(Error::InvalidVariable(
                n.name.clone(),
                "models hold chance nodes only".into(),
            ));
        }
        if !seen.contains(n.name.as_str()) {
            return Err(Error::InvalidVariable(n.name.clone(), "no variable declared".into()));
        }
    }
    Ok(())
}

/// Conditional of `target` given an evidence slice of `joint`.
pub(crate) fn conditional_of<S: AsRef<str>>(joint: &Table, target: &[S], given: &[(String, usize)]) -> Result<Table> {
    let mut keep: Vec<String> = target.iter().map(|t| t.as_ref().to_string()).collect();
    for (g, _) in given {
        if keep.contains(g) {
            return Err(Error::OverlappingSets(g.clone()));
        }
        keep.push(g.clone());
    }
    let sliced = joint.marginalize(&keep)?.slice(given)?;
    let mass = sliced.sum();
    if mass < POSITIVITY_EPS {
        let desc = given
            .iter()
            .map(|(g, v)| format!("{g}={v}"))
            .collect::<Vec<_>>()
            .join(",");
        return Err(Error::PositivityViolation(desc, mass));
    }
    sliced.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn xy() -> Model {
        let dag = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let cx = Cpt::root("X", vec![0.7, 0.3]).unwrap();
        let cy = Cpt::new("Y", 2, vec!["X".into()], vec![2], vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        Model::new(dag, vec![Variable::binary("X"), Variable::binary("Y")], vec![cx, cy]).unwrap()
    }

    #[test]
    fn independence_gap_of_dependent_pair() {
        let m = xy();
        // p(X=0,Y=0) = 0.42 against p(X=0) p(Y=0) = 0.7 * 0.48.
        assert!((m.independence_gap(&["X"], &["Y"], &[]).unwrap() - 0.084).abs() < 1e-12);
        assert_eq!(
            m.independence_gap(&["X"], &["X"], &["Y"]).unwrap_err().to_string(),
            "node sets overlap on `X`"
        );
    }

    fn assign(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn two_factor_product() {
        let m = xy();
        let p = m.joint_prob(&assign(&[("X", 1), ("Y", 1)])).unwrap();
        assert!((p - 0.24).abs() < 1e-15);
        assert!((m.joint().sum() - 1.0).abs() < 1e-12);
        assert!(m.joint_prob(&assign(&[("X", 1)])).is_err());
        assert!(m.joint_prob(&assign(&[("X", 1), ("Y", 2)])).is_err());
    }

    #[test]
    fn marginal_of_root_is_its_cpt() {
        let m = xy();
        assert_eq!(m.marginal(&["X"]).unwrap().values(), &[0.7, 0.3]);
    }

    #[test]
    fn conditional_positivity() {
        let dag = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let cx = Cpt::root("X", vec![1.0, 0.0]).unwrap();
        let cy = Cpt::new("Y", 2, vec!["X".into()], vec![2], vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let m = Model::new(dag, vec![Variable::binary("X"), Variable::binary("Y")], vec![cx, cy]).unwrap();
        assert!(matches!(
            m.conditional(&["Y"], &[("X".into(), 1)]),
            Err(Error::PositivityViolation(..))
        ));
    }

    #[test]
    fn atomic_intervention_on_unconfounded_edge() {
        let m = xy();
        let done = m.intervene_one("X", Regime::Atomic(1)).unwrap();
        let py = done.marginal(&["Y"]).unwrap();
        let cond = m.conditional(&["Y"], &[("X".into(), 1)]).unwrap();
        assert!(py.max_abs_diff(&cond).unwrap() < 1e-15);
        let idle = m.intervene_one("X", Regime::Idle).unwrap();
        assert_eq!(idle, m);
    }

    #[test]
    fn rejects_mismatched_tables() {
        let dag = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let cx = Cpt::root("X", vec![0.7, 0.3]).unwrap();
        let cy = Cpt::root("Y", vec![0.5, 0.5]).unwrap();
        let r = Model::new(dag, vec![Variable::binary("X"), Variable::binary("Y")], vec![cx, cy]);
        assert!(matches!(r, Err(Error::InvalidCpt(..))));
    }
}
