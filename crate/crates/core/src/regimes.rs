//! Intervention regimes, their CPTs, and the graph surgery that turns a causal
//! DAG into the influence diagram used for identifiability checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeKind};
use crate::identify::checks::check_zx_backdoor;
use crate::model::{Assignments, Cpt, Model, ObservedDistribution, Table, Variable};

/// How a single variable is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// No intervention: the observational mechanism.
    Idle,
    /// Set the target to a fixed code regardless of everything else.
    Atomic(usize),
    /// Set the target to `decision[row]`, `row` being the row-major index of
    /// the assignment of `given` (last fastest).
    Conditional { given: Vec<String>, decision: Vec<usize> },
    /// Draw the target from `table[row]`, rows indexed like `Conditional`.
    Random { given: Vec<String>, table: Vec<Vec<f64>> },
}

/// A plan assigns a regime to each intervened variable.
pub type Plan = BTreeMap<String, Regime>;

impl Regime {
    /// Conditioning set under this regime, `None` when the observational
    /// parents are kept.
    pub fn cond_set(&self) -> Option<&[String]> {
        match self {
            Regime::Idle => None,
            Regime::Atomic(_) => Some(&[]),
            Regime::Conditional { given, .. } | Regime::Random { given, .. } => Some(given),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, Regime::Idle)
    }

    /// Uniform random regime with no conditioning.
    pub fn uniform(card: usize) -> Regime {
        Regime::Random {
            given: vec![],
            table: vec![vec![1.0 / card as f64; card]],
        }
    }
}

/// Name of the regime indicator attached to `target`.
pub fn indicator_name(target: &str) -> String {
    format!("sigma_{target}")
}

/// The CPT of `target` under `r`. `cond_cards` are the cardinalities of the
/// regime's conditioning set, in its listed order.
pub fn regime_cpt(r: &Regime, target: &Variable, observational: &Cpt, cond_cards: &[usize]) -> Result<Cpt> {
    let bad = |msg: String| Error::InvalidRegime(target.name.clone(), msg);
    match r {
        Regime::Idle => Ok(observational.clone()),
        Regime::Atomic(v) => Cpt::delta(&target.name, target.card, *v),
        Regime::Conditional { given, decision } => {
            check_cond(given, cond_cards, &target.name)?;
            let rows: usize = cond_cards.iter().product();
            if decision.len() != rows {
                return Err(bad(format!(
                    "decision map covers {} of {rows} conditioning assignments",
                    decision.len()
                )));
            }
            let table = decision
                .iter()
                .map(|&d| {
                    if d >= target.card {
                        return Err(bad(format!("decision value {d} out of range")));
                    }
                    let mut row = vec![0.0; target.card];
                    row[d] = 1.0;
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            Cpt::new(&target.name, target.card, given.clone(), cond_cards.to_vec(), table)
        }
        Regime::Random { given, table } => {
            check_cond(given, cond_cards, &target.name)?;
            Cpt::new(
                &target.name,
                target.card,
                given.clone(),
                cond_cards.to_vec(),
                table.clone(),
            )
            .map_err(|e| bad(e.to_string()))
        }
    }
}

/// A non-idle regime as a table over its conditioning set followed by the
/// target; `None` for the idle regime.
pub fn regime_table(r: &Regime, target: &Variable, cond_cards: &[usize]) -> Result<Option<Table>> {
    if r.is_idle() {
        return Ok(None);
    }
    let placeholder = Cpt::root(&target.name, vec![1.0 / target.card as f64; target.card])?;
    let c = regime_cpt(r, target, &placeholder, cond_cards)?;
    let mut scope = c.parents().to_vec();
    scope.push(target.name.clone());
    let mut cards = c.parent_cards().to_vec();
    cards.push(target.card);
    Table::new(scope, cards, c.rows().flatten().copied().collect()).map(Some)
}

fn check_cond(given: &[String], cond_cards: &[usize], target: &str) -> Result<()> {
    if given.len() != cond_cards.len() {
        return Err(Error::InvalidRegime(
            target.into(),
            "conditioning cardinalities missing".into(),
        ));
    }
    let distinct: BTreeSet<&String> = given.iter().collect();
    if distinct.len() != given.len() {
        return Err(Error::InvalidRegime(
            target.into(),
            "repeated conditioning variable".into(),
        ));
    }
    if given.iter().any(|g| g == target) {
        return Err(Error::InvalidRegime(target.into(), "conditions on itself".into()));
    }
    Ok(())
}

/// Parent set a target receives in a rewired graph.
#[derive(Debug, Clone)]
pub(crate) enum Parents {
    Keep,
    Replace(Vec<String>),
    /// Observational parents plus these.
    Extend(Vec<String>),
}

/// Rewires each target's parents and attaches a regime indicator to it.
pub(crate) fn rewire(g: &Dag, targets: &[(String, Parents)], indicators: bool) -> Result<Dag> {
    let mut out = g.clone();
    for (t, spec) in targets {
        let node = g.node(t)?;
        if node.kind != NodeKind::Chance {
            return Err(Error::InvalidRegime(
                t.clone(),
                "only chance nodes can be intervened on".into(),
            ));
        }
        let (clear, extra) = match spec {
            Parents::Keep => (false, &[][..]),
            Parents::Replace(p) => (true, &p[..]),
            Parents::Extend(p) => (false, &p[..]),
        };
        if extra.iter().any(|p| p == t) {
            return Err(Error::InvalidRegime(t.clone(), "conditions on itself".into()));
        }
        if clear {
            out.clear_parents(t)?;
        }
        for p in extra {
            out.add_edge(p, t).map_err(|e| match e {
                Error::Cycle(..) => Error::InvalidRegime(
                    t.clone(),
                    format!("conditioning variable `{p}` is a descendant of the target"),
                ),
                e => e,
            })?;
        }
    }
    if indicators {
        for (t, _) in targets {
            out.add_regime_indicator(&indicator_name(t), t)?;
        }
    }
    Ok(out)
}

fn parents_under(r: &Regime) -> Parents {
    match r.cond_set() {
        None => Parents::Keep,
        Some(c) => Parents::Replace(c.to_vec()),
    }
}

/// The diagram under a fixed plan: atomic targets lose all incoming edges,
/// conditional and random targets get their conditioning set as parents, and
/// every target receives its regime indicator.
pub fn surgery(g: &Dag, plan: &Plan) -> Result<Dag> {
    let targets: Vec<(String, Parents)> = plan.iter().map(|(t, r)| (t.clone(), parents_under(r))).collect();
    rewire(g, &targets, true)
}

/// The common influence diagram over several considered regimes per target:
/// each target's parent set is the union of its parent sets under all of them.
pub fn influence_diagram(g: &Dag, considered: &BTreeMap<String, Vec<Regime>>) -> Result<Dag> {
    let targets: Vec<(String, Parents)> = considered
        .iter()
        .map(|(t, rs)| {
            let keep = rs.is_empty() || rs.iter().any(Regime::is_idle);
            let mut extra: Vec<String> = Vec::new();
            for r in rs {
                for c in r.cond_set().unwrap_or(&[]) {
                    if !extra.contains(c) {
                        extra.push(c.clone());
                    }
                }
            }
            let spec = if keep {
                Parents::Extend(extra)
            } else {
                Parents::Replace(extra)
            };
            (t.clone(), spec)
        })
        .collect();
    rewire(g, &targets, true)
}

/// The natural regime d_{W,x*} for mediator `target`: draw it from its
/// distribution given W with the treatment set to `baseline`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalRegimeSpec {
    pub treatment: String,
    pub target: String,
    pub w: Vec<String>,
    pub baseline: usize,
}

impl NaturalRegimeSpec {
    /// W may not contain the treatment, the mediator, or any of their descendants.
    pub fn validate(&self, g: &Dag) -> Result<()> {
        let mut banned = g.descendants_of_set([&self.treatment, &self.target])?;
        banned.insert(self.treatment.clone());
        banned.insert(self.target.clone());
        for w in &self.w {
            g.node(w)?;
            if banned.contains(w) {
                return Err(Error::InvalidW(format!(
                    "`{w}` must not be {} or {} or one of their descendants",
                    self.treatment, self.target
                )));
            }
        }
        Ok(())
    }
}

/// Where the natural regime's distribution comes from.
pub enum NaturalSource<'a> {
    /// Ground truth from the full model, latent variables included.
    Oracle(&'a Model),
    /// Back-door adjustment within strata of W by the covariates `s`.
    Observational {
        data: &'a ObservedDistribution,
        s: Vec<String>,
    },
}

/// Materializes d_{W,x*} as an explicit random regime on the mediator.
pub fn natural_regime(spec: &NaturalRegimeSpec, source: NaturalSource<'_>) -> Result<Regime> {
    match source {
        NaturalSource::Oracle(m) => {
            spec.validate(m.dag())?;
            let done = m.intervene_one(&spec.treatment, Regime::Atomic(spec.baseline))?;
            let cards: Vec<usize> = spec
                .w
                .iter()
                .map(|w| m.variable(w).map(|v| v.card))
                .collect::<Result<_>>()?;
            let joint = done.joint();
            let table = Assignments::new(&cards)
                .map(|a| {
                    let given: Vec<(String, usize)> = spec.w.iter().cloned().zip(a).collect();
                    crate::model::conditional_of(&joint, &[&spec.target], &given).map(|t| t.values().to_vec())
                })
                .collect::<Result<_>>()?;
            Ok(Regime::Random {
                given: spec.w.clone(),
                table,
            })
        }
        NaturalSource::Observational { data, s } => {
            spec.validate(data.dag())?;
            let check = check_zx_backdoor(data.dag(), &spec.treatment, &spec.target, &spec.w, &s)?;
            if !check.holds {
                return Err(Error::NotIdentified(format!(
                    "covariates {:?} do not satisfy the mediator back-door condition{}",
                    s,
                    check
                        .witness
                        .map(|w| format!(": open path {}", w.path.join(" - ")))
                        .unwrap_or_default()
                )));
            }
            let q = crate::identify::natural_mediator_table(
                data,
                &spec.treatment,
                &spec.target,
                &spec.w,
                &s,
                spec.baseline,
            )?;
            let zc = data.card(&spec.target)?;
            Ok(Regime::Random {
                given: spec.w.clone(),
                table: q.values().chunks(zc).map(|r| r.to_vec()).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn atomic_cpt_is_delta() {
        let x = Variable::binary("X");
        let obs = Cpt::root("X", vec![0.3, 0.7]).unwrap();
        let c = regime_cpt(&Regime::Atomic(1), &x, &obs, &[]).unwrap();
        assert_eq!(c.row(&[]), &[0.0, 1.0]);
        let other = Cpt::root("X", vec![0.9, 0.1]).unwrap();
        assert_eq!(regime_cpt(&Regime::Atomic(1), &x, &other, &[]).unwrap(), c);
        assert!(regime_cpt(&Regime::Atomic(2), &x, &obs, &[]).is_err());
        assert_eq!(regime_cpt(&Regime::Idle, &x, &obs, &[]).unwrap(), obs);
    }

    #[test]
    fn conditional_copy_function() {
        let z = Variable::binary("Z");
        let obs = Cpt::root("Z", vec![0.5, 0.5]).unwrap();
        let r = Regime::Conditional {
            given: vec!["V".into()],
            decision: vec![0, 1],
        };
        let c = regime_cpt(&r, &z, &obs, &[2]).unwrap();
        assert_eq!(c.row(&[0]), &[1.0, 0.0]);
        assert_eq!(c.row(&[1]), &[0.0, 1.0]);
        let partial = Regime::Conditional {
            given: vec!["V".into()],
            decision: vec![0],
        };
        assert!(regime_cpt(&partial, &z, &obs, &[2]).is_err());
    }

    #[test]
    fn surgery_on_sequential_graph() {
        let g = fixtures::g_seq_dag();
        let cut = surgery(&g, &Plan::from([("Z".into(), Regime::Atomic(0))])).unwrap();
        assert_eq!(cut.parents("Z").unwrap(), ["sigma_Z".to_string()].into());
        assert!(cut.d_separated(["X"], ["Z"], [] as [&str; 0]).unwrap());

        let idle = surgery(&g, &Plan::from([("Z".into(), Regime::Idle)])).unwrap();
        assert_eq!(idle.parents("Z").unwrap().len(), 3);

        let rnd = Regime::Random {
            given: vec!["V".into()],
            table: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let r = surgery(&g, &Plan::from([("Z".into(), rnd)])).unwrap();
        assert_eq!(r.parents("Z").unwrap(), ["V".to_string(), "sigma_Z".to_string()].into());

        let selfref = Regime::Random {
            given: vec!["Z".into()],
            table: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        assert!(surgery(&g, &Plan::from([("Z".into(), selfref)])).is_err());
    }

    #[test]
    fn union_rule_keeps_observational_parents() {
        let g = fixtures::g_seq_dag();
        let considered = BTreeMap::from([("Z".to_string(), vec![Regime::Idle, Regime::Atomic(1)])]);
        let d = influence_diagram(&g, &considered).unwrap();
        assert_eq!(d.parents("Z").unwrap().len(), 3);
        let only_atomic = BTreeMap::from([("Z".to_string(), vec![Regime::Atomic(1)])]);
        assert_eq!(
            influence_diagram(&g, &only_atomic).unwrap().parents("Z").unwrap().len(),
            1
        );
    }

    #[test]
    fn natural_regime_reads_mediator_cpt() {
        let m = fixtures::g_med(5);
        let spec = NaturalRegimeSpec {
            treatment: "X".into(),
            target: "Z".into(),
            w: vec![],
            baseline: 0,
        };
        let r = natural_regime(&spec, NaturalSource::Oracle(&m)).unwrap();
        let Regime::Random { table, .. } = r else { panic!() };
        let row = m.cpt("Z").unwrap().row(&[0]);
        for (a, b) in table[0].iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
        let bad = NaturalRegimeSpec {
            w: vec!["V".into()],
            ..spec
        };
        assert!(matches!(
            natural_regime(&bad, NaturalSource::Oracle(&m)),
            Err(Error::InvalidW(_))
        ));
    }
}
