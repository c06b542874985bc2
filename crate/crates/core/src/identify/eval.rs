//! Staged sum-product evaluation of identification formulas over observed
//! tables. Factors are only evaluated where the running weight is positive,
//! so positivity is demanded exactly for the slices a formula reaches.

use crate::error::{Error, Result};
use crate::model::{Assignments, ObservedDistribution, Table};
use crate::POSITIVITY_EPS;

/// The variables a formula ranges over, each with a frame slot.
#[derive(Debug, Clone, Default)]
pub(crate) struct Frame {
    names: Vec<String>,
    cards: Vec<usize>,
    preset: Vec<Option<usize>>,
}

impl Frame {
    pub fn add(&mut self, name: &str, card: usize) -> usize {
        if let Some(p) = self.pos(name) {
            return p;
        }
        self.names.push(name.to_string());
        self.cards.push(card);
        self.preset.push(None);
        self.names.len() - 1
    }

    /// A slot held at a constant value for the whole evaluation.
    pub fn fix(&mut self, name: &str, card: usize, value: usize) -> Result<usize> {
        if value >= card {
            return Err(Error::InvalidAssignment(format!("{name}={value} out of range")));
        }
        let p = self.add(name, card);
        self.preset[p] = Some(value);
        Ok(p)
    }

    pub fn pos(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn slots(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.pos(n).ok_or_else(|| Error::UnknownNode(n.clone())))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Factor {
    /// p(target | given) from the observed joint.
    Cond {
        given_names: Vec<String>,
        num: Table,
        num_slots: Vec<usize>,
        den: Table,
        den_slots: Vec<usize>,
    },
    /// A table read off directly, e.g. a regime or a precomputed mediator law.
    Lookup { table: Table, slots: Vec<usize> },
}

fn index(t: &Table, slots: &[usize], assign: &[usize]) -> usize {
    t.cards().iter().zip(slots).fold(0, |acc, (&c, &s)| acc * c + assign[s])
}

impl Factor {
    pub fn cond(obs: &ObservedDistribution, frame: &Frame, target: &[String], given: &[String]) -> Result<Factor> {
        let mut scope = target.to_vec();
        scope.extend(given.iter().cloned());
        let num = obs.marginal(&scope)?;
        let den = num.marginalize(given)?;
        Ok(Factor::Cond {
            given_names: given.to_vec(),
            num_slots: frame.slots(&scope)?,
            den_slots: frame.slots(given)?,
            num,
            den,
        })
    }

    pub fn lookup(table: Table, frame: &Frame) -> Result<Factor> {
        Ok(Factor::Lookup {
            slots: frame.slots(table.scope())?,
            table,
        })
    }

    fn eval(&self, assign: &[usize]) -> Result<f64> {
        match self {
            Factor::Lookup { table, slots } => Ok(table.values()[index(table, slots, assign)]),
            Factor::Cond {
                given_names,
                num,
                num_slots,
                den,
                den_slots,
            } => {
                let d = den.values()[index(den, den_slots, assign)];
                if d < POSITIVITY_EPS {
                    let desc = given_names
                        .iter()
                        .zip(den_slots)
                        .map(|(g, &s)| format!("{g}={}", assign[s]))
                        .collect::<Vec<_>>()
                        .join(",");
                    return Err(Error::PositivityViolation(desc, d));
                }
                Ok(num.values()[index(num, num_slots, assign)] / d)
            }
        }
    }
}

/// Sum over `vars` of the product of `factors`, nested inside the earlier stages.
#[derive(Debug, Clone, Default)]
pub(crate) struct Stage {
    pub vars: Vec<usize>,
    pub factors: Vec<Factor>,
}

/// Evaluates the nested sum-product and accumulates the weight of every
/// complete assignment into a table over `out`.
pub(crate) fn sum_product(frame: &Frame, stages: &[Stage], out: &[String]) -> Result<Table> {
    let out_slots = frame.slots(out)?;
    let mut acc = Table::zeros(out.to_vec(), out_slots.iter().map(|&s| frame.cards[s]).collect());
    let mut assign: Vec<usize> = frame.preset.iter().map(|p| p.unwrap_or(0)).collect();
    for st in stages {
        if let Some(&v) = st.vars.iter().find(|&&v| frame.preset[v].is_some()) {
            return Err(Error::InvalidQuery(format!(
                "`{}` is both fixed and summed",
                frame.names[v]
            )));
        }
    }
    run(frame, stages, &out_slots, &mut assign, 1.0, &mut acc)?;
    Ok(acc)
}

fn run(
    frame: &Frame,
    stages: &[Stage],
    out: &[usize],
    assign: &mut [usize],
    weight: f64,
    acc: &mut Table,
) -> Result<()> {
    let Some((st, rest)) = stages.split_first() else {
        let i = index(acc, out, assign);
        acc.values_mut()[i] += weight;
        return Ok(());
    };
    let cards: Vec<usize> = st.vars.iter().map(|&v| frame.cards[v]).collect();
    for a in Assignments::new(&cards) {
        for (&slot, &val) in st.vars.iter().zip(&a) {
            assign[slot] = val;
        }
        let mut w = weight;
        for f in &st.factors {
            if w == 0.0 {
                break;
            }
            w *= f.eval(assign)?;
        }
        if w != 0.0 {
            run(frame, rest, out, assign, w, acc)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn adjustment_matches_direct_enumeration() {
        let m = fixtures::g_seq(3);
        let obs = ObservedDistribution::from_model(&m);
        let mut f = Frame::default();
        f.fix("X", 2, 1).unwrap();
        f.fix("Z", 2, 0).unwrap();
        let v = f.add("V", 2);
        let y = f.add("Y", 2);
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let stages = vec![
            Stage {
                vars: vec![v],
                factors: vec![Factor::cond(&obs, &f, &s(&["V"]), &s(&["X"])).unwrap()],
            },
            Stage {
                vars: vec![y],
                factors: vec![Factor::cond(&obs, &f, &s(&["Y"]), &s(&["X", "Z", "V"])).unwrap()],
            },
        ];
        let t = sum_product(&f, &stages, &s(&["Y"])).unwrap();
        let mut want = 0.0;
        for vv in 0..2 {
            let pv = m.conditional(&["V"], &[("X".into(), 1)]).unwrap().values()[vv];
            let py = m
                .conditional(&["Y"], &[("X".into(), 1), ("Z".into(), 0), ("V".into(), vv)])
                .unwrap()
                .values()[1];
            want += pv * py;
        }
        assert!((t.values()[1] - want).abs() < 1e-12);
        assert!((t.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreached_slices_need_no_positivity() {
        let dag = crate::graph::Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let m = fixtures::binary_model(&dag, &[("X", vec![0.0]), ("Y", vec![0.2, 0.7])]).unwrap();
        let obs = ObservedDistribution::from_model(&m);
        let mut f = Frame::default();
        let x = f.add("X", 2);
        let y = f.add("Y", 2);
        let st = vec![
            Stage {
                vars: vec![x],
                factors: vec![Factor::cond(&obs, &f, &["X".into()], &[]).unwrap()],
            },
            Stage {
                vars: vec![y],
                factors: vec![Factor::cond(&obs, &f, &["Y".into()], &["X".into()]).unwrap()],
            },
        ];
        let t = sum_product(&f, &st, &["Y".into()]).unwrap();
        assert!((t.values()[1] - 0.2).abs() < 1e-12);

        let mut f2 = Frame::default();
        f2.fix("X", 2, 1).unwrap();
        let y = f2.add("Y", 2);
        let st = vec![Stage {
            vars: vec![y],
            factors: vec![Factor::cond(&obs, &f2, &["Y".into()], &["X".into()]).unwrap()],
        }];
        assert!(matches!(
            sum_product(&f2, &st, &["Y".into()]),
            Err(Error::PositivityViolation(..))
        ));
    }
}
