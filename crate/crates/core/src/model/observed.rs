use crate::error::{Error, Result};
use crate::graph::Dag;

use super::{conditional_of, Assignments, Dataset, Model, Table, Variable};

/// What an analyst can see: the causal graph (latent nodes included, as
/// structure only) and the joint distribution of the observed variables.
///
/// Identification formulas are evaluated against this type only, so latent
/// CPTs are out of reach by construction.
#[derive(Debug, Clone)]
pub struct ObservedDistribution {
    dag: Dag,
    vars: Vec<Variable>,
    joint: Table,
}

impl ObservedDistribution {
    pub fn from_model(m: &Model) -> Self {
        let vars: Vec<Variable> = m.variables().iter().filter(|v| !v.latent).cloned().collect();
        let names: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        let joint = m.joint().marginalize(&names).expect("observed variables are in scope");
        Self {
            dag: m.dag().clone(),
            vars,
            joint,
        }
    }

    /// Saturated plug-in estimate: empirical joint frequencies of the observed
    /// columns, each cell incremented by `smoothing`.
    pub fn from_dataset(dag: &Dag, vars: &[Variable], data: &Dataset, smoothing: f64) -> Result<Self> {
        if !smoothing.is_finite() || smoothing < 0.0 {
            return Err(Error::Format(format!("smoothing must be >= 0, got {smoothing}")));
        }
        let observed: Vec<Variable> = vars.iter().filter(|v| !v.latent).cloned().collect();
        let cols: Vec<usize> = observed
            .iter()
            .map(|v| {
                data.column(&v.name)
                    .ok_or_else(|| Error::Format(format!("dataset lacks column `{}`", v.name)))
            })
            .collect::<Result<_>>()?;
        let cards: Vec<usize> = observed.iter().map(|v| v.card).collect();
        let scope: Vec<String> = observed.iter().map(|v| v.name.clone()).collect();
        let mut counts = Table::zeros(scope, cards.clone());
        for v in counts.values_mut() {
            *v = smoothing;
        }
        let mut a = vec![0; cols.len()];
        for row in data.rows() {
            for (k, &c) in cols.iter().enumerate() {
                if row[c] >= cards[k] {
                    return Err(Error::InvalidAssignment(format!(
                        "{}={} out of range",
                        observed[k].name, row[c]
                    )));
                }
                a[k] = row[c];
            }
            counts.values_mut()[super::flat_index(&cards, &a)] += 1.0;
        }
        let joint = counts
            .normalized()
            .map_err(|_| Error::PositivityViolation("data".into(), 0.0))?;
        Ok(Self {
            dag: dag.clone(),
            vars: observed,
            joint,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        match self.vars.iter().find(|v| v.name == name) {
            Some(v) => Ok(v),
            None if self.dag.contains(name) => Err(Error::LatentNode(name.to_string())),
            None => Err(Error::UnknownNode(name.to_string())),
        }
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        self.variable(name).map(|v| v.card)
    }

    pub fn joint(&self) -> &Table {
        &self.joint
    }

    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<Table> {
        for v in vars {
            self.variable(v.as_ref())?;
        }
        self.joint.marginalize(vars)
    }

    pub fn conditional<S: AsRef<str>>(&self, target: &[S], given: &[(String, usize)]) -> Result<Table> {
        for v in target {
            self.variable(v.as_ref())?;
        }
        for (g, _) in given {
            self.variable(g)?;
        }
        conditional_of(&self.joint, target, given)
    }

    /// Every joint assignment of `vars` (last fastest).
    pub fn assignments<S: AsRef<str>>(&self, vars: &[S]) -> Result<Assignments> {
        let cards: Vec<usize> = vars.iter().map(|v| self.card(v.as_ref())).collect::<Result<_>>()?;
        Ok(Assignments::new(&cards))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Cpt;

    #[test]
    fn latent_variables_are_hidden() {
        let mut dag = Dag::new();
        dag.add_chance("U", true).unwrap();
        dag.add_chance("X", false).unwrap();
        dag.add_edge("U", "X").unwrap();
        let vars = vec![Variable::new("U", 2, true).unwrap(), Variable::binary("X")];
        let cu = Cpt::root("U", vec![0.5, 0.5]).unwrap();
        let cx = Cpt::new("X", 2, vec!["U".into()], vec![2], vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let m = Model::new(dag, vars, vec![cu, cx]).unwrap();
        let obs = ObservedDistribution::from_model(&m);
        assert!(matches!(obs.marginal(&["U"]), Err(Error::LatentNode(_))));
        let px = obs.marginal(&["X"]).unwrap();
        assert!((px.values()[1] - 0.4).abs() < 1e-15);
    }
}
