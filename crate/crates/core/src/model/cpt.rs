use crate::error::{Error, Result};
use crate::NORMALIZATION_TOL;

use super::table::flat_index;

/// A discrete variable. Values are coded `0..card`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub card: usize,
    pub latent: bool,
    /// Numeric value attached to each code, used for expectations.
    pub values: Option<Vec<f64>>,
}

impl Variable {
    pub fn new(name: &str, card: usize, latent: bool) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        if card < 2 {
            return Err(Error::InvalidVariable(name.into(), format!("cardinality {card} < 2")));
        }
        Ok(Self {
            name: name.into(),
            card,
            latent,
            values: None,
        })
    }

    pub fn binary(name: &str) -> Self {
        Self::new(name, 2, false).expect("valid binary variable")
    }

    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.card {
            return Err(Error::InvalidVariable(
                self.name.clone(),
                format!("{} numeric values for cardinality {}", values.len(), self.card),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVariable(self.name.clone(), "non-finite value".into()));
        }
        self.values = Some(values);
        Ok(self)
    }

    /// Numeric value of code `k`.
    pub fn value_of(&self, k: usize) -> f64 {
        self.values.as_ref().map_or(k as f64, |v| v[k])
    }
}

/// p(target | parents), one row per parent assignment (last parent fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    target: String,
    card: usize,
    parents: Vec<String>,
    parent_cards: Vec<usize>,
    table: Vec<f64>,
}

impl Cpt {
    pub fn new(
        target: &str,
        card: usize,
        parents: Vec<String>,
        parent_cards: Vec<usize>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let bad = |msg: String| Error::InvalidCpt(target.to_string(), msg);
        if parents.len() != parent_cards.len() {
            return Err(bad("parent cardinalities do not match parents".into()));
        }
        if parents.iter().any(|p| p == target) {
            return Err(bad("a variable cannot be its own parent".into()));
        }
        let n_rows: usize = parent_cards.iter().product();
        if rows.len() != n_rows {
            return Err(bad(format!("expected {n_rows} rows, got {}", rows.len())));
        }
        let mut table = Vec::with_capacity(n_rows * card);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != card {
                return Err(bad(format!("row {i} has {} entries, expected {card}", row.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(bad(format!("row {i} sums to {s}")));
            }
            table.extend(row);
        }
        Ok(Self {
            target: target.into(),
            card,
            parents,
            parent_cards,
            table,
        })
    }

    pub fn root(target: &str, dist: Vec<f64>) -> Result<Self> {
        let card = dist.len();
        Self::new(target, card, vec![], vec![], vec![dist])
    }

    /// Point mass on `value`, ignoring every parent.
    pub fn delta(target: &str, card: usize, value: usize) -> Result<Self> {
        if value >= card {
            return Err(Error::InvalidRegime(
                target.into(),
                format!("value {value} out of range for cardinality {card}"),
            ));
        }
        let mut row = vec![0.0; card];
        row[value] = 1.0;
        Self::new(target, card, vec![], vec![], vec![row])
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn n_rows(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row(&self, parent_values: &[usize]) -> &[f64] {
        let r = flat_index(&self.parent_cards, parent_values);
        &self.table[r * self.card..(r + 1) * self.card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.card)
    }

    pub fn prob(&self, parent_values: &[usize], value: usize) -> f64 {
        self.row(parent_values)[value]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_rows() {
        assert!(Cpt::root("X", vec![0.3, 0.7]).is_ok());
        assert!(Cpt::root("X", vec![0.3, 0.6]).is_err());
        assert!(Cpt::root("X", vec![-0.1, 1.1]).is_err());
        let rows = vec![vec![0.5, 0.5]];
        assert!(Cpt::new("Y", 2, vec!["X".into()], vec![2], rows).is_err());
        assert!(Variable::new("X", 1, false).is_err());
    }

    #[test]
    fn row_lookup_last_parent_fastest() {
        let rows = vec![vec![1.0, 0.0], vec![0.9, 0.1], vec![0.8, 0.2], vec![0.7, 0.3]];
        let c = Cpt::new("Y", 2, vec!["A".into(), "B".into()], vec![2, 2], rows).unwrap();
        assert_eq!(c.prob(&[0, 1], 1), 0.1);
        assert_eq!(c.prob(&[1, 0], 1), 0.2);
        assert_eq!(Cpt::delta("X", 2, 1).unwrap().row(&[]), &[0.0, 1.0]);
    }
}
