use crate::error::{Error, Result};
use crate::NORMALIZATION_TOL;

/// Odometer over joint assignments, last position varying fastest.
#[derive(Debug, Clone)]
pub struct Assignments {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Assignments {
    pub fn new(cards: &[usize]) -> Self {
        let next = if cards.contains(&0) {
            None
        } else {
            Some(vec![0; cards.len()])
        };
        Self {
            cards: cards.to_vec(),
            next,
        }
    }
}

impl Iterator for Assignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        for i in (0..nxt.len()).rev() {
            nxt[i] += 1;
            if nxt[i] < self.cards[i] {
                self.next = Some(nxt);
                return Some(cur);
            }
            nxt[i] = 0;
        }
        Some(cur)
    }
}

/// Row-major flat index of `assignment` over `cards`.
pub fn flat_index(cards: &[usize], assignment: &[usize]) -> usize {
    cards.iter().zip(assignment).fold(0, |acc, (&c, &v)| acc * c + v)
}

/// Nonnegative values over the joint assignments of an ordered scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    scope: Vec<String>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(scope: Vec<String>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} scope variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        let len: usize = cards.iter().product();
        if values.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {len} entries, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Format(format!("table entry {v} is not a nonnegative number")));
        }
        for (i, s) in scope.iter().enumerate() {
            if scope[..i].contains(s) {
                return Err(Error::OverlappingSets(s.clone()));
            }
        }
        Ok(Self { scope, cards, values })
    }

    pub fn zeros(scope: Vec<String>, cards: Vec<usize>) -> Self {
        let len = cards.iter().product();
        Self {
            scope,
            cards,
            values: vec![0.0; len],
        }
    }

    pub fn scope(&self) -> &[String] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn position(&self, var: &str) -> Option<usize> {
        self.scope.iter().position(|s| s == var)
    }

    pub fn get(&self, assignment: &[usize]) -> f64 {
        self.values[flat_index(&self.cards, assignment)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn normalized(&self) -> Result<Table> {
        let s = self.sum();
        if s <= 0.0 {
            return Err(Error::NotNormalized(s));
        }
        Ok(Table {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values: self.values.iter().map(|v| v / s).collect(),
        })
    }

    /// Sums out everything not in `keep`; the result follows `keep`'s order.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<Table> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|k| {
                self.position(k.as_ref())
                    .ok_or_else(|| Error::UnknownNode(k.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let scope: Vec<String> = keep.iter().map(|k| k.as_ref().to_string()).collect();
        let mut out = Table::new(scope, cards.clone(), vec![0.0; cards.iter().product()])?;
        let mut sub = vec![0; pos.len()];
        for (a, v) in Assignments::new(&self.cards).zip(&self.values) {
            for (s, &p) in sub.iter_mut().zip(&pos) {
                *s = a[p];
            }
            out.values[flat_index(&cards, &sub)] += v;
        }
        Ok(out)
    }

    /// Restricts to the slice where each `(var, value)` holds; those variables
    /// leave the scope.
    pub fn slice(&self, evidence: &[(String, usize)]) -> Result<Table> {
        let mut fixed = vec![None; self.scope.len()];
        for (var, val) in evidence {
            let p = self.position(var).ok_or_else(|| Error::UnknownNode(var.clone()))?;
            if *val >= self.cards[p] {
                return Err(Error::InvalidAssignment(format!("{var}={val} out of range")));
            }
            fixed[p] = Some(*val);
        }
        let rest: Vec<usize> = (0..self.scope.len()).filter(|&i| fixed[i].is_none()).collect();
        let scope = rest.iter().map(|&i| self.scope[i].clone()).collect();
        let cards: Vec<usize> = rest.iter().map(|&i| self.cards[i]).collect();
        let values = Assignments::new(&self.cards)
            .zip(&self.values)
            .filter(|(a, _)| fixed.iter().zip(a).all(|(f, v)| f.is_none_or(|f| f == *v)))
            .map(|(_, &v)| v)
            .collect();
        Table::new(scope, cards, values)
    }

    pub fn max_abs_diff(&self, other: &Table) -> Result<f64> {
        if self.scope != other.scope || self.cards != other.cards {
            return Err(Error::DimensionMismatch(format!(
                "scopes {:?} and {:?} differ",
                self.scope, other.scope
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// E[Y] for a normalized single-variable table, with `values[k]` the number
/// attached to code `k` (codes themselves when `None`).
pub fn expectation(t: &Table, values: Option<&[f64]>) -> Result<f64> {
    if t.scope().len() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expectation needs a single-variable table, got scope {:?}",
            t.scope()
        )));
    }
    if !t.is_normalized() {
        return Err(Error::NotNormalized(t.sum()));
    }
    if let Some(v) = values {
        if v.len() != t.cards()[0] {
            return Err(Error::DimensionMismatch("numeric values vs cardinality".into()));
        }
    }
    Ok(t.values()
        .iter()
        .enumerate()
        .map(|(k, p)| p * values.map_or(k as f64, |v| v[k]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn odometer_last_fastest() {
        let all: Vec<_> = Assignments::new(&[2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[3], vec![1, 0]);
        assert_eq!(Assignments::new(&[]).count(), 1);
        assert_eq!(flat_index(&[2, 3], &[1, 2]), 5);
    }

    #[test]
    fn marginalize_and_slice() {
        let t = Table::new(s(&["A", "B"]), vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = t.marginalize(&["B"]).unwrap();
        assert!((b.values()[0] - 0.4).abs() < 1e-15);
        let ba = t.marginalize(&["B", "A"]).unwrap();
        assert_eq!(ba.values(), &[0.1, 0.3, 0.2, 0.4]);
        let sl = t.slice(&[("A".into(), 1)]).unwrap();
        assert_eq!(sl.scope(), &["B"]);
        assert_eq!(sl.values(), &[0.3, 0.4]);
    }

    #[test]
    fn expectations() {
        let point = Table::new(s(&["Y"]), vec![2], vec![0.0, 1.0]).unwrap();
        assert_eq!(expectation(&point, None).unwrap(), 1.0);
        let unif = Table::new(s(&["Y"]), vec![2], vec![0.5, 0.5]).unwrap();
        assert_eq!(expectation(&unif, None).unwrap(), 0.5);
        assert_eq!(expectation(&unif, Some(&[-1.0, 3.0])).unwrap(), 1.0);
        let bad = Table::new(s(&["Y"]), vec![2], vec![0.5, 0.6]).unwrap();
        assert!(matches!(expectation(&bad, None), Err(Error::NotNormalized(_))));
    }
}
