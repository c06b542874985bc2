//! Directed acyclic graphs with chance and regime-indicator nodes.
//!
//! Nodes are addressed by name. Every operation that returns nodes returns them
//! in name order, so node names act as the single global tie-break.

mod dot;
mod dsep;

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub use dot::to_dot;
pub use dsep::path_is_open;

pub type NodeSet = BTreeSet<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Chance,
    /// Decision node indexing how its single child is generated.
    RegimeIndicator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub latent: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Dag {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.node_names() == other.node_names()
            && self.node_names().iter().all(|n| {
                let (a, b) = (self.node(n).unwrap(), other.node(n).unwrap());
                a == b && self.parents(n).unwrap() == other.parents(n).unwrap()
            })
    }
}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph of observed chance nodes from an edge list.
    pub fn from_edges(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let mut g = Dag::new();
        for n in nodes {
            g.add_chance(n, false)?;
        }
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_chance(&mut self, name: &str, latent: bool) -> Result<()> {
        self.insert(Node {
            name: name.to_string(),
            kind: NodeKind::Chance,
            latent,
        })
        .map(|_| ())
    }

    /// Adds a regime indicator together with its single edge into `target`.
    pub fn add_regime_indicator(&mut self, name: &str, target: &str) -> Result<()> {
        let t = self.id(target)?;
        if self.nodes[t].kind != NodeKind::Chance {
            return Err(Error::InvalidEdge(
                name.into(),
                target.into(),
                "regime indicators must point into a chance node".into(),
            ));
        }
        let s = self.insert(Node {
            name: name.to_string(),
            kind: NodeKind::RegimeIndicator,
            latent: false,
        })?;
        self.parents[t].insert(s);
        self.children[s].insert(t);
        Ok(())
    }

    fn insert(&mut self, node: Node) -> Result<usize> {
        if node.name.is_empty() {
            return Err(Error::EmptyName);
        }
        if self.index.contains_key(&node.name) {
            return Err(Error::DuplicateNode(node.name));
        }
        let i = self.nodes.len();
        self.index.insert(node.name.clone(), i);
        self.nodes.push(node);
        self.parents.push(BTreeSet::new());
        self.children.push(BTreeSet::new());
        Ok(i)
    }

    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<()> {
        let (a, b) = (self.id(from)?, self.id(to)?);
        if self.nodes[a].kind == NodeKind::RegimeIndicator || self.nodes[b].kind == NodeKind::RegimeIndicator {
            return Err(Error::InvalidEdge(
                from.into(),
                to.into(),
                "regime indicator edges are fixed at insertion".into(),
            ));
        }
        if a == b || self.reaches(b, a) {
            return Err(Error::Cycle(from.into(), to.into()));
        }
        self.parents[b].insert(a);
        self.children[a].insert(b);
        Ok(())
    }

    pub fn remove_edge(&mut self, from: &str, to: &str) -> Result<()> {
        let (a, b) = (self.id(from)?, self.id(to)?);
        if self.nodes[a].kind == NodeKind::RegimeIndicator {
            return Err(Error::InvalidEdge(
                from.into(),
                to.into(),
                "regime indicator edges are fixed at insertion".into(),
            ));
        }
        self.parents[b].remove(&a);
        self.children[a].remove(&b);
        Ok(())
    }

    /// Removes every edge entering `node`.
    pub fn clear_parents(&mut self, node: &str) -> Result<()> {
        let b = self.id(node)?;
        for a in std::mem::take(&mut self.parents[b]) {
            self.children[a].remove(&b);
        }
        Ok(())
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.children[v].iter().copied());
        }
        false
    }

    pub(crate) fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub(crate) fn ids<I, S>(&self, names: I) -> Result<BTreeSet<usize>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names.into_iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub(crate) fn names(&self, ids: impl IntoIterator<Item = usize>) -> NodeSet {
        ids.into_iter().map(|i| self.nodes[i].name.clone()).collect()
    }

    pub(crate) fn name(&self, id: usize) -> &str {
        &self.nodes[id].name
    }

    pub(crate) fn parent_ids(&self, id: usize) -> &BTreeSet<usize> {
        &self.parents[id]
    }

    pub(crate) fn child_ids(&self, id: usize) -> &BTreeSet<usize> {
        &self.children[id]
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn node(&self, name: &str) -> Result<&Node> {
        Ok(&self.nodes[self.id(name)?])
    }

    pub fn is_latent(&self, name: &str) -> bool {
        self.node(name).map(|n| n.latent).unwrap_or(false)
    }

    /// Nodes in insertion order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_names(&self) -> NodeSet {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn observed_chance_nodes(&self) -> NodeSet {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Chance && !n.latent)
            .map(|n| n.name.clone())
            .collect()
    }

    pub fn parents(&self, name: &str) -> Result<NodeSet> {
        Ok(self.names(self.parents[self.id(name)?].iter().copied()))
    }

    pub fn children(&self, name: &str) -> Result<NodeSet> {
        Ok(self.names(self.children[self.id(name)?].iter().copied()))
    }

    /// Edges sorted by (source, target) name.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = (0..self.nodes.len())
            .flat_map(|a| {
                self.children[a]
                    .iter()
                    .map(move |&b| (self.nodes[a].name.clone(), self.nodes[b].name.clone()))
            })
            .collect();
        out.sort();
        out
    }

    /// Kahn's algorithm, always releasing the lexicographically smallest ready node.
    pub fn topological_order(&self) -> Vec<String> {
        let mut indegree: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<(&str, usize)> = (0..self.nodes.len())
            .filter(|&i| indegree[i] == 0)
            .map(|i| (self.name(i), i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some((name, v)) = ready.pop_first() {
            order.push(name.to_string());
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((self.name(c), c));
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len());
        order
    }

    fn closure(&self, start: &BTreeSet<usize>, up: bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = start.iter().copied().collect();
        while let Some(v) = stack.pop() {
            let next = if up { &self.parents[v] } else { &self.children[v] };
            for &n in next {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }

    pub(crate) fn ancestor_ids(&self, start: &BTreeSet<usize>) -> BTreeSet<usize> {
        self.closure(start, true)
    }

    pub(crate) fn descendant_ids(&self, start: &BTreeSet<usize>) -> BTreeSet<usize> {
        self.closure(start, false)
    }

    /// Proper descendants: `v` itself is excluded unless reachable, which acyclicity forbids.
    pub fn descendants(&self, v: &str) -> Result<NodeSet> {
        let start = BTreeSet::from([self.id(v)?]);
        Ok(self.names(self.descendant_ids(&start)))
    }

    pub fn ancestors(&self, v: &str) -> Result<NodeSet> {
        let start = BTreeSet::from([self.id(v)?]);
        Ok(self.names(self.ancestor_ids(&start)))
    }

    /// Union of descendants of every node in `vs`, the nodes themselves excluded.
    pub fn descendants_of_set<I, S>(&self, vs: I) -> Result<NodeSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let start = self.ids(vs)?;
        Ok(self.names(self.descendant_ids(&start)))
    }

    /// A directed path from `from` to `to`, if one exists.
    pub fn directed_path(&self, from: &str, to: &str) -> Result<Option<Vec<String>>> {
        let (a, b) = (self.id(from)?, self.id(to)?);
        let mut prev: HashMap<usize, usize> = HashMap::new();
        let mut queue = std::collections::VecDeque::from([a]);
        let mut seen = BTreeSet::from([a]);
        while let Some(v) = queue.pop_front() {
            if v == b {
                let mut path = vec![self.name(b).to_string()];
                let mut cur = b;
                while let Some(&p) = prev.get(&cur) {
                    path.push(self.name(p).to_string());
                    cur = p;
                }
                path.reverse();
                return Ok(Some(path));
            }
            for &c in &self.children[v] {
                if seen.insert(c) {
                    prev.insert(c, v);
                    queue.push_back(c);
                }
            }
        }
        Ok(None)
    }

    /// Standard d-separation of `a` and `b` given `c`, decided by reachability of
    /// active trails (Bayes-ball).
    pub fn d_separated<I1, I2, I3, S1, S2, S3>(&self, a: I1, b: I2, c: I3) -> Result<bool>
    where
        I1: IntoIterator<Item = S1>,
        I2: IntoIterator<Item = S2>,
        I3: IntoIterator<Item = S3>,
        S1: AsRef<str>,
        S2: AsRef<str>,
        S3: AsRef<str>,
    {
        let (a, b, c) = self.disjoint_triple(a, b, c)?;
        Ok(!dsep::reachable(self, &a, &c).iter().any(|v| b.contains(v)))
    }

    /// d-separation decided on the moralized ancestral graph.
    pub fn d_separated_moral<I1, I2, I3, S1, S2, S3>(&self, a: I1, b: I2, c: I3) -> Result<bool>
    where
        I1: IntoIterator<Item = S1>,
        I2: IntoIterator<Item = S2>,
        I3: IntoIterator<Item = S3>,
        S1: AsRef<str>,
        S2: AsRef<str>,
        S3: AsRef<str>,
    {
        let (a, b, c) = self.disjoint_triple(a, b, c)?;
        Ok(dsep::moral_separated(self, &a, &b, &c))
    }

    /// A simple path between `a` and `b` that is open given `c`, if any exists.
    pub fn open_path<I1, I2, I3, S1, S2, S3>(&self, a: I1, b: I2, c: I3) -> Result<Option<Vec<String>>>
    where
        I1: IntoIterator<Item = S1>,
        I2: IntoIterator<Item = S2>,
        I3: IntoIterator<Item = S3>,
        S1: AsRef<str>,
        S2: AsRef<str>,
        S3: AsRef<str>,
    {
        let (a, b, c) = self.disjoint_triple(a, b, c)?;
        Ok(dsep::find_open_path(self, &a, &b, &c).map(|p| p.into_iter().map(|i| self.name(i).to_string()).collect()))
    }

    fn disjoint_triple<I1, I2, I3, S1, S2, S3>(
        &self,
        a: I1,
        b: I2,
        c: I3,
    ) -> Result<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)>
    where
        I1: IntoIterator<Item = S1>,
        I2: IntoIterator<Item = S2>,
        I3: IntoIterator<Item = S3>,
        S1: AsRef<str>,
        S2: AsRef<str>,
        S3: AsRef<str>,
    {
        let (a, b, c) = (self.ids(a)?, self.ids(b)?, self.ids(c)?);
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            if let Some(&v) = x.intersection(y).next() {
                return Err(Error::OverlappingSets(self.name(v).to_string()));
            }
        }
        Ok((a, b, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Dag {
        Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap()
    }

    fn diamond() -> Dag {
        Dag::from_edges(&["D", "C", "B", "A"], &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]).unwrap()
    }

    #[test]
    fn topological_orders() {
        assert_eq!(chain().topological_order(), ["A", "B", "C"]);
        let iso = Dag::from_edges(&["B", "A"], &[]).unwrap();
        assert_eq!(iso.topological_order(), ["A", "B"]);
        assert_eq!(diamond().topological_order(), ["A", "B", "C", "D"]);
    }

    #[test]
    fn descendants_and_ancestors() {
        let g = chain();
        assert_eq!(g.descendants("A").unwrap(), NodeSet::from(["B".into(), "C".into()]));
        assert!(g.descendants("C").unwrap().is_empty());
        assert_eq!(diamond().descendants("A").unwrap().len(), 3);
        assert_eq!(g.ancestors("C").unwrap(), NodeSet::from(["A".into(), "B".into()]));
        assert!(matches!(g.descendants("Q"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn rejects_cycles_and_duplicates() {
        let mut g = chain();
        assert!(matches!(g.add_edge("C", "A"), Err(Error::Cycle(..))));
        assert!(matches!(g.add_edge("A", "A"), Err(Error::Cycle(..))));
        assert!(matches!(g.add_chance("A", false), Err(Error::DuplicateNode(_))));
        assert!(matches!(g.add_chance("", false), Err(Error::EmptyName)));
    }

    #[test]
    fn regime_indicators_are_fixed() {
        let mut g = chain();
        g.add_regime_indicator("sigma_B", "B").unwrap();
        assert_eq!(g.children("sigma_B").unwrap().len(), 1);
        assert!(g.add_edge("A", "sigma_B").is_err());
        assert!(g.add_edge("sigma_B", "C").is_err());
        assert!(!g.node("sigma_B").unwrap().latent);
    }

    #[test]
    fn basic_d_separation() {
        let g = chain();
        assert!(g.d_separated(["A"], ["C"], ["B"]).unwrap());
        assert!(!g.d_separated(["A"], ["C"], [] as [&str; 0]).unwrap());
        let col = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("C", "B")]).unwrap();
        assert!(col.d_separated(["A"], ["C"], [] as [&str; 0]).unwrap());
        assert!(!col.d_separated(["A"], ["C"], ["B"]).unwrap());
        assert!(!col.d_separated_moral(["A"], ["C"], ["B"]).unwrap());
        assert!(matches!(
            g.d_separated(["A"], ["A"], ["B"]),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn open_path_through_collider_descendant() {
        let g = Dag::from_edges(&["A", "B", "C", "D"], &[("A", "B"), ("C", "B"), ("B", "D")]).unwrap();
        let p = g.open_path(["A"], ["C"], ["D"]).unwrap().unwrap();
        assert_eq!(p, ["A", "B", "C"]);
        assert!(path_is_open(&g, &p, &["D".to_string()]).unwrap());
        assert!(g.open_path(["A"], ["C"], [] as [&str; 0]).unwrap().is_none());
    }
}
