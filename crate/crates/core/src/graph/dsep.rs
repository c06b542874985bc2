use std::collections::{BTreeSet, VecDeque};

use super::Dag;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Dir {
    /// Trail arrived from a child.
    Up,
    /// Trail arrived from a parent.
    Down,
}

/// Nodes reachable from `src` along active trails given `given`.
pub(super) fn reachable(g: &Dag, src: &BTreeSet<usize>, given: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut anc_given = g.ancestor_ids(given);
    anc_given.extend(given.iter().copied());

    let mut visited: BTreeSet<(usize, Dir)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, Dir)> = src.iter().map(|&s| (s, Dir::Up)).collect();
    let mut out = BTreeSet::new();

    while let Some((v, dir)) = queue.pop_front() {
        if !visited.insert((v, dir)) {
            continue;
        }
        let observed = given.contains(&v);
        if !observed {
            out.insert(v);
        }
        match dir {
            Dir::Up if !observed => {
                queue.extend(g.parent_ids(v).iter().map(|&p| (p, Dir::Up)));
                queue.extend(g.child_ids(v).iter().map(|&c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !observed {
                    queue.extend(g.child_ids(v).iter().map(|&c| (c, Dir::Down)));
                }
                if anc_given.contains(&v) {
                    queue.extend(g.parent_ids(v).iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
    }
    out
}

/// Separation of `a` and `b` by `c` in the moral graph of An(a ∪ b ∪ c).
pub(super) fn moral_separated(g: &Dag, a: &BTreeSet<usize>, b: &BTreeSet<usize>, c: &BTreeSet<usize>) -> bool {
    let mut keep: BTreeSet<usize> = a.union(b).chain(c.iter()).copied().collect();
    keep.extend(g.ancestor_ids(&keep));

    let n = g.len();
    let mut adj = vec![BTreeSet::new(); n];
    for &v in &keep {
        let pa: Vec<usize> = g.parent_ids(v).iter().copied().collect();
        for (i, &p) in pa.iter().enumerate() {
            adj[v].insert(p);
            adj[p].insert(v);
            for &q in &pa[i + 1..] {
                adj[p].insert(q);
                adj[q].insert(p);
            }
        }
    }

    let mut seen: BTreeSet<usize> = a.clone();
    let mut stack: Vec<usize> = a.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if b.contains(&v) {
            return false;
        }
        for &w in &adj[v] {
            if keep.contains(&w) && !c.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    true
}

fn is_edge(g: &Dag, from: usize, to: usize) -> bool {
    g.child_ids(from).contains(&to)
}

fn middle_open(
    g: &Dag,
    prev: usize,
    mid: usize,
    next: usize,
    given: &BTreeSet<usize>,
    anc_given: &BTreeSet<usize>,
) -> bool {
    let collider = is_edge(g, prev, mid) && is_edge(g, next, mid);
    if collider {
        given.contains(&mid) || anc_given.contains(&mid)
    } else {
        !given.contains(&mid)
    }
}

/// Depth-first search for a simple open path; neighbours are tried in name order.
pub(super) fn find_open_path(
    g: &Dag,
    a: &BTreeSet<usize>,
    b: &BTreeSet<usize>,
    c: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let anc_given = g.ancestor_ids(c);

    fn neighbours(g: &Dag, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = g.parent_ids(v).iter().chain(g.child_ids(v).iter()).copied().collect();
        out.sort_by(|x, y| g.name(*x).cmp(g.name(*y)));
        out
    }

    fn dfs(
        g: &Dag,
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        b: &BTreeSet<usize>,
        c: &BTreeSet<usize>,
        anc_given: &BTreeSet<usize>,
    ) -> bool {
        let v = *path.last().unwrap();
        if b.contains(&v) {
            return true;
        }
        for w in neighbours(g, v) {
            if on_path[w] {
                continue;
            }
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                if !middle_open(g, prev, v, w, c, anc_given) {
                    continue;
                }
            }
            path.push(w);
            on_path[w] = true;
            if dfs(g, path, on_path, b, c, anc_given) {
                return true;
            }
            path.pop();
            on_path[w] = false;
        }
        false
    }

    let mut starts: Vec<usize> = a.iter().copied().collect();
    starts.sort_by(|x, y| g.name(*x).cmp(g.name(*y)));
    let mut on_path = vec![false; g.len()];
    for s in starts {
        let mut path = vec![s];
        on_path[s] = true;
        if dfs(g, &mut path, &mut on_path, b, c, &anc_given) {
            return Some(path);
        }
        on_path[s] = false;
    }
    None
}

/// Whether `path` is a simple path of `g` whose every interior node is open given `given`.
pub fn path_is_open(g: &Dag, path: &[String], given: &[String]) -> Result<bool> {
    if path.len() < 2 {
        return Err(Error::Format("a path needs at least two nodes".into()));
    }
    let ids: Vec<usize> = path.iter().map(|n| g.id(n)).collect::<Result<_>>()?;
    let c = g.ids(given)?;
    let distinct: BTreeSet<usize> = ids.iter().copied().collect();
    if distinct.len() != ids.len() {
        return Ok(false);
    }
    for w in ids.windows(2) {
        if !is_edge(g, w[0], w[1]) && !is_edge(g, w[1], w[0]) {
            return Ok(false);
        }
    }
    if c.contains(&ids[0]) || c.contains(ids.last().unwrap()) {
        return Ok(false);
    }
    let anc_given = g.ancestor_ids(&c);
    Ok(ids.windows(3).all(|w| middle_open(g, w[0], w[1], w[2], &c, &anc_given)))
}
