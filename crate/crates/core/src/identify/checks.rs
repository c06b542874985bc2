//! Graphical identifiability checks. Every check is a set of d-separation
//! statements on a rewired influence diagram; a failing check carries the open
//! path that refutes it.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{path_is_open, Dag};
use crate::regimes::{indicator_name, influence_diagram, rewire, Parents, Regime};

/// The refutation of a failed check: `path` is open given `given` in `graph`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub condition: String,
    pub path: Vec<String>,
    pub given: Vec<String>,
    pub graph: Dag,
    pub note: Option<String>,
}

impl Witness {
    /// Re-verifies that the path is open in the stored graph.
    pub fn recheck(&self) -> bool {
        path_is_open(&self.graph, &self.path, &self.given).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl CheckOutcome {
    pub(crate) fn pass() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fail(w: Witness) -> Self {
        Self {
            holds: false,
            witness: Some(w),
        }
    }
}

/// `a ⊥⊥ b | given` in `graph`, with an open path on failure.
pub(crate) fn independence(
    graph: &Dag,
    a: &[String],
    b: &[String],
    given: &[String],
    condition: &str,
) -> Result<CheckOutcome> {
    if a.is_empty() || b.is_empty() || graph.d_separated(a, b, given)? {
        return Ok(CheckOutcome::pass());
    }
    let path = graph
        .open_path(b, a, given)?
        .expect("d-connected sets have an open path");
    Ok(CheckOutcome::fail(Witness {
        condition: condition.to_string(),
        path,
        given: given.to_vec(),
        graph: graph.clone(),
        note: None,
    }))
}

/// Every node of `nodes` is a non-descendant of each of `sources`. The
/// diagram gets an indicator on each source so a violation is witnessed by
/// the open directed path from that indicator.
pub(crate) fn nondescendants(g: &Dag, sources: &[&str], nodes: &[String], condition: &str) -> Result<CheckOutcome> {
    let considered: BTreeMap<String, Vec<Regime>> =
        sources.iter().map(|s| (s.to_string(), vec![Regime::Idle])).collect();
    let diagram = influence_diagram(g, &considered)?;
    for src in sources {
        for n in nodes {
            if n == src {
                return Err(Error::InvalidQuery(format!("`{n}` cannot appear in {condition}")));
            }
            if let Some(p) = g.directed_path(src, n)? {
                let mut path = vec![indicator_name(src)];
                path.extend(p);
                return Ok(CheckOutcome::fail(Witness {
                    condition: condition.to_string(),
                    path,
                    given: vec![],
                    graph: diagram,
                    note: Some(format!("`{n}` is a descendant of `{src}`")),
                }));
            }
        }
    }
    Ok(CheckOutcome::pass())
}

fn union(parts: &[&[String]]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in parts {
        for v in p.iter() {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

fn require_observed(g: &Dag, sets: &[&[String]]) -> Result<()> {
    for s in sets {
        for v in s.iter() {
            if g.node(v)?.latent {
                return Err(Error::LatentNode(v.clone()));
            }
        }
    }
    Ok(())
}

/// Back-door criterion for the effect of `x` on `y`: `c` contains no
/// descendant of `x` and `y ⊥⊥ σ_x | x, c` in the diagram with σ_x.
pub fn check_back_door(g: &Dag, x: &str, y: &str, c: &[String]) -> Result<CheckOutcome> {
    require_observed(g, &[c])?;
    if c.iter().any(|v| v == x || v == y) {
        return Err(Error::InvalidQuery(
            "the adjustment set may not contain treatment or response".into(),
        ));
    }
    let nd = nondescendants(
        g,
        &[x],
        c,
        "back-door: adjustment set contains a descendant of the treatment",
    )?;
    if !nd.holds {
        return Ok(nd);
    }
    let diagram = influence_diagram(
        g,
        &BTreeMap::from([(x.to_string(), vec![Regime::Idle, Regime::Atomic(0)])]),
    )?;
    let given = union(&[&[x.to_string()], c]);
    independence(
        &diagram,
        &[y.to_string()],
        &[indicator_name(x)],
        &given,
        "back-door: unblocked back-door path",
    )
}

/// Structural preconditions for a treatment sequence.
fn check_sequence(
    g: &Dag,
    targets: &[String],
    blocks: &[Vec<String>],
    regimes: &[Regime],
    y: &str,
) -> Result<CheckOutcome> {
    if targets.len() != blocks.len() || targets.len() != regimes.len() || targets.is_empty() {
        return Err(Error::InvalidQuery(
            "targets, regimes and blocks must have the same nonzero length".into(),
        ));
    }
    let mut seen: BTreeSet<&String> = BTreeSet::new();
    for v in targets.iter().chain(blocks.iter().flatten()) {
        g.node(v)?;
        if !seen.insert(v) || v == y {
            return Err(Error::OverlappingSets(v.clone()));
        }
    }
    g.node(y)?;
    let blocks_ref: Vec<&[String]> = blocks.iter().map(|b| b.as_slice()).collect();
    require_observed(g, &blocks_ref)?;

    // Conditioning sets of regimes must be available at decision time.
    for (k, r) in regimes.iter().enumerate() {
        if let Some(cond) = r.cond_set() {
            let past = union(&[&targets[..k], &blocks[..=k].concat()]);
            if let Some(c) = cond.iter().find(|c| !past.contains(c)) {
                return Err(Error::InvalidRegime(
                    targets[k].clone(),
                    format!("conditions on `{c}`, which is not observed before the decision"),
                ));
            }
        }
    }

    let considered: BTreeMap<String, Vec<Regime>> = targets
        .iter()
        .zip(regimes)
        .map(|(t, r)| (t.clone(), vec![Regime::Idle, r.clone()]))
        .collect();
    let diagram = influence_diagram(g, &considered)?;
    for k in 0..targets.len() {
        let earlier: Vec<String> = union(&[&targets[..k], &blocks[..=k].concat()]);
        for n in &earlier {
            if let Some(p) = diagram.directed_path(&targets[k], n)? {
                let mut path = vec![indicator_name(&targets[k])];
                path.extend(p);
                return Ok(CheckOutcome::fail(Witness {
                    condition: format!("sequence: `{n}` must not be a descendant of `{}`", targets[k]),
                    path,
                    given: vec![],
                    graph: diagram,
                    note: None,
                }));
            }
        }
    }
    Ok(CheckOutcome::pass())
}

/// Simple stability: for every k, L_k ⊥⊥ σ̄ | (L̄_{k-1}, X̄_{k-1}), and
/// Y ⊥⊥ σ̄ | (L̄_K, X̄_K), on the all-regimes diagram.
pub fn check_simple_stability(
    g: &Dag,
    targets: &[String],
    blocks: &[Vec<String>],
    regimes: &[Regime],
    y: &str,
) -> Result<CheckOutcome> {
    let pre = check_sequence(g, targets, blocks, regimes, y)?;
    if !pre.holds {
        return Ok(pre);
    }
    let considered: BTreeMap<String, Vec<Regime>> = targets
        .iter()
        .zip(regimes)
        .map(|(t, r)| (t.clone(), vec![Regime::Idle, r.clone()]))
        .collect();
    let diagram = influence_diagram(g, &considered)?;
    let sigmas: Vec<String> = targets.iter().map(|t| indicator_name(t)).collect();
    for k in 0..targets.len() {
        let given = union(&[&blocks[..k].concat(), &targets[..k]]);
        let out = independence(
            &diagram,
            &blocks[k],
            &sigmas,
            &given,
            &format!("simple stability: covariates L{}", k + 1),
        )?;
        if !out.holds {
            return Ok(out);
        }
    }
    let given = union(&[&blocks.concat(), targets]);
    independence(
        &diagram,
        &[y.to_string()],
        &sigmas,
        &given,
        "simple stability: response",
    )
}

/// The graphical part of the weaker sequential condition: for every k,
/// Y ⊥⊥ σ_k | (X̄_k, L̄_k) with earlier decisions idle and later decisions
/// following their regimes.
pub fn check_weak_condition(
    g: &Dag,
    targets: &[String],
    blocks: &[Vec<String>],
    regimes: &[Regime],
    y: &str,
) -> Result<CheckOutcome> {
    let pre = check_sequence(g, targets, blocks, regimes, y)?;
    if !pre.holds {
        return Ok(pre);
    }
    for k in 0..targets.len() {
        let mut spec: Vec<(String, Parents)> = Vec::new();
        let extra: Vec<String> = regimes[k].cond_set().map(|c| c.to_vec()).unwrap_or_default();
        spec.push((targets[k].clone(), Parents::Extend(extra)));
        let mut fixed: Vec<String> = Vec::new();
        for j in k + 1..targets.len() {
            let p = match regimes[j].cond_set() {
                None => Parents::Keep,
                Some(c) => Parents::Replace(c.to_vec()),
            };
            spec.push((targets[j].clone(), p));
            if matches!(regimes[j], Regime::Atomic(_)) {
                // Constant under its regime, so conditioning on it is free.
                fixed.push(targets[j].clone());
            }
        }
        let diagram = rewire(g, &spec, true)?;
        let given = union(&[&targets[..=k], &blocks[..=k].concat(), &fixed]);
        let out = independence(
            &diagram,
            &[y.to_string()],
            &[indicator_name(&targets[k])],
            &given,
            &format!("sequential condition for decision {} ({})", k + 1, targets[k]),
        )?;
        if !out.holds {
            return Ok(out);
        }
    }
    Ok(CheckOutcome::pass())
}

/// Whether the natural direct effect of `x` on `y` with respect to `z` is
/// defined for covariates `w`: W avoids X, Z and their descendants, and
/// Y ⊥⊥ σ_Z | (Z, W, X) once every arrow into X is cut.
pub fn check_nde_defined(g: &Dag, x: &str, z: &str, y: &str, w: &[String]) -> Result<CheckOutcome> {
    for v in w {
        g.node(v)?;
        if v == x || v == z || v == y {
            return Err(Error::InvalidW(format!("`{v}` cannot be part of W")));
        }
    }
    let nd = nondescendants(
        g,
        &[x, z],
        w,
        "natural effect: W contains a descendant of treatment or mediator",
    )?;
    if !nd.holds {
        return Ok(nd);
    }
    let diagram = rewire(
        g,
        &[
            (x.to_string(), Parents::Replace(vec![])),
            (z.to_string(), Parents::Extend(w.to_vec())),
        ],
        true,
    )?;
    let given = union(&[&[z.to_string(), x.to_string()], w]);
    independence(
        &diagram,
        &[y.to_string()],
        &[indicator_name(z)],
        &given,
        "natural effect: Y ⊥⊥ σ_Z | (Z, W, X; σ_X = s_x)",
    )
}

/// Back-door condition for the effect of `x` on `z` within strata of `w`:
/// Z ⊥⊥ σ_X | (X, W, S) with σ_Z idle.
pub fn check_zx_backdoor(g: &Dag, x: &str, z: &str, w: &[String], s: &[String]) -> Result<CheckOutcome> {
    let nd = nondescendants(
        g,
        &[x, z],
        s,
        "condition 1: S contains a descendant of treatment or mediator",
    )?;
    if !nd.holds {
        return Ok(nd);
    }
    let diagram = influence_diagram(
        g,
        &BTreeMap::from([(x.to_string(), vec![Regime::Idle, Regime::Atomic(0)])]),
    )?;
    let given = union(&[&[x.to_string()], w, s]);
    independence(
        &diagram,
        &[z.to_string()],
        &[indicator_name(x)],
        &given,
        "condition 5: Z ⊥⊥ σ_X | (X, W, S)",
    )
}

/// Role sets for observational identification of natural effects.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NdeRoles {
    pub w: Vec<String>,
    pub s: Vec<String>,
    pub l1: Vec<String>,
    pub l2: Vec<String>,
}

pub(crate) fn nde_cond1(g: &Dag, x: &str, z: &str, r: &NdeRoles) -> Result<CheckOutcome> {
    nondescendants(
        g,
        &[x, z],
        &union(&[&r.w, &r.s, &r.l1]),
        "condition 1: (W, S, L1) must be non-descendants of X and Z",
    )
}

pub(crate) fn nde_cond2(g: &Dag, z: &str, r: &NdeRoles) -> Result<CheckOutcome> {
    nondescendants(g, &[z], &r.l2, "condition 2: L2 must be a non-descendant of Z")
}

pub(crate) fn nde_cond3(g: &Dag, x: &str, z: &str, y: &str, r: &NdeRoles) -> Result<CheckOutcome> {
    let diagram = rewire(
        g,
        &[
            (x.to_string(), Parents::Keep),
            (z.to_string(), Parents::Replace(r.w.clone())),
        ],
        true,
    )?;
    let given = union(&[&[x.to_string()], &r.w, &r.l1]);
    independence(
        &diagram,
        &[y.to_string()],
        &[indicator_name(x)],
        &given,
        "condition 3: Y ⊥⊥ σ_X | (X, W, L1; σ_Z = d_W)",
    )
}

pub(crate) fn nde_cond4(g: &Dag, x: &str, z: &str, y: &str, r: &NdeRoles) -> Result<CheckOutcome> {
    let diagram = rewire(g, &[(z.to_string(), Parents::Extend(r.w.clone()))], true)?;
    let given = union(&[&[x.to_string(), z.to_string()], &r.l1, &r.l2]);
    independence(
        &diagram,
        &[y.to_string()],
        &[indicator_name(z)],
        &given,
        "condition 4: Y ⊥⊥ σ_Z | (X, Z, L1, L2)",
    )
}

/// All conditions for identifying p(y; σ_X = s_x, σ_Z = d_{W,x*}) from
/// observational data, checked in order; the first failure is returned.
pub fn check_nde_conditions(g: &Dag, x: &str, z: &str, y: &str, r: &NdeRoles) -> Result<CheckOutcome> {
    require_observed(g, &[&r.w, &r.s, &r.l1, &r.l2])?;
    for v in r.w.iter().chain(&r.s).chain(&r.l1).chain(&r.l2) {
        if v == x || v == z || v == y {
            return Err(Error::InvalidQuery(format!("`{v}` cannot be a covariate role")));
        }
    }
    if let Some(w) = r.w.iter().find(|w| !r.l1.contains(w) && !r.l2.contains(w)) {
        return Err(Error::InvalidQuery(format!(
            "W must be a subset of L1 ∪ L2; `{w}` is not"
        )));
    }
    if let Some(p) = g.directed_path(z, x)? {
        return Err(Error::InvalidQuery(format!(
            "treatment is a descendant of the mediator: {}",
            p.join(" -> ")
        )));
    }
    for out in [
        check_nde_defined(g, x, z, y, &r.w)?,
        nde_cond1(g, x, z, r)?,
        nde_cond2(g, z, r)?,
        nde_cond3(g, x, z, y, r)?,
        nde_cond4(g, x, z, y, r)?,
        check_zx_backdoor(g, x, z, &r.w, &r.s)?,
    ] {
        if !out.holds {
            return Ok(out);
        }
    }
    Ok(CheckOutcome::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn back_door_cases() {
        let g = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        assert!(check_back_door(&g, "X", "Y", &[]).unwrap().holds);

        let g = Dag::from_edges(&["U", "X", "Y"], &[("U", "X"), ("U", "Y"), ("X", "Y")]).unwrap();
        assert!(check_back_door(&g, "X", "Y", &v(&["U"])).unwrap().holds);
        let out = check_back_door(&g, "X", "Y", &[]).unwrap();
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert_eq!(w.path, ["sigma_X", "X", "U", "Y"]);
        assert!(w.recheck());

        let g = Dag::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")]).unwrap();
        let out = check_back_door(&g, "X", "Y", &v(&["M"])).unwrap();
        assert!(!out.holds);
        assert!(out.witness.unwrap().recheck());
    }

    #[test]
    fn sequential_graph_stability() {
        let g = g_seq_dag();
        let t = v(&["X", "Z"]);
        let regimes = [Regime::Atomic(1), Regime::Atomic(1)];
        let blocks = vec![vec![], v(&["V"])];
        assert!(check_simple_stability(&g, &t, &blocks, &regimes, "Y").unwrap().holds);
        assert!(check_weak_condition(&g, &t, &blocks, &regimes, "Y").unwrap().holds);

        let out = check_simple_stability(&g, &t, &[vec![], vec![]], &regimes, "Y").unwrap();
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert!(w.path.contains(&"V".to_string()));
        assert!(w.recheck());
    }

    #[test]
    fn natural_effect_definedness() {
        let out = check_nde_defined(&g_seq_dag(), "X", "Z", "Y", &[]).unwrap();
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert_eq!(w.path, ["sigma_Z", "Z", "V", "Y"]);
        assert!(w.recheck());
        assert!(check_nde_defined(&g_med_dag(), "X", "Z", "Y", &[]).unwrap().holds);

        let g = fig4_dag(false);
        assert!(check_nde_defined(&g, "X", "Z", "Y", &v(&["U2"])).unwrap().holds);
        assert!(check_nde_defined(&g, "X", "Z", "Y", &v(&["U1", "U2"])).unwrap().holds);
        assert!(!check_nde_defined(&g, "X", "Z", "Y", &[]).unwrap().holds);
        assert!(!check_nde_defined(&g, "X", "Z", "Y", &v(&["U1"])).unwrap().holds);
        let out = check_nde_defined(&g, "X", "Z", "Y", &v(&["V"])).unwrap();
        assert!(!out.holds && out.witness.unwrap().recheck());
    }

    #[test]
    fn fig4_observational_conditions() {
        let g = fig4_dag(false);
        let roles = NdeRoles {
            w: v(&["U2"]),
            s: v(&["U1"]),
            l1: v(&["U2"]),
            l2: vec![],
        };
        assert!(check_nde_conditions(&g, "X", "Z", "Y", &roles).unwrap().holds);
        let no_s = NdeRoles {
            s: vec![],
            ..roles.clone()
        };
        let out = check_nde_conditions(&g, "X", "Z", "Y", &no_s).unwrap();
        assert!(!out.holds);
        assert!(out.witness.as_ref().unwrap().condition.starts_with("condition 5"));
        assert!(out.witness.unwrap().recheck());

        let latent = fig4_dag(true);
        assert!(matches!(
            check_nde_conditions(&latent, "X", "Z", "Y", &roles),
            Err(Error::LatentNode(_))
        ));
    }
}
