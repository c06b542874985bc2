//! Identification of intervention distributions and effect contrasts from
//! the observed distribution, with graphical checks and an oracle harness.

pub mod checks;
mod eval;
mod formulas;
mod oracle;
mod search;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeKind};
use crate::model::{expectation, ObservedDistribution, Table};
use crate::regimes::Regime;

pub use checks::{
    check_back_door, check_nde_conditions, check_nde_defined, check_simple_stability, check_weak_condition,
    check_zx_backdoor, CheckOutcome, NdeRoles, Witness,
};
pub use formulas::{
    ace, ace_random, back_door_distribution, check_no_interaction, conditional_table, experimental_identify, g_formula,
    natural_mediator_table, nde_distribution, NoInteraction,
};
pub use oracle::{compare_with_oracle, oracle, randomized_studies, study_tables, Comparison, OracleResult};

use checks::{nde_cond1, nde_cond2, nde_cond3, nde_cond4};
use formulas::{eval_g_formula, eval_natural, values_of};
use search::{labellings, subsets};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    Ace,
    Cde,
    Sde,
    Nde,
    Nie,
    Seq,
}

impl EffectKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ace" => Self::Ace,
            "cde" => Self::Cde,
            "sde" => Self::Sde,
            "nde" => Self::Nde,
            "nie" => Self::Nie,
            "seq" => Self::Seq,
            other => return Err(Error::InvalidQuery(format!("unknown effect kind `{other}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ace => "ace",
            Self::Cde => "cde",
            Self::Sde => "sde",
            Self::Nde => "nde",
            Self::Nie => "nie",
            Self::Seq => "seq",
        }
    }

    fn needs_mediator(&self) -> bool {
        matches!(self, Self::Cde | Self::Sde | Self::Nde | Self::Nie)
    }
}

/// Covariate role sets. `None` means "search" when auto-search is on and
/// "empty" otherwise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Roles {
    pub c: Option<Vec<String>>,
    pub w: Option<Vec<String>>,
    pub s: Option<Vec<String>>,
    pub l1: Option<Vec<String>>,
    pub l2: Option<Vec<String>>,
}

/// A sequence of decisions for `seq` queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub targets: Vec<String>,
    pub regimes: Vec<Regime>,
    pub blocks: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalQuery {
    pub kind: EffectKind,
    pub treatment: String,
    pub response: String,
    pub mediator: Option<String>,
    pub x: usize,
    pub x_star: usize,
    /// Mediator level for `cde`, unless given as an atomic mediator regime.
    pub z: Option<usize>,
    pub mediator_regime: Option<Regime>,
    pub roles: Roles,
    pub auto_search: bool,
    pub max_adjust_size: usize,
    pub sequence: Option<Sequence>,
}

impl CausalQuery {
    pub fn new(kind: EffectKind, treatment: &str, response: &str) -> Self {
        Self {
            kind,
            treatment: treatment.into(),
            response: response.into(),
            mediator: None,
            x: 1,
            x_star: 0,
            z: None,
            mediator_regime: None,
            roles: Roles::default(),
            auto_search: true,
            max_adjust_size: 4,
            sequence: None,
        }
    }

    pub fn with_mediator(mut self, z: &str) -> Self {
        self.mediator = Some(z.into());
        self
    }

    pub fn with_values(mut self, x: usize, x_star: usize) -> Self {
        self.x = x;
        self.x_star = x_star;
        self
    }

    fn mediator(&self) -> Result<&str> {
        self.mediator
            .as_deref()
            .ok_or_else(|| Error::InvalidQuery(format!("kind `{}` requires a mediator", self.kind.as_str())))
    }

    fn validate(&self, g: &Dag) -> Result<()> {
        let mut named = vec![self.response.as_str()];
        if self.kind != EffectKind::Seq {
            named.push(&self.treatment);
        }
        if self.kind.needs_mediator() {
            named.push(self.mediator()?);
        }
        for (i, n) in named.iter().enumerate() {
            if g.node(n)?.kind != NodeKind::Chance {
                return Err(Error::InvalidQuery(format!("`{n}` is not a chance node")));
            }
            if named[..i].contains(n) {
                return Err(Error::OverlappingSets(n.to_string()));
            }
        }
        if self.kind == EffectKind::Seq && self.sequence.is_none() {
            return Err(Error::InvalidQuery("kind `seq` requires a sequence".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Identified,
    NotIdentified,
    NotDefined,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Identified => "identified",
            Status::NotIdentified => "not_identified",
            Status::NotDefined => "not_defined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub status: Status,
    /// Contrast E(Y; arm 0) − E(Y; arm 1); for `seq`, E(Y; arm 0).
    pub value: Option<f64>,
    /// p(y; arm 0).
    pub distribution: Option<Table>,
    pub arms: Vec<(String, Table)>,
    pub formula: Vec<String>,
    pub witness: Option<Witness>,
    pub roles: BTreeMap<String, Vec<String>>,
    /// Which criterion licensed the formula.
    pub criterion: Option<String>,
    pub notes: Vec<String>,
}

impl IdentificationResult {
    pub fn identified(&self) -> bool {
        self.status == Status::Identified
    }

    fn failed(status: Status, witness: Witness, notes: Vec<String>) -> Self {
        Self {
            status,
            value: None,
            distribution: None,
            arms: vec![],
            formula: vec![],
            witness: Some(witness),
            roles: BTreeMap::new(),
            criterion: None,
            notes,
        }
    }

    fn success(
        arms: Vec<(String, Table)>,
        formula: Vec<String>,
        values: &[f64],
        roles: BTreeMap<String, Vec<String>>,
        criterion: &str,
        notes: Vec<String>,
    ) -> Result<Self> {
        let e0 = expectation(&arms[0].1, Some(values))?;
        let value = match arms.get(1) {
            Some((_, t)) => e0 - expectation(t, Some(values))?,
            None => e0,
        };
        Ok(Self {
            status: Status::Identified,
            value: Some(value),
            distribution: Some(arms[0].1.clone()),
            arms,
            formula,
            witness: None,
            roles,
            criterion: Some(criterion.into()),
            notes,
        })
    }
}

/// Labels of the regimes compared by a query, in contrast order.
pub(crate) fn arm_labels(q: &CausalQuery) -> Vec<String> {
    let (x, xs) = (q.x, q.x_star);
    match q.kind {
        EffectKind::Ace => vec![format!("s_x={x}"), format!("s_x={xs}")],
        EffectKind::Cde | EffectKind::Sde => {
            let m = match q.z {
                Some(z) if q.kind == EffectKind::Cde => format!("s_z={z}"),
                _ => "mediator regime".to_string(),
            };
            vec![format!("s_x={x}, {m}"), format!("s_x={xs}, {m}")]
        }
        EffectKind::Nde => vec![format!("s_x={x}, d_w(x={xs})"), format!("s_x={xs}, d_w(x={xs})")],
        EffectKind::Nie => vec![format!("s_x={x}, d_w(x={x})"), format!("s_x={x}, d_w(x={xs})")],
        EffectKind::Seq => vec!["plan".to_string()],
    }
}

fn strip_latent(g: &Dag, set: &[String], role: &str, notes: &mut Vec<String>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for v in set {
        if g.node(v)?.latent {
            notes.push(format!("latent `{v}` removed from {role}"));
        } else {
            out.push(v.clone());
        }
    }
    Ok(out)
}

fn observed_pool(g: &Dag, exclude: &[&str]) -> Vec<String> {
    g.observed_chance_nodes()
        .into_iter()
        .filter(|n| !exclude.contains(&n.as_str()))
        .collect()
}

/// Decides identifiability of `q` and, when identified, evaluates it from the
/// observed distribution.
pub fn identify(obs: &ObservedDistribution, q: &CausalQuery) -> Result<IdentificationResult> {
    q.validate(obs.dag())?;
    match q.kind {
        EffectKind::Ace => identify_ace(obs, q),
        EffectKind::Cde | EffectKind::Sde => identify_controlled(obs, q),
        EffectKind::Seq => identify_seq(obs, q),
        EffectKind::Nde | EffectKind::Nie => identify_natural(obs, q),
    }
}

fn identify_ace(obs: &ObservedDistribution, q: &CausalQuery) -> Result<IdentificationResult> {
    let g = obs.dag();
    let (x, y) = (q.treatment.as_str(), q.response.as_str());
    let mut notes = Vec::new();
    let fixed = match &q.roles.c {
        Some(c) => Some(strip_latent(g, c, "C", &mut notes)?),
        None if !q.auto_search => Some(vec![]),
        None => None,
    };
    let candidates = match &fixed {
        Some(c) => vec![c.clone()],
        None => {
            let de = g.descendants(x)?;
            let pool: Vec<String> = observed_pool(g, &[x, y])
                .into_iter()
                .filter(|v| !de.contains(v))
                .collect();
            subsets(&pool, q.max_adjust_size)
        }
    };
    for c in &candidates {
        if check_back_door(g, x, y, c)?.holds {
            let labels = arm_labels(q);
            let (a, formula) = back_door_distribution(obs, x, y, q.x, c)?;
            let (b, _) = back_door_distribution(obs, x, y, q.x_star, c)?;
            let roles = BTreeMap::from([("C".to_string(), c.clone())]);
            return IdentificationResult::success(
                vec![(labels[0].clone(), a), (labels[1].clone(), b)],
                formula,
                &values_of(obs, y)?,
                roles,
                "back-door",
                notes,
            );
        }
    }
    let base = fixed.unwrap_or_default();
    let w = check_back_door(g, x, y, &base)?
        .witness
        .ok_or_else(|| Error::NotIdentified("no admissible adjustment set within the size limit".into()))?;
    Ok(IdentificationResult::failed(Status::NotIdentified, w, notes))
}

struct BlockProblem<'a> {
    targets: &'a [String],
    regimes: &'a [Regime],
    y: &'a str,
    fixed: Vec<Option<Vec<String>>>,
}

enum BlockSearch {
    Found(Vec<Vec<String>>, &'static str),
    Failed(Witness),
}

/// Whether every regime's conditioning variables are decided before it acts.
fn inputs_available(p: &BlockProblem, blocks: &[Vec<String>]) -> bool {
    p.regimes.iter().enumerate().all(|(k, r)| {
        r.cond_set()
            .unwrap_or(&[])
            .iter()
            .all(|c| p.targets[..k].contains(c) || blocks[..=k].iter().any(|b| b.contains(c)))
    })
}

fn accept(g: &Dag, p: &BlockProblem, blocks: &[Vec<String>]) -> Result<Option<&'static str>> {
    if check_simple_stability(g, p.targets, blocks, p.regimes, p.y)?.holds {
        return Ok(Some("simple stability"));
    }
    if check_weak_condition(g, p.targets, blocks, p.regimes, p.y)?.holds {
        return Ok(Some("graphical-necessary"));
    }
    Ok(None)
}

fn search_blocks(g: &Dag, p: &BlockProblem, max: usize) -> Result<BlockSearch> {
    let k = p.targets.len();
    let free: Vec<usize> = (0..k).filter(|&i| p.fixed[i].is_none()).collect();
    let taken: BTreeSet<String> = p.fixed.iter().flatten().flatten().cloned().collect();
    let mut exclude: Vec<&str> = p.targets.iter().map(|s| s.as_str()).collect();
    exclude.push(p.y);
    let pool: Vec<String> = observed_pool(g, &exclude)
        .into_iter()
        .filter(|v| !taken.contains(v))
        .collect();
    let desc: Vec<BTreeSet<String>> = p.targets.iter().map(|t| g.descendants(t)).collect::<Result<_>>()?;
    let base: Vec<Vec<String>> = p.fixed.iter().map(|b| b.clone().unwrap_or_default()).collect();

    let sets = if free.is_empty() {
        vec![vec![]]
    } else {
        subsets(&pool, max)
    };
    for u in &sets {
        'lab: for lab in labellings(u.len(), free.len()) {
            let mut blocks = base.clone();
            for (v, &l) in u.iter().zip(&lab) {
                let b = free[l];
                // Covariates in block b must precede every decision from b on.
                if desc[b..].iter().any(|d| d.contains(v)) {
                    continue 'lab;
                }
                blocks[b].push(v.clone());
            }
            if !inputs_available(p, &blocks) {
                continue;
            }
            if let Some(c) = accept(g, p, &blocks)? {
                return Ok(BlockSearch::Found(blocks, c));
            }
        }
    }

    // Failure: report against the smallest candidate that feeds every regime.
    let mut blocks = base;
    for (i, r) in p.regimes.iter().enumerate() {
        for c in r.cond_set().unwrap_or(&[]) {
            if p.targets[..i].contains(c) || blocks[..=i].iter().any(|b| b.contains(c)) {
                continue;
            }
            if let Some(&b) = free
                .iter()
                .find(|&&b| b <= i && !desc[b..].iter().any(|d| d.contains(c)))
            {
                blocks[b].push(c.clone());
            }
        }
    }
    if !inputs_available(p, &blocks) {
        return Err(Error::InvalidQuery(
            "regime conditioning sets cannot be placed in any covariate block".into(),
        ));
    }
    let weak = check_weak_condition(g, p.targets, &blocks, p.regimes, p.y)?;
    let out = match weak.witness {
        Some(w) => w,
        None => check_simple_stability(g, p.targets, &blocks, p.regimes, p.y)?
            .witness
            .ok_or_else(|| Error::NotIdentified("no admissible covariate blocks within the size limit".into()))?,
    };
    Ok(BlockSearch::Failed(out))
}

fn block_roles(blocks: &[Vec<String>]) -> BTreeMap<String, Vec<String>> {
    blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (format!("L{}", i + 1), b.clone()))
        .collect()
}

/// The mediator regime of a `cde` or `sde` query.
pub(crate) fn controlled_regime(q: &CausalQuery) -> Result<Regime> {
    Ok(match (q.kind, &q.mediator_regime, q.z) {
        (EffectKind::Cde, Some(Regime::Atomic(v)), _) => Regime::Atomic(*v),
        (EffectKind::Cde, None, Some(v)) => Regime::Atomic(v),
        (EffectKind::Cde, _, _) => {
            return Err(Error::InvalidQuery(
                "cde requires a mediator level `z` or an atomic mediator regime".into(),
            ))
        }
        (_, Some(r @ (Regime::Random { .. } | Regime::Conditional { .. })), _) => r.clone(),
        _ => {
            return Err(Error::InvalidQuery(
                "sde requires a random or conditional mediator regime".into(),
            ))
        }
    })
}

fn identify_controlled(obs: &ObservedDistribution, q: &CausalQuery) -> Result<IdentificationResult> {
    let g = obs.dag();
    let (x, y, z) = (q.treatment.as_str(), q.response.as_str(), q.mediator()?);
    let med = controlled_regime(q)?;
    if let Some(w) = med.cond_set() {
        let de = g.descendants_of_set([x, z])?;
        for v in w {
            if v == x || v == z || de.contains(v) {
                return Err(Error::InvalidW(format!(
                    "`{v}` must not be {x} or {z} or one of their descendants"
                )));
            }
            if g.node(v)?.latent {
                return Err(Error::LatentNode(v.clone()));
            }
        }
    }
    let mut notes = Vec::new();
    let mut fixed = Vec::new();
    for (name, r) in [("L1", &q.roles.l1), ("L2", &q.roles.l2)] {
        fixed.push(match r {
            Some(b) => Some(strip_latent(g, b, name, &mut notes)?),
            None if !q.auto_search => Some(vec![]),
            None => None,
        });
    }
    let targets = [x.to_string(), z.to_string()];
    let regimes = [Regime::Atomic(q.x), med.clone()];
    let p = BlockProblem {
        targets: &targets,
        regimes: &regimes,
        y,
        fixed,
    };
    match search_blocks(g, &p, q.max_adjust_size)? {
        BlockSearch::Failed(w) => Ok(IdentificationResult::failed(Status::NotIdentified, w, notes)),
        BlockSearch::Found(blocks, criterion) => {
            let labels = arm_labels(q);
            let (a, formula) = eval_g_formula(obs, &targets, &regimes, &blocks, y)?;
            let (b, _) = eval_g_formula(obs, &targets, &[Regime::Atomic(q.x_star), med.clone()], &blocks, y)?;
            let mut roles = block_roles(&blocks);
            if let Some(w) = med.cond_set().filter(|w| !w.is_empty()) {
                roles.insert("W".into(), w.to_vec());
            }
            IdentificationResult::success(
                vec![(labels[0].clone(), a), (labels[1].clone(), b)],
                formula,
                &values_of(obs, y)?,
                roles,
                criterion,
                notes,
            )
        }
    }
}

fn identify_seq(obs: &ObservedDistribution, q: &CausalQuery) -> Result<IdentificationResult> {
    let g = obs.dag();
    let seq = q.sequence.as_ref().expect("validated");
    let y = q.response.as_str();
    let mut notes = Vec::new();
    let fixed: Vec<Option<Vec<String>>> = match &seq.blocks {
        Some(bs) => {
            if bs.len() != seq.targets.len() {
                return Err(Error::InvalidQuery(
                    "one covariate block per decision is required".into(),
                ));
            }
            bs.iter()
                .enumerate()
                .map(|(i, b)| strip_latent(g, b, &format!("L{}", i + 1), &mut notes).map(Some))
                .collect::<Result<_>>()?
        }
        None if !q.auto_search => vec![Some(vec![]); seq.targets.len()],
        None => vec![None; seq.targets.len()],
    };
    if seq.regimes.len() != seq.targets.len() {
        return Err(Error::InvalidQuery("one regime per decision is required".into()));
    }
    let p = BlockProblem {
        targets: &seq.targets,
        regimes: &seq.regimes,
        y,
        fixed,
    };
    match search_blocks(g, &p, q.max_adjust_size)? {
        BlockSearch::Failed(w) => Ok(IdentificationResult::failed(Status::NotIdentified, w, notes)),
        BlockSearch::Found(blocks, criterion) => {
            let (t, formula) = eval_g_formula(obs, &seq.targets, &seq.regimes, &blocks, y)?;
            IdentificationResult::success(
                vec![("plan".into(), t)],
                formula,
                &values_of(obs, y)?,
                block_roles(&blocks),
                criterion,
                notes,
            )
        }
    }
}

/// Candidate W sets for natural effects, latent nodes included.
pub(crate) fn w_candidates(g: &Dag, x: &str, z: &str, y: &str, max: usize) -> Result<Vec<Vec<String>>> {
    let de = g.descendants_of_set([x, z])?;
    let pool: Vec<String> = g
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Chance)
        .map(|n| n.name.clone())
        .filter(|n| n != x && n != z && n != y && !de.contains(n))
        .collect();
    Ok(subsets(&pool, max))
}

fn natural_w(q: &CausalQuery) -> Option<Vec<String>> {
    q.roles.w.clone()
}

fn identify_natural(obs: &ObservedDistribution, q: &CausalQuery) -> Result<IdentificationResult> {
    let g = obs.dag();
    let (x, y, z) = (q.treatment.as_str(), q.response.as_str(), q.mediator()?);
    if let Some(p) = g.directed_path(z, x)? {
        return Err(Error::InvalidQuery(format!(
            "treatment is a descendant of the mediator: {}",
            p.join(" -> ")
        )));
    }
    let mut notes = Vec::new();
    let fixed_s = q
        .roles
        .s
        .as_ref()
        .map(|s| strip_latent(g, s, "S", &mut notes))
        .transpose()?;
    let fixed_l1 = q
        .roles
        .l1
        .as_ref()
        .map(|s| strip_latent(g, s, "L1", &mut notes))
        .transpose()?;
    let fixed_l2 = q
        .roles
        .l2
        .as_ref()
        .map(|s| strip_latent(g, s, "L2", &mut notes))
        .transpose()?;
    let (fixed_s, fixed_l1, fixed_l2) = if q.auto_search {
        (fixed_s, fixed_l1, fixed_l2)
    } else {
        (
            Some(fixed_s.unwrap_or_default()),
            Some(fixed_l1.unwrap_or_default()),
            Some(fixed_l2.unwrap_or_default()),
        )
    };

    let w_list = match natural_w(q) {
        Some(w) => vec![w],
        None if q.auto_search => w_candidates(g, x, z, y, q.max_adjust_size)?,
        None => vec![vec![]],
    };
    let de_xz = g.descendants_of_set([x, z])?;
    let de_z = g.descendants(z)?;
    let obs_pool = observed_pool(g, &[x, y, z]);
    let mut first_defined: Option<Vec<String>> = None;
    let mut first_observed: Option<(Vec<String>, Vec<String>)> = None;

    for w in &w_list {
        for v in w {
            if v == x || v == z || v == y {
                return Err(Error::InvalidW(format!("`{v}` cannot be part of W")));
            }
        }
        if !check_nde_defined(g, x, z, y, w)?.holds {
            continue;
        }
        first_defined.get_or_insert_with(|| w.clone());
        if w.iter().any(|v| g.is_latent(v)) {
            continue;
        }
        // S: back-door set for the treatment-mediator relation within W strata.
        let s_list = match &fixed_s {
            Some(s) => vec![s.clone()],
            None => {
                let pool: Vec<String> = obs_pool
                    .iter()
                    .filter(|v| !w.contains(v) && !de_xz.contains(*v))
                    .cloned()
                    .collect();
                subsets(&pool, q.max_adjust_size)
            }
        };
        let mut s_found = None;
        for s in &s_list {
            if check_zx_backdoor(g, x, z, w, s)?.holds {
                s_found = Some(s.clone());
                break;
            }
        }
        let s_base = s_found.clone().unwrap_or_else(|| s_list[0].clone());
        first_observed.get_or_insert_with(|| (w.clone(), s_base.clone()));
        let Some(s) = s_found else { continue };
        if let Some((l1, l2)) = search_l(
            g,
            x,
            z,
            y,
            w,
            &s,
            &fixed_l1,
            &fixed_l2,
            &obs_pool,
            &de_xz,
            &de_z,
            q.max_adjust_size,
        )? {
            let roles = NdeRoles {
                w: w.clone(),
                s,
                l1,
                l2,
            };
            if !check_nde_conditions(g, x, z, y, &roles)?.holds {
                continue;
            }
            let labels = arm_labels(q);
            let pairs = match q.kind {
                EffectKind::Nde => [(q.x, q.x_star), (q.x_star, q.x_star)],
                _ => [(q.x, q.x), (q.x, q.x_star)],
            };
            let (a, formula) = eval_natural(obs, x, z, y, pairs[0].0, pairs[0].1, &roles)?;
            let (b, _) = eval_natural(obs, x, z, y, pairs[1].0, pairs[1].1, &roles)?;
            let role_map = BTreeMap::from([
                ("W".to_string(), roles.w.clone()),
                ("S".to_string(), roles.s.clone()),
                ("L1".to_string(), roles.l1.clone()),
                ("L2".to_string(), roles.l2.clone()),
            ]);
            return IdentificationResult::success(
                vec![(labels[0].clone(), a), (labels[1].clone(), b)],
                formula,
                &values_of(obs, y)?,
                role_map,
                "natural effect conditions",
                notes,
            );
        }
    }

    // Failure reporting.
    let Some(defined_w) = first_defined else {
        let w0 = w_list.first().cloned().unwrap_or_default();
        let w0 = if q.auto_search && natural_w(q).is_none() {
            vec![]
        } else {
            w0
        };
        let wit = check_nde_defined(g, x, z, y, &w0)?
            .witness
            .expect("no W passed the definedness check");
        return Ok(IdentificationResult::failed(Status::NotDefined, wit, notes));
    };
    let (w, s) = match first_observed {
        Some(ws) => ws,
        None => {
            let w = strip_latent(g, &defined_w, "W", &mut notes)?;
            (w, fixed_s.clone().unwrap_or_default())
        }
    };
    let mut l1 = fixed_l1.clone().unwrap_or_default();
    let l2 = fixed_l2.clone().unwrap_or_default();
    for v in &w {
        if !l1.contains(v) && !l2.contains(v) {
            l1.push(v.clone());
        }
    }
    let base = NdeRoles { w, s, l1, l2 };
    let wit = match check_nde_conditions(g, x, z, y, &base)?.witness {
        Some(wit) => wit,
        None => {
            // Only the latent part of W is in the way.
            let lat: Vec<String> = defined_w.iter().filter(|v| g.is_latent(v)).cloned().collect();
            Witness {
                condition: "W must be observed".into(),
                path: lat[..1].to_vec(),
                given: vec![],
                graph: g.clone(),
                note: Some(format!("latent members of W: {}", lat.join(", "))),
            }
        }
    };
    Ok(IdentificationResult::failed(Status::NotIdentified, wit, notes))
}

#[allow(clippy::too_many_arguments)]
fn search_l(
    g: &Dag,
    x: &str,
    z: &str,
    y: &str,
    w: &[String],
    s: &[String],
    fixed_l1: &Option<Vec<String>>,
    fixed_l2: &Option<Vec<String>>,
    obs_pool: &[String],
    de_xz: &BTreeSet<String>,
    de_z: &BTreeSet<String>,
    max: usize,
) -> Result<Option<(Vec<String>, Vec<String>)>> {
    let free: Vec<usize> = [fixed_l1.is_none(), fixed_l2.is_none()]
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(i, _)| i)
        .collect();
    let base = [
        fixed_l1.clone().unwrap_or_default(),
        fixed_l2.clone().unwrap_or_default(),
    ];
    let missing: Vec<String> = w
        .iter()
        .filter(|v| !base[0].contains(v) && !base[1].contains(v))
        .cloned()
        .collect();
    if !missing.is_empty() && free.is_empty() {
        return Err(Error::InvalidQuery("W must be a subset of L1 ∪ L2".into()));
    }
    let extra_pool: Vec<String> = if free.is_empty() {
        vec![]
    } else {
        obs_pool
            .iter()
            .filter(|v| !w.contains(v) && !base[0].contains(v) && !base[1].contains(v) && !de_z.contains(*v))
            .cloned()
            .collect()
    };
    let roles_of = |l: &[Vec<String>; 2]| NdeRoles {
        w: w.to_vec(),
        s: s.to_vec(),
        l1: l[0].clone(),
        l2: l[1].clone(),
    };
    for e in subsets(&extra_pool, max) {
        let items: Vec<&String> = missing.iter().chain(&e).collect();
        'lab: for lab in labellings(items.len(), free.len()) {
            let mut l = base.clone();
            for (v, &k) in items.iter().zip(&lab) {
                let b = free[k];
                if b == 0 && de_xz.contains(*v) {
                    continue 'lab;
                }
                l[b].push((*v).clone());
            }
            let r = roles_of(&l);
            if nde_cond1(g, x, z, &r)?.holds
                && nde_cond2(g, z, &r)?.holds
                && nde_cond3(g, x, z, y, &r)?.holds
                && nde_cond4(g, x, z, y, &r)?.holds
            {
                return Ok(Some((l[0].clone(), l[1].clone())));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ace_auto_search_finds_confounder() {
        let dag = Dag::from_edges(&["U", "X", "Y"], &[("U", "X"), ("U", "Y"), ("X", "Y")]).unwrap();
        let m = fixtures::random_cpts(&dag, 1);
        let obs = ObservedDistribution::from_model(&m);
        let r = identify(&obs, &CausalQuery::new(EffectKind::Ace, "X", "Y")).unwrap();
        assert!(r.identified());
        assert_eq!(r.roles["C"], v(&["U"]));
        assert_eq!(r.formula, ["p(y|x,u)", "p(u)"]);
    }

    #[test]
    fn latent_confounder_blocks_ace() {
        let mut dag = Dag::new();
        dag.add_chance("U", true).unwrap();
        dag.add_chance("X", false).unwrap();
        dag.add_chance("Y", false).unwrap();
        for (a, b) in [("U", "X"), ("U", "Y"), ("X", "Y")] {
            dag.add_edge(a, b).unwrap();
        }
        let m = fixtures::random_cpts(&dag, 1);
        let obs = ObservedDistribution::from_model(&m);
        let mut q = CausalQuery::new(EffectKind::Ace, "X", "Y");
        q.roles.c = Some(v(&["U"]));
        let r = identify(&obs, &q).unwrap();
        assert_eq!(r.status, Status::NotIdentified);
        assert!(r.witness.unwrap().recheck());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn natural_effect_verdicts() {
        let obs = ObservedDistribution::from_model(&fixtures::g_seq(2));
        let mut q = CausalQuery::new(EffectKind::Nde, "X", "Y").with_mediator("Z");
        q.roles.w = Some(vec![]);
        let r = identify(&obs, &q).unwrap();
        assert_eq!(r.status, Status::NotDefined);
        assert!(r.witness.unwrap().recheck());

        let obs = ObservedDistribution::from_model(&fixtures::g_med(2));
        let r = identify(&obs, &q).unwrap();
        assert!(r.identified());
        assert_eq!(r.formula, ["p(y|z,x)", "p(z|x*)"]);
    }

    #[test]
    fn missing_mediator_is_an_error() {
        let obs = ObservedDistribution::from_model(&fixtures::g_med(2));
        let q = CausalQuery::new(EffectKind::Nde, "X", "Y");
        assert!(matches!(identify(&obs, &q), Err(Error::InvalidQuery(_))));
    }
}
