//! Identification formulas evaluated from observed tables only.

use crate::error::{Error, Result};
use crate::model::{expectation, ObservedDistribution, Table};
use crate::regimes::{regime_table, Regime};

use super::checks::{check_back_door, check_nde_conditions, check_simple_stability, check_weak_condition, NdeRoles};
use super::eval::{sum_product, Factor, Frame, Stage};

pub(crate) fn sym(name: &str) -> String {
    name.to_lowercase()
}

fn syms(names: &[String]) -> Vec<String> {
    names.iter().map(|n| sym(n)).collect()
}

pub(crate) fn term(target: &[String], given: &[String]) -> String {
    if given.is_empty() {
        format!("p({})", target.join(","))
    } else {
        format!("p({}|{})", target.join(","), given.join(","))
    }
}

fn dedup(parts: &[&[String]]) -> Vec<String> {
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

/// Evaluates the g-formula for the plan `targets[k] ~ regimes[k]` with
/// covariate blocks `blocks`, returning p(y; plan) and its factor list.
/// No identifiability check is made here.
pub(crate) fn eval_g_formula(
    obs: &ObservedDistribution,
    targets: &[String],
    regimes: &[Regime],
    blocks: &[Vec<String>],
    y: &str,
) -> Result<(Table, Vec<String>)> {
    let mut f = Frame::default();
    for (t, r) in targets.iter().zip(regimes) {
        if let Regime::Atomic(v) = r {
            f.fix(t, obs.card(t)?, *v)
                .map_err(|_| Error::InvalidRegime(t.clone(), format!("value {v} out of range")))?;
        }
    }
    let mut stages = Vec::new();
    let mut terms = Vec::new();
    for (k, (t, r)) in targets.iter().zip(regimes).enumerate() {
        let xs = &targets[..k];
        let ls = blocks[..k].concat();
        if !blocks[k].is_empty() {
            let slots = blocks[k]
                .iter()
                .map(|l| obs.card(l).map(|c| f.add(l, c)))
                .collect::<Result<_>>()?;
            let given = dedup(&[xs, &ls]);
            stages.push(Stage {
                vars: slots,
                factors: vec![Factor::cond(obs, &f, &blocks[k], &given)?],
            });
            terms.push(term(&syms(&blocks[k]), &syms(&given)));
        }
        let ls = blocks[..=k].concat();
        let var = obs.variable(t)?;
        match r {
            Regime::Atomic(_) => {}
            Regime::Idle => {
                let slot = f.add(t, var.card);
                let given = dedup(&[xs, &ls]);
                stages.push(Stage {
                    vars: vec![slot],
                    factors: vec![Factor::cond(obs, &f, std::slice::from_ref(t), &given)?],
                });
                terms.push(term(&[sym(t)], &syms(&given)));
            }
            Regime::Conditional { given, .. } | Regime::Random { given, .. } => {
                let cards = given.iter().map(|g| obs.card(g)).collect::<Result<Vec<_>>>()?;
                let table = regime_table(r, var, &cards)?.expect("non-idle regime");
                let slot = f.add(t, var.card);
                stages.push(Stage {
                    vars: vec![slot],
                    factors: vec![Factor::lookup(table, &f)?],
                });
                terms.push(match r {
                    Regime::Conditional { .. } => format!("δ({},a({}))", sym(t), syms(given).join(",")),
                    _ if given.is_empty() => format!("p̃({})", sym(t)),
                    _ => format!("p̃({}|{})", sym(t), syms(given).join(",")),
                });
            }
        }
    }
    let all = dedup(&[targets, &blocks.concat()]);
    let ys = f.add(y, obs.card(y)?);
    stages.push(Stage {
        vars: vec![ys],
        factors: vec![Factor::cond(obs, &f, &[y.to_string()], &all)?],
    });
    terms.insert(0, term(&[sym(y)], &syms(&all)));
    let t = sum_product(&f, &stages, &[y.to_string()])?;
    Ok((t, terms))
}

/// p(y; σ̄ = s̄) by the g-formula, provided simple stability or the graphical
/// part of the weaker sequential condition holds.
pub fn g_formula(
    obs: &ObservedDistribution,
    targets: &[String],
    regimes: &[Regime],
    blocks: &[Vec<String>],
    y: &str,
) -> Result<Table> {
    let g = obs.dag();
    if !check_simple_stability(g, targets, blocks, regimes, y)?.holds {
        let weak = check_weak_condition(g, targets, blocks, regimes, y)?;
        if let Some(w) = weak.witness {
            return Err(Error::NotIdentified(format!(
                "{}: open path {}",
                w.condition,
                w.path.join(" - ")
            )));
        }
    }
    eval_g_formula(obs, targets, regimes, blocks, y).map(|(t, _)| t)
}

/// Back-door adjustment Σ_c p(y|c,x)p(c), with its factor list.
pub fn back_door_distribution(
    obs: &ObservedDistribution,
    x: &str,
    y: &str,
    value: usize,
    c: &[String],
) -> Result<(Table, Vec<String>)> {
    eval_g_formula(obs, &[x.to_string()], &[Regime::Atomic(value)], &[c.to_vec()], y)
}

/// Average causal effect E(Y; s_x) − E(Y; s_x*) by adjustment for `c`.
pub fn ace(obs: &ObservedDistribution, x: &str, y: &str, xv: usize, xs: usize, c: &[String]) -> Result<f64> {
    let out = check_back_door(obs.dag(), x, y, c)?;
    if let Some(w) = out.witness {
        return Err(Error::NotIdentified(format!(
            "{}: open path {}",
            w.condition,
            w.path.join(" - ")
        )));
    }
    let vals = values_of(obs, y)?;
    let (a, _) = back_door_distribution(obs, x, y, xv, c)?;
    let (b, _) = back_door_distribution(obs, x, y, xs, c)?;
    Ok(expectation(&a, Some(&vals))? - expectation(&b, Some(&vals))?)
}

/// p(y; σ_X = d_C) = Σ_{x,c} p(y|c,x) p̃(x|c) p(c) for a random regime on `x`
/// conditioned on a back-door set C.
pub fn ace_random(obs: &ObservedDistribution, x: &str, y: &str, regime: &Regime) -> Result<Table> {
    let c = match regime {
        Regime::Random { given, .. } => given.clone(),
        _ => return Err(Error::InvalidRegime(x.into(), "expected a random regime".into())),
    };
    let out = check_back_door(obs.dag(), x, y, &c)?;
    if let Some(w) = out.witness {
        return Err(Error::NotIdentified(format!(
            "{}: open path {}",
            w.condition,
            w.path.join(" - ")
        )));
    }
    eval_g_formula(obs, &[x.to_string()], std::slice::from_ref(regime), &[c], y).map(|(t, _)| t)
}

pub(crate) fn values_of(obs: &ObservedDistribution, y: &str) -> Result<Vec<f64>> {
    let v = obs.variable(y)?;
    Ok((0..v.card).map(|k| v.value_of(k)).collect())
}

/// p(z | w; σ_X = s_x*) = Σ_{s'} p(z|w,s',x*) p(s'|w), S' = S \ W, as a table
/// over W followed by Z.
pub fn natural_mediator_table(
    obs: &ObservedDistribution,
    x: &str,
    z: &str,
    w: &[String],
    s: &[String],
    baseline: usize,
) -> Result<Table> {
    natural_mediator(obs, x, z, w, s, baseline, true).map(|(t, _)| t)
}

fn natural_mediator(
    obs: &ObservedDistribution,
    x: &str,
    z: &str,
    w: &[String],
    s: &[String],
    baseline: usize,
    star: bool,
) -> Result<(Table, Vec<String>)> {
    let s2: Vec<String> = s.iter().filter(|v| !w.contains(v)).cloned().collect();
    let mut f = Frame::default();
    let wslots = w
        .iter()
        .map(|v| obs.card(v).map(|c| f.add(v, c)))
        .collect::<Result<Vec<_>>>()?;
    let sslots = s2
        .iter()
        .map(|v| obs.card(v).map(|c| f.add(v, c)))
        .collect::<Result<Vec<_>>>()?;
    f.fix(x, obs.card(x)?, baseline)?;
    let zs = f.add(z, obs.card(z)?);
    let zgiven = dedup(&[w, &s2, &[x.to_string()]]);
    let mut stages = vec![Stage {
        vars: wslots,
        factors: vec![],
    }];
    let mut terms = Vec::new();
    if !s2.is_empty() {
        stages.push(Stage {
            vars: sslots,
            factors: vec![Factor::cond(obs, &f, &s2, w)?],
        });
    }
    stages.push(Stage {
        vars: vec![zs],
        factors: vec![Factor::cond(obs, &f, &[z.to_string()], &zgiven)?],
    });
    let mut zg = syms(&zgiven);
    if star {
        *zg.last_mut().unwrap() = format!("{}*", sym(x));
    }
    terms.push(term(&[sym(z)], &zg));
    if !s2.is_empty() {
        terms.push(term(&syms(&s2), &syms(w)));
    }
    let mut out = w.to_vec();
    out.push(z.to_string());
    Ok((sum_product(&f, &stages, &out)?, terms))
}

/// Evaluates p(y; σ_X = s_x, σ_Z = d_{W,x*}) as
/// Σ_{l1} p(l1) Σ_{l2} p(l2|x,l1) Σ_z q(z|w) p(y|l1,l2,z,x), with q the
/// natural mediator law at `baseline`. No identifiability check is made.
pub(crate) fn eval_natural(
    obs: &ObservedDistribution,
    x: &str,
    z: &str,
    y: &str,
    treat: usize,
    baseline: usize,
    roles: &NdeRoles,
) -> Result<(Table, Vec<String>)> {
    let (q, qterms) = natural_mediator(obs, x, z, &roles.w, &roles.s, baseline, baseline != treat)?;
    let l1 = dedup(&[&roles.l1]);
    let l2: Vec<String> = dedup(&[&roles.l2]).into_iter().filter(|v| !l1.contains(v)).collect();
    let xs = vec![x.to_string()];
    let mut f = Frame::default();
    let s1 = l1
        .iter()
        .map(|v| obs.card(v).map(|c| f.add(v, c)))
        .collect::<Result<Vec<_>>>()?;
    let s2 = l2
        .iter()
        .map(|v| obs.card(v).map(|c| f.add(v, c)))
        .collect::<Result<Vec<_>>>()?;
    f.fix(x, obs.card(x)?, treat)?;
    let zs = f.add(z, obs.card(z)?);
    let ys = f.add(y, obs.card(y)?);
    let ygiven = dedup(&[&l1, &l2, &[z.to_string()], &xs]);
    let l2given = dedup(&[&xs, &l1]);
    let mut stages = Vec::new();
    if !l1.is_empty() {
        stages.push(Stage {
            vars: s1,
            factors: vec![Factor::cond(obs, &f, &l1, &[])?],
        });
    }
    if !l2.is_empty() {
        stages.push(Stage {
            vars: s2,
            factors: vec![Factor::cond(obs, &f, &l2, &l2given)?],
        });
    }
    stages.push(Stage {
        vars: vec![zs],
        factors: vec![Factor::lookup(q, &f)?],
    });
    stages.push(Stage {
        vars: vec![ys],
        factors: vec![Factor::cond(obs, &f, &[y.to_string()], &ygiven)?],
    });
    let t = sum_product(&f, &stages, &[y.to_string()])?;

    let mut terms = vec![term(&[sym(y)], &syms(&ygiven))];
    terms.push(qterms[0].clone());
    if !l2.is_empty() {
        terms.push(term(&syms(&l2), &syms(&l2given)));
    }
    terms.extend(qterms.into_iter().skip(1));
    if !l1.is_empty() {
        terms.push(term(&syms(&l1), &[]));
    }
    Ok((t, terms))
}

/// Observational identification of p(y; σ_X = s_x, σ_Z = d_{W,x*}) under the
/// role assignment `roles`.
pub fn nde_distribution(
    obs: &ObservedDistribution,
    x: &str,
    z: &str,
    y: &str,
    treat: usize,
    baseline: usize,
    roles: &NdeRoles,
) -> Result<Table> {
    let out = check_nde_conditions(obs.dag(), x, z, y, roles)?;
    if let Some(w) = out.witness {
        return Err(Error::NotIdentified(format!(
            "{}: open path {}",
            w.condition,
            w.path.join(" - ")
        )));
    }
    eval_natural(obs, x, z, y, treat, baseline, roles).map(|(t, _)| t)
}

/// Recombines two randomized studies: Σ_{w,z} p(y|w,z; s_x, s_z) p(z|w; s_x*) p(w).
/// Scopes must be W++[Z,Y], W++[Z] and W with a common W order.
pub fn experimental_identify(p_y_given_wz: &Table, p_z_given_w: &Table, p_w: &Table) -> Result<Table> {
    let w = p_w.scope();
    let zs = p_z_given_w.scope();
    let ys = p_y_given_wz.scope();
    if zs.len() != w.len() + 1 || zs[..w.len()] != *w || ys.len() != w.len() + 2 || ys[..zs.len()] != *zs {
        return Err(Error::DimensionMismatch(format!(
            "expected scopes W+[Z,Y], W+[Z], W; got {ys:?}, {zs:?}, {w:?}"
        )));
    }
    let mut f = Frame::default();
    let mut slots = Vec::new();
    for (name, &card) in ys.iter().zip(p_y_given_wz.cards()) {
        slots.push(f.add(name, card));
    }
    if p_z_given_w.cards() != &p_y_given_wz.cards()[..zs.len()] || p_w.cards() != &p_y_given_wz.cards()[..w.len()] {
        return Err(Error::DimensionMismatch("cardinalities disagree across sources".into()));
    }
    let n = w.len();
    let stages = vec![
        Stage {
            vars: slots[..n].to_vec(),
            factors: vec![Factor::lookup(p_w.clone(), &f)?],
        },
        Stage {
            vars: vec![slots[n]],
            factors: vec![Factor::lookup(p_z_given_w.clone(), &f)?],
        },
        Stage {
            vars: vec![slots[n + 1]],
            factors: vec![Factor::lookup(p_y_given_wz.clone(), &f)?],
        },
    ];
    sum_product(&f, &stages, &ys[n + 1..])
}

/// Conditional table of `target` given `given`, scope given++[target].
pub fn conditional_table(obs: &ObservedDistribution, target: &str, given: &[String]) -> Result<Table> {
    let cards = given.iter().map(|g| obs.card(g)).collect::<Result<Vec<_>>>()?;
    let tc = obs.card(target)?;
    let mut values = Vec::new();
    for a in crate::model::Assignments::new(&cards) {
        let ev: Vec<(String, usize)> = given.iter().cloned().zip(a).collect();
        values.extend_from_slice(obs.conditional(&[target], &ev)?.values());
    }
    let mut scope = given.to_vec();
    scope.push(target.to_string());
    let mut all = cards;
    all.push(tc);
    Table::new(scope, all, values)
}

/// Outcome of the additivity check on controlled direct effects.
#[derive(Debug, Clone, PartialEq)]
pub struct NoInteraction {
    pub holds: bool,
    pub max_deviation: f64,
}

/// Whether CDE_z(x, x*) is the same for every z, over all pairs (x, x*).
/// `blocks` are the covariate blocks [L1, L2] for the plan (X, Z).
pub fn check_no_interaction(
    obs: &ObservedDistribution,
    x: &str,
    z: &str,
    y: &str,
    blocks: &[Vec<String>],
    tol: f64,
) -> Result<NoInteraction> {
    let xc = obs.card(x)?;
    let zc = obs.card(z)?;
    let vals = values_of(obs, y)?;
    let targets = [x.to_string(), z.to_string()];
    let mut means = vec![vec![0.0; zc]; xc];
    for (xv, row) in means.iter_mut().enumerate() {
        for (zv, m) in row.iter_mut().enumerate() {
            let t = g_formula(obs, &targets, &[Regime::Atomic(xv), Regime::Atomic(zv)], blocks, y)?;
            *m = expectation(&t, Some(&vals))?;
        }
    }
    let mut dev: f64 = 0.0;
    for a in 0..xc {
        for b in 0..xc {
            for z1 in 0..zc {
                for z2 in 0..zc {
                    let c1 = means[a][z1] - means[b][z1];
                    let c2 = means[a][z2] - means[b][z2];
                    dev = dev.max((c1 - c2).abs());
                }
            }
        }
    }
    Ok(NoInteraction {
        holds: dev <= tol,
        max_deviation: dev,
    })
}
