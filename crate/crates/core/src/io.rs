//! JSON formats for models, queries, plans and results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::identify::{
    CausalQuery, Comparison, EffectKind, IdentificationResult, OracleResult, Roles, Sequence, Witness,
};
use crate::model::{flat_index, Cpt, Model, Table, Variable};
use crate::regimes::{Plan, Regime};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variables: Vec<VarFile>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cpts: Option<BTreeMap<String, CptFile>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarFile {
    name: String,
    card: usize,
    #[serde(default)]
    latent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptFile {
    parents: Vec<String>,
    table: Vec<Vec<f64>>,
}

fn parse_structure(f: &ModelFile) -> Result<(Dag, Vec<Variable>)> {
    let mut dag = Dag::new();
    let mut vars = Vec::new();
    for v in &f.variables {
        dag.add_chance(&v.name, v.latent)?;
        let mut var = Variable::new(&v.name, v.card, v.latent)?;
        if let Some(vals) = &v.values {
            var = var.with_values(vals.clone())?;
        }
        vars.push(var);
    }
    for (a, b) in &f.edges {
        dag.add_edge(a, b)?;
    }
    Ok((dag, vars))
}

/// Graph and variables; `cpts` may be absent.
pub fn dag_from_json(s: &str) -> Result<(Dag, Vec<Variable>)> {
    let f: ModelFile = serde_json::from_str(s)?;
    parse_structure(&f)
}

pub fn model_from_json(s: &str) -> Result<Model> {
    let f: ModelFile = serde_json::from_str(s)?;
    let (dag, vars) = parse_structure(&f)?;
    let cpts = f.cpts.ok_or_else(|| Error::Format("model file has no `cpts`".into()))?;
    let card = |n: &str| {
        vars.iter()
            .find(|v| v.name == n)
            .map(|v| v.card)
            .ok_or_else(|| Error::UnknownNode(n.to_string()))
    };
    let tables = cpts
        .into_iter()
        .map(|(name, c)| {
            let pc = c.parents.iter().map(|p| card(p)).collect::<Result<Vec<_>>>()?;
            Cpt::new(&name, card(&name)?, c.parents, pc, c.table)
        })
        .collect::<Result<Vec<_>>>()?;
    Model::new(dag, vars, tables)
}

/// Canonical form: variables in model order, sorted edges, tables keyed by
/// name, floats in shortest round-trip notation.
pub fn model_to_json(m: &Model) -> String {
    let f = ModelFile {
        variables: m
            .variables()
            .iter()
            .map(|v| VarFile {
                name: v.name.clone(),
                card: v.card,
                latent: v.latent,
                values: v.values.clone(),
            })
            .collect(),
        edges: m.dag().edges(),
        cpts: Some(
            m.cpts()
                .map(|c| {
                    (
                        c.target().to_string(),
                        CptFile {
                            parents: c.parents().to_vec(),
                            table: c.rows().map(|r| r.to_vec()).collect(),
                        },
                    )
                })
                .collect(),
        ),
    };
    let mut s = serde_json::to_string_pretty(&f).expect("model serializes");
    s.push('\n');
    s
}

fn str_list(v: &Value, what: &str) -> Result<Vec<String>> {
    v.as_array()
        .ok_or_else(|| Error::Format(format!("`{what}` must be a list of names")))?
        .iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Format(format!("`{what}` must be a list of names")))
        })
        .collect()
}

fn code(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| Error::Format(format!("`{what}` must be a nonnegative integer")))
}

fn card_of(vars: &[Variable], n: &str) -> Result<usize> {
    vars.iter()
        .find(|v| v.name == n)
        .map(|v| v.card)
        .ok_or_else(|| Error::UnknownNode(n.to_string()))
}

/// A regime for `target`. A conditional `map` is either a flat list of target
/// values in row order or a list of `[c_1, .., c_m, value]` entries.
pub fn regime_from_value(v: &Value, target: &str, vars: &[Variable]) -> Result<Regime> {
    let kind = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Format(format!("regime for `{target}` lacks a `type`")))?;
    let given = match v.get("given") {
        Some(g) => str_list(g, "given")?,
        None => vec![],
    };
    let cards = given.iter().map(|g| card_of(vars, g)).collect::<Result<Vec<_>>>()?;
    let rows: usize = cards.iter().product();
    let r = match kind {
        "idle" => Regime::Idle,
        "atomic" => Regime::Atomic(code(v.get("value").unwrap_or(&Value::Null), "value")?),
        "conditional" => {
            let map = v
                .get("map")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Format("conditional regime needs a `map`".into()))?;
            let decision = if map.iter().all(Value::is_array) {
                let mut d: Vec<Option<usize>> = vec![None; rows];
                for e in map {
                    let e = e.as_array().unwrap();
                    if e.len() != given.len() + 1 {
                        return Err(Error::InvalidRegime(
                            target.into(),
                            "map entry has the wrong length".into(),
                        ));
                    }
                    let a = e.iter().map(|x| code(x, "map")).collect::<Result<Vec<_>>>()?;
                    if a[..given.len()].iter().zip(&cards).any(|(x, c)| x >= c) {
                        return Err(Error::InvalidRegime(target.into(), "map entry out of range".into()));
                    }
                    let i = flat_index(&cards, &a[..given.len()]);
                    if d[i].replace(a[given.len()]).is_some() {
                        return Err(Error::InvalidRegime(target.into(), "map assigns a row twice".into()));
                    }
                }
                d.into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidRegime(target.into(), "decision map is not total".into()))?
            } else {
                map.iter().map(|x| code(x, "map")).collect::<Result<_>>()?
            };
            Regime::Conditional { given, decision }
        }
        "random" => {
            let table: Vec<Vec<f64>> = serde_json::from_value(
                v.get("table")
                    .cloned()
                    .ok_or_else(|| Error::Format("random regime needs a `table`".into()))?,
            )?;
            Regime::Random { given, table }
        }
        other => return Err(Error::Format(format!("unknown regime type `{other}`"))),
    };
    // Validate the shape now rather than at evaluation time.
    let var = vars
        .iter()
        .find(|x| x.name == target)
        .ok_or_else(|| Error::UnknownNode(target.to_string()))?;
    crate::regimes::regime_table(&r, var, &cards)?;
    Ok(r)
}

/// `{"X": {"type": "atomic", "value": 1}, ...}`
pub fn plan_from_json(s: &str, vars: &[Variable]) -> Result<Plan> {
    let v: Value = serde_json::from_str(s)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Format("a plan is an object from node names to regimes".into()))?;
    obj.iter()
        .map(|(k, r)| Ok((k.clone(), regime_from_value(r, k, vars)?)))
        .collect()
}

const QUERY_KEYS: &[&str] = &[
    "kind",
    "treatment",
    "response",
    "mediator",
    "x",
    "x_star",
    "z",
    "mediator_regime",
    "roles",
    "auto_search",
    "max_adjust_size",
    "sequence",
];

pub fn query_from_json(s: &str, vars: &[Variable]) -> Result<CausalQuery> {
    let v: Value = serde_json::from_str(s)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Format("a query is a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| !QUERY_KEYS.contains(&k.as_str())) {
        return Err(Error::Format(format!("unknown query field `{k}`")));
    }
    let text = |k: &str| obj.get(k).and_then(Value::as_str).map(str::to_string);
    let kind = EffectKind::parse(&text("kind").ok_or_else(|| Error::Format("query lacks `kind`".into()))?)?;
    let response = text("response").ok_or_else(|| Error::Format("query lacks `response`".into()))?;
    let treatment = match text("treatment") {
        Some(t) => t,
        None if kind == EffectKind::Seq => String::new(),
        None => return Err(Error::Format("query lacks `treatment`".into())),
    };
    let mut q = CausalQuery::new(kind, &treatment, &response);
    q.mediator = text("mediator");
    if let Some(x) = obj.get("x") {
        q.x = code(x, "x")?;
    }
    let explicit_star = obj.get("x_star").map(|x| code(x, "x_star")).transpose()?;
    if let Some(xs) = explicit_star {
        q.x_star = xs;
    }
    q.z = obj.get("z").map(|z| code(z, "z")).transpose()?;
    if let Some(a) = obj.get("auto_search") {
        q.auto_search = a
            .as_bool()
            .ok_or_else(|| Error::Format("`auto_search` must be a boolean".into()))?;
    }
    if let Some(m) = obj.get("max_adjust_size") {
        q.max_adjust_size = code(m, "max_adjust_size")?;
    }
    if let Some(r) = obj.get("roles") {
        let r = r
            .as_object()
            .ok_or_else(|| Error::Format("`roles` must be an object".into()))?;
        let mut roles = Roles::default();
        for (k, val) in r {
            let set = Some(str_list(val, k)?);
            match k.as_str() {
                "C" => roles.c = set,
                "W" => roles.w = set,
                "S" => roles.s = set,
                "L1" => roles.l1 = set,
                "L2" => roles.l2 = set,
                other => return Err(Error::Format(format!("unknown role `{other}`"))),
            }
        }
        q.roles = roles;
    }
    if let Some(r) = obj.get("mediator_regime") {
        let z = q
            .mediator
            .clone()
            .ok_or_else(|| Error::InvalidQuery("`mediator_regime` without a `mediator`".into()))?;
        if r.get("type").and_then(Value::as_str) == Some("natural") {
            let w = str_list(r.get("W").unwrap_or(&json!([])), "W")?;
            if q.roles.w.as_ref().is_some_and(|rw| *rw != w) {
                return Err(Error::InvalidQuery("natural regime W disagrees with roles.W".into()));
            }
            q.roles.w = Some(w);
            if let Some(b) = r.get("baseline") {
                let b = code(b, "baseline")?;
                match explicit_star {
                    Some(xs) if xs != b => {
                        return Err(Error::InvalidQuery(
                            "natural regime baseline disagrees with `x_star`".into(),
                        ))
                    }
                    _ => q.x_star = b,
                }
            }
        } else {
            q.mediator_regime = Some(regime_from_value(r, &z, vars)?);
        }
    }
    if let Some(sq) = obj.get("sequence") {
        let targets = str_list(sq.get("targets").unwrap_or(&Value::Null), "targets")?;
        let regs = sq
            .get("regimes")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Format("sequence needs `regimes`".into()))?;
        if regs.len() != targets.len() {
            return Err(Error::InvalidQuery("one regime per sequence target is required".into()));
        }
        let regimes = regs
            .iter()
            .zip(&targets)
            .map(|(r, t)| regime_from_value(r, t, vars))
            .collect::<Result<_>>()?;
        let blocks = match sq.get("blocks") {
            None | Some(Value::Null) => None,
            Some(b) => Some(
                b.as_array()
                    .ok_or_else(|| Error::Format("`blocks` must be a list of lists".into()))?
                    .iter()
                    .map(|x| str_list(x, "blocks"))
                    .collect::<Result<_>>()?,
            ),
        };
        q.sequence = Some(Sequence {
            targets,
            regimes,
            blocks,
        });
    }
    Ok(q)
}

pub fn table_to_json(t: &Table) -> Value {
    json!(t.values())
}

pub fn witness_to_json(w: &Witness) -> Value {
    json!({
        "condition": w.condition,
        "path": w.path,
        "given": w.given,
        "note": w.note,
    })
}

pub fn result_to_json(r: &IdentificationResult) -> Value {
    json!({
        "identified": r.identified(),
        "status": r.status.as_str(),
        "value": r.value,
        "distribution": r.distribution.as_ref().map(table_to_json),
        "formula": r.formula,
        "witness": r.witness.as_ref().map(witness_to_json),
        "roles": r.roles,
        "criterion": r.criterion,
        "arms": r.arms.iter().map(|(l, t)| json!({"label": l, "distribution": table_to_json(t)})).collect::<Vec<_>>(),
        "notes": r.notes,
    })
}

pub fn oracle_to_json(o: &OracleResult) -> Value {
    json!({
        "value": o.value,
        "distribution": table_to_json(&o.arms[0].1),
        "arms": o.arms.iter().map(|(l, t)| json!({"label": l, "distribution": table_to_json(t)})).collect::<Vec<_>>(),
        "W": o.w,
    })
}

pub fn comparison_to_json(c: &Comparison) -> Value {
    json!({
        "skipped": c.skipped(),
        "identified": result_to_json(&c.identified),
        "oracle": c.oracle.as_ref().map(oracle_to_json),
        "max_distribution_deviation": c.max_distribution_deviation,
        "effect_deviation": c.effect_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn model_round_trip_is_byte_identical() {
        for m in [fixtures::g_seq(1), fixtures::fig4(2, true)] {
            let s = model_to_json(&m);
            let back = model_from_json(&s).unwrap();
            assert_eq!(back, m);
            assert_eq!(model_to_json(&back), s);
        }
    }

    #[test]
    fn spec_example_model() {
        let s = r#"{"variables":[{"name":"X","card":2,"latent":false},{"name":"V","card":2,"latent":false}],
                    "edges":[["X","V"]],
                    "cpts":{"X":{"parents":[],"table":[[0.7,0.3]]},
                            "V":{"parents":["X"],"table":[[0.9,0.1],[0.2,0.8]]}}}"#;
        let m = model_from_json(s).unwrap();
        assert_eq!(m.cpt("V").unwrap().row(&[1]), &[0.2, 0.8]);
        assert!(model_from_json(r#"{"variables":[],"edges":[["A","B"]]}"#).is_err());
        assert!(dag_from_json(r#"{"variables":[{"name":"A","card":2}],"edges":[]}"#).is_ok());
    }

    #[test]
    fn query_parsing() {
        let m = fixtures::fig4(1, false);
        let q = query_from_json(
            r#"{"kind":"nde","treatment":"X","mediator":"Z","response":"Y","x":1,"x_star":0,
                "roles":{"W":["U2"],"S":["U1"],"L1":[],"L2":["U2"]},"auto_search":false}"#,
            m.variables(),
        )
        .unwrap();
        assert_eq!(q.kind, EffectKind::Nde);
        assert_eq!(q.roles.l2, Some(vec!["U2".to_string()]));
        assert!(!q.auto_search);

        let q = query_from_json(
            r#"{"kind":"sde","treatment":"X","mediator":"Z","response":"Y",
                "mediator_regime":{"type":"conditional","given":["V"],"map":[[0,1],[1,0]]}}"#,
            m.variables(),
        )
        .unwrap();
        assert_eq!(
            q.mediator_regime,
            Some(Regime::Conditional {
                given: vec!["V".into()],
                decision: vec![1, 0]
            })
        );
        let partial = r#"{"kind":"sde","treatment":"X","mediator":"Z","response":"Y",
                "mediator_regime":{"type":"conditional","given":["V"],"map":[[0,1]]}}"#;
        assert!(query_from_json(partial, m.variables()).is_err());

        let q = query_from_json(
            r#"{"kind":"nie","treatment":"X","mediator":"Z","response":"Y",
                "mediator_regime":{"type":"natural","W":["U2"],"baseline":0}}"#,
            m.variables(),
        )
        .unwrap();
        assert_eq!(q.roles.w, Some(vec!["U2".to_string()]));
        assert!(query_from_json(r#"{"kind":"nde","response":"Y"}"#, m.variables()).is_err());
        assert!(query_from_json(
            r#"{"kind":"ace","treatment":"X","response":"Y","bogus":1}"#,
            m.variables()
        )
        .is_err());
    }
}
