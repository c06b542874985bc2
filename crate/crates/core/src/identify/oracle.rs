//! Ground truth by truncated factorization of the full model, and the
//! comparison of identified answers against it.

use crate::error::{Error, Result};
use crate::model::{expectation, Model, ObservedDistribution, Table};
use crate::regimes::{natural_regime, NaturalRegimeSpec, NaturalSource, Plan, Regime};

use super::checks::check_nde_defined;
use super::formulas::conditional_table;
use super::{arm_labels, controlled_regime, identify, w_candidates, CausalQuery, EffectKind, IdentificationResult};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub arms: Vec<(String, Table)>,
    /// Covariates of the natural regime, for `nde` and `nie`.
    pub w: Option<Vec<String>>,
}

fn natural(m: &Model, x: &str, z: &str, w: &[String], baseline: usize) -> Result<Regime> {
    let spec = NaturalRegimeSpec {
        treatment: x.into(),
        target: z.into(),
        w: w.to_vec(),
        baseline,
    };
    natural_regime(&spec, NaturalSource::Oracle(m))
}

/// The query's regimes applied to the full model. For natural effects W is
/// `w_hint`, else the query's W, else the first W (latent nodes allowed) for
/// which the effect is defined.
pub fn oracle(m: &Model, q: &CausalQuery, w_hint: Option<&[String]>) -> Result<OracleResult> {
    let g = m.dag();
    q.validate(g)?;
    let x = q.treatment.clone();
    let y = q.response.as_str();
    let labels = arm_labels(q);
    let mut w_used = None;
    let plans: Vec<Plan> = match q.kind {
        EffectKind::Ace => vec![
            Plan::from([(x.clone(), Regime::Atomic(q.x))]),
            Plan::from([(x.clone(), Regime::Atomic(q.x_star))]),
        ],
        EffectKind::Cde | EffectKind::Sde => {
            let z = q.mediator()?.to_string();
            let med = controlled_regime(q)?;
            vec![
                Plan::from([(x.clone(), Regime::Atomic(q.x)), (z.clone(), med.clone())]),
                Plan::from([(x.clone(), Regime::Atomic(q.x_star)), (z, med)]),
            ]
        }
        EffectKind::Seq => {
            let seq = q.sequence.as_ref().expect("validated");
            vec![seq.targets.iter().cloned().zip(seq.regimes.iter().cloned()).collect()]
        }
        EffectKind::Nde | EffectKind::Nie => {
            let z = q.mediator()?;
            let w = match w_hint.map(|w| w.to_vec()).or_else(|| q.roles.w.clone()) {
                Some(w) => w,
                None => {
                    let mut found = None;
                    for w in w_candidates(g, &x, z, y, q.max_adjust_size)? {
                        if check_nde_defined(g, &x, z, y, &w)?.holds {
                            found = Some(w);
                            break;
                        }
                    }
                    found.ok_or_else(|| {
                        Error::NotDefined(format!(
                            "no covariate set W makes the natural effect of {x} via {z} defined"
                        ))
                    })?
                }
            };
            let pairs = match q.kind {
                EffectKind::Nde => [(q.x, q.x_star), (q.x_star, q.x_star)],
                _ => [(q.x, q.x), (q.x, q.x_star)],
            };
            let plans = pairs
                .iter()
                .map(|&(t, b)| {
                    Ok(Plan::from([
                        (x.clone(), Regime::Atomic(t)),
                        (z.to_string(), natural(m, &x, z, &w, b)?),
                    ]))
                })
                .collect::<Result<_>>()?;
            w_used = Some(w);
            plans
        }
    };
    let yv = m.variable(y)?;
    let values: Vec<f64> = (0..yv.card).map(|k| yv.value_of(k)).collect();
    let mut arms = Vec::new();
    for (label, plan) in labels.into_iter().zip(plans) {
        arms.push((label, m.intervene(&plan)?.marginal(&[y])?));
    }
    let e0 = expectation(&arms[0].1, Some(&values))?;
    let value = match arms.get(1) {
        Some((_, t)) => e0 - expectation(t, Some(&values))?,
        None => e0,
    };
    Ok(OracleResult { value, arms, w: w_used })
}

/// Identified answer next to the oracle answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub identified: IdentificationResult,
    pub oracle: Option<OracleResult>,
    /// Largest entrywise gap across all compared distributions.
    pub max_distribution_deviation: Option<f64>,
    pub effect_deviation: Option<f64>,
}

impl Comparison {
    pub fn skipped(&self) -> bool {
        self.oracle.is_none()
    }
}

/// Identifies `q` from the observed part of `m` and checks it against the
/// oracle; skipped when the query is not identified.
pub fn compare_with_oracle(m: &Model, q: &CausalQuery) -> Result<Comparison> {
    let obs = ObservedDistribution::from_model(m);
    let id = identify(&obs, q)?;
    if !id.identified() {
        return Ok(Comparison {
            identified: id,
            oracle: None,
            max_distribution_deviation: None,
            effect_deviation: None,
        });
    }
    let o = oracle(m, q, id.roles.get("W").map(|w| w.as_slice()))?;
    let mut dev: f64 = 0.0;
    for ((_, a), (_, b)) in id.arms.iter().zip(&o.arms) {
        dev = dev.max(a.max_abs_diff(b)?);
    }
    let eff = (id.value.expect("identified results carry a value") - o.value).abs();
    Ok(Comparison {
        identified: id,
        oracle: Some(o),
        max_distribution_deviation: Some(dev),
        effect_deviation: Some(eff),
    })
}

/// The two randomized studies behind experimental identification: in the
/// first X is set to `x` and Z is randomized uniformly, in the second X is
/// set to `x_star` and Z left alone.
pub fn randomized_studies(m: &Model, x: &str, z: &str, xv: usize, xs: usize) -> Result<(Model, Model)> {
    let zc = m.variable(z)?.card;
    let a = m.intervene(&Plan::from([
        (x.to_string(), Regime::Atomic(xv)),
        (z.to_string(), Regime::uniform(zc)),
    ]))?;
    let b = m.intervene(&Plan::from([(x.to_string(), Regime::Atomic(xs))]))?;
    Ok((a, b))
}

/// The ingredients p(y|w,z; s_x, s_z), p(z|w; s_x*) and p(w) read from the
/// two studies.
pub fn study_tables(
    study_xz: &ObservedDistribution,
    study_x: &ObservedDistribution,
    w: &[String],
    z: &str,
    y: &str,
) -> Result<(Table, Table, Table)> {
    let mut wz = w.to_vec();
    wz.push(z.to_string());
    Ok((
        conditional_table(study_xz, y, &wz)?,
        conditional_table(study_x, z, w)?,
        study_x.marginal(w)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::identify::experimental_identify;

    #[test]
    fn idle_sequence_has_zero_deviation() {
        let m = fixtures::g_seq(5);
        let mut q = CausalQuery::new(EffectKind::Seq, "", "Y");
        q.sequence = Some(super::super::Sequence {
            targets: vec!["X".into()],
            regimes: vec![Regime::Idle],
            blocks: None,
        });
        let c = compare_with_oracle(&m, &q).unwrap();
        assert!(c.max_distribution_deviation.unwrap() < 1e-15);
    }

    #[test]
    fn not_identified_is_skipped() {
        let m = fixtures::g_seq(5);
        let mut q = CausalQuery::new(EffectKind::Nde, "X", "Y").with_mediator("Z");
        q.roles.w = Some(vec![]);
        assert!(compare_with_oracle(&m, &q).unwrap().skipped());
    }

    #[test]
    fn two_studies_recombine_to_natural_ingredient() {
        let m = fixtures::fig2(3);
        let w = vec!["W".to_string()];
        let (a, b) = randomized_studies(&m, "X", "Z", 1, 0).unwrap();
        let (py, pz, pw) = study_tables(
            &ObservedDistribution::from_model(&a),
            &ObservedDistribution::from_model(&b),
            &w,
            "Z",
            "Y",
        )
        .unwrap();
        let t = experimental_identify(&py, &pz, &pw).unwrap();
        let mut q = CausalQuery::new(EffectKind::Nde, "X", "Y").with_mediator("Z");
        q.roles.w = Some(w.clone());
        let o = oracle(&m, &q, None).unwrap();
        assert!(t.max_abs_diff(&o.arms[0].1).unwrap() < 1e-12);
    }
}
