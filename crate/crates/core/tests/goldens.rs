use regimecalc::fixtures;
use regimecalc::identify::{compare_with_oracle, oracle};
use regimecalc::{identify, CausalQuery, EffectKind, ObservedDistribution, Regime, Sequence, Status};

fn v(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn two_step(z_regime: Regime) -> CausalQuery {
    let mut q = CausalQuery::new(EffectKind::Seq, "", "Y");
    q.sequence = Some(Sequence {
        targets: v(&["X", "Z"]),
        regimes: vec![Regime::Atomic(1), z_regime],
        blocks: None,
    });
    q
}

fn nde(w: Option<&[&str]>) -> CausalQuery {
    let mut q = CausalQuery::new(EffectKind::Nde, "X", "Y").with_mediator("Z");
    q.roles.w = w.map(v);
    q
}

#[test]
fn g_seq_sequential_effect_adjusts_for_v() {
    let m = fixtures::g_seq(11);
    let r = identify(&ObservedDistribution::from_model(&m), &two_step(Regime::Atomic(0))).unwrap();
    assert_eq!(r.status, Status::Identified);
    assert_eq!(r.roles["L2"], v(&["V"]));
    assert!(r.roles["L1"].is_empty());
    assert_eq!(r.formula, v(&["p(y|x,z,v)", "p(v|x)"]));
    assert_eq!(r.criterion.as_deref(), Some("simple stability"));
    let c = compare_with_oracle(&m, &two_step(Regime::Atomic(0))).unwrap();
    assert!(c.max_distribution_deviation.unwrap() < 1e-9);
}

#[test]
fn g_seq_natural_effect_without_w_is_not_defined() {
    let m = fixtures::g_seq(11);
    let r = identify(&ObservedDistribution::from_model(&m), &nde(Some(&[]))).unwrap();
    assert_eq!(r.status, Status::NotDefined);
    let w = r.witness.expect("failure carries a witness");
    assert!(w.path[0].starts_with("sigma_"));
    assert!(w.recheck());
}

#[test]
fn g_med_natural_effect_without_w_is_identified() {
    let m = fixtures::g_med(11);
    let r = identify(&ObservedDistribution::from_model(&m), &nde(Some(&[]))).unwrap();
    assert_eq!(r.status, Status::Identified);
    assert_eq!(r.formula, v(&["p(y|z,x)", "p(z|x*)"]));
    let c = compare_with_oracle(&m, &nde(Some(&[]))).unwrap();
    assert!(c.max_distribution_deviation.unwrap() < 1e-9);
}

#[test]
fn fig4_latent_only_unconditional_z_plans() {
    let m = fixtures::fig4(4, true);
    let obs = ObservedDistribution::from_model(&m);

    let fixed = identify(&obs, &two_step(Regime::Atomic(1))).unwrap();
    assert_eq!(fixed.status, Status::Identified);
    assert_eq!(fixed.criterion.as_deref(), Some("graphical-necessary"));
    assert_eq!(fixed.roles["L2"], v(&["V"]));
    let c = compare_with_oracle(&m, &two_step(Regime::Atomic(1))).unwrap();
    assert!(c.max_distribution_deviation.unwrap() < 1e-9);

    let coin = two_step(Regime::Random {
        given: vec![],
        table: vec![vec![0.25, 0.75]],
    });
    assert!(
        compare_with_oracle(&m, &coin)
            .unwrap()
            .max_distribution_deviation
            .unwrap()
            < 1e-9
    );

    let on_v = two_step(Regime::Conditional {
        given: v(&["V"]),
        decision: vec![1, 0],
    });
    let r = identify(&obs, &on_v).unwrap();
    assert_eq!(r.status, Status::NotIdentified);
    assert!(r.witness.unwrap().recheck());

    let r = identify(&obs, &nde(None)).unwrap();
    assert_ne!(r.status, Status::Identified);
    assert!(r.witness.unwrap().recheck());
}

#[test]
fn fig4_observed_natural_effect_formula() {
    let m = fixtures::fig4(4, false);
    let mut q = nde(Some(&["U2"]));
    q.roles.s = Some(v(&["U1"]));
    q.roles.l1 = Some(v(&["U2"]));
    q.roles.l2 = Some(vec![]);
    let r = identify(&ObservedDistribution::from_model(&m), &q).unwrap();
    assert_eq!(r.status, Status::Identified);
    assert_eq!(r.criterion.as_deref(), Some("natural effect conditions"));
    assert_eq!(r.formula, v(&["p(y|u2,z,x)", "p(z|u2,u1,x*)", "p(u1|u2)", "p(u2)"]));
    let c = compare_with_oracle(&m, &q).unwrap();
    assert!(c.max_distribution_deviation.unwrap() < 1e-9);
    assert!(c.effect_deviation.unwrap() < 1e-9);

    // Placing U2 in L2 instead reorders the factorization but not the value.
    q.roles.l1 = Some(vec![]);
    q.roles.l2 = Some(v(&["U2"]));
    let c2 = compare_with_oracle(&m, &q).unwrap();
    assert!((c2.identified.value.unwrap() - r.value.unwrap()).abs() < 1e-12);
}

#[test]
fn decomposition_holds_on_fixtures() {
    for seed in 0..20 {
        for m in [fixtures::g_med(seed), fixtures::fig2(seed), fixtures::fig4(seed, false)] {
            let obs = ObservedDistribution::from_model(&m);
            let n = identify(&obs, &nde(None)).unwrap();
            if !n.identified() {
                continue;
            }
            let i = identify(&obs, &CausalQuery::new(EffectKind::Nie, "X", "Y").with_mediator("Z")).unwrap();
            let a = identify(&obs, &CausalQuery::new(EffectKind::Ace, "X", "Y")).unwrap();
            assert!((n.value.unwrap() + i.value.unwrap() - a.value.unwrap()).abs() < 1e-9);
            assert_eq!(identify(&obs, &nde(None).with_values(1, 1)).unwrap().value, Some(0.0));
            assert_eq!(oracle(&m, &nde(None).with_values(0, 0), None).unwrap().value, 0.0);
        }
    }
}
