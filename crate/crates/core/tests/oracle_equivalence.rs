use regimecalc::fixtures;
use regimecalc::identify::compare_with_oracle;

#[test]
fn identified_answers_match_the_oracle() {
    let mut identified = 0;
    let mut bad = Vec::new();
    for seed in 0..200u64 {
        let m = fixtures::sweep_model(seed);
        for q in fixtures::query_suite(&m) {
            let c = compare_with_oracle(&m, &q).unwrap_or_else(|e| panic!("seed {seed} {q:?}: {e}"));
            if c.skipped() {
                continue;
            }
            identified += 1;
            let d = c.max_distribution_deviation.unwrap().max(c.effect_deviation.unwrap());
            if d >= 1e-9 {
                bad.push(format!(
                    "seed {seed} {:?} {} -> {}: {d}",
                    q.kind, q.treatment, q.response
                ));
            }
        }
    }
    assert!(identified > 5000, "only {identified} identified queries");
    assert!(bad.is_empty(), "{bad:#?}");
}
