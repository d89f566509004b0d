mod support;

use arn_core::planner::{plan, satisfies, Literal, ObjectId};
use proptest::prelude::*;
use support::oracle;

#[test]
fn plan_cost_matches_uniform_cost_enumeration() {
    let cases = oracle::scenarios();
    assert!(cases.len() >= 10);
    for sc in &cases {
        let p = plan(&sc.start, &sc.goal, &sc.map).unwrap_or_else(|e| panic!("{}: {e}", sc.name));
        let best = oracle::optimal_cost(&sc.map, &sc.start, &sc.goal).expect("oracle finds a plan");
        assert_eq!(p.cost(), best, "{}", sc.name);
        // The plan itself is executable and reaches the goal.
        let end = oracle::execute(&sc.map, &sc.start, p.iter())
            .unwrap_or_else(|e| panic!("{}: {e}", sc.name));
        assert!(satisfies(&end, &sc.goal), "{}", sc.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Adding a goal literal never makes the plan cheaper.
    #[test]
    fn monotone_in_goals(case in 1usize..12, extra in 0usize..3) {
        let cases = oracle::scenarios();
        let sc = &cases[case];
        let names: Vec<ObjectId> = sc.start.object_at.keys().cloned().collect();
        let o = &names[extra % names.len()];
        let wider = sc.goal.clone().with(Literal::Located(o.clone()));
        let base = plan(&sc.start, &sc.goal, &sc.map).unwrap().cost();
        let more = plan(&sc.start, &wider, &sc.map).unwrap().cost();
        prop_assert!(more >= base, "{}: {more} < {base}", sc.name);
    }

    /// Every returned plan is executable from its start state.
    #[test]
    fn plans_are_sound(case in 0usize..12) {
        let cases = oracle::scenarios();
        let sc = &cases[case];
        let p = plan(&sc.start, &sc.goal, &sc.map).unwrap();
        let end = oracle::execute(&sc.map, &sc.start, p.iter());
        prop_assert!(end.is_ok(), "{}: {:?}", sc.name, end);
        prop_assert!(satisfies(&end.unwrap(), &sc.goal));
    }
}
