mod common;

use proptest::prelude::*;

use minidyn::merge::merge_states;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn merge_and_widen_laws(seed in any::<u64>()) {
        let (states, errors) = common::random_states(4, seed);
        prop_assert!(errors.is_empty(), "{}", errors.join("\n"));
        let failures = common::algebra_failures(&states);
        prop_assert!(failures.is_empty(), "{}", failures.join("\n"));
    }

    #[test]
    fn merge_is_an_upper_bound(seed in any::<u64>()) {
        let (states, _) = common::random_states(2, seed);
        let m = merge_states(&[&states[0], &states[1]]);
        m.validate().unwrap();
        prop_assert!(common::covered_by(&states[0], &m));
        prop_assert!(common::covered_by(&states[1], &m));
    }
}
