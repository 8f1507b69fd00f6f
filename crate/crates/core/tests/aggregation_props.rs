use proptest::prelude::*;
use residue_core::testkit::{check_aggregation_identities, random_reports};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn aggregation_identities_hold(seed in any::<u64>(), count in 0usize..40) {
        let reports = random_reports(seed, count);
        if let Err(e) = check_aggregation_identities(&reports, seed) {
            return Err(TestCaseError::fail(e));
        }
    }
}
