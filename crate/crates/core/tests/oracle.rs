mod common;

use common::oracle_max_error;
use proptest::prelude::*;
use stance_core::StanceForm;

#[test]
fn matches_oracle_on_small_dense_networks() {
    for n in 1..=5 {
        for form in [StanceForm::Incremental, StanceForm::Anchored] {
            for seed in 0..4 {
                let err = oracle_max_error(n, 100, form, seed * 31 + n as u64);
                assert!(err <= 1e-12, "n={n} form={form} seed={seed}: {err:e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agreement(n in 1usize..=5, anchored in any::<bool>(), seed in any::<u64>()) {
        let form = if anchored { StanceForm::Anchored } else { StanceForm::Incremental };
        let err = oracle_max_error(n, 100, form, seed);
        prop_assert!(err <= 1e-12, "max error {:e}", err);
    }
}
