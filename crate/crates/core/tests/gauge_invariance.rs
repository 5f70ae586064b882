//! Simultaneous conjugation leaves every small exotic observable unchanged.

use goldmankit::exotic::{invariance_test, ObservableInstance};
use goldmankit::suite::small_specs;
use rayon::prelude::*;

#[test]
fn every_spec_up_to_four_is_invariant() {
    let specs = small_specs(4).unwrap();
    assert_eq!(specs.len(), 4001);
    let failures: Vec<String> = specs
        .par_iter()
        .enumerate()
        .filter_map(|(k, spec)| {
            let inst = ObservableInstance::sample(spec.clone(), 1000 + k as u64).unwrap();
            let r = invariance_test(&inst, 20, k as u64, 1e-8).unwrap();
            (!r.report.pass).then(|| format!("{spec}: {:.3e}", r.report.max_rel_err))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}
